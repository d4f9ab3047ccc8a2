//! Numerical laboratory for oscillator synchronization.
//!
//! Two coupling paradigms are covered side by side: continuous diffusive
//! coupling of state-space oscillators and hybrid pulse ("kick") coupling of
//! phase oscillators. The crate is organized by model layer:
//!
//! - [`numerics`]: RK4 integration, event location, quadrature, root finding.
//! - [`oscillators`]: van der Pol and integrate-and-fire models, phase maps.
//! - [`phase_reduction`]: limit cycles, asymptotic phase, PRCs and iPRCs.
//! - [`diffusive`]: Laplacian-coupled networks and incremental certificates.
//! - [`kick`]: event-driven pulse-coupled simulation and firing maps.
//! - [`continuum`]: continuity equation with flux-dependent velocity.
//! - [`phase_models`]: averaged coupling functions, Kuramoto-type dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuum;
pub mod diffusive;
mod error;
pub mod io;
pub mod kick;
pub mod numerics;
pub mod oscillators;
pub mod phase;
pub mod phase_models;
pub mod phase_reduction;

pub use error::{Error, Result};

/// 2π.
pub const TWO_PI: f64 = std::f64::consts::TAU;
