//! Shared numerical kernels: fixed-step RK4 with event location, adaptive
//! Gauss–Kronrod quadrature on the circle, and bracketed root finding.

mod ode;
mod quadrature;
mod roots;

pub use ode::{integrate, integrate_final, integrate_to_event, next_event, rk4_step, Direction, EventRecord, Rk4, Trajectory, EVENT_TOL};
pub use quadrature::{integrate_interval, periodic_quadrature};
pub use roots::find_root;
