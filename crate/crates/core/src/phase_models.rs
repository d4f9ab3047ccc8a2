//! Weakly coupled phase models `θ̇_i = ω + Σ_j Γ(θ_i − θ_j)`: coupling
//! functions from averaging, simulation on the torus, order parameter,
//! splay states and the sampled rotating-frame contraction certificate.

use crate::io::Csv;
use crate::kick::{curvature_sign, sample_simplex, KickMode, Verdict};
use crate::numerics::{periodic_quadrature, Rk4};
use crate::oscillators::ScalarFn;
use crate::phase::{gap_norm, wrap_2pi, wrap_pi};
use crate::{Error, Result, TWO_PI};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cell::Cell;
use std::sync::Arc;

/// Where a coupling function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Diffusive,
    Impulsive,
    Analytic,
}

/// 2π-periodic coupling function Γ. At 0 the right limit Γ(0⁺) is used.
#[derive(Clone)]
pub struct CouplingFunction {
    f: ScalarFn,
    pub origin: Origin,
    pub discontinuities: Vec<f64>,
}

impl std::fmt::Debug for CouplingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CouplingFunction")
            .field("origin", &self.origin)
            .field("discontinuities", &self.discontinuities)
            .finish_non_exhaustive()
    }
}

impl CouplingFunction {
    pub fn analytic(f: ScalarFn, discontinuities: Vec<f64>) -> Self {
        Self {
            f,
            origin: Origin::Analytic,
            discontinuities,
        }
    }

    /// Kuramoto coupling `Γ(θ) = −(K/N) sin θ`.
    pub fn kuramoto(k: f64, n: usize) -> Self {
        let c = k / n as f64;
        Self::analytic(Arc::new(move |t: f64| -c * t.sin()), Vec::new())
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        (self.f)(wrap_2pi(theta))
    }

    /// Γ on `[0, 2π]` with 2π read as the left limit, for shape checks.
    pub fn eval_closed(&self, theta: f64) -> f64 {
        (self.f)(theta.clamp(0.0, TWO_PI))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |t| c * f(t)),
            origin: self.origin,
            discontinuities: self.discontinuities.clone(),
        }
    }

    pub fn as_fn(&self) -> ScalarFn {
        self.f.clone()
    }
}

/// Periodic cubic spline through `values` at `2πk/n`.
fn periodic_spline(values: Vec<f64>) -> ScalarFn {
    let n = values.len();
    let h = TWO_PI / n as f64;
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for k in 0..n {
        let (prev, next) = ((k + n - 1) % n, (k + 1) % n);
        a[(k, prev)] += 1.0;
        a[(k, k)] += 4.0;
        a[(k, next)] += 1.0;
        rhs[k] = 6.0 / (h * h) * (values[next] - 2.0 * values[k] + values[prev]);
    }
    let m: Vec<f64> = a
        .lu()
        .solve(&rhs)
        .expect("spline system is diagonally dominant")
        .iter()
        .copied()
        .collect();
    Arc::new(move |theta: f64| {
        let s = theta / h;
        let k = (s.floor() as usize).min(n - 1);
        let k1 = (k + 1) % n;
        let b = (theta - k as f64 * h).clamp(0.0, h);
        let a = h - b;
        m[k] * a.powi(3) / (6.0 * h)
            + m[k1] * b.powi(3) / (6.0 * h)
            + (values[k] - m[k] * h * h / 6.0) * a / h
            + (values[k1] - m[k1] * h * h / 6.0) * b / h
    })
}

/// Grid size of tabulated diffusive coupling functions.
pub const COUPLING_GRID: usize = 256;

/// Diffusive coupling function
/// `Γ(χ) = (εK/ω) ∫₀^{2π} Z(χ+s)(H_j(s) − H_i(χ+s)) ds`,
/// tabulated on a 256-point grid and interpolated by a periodic cubic spline.
///
/// `z_breaks` lists points where Z jumps; the integrand is split there.
/// The prefactor `εK/ω` makes Γ a factor T larger than the period average
/// of the coupling term; see [`time_averaged_coupling_diffusive`].
pub fn averaged_coupling_diffusive(
    z: &dyn Fn(f64) -> f64,
    z_breaks: &[f64],
    h_i: &dyn Fn(f64) -> f64,
    h_j: &dyn Fn(f64) -> f64,
    eps_k: f64,
    omega: f64,
) -> Result<CouplingFunction> {
    let mut values = Vec::with_capacity(COUPLING_GRID);
    for k in 0..COUPLING_GRID {
        let chi = TWO_PI * k as f64 / COUPLING_GRID as f64;
        let breaks: Vec<f64> = z_breaks.iter().map(|b| wrap_2pi(b - chi)).collect();
        let integrand = |s: f64| {
            let phase = wrap_2pi(chi + s);
            z(phase) * (h_j(s) - h_i(phase))
        };
        let v = periodic_quadrature(integrand, 1e-12, &breaks)?;
        values.push(eps_k / omega * v);
    }
    Ok(CouplingFunction {
        f: periodic_spline(values),
        origin: Origin::Diffusive,
        discontinuities: Vec::new(),
    })
}

/// Period average of the diffusive coupling term,
/// `(εK/2π) ∫₀^{2π} Z(χ+s)(H_j(s) − H_i(χ+s)) ds`. This is the drift that
/// tracks the full-state network.
pub fn time_averaged_coupling_diffusive(
    z: &dyn Fn(f64) -> f64,
    z_breaks: &[f64],
    h_i: &dyn Fn(f64) -> f64,
    h_j: &dyn Fn(f64) -> f64,
    eps_k: f64,
    omega: f64,
) -> Result<CouplingFunction> {
    Ok(averaged_coupling_diffusive(z, z_breaks, h_i, h_j, eps_k, omega)?.scaled(omega / TWO_PI))
}

/// Impulsive coupling function `Γ = (εK/T) Z`.
pub fn averaged_coupling_impulsive(z: ScalarFn, discontinuities: Vec<f64>, eps_k: f64, period: f64) -> Result<CouplingFunction> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let c = eps_k / period;
    Ok(CouplingFunction {
        f: Arc::new(move |t| c * z(t)),
        origin: Origin::Impulsive,
        discontinuities,
    })
}

/// Sampled phase trajectory (phases in `[0, 2π)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    n: usize,
    phases: Vec<f64>,
}

impl PhaseTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn oscillators(&self) -> usize {
        self.n
    }

    pub fn phases(&self, k: usize) -> &[f64] {
        &self.phases[k * self.n..(k + 1) * self.n]
    }

    pub fn last_phases(&self) -> &[f64] {
        self.phases(self.len() - 1)
    }

    pub fn to_csv(&self) -> Csv {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n).map(|i| format!("theta_{i}")));
        let mut csv = Csv::new(&header);
        for k in 0..self.len() {
            csv.row(std::iter::once(self.times[k]).chain(self.phases(k).iter().copied()));
        }
        csv
    }

    pub fn order_csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "r", "psi"]);
        for k in 0..self.len() {
            let (r, psi) = order_parameter(self.phases(k));
            csv.row([self.times[k], r, psi]);
        }
        csv
    }
}

fn phase_field<'a>(gamma: &'a CouplingFunction, omega: f64) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    move |_t, th, d| {
        let n = th.len();
        for i in 0..n {
            let mut s = omega;
            for j in 0..n {
                if j != i {
                    s += gamma.eval(th[i] - th[j]);
                }
            }
            d[i] = s;
        }
    }
}

/// Merges oscillators that passed each other during the step, or that
/// would pass within the next one at the current speeds: with a jump of Γ
/// at 0 the approach never slows down, and RK4 stages straddling the jump
/// would otherwise hold the pair a step-length apart.
fn merge_crossings(before: &[f64], after: &mut [f64], speed: &[f64], h: f64) {
    let n = after.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d0 = wrap_pi(before[i] - before[j]);
            let d1 = wrap_pi(after[i] - after[j]);
            let crossed = d0 < 0.0 && d1 >= 0.0 && d1 - d0 < 1.0;
            let closing = d1 < 0.0 && d1 + h * (speed[i] - speed[j]) >= 0.0;
            if crossed || closing {
                after[i] = after[j];
            }
        }
    }
}

/// RK4 on the torus with all-to-all identical coupling; phases are wrapped
/// after every step and every `stride`-th step is kept. When Γ jumps at 0
/// oscillators that cross during a step merge, so that coincident phases
/// keep seeing `Γ(0⁺)` from each other.
pub fn simulate_phase_model(
    gamma: &CouplingFunction,
    omega: f64,
    init: &[f64],
    t_end: f64,
    step: f64,
    stride: usize,
) -> Result<PhaseTrajectory> {
    let n = init.len();
    if n < 2 {
        return Err(Error::InvalidArgument("phase model needs N >= 2".into()));
    }
    if !(step > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("step and t_end must be positive".into()));
    }
    let stride = stride.max(1);
    let steps = ((t_end / step) * (1.0 - 1e-12)).ceil() as usize;
    let jumps_at_zero = gamma.discontinuities.iter().any(|&d| wrap_2pi(d) == 0.0);
    let mut field = phase_field(gamma, omega);
    let mut rk = Rk4::new(n);
    let mut x: Vec<f64> = init.iter().map(|&p| wrap_2pi(p)).collect();
    let mut next = vec![0.0; n];
    let mut speed = vec![0.0; n];
    let mut out = PhaseTrajectory {
        times: vec![0.0],
        n,
        phases: x.clone(),
    };
    let mut t = 0.0;
    for k in 0..steps {
        let t1 = if k + 1 == steps { t_end } else { (k + 1) as f64 * step };
        rk.step(&mut field, t, &x, t1 - t, &mut next);
        if next.iter().any(|v| v.is_nan()) {
            return Err(Error::NaN { t });
        }
        let before = x.clone();
        for (a, b) in x.iter_mut().zip(&next) {
            *a = wrap_2pi(*b);
        }
        if jumps_at_zero {
            field(t1, &x, &mut speed);
            merge_crossings(&before, &mut x, &speed, t1 - t);
        }
        t = t1;
        if (k + 1) % stride == 0 || k + 1 == steps {
            out.times.push(t);
            out.phases.extend_from_slice(&x);
        }
    }
    Ok(out)
}

/// `r e^{iψ} = (1/N) Σ e^{iθ_k}`.
pub fn order_parameter(phases: &[f64]) -> (f64, f64) {
    let n = phases.len() as f64;
    let (s, c) = phases.iter().fold((0.0, 0.0), |(s, c), &t| (s + t.sin(), c + t.cos()));
    let (s, c) = (s / n, c / n);
    (s.hypot(c), wrap_2pi(s.atan2(c)))
}

/// `θ_k = 2πk/N`, `k = 0..N−1`.
pub fn splay_state(n: usize) -> Vec<f64> {
    (0..n).map(|k| TWO_PI * k as f64 / n as f64).collect()
}

/// Kuramoto potential `−(K/2N) Σ_{i,j} cos(θ_i − θ_j)`.
pub fn kuramoto_potential(k: f64, phases: &[f64]) -> f64 {
    let n = phases.len() as f64;
    let mut s = 0.0;
    for a in phases {
        for b in phases {
            s += (a - b).cos();
        }
    }
    -k / (2.0 * n) * s
}

/// Consecutive circular gaps of the sorted phases.
pub fn sorted_gaps(phases: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = phases.iter().map(|&t| wrap_2pi(t)).collect();
    p.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(p[0] + TWO_PI - p[p.len() - 1]);
    gaps
}

/// Rotating-frame vector field `φ̇_i = Γ(φ_i) + Σ_{k≠i} Γ(φ_i − φ_k) − Σ_k Γ(−φ_k)`.
pub fn rotating_frame_field(gamma: &CouplingFunction, phi: &[f64], d: &mut [f64]) {
    let common: f64 = phi.iter().map(|&p| gamma.eval(-p)).sum();
    for i in 0..phi.len() {
        let mut s = gamma.eval(phi[i]);
        for k in 0..phi.len() {
            if k != i {
                s += gamma.eval(phi[i] - phi[k]);
            }
        }
        d[i] = s - common;
    }
}

fn in_cone(phi: &[f64]) -> bool {
    phi.first().is_some_and(|&p| p > 0.0) && phi.last().is_some_and(|&p| p < TWO_PI) && phi.windows(2).all(|w| w[0] < w[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotatingFrameReport {
    pub verdict: Verdict,
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub pairs: usize,
    /// Pairs where a trajectory reached the cone boundary before the
    /// horizon; their ratio is taken at the last step inside the cone.
    pub collided: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// +1 increasing, −1 decreasing, 0 constant.
    pub monotonicity: Option<i8>,
    pub curvature_sign: Option<i8>,
    pub note: String,
}

fn monotonicity(f: &dyn Fn(f64) -> f64) -> Option<i8> {
    let n = 1024;
    let h = TWO_PI / n as f64;
    let (mut up, mut down) = (false, false);
    for k in 1..n - 1 {
        let a = f(k as f64 * h);
        let b = f((k + 1) as f64 * h);
        let tol = 1e-12 * a.abs().max(b.abs()).max(1e-300);
        up |= b > a + tol;
        down |= b < a - tol;
    }
    match (up, down) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        (false, false) => Some(0),
        (true, true) => None,
    }
}

/// Integrates seeded pairs of cone configurations over `horizon` and
/// reports the gap-norm ratio `‖φ_a(T) − φ_b(T)‖ / ‖φ_a(0) − φ_b(0)‖`.
pub fn rotating_frame_certificate(
    gamma: &CouplingFunction,
    n: usize,
    n_pairs: usize,
    seed: u64,
    horizon: f64,
    step: f64,
) -> Result<RotatingFrameReport> {
    if n < 2 || n_pairs == 0 || !(horizon > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidArgument(
            "need n >= 2, n_pairs >= 1 and positive horizon and step".into(),
        ));
    }
    let g = |t: f64| gamma.eval_closed(t);
    let mono = monotonicity(&g);
    let curv = curvature_sign(&g, KickMode::Excitatory, false);
    let mut report = RotatingFrameReport {
        verdict: Verdict::HypothesisNotSatisfied,
        n,
        seed,
        horizon,
        pairs: 0,
        collided: 0,
        min_ratio: f64::NAN,
        max_ratio: f64::NAN,
        mean_ratio: f64::NAN,
        monotonicity: mono,
        curvature_sign: curv,
        note: String::new(),
    };
    if mono.is_none() || curv.is_none() {
        report.note = "coupling function is not monotone with a definite curvature".into();
        return Ok(report);
    }
    let dim = n - 1;
    let steps = ((horizon / step) * (1.0 - 1e-12)).ceil() as usize;
    let h = horizon / steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n_pairs)
        .map(|_| loop {
            let a = sample_simplex(&mut rng, dim);
            let b = sample_simplex(&mut rng, dim);
            if in_cone(&a) && in_cone(&b) {
                break (a, b);
            }
        })
        .collect();
    let run_pair = |(a, b): &(Vec<f64>, Vec<f64>)| -> (f64, bool) {
        let mut rk = Rk4::new(dim);
        // a stage outside the cone means the boundary is reached within the
        // step; Γ jumps there, so the step itself would be meaningless
        let outside = Cell::new(false);
        let mut field = |_t: f64, x: &[f64], d: &mut [f64]| {
            if !in_cone(x) {
                outside.set(true);
            }
            rotating_frame_field(gamma, x, d)
        };
        let (mut xa, mut xb) = (a.clone(), b.clone());
        let (mut na, mut nb) = (vec![0.0; dim], vec![0.0; dim]);
        let base = gap_norm(&a.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
        let mut collided = false;
        for _ in 0..steps {
            rk.step(&mut field, 0.0, &xa, h, &mut na);
            rk.step(&mut field, 0.0, &xb, h, &mut nb);
            if outside.get() || !in_cone(&na) || !in_cone(&nb) {
                collided = true;
                break;
            }
            std::mem::swap(&mut xa, &mut na);
            std::mem::swap(&mut xb, &mut nb);
        }
        let d: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p - q).collect();
        (gap_norm(&d) / base, collided)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(f64, bool)> = {
        use rayon::prelude::*;
        pairs.par_iter().map(run_pair).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, bool)> = pairs.iter().map(run_pair).collect();
    let ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
    report.pairs = ratios.len();
    report.collided = results.iter().filter(|r| r.1).count();
    report.min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report.max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    report.verdict = if (report.max_ratio - 1.0).abs() <= 1e-8 && (report.min_ratio - 1.0).abs() <= 1e-8 {
        Verdict::Neutral
    } else if report.max_ratio < 1.0 {
        Verdict::Contracting
    } else if report.min_ratio > 1.0 {
        Verdict::Expanding
    } else {
        Verdict::Indefinite
    };
    Ok(report)
}

/// Geometric phase of a van der Pol circuit state, `atan2(x, −w)`, which
/// advances at unit speed on the harmonic orbit `x = 2 sin θ`.
pub fn vdp_circuit_phase(x: &[f64]) -> f64 {
    wrap_2pi(x[0].atan2(-x[1]))
}
