//! Concrete oscillator models, in state space and reduced to phase.
//!
//! State-space models implement [`OscillatorModel`] (`ẋ = F(x) + G(x)u`,
//! `y = H(x)`). One-dimensional models additionally reduce exactly to a
//! [`PhaseOscillator`] through a tabulated [`PhaseMap`].

use crate::numerics::{integrate_interval, Direction, Rk4};
use crate::phase::wrap_2pi;
use crate::{Error, Result, TWO_PI};
use std::fmt;
use std::sync::Arc;

/// Shared scalar function handle.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Threshold-and-reset rule of an integrate-and-fire model: when component
/// `component` reaches `threshold` from below it is set to `reset_to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReset {
    pub component: usize,
    pub threshold: f64,
    pub reset_to: f64,
}

/// Open oscillator `ẋ = F(x) + G(x)u`, `y = H(x)`.
pub trait OscillatorModel: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn drift(&self, x: &[f64], dx: &mut [f64]);
    fn input_gain(&self, x: &[f64], g: &mut [f64]);
    fn output(&self, x: &[f64]) -> f64;
    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
    /// Hybrid reset for integrate-and-fire models; smooth models return `None`.
    fn reset(&self) -> Option<ThresholdReset> {
        None
    }
}

/// Van der Pol oscillator in `(x, ẋ)` coordinates with the input entering `ẍ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDerPol {
    pub mu: f64,
}

impl OscillatorModel for VanDerPol {
    fn name(&self) -> &str {
        "vdp"
    }
    fn dim(&self) -> usize {
        2
    }
    fn drift(&self, x: &[f64], dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = self.mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
    }
    fn input_gain(&self, _x: &[f64], g: &mut [f64]) {
        g[0] = 0.0;
        g[1] = 1.0;
    }
    fn output(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("mu", self.mu)]
    }
}

/// Van der Pol circuit in (capacitor voltage, inductor current) coordinates:
/// `ẋ = −w + μ(x − x³/3) + u`, `ẇ = x`, `y = x`.
///
/// This is the form in which a resistor between two circuits is a diffusive
/// coupling `u = −L y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanDerPolCircuit {
    pub mu: f64,
}

impl OscillatorModel for VanDerPolCircuit {
    fn name(&self) -> &str {
        "vdp_circuit"
    }
    fn dim(&self) -> usize {
        2
    }
    fn drift(&self, x: &[f64], dx: &mut [f64]) {
        dx[0] = -x[1] + self.mu * (x[0] - x[0].powi(3) / 3.0);
        dx[1] = x[0];
    }
    fn input_gain(&self, _x: &[f64], g: &mut [f64]) {
        g[0] = 1.0;
        g[1] = 0.0;
    }
    fn output(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("mu", self.mu)]
    }
}

/// Harmonic oscillator with radial contraction towards the unit circle,
/// `ẋ = v + λx(1 − r²)`, `v̇ = −x + λv(1 − r²)`. Period exactly 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOscillator {
    pub rate: f64,
}

impl OscillatorModel for RadialOscillator {
    fn name(&self) -> &str {
        "radial"
    }
    fn dim(&self) -> usize {
        2
    }
    fn drift(&self, x: &[f64], dx: &mut [f64]) {
        let c = self.rate * (1.0 - x[0] * x[0] - x[1] * x[1]);
        dx[0] = x[1] + c * x[0];
        dx[1] = -x[0] + c * x[1];
    }
    fn input_gain(&self, _x: &[f64], g: &mut [f64]) {
        g[0] = 0.0;
        g[1] = 1.0;
    }
    fn output(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("rate", self.rate)]
    }
}

/// Integrate-and-fire model `ẋ = F(x) + u` on `[lo, hi]` with reset `hi → lo`.
#[derive(Clone)]
pub struct IntegrateAndFireModel {
    field: ScalarFn,
    lo: f64,
    hi: f64,
}

impl IntegrateAndFireModel {
    pub fn new(field: ScalarFn, lo: f64, hi: f64) -> Result<Self> {
        check_positive(&*field, lo, hi)?;
        Ok(Self { field, lo, hi })
    }
}

impl fmt::Debug for IntegrateAndFireModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrateAndFireModel")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish_non_exhaustive()
    }
}

impl OscillatorModel for IntegrateAndFireModel {
    fn name(&self) -> &str {
        "integrate_and_fire"
    }
    fn dim(&self) -> usize {
        1
    }
    fn drift(&self, x: &[f64], dx: &mut [f64]) {
        dx[0] = (self.field)(x[0]);
    }
    fn input_gain(&self, _x: &[f64], g: &mut [f64]) {
        g[0] = 1.0;
    }
    fn output(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("x_lo", self.lo), ("x_hi", self.hi)]
    }
    fn reset(&self) -> Option<ThresholdReset> {
        Some(ThresholdReset {
            component: 0,
            threshold: self.hi,
            reset_to: self.lo,
        })
    }
}

/// Van der Pol oscillator with nonlinearity `mu`, state `(x, ẋ)`.
pub fn vdp_full(mu: f64) -> Result<VanDerPol> {
    if mu > 0.0 && mu.is_finite() {
        Ok(VanDerPol { mu })
    } else {
        Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")))
    }
}

/// Leaky integrate-and-fire field `F(x) = s + r x`.
pub fn lif_field(s: f64, r: f64) -> ScalarFn {
    Arc::new(move |x| s + r * x)
}

/// Quadratic integrate-and-fire field `F(x) = s + x²`.
pub fn qif_field(s: f64) -> ScalarFn {
    Arc::new(move |x| s + x * x)
}

/// Default QIF thresholds.
pub const QIF_INTERVAL: (f64, f64) = (-1.0, 1.0);

/// Hyperplane `x[component] = level` crossed in `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub component: usize,
    pub level: f64,
    pub direction: Direction,
}

impl Section {
    pub fn guard(&self, x: &[f64]) -> f64 {
        x[self.component] - self.level
    }
}

/// Stable periodic orbit sampled at uniformly spaced phases.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    pub period: f64,
    pub omega: f64,
    pub section: Section,
    samples: Vec<f64>,
    dim: usize,
    /// Distance between the state reached after one period and the anchor.
    pub closure_error: f64,
}

impl LimitCycle {
    pub fn new(period: f64, section: Section, samples: Vec<f64>, dim: usize, closure_error: f64) -> Self {
        assert!(dim > 0 && !samples.is_empty() && samples.len().is_multiple_of(dim));
        Self {
            period,
            omega: TWO_PI / period,
            section,
            samples,
            dim,
            closure_error,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-phase anchor.
    pub fn anchor(&self) -> &[f64] {
        self.sample(0)
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample_phase(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.len() as f64
    }

    /// Euclidean distance from `x` to the nearest sample, and that sample's index.
    pub fn nearest_sample(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, s) in self.samples.chunks_exact(self.dim).enumerate() {
            let d: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Distance from `x` to the polygon through the samples.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let n = self.len();
        let (i, _) = self.nearest_sample(x);
        let mut best = f64::INFINITY;
        for j in [(i + n - 1) % n, i] {
            let a = self.sample(j);
            let b = self.sample((j + 1) % n);
            let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
            let len2: f64 = ab.iter().map(|v| v * v).sum();
            let t = if len2 > 0.0 {
                (ab.iter().zip(x.iter().zip(a)).map(|(d, (p, q))| d * (p - q)).sum::<f64>() / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d: f64 = (0..self.dim)
                .map(|k| {
                    let v = x[k] - (a[k] + t * ab[k]);
                    v * v
                })
                .sum();
            best = best.min(d);
        }
        best.sqrt()
    }
}

fn check_positive(field: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<()> {
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("empty state interval [{lo}, {hi}]")));
    }
    const PROBES: usize = 4096;
    for k in 0..=PROBES {
        let x = lo + (hi - lo) * k as f64 / PROBES as f64;
        let v = field(x);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Positivity { x, value: v });
        }
    }
    Ok(())
}

/// Monotone bijection between a 1-D state interval and `[0, 2π]`, with
/// `dΘ/dx = ω·w(x)` where `w` is the reciprocal speed.
///
/// Θ is tabulated by quadrature and interpolated by a monotone cubic
/// Hermite spline using the exact node slopes; Θ⁻¹ inverts that spline
/// segment-wise, so the round trip is exact to rounding.
#[derive(Clone)]
pub struct PhaseMap {
    lo: f64,
    hi: f64,
    period: f64,
    xs: Vec<f64>,
    thetas: Vec<f64>,
    slopes: Vec<f64>,
    gain: Option<ScalarFn>,
}

impl fmt::Debug for PhaseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseMap")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("period", &self.period)
            .field("nodes", &self.xs.len())
            .finish_non_exhaustive()
    }
}

const MIN_NODES: usize = 1024;
const MAX_NODES: usize = 1 << 16;
const TABLE_TOL: f64 = 1e-10;

impl PhaseMap {
    /// Builds the map from the reciprocal speed `w = 1/F` on `[lo, hi]`.
    ///
    /// `gain` is the input direction `G(x)`; `None` means `G ≡ 1`.
    pub fn from_reciprocal_speed(w: &dyn Fn(f64) -> f64, lo: f64, hi: f64, gain: Option<ScalarFn>) -> Result<Self> {
        let mut n = MIN_NODES;
        loop {
            let h = (hi - lo) / n as f64;
            let xs: Vec<f64> = (0..=n).map(|k| if k == n { hi } else { lo + k as f64 * h }).collect();
            let mut cum = vec![0.0; n + 1];
            for k in 0..n {
                cum[k + 1] = cum[k] + integrate_interval(w, xs[k], xs[k + 1], 1e-15)?;
            }
            let period = cum[n];
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::InvalidArgument(format!("period {period} is not positive")));
            }
            let scale = TWO_PI / period;
            let mut thetas: Vec<f64> = cum.iter().map(|c| c * scale).collect();
            thetas[0] = 0.0;
            thetas[n] = TWO_PI;
            let mut slopes: Vec<f64> = xs.iter().map(|&x| w(x) * scale).collect();
            limit_slopes(&xs, &thetas, &mut slopes);
            let map = Self {
                lo,
                hi,
                period,
                xs,
                thetas,
                slopes,
                gain: gain.clone(),
            };
            // refine until the spline matches direct quadrature at the midpoints
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let mid = 0.5 * (map.xs[k] + map.xs[k + 1]);
                let exact = (cum[k] + integrate_interval(w, map.xs[k], mid, 1e-15)?) * scale;
                worst = worst.max((map.phase(mid) - exact).abs());
            }
            if worst <= TABLE_TOL || n >= MAX_NODES {
                return Ok(map);
            }
            n *= 2;
        }
    }

    pub fn lower(&self) -> f64 {
        self.lo
    }

    pub fn upper(&self) -> f64 {
        self.hi
    }

    /// Natural period `∫ w`.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        TWO_PI / self.period
    }

    pub fn nodes(&self) -> usize {
        self.xs.len()
    }

    /// True when impulses are plain shifts `x ← x + ε`.
    pub fn has_unit_gain(&self) -> bool {
        self.gain.is_none()
    }

    fn segment_of_state(&self, x: f64) -> usize {
        let n = self.xs.len() - 1;
        let h = (self.hi - self.lo) / n as f64;
        (((x - self.lo) / h).floor() as usize).min(n - 1)
    }

    /// Θ(x), clamped to `[0, 2π]` outside the interval.
    pub fn phase(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return TWO_PI;
        }
        let k = self.segment_of_state(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        hermite(t, self.thetas[k], self.thetas[k + 1], h * self.slopes[k], h * self.slopes[k + 1])
    }

    /// dΘ/dx of the interpolant.
    pub fn phase_slope(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi);
        let k = self.segment_of_state(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        hermite_dt(t, self.thetas[k], self.thetas[k + 1], h * self.slopes[k], h * self.slopes[k + 1]) / h
    }

    /// Θ⁻¹(θ) for θ ∈ `[0, 2π]` (clamped).
    pub fn state(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return self.lo;
        }
        if theta >= TWO_PI {
            return self.hi;
        }
        let k = self.thetas.partition_point(|&v| v <= theta).clamp(1, self.thetas.len() - 1) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let (p0, p1) = (self.thetas[k], self.thetas[k + 1]);
        let (m0, m1) = (h * self.slopes[k], h * self.slopes[k + 1]);
        let (mut a, mut b) = (0.0, 1.0);
        let mut t = if p1 > p0 { (theta - p0) / (p1 - p0) } else { 0.5 };
        for _ in 0..60 {
            let f = hermite(t, p0, p1, m0, m1) - theta;
            if f.abs() <= 4.0 * f64::EPSILON * TWO_PI {
                break;
            }
            if f < 0.0 {
                a = t;
            } else {
                b = t;
            }
            let d = hermite_dt(t, p0, p1, m0, m1);
            let newton = t - f / d;
            t = if d > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if b - a <= f64::EPSILON {
                break;
            }
        }
        self.xs[k] + t * h
    }

    /// Endpoint of an impulse of amplitude `eps` applied at `x`, i.e. the
    /// flow of `dx/dσ = G(x)` for `σ ∈ [0, eps]`. Leaving the interval
    /// returns the boundary reached.
    pub fn impulse_target(&self, x: f64, eps: f64) -> f64 {
        let Some(gain) = &self.gain else {
            return (x + eps).clamp(self.lo, self.hi);
        };
        const STEPS: usize = 64;
        let h = eps / STEPS as f64;
        let (lo, hi) = (self.lo, self.hi);
        let mut rk = Rk4::new(1);
        let mut field = |_t: f64, s: &[f64], ds: &mut [f64]| {
            let v = s[0];
            ds[0] = if v > lo && v < hi { gain(v) } else { 0.0 };
        };
        let mut state = [x];
        let mut out = [0.0];
        for _ in 0..STEPS {
            rk.step(&mut field, 0.0, &state, h, &mut out);
            if !out[0].is_finite() || out[0] >= hi {
                return hi;
            }
            if out[0] <= lo {
                return lo;
            }
            state = out;
        }
        state[0]
    }
}

fn hermite(t: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
}

fn hermite_dt(t: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    (6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1
}

/// Fritsch–Carlson limiter: keeps every Hermite segment monotone.
fn limit_slopes(xs: &[f64], ys: &[f64], slopes: &mut [f64]) {
    for k in 0..xs.len() - 1 {
        let delta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if delta <= 0.0 {
            slopes[k] = 0.0;
            slopes[k + 1] = 0.0;
            continue;
        }
        let a = slopes[k] / delta;
        let b = slopes[k + 1] / delta;
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            slopes[k] = tau * a * delta;
            slopes[k + 1] = tau * b * delta;
        }
    }
}

/// Reduced phase oscillator: frequency, iPRC and optional exact phase map.
#[derive(Clone)]
pub struct PhaseOscillator {
    omega: f64,
    iprc: ScalarFn,
    discontinuities: Vec<f64>,
    phase_map: Option<PhaseMap>,
}

impl fmt::Debug for PhaseOscillator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseOscillator")
            .field("omega", &self.omega)
            .field("discontinuities", &self.discontinuities)
            .field("phase_map", &self.phase_map)
            .finish_non_exhaustive()
    }
}

impl PhaseOscillator {
    /// Phase oscillator from an analytic iPRC.
    pub fn new(omega: f64, iprc: ScalarFn, discontinuities: Vec<f64>) -> Self {
        Self {
            omega,
            iprc,
            discontinuities,
            phase_map: None,
        }
    }

    /// Exact reduction of a scalar model with reciprocal speed `w = 1/F` and
    /// per-unit-input phase response `response(x) = w(x)·G(x)` (so that
    /// `Z(θ) = ω·response(Θ⁻¹(θ))`).
    pub fn from_scalar_model(w: &dyn Fn(f64) -> f64, response: ScalarFn, gain: Option<ScalarFn>, lo: f64, hi: f64) -> Result<Self> {
        let map = PhaseMap::from_reciprocal_speed(w, lo, hi, gain)?;
        let omega = map.omega();
        let discontinuities = if (response(lo) - response(hi)).abs() > 1e-12 * response(lo).abs().max(1.0) {
            vec![0.0]
        } else {
            Vec::new()
        };
        let lookup = map.clone();
        let iprc: ScalarFn = Arc::new(move |theta| omega * response(lookup.state(theta)));
        Ok(Self {
            omega,
            iprc,
            discontinuities,
            phase_map: Some(map),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        TWO_PI / self.omega
    }

    /// Z(θ). Arguments in `[0, 2π]` are used as given (`2π` is the left
    /// limit); others are wrapped onto `[0, 2π)`.
    pub fn iprc(&self, theta: f64) -> f64 {
        let theta = if (0.0..=TWO_PI).contains(&theta) { theta } else { wrap_2pi(theta) };
        (self.iprc)(theta)
    }

    pub fn iprc_fn(&self) -> ScalarFn {
        self.iprc.clone()
    }

    /// Phases where Z may jump (0 for monotone responses).
    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn phase_map(&self) -> Option<&PhaseMap> {
        self.phase_map.as_ref()
    }
}

/// Quasi-harmonic phase reduction of the van der Pol oscillator.
///
/// The angular coordinate obeys `φ̇ ≈ 1 − μ(1 − 4 sin²φ) sin φ cos φ` on the
/// radius-2 circle; Θ(φ) rescales it to uniform phase and
/// `Z(θ) = −ω sin φ / (2 φ̇(φ))`.
pub fn vdp_quasiharmonic_phase(mu: f64) -> Result<PhaseOscillator> {
    if !(mu > 0.0 && mu <= 0.2) {
        return Err(Error::OutOfRegime(format!(
            "quasi-harmonic reduction needs 0 < mu <= 0.2, got {mu}"
        )));
    }
    let angular_speed = move |phi: f64| 1.0 - mu * (1.0 - 4.0 * phi.sin().powi(2)) * phi.sin() * phi.cos();
    let response: ScalarFn = Arc::new(move |phi: f64| -0.5 * phi.sin() / angular_speed(phi));
    let gain: ScalarFn = Arc::new(|phi: f64| -0.5 * phi.sin());
    PhaseOscillator::from_scalar_model(&|phi| 1.0 / angular_speed(phi), response, Some(gain), 0.0, TWO_PI)
}

/// Relaxation limit of the van der Pol oscillator: `x′ = x/(1 − x²)` on the
/// left branch `[−2, −1]` (slow time), input gain `1/(x² − 1)`,
/// `Z_R(θ) = −ω/x`.
pub fn vdp_relaxation_phase() -> Result<PhaseOscillator> {
    let response: ScalarFn = Arc::new(|x: f64| -1.0 / x);
    let gain: ScalarFn = Arc::new(|x: f64| 1.0 / (x * x - 1.0));
    PhaseOscillator::from_scalar_model(&|x| (1.0 - x * x) / x, response, Some(gain), -2.0, -1.0)
}

/// Phase reduction of `ẋ = F(x) + u` between thresholds `lo` and `hi`:
/// `Z(θ) = ω / F(Θ⁻¹(θ))`.
pub fn integrate_and_fire(field: ScalarFn, lo: f64, hi: f64) -> Result<PhaseOscillator> {
    check_positive(&*field, lo, hi)?;
    let f = field.clone();
    let response: ScalarFn = Arc::new(move |x| 1.0 / f(x));
    PhaseOscillator::from_scalar_model(&|x| 1.0 / field(x), response, None, lo, hi)
}
