//! Numerical phase reduction of state-space models: limit cycles by
//! Poincaré return, asymptotic phase by section timing, finite and
//! infinitesimal PRCs, and the integrate-and-fire PRC-from-iPRC integral.

use crate::io::Csv;
use crate::numerics::{integrate, integrate_final, integrate_interval, next_event, Direction};
use crate::oscillators::{LimitCycle, OscillatorModel, PhaseOscillator, ScalarFn, Section};
use crate::phase::{wrap_2pi, wrap_pi};
use crate::{Error, Result, TWO_PI};
use std::sync::Arc;

/// Samples per limit-cycle table.
pub const CYCLE_SAMPLES: usize = 1024;

/// Integration and convergence settings shared by the reduction routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions {
    pub step: f64,
    /// Return-point displacement (limit cycle) and phase increment
    /// (asymptotic phase) at which iteration stops.
    pub tol: f64,
    pub max_returns: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            tol: 1e-9,
            max_returns: 20_000,
        }
    }
}

fn free_field(model: &dyn OscillatorModel) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |_t, x, dx| model.drift(x, dx)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Geometric extrapolation of a displacement sequence: with successive
/// displacements `d_prev`, `d`, returns `d/(1 − λ)` where `λ` is their ratio
/// projected on `d_prev`, or `None` if the ratio is not in `(0, 1)`.
fn aitken_jump(d_prev: &[f64], d: &[f64]) -> Option<(f64, Vec<f64>)> {
    let nn: f64 = d_prev.iter().map(|v| v * v).sum();
    if nn == 0.0 {
        return None;
    }
    let lambda = d.iter().zip(d_prev).map(|(a, b)| a * b).sum::<f64>() / nn;
    if lambda > 0.0 && lambda < 0.999_9 {
        Some((lambda, d.iter().map(|v| v / (1.0 - lambda)).collect()))
    } else {
        None
    }
}

/// Stable periodic orbit through `section`, found by Poincaré return
/// iteration from `guess`, with the crossing point as zero-phase anchor.
///
/// Slowly contracting orbits are accelerated by extrapolating the return
/// sequence once its contraction ratio has settled. Integrate-and-fire
/// models (with a reset) use the reset state as anchor and the threshold
/// hitting time as period.
pub fn find_limit_cycle(model: &dyn OscillatorModel, guess: &[f64], section: Section, opts: &ReductionOptions) -> Result<LimitCycle> {
    if guess.len() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "guess has length {}, model dimension is {}",
            guess.len(),
            model.dim()
        )));
    }
    if let Some(reset) = model.reset() {
        return reset_cycle(model, reset.reset_to, reset.threshold, reset.component, opts);
    }
    let guard = |x: &[f64]| section.guard(x);
    let t_window = 1e3;
    let (_, first) = next_event(free_field(model), guess, 0.0, guard, section.direction, t_window, opts.step)
        .map_err(|_| Error::Basin { returns: 0 })?;
    let mut x = first;
    x[section.component] = section.level;
    let mut prev_disp: Option<(Vec<f64>, f64)> = None;
    let mut last_lambda = f64::NAN;
    let mut period = f64::NAN;
    for ret in 1..=opts.max_returns {
        let (t, mut y) = next_event(free_field(model), &x, 0.0, guard, section.direction, t_window, opts.step)
            .map_err(|_| Error::Basin { returns: ret })?;
        y[section.component] = section.level;
        let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let disp = distance(&y, &x);
        period = t;
        if disp <= opts.tol {
            x = y;
            return Ok(tabulate(model, &x, period, section, opts));
        }
        let mut next = y;
        if let Some((dp, _)) = &prev_disp {
            if let Some((lambda, jump)) = aitken_jump(dp, &d) {
                if (lambda - last_lambda).abs() <= 1e-3 * lambda && disp < 1e-2 {
                    for (v, j) in next.iter_mut().zip(&jump) {
                        *v += j;
                    }
                    next[section.component] = section.level;
                    last_lambda = f64::NAN;
                    prev_disp = None;
                    x = next;
                    continue;
                }
                last_lambda = lambda;
            }
        }
        prev_disp = Some((d, disp));
        x = next;
    }
    let _ = period;
    Err(Error::Basin { returns: opts.max_returns })
}

fn samples_along(model: &dyn OscillatorModel, anchor: &[f64], period: f64, opts: &ReductionOptions) -> (Vec<f64>, Vec<f64>) {
    let per_sample = ((period / CYCLE_SAMPLES as f64) / opts.step).ceil().max(1.0) as usize;
    let step = period / (CYCLE_SAMPLES * per_sample) as f64;
    let traj = integrate(free_field(model), anchor, (0.0, period), step).expect("limit cycle integration is finite");
    let mut samples = Vec::with_capacity(CYCLE_SAMPLES * anchor.len());
    for i in 0..CYCLE_SAMPLES {
        samples.extend_from_slice(traj.state(i * per_sample));
    }
    (samples, traj.last_state().to_vec())
}

fn tabulate(model: &dyn OscillatorModel, anchor: &[f64], period: f64, section: Section, opts: &ReductionOptions) -> LimitCycle {
    let (samples, end) = samples_along(model, anchor, period, opts);
    let closure = distance(&end, anchor);
    LimitCycle::new(period, section, samples, anchor.len(), closure)
}

fn reset_cycle(model: &dyn OscillatorModel, lo: f64, hi: f64, component: usize, opts: &ReductionOptions) -> Result<LimitCycle> {
    let section = Section {
        component,
        level: hi,
        direction: Direction::Rising,
    };
    let (period, _) = next_event(
        free_field(model),
        &[lo],
        0.0,
        |x: &[f64]| x[0] - hi,
        Direction::Rising,
        1e6,
        opts.step,
    )?;
    let (samples, _) = samples_along(model, &[lo], period, opts);
    Ok(LimitCycle::new(period, section, samples, 1, 0.0))
}

/// Unwrapped asymptotic phase: for smooth models a real number whose value
/// mod 2π is the phase; for reset models `2π − ω·(time to threshold)`,
/// which is 2π at or beyond the threshold and may be negative below reset.
fn raw_phase(model: &dyn OscillatorModel, cycle: &LimitCycle, point: &[f64], opts: &ReductionOptions) -> Result<f64> {
    let omega = cycle.omega;
    if let Some(reset) = model.reset() {
        if point[reset.component] >= reset.threshold {
            return Ok(TWO_PI);
        }
        let t_max = 100.0 * cycle.period;
        let (t, _) = next_event(
            free_field(model),
            point,
            0.0,
            |x: &[f64]| x[reset.component] - reset.threshold,
            Direction::Rising,
            t_max,
            opts.step,
        )
        .map_err(|e| Error::NotInBasin(e.to_string()))?;
        return Ok(TWO_PI - omega * t);
    }
    let section = cycle.section;
    let guard = |x: &[f64]| section.guard(x);
    let window = 3.0 * cycle.period;
    let mut x = point.to_vec();
    let mut t = 0.0;
    let mut thetas: Vec<f64> = Vec::new();
    let mut aitken: Vec<f64> = Vec::new();
    let mut best_dist = f64::INFINITY;
    let mut stalled = 0usize;
    for m in 1..=opts.max_returns {
        let (te, mut y) = next_event(free_field(model), &x, t, guard, section.direction, t + window, opts.step)
            .map_err(|e| Error::NotInBasin(format!("{e} after {} returns", m - 1)))?;
        y[section.component] = section.level;
        let theta = TWO_PI * m as f64 - omega * te;
        let dist = distance(&y, cycle.anchor());
        if dist < best_dist * (1.0 - 1e-12) || dist <= 1e-9 {
            best_dist = best_dist.min(dist);
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 50 {
                return Err(Error::NotInBasin(format!("section distance stopped decreasing at {best_dist:.3e}")));
            }
        }
        thetas.push(theta);
        let k = thetas.len();
        if k >= 2 && (thetas[k - 1] - thetas[k - 2]).abs() <= opts.tol {
            return Ok(theta);
        }
        if k >= 3 {
            let d1 = thetas[k - 1] - thetas[k - 2];
            let d0 = thetas[k - 2] - thetas[k - 3];
            let denom = d1 - d0;
            let ratio = d1 / d0;
            if denom != 0.0 && ratio.abs() < 0.999_9 && ratio.is_finite() {
                let a = thetas[k - 1] - d1 * d1 / denom;
                if let Some(&prev) = aitken.last() {
                    if (a - prev).abs() <= opts.tol {
                        return Ok(a);
                    }
                }
                aitken.push(a);
            } else {
                aitken.clear();
            }
        }
        x = y;
        t = te;
    }
    Err(Error::NotInBasin(format!(
        "phase did not settle after {} returns",
        opts.max_returns
    )))
}

/// Asymptotic phase of `point` in `[0, 2π)`.
///
/// The trajectory from `point` is followed through successive crossings of
/// the anchor section; the m-th crossing at time `t_m` gives the estimate
/// `2πm − ω t_m`, which converges geometrically to the phase, and is
/// accelerated by Aitken extrapolation.
pub fn asymptotic_phase(model: &dyn OscillatorModel, cycle: &LimitCycle, point: &[f64], opts: &ReductionOptions) -> Result<f64> {
    raw_phase(model, cycle, point, opts).map(wrap_2pi)
}

/// On-orbit state `x^γ(θ/ω)`, integrated from the anchor.
pub fn orbit_state(model: &dyn OscillatorModel, cycle: &LimitCycle, theta: f64, opts: &ReductionOptions) -> Vec<f64> {
    let t = wrap_2pi(theta) / cycle.omega;
    integrate_final(free_field(model), cycle.anchor(), (0.0, t), opts.step).expect("orbit integration is finite")
}

/// Sampled PRC on a uniform half-open grid of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrcTable {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl PrcTable {
    fn from_samples(n: usize, samples: Vec<Option<f64>>) -> Self {
        let thetas = uniform_grid(n);
        let valid = samples.iter().map(Option::is_some).collect();
        let values = samples.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Self { thetas, values, valid }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    /// `max |value − f(θ)|` over valid samples.
    pub fn sup_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter_valid().map(|(t, v)| (v - f(t)).abs()).fold(0.0, f64::max)
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.thetas
            .iter()
            .zip(&self.values)
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|((&t, &v), _)| (t, v))
    }

    pub fn to_csv(&self) -> Csv {
        let mut csv = Csv::new(&["theta", "value", "valid"]);
        for i in 0..self.len() {
            csv.row([self.thetas[i].into(), self.values[i].into(), crate::io::Cell::Bool(self.valid[i])]);
        }
        csv
    }
}

/// `n` phases `2πk/n`, `k = 0..n−1`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TWO_PI * k as f64 / n as f64).collect()
}

fn map_grid<T: Send>(n: usize, f: impl Fn(f64) -> T + Sync + Send) -> Vec<T> {
    let grid = uniform_grid(n);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        grid.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.into_iter().map(f).collect()
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("PRC grid needs n >= 16, got {n}")));
    }
    Ok(())
}

fn kicked(model: &dyn OscillatorModel, x: &[f64], eps: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    model.input_gain(x, &mut g);
    x.iter().zip(&g).map(|(a, b)| a + eps * b).collect()
}

fn phase_shift(model: &dyn OscillatorModel, before: f64, after: f64) -> f64 {
    if model.reset().is_some() {
        after - before
    } else {
        wrap_pi(after - before)
    }
}

/// Finite PRC `Z_ε(θ)`: the impulse is the state jump `x ← x + εG(x)` at the
/// orbit point of phase θ. Smooth models wrap the shift to `(−π, π]`;
/// reset models report it unwrapped (`2π − θ` when the jump crosses the
/// threshold).
pub fn finite_prc_numeric(
    model: &dyn OscillatorModel,
    cycle: &LimitCycle,
    eps: f64,
    n: usize,
    opts: &ReductionOptions,
) -> Result<PrcTable> {
    check_grid(n)?;
    let samples = map_grid(n, |theta| {
        if eps == 0.0 {
            return Some(0.0);
        }
        let x = orbit_state(model, cycle, theta, opts);
        let after = raw_phase(model, cycle, &kicked(model, &x, eps), opts).ok()?;
        Some(phase_shift(model, theta, after))
    });
    Ok(PrcTable::from_samples(n, samples))
}

const RICHARDSON_EPS0: f64 = 1e-3;
const RICHARDSON_AGREE: f64 = 1e-4;
const RICHARDSON_HALVINGS: usize = 8;

fn directional_derivative(model: &dyn OscillatorModel, cycle: &LimitCycle, x: &[f64], eps: f64, opts: &ReductionOptions) -> Result<f64> {
    let plus = raw_phase(model, cycle, &kicked(model, x, eps), opts)?;
    let minus = raw_phase(model, cycle, &kicked(model, x, -eps), opts)?;
    Ok(phase_shift(model, minus, plus) / (2.0 * eps))
}

/// iPRC `Z(θ)` as the central difference of the asymptotic phase along G,
/// with the step halved until consecutive estimates agree, then
/// Richardson-extrapolated.
pub fn iprc_numeric(model: &dyn OscillatorModel, cycle: &LimitCycle, n: usize, opts: &ReductionOptions) -> Result<PrcTable> {
    check_grid(n)?;
    let samples = map_grid(n, |theta| iprc_at(model, cycle, theta, opts).ok());
    Ok(PrcTable::from_samples(n, samples))
}

/// Single-phase version of [`iprc_numeric`].
pub fn iprc_at(model: &dyn OscillatorModel, cycle: &LimitCycle, theta: f64, opts: &ReductionOptions) -> Result<f64> {
    let x = orbit_state(model, cycle, theta, opts);
    let mut eps = RICHARDSON_EPS0;
    let mut coarse = directional_derivative(model, cycle, &x, eps, opts)?;
    for _ in 0..RICHARDSON_HALVINGS {
        eps *= 0.5;
        let fine = directional_derivative(model, cycle, &x, eps, opts)?;
        if (fine - coarse).abs() <= RICHARDSON_AGREE {
            return Ok((4.0 * fine - coarse) / 3.0);
        }
        coarse = fine;
    }
    Err(Error::Sensitivity { theta })
}

/// Closed-form finite PRC of a 1-D model, `Z_ε(θ) = Θ(x⁺) − θ`, where `x⁺`
/// is the impulse endpoint from `x = Θ⁻¹(θ)`. Excitatory impulses that reach
/// the threshold are absorbed (`2π − θ`); inhibitory ones are clamped at the
/// lower threshold (`−θ`).
pub fn finite_prc_if(osc: &PhaseOscillator, eps: f64) -> Result<ScalarFn> {
    let map = osc
        .phase_map()
        .ok_or_else(|| Error::InvalidArgument("oscillator has no phase map".into()))?
        .clone();
    Ok(Arc::new(move |theta: f64| {
        if eps == 0.0 {
            return 0.0;
        }
        let theta = theta.clamp(0.0, TWO_PI);
        let x = map.state(theta);
        map.phase(map.impulse_target(x, eps)) - theta
    }))
}

/// Tabulated finite PRC of a 1-D model from its iPRC,
/// `Z_ε(θ) = ∫_x^{x+ε} Z(Θ(ξ)) dξ` with `x = Θ⁻¹(θ)`, capped at `2π − θ`.
///
/// For models with non-unit input gain the integral is taken in the
/// coordinate in which the impulse is a constant shift, which is the same as
/// evaluating Θ at the impulse endpoint.
pub fn prc_from_iprc_if(osc: &PhaseOscillator, eps: f64, n: usize) -> Result<PrcTable> {
    check_grid(n)?;
    let map = osc
        .phase_map()
        .ok_or_else(|| Error::InvalidArgument("oscillator has no phase map".into()))?;
    let exact = finite_prc_if(osc, eps)?;
    let unit_gain = map.has_unit_gain();
    let mut samples = Vec::with_capacity(n);
    for theta in uniform_grid(n) {
        if eps == 0.0 {
            samples.push(Some(0.0));
            continue;
        }
        if !unit_gain {
            samples.push(Some(exact(theta)));
            continue;
        }
        let x = map.state(theta);
        let end = x + eps;
        let value = if end >= map.upper() {
            TWO_PI - theta
        } else if end <= map.lower() {
            -theta
        } else {
            integrate_interval(|xi| osc.iprc(map.phase(xi)), x, end, 1e-13)?
        };
        samples.push(Some(value.min(TWO_PI - theta)));
    }
    Ok(PrcTable::from_samples(n, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillators::{integrate_and_fire, lif_field, vdp_full, IntegrateAndFireModel, RadialOscillator};
    use crate::phase::circular_distance;
    use std::f64::consts::{LN_2, PI};

    fn vdp_section() -> Section {
        Section {
            component: 0,
            level: 0.0,
            direction: Direction::Rising,
        }
    }

    #[test]
    fn radial_cycle_has_period_two_pi() {
        let model = RadialOscillator { rate: 1.0 };
        let cycle = find_limit_cycle(&model, &[0.0, 0.5], vdp_section(), &ReductionOptions::default()).unwrap();
        assert!((cycle.period - TWO_PI).abs() < 1e-6);
        assert!(cycle.closure_error < 1e-8);
        assert_eq!(cycle.len(), CYCLE_SAMPLES);
    }

    #[test]
    fn vdp_period_near_two_pi() {
        let model = vdp_full(0.1).unwrap();
        let cycle = find_limit_cycle(&model, &[0.1, 0.0], vdp_section(), &ReductionOptions::default()).unwrap();
        assert!((cycle.period - TWO_PI).abs() < 2e-2);
        let anchor = cycle.anchor();
        assert!(anchor[0].abs() < 1e-9 && anchor[1] > 1.9);
    }

    #[test]
    fn on_orbit_phase_identity() {
        let model = vdp_full(0.1).unwrap();
        let opts = ReductionOptions::default();
        let cycle = find_limit_cycle(&model, &[2.0, 0.0], vdp_section(), &opts).unwrap();
        for theta in [0.0, PI / 2.0, PI] {
            let x = orbit_state(&model, &cycle, theta, &opts);
            let phase = asymptotic_phase(&model, &cycle, &x, &opts).unwrap();
            assert!(circular_distance(phase, theta) < 1e-6, "{theta} -> {phase}");
        }
    }

    #[test]
    fn lif_numeric_prcs_match_closed_forms() {
        let model = IntegrateAndFireModel::new(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        let opts = ReductionOptions::default();
        let cycle = find_limit_cycle(&model, &[0.0], vdp_section(), &opts).unwrap();
        assert!((cycle.period - LN_2).abs() < 1e-9);
        let w = cycle.omega;
        let iprc = iprc_numeric(&model, &cycle, 32, &opts).unwrap();
        assert!(iprc.all_valid());
        assert!(iprc.sup_distance(|t| 0.5 * w * (t / w).exp()) < 1e-4);

        let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        let reference = prc_from_iprc_if(&osc, 0.1, 32).unwrap();
        let numeric = finite_prc_numeric(&model, &cycle, 0.1, 32, &opts).unwrap();
        for i in 0..32 {
            assert!((numeric.values[i] - reference.values[i]).abs() < 1e-6, "sample {i}");
        }
    }

    #[test]
    fn zero_impulse_gives_zero_prc() {
        let model = vdp_full(0.5).unwrap();
        let opts = ReductionOptions::default();
        let cycle = find_limit_cycle(&model, &[2.0, 0.0], vdp_section(), &opts).unwrap();
        let prc = finite_prc_numeric(&model, &cycle, 0.0, 16, &opts).unwrap();
        assert!(prc.values.iter().all(|&v| v == 0.0));
        let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        assert!(prc_from_iprc_if(&osc, 0.0, 16).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lif_prc_at_zero_and_absorption() {
        let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        let w = osc.omega();
        let table = prc_from_iprc_if(&osc, 0.1, 64).unwrap();
        assert!((table.values[0] - w * (2.0f64 / 1.9).ln()).abs() < 1e-9);
        let map = osc.phase_map().unwrap();
        let theta = map.phase(0.95);
        let z = finite_prc_if(&osc, 0.1).unwrap();
        assert!((z(theta) - (TWO_PI - theta)).abs() < 1e-12);
    }

    #[test]
    fn grid_too_small() {
        let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        assert!(prc_from_iprc_if(&osc, 0.1, 8).is_err());
    }
}
