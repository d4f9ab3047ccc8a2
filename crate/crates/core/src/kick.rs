//! Pulse-coupled phase oscillators: exact event-driven simulation with
//! absorption and clustering, the scalar and (N−1)-dimensional firing maps,
//! phase-locked fixed points and a sampled 1-norm contraction certificate.

use crate::io::{Cell, Csv};
use crate::oscillators::ScalarFn;
use crate::phase::gap_norm;
use crate::{Error, Result, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Sign convention of the kicks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KickMode {
    /// `Z_ε ≥ 0`; kicked phases are capped at 2π and absorbed.
    #[default]
    Excitatory,
    /// `Z_ε ≤ 0`; kicked phases are clamped at 0 and merge with the firer.
    Inhibitory,
}

/// One kick: `θ ← min(θ + Z_ε(θ), 2π)` (or `max(·, 0)` when inhibitory).
#[inline]
pub fn jump(prc: &dyn Fn(f64) -> f64, mode: KickMode, p: f64) -> f64 {
    let q = p + prc(p);
    match mode {
        KickMode::Excitatory => q.min(TWO_PI),
        KickMode::Inhibitory => q.max(0.0),
    }
}

#[inline]
fn is_absorbed(mode: KickMode, p: f64) -> bool {
    match mode {
        KickMode::Excitatory => p >= TWO_PI,
        KickMode::Inhibitory => p <= 0.0,
    }
}

/// Group of oscillators sharing one phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub phase: f64,
    /// Oscillator ids; the multiplicity is `members.len()`.
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// All-to-all pulse-coupled network of identical phase oscillators.
#[derive(Clone)]
pub struct KickNetwork {
    clusters: Vec<Cluster>,
    omega: f64,
    prc: ScalarFn,
    mode: KickMode,
}

impl std::fmt::Debug for KickNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KickNetwork")
            .field("clusters", &self.clusters)
            .field("omega", &self.omega)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

fn sort_and_merge(mut clusters: Vec<Cluster>) -> Vec<Cluster> {
    clusters.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    let mut out: Vec<Cluster> = Vec::with_capacity(clusters.len());
    for c in clusters {
        match out.last_mut() {
            Some(last) if last.phase == c.phase => last.members.extend(c.members),
            _ => out.push(c),
        }
    }
    for c in &mut out {
        c.members.sort_unstable();
    }
    out
}

impl KickNetwork {
    /// Oscillator `i` starts at `phases[i]`; bitwise-equal phases form one cluster.
    pub fn new(phases: &[f64], omega: f64, prc: ScalarFn, mode: KickMode) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one oscillator".into()));
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        if let Some(p) = phases.iter().find(|p| !(0.0..=TWO_PI).contains(*p)) {
            return Err(Error::InvalidArgument(format!("phase {p} outside [0, 2pi]")));
        }
        let clusters = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| Cluster {
                phase: p,
                members: vec![i],
            })
            .collect();
        Ok(Self {
            clusters: sort_and_merge(clusters),
            omega,
            prc,
            mode,
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn phases(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.phase).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(Cluster::multiplicity).collect()
    }

    pub fn size(&self) -> usize {
        self.clusters.iter().map(Cluster::multiplicity).sum()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mode(&self) -> KickMode {
        self.mode
    }

    pub fn prc(&self) -> &ScalarFn {
        &self.prc
    }

    /// Phases of all oscillators except one member of the cluster at the
    /// smallest phase, ascending: the firing-map coordinates of a
    /// post-firing configuration.
    pub fn relative_configuration(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size().saturating_sub(1));
        for (k, c) in self.clusters.iter().enumerate() {
            let skip = usize::from(k == 0);
            out.extend(std::iter::repeat_n(c.phase, c.multiplicity() - skip));
        }
        out
    }
}

/// One firing event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickEvent {
    pub time: f64,
    /// Index of the firing cluster in the pre-event configuration.
    pub firer: usize,
    pub firer_members: Vec<usize>,
    /// Cluster phases at the firing instant, before the kicks (firer at 2π).
    pub pre_phases: Vec<f64>,
    pub pre_multiplicities: Vec<usize>,
    /// Cluster phases after kicks, absorption and reset.
    pub post_phases: Vec<f64>,
    pub post_multiplicities: Vec<usize>,
    /// Pre-event cluster indices absorbed into the firer.
    pub absorbed: Vec<usize>,
    /// False if the kicks reversed the order of two non-absorbed clusters.
    pub order_preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EventLog {
    pub events: Vec<KickEvent>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn firing_times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    /// `time,firer,phase_0..,mult_0..`, post-event, padded to `n` columns each.
    pub fn to_csv(&self, n: usize) -> Csv {
        let mut header = vec!["time".to_string(), "firer".to_string()];
        header.extend((0..n).map(|k| format!("phase_{k}")));
        header.extend((0..n).map(|k| format!("mult_{k}")));
        let mut csv = Csv::new(&header);
        for e in &self.events {
            let mut row = vec![Cell::Num(e.time), Cell::Int(e.firer as i64)];
            row.extend((0..n).map(|k| e.post_phases.get(k).map_or(Cell::Text(String::new()), |&p| Cell::Num(p))));
            row.extend((0..n).map(|k| {
                e.post_multiplicities
                    .get(k)
                    .map_or(Cell::Text(String::new()), |&m| Cell::Int(m as i64))
            }));
            csv.row(row);
        }
        csv
    }
}

/// Stop conditions; the first one met ends the run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StopRule {
    pub t_end: Option<f64>,
    pub max_firings: Option<usize>,
    /// Stop at the first event after which a single cluster remains.
    pub until_sync: bool,
}

/// Hard limit used when no firing budget is given.
pub const DEFAULT_FIRING_CAP: usize = 1_000_000;

/// Exact event-driven simulation of the flow `θ̇ = ω` and the jump rule.
///
/// A firing cluster of multiplicity m kicks every other cluster m times in
/// succession; clusters pushed onto the boundary are absorbed into the firer
/// and emit no kicks of their own at that instant.
pub fn simulate_kick(net: &KickNetwork, stop: StopRule) -> Result<(KickNetwork, EventLog)> {
    let mut state = net.clone();
    let mut log = EventLog::default();
    let mut time = 0.0;
    let cap = stop.max_firings.unwrap_or(DEFAULT_FIRING_CAP);
    let prc = net.prc.clone();
    let mode = net.mode;
    while log.len() < cap {
        if stop.until_sync && state.clusters.len() == 1 && !log.is_empty() {
            break;
        }
        let last = state.clusters.len() - 1;
        let theta_max = state.clusters[last].phase;
        let advance = TWO_PI - theta_max;
        let t_fire = time + advance / state.omega;
        if stop.t_end.is_some_and(|t_end| t_fire > t_end) {
            break;
        }
        time = t_fire;
        let mut pre: Vec<f64> = state.clusters[..last].iter().map(|c| c.phase + advance).collect();
        pre.push(TWO_PI);
        let pre_mult: Vec<usize> = state.clusters.iter().map(Cluster::multiplicity).collect();
        let kicks = pre_mult[last];
        let mut firer = state.clusters[last].clone();
        firer.phase = 0.0;
        let mut absorbed = Vec::new();
        let mut survivors: Vec<Cluster> = Vec::with_capacity(last);
        let mut kicked_phases = Vec::with_capacity(last);
        for (k, c) in state.clusters[..last].iter().enumerate() {
            let mut p = pre[k];
            for _ in 0..kicks {
                let z = prc(p);
                check_sign(mode, p, z)?;
                p = jump(&*prc, mode, p);
                if is_absorbed(mode, p) {
                    break;
                }
            }
            if is_absorbed(mode, p) {
                absorbed.push(k);
                firer.members.extend_from_slice(&c.members);
            } else {
                kicked_phases.push(p);
                survivors.push(Cluster {
                    phase: p,
                    members: c.members.clone(),
                });
            }
        }
        let order_preserved = kicked_phases.windows(2).all(|w| w[0] <= w[1]);
        survivors.push(firer);
        state.clusters = sort_and_merge(survivors);
        log.events.push(KickEvent {
            time,
            firer: last,
            firer_members: net_members(&state, 0),
            pre_phases: pre,
            pre_multiplicities: pre_mult,
            post_phases: state.phases(),
            post_multiplicities: state.multiplicities(),
            absorbed,
            order_preserved,
        });
    }
    Ok((state, log))
}

fn net_members(state: &KickNetwork, idx: usize) -> Vec<usize> {
    state.clusters[idx].members.clone()
}

fn check_sign(mode: KickMode, theta: f64, value: f64) -> Result<()> {
    let bad = match mode {
        KickMode::Excitatory => value < 0.0,
        KickMode::Inhibitory => value > 0.0,
    };
    if bad {
        Err(Error::Excitatory { theta, value })
    } else {
        Ok(())
    }
}

/// Firing as recorded by [`simulate_kick_dense`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFiring {
    pub time: f64,
    pub members: Vec<usize>,
}

/// Time-stepped replay with per-oscillator phases and threshold checks,
/// independent of the cluster bookkeeping of [`simulate_kick`]. The firing
/// instant inside a step is found by linear interpolation of the flow.
pub fn simulate_kick_dense(
    phases: &[f64],
    omega: f64,
    prc: &dyn Fn(f64) -> f64,
    mode: KickMode,
    dt: f64,
    firings: usize,
) -> Vec<DenseFiring> {
    let mut theta = phases.to_vec();
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut remaining = dt;
    let mut step_index: u64 = 0;
    while out.len() < firings {
        let lead = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let to_fire = (TWO_PI - lead) / omega;
        if to_fire > remaining {
            for p in &mut theta {
                *p += omega * remaining;
            }
            step_index += 1;
            t = step_index as f64 * dt;
            remaining = dt;
            continue;
        }
        for p in &mut theta {
            *p += omega * to_fire;
        }
        t += to_fire;
        remaining -= to_fire;
        let mut fired: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] >= TWO_PI - 1e-12).collect();
        for &i in &fired {
            theta[i] = TWO_PI;
        }
        let kicks = fired.len();
        let mut absorbed = Vec::new();
        for i in 0..theta.len() {
            if fired.contains(&i) {
                continue;
            }
            for _ in 0..kicks {
                theta[i] = jump(prc, mode, theta[i]);
                if is_absorbed(mode, theta[i]) {
                    break;
                }
            }
            if is_absorbed(mode, theta[i]) {
                absorbed.push(i);
            }
        }
        fired.extend(absorbed);
        fired.sort_unstable();
        for &i in &fired {
            theta[i] = 0.0;
        }
        out.push(DenseFiring { time: t, members: fired });
    }
    out
}

/// Scalar firing map `h(θ) = p + Z_ε(p)` with `p = 2π − θ`, clamped to `[0, 2π]`.
pub fn scalar_firing_map(prc: &dyn Fn(f64) -> f64, mode: KickMode, theta: f64) -> f64 {
    let p = TWO_PI - theta;
    jump(prc, mode, p).clamp(0.0, TWO_PI)
}

/// Result of one application of the (N−1)-dimensional firing map.
#[derive(Debug, Clone, PartialEq)]
pub struct FiringMapStep {
    pub phases: Vec<f64>,
    /// Oscillators absorbed into the firing group.
    pub absorbed: usize,
}

/// Smallest forward difference slope of `Z_ε` on a grid of `(0, 2π)`,
/// ignoring points whose kick would reach the boundary.
pub fn min_prc_slope(prc: &dyn Fn(f64) -> f64, mode: KickMode) -> f64 {
    let n = 4096;
    let h = TWO_PI / n as f64;
    let mut worst = f64::INFINITY;
    for k in 1..n - 1 {
        let a = k as f64 * h;
        let b = a + h;
        let (za, zb) = (prc(a), prc(b));
        if is_absorbed(mode, a + za) || is_absorbed(mode, b + zb) {
            continue;
        }
        worst = worst.min((zb - za) / h);
    }
    worst
}

/// Checks `Z_ε′ > −1` (so that kicks never reverse the order of two phases).
pub fn check_order_preservation(prc: &dyn Fn(f64) -> f64, mode: KickMode) -> Result<f64> {
    let s = min_prc_slope(prc, mode);
    if s > -1.0 {
        Ok(s)
    } else {
        Err(Error::OrderPreservation { min_slope: s })
    }
}

/// Unchecked map step; `phases` are the weakly ascending phases of the N−1
/// oscillators other than a reference oscillator sitting at 0.
pub fn firing_map_step(prc: &dyn Fn(f64) -> f64, mode: KickMode, phases: &[f64]) -> FiringMapStep {
    let Some(&lead) = phases.last() else {
        return FiringMapStep {
            phases: Vec::new(),
            absorbed: 0,
        };
    };
    if lead == 0.0 {
        return FiringMapStep {
            phases: phases.to_vec(),
            absorbed: 0,
        };
    }
    let advance = TWO_PI - lead;
    let kicks = phases.iter().filter(|&&p| p == lead).count();
    let mut out = Vec::with_capacity(phases.len());
    let mut absorbed = 0;
    // the reference oscillator and every non-firing one are kicked
    let others = std::iter::once(0.0).chain(phases.iter().copied().filter(|&p| p != lead));
    for theta in others {
        let mut p = theta + advance;
        for _ in 0..kicks {
            p = jump(prc, mode, p);
            if is_absorbed(mode, p) {
                break;
            }
        }
        if is_absorbed(mode, p) {
            absorbed += 1;
            out.push(0.0);
        } else {
            out.push(p);
        }
    }
    // remaining members of the firing group, one of which is the new reference
    out.extend(std::iter::repeat_n(0.0, kicks - 1));
    out.sort_by(f64::total_cmp);
    FiringMapStep { phases: out, absorbed }
}

/// `H(θ₁, …, θ_{N−1})`, refusing PRCs that break order preservation.
pub fn firing_map_n(prc: &dyn Fn(f64) -> f64, mode: KickMode, phases: &[f64]) -> Result<FiringMapStep> {
    check_order_preservation(prc, mode)?;
    if phases.windows(2).any(|w| w[0] > w[1]) || phases.iter().any(|p| !(0.0..=TWO_PI).contains(p)) {
        return Err(Error::InvalidArgument("phases must be ascending in [0, 2pi]".into()));
    }
    Ok(firing_map_step(prc, mode, phases))
}

/// Outcome of the sampled contraction test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Contracting,
    Expanding,
    Indefinite,
    /// Every ratio equals 1: the map is an isometry.
    Neutral,
    HypothesisNotSatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub verdict: Verdict,
    pub n: usize,
    pub seed: u64,
    pub pairs: usize,
    /// Sampled pairs discarded because a kick reached the boundary.
    pub skipped: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub min_slope: f64,
    /// +1 convex, −1 concave, 0 linear; `None` if the sign is indefinite.
    pub curvature_sign: Option<i8>,
    pub note: String,
}

/// Sign of `Z″` on the uncapped grid: semidefinite within `tol` relative.
pub fn curvature_sign(f: &dyn Fn(f64) -> f64, mode: KickMode, capped: bool) -> Option<i8> {
    let n = 1024;
    let h = TWO_PI / n as f64;
    let (mut pos, mut neg, mut scale) = (false, false, 0.0f64);
    let mut seconds = Vec::with_capacity(n);
    for k in 2..n - 1 {
        let t = k as f64 * h;
        let (a, b, c) = (f(t - h), f(t), f(t + h));
        if capped && [(t - h, a), (t, b), (t + h, c)].iter().any(|&(x, z)| is_absorbed(mode, x + z)) {
            continue;
        }
        let d2 = (a - 2.0 * b + c) / (h * h);
        scale = scale.max(a.abs()).max(c.abs());
        seconds.push(d2);
    }
    let tol = 1e-6 * scale.max(1e-300) + 1e-9;
    for d2 in seconds {
        pos |= d2 > tol;
        neg |= d2 < -tol;
    }
    match (pos, neg) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        (false, false) => Some(0),
        (true, true) => None,
    }
}

/// Uniform sample of `0 < θ₁ < … < θ_{N−1} < 2π`.
pub fn sample_simplex(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..TWO_PI)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Ratios `‖H(a) − H(b)‖ / ‖a − b‖` over seeded pairs of ordered
/// configurations, in the gap norm.
///
/// Pairs in which a kick reaches the boundary leave the interior of the
/// simplex and are skipped; sampling continues until `n_pairs` usable pairs.
pub fn contraction_certificate(prc: &dyn Fn(f64) -> f64, mode: KickMode, n: usize, n_pairs: usize, seed: u64) -> Result<ContractionReport> {
    if n < 2 || n_pairs == 0 {
        return Err(Error::InvalidArgument(format!("need n >= 2 and n_pairs >= 1, got {n}, {n_pairs}")));
    }
    let min_slope = min_prc_slope(prc, mode);
    let curv = curvature_sign(prc, mode, true);
    let mut report = ContractionReport {
        verdict: Verdict::HypothesisNotSatisfied,
        n,
        seed,
        pairs: 0,
        skipped: 0,
        min_ratio: f64::NAN,
        max_ratio: f64::NAN,
        mean_ratio: f64::NAN,
        min_slope,
        curvature_sign: curv,
        note: String::new(),
    };
    if !(min_slope > -1.0) {
        report.note = format!("order preservation fails: min slope {min_slope}");
        return Ok(report);
    }
    if curv.is_none() {
        report.note = "second derivative changes sign".into();
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(n_pairs);
    let max_attempts = 1000 * n_pairs;
    let mut attempts = 0;
    while ratios.len() < n_pairs && attempts < max_attempts {
        attempts += 1;
        let a = sample_simplex(&mut rng, n - 1);
        let b = sample_simplex(&mut rng, n - 1);
        let ha = firing_map_step(prc, mode, &a);
        let hb = firing_map_step(prc, mode, &b);
        if ha.absorbed > 0 || hb.absorbed > 0 {
            report.skipped += 1;
            continue;
        }
        let da: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let dh: Vec<f64> = ha.phases.iter().zip(&hb.phases).map(|(x, y)| x - y).collect();
        let base = gap_norm(&da);
        if base == 0.0 {
            continue;
        }
        ratios.push(gap_norm(&dh) / base);
    }
    if ratios.is_empty() {
        report.note = "every sampled pair was absorbed".into();
        return Ok(report);
    }
    report.pairs = ratios.len();
    report.min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    report.max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    report.verdict = if (report.max_ratio - 1.0).abs() <= 1e-12 && (report.min_ratio - 1.0).abs() <= 1e-12 {
        Verdict::Neutral
    } else if report.max_ratio < 1.0 {
        Verdict::Contracting
    } else if report.min_ratio > 1.0 {
        Verdict::Expanding
    } else {
        Verdict::Indefinite
    };
    if report.pairs < n_pairs {
        report.note = format!("only {} usable pairs in {attempts} attempts", report.pairs);
    }
    Ok(report)
}

/// Splay configuration `(2π/N, …, (N−1)2π/N)` relative to a reference at 0.
pub fn splay_configuration(n: usize) -> Vec<f64> {
    (1..n).map(|k| TWO_PI * k as f64 / n as f64).collect()
}

/// Phase-locked configuration: iterates the firing map from the splay
/// state until the gap-norm displacement is at most `1e−10`.
pub fn phase_locked_fixed_point(prc: &dyn Fn(f64) -> f64, mode: KickMode, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two oscillators".into()));
    }
    check_order_preservation(prc, mode)?;
    const MAX_ITER: usize = 200_000;
    let mut x = splay_configuration(n);
    for _ in 0..MAX_ITER {
        let step = firing_map_step(prc, mode, &x);
        if step.absorbed > 0 {
            return Err(Error::Precondition("absorption during fixed-point iteration".into()));
        }
        let d: Vec<f64> = step.phases.iter().zip(&x).map(|(a, b)| a - b).collect();
        x = step.phases;
        if gap_norm(&d) <= 1e-10 {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITER })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::find_root;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn zero() -> ScalarFn {
        Arc::new(|_| 0.0)
    }

    fn decreasing() -> ScalarFn {
        Arc::new(|t: f64| 0.3 * (TWO_PI - t) + 0.02 * (TWO_PI - t).powi(2))
    }

    #[test]
    fn lone_oscillator_fires_every_period() {
        let net = KickNetwork::new(&[1.0], 2.0, zero(), KickMode::Excitatory).unwrap();
        let (_, log) = simulate_kick(
            &net,
            StopRule {
                max_firings: Some(5),
                ..Default::default()
            },
        )
        .unwrap();
        let period = TWO_PI / 2.0;
        for (k, e) in log.events.iter().enumerate() {
            let expected = (TWO_PI - 1.0) / 2.0 + k as f64 * period;
            assert!((e.time - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_prc_map_is_reflection() {
        let z = zero();
        for t in [0.3, 1.0, PI, 5.0] {
            let h = scalar_firing_map(&*z, KickMode::Excitatory, t);
            assert!((scalar_firing_map(&*z, KickMode::Excitatory, h) - t).abs() < 1e-12);
        }
        let out = firing_map_n(&*z, KickMode::Excitatory, &[PI / 2.0, PI]).unwrap();
        assert!((out.phases[0] - PI).abs() < 1e-15 && (out.phases[1] - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn linear_prc_fixed_points() {
        // h(θ) = 1.1(2π − θ)
        let up = |t: f64| 0.1 * t;
        let root = find_root(
            |t| scalar_firing_map(&up, KickMode::Excitatory, t) - t,
            (1e-9, TWO_PI - 1e-9),
            1e-14,
        )
        .unwrap();
        assert!((root - TWO_PI * 1.1 / 2.1).abs() < 1e-9);
        // h(θ) = 2π − 0.9θ
        let down = |t: f64| 0.1 * (TWO_PI - t);
        let root = find_root(
            |t| scalar_firing_map(&down, KickMode::Excitatory, t) - t,
            (1e-9, TWO_PI - 1e-9),
            1e-14,
        )
        .unwrap();
        assert!((root - TWO_PI / 1.9).abs() < 1e-9);
        let fp = phase_locked_fixed_point(&down, KickMode::Excitatory, 2).unwrap();
        assert!((fp[0] - root).abs() < 1e-9);
    }

    #[test]
    fn two_node_map_equals_scalar_map() {
        let z = decreasing();
        for t in [0.5, 2.0, 4.0] {
            let a = firing_map_n(&*z, KickMode::Excitatory, &[t]).unwrap().phases[0];
            assert_eq!(a, scalar_firing_map(&*z, KickMode::Excitatory, t));
        }
    }

    #[test]
    fn zero_prc_is_an_isometry() {
        let rep = contraction_certificate(&*zero(), KickMode::Excitatory, 5, 200, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Neutral);
        assert!((rep.max_ratio - 1.0).abs() <= 1e-12 && (rep.min_ratio - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn decreasing_prc_contracts() {
        let rep = contraction_certificate(&*decreasing(), KickMode::Excitatory, 5, 500, 11).unwrap();
        assert_eq!(rep.verdict, Verdict::Contracting);
        let fp = phase_locked_fixed_point(&*decreasing(), KickMode::Excitatory, 4).unwrap();
        let again = firing_map_step(&*decreasing(), KickMode::Excitatory, &fp);
        let d: Vec<f64> = again.phases.iter().zip(&fp).map(|(a, b)| a - b).collect();
        assert!(gap_norm(&d) <= 1e-9);
    }

    #[test]
    fn order_violation_is_refused() {
        let z = |t: f64| 1.5 * (TWO_PI - t) * 0.5;
        assert!(firing_map_n(&z, KickMode::Excitatory, &[1.0, 2.0]).is_ok());
        let steep = |t: f64| 0.5 * (3.0 * (PI - t)).clamp(0.0, 1.0);
        assert!(matches!(
            firing_map_n(&steep, KickMode::Excitatory, &[1.0, 2.0]),
            Err(Error::OrderPreservation { .. })
        ));
    }

    #[test]
    fn negative_prc_rejected_in_excitatory_mode() {
        let net = KickNetwork::new(&[0.0, 3.0], 1.0, Arc::new(|_| -0.1), KickMode::Excitatory).unwrap();
        assert!(matches!(
            simulate_kick(
                &net,
                StopRule {
                    max_firings: Some(3),
                    ..Default::default()
                }
            ),
            Err(Error::Excitatory { .. })
        ));
    }

    #[test]
    fn simultaneous_cluster_stacks_kicks() {
        let z: ScalarFn = Arc::new(|_| 0.1);
        let net = KickNetwork::new(&[6.0, 6.0, 1.0], 1.0, z, KickMode::Excitatory).unwrap();
        assert_eq!(net.multiplicities(), vec![1, 2]);
        let (after, log) = simulate_kick(
            &net,
            StopRule {
                max_firings: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let e = &log.events[0];
        assert_eq!(e.firer_members, vec![0, 1]);
        let expected = 1.0 + (TWO_PI - 6.0) + 0.2;
        assert!((after.phases()[1] - expected).abs() < 1e-12);
    }
}
