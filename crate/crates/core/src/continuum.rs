//! Infinite-population limit: the continuity equation `∂ρ/∂t = −∂(vρ)/∂θ`
//! with velocity `v = ω + K Z(θ) J(2π, t)`, solved by first-order upwind
//! finite volumes, plus stationary densities and total-variation distance.

use crate::io::Csv;
use crate::numerics::find_root;
use crate::{Error, Result, TWO_PI};
use serde::Serialize;

/// Smallest admissible cell count.
pub const MIN_CELLS: usize = 64;
/// Boundary-flux denominator at which the flux is declared infinite.
pub const BLOW_UP_DELTA: f64 = 1e-6;

/// Cell-averaged density on `M` uniform cells of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    values: Vec<f64>,
}

impl PhaseDensity {
    /// Takes cell values as given; they must be nonnegative and integrate to 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_CELLS {
            return Err(Error::InvalidArgument(format!(
                "need at least {MIN_CELLS} cells, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("density value {v} is not a nonnegative number")));
        }
        let d = Self { values };
        let mass = d.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density integrates to {mass}, not 1")));
        }
        Ok(d)
    }

    /// Samples `f` at cell centers and rescales to unit mass.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = TWO_PI / m as f64;
        let raw: Vec<f64> = (0..m).map(|k| f((k as f64 + 0.5) * h)).collect();
        let mass: f64 = raw.iter().sum::<f64>() * h;
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("density has no mass".into()));
        }
        Self::new(raw.into_iter().map(|v| v / mass).collect())
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::from_fn(m, |_| 1.0)
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        TWO_PI / self.values.len() as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.cell_width()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }

    /// `Σ |a − b| Δθ`.
    pub fn l1_distance(&self, other: &PhaseDensity) -> Result<f64> {
        if self.cells() != other.cells() {
            return Err(Error::GridMismatch(self.cells(), other.cells()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_width())
    }
}

/// `½ Σ |a_m − b_m| Δθ`.
pub fn tv_distance(a: &PhaseDensity, b: &PhaseDensity) -> Result<f64> {
    Ok(0.5 * a.l1_distance(b)?)
}

/// Face positions `(m+1)Δθ`; the last is the boundary 2π, where `Z` is
/// read as its left limit.
fn face_prc(z: &dyn Fn(f64) -> f64, m: usize) -> Vec<f64> {
    let h = TWO_PI / m as f64;
    (0..m).map(|k| if k + 1 == m { z(TWO_PI) } else { z((k + 1) as f64 * h) }).collect()
}

/// Parameters of a continuum run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumOptions {
    pub omega: f64,
    pub k: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Snapshot spacing; snapshots land exactly on multiples of it.
    pub snapshot_every: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUp {
    pub time: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumRun {
    pub snapshots: Vec<(f64, PhaseDensity)>,
    /// Boundary flux after every step.
    pub flux: Vec<(f64, f64)>,
    pub blow_up: Option<BlowUp>,
    pub max_mass_error: f64,
    pub steps: usize,
}

impl ContinuumRun {
    pub fn final_density(&self) -> &PhaseDensity {
        &self.snapshots.last().expect("run has an initial snapshot").1
    }

    /// Long format `t,theta,rho`.
    pub fn densities_csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "theta", "rho"]);
        for (t, d) in &self.snapshots {
            for (k, &v) in d.values().iter().enumerate() {
                csv.row([*t, d.center(k), v]);
            }
        }
        csv
    }

    pub fn flux_csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "J"]);
        for &(t, j) in &self.flux {
            csv.row([t, j]);
        }
        csv
    }
}

/// Closed-form boundary flux `J = ρ_b ω / (1 − K ρ_b Z_b)`, or the
/// denominator if it is at most [`BLOW_UP_DELTA`].
fn boundary_flux(rho_b: f64, omega: f64, k: f64, z_b: f64) -> std::result::Result<f64, f64> {
    let denom = 1.0 - k * rho_b * z_b;
    if denom <= BLOW_UP_DELTA {
        Err(denom)
    } else {
        Ok(rho_b * omega / denom)
    }
}

/// Upwind finite-volume integration up to `t_end` or flux blow-up.
pub fn simulate_continuum(z: &dyn Fn(f64) -> f64, rho0: &PhaseDensity, opts: &ContinuumOptions) -> Result<ContinuumRun> {
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!("cfl must lie in (0, 1], got {}", opts.cfl)));
    }
    if !(opts.omega > 0.0 && opts.t_end >= 0.0 && opts.snapshot_every > 0.0) {
        return Err(Error::InvalidArgument("omega, t_end and snapshot spacing must be positive".into()));
    }
    let m = rho0.cells();
    let h = rho0.cell_width();
    let zf = face_prc(z, m);
    let mut rho = rho0.values().to_vec();
    let mut run = ContinuumRun {
        snapshots: vec![(0.0, rho0.clone())],
        flux: Vec::new(),
        blow_up: None,
        max_mass_error: 0.0,
        steps: 0,
    };
    let mut v = vec![0.0; m];
    let mut flux = vec![0.0; m];
    let mut t = 0.0;
    let mut next_snap = 1usize;
    loop {
        let j = match boundary_flux(rho[m - 1], opts.omega, opts.k, zf[m - 1]) {
            Ok(j) => j,
            Err(denominator) => {
                run.blow_up = Some(BlowUp { time: t, denominator });
                break;
            }
        };
        for k in 0..m {
            v[k] = opts.omega + opts.k * zf[k] * j;
        }
        let vmax = v.iter().copied().fold(0.0, f64::max);
        if let Some(bad) = v.iter().find(|&&x| !(x > 0.0)) {
            if run.steps == 0 {
                return Err(Error::Precondition(format!("initial velocity {bad} is not positive")));
            }
            return Err(Error::InvalidArgument(format!("velocity became non-positive ({bad}) at t = {t}")));
        }
        if t >= opts.t_end {
            break;
        }
        let snap_time = next_snap as f64 * opts.snapshot_every;
        let target = snap_time.min(opts.t_end);
        let mut dt = opts.cfl * h / vmax;
        let lands = t + dt >= target;
        if lands {
            dt = target - t;
        }
        for k in 0..m {
            flux[k] = v[k] * rho[k];
        }
        // face m-1 is the periodic boundary: its flux enters cell 0
        let ratio = dt / h;
        let last_flux = flux[m - 1];
        for k in (1..m).rev() {
            rho[k] -= ratio * (flux[k] - flux[k - 1]);
        }
        rho[0] -= ratio * (flux[0] - last_flux);
        t = if lands { target } else { t + dt };
        run.steps += 1;
        if let Some(k) = rho.iter().position(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("density lost positivity in cell {k} at t = {t}")));
        }
        let mass: f64 = rho.iter().sum::<f64>() * h;
        run.max_mass_error = run.max_mass_error.max((mass - 1.0).abs());
        run.flux.push((t, j));
        if lands && (t == snap_time || t >= opts.t_end) {
            run.snapshots.push((t, PhaseDensity { values: rho.clone() }));
            if t == snap_time {
                next_snap += 1;
            }
        }
    }
    if run.snapshots.last().is_none_or(|s| s.0 < t) {
        run.snapshots.push((t, PhaseDensity { values: rho }));
    }
    Ok(run)
}

/// Stationary solution of the discrete scheme: constant face flux `J*`,
/// `ρ*_m = J*/(ω + K Z(face_m) J*)`, with `J*` normalizing the mass.
pub fn stationary_density(z: &dyn Fn(f64) -> f64, omega: f64, k: f64, m: usize) -> Result<(PhaseDensity, f64)> {
    if m < MIN_CELLS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_CELLS} cells")));
    }
    let h = TWO_PI / m as f64;
    let zf = face_prc(z, m);
    let g = |j: f64| zf.iter().map(|&zk| h * j / (omega + k * zk * j)).sum::<f64>() - 1.0;
    let most_negative = zf.iter().map(|&zk| k * zk).fold(0.0, f64::min);
    let hi = if most_negative < 0.0 {
        // velocity stays positive only for J < ω / max(−K Z)
        let limit = omega / -most_negative;
        let hi = limit * (1.0 - 1e-12);
        if !(g(hi) > 0.0) {
            return Err(Error::NoStationary(format!("normalization unreachable below J = {limit}")));
        }
        hi
    } else {
        let mut hi = omega / TWO_PI;
        while g(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::NoStationary("normalization integral stays below 1".into()));
            }
        }
        hi
    };
    let j_star = find_root(g, (0.0, hi), 1e-15)?;
    let values: Vec<f64> = zf.iter().map(|&zk| j_star / (omega + k * zk * j_star)).collect();
    let mass: f64 = values.iter().sum::<f64>() * h;
    let values = values.into_iter().map(|v| v / mass).collect();
    Ok((PhaseDensity { values }, j_star))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decreasing(t: f64) -> f64 {
        1.0 + 0.5 * ((TWO_PI - t) / TWO_PI).powi(2)
    }

    fn opts(k: f64, t_end: f64) -> ContinuumOptions {
        ContinuumOptions {
            omega: 1.0,
            k,
            t_end,
            cfl: 0.5,
            snapshot_every: 1.0,
        }
    }

    #[test]
    fn small_grid_rejected() {
        assert!(PhaseDensity::uniform(32).is_err());
    }

    #[test]
    fn tv_basics() {
        let a = PhaseDensity::from_fn(128, |t| if t < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let b = PhaseDensity::from_fn(128, |t| if t > 3.0 && t < 4.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert!((tv_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        let c = PhaseDensity::uniform(256).unwrap();
        assert!(matches!(tv_distance(&a, &c), Err(Error::GridMismatch(128, 256))));
    }

    #[test]
    fn uncoupled_stationary_is_uniform() {
        let (rho, j) = stationary_density(&decreasing, 1.0, 0.0, 128).unwrap();
        assert!((j - 1.0 / TWO_PI).abs() < 1e-14);
        assert!(rho.values().iter().all(|v| (v - 1.0 / TWO_PI).abs() < 1e-13));
    }

    #[test]
    fn constant_prc_closed_form() {
        // 2π J/(ω + K c J) = 1
        let (c, k, omega) = (0.7, 1.3, 2.0);
        let (rho, j) = stationary_density(&|_| c, omega, k, 128).unwrap();
        let exact = omega / (TWO_PI - k * c);
        assert!((j - exact).abs() < 1e-12);
        assert!(rho.values().iter().all(|v| (v - 1.0 / TWO_PI).abs() < 1e-13));
    }

    #[test]
    fn stationary_is_a_fixed_point_of_the_scheme() {
        let (rho, _) = stationary_density(&decreasing, 1.0, 1.0, 256).unwrap();
        let mut o = opts(1.0, 0.01);
        o.snapshot_every = 0.01;
        let run = simulate_continuum(&decreasing, &rho, &o).unwrap();
        assert!(run.final_density().l1_distance(&rho).unwrap() <= 1e-12);
    }

    #[test]
    fn rigid_rotation_without_coupling() {
        let rho0 = PhaseDensity::from_fn(512, |t| 1.0 + 0.5 * t.cos()).unwrap();
        let run = simulate_continuum(&decreasing, &rho0, &opts(0.0, TWO_PI)).unwrap();
        assert!(run.final_density().l1_distance(&rho0).unwrap() <= 0.1);
        assert!(run.max_mass_error < 1e-12);
    }

    #[test]
    fn increasing_prc_blows_up() {
        let omega = TWO_PI / std::f64::consts::LN_2;
        let z = move |t: f64| 0.5 * omega * (t / omega).exp();
        let rho0 = PhaseDensity::from_fn(256, |t| (-(t - 2.0).powi(2) / 0.1).exp()).unwrap();
        let o = ContinuumOptions {
            omega,
            k: 1.0,
            t_end: 10.0,
            cfl: 0.9,
            snapshot_every: 0.1,
        };
        let run = simulate_continuum(&z, &rho0, &o).unwrap();
        assert!(run.blow_up.is_some());
    }
}
