use crate::{Error, Result};

/// Guard tolerance used when locating events.
pub const EVENT_TOL: f64 = 1e-10;

/// Sampled solution of an initial value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    data: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "trajectory dimension must be positive");
        Self {
            times: Vec::new(),
            data: Vec::new(),
            dim,
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        let mut traj = Self::new(dim);
        traj.times.reserve(n);
        traj.data.reserve(n * dim);
        traj
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.data.extend_from_slice(x);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("empty trajectory")
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// Classical fourth-order Runge–Kutta stepper with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` at time `t` by `h`, writing the result into `out`.
    pub fn step<F>(&mut self, field: &mut F, t: f64, x: &[f64], h: f64, out: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = x.len();
        field(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        field(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        field(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        field(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            out[i] = x[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// Like [`Rk4::step`], additionally reporting whether `probe` flags any
    /// of the three intermediate stage states.
    fn step_probed<F, P>(&mut self, field: &mut F, t: f64, x: &[f64], h: f64, out: &mut [f64], probe: &mut P) -> bool
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        P: FnMut(&[f64]) -> bool,
    {
        let n = x.len();
        let mut flagged = false;
        field(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        flagged |= probe(&self.tmp);
        field(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        flagged |= probe(&self.tmp);
        field(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        flagged |= probe(&self.tmp);
        field(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            out[i] = x[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        flagged
    }
}

/// One RK4 step, allocating the result.
pub fn rk4_step<F>(mut field: F, t: f64, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = vec![0.0; x.len()];
    Rk4::new(x.len()).step(&mut field, t, x, h, &mut out);
    out
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step must be positive, got {step}")))
    }
}

/// Number of grid steps covering `span` with the last one possibly shortened.
fn step_count(span: f64, step: f64) -> usize {
    let n = (span / step * (1.0 - 1e-12)).ceil();
    (n as usize).max(1)
}

fn drive<F>(mut field: F, x0: &[f64], (t0, t1): (f64, f64), step: f64, mut record: Option<&mut Trajectory>) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_step(step)?;
    if t1 < t0 {
        return Err(Error::InvalidArgument(format!("empty span [{t0}, {t1}]")));
    }
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    let mut rk = Rk4::new(x.len());
    if let Some(traj) = record.as_deref_mut() {
        traj.push(t0, &x);
    }
    if t1 == t0 {
        return Ok(x);
    }
    let n = step_count(t1 - t0, step);
    let mut t = t0;
    for k in 0..n {
        let t_next = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * step };
        rk.step(&mut field, t, &x, t_next - t, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { last_good_time: t });
        }
        std::mem::swap(&mut x, &mut next);
        t = t_next;
        if let Some(traj) = record.as_deref_mut() {
            traj.push(t, &x);
        }
    }
    Ok(x)
}

/// Fixed-step RK4 over `t_span`, recording every grid point plus the final time.
pub fn integrate<F>(field: F, x0: &[f64], t_span: (f64, f64), step: f64) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = step_count((t_span.1 - t_span.0).max(0.0), step.max(f64::MIN_POSITIVE));
    let mut traj = Trajectory::with_capacity(x0.len(), n + 1);
    drive(field, x0, t_span, step, Some(&mut traj))?;
    Ok(traj)
}

/// Same grid as [`integrate`] but only the final state is kept.
pub fn integrate_final<F>(field: F, x0: &[f64], t_span: (f64, f64), step: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    drive(field, x0, t_span, step, None)
}

/// Sign convention for guard crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Guard goes from negative to non-negative.
    Rising,
    /// Guard goes from positive to non-positive.
    Falling,
    Either,
}

impl Direction {
    fn crossed(self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Either => rising || falling,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub state_before: Vec<f64>,
    /// Equal to `state_before` unless a caller applies a jump map.
    pub state_after: Vec<f64>,
    pub label: String,
}

/// Integrates until `guard` crosses zero in `direction`, or fails at `t_max`.
///
/// The crossing is bracketed on the RK4 grid and then located by bisection
/// on a single shortened RK4 step from the left grid point, until the guard
/// is within [`EVENT_TOL`] of zero.
pub fn integrate_to_event<F, G>(
    field: F,
    x0: &[f64],
    t0: f64,
    guard: G,
    direction: Direction,
    t_max: f64,
    step: f64,
) -> Result<(Trajectory, EventRecord)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(&[f64]) -> f64,
{
    let mut traj = Trajectory::new(x0.len());
    let (time, state) = event_impl(field, x0, t0, guard, direction, t_max, step, Some(&mut traj))?;
    Ok((
        traj,
        EventRecord {
            time,
            state_before: state.clone(),
            state_after: state,
            label: "guard".to_string(),
        },
    ))
}

/// [`integrate_to_event`] without recording the path: returns event time and state.
pub fn next_event<F, G>(field: F, x0: &[f64], t0: f64, guard: G, direction: Direction, t_max: f64, step: f64) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(&[f64]) -> f64,
{
    event_impl(field, x0, t0, guard, direction, t_max, step, None)
}

#[allow(clippy::too_many_arguments)]
fn event_impl<F, G>(
    mut field: F,
    x0: &[f64],
    t0: f64,
    mut guard: G,
    direction: Direction,
    t_max: f64,
    step: f64,
    mut record: Option<&mut Trajectory>,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(&[f64]) -> f64,
{
    check_step(step)?;
    if t_max <= t0 {
        return Err(Error::InvalidArgument(format!("t_max {t_max} must exceed t0 {t0}")));
    }
    let dim = x0.len();
    let mut rk = Rk4::new(dim);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; dim];
    let mut g0 = guard(&x);
    if let Some(traj) = record.as_deref_mut() {
        traj.push(t0, &x);
    }
    let mut t = t0;
    let mut k: u64 = 0;
    while t < t_max {
        let grid_next = t0 + (k + 1) as f64 * step;
        let mut h = if grid_next >= t_max - 1e-9 * step {
            t_max - t
        } else {
            grid_next - t
        };
        if h <= 0.0 {
            k += 1;
            continue;
        }
        let min_h = 1e-15 * t.abs().max(1.0);
        // Shrink the step while an intermediate stage lands beyond the guard:
        // fields may be singular on the event surface.
        let mut shortened = false;
        let g1 = loop {
            let stage_crossed = rk.step_probed(&mut field, t, &x, h, &mut next, &mut |s: &[f64]| direction.crossed(g0, guard(s)));
            if next.iter().any(|v| !v.is_finite()) && !stage_crossed {
                return Err(Error::Diverged { last_good_time: t });
            }
            let g1 = guard(&next);
            if direction.crossed(g0, g1) || !stage_crossed || h <= min_h {
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged { last_good_time: t });
                }
                break g1;
            }
            h *= 0.5;
            shortened = true;
        };
        if direction.crossed(g0, g1) {
            let (tau, state) = if g1.abs() <= EVENT_TOL {
                (h, next.clone())
            } else {
                let mut lo = 0.0;
                let mut hi = h;
                let mut hi_state = next.clone();
                let mut probe = vec![0.0; dim];
                let mut found = None;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    rk.step(&mut field, t, &x, mid, &mut probe);
                    let gm = guard(&probe);
                    if gm.abs() <= EVENT_TOL {
                        found = Some((mid, probe.clone()));
                        break;
                    }
                    if direction.crossed(g0, gm) {
                        hi = mid;
                        hi_state.copy_from_slice(&probe);
                    } else {
                        lo = mid;
                    }
                }
                found.unwrap_or((hi, hi_state))
            };
            let te = t + tau;
            if let Some(traj) = record.as_deref_mut() {
                if te > traj.last_time() {
                    traj.push(te, &state);
                }
            }
            return Ok((te, state));
        }
        std::mem::swap(&mut x, &mut next);
        t += h;
        if !shortened {
            k += 1;
        }
        g0 = g1;
        if let Some(traj) = record.as_deref_mut() {
            traj.push(t, &x);
        }
    }
    Err(Error::NoEvent { t_max })
}
