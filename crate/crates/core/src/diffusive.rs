//! Diffusively coupled state-space oscillators: `u = −L y` with the graph
//! Laplacian L, output synchronization, and the incremental Lyapunov,
//! passivity and Jacobian diagnostics for a resistor-coupled van der Pol pair.

use crate::io::{Cell, Csv};
use crate::numerics::integrate;
use crate::oscillators::OscillatorModel;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

/// Weighted directed graph; an edge `j → i` with weight `K_ji` means node i
/// receives the output of node j.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl CouplingGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Two nodes joined symmetrically with gain `k`.
    pub fn pair(k: f64) -> Result<Self> {
        let mut g = Self::new(2);
        g.add_edge(0, 1, k)?;
        g.add_edge(1, 0, k)?;
        Ok(g)
    }

    pub fn all_to_all(n: usize, k: f64) -> Result<Self> {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.add_edge(j, i, k)?;
                }
            }
        }
        Ok(g)
    }

    /// Adds (or accumulates) the weight `K_{from,to}`.
    pub fn add_edge(&mut self, from: usize, to: usize, k: f64) -> Result<()> {
        if from >= self.n || to >= self.n {
            return Err(Error::InvalidArgument(format!("edge {from}->{to} outside {} nodes", self.n)));
        }
        if from == to {
            return Err(Error::InvalidArgument(format!("self-loop at node {from}")));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling weight must be nonnegative, got {k}")));
        }
        if let Some(e) = self.edges.iter_mut().find(|e| e.0 == from && e.1 == to) {
            e.2 += k;
        } else {
            self.edges.push((from, to, k));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.edges.iter().find(|e| e.0 == from && e.1 == to).map_or(0.0, |e| e.2)
    }

    /// Incoming neighbor set `N_i` (nodes with a positive weight into `i`).
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().filter(|e| e.1 == i && e.2 > 0.0).map(|e| e.0).collect();
        v.sort_unstable();
        v
    }
}

/// Graph Laplacian: `L_ii = Σ_j K_ji`, `L_ij = −K_ji`.
///
/// The diagonal is the negated sum of the row's off-diagonal entries taken
/// in column order, so each row adds up to exactly zero in that order.
pub fn laplacian(graph: &CouplingGraph) -> DMatrix<f64> {
    let n = graph.len();
    let mut l = DMatrix::zeros(n, n);
    for &(j, i, k) in &graph.edges {
        l[(i, j)] = -k;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    l
}

/// Eigenvalues of `(L + Lᵀ)/2`, ascending.
pub fn symmetric_part_spectrum(l: &DMatrix<f64>) -> Vec<f64> {
    let sym = (l + l.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `L + Lᵀ ≥ 0`, up to rounding.
pub fn is_balanced(graph: &CouplingGraph) -> bool {
    let l = laplacian(graph);
    let scale = l.amax().max(1.0);
    symmetric_part_spectrum(&l).first().is_none_or(|&e| e >= -1e-12 * scale)
}

/// Smallest nonzero eigenvalue of the symmetric part of L: the passivity
/// excess of the coupling.
pub fn passivity_excess(graph: &CouplingGraph) -> Option<f64> {
    let l = laplacian(graph);
    let tol = 1e-10 * l.amax().max(1.0);
    symmetric_part_spectrum(&l).into_iter().find(|e| e.abs() > tol)
}

/// Sampled closed-loop network trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrajectory {
    pub times: Vec<f64>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    states: Vec<f64>,
    outputs: Vec<f64>,
}

impl NetworkTrajectory {
    pub fn nodes(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn width(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn state(&self, k: usize, node: usize) -> &[f64] {
        let base = k * self.width() + self.offsets[node];
        &self.states[base..base + self.dims[node]]
    }

    pub fn output(&self, k: usize, node: usize) -> f64 {
        self.outputs[k * self.nodes() + node]
    }

    pub fn outputs_at(&self, k: usize) -> &[f64] {
        let n = self.nodes();
        &self.outputs[k * n..(k + 1) * n]
    }

    /// Long format `t,node,state...,output`.
    pub fn to_csv(&self) -> Csv {
        let max_dim = self.dims.iter().copied().max().unwrap_or(0);
        let mut header = vec!["t".to_string(), "node".to_string()];
        header.extend((0..max_dim).map(|d| format!("x{d}")));
        header.push("output".to_string());
        let mut csv = Csv::new(&header);
        for k in 0..self.len() {
            for node in 0..self.nodes() {
                let mut row = vec![Cell::Num(self.times[k]), Cell::Int(node as i64)];
                let s = self.state(k, node);
                row.extend((0..max_dim).map(|d| s.get(d).map_or(Cell::Text(String::new()), |&v| Cell::Num(v))));
                row.push(Cell::Num(self.output(k, node)));
                csv.row(row);
            }
        }
        csv
    }
}

/// Integrates `ẋ_i = F(x_i) + G(x_i)u_i`, `u = −L y`, by RK4 with the
/// coupling evaluated at every stage, keeping every `stride`-th grid point
/// (and the final one).
pub fn simulate_diffusive(
    models: &[&dyn OscillatorModel],
    graph: &CouplingGraph,
    x0: &[Vec<f64>],
    t_span: (f64, f64),
    step: f64,
    stride: usize,
) -> Result<NetworkTrajectory> {
    let n = models.len();
    if n != graph.len() || x0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{n} models, {} graph nodes, {} initial states",
            graph.len(),
            x0.len()
        )));
    }
    let dims: Vec<usize> = models.iter().map(|m| m.dim()).collect();
    for (i, (d, x)) in dims.iter().zip(x0).enumerate() {
        if x.len() != *d {
            return Err(Error::InvalidArgument(format!("initial state of node {i} has wrong length")));
        }
    }
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| graph.neighbors(i).into_iter().map(|j| (j, graph.weight(j, i))).collect())
        .collect();
    let max_dim = dims.iter().copied().max().unwrap_or(0);
    let mut y = vec![0.0; n];
    let mut gbuf = vec![0.0; max_dim];
    let field = |_t: f64, x: &[f64], dx: &mut [f64]| {
        for i in 0..n {
            y[i] = models[i].output(&x[offsets[i]..offsets[i] + dims[i]]);
        }
        for i in 0..n {
            let xi = &x[offsets[i]..offsets[i] + dims[i]];
            let dxi = &mut dx[offsets[i]..offsets[i] + dims[i]];
            models[i].drift(xi, dxi);
            if adjacency[i].is_empty() {
                continue;
            }
            let u: f64 = adjacency[i].iter().map(|&(j, k)| k * (y[j] - y[i])).sum();
            let g = &mut gbuf[..dims[i]];
            models[i].input_gain(xi, g);
            for (d, gv) in dxi.iter_mut().zip(g.iter()) {
                *d += gv * u;
            }
        }
    };
    let flat: Vec<f64> = x0.iter().flatten().copied().collect();
    let traj = integrate(field, &flat, t_span, step)?;
    let stride = stride.max(1);
    let last = traj.len() - 1;
    let keep: Vec<usize> = (0..traj.len()).filter(|k| k % stride == 0 || *k == last).collect();
    let mut times = Vec::with_capacity(keep.len());
    let mut states = Vec::with_capacity(keep.len() * flat.len());
    let mut outputs = Vec::with_capacity(keep.len() * n);
    for &k in &keep {
        let s = traj.state(k);
        times.push(traj.times()[k]);
        states.extend_from_slice(s);
        for i in 0..n {
            outputs.push(models[i].output(&s[offsets[i]..offsets[i] + dims[i]]));
        }
    }
    Ok(NetworkTrajectory {
        times,
        dims,
        offsets,
        states,
        outputs,
    })
}

/// `max_{i,j} |y_i − y_j|` at every sample.
pub fn output_sync_metric(traj: &NetworkTrajectory) -> Vec<f64> {
    (0..traj.len())
        .map(|k| {
            let y = traj.outputs_at(k);
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .collect()
}

/// Per-sample values of the incremental certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSample {
    pub t: f64,
    /// `V = ½‖e‖²`, which is also the incremental storage `ΔS`.
    pub v: f64,
    pub v_dot: f64,
    /// `V̇ − (μ − 2K) e_x²`.
    pub lyapunov_residual: f64,
    /// `Δ̇S − (μ Δy² + Δu Δy)`, the open-system dissipation inequality.
    pub supply_residual: f64,
    /// `Δ̇S − (μ − 2K) Δy²` after substituting `Δu = −2K Δy`.
    pub passivity_residual: f64,
    /// Largest eigenvalue of the symmetric Jacobian part at each node.
    pub jacobian_max_eig: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mu: f64,
    pub k: f64,
    /// `μ − 2K`; negative means the sufficient conditions apply.
    pub margin: f64,
    /// Set when `2K ≤ μ`: the inequalities then give no decay bound, which
    /// is not evidence of instability.
    pub inconclusive: bool,
    pub balanced: bool,
    pub max_lyapunov_residual: f64,
    pub max_supply_residual: f64,
    pub max_passivity_residual: f64,
    pub max_jacobian_eig: f64,
    /// Earliest sample time after which `V` never increases.
    pub v_monotone_from: Option<f64>,
    pub samples: Vec<CertificateSample>,
}

impl CertificateReport {
    pub fn inequalities_hold(&self, tol: f64) -> bool {
        self.max_lyapunov_residual <= tol && self.max_passivity_residual <= tol && self.max_supply_residual <= tol
    }
}

fn vdp_circuit_field(mu: f64, x: &[f64], u: f64) -> [f64; 2] {
    [-x[1] + mu * (x[0] - x[0].powi(3) / 3.0) + u, x[0]]
}

fn sym2_max_eig(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // symmetric part [[a, (b+c)/2], [(b+c)/2, d]]
    let off = 0.5 * (b + c);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + off * off).sqrt();
    mean + rad
}

/// Incremental Lyapunov, passivity and Jacobian diagnostics along a
/// two-node van der Pol circuit trajectory with symmetric resistor gain `k`.
///
/// Derivatives are evaluated from the closed-loop vector field.
pub fn incremental_certificates(traj: &NetworkTrajectory, mu: f64, k: f64) -> Result<CertificateReport> {
    if traj.nodes() != 2 || traj.dims.iter().any(|&d| d != 2) {
        return Err(Error::Precondition(
            "certificates need exactly two 2-state van der Pol nodes".into(),
        ));
    }
    let mut samples = Vec::with_capacity(traj.len());
    for idx in 0..traj.len() {
        let x1 = traj.state(idx, 0);
        let x2 = traj.state(idx, 1);
        let u1 = k * (x2[0] - x1[0]);
        let u2 = k * (x1[0] - x2[0]);
        let f1 = vdp_circuit_field(mu, x1, u1);
        let f2 = vdp_circuit_field(mu, x2, u2);
        let e = [x1[0] - x2[0], x1[1] - x2[1]];
        let e_dot = [f1[0] - f2[0], f1[1] - f2[1]];
        let v = 0.5 * (e[0] * e[0] + e[1] * e[1]);
        let v_dot = e[0] * e_dot[0] + e[1] * e_dot[1];
        let dy = e[0];
        let du = u1 - u2;
        let jac = |x: &[f64]| sym2_max_eig(mu - 2.0 * k - mu * x[0] * x[0], -1.0, 1.0, 0.0);
        samples.push(CertificateSample {
            t: traj.times[idx],
            v,
            v_dot,
            lyapunov_residual: v_dot - (mu - 2.0 * k) * e[0] * e[0],
            supply_residual: v_dot - (mu * dy * dy + du * dy),
            passivity_residual: v_dot - (mu - 2.0 * k) * dy * dy,
            jacobian_max_eig: [jac(x1), jac(x2)],
        });
    }
    let max_of = |f: &dyn Fn(&CertificateSample) -> f64| samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let mut v_monotone_from = None;
    for idx in (0..samples.len()).rev() {
        if idx + 1 < samples.len() && samples[idx + 1].v > samples[idx].v {
            break;
        }
        v_monotone_from = Some(samples[idx].t);
    }
    Ok(CertificateReport {
        mu,
        k,
        margin: mu - 2.0 * k,
        inconclusive: 2.0 * k <= mu,
        balanced: is_balanced(&CouplingGraph::pair(k)?),
        max_lyapunov_residual: max_of(&|s| s.lyapunov_residual),
        max_supply_residual: max_of(&|s| s.supply_residual),
        max_passivity_residual: max_of(&|s| s.passivity_residual),
        max_jacobian_eig: max_of(&|s| s.jacobian_max_eig[0].max(s.jacobian_max_eig[1])),
        v_monotone_from,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_final;
    use crate::oscillators::VanDerPolCircuit;

    #[test]
    fn pair_laplacian() {
        let l = laplacian(&CouplingGraph::pair(0.7).unwrap());
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[0.7, -0.7, -0.7, 0.7]));
    }

    #[test]
    fn directed_chain_laplacian() {
        let mut g = CouplingGraph::new(3);
        g.add_edge(0, 1, 1.0).unwrap();
        g.add_edge(1, 2, 2.0).unwrap();
        let l = laplacian(&g);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -2.0, 2.0]);
        assert_eq!(l, expected);
        assert_eq!(g.neighbors(2), vec![1]);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = CouplingGraph::new(2);
        assert!(g.add_edge(0, 0, 1.0).is_err());
        assert!(g.add_edge(0, 1, -1.0).is_err());
        assert!(g.add_edge(0, 2, 1.0).is_err());
    }

    #[test]
    fn pair_passivity_excess_is_two_k() {
        let g = CouplingGraph::pair(0.35).unwrap();
        assert!((passivity_excess(&g).unwrap() - 0.7).abs() < 1e-12);
        assert!(is_balanced(&g));
    }

    #[test]
    fn resistor_pair_synchronizes() {
        let m = VanDerPolCircuit { mu: 1.0 };
        let models: [&dyn OscillatorModel; 2] = [&m, &m];
        let g = CouplingGraph::pair(1.0).unwrap();
        let traj = simulate_diffusive(&models, &g, &[vec![1.0, 0.5], vec![-1.5, 0.2]], (0.0, 100.0), 1e-3, 100).unwrap();
        let sync = output_sync_metric(&traj);
        assert!(*sync.last().unwrap() <= 1e-6);
        let rep = incremental_certificates(&traj, 1.0, 1.0).unwrap();
        assert!(rep.inequalities_hold(1e-9));
        assert!(!rep.inconclusive);
        assert!(rep.max_jacobian_eig <= 1e-12);
    }

    #[test]
    fn weak_resistor_is_inconclusive() {
        let m = VanDerPolCircuit { mu: 1.0 };
        let models: [&dyn OscillatorModel; 2] = [&m, &m];
        let g = CouplingGraph::pair(0.4).unwrap();
        let traj = simulate_diffusive(&models, &g, &[vec![1.0, 0.5], vec![-1.5, 0.2]], (0.0, 10.0), 1e-3, 100).unwrap();
        let rep = incremental_certificates(&traj, 1.0, 0.4).unwrap();
        assert!(rep.inconclusive);
        assert!(rep.margin > 0.0);
    }

    #[test]
    fn zero_error_certificate() {
        let m = VanDerPolCircuit { mu: 1.0 };
        let models: [&dyn OscillatorModel; 2] = [&m, &m];
        let g = CouplingGraph::pair(1.0).unwrap();
        let traj = simulate_diffusive(&models, &g, &[vec![1.0, 0.5], vec![1.0, 0.5]], (0.0, 20.0), 1e-3, 50).unwrap();
        let rep = incremental_certificates(&traj, 1.0, 1.0).unwrap();
        assert!(rep.samples.iter().all(|s| s.v == 0.0 && s.lyapunov_residual.abs() <= 1e-12));
    }

    #[test]
    fn uncoupled_nodes_match_single_runs() {
        let m = VanDerPolCircuit { mu: 0.8 };
        let models: [&dyn OscillatorModel; 2] = [&m, &m];
        let g = CouplingGraph::pair(0.0).unwrap();
        let x0 = [vec![0.3, -0.1], vec![-1.2, 0.9]];
        let traj = simulate_diffusive(&models, &g, &x0, (0.0, 7.0), 1e-2, 1).unwrap();
        for (i, x) in x0.iter().enumerate() {
            let solo = integrate_final(|_t, s: &[f64], d: &mut [f64]| m.drift(s, d), x, (0.0, 7.0), 1e-2).unwrap();
            assert_eq!(traj.state(traj.len() - 1, i), solo.as_slice());
        }
    }

    #[test]
    fn antiphase_metric() {
        let traj = NetworkTrajectory {
            times: (0..100).map(|k| k as f64 * 0.1).collect(),
            dims: vec![1, 1],
            offsets: vec![0, 1],
            states: vec![0.0; 200],
            outputs: (0..100)
                .flat_map(|k| {
                    let t = k as f64 * 0.1 + 0.05;
                    [t.sin(), (t + std::f64::consts::PI).sin()]
                })
                .collect(),
        };
        let m = output_sync_metric(&traj);
        let max = m.iter().copied().fold(0.0, f64::max);
        assert!(max <= 2.0 && max > 1.99);
    }
}
