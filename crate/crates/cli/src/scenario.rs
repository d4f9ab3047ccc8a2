//! Scenario files: JSON documents tagged by `kind`.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn two_nodes() -> usize {
    2
}
fn fine_step() -> f64 {
    1e-3
}
fn coarse_step() -> f64 {
    1e-2
}
fn stride_100() -> usize {
    100
}
fn stride_10() -> usize {
    10
}
fn cells_512() -> usize {
    512
}
fn cfl() -> f64 {
    0.9
}
fn points_64() -> usize {
    64
}
fn pairs_1000() -> usize {
    1000
}
fn pairs_500() -> usize {
    500
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Diffusive(DiffusiveScenario),
    Kick(KickScenario),
    Continuum(ContinuumScenario),
    PhaseModel(PhaseModelScenario),
    Prc(PrcScenario),
    Certificate(CertificateScenario),
}

/// Oscillator models. Smooth models integrate the full state; `lif`,
/// `qif`, `vdp_relaxation` and `vdp_quasiharmonic` also have exact or
/// reduced phase descriptions.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `ẍ − μ(1 − x²)ẋ + x = u`, state `(x, ẋ)`.
    Vdp {
        mu: f64,
    },
    /// `ẋ = −w + μ(x − x³/3) + u`, `ẇ = x`.
    VdpCircuit {
        mu: f64,
    },
    /// Unit-circle normal form with radial contraction.
    Radial {
        #[serde(default = "one")]
        rate: f64,
    },
    /// `ẋ = drive − leak·x` on `[0, 1]` with reset to 0.
    Lif {
        #[serde(default = "two")]
        drive: f64,
        #[serde(default = "one")]
        leak: f64,
    },
    /// `ẋ = s + x²` on `[−1, 1]`.
    Qif {
        #[serde(default = "one")]
        s: f64,
    },
    VdpRelaxation,
    VdpQuasiharmonic {
        mu: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrcSpec {
    /// Finite PRC of an impulse of amplitude `eps` on a scalar model.
    Model { model: ModelSpec, eps: f64 },
    /// `Σ c_k v^k` with `v = θ`, or `v = 2π − θ` when `reversed`; `omega`
    /// is the free-running frequency.
    Polynomial {
        coefficients: Vec<f64>,
        #[serde(default)]
        reversed: bool,
        #[serde(default = "one")]
        omega: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Excitatory,
    Inhibitory,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "topology", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    AllToAll {
        k: f64,
    },
    Ring {
        k: f64,
    },
    /// Directed edges `[from, to, weight]`.
    Edges {
        edges: Vec<(usize, usize, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DiffusiveScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub model: ModelSpec,
    #[serde(default = "two_nodes")]
    pub nodes: usize,
    pub coupling: CouplingSpec,
    /// One state per node; drawn from the seed when absent.
    pub initial: Option<Vec<Vec<f64>>>,
    pub t_end: f64,
    #[serde(default = "fine_step")]
    pub step: f64,
    #[serde(default = "stride_100")]
    pub stride: usize,
    /// Incremental Lyapunov and passivity diagnostics (two `vdp_circuit`
    /// nodes with symmetric coupling).
    #[serde(default)]
    pub certificate: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub t_end: Option<f64>,
    pub max_firings: Option<usize>,
    #[serde(default)]
    pub until_sync: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KickScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub prc: PrcSpec,
    #[serde(default)]
    pub mode: Mode,
    /// Initial phases in `[0, 2π]`; otherwise `oscillators` phases are drawn
    /// from the seed.
    pub phases: Option<Vec<f64>>,
    pub oscillators: Option<usize>,
    pub stop: StopSpec,
    /// Also replay the run with a time-stepped simulator of this step.
    pub dense_dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseSpec {
    /// `a + b((2π − θ)/2π)²`.
    DecreasingQuadratic {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "half")]
        b: f64,
    },
    /// `a·exp(bθ)`.
    Exponential {
        a: f64,
        b: f64,
    },
    Constant {
        c: f64,
    },
    /// iPRC of a scalar model.
    Model {
        model: ModelSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// `1 + amplitude·cos(harmonic·θ)`, normalized.
    Cosine {
        amplitude: f64,
        #[serde(default = "one")]
        harmonic: f64,
    },
    /// `exp(−(θ − center)²/width) + floor`, normalized.
    Bump {
        center: f64,
        width: f64,
        floor: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ContinuumScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub response: ResponseSpec,
    pub initial: DensitySpec,
    #[serde(default = "cells_512")]
    pub cells: usize,
    #[serde(default = "one")]
    pub omega: f64,
    pub k: f64,
    pub t_end: f64,
    #[serde(default = "cfl")]
    pub cfl: f64,
    #[serde(default = "one")]
    pub snapshot_every: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Period average of the coupling term.
    #[default]
    TimeAverage,
    /// Prefactor `εK/ω` on the raw integral.
    Literal,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    /// `−(K/N) sin θ`.
    Kuramoto { k: f64 },
    /// Quasi-harmonic van der Pol circuits (`Z = ½cos`, `y = 2 sin`) with
    /// resistor gain `eps_k`.
    DiffusiveVdp {
        eps_k: f64,
        #[serde(default)]
        normalization: Normalization,
    },
    /// `(εK/T) Z` from a scalar model's iPRC.
    Impulsive { model: ModelSpec, eps_k: f64 },
    /// Polynomial Γ as for PRCs; `jump_at_zero` marks Γ(0⁺) ≠ Γ(2π⁻).
    Polynomial {
        coefficients: Vec<f64>,
        #[serde(default)]
        reversed: bool,
        #[serde(default)]
        jump_at_zero: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PhaseModelScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub coupling: GammaSpec,
    pub phases: Option<Vec<f64>>,
    pub oscillators: Option<usize>,
    /// Natural frequency; defaults to the model's for impulsive coupling
    /// and to 1 otherwise.
    pub omega: Option<f64>,
    pub t_end: f64,
    #[serde(default = "coarse_step")]
    pub step: f64,
    #[serde(default = "stride_10")]
    pub stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PrcScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub model: ModelSpec,
    #[serde(default = "points_64")]
    pub points: usize,
    /// Impulse amplitude of the finite PRC; omitted → iPRC only.
    pub eps: Option<f64>,
    #[serde(default = "fine_step")]
    pub step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateSpec {
    FiringMap {
        prc: PrcSpec,
        #[serde(default)]
        mode: Mode,
        oscillators: usize,
        #[serde(default = "pairs_1000")]
        pairs: usize,
    },
    RotatingFrame {
        coupling: GammaSpec,
        oscillators: usize,
        #[serde(default = "pairs_500")]
        pairs: usize,
        /// Defaults to five natural periods.
        horizon: Option<f64>,
        #[serde(default = "fine_step")]
        step: f64,
    },
    Incremental {
        mu: f64,
        k: f64,
        initial: Option<Vec<Vec<f64>>>,
        t_end: f64,
        #[serde(default = "fine_step")]
        step: f64,
        #[serde(default = "stride_100")]
        stride: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CertificateScenario {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub certificate: CertificateSpec,
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Diffusive(_) => "diffusive",
            Scenario::Kick(_) => "kick",
            Scenario::Continuum(_) => "continuum",
            Scenario::PhaseModel(_) => "phase_model",
            Scenario::Prc(_) => "prc",
            Scenario::Certificate(_) => "certificate",
        }
    }

    fn meta(&self) -> (&Option<String>, &Option<u64>) {
        match self {
            Scenario::Diffusive(s) => (&s.name, &s.seed),
            Scenario::Kick(s) => (&s.name, &s.seed),
            Scenario::Continuum(s) => (&s.name, &s.seed),
            Scenario::PhaseModel(s) => (&s.name, &s.seed),
            Scenario::Prc(s) => (&s.name, &s.seed),
            Scenario::Certificate(s) => (&s.name, &s.seed),
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.meta().0.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.meta().1.unwrap_or(0)
    }

    pub fn set_seed(&mut self, seed: u64) {
        let slot = match self {
            Scenario::Diffusive(s) => &mut s.seed,
            Scenario::Kick(s) => &mut s.seed,
            Scenario::Continuum(s) => &mut s.seed,
            Scenario::PhaseModel(s) => &mut s.seed,
            Scenario::Prc(s) => &mut s.seed,
            Scenario::Certificate(s) => &mut s.seed,
        };
        *slot = Some(seed);
    }

    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // errors inside tagged content carry no position; point at the named token
            if e.line() == 0 || !msg.contains(" at line ") {
                if let Some(at) = msg.split('`').nth(1).and_then(|tok| locate(text, tok)) {
                    return CliError::Schema(format!("{msg} at line {at}"));
                }
            }
            CliError::Schema(msg)
        })?;
        scenario.validate().map_err(|(field, why)| {
            let at = locate(text, field).map_or_else(String::new, |i| format!(" at line {i}"));
            CliError::Schema(format!("{}.{field}: {why}{at}", scenario.kind()))
        })?;
        Ok(scenario)
    }

    /// Semantic checks serde cannot express; errors name the offending key.
    fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        let bad = |field: &'static str, why: &'static str| Err((field, why));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            Scenario::Diffusive(s) => {
                if s.nodes < 1 {
                    return bad("nodes", "must be at least 1");
                }
                if !positive(s.t_end) {
                    return bad("t_end", "must be positive");
                }
                if !positive(s.step) {
                    return bad("step", "must be positive");
                }
                if let Some(init) = &s.initial {
                    if init.len() != s.nodes {
                        return bad("initial", "needs one state per node");
                    }
                }
            }
            Scenario::Kick(s) => {
                match (&s.phases, s.oscillators) {
                    (None, None) => return bad("phases", "give `phases` or `oscillators`"),
                    (Some(p), Some(n)) if p.len() != n => return bad("oscillators", "disagrees with the number of phases"),
                    (Some(p), _) if p.is_empty() => return bad("phases", "must not be empty"),
                    _ => {}
                }
                if s.stop.t_end.is_none() && s.stop.max_firings.is_none() && !s.stop.until_sync {
                    return bad("stop", "needs t_end, max_firings or until_sync");
                }
                if s.dense_dt.is_some_and(|d| !positive(d)) {
                    return bad("dense_dt", "must be positive");
                }
            }
            Scenario::Continuum(s) => {
                if !positive(s.t_end) {
                    return bad("t_end", "must be positive");
                }
                if !positive(s.snapshot_every) {
                    return bad("snapshot_every", "must be positive");
                }
                if !positive(s.omega) {
                    return bad("omega", "must be positive");
                }
                if s.cells < 64 {
                    return bad("cells", "must be at least 64");
                }
            }
            Scenario::PhaseModel(s) => {
                match (&s.phases, s.oscillators) {
                    (None, None) => return bad("phases", "give `phases` or `oscillators`"),
                    (Some(p), Some(n)) if p.len() != n => return bad("oscillators", "disagrees with the number of phases"),
                    (Some(p), _) if p.len() < 2 => return bad("phases", "needs at least two oscillators"),
                    (None, Some(n)) if n < 2 => return bad("oscillators", "must be at least 2"),
                    _ => {}
                }
                if !positive(s.t_end) {
                    return bad("t_end", "must be positive");
                }
                if !positive(s.step) {
                    return bad("step", "must be positive");
                }
            }
            Scenario::Prc(s) => {
                if s.points < 8 {
                    return bad("points", "must be at least 8");
                }
                if !positive(s.step) {
                    return bad("step", "must be positive");
                }
            }
            Scenario::Certificate(s) => match &s.certificate {
                CertificateSpec::FiringMap { oscillators, pairs, .. } | CertificateSpec::RotatingFrame { oscillators, pairs, .. } => {
                    if *oscillators < 2 {
                        return bad("oscillators", "must be at least 2");
                    }
                    if *pairs == 0 {
                        return bad("pairs", "must be at least 1");
                    }
                }
                CertificateSpec::Incremental { t_end, step, initial, .. } => {
                    if !positive(*t_end) || !positive(*step) {
                        return bad("t_end", "must be positive");
                    }
                    if initial.as_ref().is_some_and(|i| i.len() != 2 || i.iter().any(|x| x.len() != 2)) {
                        return bad("initial", "needs two 2-element states");
                    }
                }
            },
        }
        Ok(())
    }
}

/// 1-based line of the first occurrence of the JSON string `token`.
fn locate(text: &str, token: &str) -> Option<usize> {
    let quoted = format!("\"{token}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// JSON schema of the scenario format.
pub fn schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(Scenario)).expect("schema serializes")
}
