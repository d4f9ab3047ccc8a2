use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::sync::Arc;

use synclab_core::continuum::{simulate_continuum, stationary_density, tv_distance, ContinuumOptions, PhaseDensity};
use synclab_core::diffusive::{incremental_certificates, output_sync_metric, simulate_diffusive, CouplingGraph};
use synclab_core::io::{Cell, Csv};
use synclab_core::kick::{contraction_certificate, simulate_kick, simulate_kick_dense, KickMode, KickNetwork, StopRule};
use synclab_core::numerics::Direction;
use synclab_core::oscillators::{
    integrate_and_fire, lif_field, qif_field, vdp_full, vdp_quasiharmonic_phase, vdp_relaxation_phase, IntegrateAndFireModel,
    OscillatorModel, PhaseOscillator, RadialOscillator, ScalarFn, Section, VanDerPolCircuit, QIF_INTERVAL,
};
use synclab_core::phase::wrap_pi;
use synclab_core::phase_models::{
    averaged_coupling_diffusive, averaged_coupling_impulsive, order_parameter, rotating_frame_certificate, simulate_phase_model,
    time_averaged_coupling_diffusive, vdp_circuit_phase, CouplingFunction,
};
use synclab_core::phase_reduction::{find_limit_cycle, finite_prc_if, finite_prc_numeric, iprc_numeric, uniform_grid, ReductionOptions};
use synclab_core::TWO_PI;

use crate::scenario::*;
use crate::{CliError, Outputs};

type Res<T> = Result<T, CliError>;

/// Grid on which scalar response curves are tabulated for output.
const CURVE_POINTS: usize = 256;

/// Runs one scenario, writing artifacts as they become available, and
/// returns the manifest summary.
pub fn execute(scenario: &Scenario, out: &mut Outputs) -> Res<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed());
    match scenario {
        Scenario::Diffusive(s) => diffusive(s, &mut rng, out),
        Scenario::Kick(s) => kick(s, &mut rng, out),
        Scenario::Continuum(s) => continuum(s, out),
        Scenario::PhaseModel(s) => phase_model(s, &mut rng, out),
        Scenario::Prc(s) => prc(s, out),
        Scenario::Certificate(s) => certificate(s, &mut rng, out),
    }
}

fn schema_err(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn smooth_model(spec: &ModelSpec) -> Res<Box<dyn OscillatorModel>> {
    Ok(match *spec {
        ModelSpec::Vdp { mu } => Box::new(vdp_full(mu)?),
        ModelSpec::VdpCircuit { mu } => Box::new(VanDerPolCircuit { mu }),
        ModelSpec::Radial { rate } => Box::new(RadialOscillator { rate }),
        ModelSpec::Lif { drive, leak } => Box::new(IntegrateAndFireModel::new(lif_field(drive, -leak), 0.0, 1.0)?),
        ModelSpec::Qif { s } => Box::new(IntegrateAndFireModel::new(qif_field(s), QIF_INTERVAL.0, QIF_INTERVAL.1)?),
        ModelSpec::VdpRelaxation | ModelSpec::VdpQuasiharmonic { .. } => {
            return Err(schema_err(
                "model: reduced van der Pol models have no full state; use `vdp` or `vdp_circuit`",
            ))
        }
    })
}

fn phase_oscillator(spec: &ModelSpec) -> Res<PhaseOscillator> {
    Ok(match *spec {
        ModelSpec::Lif { drive, leak } => integrate_and_fire(lif_field(drive, -leak), 0.0, 1.0)?,
        ModelSpec::Qif { s } => integrate_and_fire(qif_field(s), QIF_INTERVAL.0, QIF_INTERVAL.1)?,
        ModelSpec::VdpRelaxation => vdp_relaxation_phase()?,
        ModelSpec::VdpQuasiharmonic { mu } => vdp_quasiharmonic_phase(mu)?,
        _ => {
            return Err(schema_err(
                "model: needs a scalar phase description (`lif`, `qif`, `vdp_relaxation` or `vdp_quasiharmonic`)",
            ))
        }
    })
}

/// Jump points of an oscillator's iPRC, including the wrap at 0.
fn iprc_jumps(osc: &PhaseOscillator) -> Vec<f64> {
    let mut d = osc.discontinuities().to_vec();
    if !d.contains(&0.0) && (osc.iprc(0.0) - osc.iprc(TWO_PI)).abs() > 1e-12 * osc.iprc(0.0).abs().max(1.0) {
        d.push(0.0);
    }
    d
}

fn polynomial(coefficients: &[f64], reversed: bool) -> ScalarFn {
    let c = coefficients.to_vec();
    Arc::new(move |theta: f64| {
        let v = if reversed { TWO_PI - theta } else { theta };
        c.iter().rev().fold(0.0, |acc, &ck| acc * v + ck)
    })
}

/// Starting state near the model's orbit and its zero-phase section.
fn cycle_setup(spec: &ModelSpec) -> (Vec<f64>, Section) {
    let rising = |component| Section {
        component,
        level: 0.0,
        direction: Direction::Rising,
    };
    match spec {
        ModelSpec::Vdp { .. } => (vec![0.0, 2.0], rising(0)),
        ModelSpec::VdpCircuit { .. } => (vec![0.0, -2.0], rising(0)),
        ModelSpec::Radial { .. } => (vec![0.0, 1.0], rising(0)),
        ModelSpec::Lif { .. } => (vec![0.0], rising(0)),
        _ => (vec![QIF_INTERVAL.0], rising(0)),
    }
}

fn graph(spec: &CouplingSpec, n: usize) -> Res<CouplingGraph> {
    Ok(match spec {
        CouplingSpec::AllToAll { k } => CouplingGraph::all_to_all(n, *k)?,
        CouplingSpec::Ring { k } => {
            let mut g = CouplingGraph::new(n);
            if n == 2 {
                g = CouplingGraph::pair(*k)?;
            } else if n > 2 {
                for i in 0..n {
                    g.add_edge(i, (i + 1) % n, *k)?;
                    g.add_edge((i + 1) % n, i, *k)?;
                }
            }
            g
        }
        CouplingSpec::Edges { edges } => {
            let mut g = CouplingGraph::new(n);
            for &(a, b, k) in edges {
                g.add_edge(a, b, k)?;
            }
            g
        }
    })
}

fn random_states(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..TWO_PI)).collect()
}

fn curve_csv(f: &dyn Fn(f64) -> f64) -> Csv {
    let mut csv = Csv::new(&["theta", "value", "valid"]);
    for theta in uniform_grid(CURVE_POINTS) {
        let v = f(theta);
        csv.row([theta.into(), v.into(), Cell::Bool(v.is_finite())]);
    }
    csv
}

fn two_column(header: [&str; 2], rows: impl IntoIterator<Item = (f64, f64)>) -> Csv {
    let mut csv = Csv::new(&header);
    for (a, b) in rows {
        csv.row([Cell::Num(a), Cell::Num(b)]);
    }
    csv
}

fn diffusive(s: &DiffusiveScenario, rng: &mut ChaCha8Rng, out: &mut Outputs) -> Res<Value> {
    let model = smooth_model(&s.model)?;
    let x0 = match &s.initial {
        Some(x) => {
            if x.iter().any(|v| v.len() != model.dim()) {
                return Err(schema_err(format!("initial: every state needs {} components", model.dim())));
            }
            x.clone()
        }
        None => random_states(rng, s.nodes, model.dim()),
    };
    let g = graph(&s.coupling, s.nodes)?;
    let models: Vec<&dyn OscillatorModel> = vec![model.as_ref(); s.nodes];
    let traj = simulate_diffusive(&models, &g, &x0, (0.0, s.t_end), s.step, s.stride)?;
    out.csv("trajectory.csv", &traj.to_csv())?;
    let sync = output_sync_metric(&traj);
    out.csv(
        "sync_metric.csv",
        &two_column(["t", "sync"], traj.times.iter().copied().zip(sync.iter().copied())),
    )?;
    let mut summary = json!({
        "samples": traj.len(),
        "final_time": traj.times.last(),
        "final_sync": sync.last(),
    });
    let circuit_pair = matches!(s.model, ModelSpec::VdpCircuit { .. }) && s.nodes == 2;
    if circuit_pair {
        let chi = (0..traj.len()).map(|k| {
            let d = wrap_pi(vdp_circuit_phase(traj.state(k, 0)) - vdp_circuit_phase(traj.state(k, 1)));
            (traj.times[k], d)
        });
        out.csv("phase_difference.csv", &two_column(["t", "chi"], chi))?;
    }
    if s.certificate {
        let ModelSpec::VdpCircuit { mu } = s.model else {
            return Err(schema_err("certificate: needs the `vdp_circuit` model"));
        };
        let k = g.weight(0, 1);
        if !circuit_pair || k != g.weight(1, 0) {
            return Err(schema_err("certificate: needs two nodes with symmetric coupling"));
        }
        let rep = incremental_certificates(&traj, mu, k)?;
        out.json("certificate.json", &rep)?;
        summary["certificate"] = json!({
            "margin": rep.margin,
            "inconclusive": rep.inconclusive,
            "max_lyapunov_residual": rep.max_lyapunov_residual,
            "v_monotone_from": rep.v_monotone_from,
        });
    }
    Ok(summary)
}

fn kick_prc(spec: &PrcSpec) -> Res<(f64, ScalarFn)> {
    Ok(match spec {
        PrcSpec::Model { model, eps } => {
            let osc = phase_oscillator(model)?;
            (osc.omega(), finite_prc_if(&osc, *eps)?)
        }
        PrcSpec::Polynomial {
            coefficients,
            reversed,
            omega,
        } => (*omega, polynomial(coefficients, *reversed)),
    })
}

fn kick_mode(m: Mode) -> KickMode {
    match m {
        Mode::Excitatory => KickMode::Excitatory,
        Mode::Inhibitory => KickMode::Inhibitory,
    }
}

fn members(m: &[usize]) -> String {
    m.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn kick(s: &KickScenario, rng: &mut ChaCha8Rng, out: &mut Outputs) -> Res<Value> {
    let (omega, prc) = kick_prc(&s.prc)?;
    let mode = kick_mode(s.mode);
    out.csv("prc.csv", &curve_csv(&*prc))?;
    let phases = match &s.phases {
        Some(p) => p.clone(),
        None => random_phases(rng, s.oscillators.unwrap_or(0)),
    };
    let n = phases.len();
    let net = KickNetwork::new(&phases, omega, prc.clone(), mode)?;
    let stop = StopRule {
        t_end: s.stop.t_end,
        max_firings: s.stop.max_firings,
        until_sync: s.stop.until_sync,
    };
    let (fin, log) = simulate_kick(&net, stop)?;
    out.csv("events.csv", &log.to_csv(n))?;
    let mut firings = Csv::new(&["index", "time", "members"]);
    let mut raster = Csv::new(&["t", "oscillator"]);
    for (i, e) in log.events.iter().enumerate() {
        firings.row([Cell::Int(i as i64), Cell::Num(e.time), Cell::Text(members(&e.firer_members))]);
        for &m in &e.firer_members {
            raster.row([Cell::Num(e.time), Cell::Int(m as i64)]);
        }
    }
    out.csv("firings.csv", &firings)?;
    out.csv("raster.csv", &raster)?;
    let mut summary = json!({
        "oscillators": n,
        "omega": omega,
        "firings": log.len(),
        "final_time": log.events.last().map(|e| e.time),
        "clusters": fin.clusters().len(),
        "synchronized": fin.clusters().len() == 1,
        "order_preserved": log.events.iter().all(|e| e.order_preserved),
    });
    if let Some(dt) = s.dense_dt {
        let dense = simulate_kick_dense(&phases, omega, &*prc, mode, dt, log.len());
        let mut csv = Csv::new(&["index", "time", "members"]);
        for (i, f) in dense.iter().enumerate() {
            csv.row([Cell::Int(i as i64), Cell::Num(f.time), Cell::Text(members(&f.members))]);
        }
        out.csv("dense_firings.csv", &csv)?;
        let max_dt = log
            .events
            .iter()
            .zip(&dense)
            .map(|(e, f)| (e.time - f.time).abs())
            .fold(0.0, f64::max);
        let same_members = dense.len() == log.len() && log.events.iter().zip(&dense).all(|(e, f)| e.firer_members == f.members);
        summary["dense"] = json!({"firings": dense.len(), "max_time_difference": max_dt, "same_members": same_members});
    }
    Ok(summary)
}

fn response(spec: &ResponseSpec) -> Res<ScalarFn> {
    Ok(match *spec {
        ResponseSpec::DecreasingQuadratic { a, b } => Arc::new(move |t: f64| a + b * ((TWO_PI - t) / TWO_PI).powi(2)),
        ResponseSpec::Exponential { a, b } => Arc::new(move |t: f64| a * (b * t).exp()),
        ResponseSpec::Constant { c } => Arc::new(move |_| c),
        ResponseSpec::Model { ref model } => phase_oscillator(model)?.iprc_fn(),
    })
}

fn density(spec: &DensitySpec, m: usize) -> Res<PhaseDensity> {
    Ok(match *spec {
        DensitySpec::Uniform => PhaseDensity::uniform(m)?,
        DensitySpec::Cosine { amplitude, harmonic } => PhaseDensity::from_fn(m, |t| 1.0 + amplitude * (harmonic * t).cos())?,
        DensitySpec::Bump { center, width, floor } => PhaseDensity::from_fn(m, |t| (-(t - center).powi(2) / width).exp() + floor)?,
    })
}

fn continuum(s: &ContinuumScenario, out: &mut Outputs) -> Res<Value> {
    let z = response(&s.response)?;
    let rho0 = density(&s.initial, s.cells)?;
    let opts = ContinuumOptions {
        omega: s.omega,
        k: s.k,
        t_end: s.t_end,
        cfl: s.cfl,
        snapshot_every: s.snapshot_every,
    };
    let run = simulate_continuum(&*z, &rho0, &opts)?;
    out.csv("densities.csv", &run.densities_csv())?;
    out.csv("flux.csv", &run.flux_csv())?;
    let mut summary = json!({
        "steps": run.steps,
        "snapshots": run.snapshots.len(),
        "max_mass_error": run.max_mass_error,
        "blow_up": run.blow_up,
    });
    match stationary_density(&*z, s.omega, s.k, s.cells) {
        Ok((star, j)) => {
            out.csv(
                "stationary.csv",
                &two_column(["theta", "rho"], (0..star.cells()).map(|i| (star.center(i), star.values()[i]))),
            )?;
            let mut tv = Csv::new(&["t", "tv"]);
            let mut last = None;
            for (t, d) in &run.snapshots {
                let v = tv_distance(d, &star)?;
                tv.row([Cell::Num(*t), Cell::Num(v)]);
                last = Some(v);
            }
            out.csv("tv.csv", &tv)?;
            summary["stationary_flux"] = json!(j);
            summary["final_tv"] = json!(last);
        }
        Err(e) => summary["stationary"] = json!(e.to_string()),
    }
    Ok(summary)
}

/// Γ together with the natural frequency it belongs to.
fn gamma(spec: &GammaSpec, n: usize) -> Res<(CouplingFunction, f64)> {
    let z = |t: f64| 0.5 * t.cos();
    let y = |t: f64| 2.0 * t.sin();
    Ok(match spec {
        GammaSpec::Kuramoto { k } => (CouplingFunction::kuramoto(*k, n), 1.0),
        GammaSpec::DiffusiveVdp { eps_k, normalization } => {
            let g = match normalization {
                Normalization::TimeAverage => time_averaged_coupling_diffusive(&z, &[], &y, &y, *eps_k, 1.0)?,
                Normalization::Literal => averaged_coupling_diffusive(&z, &[], &y, &y, *eps_k, 1.0)?,
            };
            (g, 1.0)
        }
        GammaSpec::Impulsive { model, eps_k } => {
            let osc = phase_oscillator(model)?;
            (
                averaged_coupling_impulsive(osc.iprc_fn(), iprc_jumps(&osc), *eps_k, osc.period())?,
                osc.omega(),
            )
        }
        GammaSpec::Polynomial {
            coefficients,
            reversed,
            jump_at_zero,
        } => {
            let disc = if *jump_at_zero { vec![0.0] } else { Vec::new() };
            (CouplingFunction::analytic(polynomial(coefficients, *reversed), disc), 1.0)
        }
    })
}

fn phase_model(s: &PhaseModelScenario, rng: &mut ChaCha8Rng, out: &mut Outputs) -> Res<Value> {
    let init = match &s.phases {
        Some(p) => p.clone(),
        None => random_phases(rng, s.oscillators.unwrap_or(0)),
    };
    let n = init.len();
    let (g, natural) = gamma(&s.coupling, n)?;
    let omega = s.omega.unwrap_or(natural);
    out.csv("gamma.csv", &curve_csv(&|t| g.eval(t)))?;
    let traj = simulate_phase_model(&g, omega, &init, s.t_end, s.step, s.stride)?;
    out.csv("phases.csv", &traj.to_csv())?;
    out.csv("order.csv", &traj.order_csv())?;
    if n == 2 {
        let chi = (0..traj.len()).map(|k| (traj.times[k], wrap_pi(traj.phases(k)[0] - traj.phases(k)[1])));
        out.csv("phase_difference.csv", &two_column(["t", "chi"], chi))?;
    }
    let (r, psi) = order_parameter(traj.last_phases());
    Ok(json!({
        "oscillators": n,
        "omega": omega,
        "samples": traj.len(),
        "final_r": r,
        "final_psi": psi,
    }))
}

fn prc(s: &PrcScenario, out: &mut Outputs) -> Res<Value> {
    if let ModelSpec::VdpRelaxation | ModelSpec::VdpQuasiharmonic { .. } = s.model {
        let osc = phase_oscillator(&s.model)?;
        let mut csv = Csv::new(&["theta", "value", "valid"]);
        for theta in uniform_grid(s.points) {
            csv.row([theta.into(), osc.iprc(theta).into(), Cell::Bool(true)]);
        }
        out.csv("iprc.csv", &csv)?;
        if let Some(eps) = s.eps {
            let z = finite_prc_if(&osc, eps)?;
            let mut csv = Csv::new(&["theta", "value", "valid"]);
            for theta in uniform_grid(s.points) {
                csv.row([theta.into(), z(theta).into(), Cell::Bool(true)]);
            }
            out.csv("prc.csv", &csv)?;
        }
        return Ok(json!({"period": osc.period(), "omega": osc.omega(), "method": "reduced"}));
    }
    let model = smooth_model(&s.model)?;
    let opts = ReductionOptions {
        step: s.step,
        ..ReductionOptions::default()
    };
    let (guess, section) = cycle_setup(&s.model);
    let cycle = find_limit_cycle(model.as_ref(), &guess, section, &opts)?;
    let mut header = vec!["theta".to_string()];
    header.extend((0..cycle.dim()).map(|k| format!("x{k}")));
    let mut csv = Csv::new(&header);
    for i in 0..cycle.len() {
        let mut row = vec![Cell::Num(cycle.sample_phase(i))];
        row.extend(cycle.sample(i).iter().map(|&v| Cell::Num(v)));
        csv.row(row);
    }
    out.csv("cycle.csv", &csv)?;
    let iprc = iprc_numeric(model.as_ref(), &cycle, s.points, &opts)?;
    out.csv("iprc.csv", &iprc.to_csv())?;
    let mut summary = json!({
        "period": cycle.period,
        "omega": cycle.omega,
        "closure_error": cycle.closure_error,
        "iprc_valid": iprc.valid.iter().filter(|&&v| v).count(),
        "method": "numeric",
    });
    if let Some(eps) = s.eps {
        let table = finite_prc_numeric(model.as_ref(), &cycle, eps, s.points, &opts)?;
        out.csv("prc.csv", &table.to_csv())?;
        summary["prc_valid"] = json!(table.valid.iter().filter(|&&v| v).count());
    }
    Ok(summary)
}

fn certificate(s: &CertificateScenario, rng: &mut ChaCha8Rng, out: &mut Outputs) -> Res<Value> {
    let seed = s.seed.unwrap_or(0);
    match &s.certificate {
        CertificateSpec::FiringMap {
            prc,
            mode,
            oscillators,
            pairs,
        } => {
            let (_, z) = kick_prc(prc)?;
            let rep = contraction_certificate(&*z, kick_mode(*mode), *oscillators, *pairs, seed)?;
            out.json("certificate.json", &rep)?;
            Ok(json!({"verdict": rep.verdict, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio, "skipped": rep.skipped}))
        }
        CertificateSpec::RotatingFrame {
            coupling,
            oscillators,
            pairs,
            horizon,
            step,
        } => {
            let (g, omega) = gamma(coupling, *oscillators)?;
            let horizon = horizon.unwrap_or(5.0 * TWO_PI / omega);
            let rep = rotating_frame_certificate(&g, *oscillators, *pairs, seed, horizon, *step)?;
            out.json("certificate.json", &rep)?;
            Ok(json!({"verdict": rep.verdict, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio, "collided": rep.collided}))
        }
        CertificateSpec::Incremental {
            mu,
            k,
            initial,
            t_end,
            step,
            stride,
        } => {
            let m = VanDerPolCircuit { mu: *mu };
            let x0 = initial.clone().unwrap_or_else(|| random_states(rng, 2, 2));
            let models: [&dyn OscillatorModel; 2] = [&m, &m];
            let traj = simulate_diffusive(&models, &CouplingGraph::pair(*k)?, &x0, (0.0, *t_end), *step, *stride)?;
            out.csv("trajectory.csv", &traj.to_csv())?;
            let rep = incremental_certificates(&traj, *mu, *k)?;
            out.json("certificate.json", &rep)?;
            Ok(json!({
                "margin": rep.margin,
                "inconclusive": rep.inconclusive,
                "max_lyapunov_residual": rep.max_lyapunov_residual,
                "max_passivity_residual": rep.max_passivity_residual,
                "v_monotone_from": rep.v_monotone_from,
            }))
        }
    }
}
