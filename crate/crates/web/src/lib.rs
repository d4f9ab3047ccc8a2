//! WebAssembly bindings for the browser demo. Every export returns a flat
//! `Float64Array`; the layouts are given per function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use synclab_core::kick::{simulate_kick, KickMode, KickNetwork, StopRule};
use synclab_core::oscillators::{integrate_and_fire, lif_field};
use synclab_core::phase_models::{order_parameter, simulate_phase_model, CouplingFunction};
use synclab_core::phase_reduction::{finite_prc_if, uniform_grid};
use synclab_core::TWO_PI;

/// `[θ, Z_ε(θ), ε·Z(θ)]` per grid point for the leaky integrate-and-fire
/// neuron `ẋ = drive − leak·x` on `[0, 1]`.
pub fn lif_prc_curve(drive: f64, leak: f64, eps: f64, points: usize) -> Result<Vec<f64>, String> {
    let osc = integrate_and_fire(lif_field(drive, -leak), 0.0, 1.0).map_err(|e| e.to_string())?;
    let z = finite_prc_if(&osc, eps).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * points);
    for theta in uniform_grid(points.max(2)) {
        out.extend([theta, z(theta), eps * osc.iprc(theta)]);
    }
    Ok(out)
}

/// `[t, oscillator]` per firing of a pulse-coupled LIF population started
/// from seeded random phases, until one cluster remains or the budget runs
/// out. Members of a firing cluster each get a row.
pub fn lif_raster(n: usize, eps: f64, seed: u64, max_firings: usize) -> Result<Vec<f64>, String> {
    let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).map_err(|e| e.to_string())?;
    let z = finite_prc_if(&osc, eps).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TWO_PI)).collect();
    let net = KickNetwork::new(&phases, osc.omega(), z, KickMode::Excitatory).map_err(|e| e.to_string())?;
    let stop = StopRule {
        max_firings: Some(max_firings),
        until_sync: true,
        ..Default::default()
    };
    let (_, log) = simulate_kick(&net, stop).map_err(|e| e.to_string())?;
    Ok(log
        .events
        .iter()
        .flat_map(|e| e.firer_members.iter().flat_map(move |&m| [e.time, m as f64]))
        .collect())
}

/// `[t, r]` samples of the Kuramoto order parameter for `n` oscillators
/// with gain `k` from seeded random phases.
pub fn kuramoto_order(n: usize, k: f64, seed: u64, t_end: f64) -> Result<Vec<f64>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TWO_PI)).collect();
    let traj = simulate_phase_model(&CouplingFunction::kuramoto(k, n), 1.0, &init, t_end, 0.01, 10).map_err(|e| e.to_string())?;
    Ok((0..traj.len())
        .flat_map(|i| [traj.times[i], order_parameter(traj.phases(i)).0])
        .collect())
}

#[wasm_bindgen(js_name = lifPrcCurve)]
pub fn lif_prc_curve_js(drive: f64, leak: f64, eps: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    lif_prc_curve(drive, leak, eps, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = lifRaster)]
pub fn lif_raster_js(n: usize, eps: f64, seed: u64, max_firings: usize) -> Result<Vec<f64>, JsValue> {
    lif_raster(n, eps, seed, max_firings).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = kuramotoOrder)]
pub fn kuramoto_order_js(n: usize, k: f64, seed: u64, t_end: f64) -> Result<Vec<f64>, JsValue> {
    kuramoto_order(n, k, seed, t_end).map_err(|e| JsValue::from_str(&e))
}
