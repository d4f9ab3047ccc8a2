use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use synclab_core::numerics::{integrate, integrate_interval, Direction};
use synclab_core::oscillators::*;
use synclab_core::phase::circular_distance;
use synclab_core::phase_reduction::*;
use synclab_core::TWO_PI;

fn rising_x() -> Section {
    Section {
        component: 0,
        level: 0.0,
        direction: Direction::Rising,
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| TWO_PI * k as f64 / n as f64)
}

#[test]
fn vdp_amplitude_settles_near_two() {
    let model = vdp_full(0.1).unwrap();
    let traj = integrate(|_t, x: &[f64], d: &mut [f64]| model.drift(x, d), &[0.1, 0.0], (0.0, 260.0), 1e-2).unwrap();
    let tail = traj.times().iter().position(|&t| t >= 200.0).unwrap();
    let radius: Vec<f64> = (tail..traj.len()).map(|i| traj.state(i)[0].hypot(traj.state(i)[1])).collect();
    let mean = radius.iter().sum::<f64>() / radius.len() as f64;
    assert!((mean - 2.0).abs() <= 0.05, "{mean}");
    let amp = (tail..traj.len()).map(|i| traj.state(i)[0].abs()).fold(0.0, f64::max);
    assert!((amp - 2.0).abs() <= 0.05, "{amp}");
}

#[test]
fn weakly_nonlinear_period_tends_to_two_pi() {
    let model = vdp_full(1e-4).unwrap();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &ReductionOptions::default()).unwrap();
    assert!((cycle.period - TWO_PI).abs() <= 1e-2);
    assert!((cycle.omega - TWO_PI / cycle.period).abs() < 1e-15);
}

fn fft_period(mu: f64) -> f64 {
    let model = vdp_full(mu).unwrap();
    let settle = integrate(|_t, x: &[f64], d: &mut [f64]| model.drift(x, d), &[2.0, 0.0], (0.0, 200.0), 1e-3).unwrap();
    let dt = 0.01;
    let n = 1 << 17;
    let traj = integrate(
        |_t, x: &[f64], d: &mut [f64]| model.drift(x, d),
        settle.last_state(),
        (0.0, dt * n as f64),
        dt,
    )
    .unwrap();
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|i| {
            let hann = 0.5 - 0.5 * (TWO_PI * i as f64 / n as f64).cos();
            Complex::new(traj.state(i)[0] * hann, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm_sqr().ln()).collect();
    let k = (1..n / 2 - 1).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    let (a, b, c) = (power[k - 1], power[k], power[k + 1]);
    let offset = 0.5 * (a - c) / (a - 2.0 * b + c);
    let freq = (k as f64 + offset) / (n as f64 * dt);
    1.0 / freq
}

#[test]
fn relaxation_period_matches_spectral_peak() {
    let model = vdp_full(5.0).unwrap();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &ReductionOptions::default()).unwrap();
    let spectral = fft_period(5.0);
    assert!((cycle.period - spectral).abs() / spectral <= 1e-3, "{} vs {spectral}", cycle.period);
}

#[test]
fn quasiharmonic_iprc_matches_numeric_iprc() {
    let model = vdp_full(0.1).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    let numeric = iprc_numeric(&model, &cycle, 64, &opts).unwrap();
    let osc = vdp_quasiharmonic_phase(0.1).unwrap();
    assert!(numeric.all_valid());
    assert!(numeric.sup_distance(|t| osc.iprc(t)) <= 5e-2);
}

#[test]
fn asymptotic_phase_advances_with_the_flow() {
    let model = vdp_full(0.1).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    for (q, dt) in [([2.5, 0.3], 1.3), ([1.0, -1.0], 4.0), ([-0.5, 2.4], 0.7)] {
        let later = integrate(|_t, x: &[f64], d: &mut [f64]| model.drift(x, d), &q, (0.0, dt), 1e-4).unwrap();
        let a = asymptotic_phase(&model, &cycle, &q, &opts).unwrap();
        let b = asymptotic_phase(&model, &cycle, later.last_state(), &opts).unwrap();
        assert!(circular_distance(b - a, cycle.omega * dt) <= 1e-5, "{q:?}");
    }
}

#[test]
fn asymptotic_phase_agrees_with_quasiharmonic_map() {
    let model = vdp_full(0.1).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    let numeric = asymptotic_phase(&model, &cycle, &[2.2, 0.0], &opts).unwrap();
    let osc = vdp_quasiharmonic_phase(0.1).unwrap();
    let predicted = osc.phase_map().unwrap().phase(2.2f64.atan2(0.0));
    assert!(circular_distance(numeric, predicted) <= 5e-2, "{numeric} vs {predicted}");
}

#[test]
fn origin_is_outside_the_basin() {
    let model = vdp_full(0.1).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    assert!(asymptotic_phase(&model, &cycle, &[0.0, 0.0], &opts).is_err());
}

#[test]
fn near_harmonic_iprc_is_half_sine() {
    let model = vdp_full(1e-3).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    let z = iprc_numeric(&model, &cycle, 64, &opts).unwrap();
    assert!(z.sup_distance(|t| -0.5 * t.sin()) <= 1e-2);
}

#[test]
fn small_impulse_prc_is_scaled_iprc() {
    let model = vdp_full(0.05).unwrap();
    let opts = ReductionOptions::default();
    let cycle = find_limit_cycle(&model, &[2.0, 0.0], rising_x(), &opts).unwrap();
    let eps = 1e-3;
    let z = finite_prc_numeric(&model, &cycle, eps, 32, &opts).unwrap();
    let worst = z.iter_valid().map(|(t, v)| (v / eps + 0.5 * t.sin()).abs()).fold(0.0, f64::max);
    assert!(worst <= 5e-2, "{worst}");
}

#[test]
fn lif_small_impulse_matches_iprc() {
    let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
    let eps = 1e-4;
    let zeps = finite_prc_if(&osc, eps).unwrap();
    let worst = grid(256).map(|t| (zeps(t) - eps * osc.iprc(t)).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn lif_prc_at_zero_is_a_log() {
    let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
    let zeps = finite_prc_if(&osc, 0.1).unwrap();
    let oracle = osc.omega() * integrate_interval(|x| 1.0 / (2.0 - x), 0.0, 0.1, 1e-14).unwrap();
    assert!((zeps(0.0) - oracle).abs() < 1e-9);
    assert!((oracle - osc.omega() * (2.0f64 / 1.9).ln()).abs() < 1e-12);
    let map = osc.phase_map().unwrap();
    let theta = map.phase(0.95);
    assert!((zeps(theta) - (TWO_PI - theta)).abs() < 1e-12);
}

#[test]
fn relaxation_reduction() {
    let osc = vdp_relaxation_phase().unwrap();
    let map = osc.phase_map().unwrap();
    assert_eq!(map.phase(-2.0), 0.0);
    assert_eq!(map.phase(-1.0), TWO_PI);
    let period = integrate_interval(|x| (1.0 - x * x) / x, -2.0, -1.0, 1e-14).unwrap().abs();
    assert!((period - (1.5 - 2f64.ln())).abs() < 1e-12);
    assert!((osc.omega() - TWO_PI / period).abs() <= 1e-6);
    let w = osc.omega();
    assert!((osc.iprc(0.0) - w / 2.0).abs() < 1e-9);
    assert!((osc.iprc(TWO_PI) - w).abs() < 1e-9);
    for delta in [1e-4, 1e-8, 1e-12] {
        assert!((osc.iprc(TWO_PI - delta) - w).abs() <= 1.01 * w * (delta / w).sqrt());
    }
    let values: Vec<f64> = grid(2048).map(|t| osc.iprc(t)).collect();
    assert!(values.windows(2).all(|v| v[1] > v[0]));
}

#[test]
fn constant_field_reduction() {
    let osc = integrate_and_fire(std::sync::Arc::new(|_| 3.0), 0.0, 1.5).unwrap();
    assert!((osc.period() - 0.5).abs() < 1e-12);
    for t in grid(64) {
        assert!((osc.iprc(t) - osc.omega() / 3.0).abs() < 1e-9);
    }
    let map = osc.phase_map().unwrap();
    assert!((map.phase(0.6) - TWO_PI * 0.4).abs() < 1e-9);
}

#[test]
fn qif_reduction() {
    let osc = integrate_and_fire(qif_field(1.0), QIF_INTERVAL.0, QIF_INTERVAL.1).unwrap();
    assert!((osc.period() - PI / 2.0).abs() < 1e-9);
    assert!((osc.omega() - 4.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lif_phase_map_is_monotone_and_invertible(s in 1.5f64..4.0, r in -1.0f64..-0.1, x in 0.0f64..1.0) {
        let osc = integrate_and_fire(lif_field(s, r), 0.0, 1.0).unwrap();
        let map = osc.phase_map().unwrap();
        prop_assert_eq!(map.phase(0.0), 0.0);
        prop_assert_eq!(map.phase(1.0), TWO_PI);
        let theta = map.phase(x);
        prop_assert!((map.state(theta) - x).abs() < 1e-9);
        prop_assert!(map.phase((x + 1e-3).min(1.0)) >= theta);
        let exact = osc.omega() * ((s) / (s + r * x)).ln() / -r;
        prop_assert!((theta - exact).abs() < 1e-8);
    }

    #[test]
    fn lif_prc_is_bounded_by_absorption(eps in 0.0f64..0.5, theta in 0.0f64..TWO_PI) {
        let osc = integrate_and_fire(lif_field(2.0, -1.0), 0.0, 1.0).unwrap();
        let z = finite_prc_if(&osc, eps).unwrap();
        let v = z(theta);
        prop_assert!(v >= -1e-12 && v <= TWO_PI - theta + 1e-12);
    }
}
