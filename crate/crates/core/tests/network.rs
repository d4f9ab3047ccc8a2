use proptest::prelude::*;
use synclab_core::diffusive::*;
use synclab_core::numerics::*;
use synclab_core::oscillators::{OscillatorModel, VanDerPolCircuit};
use synclab_core::TWO_PI;

#[test]
fn strong_resistor_synchronizes_with_certificate() {
    let m = VanDerPolCircuit { mu: 1.0 };
    let models: [&dyn OscillatorModel; 2] = [&m, &m];
    let g = CouplingGraph::pair(1.0).unwrap();
    let traj = simulate_diffusive(&models, &g, &[vec![2.0, 0.0], vec![-0.3, 1.4]], (0.0, 100.0), 1e-3, 100).unwrap();
    let sync = output_sync_metric(&traj);
    assert!(*sync.last().unwrap() <= 1e-6);
    let rep = incremental_certificates(&traj, 1.0, 1.0).unwrap();
    assert!(rep.samples.iter().all(|s| s.lyapunov_residual <= 1e-9));
    let from = rep.v_monotone_from.unwrap();
    assert!(from < 100.0);
}

#[test]
fn identical_nodes_stay_identical() {
    let m = VanDerPolCircuit { mu: 0.5 };
    let models: [&dyn OscillatorModel; 3] = [&m, &m, &m];
    let g = CouplingGraph::all_to_all(3, 0.3).unwrap();
    let x = vec![1.2, -0.4];
    let traj = simulate_diffusive(&models, &g, &[x.clone(), x.clone(), x], (0.0, 30.0), 1e-3, 10).unwrap();
    for k in 0..traj.len() {
        let y = traj.outputs_at(k);
        assert!((y[0] - y[1]).abs() <= 1e-12 && (y[1] - y[2]).abs() <= 1e-12);
    }
}

#[test]
fn antiphase_sinusoids_reach_two() {
    let m = VanDerPolCircuit { mu: 1e-9 };
    let models: [&dyn OscillatorModel; 2] = [&m, &m];
    let g = CouplingGraph::new(2);
    let traj = simulate_diffusive(&models, &g, &[vec![0.0, -1.0], vec![0.0, 1.0]], (0.0, TWO_PI), 1e-3, 1).unwrap();
    let worst = output_sync_metric(&traj).into_iter().fold(0.0, f64::max);
    assert!((worst - 2.0).abs() < 1e-6);
}

#[test]
fn trajectory_csv_layout() {
    let m = VanDerPolCircuit { mu: 1.0 };
    let models: [&dyn OscillatorModel; 2] = [&m, &m];
    let g = CouplingGraph::pair(1.0).unwrap();
    let traj = simulate_diffusive(&models, &g, &[vec![1.0, 0.0], vec![0.0, 1.0]], (0.0, 1.0), 0.1, 5).unwrap();
    let csv = traj.to_csv().into_string();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,node,x0,x1,output");
    assert_eq!(csv.lines().count(), 1 + 2 * traj.len());
    assert!(!csv.contains('\r'));
}

#[test]
fn quadrature_closed_forms() {
    assert!(periodic_quadrature(f64::sin, 1e-12, &[]).unwrap().abs() <= 1e-12);
    assert!((periodic_quadrature(|s| s.sin().powi(2), 1e-12, &[]).unwrap() - std::f64::consts::PI).abs() <= 1e-10);
    let theta = std::f64::consts::FRAC_PI_2;
    let v = periodic_quadrature(|s| (theta + s).cos() * s.sin(), 1e-12, &[]).unwrap();
    assert!((v + std::f64::consts::PI).abs() <= 1e-8);
}

fn node_count_and_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..7).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 0.0f64..3.0), 0..15)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_sum_to_zero((n, edges) in node_count_and_edges()) {
        let mut g = CouplingGraph::new(n);
        for (a, b, k) in edges {
            if a != b {
                g.add_edge(a, b, k).unwrap();
            }
        }
        let l = laplacian(&g);
        for i in 0..n {
            let row: f64 = (0..n).map(|j| l[(i, j)]).sum();
            prop_assert!(row.abs() <= 1e-12);
            prop_assert!(l[(i, i)] >= 0.0);
            for j in 0..n {
                if i != j {
                    prop_assert!(l[(i, j)] <= 0.0);
                    prop_assert_eq!(l[(i, j)], -g.weight(j, i));
                }
            }
        }
        if is_balanced(&g) {
            let spec = symmetric_part_spectrum(&l);
            prop_assert!(spec.iter().all(|&e| e >= -1e-10));
        }
    }

    #[test]
    fn rk4_is_deterministic_and_exact_for_linear_decay(x0 in -5.0f64..5.0, rate in 0.1f64..3.0) {
        let a = integrate_final(|_t, x: &[f64], d: &mut [f64]| d[0] = -rate * x[0], &[x0], (0.0, 1.0), 1e-3).unwrap();
        let b = integrate_final(|_t, x: &[f64], d: &mut [f64]| d[0] = -rate * x[0], &[x0], (0.0, 1.0), 1e-3).unwrap();
        prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
        prop_assert!((a[0] - x0 * (-rate).exp()).abs() <= 1e-9 * x0.abs().max(1.0));
    }

    #[test]
    fn trajectory_times_increase(t1 in 0.05f64..3.0, step in 1e-3f64..0.1) {
        let traj = integrate(|_t, x: &[f64], d: &mut [f64]| { d[0] = x[1]; d[1] = -x[0]; }, &[1.0, 0.0], (0.0, t1), step).unwrap();
        prop_assert!(!traj.is_empty());
        prop_assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
        prop_assert!((traj.last_time() - t1).abs() <= 1e-12);
        prop_assert!(traj.states().all(|s| s.len() == 2));
    }

    #[test]
    fn events_land_on_the_guard(level in 0.05f64..0.95, rate in 0.5f64..4.0) {
        let s = 2.0;
        let (t, x) = next_event(
            |_t, x: &[f64], d: &mut [f64]| d[0] = s - rate * x[0],
            &[0.0],
            0.0,
            |x: &[f64]| x[0] - level * s / rate,
            Direction::Rising,
            100.0,
            1e-2,
        ).unwrap();
        prop_assert!((x[0] - level * s / rate).abs() <= EVENT_TOL);
        let exact = -(1.0 - level).ln() / rate;
        prop_assert!((t - exact).abs() <= 1e-8);
    }

    #[test]
    fn brent_finds_cubic_roots(r in -3.0f64..3.0) {
        let root = find_root(|x| (x - r) * (x * x + 1.0), (r - 2.0, r + 1.5), 1e-13).unwrap();
        prop_assert!((root - r).abs() <= 1e-10);
    }

    #[test]
    fn quadrature_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 1usize..5) {
        let w = w as f64;
        let f = |s: f64| a * (w * s).cos().powi(2) + b * s.sin();
        let v = integrate_interval(f, 0.0, TWO_PI, 1e-12).unwrap();
        prop_assert!((v - a * std::f64::consts::PI).abs() <= 1e-9);
    }
}
