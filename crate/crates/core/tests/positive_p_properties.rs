use floqlin::classical::{find_limit_cycle, CycleOptions, ModelParams};
use floqlin::floquet::FloquetSystem;
use floqlin::positive_p::{
    least_squares_slope, linearized_theta_sim, simulate_ensemble, EnsembleOptions, Estimate,
};

fn model(f2: f64, gamma: f64) -> ModelParams {
    ModelParams::new(f2.sqrt(), 0.4f64.sqrt(), gamma).unwrap()
}

fn short(n_traj: usize, dt: f64, t_end: f64, window: f64) -> EnsembleOptions {
    let mut o = EnsembleOptions::new(n_traj, dt, t_end, 7);
    o.window_start = Some(window);
    o
}

fn within(a: &Estimate, b: &Estimate, k: f64) -> bool {
    let se = (a.se[0].powi(2) + b.se[0].powi(2)).sqrt();
    (a.mean.re - b.mean.re).abs() <= k * se
}

#[test]
fn same_seed_same_numbers_on_any_thread_count() {
    let p = model(0.1, 0.2);
    let o = short(300, 2e-3, 3.0, 1.0);
    let a = simulate_ensemble(&p, &o).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| simulate_ensemble(&p, &o).unwrap());
    for (x, y) in a.steady.iter().zip(&b.steady) {
        assert_eq!(x.stochastic.mean, y.stochastic.mean);
        assert_eq!(x.stochastic.se, y.stochastic.se);
    }
    let mut o2 = o;
    o2.seed += 1;
    let c = simulate_ensemble(&p, &o2).unwrap();
    assert_ne!(a.steady[1].stochastic.mean, c.steady[1].stochastic.mean);
}

#[test]
fn options_are_checked() {
    let p = model(0.1, 0.1);
    assert!(simulate_ensemble(&p, &short(10, 1e-3, 1.0, 0.5)).is_err());
    assert!(simulate_ensemble(&p, &short(200, 1e-3, 1.0, 2.0)).is_err());
    assert!(simulate_ensemble(&p, &short(200, -1e-3, 1.0, 0.5)).is_err());
}

#[test]
fn time_step_does_not_move_the_steady_number() {
    let p = model(0.1, 0.3);
    let a = simulate_ensemble(&p, &short(600, 4e-3, 20.0, 6.0)).unwrap();
    let b = simulate_ensemble(&p, &short(600, 1e-3, 20.0, 6.0)).unwrap();
    let (na, nb) = (
        &a.steady_moment(1, 1).unwrap().quantum,
        &b.steady_moment(1, 1).unwrap().quantum,
    );
    assert!(within(na, nb, 4.0), "{na:?} vs {nb:?}");
}

#[test]
fn undriven_mean_amplitude_vanishes() {
    let p = model(0.0, 0.2);
    let s = simulate_ensemble(&p, &short(800, 2e-3, 12.0, 4.0)).unwrap();
    let b = s.steady_moment(0, 1).unwrap().stochastic;
    assert!(b.mean.re.abs() < 4.0 * b.se[0] + 1e-3, "{b:?}");
    assert!(b.mean.im.abs() < 4.0 * b.se[1] + 1e-3, "{b:?}");
}

#[test]
fn weak_noise_recovers_the_classical_cycle() {
    let p = model(0.1, 1e-6);
    let cyc = find_limit_cycle(&p, &CycleOptions::default()).unwrap();
    let s = simulate_ensemble(&p, &short(256, 1e-3, 2.0 * cyc.period, cyc.period)).unwrap();
    let got = s.steady_moment(1, 1).unwrap().stochastic.mean;
    let want = cyc.mean_intensity();
    assert!((got.re - want).abs() < 1e-3 * want, "{got} vs {want}");
    assert!(got.im.abs() < 1e-3 * want);
}

#[test]
fn undriven_phase_diffusion_rate() {
    let p = model(0.0, 0.1);
    let cyc = find_limit_cycle(&p, &CycleOptions::default()).unwrap();
    let sys = FloquetSystem::build(&cyc).unwrap();
    let r = linearized_theta_sim(&sys, 0.1, 1e-2, 50.0, 2000, 3).unwrap();
    let want = 0.1 * 3.0 / (2.0 * 0.4);
    assert!(
        (r.predicted_slope - want).abs() < 1e-6,
        "{}",
        r.predicted_slope
    );
    assert!((r.slope - want).abs() < 0.1 * want, "{} vs {want}", r.slope);
    assert!(r.contamination < 1e-10);
    // transverse fluctuations settle at the closed-form value
    let c1 = r.c1_variance.iter().sum::<f64>() / r.c1_variance.len() as f64;
    assert!((c1 - 0.125).abs() < 0.1 * 0.125, "{c1}");
}

#[test]
fn slope_fit_is_exact_on_a_line() {
    let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.3).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
    assert!((least_squares_slope(&x, &y) - 2.5).abs() < 1e-12);
}
