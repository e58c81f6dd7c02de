use std::sync::OnceLock;

use floqlin::classical::{find_limit_cycle, CycleOptions, ModelParams};
use floqlin::floquet::{analytic_q1, cumulative_trace, realify, FloquetSystem};
use floqlin::numerics::{dot_h, norm2, Vec2, C64};

fn driven() -> &'static FloquetSystem {
    static SYS: OnceLock<FloquetSystem> = OnceLock::new();
    SYS.get_or_init(|| {
        let p = ModelParams::new(0.1f64.sqrt(), 0.4f64.sqrt(), 0.1).unwrap();
        let cyc = find_limit_cycle(&p, &CycleOptions::default()).unwrap();
        FloquetSystem::build(&cyc).unwrap()
    })
}

/// Angle between two real plane vectors, folded into `[0, π/2]`.
fn line_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let c = (a[0] * b[0] + a[1] * b[1]).abs() / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
    c.min(1.0).acos()
}

#[test]
fn goldstone_exponent_vanishes() {
    let sys = driven();
    assert!(
        sys.goldstone_residual() < 1e-7,
        "|mu0| T = {}",
        sys.goldstone_residual()
    );
}

#[test]
fn second_exponent_is_real_and_negative() {
    let mu1 = driven().mu[1];
    assert!(mu1.re < 0.0);
    assert!(mu1.im.abs() < 1e-10, "mu1 = {mu1}");
}

#[test]
fn trace_sum_rule() {
    let sys = driven();
    let quad = sys.mean_trace();
    let s = sys.mu[0] + sys.mu[1];
    assert!((s - C64::new(quad, 0.0)).norm() < 1e-6, "{s} vs {quad}");
}

#[test]
fn abel_identity_on_the_grid() {
    let sys = driven();
    let cum = cumulative_trace(&sys.cycle);
    for (k, got) in sys.fundamental.det.iter().enumerate() {
        let expect = cum[k].exp();
        assert!(
            (got - expect).norm() / expect < 1e-7,
            "k={k}: det R = {got}, exp int = {expect}"
        );
    }
}

#[test]
fn biorthonormal_at_every_grid_point() {
    let sys = driven();
    let m = &sys.modes;
    for k in 0..sys.n_grid() {
        let p = [m.p0[k], m.p1[k]];
        let q = [m.q0[k], m.q1[k]];
        for j in 0..2 {
            for l in 0..2 {
                let want = if j == l { 1.0 } else { 0.0 };
                let got = dot_h(&q[j], &p[l]);
                assert!(
                    (got - C64::new(want, 0.0)).norm() < 1e-8,
                    "k={k} q{j}†p{l} = {got}"
                );
            }
        }
    }
}

#[test]
fn modes_are_periodic() {
    let d = driven().modes.periodicity_defects;
    for v in d {
        assert!(v < 1e-6, "{d:?}");
    }
}

#[test]
fn tangent_and_normal_directions() {
    let sys = driven();
    for k in 0..sys.n_grid() {
        let b = sys.cycle.derivatives[k];
        let tangent = [2.0 * b.re, 2.0 * b.im];
        let p0 = realify(&sys.modes.p0[k]).expect("p0 realifies");
        let q1 = realify(&sys.modes.q1[k]).expect("q1 realifies");
        assert!(line_angle(p0, tangent) < 1e-4, "k={k}");
        let normal = [-tangent[1], tangent[0]];
        assert!(line_angle(q1, normal) < 1e-4, "k={k}");
        // U q₀ is perpendicular to U p₁
        let q0 = realify(&sys.modes.q0[k]).unwrap();
        let p1 = realify(&sys.modes.p1[k]).unwrap();
        assert!((line_angle(q0, p1) - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }
}

#[test]
fn analytic_q1_matches_integrated_mode() {
    let sys = driven();
    let an = analytic_q1(&sys.cycle, sys.mu[1]);
    let q1 = &sys.modes.q1;
    // direction at τ = 0
    let d0 = sys.cycle.derivatives[0];
    let dir: Vec2 = [C64::new(0.0, -1.0) * d0, C64::new(0.0, 1.0) * d0.conj()];
    let s = dot_h(&dir, &an[0]) / dot_h(&dir, &dir);
    assert!(s.im.abs() < 1e-12 && s.re > 0.0);

    let scale = dot_h(&an[0], &q1[0]) / dot_h(&an[0], &an[0]);
    let size = q1.iter().map(norm2).fold(0.0, f64::max);
    for k in 0..sys.n_grid() {
        let r = [an[k][0] * scale - q1[k][0], an[k][1] * scale - q1[k][1]];
        assert!(norm2(&r) / size < 1e-5, "k={k}: {}", norm2(&r) / size);
    }
}
