use std::sync::OnceLock;

use floqlin::classical::ModelParams;
use floqlin::fluctuations::GridSpec;
use floqlin::fock_oracle::{
    evolve_from, evolve_steady, exact_wigner, expectation, quadrature_moments, FockState,
    OracleParams,
};
use floqlin::numerics::C64;

fn driven(gamma: f64) -> ModelParams {
    ModelParams::new(0.1f64.sqrt(), 0.4f64.sqrt(), gamma).unwrap()
}

fn steady_driven_03() -> &'static FockState {
    static ST: OnceLock<FockState> = OnceLock::new();
    ST.get_or_init(|| evolve_steady(&OracleParams::new(driven(0.3), 24)).unwrap())
}

/// Stationary distribution of the number-state chain at `F = 0`: gain
/// `n → n+1` at rate `2(n+1)`, pair loss `n → n-2` at rate `γ n(n-1)`,
/// with the gain switched off at the top level as in the truncated
/// operators. Dense Gaussian elimination with the normalization replacing
/// the last balance equation.
fn birth_death_stationary(gamma: f64, n_max: usize) -> Vec<f64> {
    let d = n_max + 1;
    let up = |n: usize| if n < n_max { 2.0 * (n + 1) as f64 } else { 0.0 };
    let down = |n: usize| gamma * (n * n.saturating_sub(1)) as f64;
    let mut a = vec![vec![0.0; d + 1]; d];
    for (n, row) in a.iter_mut().enumerate() {
        row[n] = -(up(n) + down(n));
        if n > 0 {
            row[n - 1] += up(n - 1);
        }
        if n + 2 < d {
            row[n + 2] += down(n + 2);
        }
    }
    a[d - 1] = vec![1.0; d + 1];
    for c in 0..d {
        let p = (c..d)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=d {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..d).map(|n| a[n][d] / a[n][n]).collect()
}

#[test]
fn steady_state_invariants() {
    let st = steady_driven_03();
    assert!((st.trace() - 1.0).abs() < 1e-10);
    assert!(st.rho.hermiticity_defect() < 1e-10);
    assert!(st.rho.is_positive_above(1e-8));
    assert!(st.leakage < 1e-7);
    assert!(st.residual < 1e-9);
}

#[test]
fn undriven_populations_match_the_rate_equations() {
    let gamma = 0.5;
    let p = ModelParams::new(0.0, 0.4f64.sqrt(), gamma).unwrap();
    let st = evolve_steady(&OracleParams::new(p, 20)).unwrap();
    let exact = birth_death_stationary(gamma, st.n_max);
    for (n, (a, b)) in st.populations().iter().zip(&exact).enumerate() {
        assert!((a - b).abs() < 1e-8, "p_{n}: {a} vs {b}");
    }
    // phase symmetry: odd moments vanish
    assert!(expectation(&st, 0, 1).unwrap().norm() < 1e-8);
    assert!(expectation(&st, 0, 2).unwrap().norm() < 1e-8);
}

#[test]
fn undriven_photon_number_near_the_classical_value() {
    let gamma = 0.1;
    let p = ModelParams::new(0.0, 0.4f64.sqrt(), gamma).unwrap();
    let st = evolve_steady(&OracleParams::new(p, 40)).unwrap();
    let n = expectation(&st, 1, 1).unwrap().re;
    assert!((n - 1.0 / gamma).abs() < 0.2 / gamma, "<n> = {n}");
    let exact: f64 = birth_death_stationary(gamma, st.n_max)
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum();
    assert!((n - exact).abs() < 1e-6 * exact, "{n} vs {exact}");
}

#[test]
fn cutoff_robustness() {
    let base = steady_driven_03();
    let bigger = evolve_from(
        &OracleParams::new(driven(0.3), base.n_max * 5 / 4),
        &FockState::vacuum(base.n_max * 5 / 4).rho,
    )
    .unwrap();
    let a = expectation(base, 1, 1).unwrap().re;
    let b = expectation(&bigger, 1, 1).unwrap().re;
    assert!((a - b).abs() / a < 1e-4, "{a} vs {b}");
}

#[test]
fn steady_state_is_unique() {
    let base = steady_driven_03();
    let from_coherent = evolve_from(
        &OracleParams::new(driven(0.3), base.n_max),
        &FockState::coherent(base.n_max, C64::new(-1.0, 1.5)).rho,
    )
    .unwrap();
    let diff = (&base.rho - &from_coherent.rho).frobenius_norm();
    assert!(diff < 1e-7, "{diff}");
}

#[test]
fn vacuum_wigner_covariance_is_identity() {
    let w = exact_wigner(&FockState::vacuum(6), &GridSpec::square(8.0, 161));
    assert!((w.mass() - 1.0).abs() < 1e-3);
    let a = w.cell_area();
    let mut c = [0.0; 3];
    for j in 0..w.spec.np {
        for i in 0..w.spec.nx {
            let (x, p) = (w.spec.x(i), w.spec.p(j));
            let v = w.at(i, j) * a;
            c[0] += v * x * x;
            c[1] += v * x * p;
            c[2] += v * p * p;
        }
    }
    assert!(
        (c[0] - 1.0).abs() < 1e-3 && (c[2] - 1.0).abs() < 1e-3 && c[1].abs() < 1e-3,
        "{c:?}"
    );
}

#[test]
fn wigner_moments_match_operator_moments() {
    let st = steady_driven_03();
    let (mean, cov) = quadrature_moments(st).unwrap();
    let w = exact_wigner(st, &GridSpec::square(12.0, 161));
    assert!((w.mass() - 1.0).abs() < 1e-3);
    let m = w.mean();
    let a = w.cell_area();
    let mut c = [[0.0; 2]; 2];
    for j in 0..w.spec.np {
        for i in 0..w.spec.nx {
            let d = [w.spec.x(i) - m[0], w.spec.p(j) - m[1]];
            let v = w.at(i, j) * a;
            for r in 0..2 {
                for s in 0..2 {
                    c[r][s] += v * d[r] * d[s];
                }
            }
        }
    }
    for r in 0..2 {
        assert!((m[r] - mean[r]).abs() < 1e-3, "mean {m:?} vs {mean:?}");
        for s in 0..2 {
            assert!(
                (c[r][s] - cov[r][s]).abs() < 1e-3 * cov[r][r].max(1.0),
                "cov {c:?} vs {cov:?}"
            );
        }
    }
}
