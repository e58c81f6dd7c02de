//! Exact master-equation oracle in a truncated number basis.
//!
//! `dρ/dτ = [F/√γ (a† - a) + iΔ a†a, ρ] + (γ/2) D[a²]ρ + D[a†]ρ` with
//! `D[J]ρ = 2JρJ† - J†Jρ - ρJ†J`. All operators are truncated matrices on
//! `|0⟩..|n_max⟩`, so the generator preserves the trace exactly.

use serde::{Deserialize, Serialize};

use crate::classical::{ClassicalError, ModelParams};
use crate::fluctuations::{GridSpec, WignerGrid};
use crate::numerics::{laguerre_functions, ln_factorial, DenseMatrix, NumericsError, C64, I};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Params(#[from] ClassicalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid oracle options: {0}")]
    InvalidOptions(String),
    #[error("no steady state by t = {time}: residual {residual:e}")]
    NonConvergence { time: f64, residual: f64 },
    #[error("cutoff n_max = {n_max} exceeds the cap with leakage {leakage:e}")]
    Cutoff { n_max: usize, leakage: f64 },
    #[error("moment a†^{m} a^{n} needs m + n <= n_max/2 = {limit}")]
    Accuracy { m: usize, n: usize, limit: usize },
    #[error("time step fell below {dt:e} while stabilizing")]
    StepUnderflow { dt: f64 },
}

/// Options for the steady-state search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub model: ModelParams,
    pub n_max: usize,
    /// Stop when `‖dρ/dτ‖_F` falls below this.
    pub steady_tol: f64,
    pub max_time: f64,
    pub dt: f64,
    /// Allowed top-level population before the cutoff is raised.
    pub leakage_tol: f64,
    pub n_max_cap: usize,
}

impl OracleParams {
    pub fn new(model: ModelParams, n_max: usize) -> Self {
        OracleParams {
            model,
            n_max,
            steady_tol: 1e-9,
            max_time: 1e4,
            dt: 1e-3,
            leakage_tol: 1e-7,
            n_max_cap: 600,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        self.model.validate()?;
        if self.n_max < 4 {
            return Err(OracleError::InvalidOptions(format!(
                "n_max = {} < 4",
                self.n_max
            )));
        }
        let positive = [self.steady_tol, self.max_time, self.dt, self.leakage_tol];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(OracleError::InvalidOptions(
                "tolerances, dt and max_time must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Rough RK4 stability limit for the current cutoff, from the largest
    /// decay and rotation rates of the generator.
    pub fn stable_dt(&self) -> f64 {
        let n = self.n_max as f64;
        let m = &self.model;
        let rate = m.gamma * n * n
            + 2.0 * n
            + 2.0
            + m.delta.abs() * n
            + 4.0 * m.f / m.gamma.sqrt() * (n + 1.0).sqrt();
        2.5 / rate
    }
}

/// Density matrix at a cutoff, with diagnostics of how it was obtained.
#[derive(Debug, Clone)]
pub struct FockState {
    pub n_max: usize,
    pub rho: DenseMatrix,
    /// Population of `|n_max⟩`.
    pub leakage: f64,
    /// `‖dρ/dτ‖_F` at the returned state.
    pub residual: f64,
    pub time: f64,
    pub dt: f64,
}

impl FockState {
    pub fn from_density(rho: DenseMatrix) -> Self {
        let n_max = rho.dim() - 1;
        let leakage = rho[(n_max, n_max)].re;
        FockState {
            n_max,
            rho,
            leakage,
            residual: f64::NAN,
            time: 0.0,
            dt: 0.0,
        }
    }

    pub fn vacuum(n_max: usize) -> Self {
        let mut rho = DenseMatrix::zeros(n_max + 1);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        FockState::from_density(rho)
    }

    pub fn number(n_max: usize, k: usize) -> Self {
        let mut rho = DenseMatrix::zeros(n_max + 1);
        rho[(k, k)] = C64::new(1.0, 0.0);
        FockState::from_density(rho)
    }

    /// `|α⟩⟨α|` from the normalized number-state series.
    pub fn coherent(n_max: usize, alpha: C64) -> Self {
        let ln_a = alpha.norm().ln();
        let phase = alpha.arg();
        let c: Vec<C64> = (0..=n_max)
            .map(|k| {
                if alpha.norm() == 0.0 {
                    return C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0);
                }
                let mag = (-0.5 * alpha.norm_sqr() + k as f64 * ln_a - 0.5 * ln_factorial(k)).exp();
                C64::from_polar(mag, k as f64 * phase)
            })
            .collect();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        FockState::from_density(DenseMatrix::from_fn(n_max + 1, |i, j| {
            c[i] * c[j].conj() / norm
        }))
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Photon-number distribution.
    pub fn populations(&self) -> Vec<f64> {
        (0..=self.n_max).map(|k| self.rho[(k, k)].re).collect()
    }
}

/// Per-cutoff coefficient tables for the elementwise generator.
struct Generator {
    dim: usize,
    drive: f64,
    delta: f64,
    gamma: f64,
    sqrt: Vec<f64>,
}

impl Generator {
    fn new(params: &ModelParams, dim: usize) -> Self {
        Generator {
            dim,
            drive: params.f / params.gamma.sqrt(),
            delta: params.delta,
            gamma: params.gamma,
            sqrt: (0..dim + 3).map(|k| (k as f64).sqrt()).collect(),
        }
    }

    /// `(a a†)_{kk}` for the truncated operators.
    fn aad(&self, k: usize) -> f64 {
        if k + 1 < self.dim {
            (k + 1) as f64
        } else {
            0.0
        }
    }

    fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let s = &self.sqrt;
        let zero = C64::new(0.0, 0.0);
        let at = |m: usize, n: usize| rho[m * d + n];
        for m in 0..d {
            for n in 0..d {
                let r = at(m, n);
                let mf = m as f64;
                let nf = n as f64;
                let mut v = I * (self.delta * (mf - nf)) * r;
                // drive commutator
                let mut c = zero;
                if m > 0 {
                    c += s[m] * at(m - 1, n);
                }
                if m + 1 < d {
                    c -= s[m + 1] * at(m + 1, n);
                }
                if n + 1 < d {
                    c -= s[n + 1] * at(m, n + 1);
                }
                if n > 0 {
                    c += s[n] * at(m, n - 1);
                }
                v += self.drive * c;
                // two-photon loss
                let mut l2 = -(mf * (mf - 1.0) + nf * (nf - 1.0)) * r;
                if m + 2 < d && n + 2 < d {
                    l2 += 2.0 * s[m + 1] * s[m + 2] * s[n + 1] * s[n + 2] * at(m + 2, n + 2);
                }
                v += 0.5 * self.gamma * l2;
                // one-photon gain
                let mut g = -(self.aad(m) + self.aad(n)) * r;
                if m > 0 && n > 0 {
                    g += 2.0 * s[m] * s[n] * at(m - 1, n - 1);
                }
                v += g;
                out[m * d + n] = v;
            }
        }
    }

    /// Same as [`Generator::apply`] for Hermitian `rho`: the lower triangle
    /// is computed and mirrored.
    fn apply_hermitian(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let s = &self.sqrt;
        let g = self.gamma;
        // real diagonal rates and two-photon feed coefficients per index
        let rate: Vec<f64> = (0..d)
            .map(|k| -0.5 * g * (k as f64) * (k as f64 - 1.0) - self.aad(k))
            .collect();
        let feed: Vec<f64> = (0..d)
            .map(|k| if k + 2 < d { s[k + 1] * s[k + 2] } else { 0.0 })
            .collect();
        let zero = [C64::new(0.0, 0.0)];
        for m in 0..d {
            let row = &rho[m * d..(m + 1) * d];
            let up = if m > 0 {
                &rho[(m - 1) * d..m * d]
            } else {
                &zero[..0]
            };
            let down = if m + 1 < d {
                &rho[(m + 1) * d..(m + 2) * d]
            } else {
                &zero[..0]
            };
            let down2 = if m + 2 < d {
                &rho[(m + 2) * d..(m + 3) * d]
            } else {
                &zero[..0]
            };
            let mf = m as f64;
            for n in 0..=m {
                let r = row[n];
                let mut v = r * C64::new(rate[m] + rate[n], self.delta * (mf - n as f64));
                let mut c = C64::new(0.0, 0.0);
                if m > 0 {
                    c += up[n] * s[m];
                }
                if m + 1 < d {
                    c -= down[n] * s[m + 1];
                }
                if n + 1 < d {
                    c -= row[n + 1] * s[n + 1];
                }
                if n > 0 {
                    c += row[n - 1] * s[n];
                }
                v += c * self.drive;
                if m + 2 < d {
                    v += down2[n + 2] * (g * feed[m] * feed[n]);
                }
                if n > 0 {
                    v += up[n - 1] * (2.0 * s[m] * s[n]);
                }
                if n == m {
                    // the diagonal of a Hermitian derivative is real
                    out[m * d + m] = C64::new(v.re, 0.0);
                } else {
                    out[m * d + n] = v;
                    out[n * d + m] = v.conj();
                }
            }
        }
    }
}

/// Right-hand side of the master equation, evaluated elementwise.
pub fn lindblad_rhs(rho: &DenseMatrix, params: &ModelParams) -> DenseMatrix {
    let gen = Generator::new(params, rho.dim());
    let mut out = DenseMatrix::zeros(rho.dim());
    gen.apply(rho.as_slice(), out.as_mut_slice());
    out
}

/// Same generator from explicit truncated operator products; slow, used as
/// a reference.
pub fn lindblad_rhs_dense(rho: &DenseMatrix, params: &ModelParams) -> DenseMatrix {
    let n = rho.dim();
    let a = DenseMatrix::annihilation(n);
    let ad = a.adjoint();
    let f = C64::new(params.f / params.gamma.sqrt(), 0.0);
    let g = (&ad - &a).scale(f) + (&ad * &a).scale(C64::new(0.0, params.delta));
    let dissipator = |j: &DenseMatrix| {
        let jd = j.adjoint();
        let jdj = &jd * j;
        (j * &(rho * &jd)).scale(C64::new(2.0, 0.0)) - &jdj * rho - rho * &jdj
    };
    let a2 = &a * &a;
    g.commutator(rho) + dissipator(&a2).scale(C64::new(0.5 * params.gamma, 0.0)) + dissipator(&ad)
}

/// Steady state by RK4 evolution from the vacuum, raising `n_max` by half
/// until the top-level population is below `leakage_tol`.
pub fn evolve_steady(params: &OracleParams) -> Result<FockState, OracleError> {
    params.validate()?;
    let mut p = *params;
    loop {
        let st = evolve_from(&p, &FockState::vacuum(p.n_max).rho)?;
        if st.leakage <= p.leakage_tol {
            return Ok(st);
        }
        let next = (p.n_max as f64 * 1.5).ceil() as usize;
        if next > p.n_max_cap {
            return Err(OracleError::Cutoff {
                n_max: next,
                leakage: st.leakage,
            });
        }
        p.n_max = next;
    }
}

/// Evolve `rho0` at fixed cutoff until the steady-state residual is met.
///
/// Trace, Hermiticity and positivity are checked every 100 steps; a
/// violation restarts from the last checkpoint with half the step.
pub fn evolve_from(params: &OracleParams, rho0: &DenseMatrix) -> Result<FockState, OracleError> {
    params.validate()?;
    let dim = rho0.dim();
    if dim != params.n_max + 1 {
        return Err(NumericsError::DimensionMismatch {
            expected: params.n_max + 1,
            found: dim,
        }
        .into());
    }
    let gen = Generator::new(&params.model, dim);
    let len = dim * dim;
    let zero = C64::new(0.0, 0.0);
    let mut rho = rho0.as_slice().to_vec();
    let mut k1 = vec![zero; len];
    let mut k2 = vec![zero; len];
    let mut k3 = vec![zero; len];
    let mut k4 = vec![zero; len];
    let mut tmp = vec![zero; len];
    let trace0: C64 = (0..dim).map(|i| rho[i * dim + i]).sum();

    let mut dt = params.dt.min(0.25 * params.stable_dt());
    let mut t = 0.0;
    let mut checkpoint = (rho.clone(), t);
    let mut first_residual = None;
    let mut step: u64 = 0;
    let frob = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    loop {
        gen.apply_hermitian(&rho, &mut k1);
        let residual = frob(&k1);
        let r0 = *first_residual.get_or_insert(residual);
        let unstable = !residual.is_finite() || residual > 1e3 * r0.max(1.0);
        if unstable {
            dt *= 0.5;
            if dt < 1e-9 {
                return Err(OracleError::StepUnderflow { dt });
            }
            rho.clone_from(&checkpoint.0);
            t = checkpoint.1;
            first_residual = None;
            continue;
        }
        if residual < params.steady_tol {
            let rho_m = dense_from(dim, rho);
            let leakage = rho_m[(dim - 1, dim - 1)].re;
            return Ok(FockState {
                n_max: dim - 1,
                rho: rho_m,
                leakage,
                residual,
                time: t,
                dt,
            });
        }
        if t >= params.max_time {
            return Err(OracleError::NonConvergence { time: t, residual });
        }

        for i in 0..len {
            tmp[i] = rho[i] + k1[i] * (0.5 * dt);
        }
        gen.apply_hermitian(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = rho[i] + k2[i] * (0.5 * dt);
        }
        gen.apply_hermitian(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = rho[i] + k3[i] * dt;
        }
        gen.apply_hermitian(&tmp, &mut k4);
        for i in 0..len {
            rho[i] += (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) * (dt / 6.0);
        }
        t += dt;
        step += 1;

        if step.is_multiple_of(100) {
            let m = dense_from(dim, rho.clone());
            let drift = (m.trace() - trace0).norm();
            let herm = m.hermiticity_defect();
            if !m.is_finite() || drift > 1e-9 || herm > 1e-10 || !m.is_positive_above(1e-8) {
                dt *= 0.5;
                if dt < 1e-9 {
                    return Err(OracleError::StepUnderflow { dt });
                }
                rho.clone_from(&checkpoint.0);
                t = checkpoint.1;
                continue;
            }
            // remove the slow antihermitian roundoff drift
            for i in 0..dim {
                for j in i..dim {
                    let h = 0.5 * (rho[i * dim + j] + rho[j * dim + i].conj());
                    rho[i * dim + j] = h;
                    rho[j * dim + i] = h.conj();
                }
            }
            checkpoint = (rho.clone(), t);
        }
    }
}

fn dense_from(dim: usize, data: Vec<C64>) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim);
    m.as_mut_slice().copy_from_slice(&data);
    m
}

/// `Tr[ρ a†^m a^n]`.
pub fn expectation(state: &FockState, m: usize, n: usize) -> Result<C64, OracleError> {
    let limit = state.n_max / 2;
    if m + n > limit {
        return Err(OracleError::Accuracy { m, n, limit });
    }
    // ⟨k| a†^m a^n |l⟩ = sqrt(l!/j! · k!/j!) with j = l - n = k - m
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=state.n_max {
        let (k, l) = (j + m, j + n);
        if k > state.n_max || l > state.n_max {
            break;
        }
        let coeff = (0.5 * (ln_factorial(l) + ln_factorial(k)) - ln_factorial(j)).exp();
        acc += state.rho[(l, k)] * coeff;
    }
    Ok(acc)
}

/// Symmetrically ordered first and second moments of `(x, p)` with
/// `x = a + a†`, `p = -i(a - a†)`.
pub fn quadrature_moments(state: &FockState) -> Result<([f64; 2], [[f64; 2]; 2]), OracleError> {
    let a = expectation(state, 0, 1)?;
    let a2 = expectation(state, 0, 2)?;
    let n = expectation(state, 1, 1)?.re;
    let mean = [2.0 * a.re, 2.0 * a.im];
    let xx = 2.0 * a2.re + 2.0 * n + 1.0;
    let pp = -2.0 * a2.re + 2.0 * n + 1.0;
    let xp = 2.0 * a2.im;
    Ok((
        mean,
        [
            [xx - mean[0] * mean[0], xp - mean[0] * mean[1]],
            [xp - mean[0] * mean[1], pp - mean[1] * mean[1]],
        ],
    ))
}

/// Wigner function of `ρ` on `grid`, normalized so `∫ W dx dp = 1`.
///
/// With `r² = x² + p²` and `φ = arg(x + ip)`, the element `|m⟩⟨n|`
/// (`m = n + d`) contributes
/// `(-1)^n e^{-idφ} sqrt(n!/m!) r^d e^{-r²/2} L_n^d(r²) / 2π`.
pub fn exact_wigner(state: &FockState, grid: &GridSpec) -> WignerGrid {
    let dim = state.n_max + 1;
    let rho = &state.rho;
    WignerGrid::from_fn(*grid, |x, p| {
        let r2 = x * x + p * p;
        let phi = p.atan2(x);
        let mut acc = 0.0;
        for d in 0..dim {
            let g = laguerre_functions(dim - d, d, r2);
            let rot = C64::from_polar(1.0, -(d as f64) * phi);
            let mut s = C64::new(0.0, 0.0);
            for (n, gn) in g.iter().enumerate() {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                s += rho[(n + d, n)] * (sign * gn);
            }
            let term = (s * rot).re;
            acc += if d == 0 { term } else { 2.0 * term };
        }
        acc / (2.0 * std::f64::consts::PI)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_stream;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_density(dim: usize, seed: u64) -> DenseMatrix {
        let mut s = gaussian_stream(seed);
        let b = DenseMatrix::from_fn(dim, |_, _| s.next_complex());
        let m = &b * &b.adjoint();
        let t = m.trace();
        m.scale(t.inv())
    }

    #[test]
    fn vacuum_derivative() {
        let p = ModelParams::new(0.0, 0.3, 0.2).unwrap();
        let d = lindblad_rhs(&FockState::vacuum(6).rho, &p);
        for i in 0..7 {
            for j in 0..7 {
                let want = match (i, j) {
                    (0, 0) => -2.0,
                    (1, 1) => 2.0,
                    _ => 0.0,
                };
                assert!((d[(i, j)] - c(want, 0.0)).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn fast_generator_matches_operator_products() {
        let p = ModelParams::new(0.7, -0.4, 0.3).unwrap();
        for &dim in &[5, 12] {
            let rho = random_density(dim, dim as u64);
            let a = lindblad_rhs(&rho, &p);
            let b = lindblad_rhs_dense(&rho, &p);
            assert!((&a - &b).frobenius_norm() < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn hermitian_fast_path_agrees() {
        let p = ModelParams::new(0.7, -0.4, 0.3).unwrap();
        for &dim in &[2, 3, 9] {
            let rho = random_density(dim, 40 + dim as u64);
            let gen = Generator::new(&p, dim);
            let mut a = vec![c(0.0, 0.0); dim * dim];
            let mut b = a.clone();
            gen.apply(rho.as_slice(), &mut a);
            gen.apply_hermitian(rho.as_slice(), &mut b);
            let err = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-13, "dim {dim}: {err}");
        }
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let p = ModelParams::new(0.5, 0.6, 0.1).unwrap();
        for seed in 0..5 {
            let rho = random_density(15, seed);
            let d = lindblad_rhs(&rho, &p);
            assert!(d.trace().norm() < 1e-12);
            assert!(d.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn moments_of_simple_states() {
        let v = FockState::vacuum(10);
        assert_eq!(expectation(&v, 1, 1).unwrap(), c(0.0, 0.0));
        let one = FockState::number(10, 1);
        assert!((expectation(&one, 1, 1).unwrap() - 1.0).norm() < 1e-15);
        let coh = FockState::coherent(60, c(2.0, 0.0));
        assert!((expectation(&coh, 1, 1).unwrap() - 4.0).norm() < 1e-8);
        assert!((expectation(&coh, 0, 1).unwrap() - 2.0).norm() < 1e-8);
        assert!(matches!(
            expectation(&v, 3, 3),
            Err(OracleError::Accuracy { .. })
        ));
    }

    #[test]
    fn number_state_wigner_at_origin() {
        let g = GridSpec::square(0.0, 1);
        let two_pi = 2.0 * std::f64::consts::PI;
        let w0 = exact_wigner(&FockState::vacuum(8), &g);
        assert!((w0.values[0] - 1.0 / two_pi).abs() < 1e-14);
        let w1 = exact_wigner(&FockState::number(8, 1), &g);
        assert!((w1.values[0] + 1.0 / two_pi).abs() < 1e-14);
    }

    #[test]
    fn coherent_wigner_is_displaced_vacuum() {
        let alpha = c(1.2, -0.7);
        let st = FockState::coherent(50, alpha);
        let grid = GridSpec::square(7.0, 41);
        let w = exact_wigner(&st, &grid);
        let (x0, p0) = (2.0 * alpha.re, 2.0 * alpha.im);
        for j in 0..grid.np {
            for i in 0..grid.nx {
                let (x, p) = (grid.x(i), grid.p(j));
                let want = (-0.5 * ((x - x0).powi(2) + (p - p0).powi(2))).exp()
                    / (2.0 * std::f64::consts::PI);
                assert!((w.at(i, j) - want).abs() < 1e-10, "({x},{p})");
            }
        }
    }

    #[test]
    fn quadratures_of_a_coherent_state() {
        let st = FockState::coherent(50, c(0.5, 1.0));
        let (m, v) = quadrature_moments(&st).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-10 && (m[1] - 2.0).abs() < 1e-10);
        assert!((v[0][0] - 1.0).abs() < 1e-10 && (v[1][1] - 1.0).abs() < 1e-10);
        assert!(v[0][1].abs() < 1e-10);
    }
}
