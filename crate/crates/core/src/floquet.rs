//! Floquet analysis of a classical limit cycle.
//!
//! Fluctuations around the orbit obey `ḃ = L(τ) b` with the `T`-periodic
//! stability matrix `L`. The fundamental matrix `R(τ)` over one period gives
//! the monodromy `R(T) = exp(M T)`; the eigensystem of `M` and the periodic
//! part `P(τ) = R(τ) exp(-M τ)` define the Floquet modes
//! `p_j(τ) = P(τ) v_j` and `q_j†(τ) = w_j† P⁻¹(τ)`.
//!
//! Mode normalization: `p₀` is the orbit tangent `(∂τβ̄, ∂τβ̄*)` itself, so
//! that the Goldstone coordinate is a time shift; `p₁` is scaled to the
//! conjugate-symmetric form `(z, z*)` with `|z(0)| = 1`. Left modes follow
//! from bi-orthonormality.

use crate::classical::LimitCycle;
use crate::numerics::{
    dot_h, eig2_with_det, norm2, rk4_step, Mat2, NumericsError, PeriodicSamples, Vec2, C64, I,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FloquetError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("fundamental-matrix integration diverged at t = {time}")]
    Integration { time: f64 },
    #[error("degenerate monodromy: multipliers {0} and {1} both near 1")]
    DegenerateMonodromy(C64, C64),
    #[error("Floquet mode {mode} failed its consistency check: {detail}")]
    ModeConsistency { mode: &'static str, detail: String },
}

/// `L = [[1 - 2|β̄|² + iΔ, -β̄²], [-β̄*², 1 - 2|β̄|² - iΔ]]`.
pub fn stability_matrix(beta: C64, delta: f64) -> Mat2 {
    let d = 1.0 - 2.0 * beta.norm_sqr();
    Mat2::new(
        C64::new(d, delta),
        -beta * beta,
        -(beta * beta).conj(),
        C64::new(d, -delta),
    )
}

/// Phase-space image `U v` with `U = [[1, 1], [-i, i]]`.
pub fn to_phase_space(v: &Vec2) -> Vec2 {
    [v[0] + v[1], -I * (v[0] - v[1])]
}

/// Real part of `U v`, checking that the imaginary residue is negligible
/// relative to the vector size.
pub fn realify(v: &Vec2) -> Option<[f64; 2]> {
    let u = to_phase_space(v);
    let scale = norm2(&u).max(f64::MIN_POSITIVE);
    if u[0].im.abs().max(u[1].im.abs()) > 1e-6 * scale {
        return None;
    }
    Some([u[0].re, u[1].re])
}

/// Integration step used over the cycle grid: grid spacing / substeps.
fn fine_step(cycle: &LimitCycle) -> (usize, f64) {
    let sub = cycle.substeps.max(1);
    (sub, cycle.spacing() / sub as f64)
}

/// Fundamental matrix samples `R(τ_k)`, `k = 0..=N` (the last entry is the
/// monodromy `R(T)`), with `det R(τ_k)` tracked separately.
///
/// `R` is propagated as `Q U` with unitary `Q` and upper-triangular `U`,
/// re-factored after every step. This is the same RK4 map, but the
/// determinant stays accurate when one multiplier is many orders of
/// magnitude below the other, where `ad - bc` would cancel.
#[derive(Debug, Clone)]
pub struct Fundamental {
    pub r: Vec<Mat2>,
    pub det: Vec<C64>,
}

/// Gram–Schmidt factorization `Y = Q U` of a 2×2 matrix.
fn qr2(y: &Mat2) -> (Mat2, Mat2) {
    let c0 = [y.m[0][0], y.m[1][0]];
    let c1 = [y.m[0][1], y.m[1][1]];
    let u11 = norm2(&c0);
    let q0 = [c0[0] / u11, c0[1] / u11];
    let u12 = dot_h(&q0, &c1);
    let r1 = [c1[0] - u12 * q0[0], c1[1] - u12 * q0[1]];
    let u22 = norm2(&r1);
    let q1 = [r1[0] / u22, r1[1] / u22];
    let zero = C64::new(0.0, 0.0);
    (
        Mat2::from_columns(q0, q1),
        Mat2::new(C64::new(u11, 0.0), u12, zero, C64::new(u22, 0.0)),
    )
}

pub fn fundamental_matrix(cycle: &LimitCycle, delta: f64) -> Result<Fundamental, FloquetError> {
    let beta = cycle.interpolant();
    let (sub, dt) = fine_step(cycle);
    let mut rhs = |t: f64, r: &Mat2| stability_matrix(beta.at(t), delta) * *r;
    let n = cycle.n_grid();
    let mut r_out = Vec::with_capacity(n + 1);
    let mut det_out = Vec::with_capacity(n + 1);
    let mut q = Mat2::identity();
    let mut u = Mat2::identity();
    r_out.push(q);
    det_out.push(C64::new(1.0, 0.0));
    for k in 0..n {
        for s in 0..sub {
            let t = (k * sub + s) as f64 * dt;
            let y = rk4_step(&mut rhs, t, &q, dt);
            let (qn, un) = qr2(&y);
            q = qn;
            u = un * u;
        }
        let r = q * u;
        if !(r.is_finite() && u.m[1][1].re > 0.0) {
            return Err(FloquetError::Integration {
                time: (k + 1) as f64 * cycle.spacing(),
            });
        }
        r_out.push(r);
        det_out.push(q.det() * u.m[0][0] * u.m[1][1]);
    }
    Ok(Fundamental {
        r: r_out,
        det: det_out,
    })
}

/// Floquet exponents and eigenvectors of the monodromy.
#[derive(Debug, Clone, Copy)]
pub struct MonodromyEigen {
    /// `[μ₀, μ₁]`; `μ₀` belongs to the multiplier closest to 1.
    pub mu: [C64; 2],
    pub multipliers: [C64; 2],
    /// Right eigenvectors, unit norm.
    pub v: [Vec2; 2],
    /// Left eigenvectors with `w_j† v_l = δ_jl`.
    pub w: [Vec2; 2],
}

pub fn monodromy_eigen(r_t: &Mat2, period: f64) -> Result<MonodromyEigen, FloquetError> {
    monodromy_eigen_with_det(r_t, r_t.det(), period)
}

/// As [`monodromy_eigen`] with an independently known `det R(T)`.
pub fn monodromy_eigen_with_det(
    r_t: &Mat2,
    det: C64,
    period: f64,
) -> Result<MonodromyEigen, FloquetError> {
    let eig = eig2_with_det(r_t, det)?;
    let d0 = (eig.values[0] - 1.0).norm();
    let d1 = (eig.values[1] - 1.0).norm();
    if d0 < 1e-6 && d1 < 1e-6 {
        return Err(FloquetError::DegenerateMonodromy(
            eig.values[0],
            eig.values[1],
        ));
    }
    let (g, o) = if d0 <= d1 { (0, 1) } else { (1, 0) };
    let log_of = |z: C64| -> Result<C64, FloquetError> {
        if z.re < 0.0 && z.im.abs() <= 1e-10 * z.norm() {
            return Err(NumericsError::BranchCut { eigenvalue: z }.into());
        }
        Ok(z.ln() / period)
    };
    Ok(MonodromyEigen {
        mu: [log_of(eig.values[g])?, log_of(eig.values[o])?],
        multipliers: [eig.values[g], eig.values[o]],
        v: [eig.right[g], eig.right[o]],
        w: [eig.left[g], eig.left[o]],
    })
}

/// Scale `v` by a complex factor so it reads `(z, z*)` with `|z| = 1`.
fn conjugate_symmetric(v: &Vec2) -> Vec2 {
    let (a, b) = (v[0], v[1]);
    // c b = conj(c a)  ⇔  arg c = arg(conj(a)/b) / 2
    let phase = (a.conj() / b).arg() / 2.0;
    let mut c = C64::from_polar(1.0 / a.norm(), phase);
    let z = c * a;
    if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
        c = -c;
    }
    [c * a, c * b]
}

/// Mode samples on the cycle grid, `k = 0..N`.
#[derive(Debug, Clone)]
pub struct FloquetModes {
    pub p0: Vec<Vec2>,
    pub p1: Vec<Vec2>,
    pub q0: Vec<Vec2>,
    pub q1: Vec<Vec2>,
    /// Relative end-of-period mismatch of each mode, in the order p0, p1, q0, q1.
    pub periodicity_defects: [f64; 4],
}

/// Direction of integration over one period.
#[derive(Clone, Copy, PartialEq)]
enum Sweep {
    Forward,
    Backward,
}

/// Integrate a right mode `ṗ = (L - μ) p` or a left mode `u̇ = u (μ - L)`
/// (`u = q†`) over one period, sampling on the cycle grid.
fn sweep_mode(
    beta: &PeriodicSamples<C64>,
    delta: f64,
    n: usize,
    sub: usize,
    dt: f64,
    mu: C64,
    start: Vec2,
    left: bool,
    sweep: Sweep,
) -> Result<(Vec<Vec2>, Vec2), FloquetError> {
    let mut rhs = |t: f64, y: &Vec2| -> Vec2 {
        let l = stability_matrix(beta.at(t), delta);
        if left {
            let ul = Mat2::vec_mul(y, &l);
            [mu * y[0] - ul[0], mu * y[1] - ul[1]]
        } else {
            let lp = l.mul_vec(y);
            [lp[0] - mu * y[0], lp[1] - mu * y[1]]
        }
    };
    let mut samples = vec![[C64::new(0.0, 0.0); 2]; n];
    let mut y = start;
    let total = n * sub;
    match sweep {
        Sweep::Forward => {
            samples[0] = y;
            for step in 0..total {
                y = rk4_step(&mut rhs, step as f64 * dt, &y, dt);
                if (step + 1) % sub == 0 && (step + 1) / sub < n {
                    samples[(step + 1) / sub] = y;
                }
            }
        }
        Sweep::Backward => {
            for step in (0..total).rev() {
                y = rk4_step(&mut rhs, (step + 1) as f64 * dt, &y, -dt);
                if step % sub == 0 {
                    samples[step / sub] = y;
                }
            }
        }
    }
    if !(y[0].is_finite() && y[1].is_finite()) {
        return Err(FloquetError::Integration {
            time: n as f64 * sub as f64 * dt,
        });
    }
    Ok((samples, y))
}

/// Complete Floquet description of a limit cycle.
#[derive(Debug, Clone)]
pub struct FloquetSystem {
    pub cycle: LimitCycle,
    pub delta: f64,
    /// `L(τ_k)`, `k = 0..N`.
    pub stability: Vec<Mat2>,
    /// `R(τ_k)` and `det R(τ_k)`, `k = 0..=N`.
    pub fundamental: Fundamental,
    pub monodromy: Mat2,
    /// `M = log(R(T)) / T`.
    pub generator: Mat2,
    /// Measured `[μ₀, μ₁]`.
    pub mu: [C64; 2],
    pub v: [Vec2; 2],
    pub w: [Vec2; 2],
    pub modes: FloquetModes,
}

impl FloquetSystem {
    pub fn build(cycle: &LimitCycle) -> Result<Self, FloquetError> {
        let delta = cycle.params.delta;
        let period = cycle.period;
        let fund = fundamental_matrix(cycle, delta)?;
        let monodromy = *fund.r.last().expect("non-empty");
        let eig =
            monodromy_eigen_with_det(&monodromy, *fund.det.last().expect("non-empty"), period)?;

        let tangent: Vec2 = [cycle.derivatives[0], cycle.derivatives[0].conj()];
        let e0 = eig.v[0];
        let v0 = {
            let c = dot_h(&e0, &tangent) / dot_h(&e0, &e0);
            [e0[0] * c, e0[1] * c]
        };
        let v1 = conjugate_symmetric(&eig.v[1]);
        let vinv = Mat2::from_columns(v0, v1)
            .inverse()
            .ok_or(NumericsError::Singular)?;
        let w0 = [vinv.m[0][0].conj(), vinv.m[0][1].conj()];
        let w1 = [vinv.m[1][0].conj(), vinv.m[1][1].conj()];

        let modes = floquet_modes(cycle, delta, eig.mu, [v0, v1], [w0, w1])?;
        // M = V diag(μ) V⁻¹, the principal logarithm of R(T) over T
        let vm = Mat2::from_columns(v0, v1);
        let generator = vm * Mat2::diag(eig.mu[0], eig.mu[1]) * vinv;
        let stability = cycle
            .samples
            .iter()
            .map(|b| stability_matrix(*b, delta))
            .collect();
        Ok(FloquetSystem {
            cycle: cycle.clone(),
            delta,
            stability,
            fundamental: fund,
            monodromy,
            generator,
            mu: eig.mu,
            v: [v0, v1],
            w: [w0, w1],
            modes,
        })
    }

    pub fn period(&self) -> f64 {
        self.cycle.period
    }

    pub fn n_grid(&self) -> usize {
        self.cycle.n_grid()
    }

    /// `|μ₀| T`, the Goldstone residual.
    pub fn goldstone_residual(&self) -> f64 {
        self.mu[0].norm() * self.period()
    }

    /// `(1/T) ∫ tr L dτ` by periodic trapezoid on the grid.
    pub fn mean_trace(&self) -> f64 {
        mean_trace(&self.cycle)
    }
}

/// `(1/T) ∫₀^T tr L dτ` with `tr L = 2 - 4|β̄|²`.
pub fn mean_trace(cycle: &LimitCycle) -> f64 {
    2.0 - 4.0 * cycle.mean_intensity()
}

/// `∫₀^{τ_k} tr L dτ'` for `k = 0..=N` by trapezoid with endpoint-derivative
/// correction (fourth order).
pub fn cumulative_trace(cycle: &LimitCycle) -> Vec<f64> {
    let n = cycle.n_grid();
    let h = cycle.spacing();
    let tr = |k: usize| 2.0 - 4.0 * cycle.samples[k % n].norm_sqr();
    // d/dτ tr L = -8 Re(β̄* ∂τβ̄)
    let dtr = |k: usize| {
        let k = k % n;
        -8.0 * (cycle.samples[k].conj() * cycle.derivatives[k]).re
    };
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..n {
        acc += 0.5 * h * (tr(k) + tr(k + 1)) + h * h / 12.0 * (dtr(k) - dtr(k + 1));
        out.push(acc);
    }
    out
}

/// Right modes `p_j` and left modes `q_j` on the cycle grid.
///
/// Each mode is swept in the direction in which its ODE is contracting
/// towards it: `p₀` and `q₁` forward from `τ = 0`, `p₁` and `q₀` backward
/// from `τ = T`.
pub fn floquet_modes(
    cycle: &LimitCycle,
    delta: f64,
    mu: [C64; 2],
    v: [Vec2; 2],
    w: [Vec2; 2],
) -> Result<FloquetModes, FloquetError> {
    let beta = cycle.interpolant();
    let n = cycle.n_grid();
    let (sub, dt) = fine_step(cycle);
    let conj2 = |x: &Vec2| [x[0].conj(), x[1].conj()];
    let rel =
        |a: &Vec2, b: &Vec2| norm2(&[a[0] - b[0], a[1] - b[1]]) / norm2(b).max(f64::MIN_POSITIVE);

    let (p0, p0_end) = sweep_mode(&beta, delta, n, sub, dt, mu[0], v[0], false, Sweep::Forward)?;
    let (p1, p1_start) = sweep_mode(
        &beta,
        delta,
        n,
        sub,
        dt,
        mu[1],
        v[1],
        false,
        Sweep::Backward,
    )?;
    let (u0, u0_start) = sweep_mode(
        &beta,
        delta,
        n,
        sub,
        dt,
        mu[0],
        conj2(&w[0]),
        true,
        Sweep::Backward,
    )?;
    let (u1, u1_end) = sweep_mode(
        &beta,
        delta,
        n,
        sub,
        dt,
        mu[1],
        conj2(&w[1]),
        true,
        Sweep::Forward,
    )?;

    let defects = [
        rel(&p0_end, &v[0]),
        rel(&p1_start, &v[1]),
        rel(&conj2(&u0_start), &w[0]),
        rel(&conj2(&u1_end), &w[1]),
    ];
    for (name, d) in ["p0", "p1", "q0", "q1"].iter().zip(defects.iter()) {
        if !(*d <= 1e-5) {
            return Err(FloquetError::ModeConsistency {
                mode: name,
                detail: format!("periodicity defect {d:e} exceeds 1e-5 (grid too coarse?)"),
            });
        }
    }
    Ok(FloquetModes {
        p0,
        p1,
        q0: u0.iter().map(conj2).collect(),
        q1: u1.iter().map(conj2).collect(),
        periodicity_defects: defects,
    })
}

/// Closed-form left mode `q₁(τ) = (-i∂τβ̄, i∂τβ̄*) exp(μ₁ τ - ∫₀^τ tr L)`,
/// normalized to `f(0) = 1`.
pub fn analytic_q1(cycle: &LimitCycle, mu1: C64) -> Vec<Vec2> {
    let cum = cumulative_trace(cycle);
    (0..cycle.n_grid())
        .map(|k| {
            let d = cycle.derivatives[k];
            let f = (mu1.re * cycle.time(k) - cum[k]).exp();
            [-I * d * f, I * d.conj() * f]
        })
        .collect()
}
