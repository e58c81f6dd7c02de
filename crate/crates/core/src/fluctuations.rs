//! Linearized quantum fluctuations around a limit cycle.
//!
//! Projecting the linearized Langevin equation on the Floquet modes leaves a
//! diffusing cycle offset `θ` and one damped amplitude `c₁`. The phase
//! diffusion kernel is `q₀†N q₀*`; `c₁` relaxes to a `T`-periodic variance
//! `γ C(τ)`. Conditioned on `θ` the state is a Gaussian with mean `d̄(θ)` and
//! covariance `V̄(θ)`, and the steady state is their uniform average over
//! one period.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::floquet::{realify, to_phase_space, FloquetError, FloquetSystem};
use crate::numerics::{Mat2, PeriodicSamples, Vec2, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluctuationError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error("inconsistent Floquet modes: {0}")]
    InconsistentModes(String),
    #[error("C(τ) did not converge within {periods} periods (last change {change:e})")]
    Convergence { periods: usize, change: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate covariance: det V = {det:e}")]
    DegenerateCovariance { det: f64 },
}

/// `N = [[-β̄², 2], [2, -β̄*²]]`.
pub fn diffusion_matrix(beta: C64) -> Mat2 {
    let b2 = beta * beta;
    Mat2::new(-b2, C64::new(2.0, 0.0), C64::new(2.0, 0.0), -b2.conj())
}

/// `q† N q*`.
pub fn noise_kernel(q: &Vec2, n: &Mat2) -> C64 {
    let u = [q[0].conj(), q[1].conj()];
    let nu = n.mul_vec(&u);
    u[0] * nu[0] + u[1] * nu[1]
}

/// Real-positive kernel samples, with the imaginary residue checked.
fn real_kernel(values: Vec<C64>, what: &str) -> Result<Vec<f64>, FluctuationError> {
    values
        .into_iter()
        .enumerate()
        .map(|(k, z)| {
            if z.im.abs() > 1e-8 * z.norm().max(1.0) {
                Err(FluctuationError::InconsistentModes(format!(
                    "{what} has imaginary part {:e} at grid point {k}",
                    z.im
                )))
            } else if z.re.is_nan() || z.re < 0.0 {
                Err(FluctuationError::InconsistentModes(format!(
                    "{what} is not positive ({}) at grid point {k}",
                    z.re
                )))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

/// `q₀†(τ_k) N(τ_k) q₀*(τ_k)` on the cycle grid.
pub fn theta_kernel(sys: &FloquetSystem) -> Result<Vec<f64>, FluctuationError> {
    let vals = sys
        .cycle
        .samples
        .iter()
        .zip(&sys.modes.q0)
        .map(|(b, q)| noise_kernel(q, &diffusion_matrix(*b)))
        .collect();
    real_kernel(vals, "q0†Nq0*")
}

/// `q₁†(τ_k) N(τ_k) q₁*(τ_k)` on the cycle grid.
pub fn c1_kernel(sys: &FloquetSystem) -> Result<Vec<f64>, FluctuationError> {
    let vals = sys
        .cycle
        .samples
        .iter()
        .zip(&sys.modes.q1)
        .map(|(b, q)| noise_kernel(q, &diffusion_matrix(*b)))
        .collect();
    real_kernel(vals, "q1†Nq1*")
}

/// Cumulative trapezoid of periodic grid samples, extended to any `τ ≥ 0`.
fn periodic_integral(kernel: &[f64], h: f64, tau: f64) -> f64 {
    let n = kernel.len();
    let per_period: f64 = kernel.iter().sum::<f64>() * h;
    let periods = (tau / (h * n as f64)).floor();
    let mut rest = tau - periods * h * n as f64;
    let mut acc = periods * per_period;
    let mut k = 0;
    while rest >= h && k < n {
        acc += 0.5 * h * (kernel[k] + kernel[(k + 1) % n]);
        rest -= h;
        k += 1;
    }
    if rest > 0.0 {
        let (a, b) = (kernel[k % n], kernel[(k + 1) % n]);
        let s = rest / h;
        acc += rest * (a + 0.5 * s * (b - a));
    }
    acc
}

/// `Var[θ(τ) − θ(0)] = γ ∫₀^τ q₀†N q₀* dτ'`.
pub fn theta_variance(sys: &FloquetSystem, gamma: f64, tau: f64) -> Result<f64, FluctuationError> {
    if !(tau >= 0.0) || !(gamma > 0.0) {
        return Err(FluctuationError::Precondition(format!(
            "need tau >= 0 and gamma > 0, got tau = {tau}, gamma = {gamma}"
        )));
    }
    let kernel = theta_kernel(sys)?;
    Ok(gamma * periodic_integral(&kernel, sys.cycle.spacing(), tau))
}

/// Phase-diffusion curve on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaDiffusion {
    pub times: Vec<f64>,
    pub variance: Vec<f64>,
    /// Least-squares slope of the variance sampled at whole periods.
    pub slope: f64,
    /// `γ (1/T) ∫₀^T q₀†N q₀* dτ`.
    pub mean_rate: f64,
}

pub fn theta_diffusion(
    sys: &FloquetSystem,
    gamma: f64,
    t_max: f64,
    n_points: usize,
) -> Result<ThetaDiffusion, FluctuationError> {
    if n_points < 2 || !(t_max > 0.0) || !(gamma > 0.0) {
        return Err(FluctuationError::Precondition(
            "need n_points >= 2, t_max > 0 and gamma > 0".into(),
        ));
    }
    let kernel = theta_kernel(sys)?;
    let h = sys.cycle.spacing();
    let period = sys.period();
    let times: Vec<f64> = (0..n_points)
        .map(|i| t_max * i as f64 / (n_points - 1) as f64)
        .collect();
    let variance = times
        .iter()
        .map(|&t| gamma * periodic_integral(&kernel, h, t))
        .collect();
    let mean_rate = gamma * kernel.iter().sum::<f64>() / kernel.len() as f64;

    let n_periods = ((t_max / period).floor() as usize).max(10);
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..=n_periods {
        let x = k as f64 * period;
        let y = gamma * periodic_integral(&kernel, h, x);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = (n_periods + 1) as f64;
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok(ThetaDiffusion {
        times,
        variance,
        slope,
        mean_rate,
    })
}

/// Periodic variance kernel `C(τ_k)` with `⟨c₁²⟩ = γ C`.
///
/// Solves `Σ' = 2μ₁Σ + g` with `g = q₁†N q₁*` period after period from
/// `Σ(0) = 0` until successive periods agree.
pub fn c_kernel(sys: &FloquetSystem) -> Result<Vec<f64>, FluctuationError> {
    c_kernel_with_budget(sys, 200)
}

pub fn c_kernel_with_budget(
    sys: &FloquetSystem,
    max_periods: usize,
) -> Result<Vec<f64>, FluctuationError> {
    let mu1 = sys.mu[1];
    if !(mu1.re < 0.0) {
        return Err(FluctuationError::Precondition(format!(
            "Re mu1 = {} is not negative",
            mu1.re
        )));
    }
    let g = c1_kernel(sys)?;
    let n = g.len();
    let h = sys.cycle.spacing();
    let rate = 2.0 * mu1.re;
    let g_interp = PeriodicSamples::new(sys.period(), g.clone());
    let mut rhs = |t: f64, s: &f64| rate * s + g_interp.at(t);
    let mut sigma = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    for _ in 0..max_periods {
        let mut cur = Vec::with_capacity(n);
        for k in 0..n {
            cur.push(sigma);
            sigma = crate::numerics::rk4_step(&mut rhs, k as f64 * h, &sigma, h);
        }
        if let Some(p) = &prev {
            change = p
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < 1e-10 {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(FluctuationError::Convergence {
        periods: max_periods,
        change,
    })
}

/// One cycle-point Gaussian in phase space `(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSnapshot {
    pub theta: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl GaussianSnapshot {
    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.cov;
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [m - r, m + r]
    }

    /// Largest standard deviation along any direction.
    pub fn max_sigma(&self) -> f64 {
        self.eigenvalues()[1].max(0.0).sqrt()
    }

    /// `exp(-½ rᵀV⁻¹r) / (2π √det V)`, `r` measured from the mean.
    pub fn density(&self, x: f64, p: f64) -> f64 {
        GaussianEval::new(self)
            .map(|g| g.at(x, p))
            .unwrap_or(f64::NAN)
    }
}

/// Precomputed inverse covariance for repeated evaluation.
#[derive(Debug, Clone, Copy)]
struct GaussianEval {
    mean: [f64; 2],
    inv: [f64; 3],
    norm: f64,
}

impl GaussianEval {
    fn new(s: &GaussianSnapshot) -> Result<Self, FluctuationError> {
        let det = s.det();
        if !(det >= 1e-12) {
            return Err(FluctuationError::DegenerateCovariance { det });
        }
        let [[a, b], [_, d]] = s.cov;
        Ok(GaussianEval {
            mean: s.mean,
            inv: [d / det, -b / det, a / det],
            norm: 1.0 / (2.0 * std::f64::consts::PI * det.sqrt()),
        })
    }

    fn at(&self, x: f64, p: f64) -> f64 {
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        let q = self.inv[0] * dx * dx + 2.0 * self.inv[1] * dx * dp + self.inv[2] * dp * dp;
        self.norm * (-0.5 * q).exp()
    }
}

/// Linearized steady state of one cycle at one `γ`: holds the periodic
/// kernels and interpolants needed to evaluate snapshots at any `θ`.
#[derive(Debug, Clone)]
pub struct LinearizedState {
    pub gamma: f64,
    pub period: f64,
    /// `C(τ_k)`.
    pub c: Vec<f64>,
    beta: PeriodicSamples<C64>,
    p1: PeriodicSamples<Vec2>,
    q0: PeriodicSamples<Vec2>,
    c_interp: PeriodicSamples<f64>,
}

impl LinearizedState {
    pub fn new(sys: &FloquetSystem, gamma: f64) -> Result<Self, FluctuationError> {
        if !(gamma > 0.0) {
            return Err(FluctuationError::Precondition(format!(
                "gamma = {gamma} must be positive"
            )));
        }
        let c = c_kernel(sys)?;
        let g = c1_kernel(sys)?;
        let period = sys.period();
        let mu = sys.mu;
        let dmode = |modes: &[Vec2], mu: C64, left: bool| -> Vec<Vec2> {
            modes
                .iter()
                .zip(&sys.stability)
                .map(|(v, l)| {
                    if left {
                        // q̇ = (μ* - L†) q
                        let lq = l.adjoint().mul_vec(v);
                        [mu.conj() * v[0] - lq[0], mu.conj() * v[1] - lq[1]]
                    } else {
                        let lp = l.mul_vec(v);
                        [lp[0] - mu * v[0], lp[1] - mu * v[1]]
                    }
                })
                .collect()
        };
        let dc: Vec<f64> = c
            .iter()
            .zip(&g)
            .map(|(ck, gk)| 2.0 * mu[1].re * ck + gk)
            .collect();
        Ok(LinearizedState {
            gamma,
            period,
            beta: sys.cycle.interpolant(),
            p1: PeriodicSamples::with_derivatives(
                period,
                sys.modes.p1.clone(),
                dmode(&sys.modes.p1, mu[1], false),
            ),
            q0: PeriodicSamples::with_derivatives(
                period,
                sys.modes.q0.clone(),
                dmode(&sys.modes.q0, mu[0], true),
            ),
            c_interp: PeriodicSamples::with_derivatives(period, c.clone(), dc),
            c,
        })
    }

    /// `C(θ)`.
    pub fn c_at(&self, theta: f64) -> f64 {
        self.c_interp.at(theta)
    }

    /// `U q₀(θ)` in the real plane (the vacuum direction of `V̄`).
    pub fn goldstone_direction(&self, theta: f64) -> Option<[f64; 2]> {
        realify(&self.q0.at(theta))
    }

    /// `d̄ = U(β̄, β̄*)ᵀ/√γ` and `V̄ = 1 + C U p₁ p₁ᵀ Uᵀ`.
    pub fn snapshot(&self, theta: f64) -> Result<GaussianSnapshot, FluctuationError> {
        let b = self.beta.at(theta);
        let s = 1.0 / self.gamma.sqrt();
        let up = to_phase_space(&self.p1.at(theta));
        let scale = up[0].norm().max(up[1].norm()).max(1.0);
        if up[0].im.abs().max(up[1].im.abs()) > 1e-8 * scale {
            return Err(FluctuationError::InconsistentModes(format!(
                "U p1 is not real at theta = {theta}"
            )));
        }
        let a = [up[0].re, up[1].re];
        let c = self.c_at(theta);
        Ok(GaussianSnapshot {
            theta,
            mean: [2.0 * b.re * s, 2.0 * b.im * s],
            cov: [
                [1.0 + c * a[0] * a[0], c * a[0] * a[1]],
                [c * a[0] * a[1], 1.0 + c * a[1] * a[1]],
            ],
        })
    }

    /// Snapshots at the midpoints `θ_j = (j + ½) T / n`.
    pub fn snapshots(&self, n_theta: usize) -> Result<Vec<GaussianSnapshot>, FluctuationError> {
        (0..n_theta)
            .map(|j| self.snapshot((j as f64 + 0.5) * self.period / n_theta as f64))
            .collect()
    }

    /// Uniform θ-mixture of the snapshot Gaussians on `grid`.
    pub fn mixture_wigner(
        &self,
        grid: &GridSpec,
        n_theta: usize,
    ) -> Result<WignerGrid, FluctuationError> {
        if n_theta < 64 {
            return Err(FluctuationError::Precondition(format!(
                "n_theta = {n_theta} < 64"
            )));
        }
        let snaps = self.snapshots(n_theta)?;
        let spec = grid.covering(&snaps, 5.0);
        let evals: Vec<GaussianEval> = snaps
            .iter()
            .map(GaussianEval::new)
            .collect::<Result<_, _>>()?;
        let w = 1.0 / n_theta as f64;
        Ok(WignerGrid::from_fn(spec, |x, p| {
            evals.iter().map(|g| g.at(x, p)).sum::<f64>() * w
        }))
    }
}

/// Snapshot at cycle offset `θ`.
pub fn gaussian_moments(
    sys: &FloquetSystem,
    gamma: f64,
    theta: f64,
) -> Result<GaussianSnapshot, FluctuationError> {
    LinearizedState::new(sys, gamma)?.snapshot(theta)
}

/// Linearized mixture Wigner function of the cycle.
pub fn mixture_wigner(
    sys: &FloquetSystem,
    gamma: f64,
    grid: &GridSpec,
    n_theta: usize,
) -> Result<WignerGrid, FluctuationError> {
    LinearizedState::new(sys, gamma)?.mixture_wigner(grid, n_theta)
}

/// Rectangular phase-space grid; `nx` points from `x_min` to `x_max`
/// inclusive, likewise for `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        GridSpec {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nx: n,
            np: n,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx.max(2) - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np.max(2) - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    /// Extend the ranges, keeping the point counts, so every snapshot's
    /// mean ± `k` standard deviations lies inside.
    pub fn covering(&self, snaps: &[GaussianSnapshot], k: f64) -> GridSpec {
        let mut g = *self;
        for s in snaps {
            let r = k * s.max_sigma();
            g.x_min = g.x_min.min(s.mean[0] - r);
            g.x_max = g.x_max.max(s.mean[0] + r);
            g.p_min = g.p_min.min(s.mean[1] - r);
            g.p_max = g.p_max.max(s.mean[1] + r);
        }
        g
    }
}

/// Real function sampled on a [`GridSpec`], row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn from_fn<Fn_>(spec: GridSpec, f: Fn_) -> Self
    where
        Fn_: Fn(f64, f64) -> f64 + Sync,
    {
        let mut values = vec![0.0; spec.nx * spec.np];
        values
            .par_chunks_mut(spec.nx)
            .enumerate()
            .for_each(|(j, row)| {
                let p = spec.p(j);
                for (i, v) in row.iter_mut().enumerate() {
                    *v = f(spec.x(i), p);
                }
            });
        WignerGrid { spec, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    pub fn cell_area(&self) -> f64 {
        self.spec.dx() * self.spec.dp()
    }

    /// Riemann sum times the cell area.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `(⟨x⟩, ⟨p⟩)` by Riemann sum, normalized by the grid mass.
    pub fn mean(&self) -> [f64; 2] {
        let (mut sx, mut sp, mut s) = (0.0, 0.0, 0.0);
        for j in 0..self.spec.np {
            for i in 0..self.spec.nx {
                let w = self.at(i, j);
                sx += w * self.spec.x(i);
                sp += w * self.spec.p(j);
                s += w;
            }
        }
        [sx / s, sp / s]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance to another grid with the same spec.
    pub fn sup_distance(&self, other: &WignerGrid) -> Option<f64> {
        if self.spec != other.spec {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        )
    }
}
