//! Positive-P stochastic oracle and the projected linearized θ/c₁ dynamics.
//!
//! The positive-P amplitudes obey
//! `dβ  = [F + (1 + iΔ - β⁺β)β] dτ + √γ (√2 dξ + iβ dη)` and
//! `dβ⁺ = [F + (1 - iΔ - β⁺β)β⁺] dτ + √γ (√2 dξ* - iβ⁺ dη⁺)`,
//! and normally ordered moments follow from
//! `⟨a†^m a^n⟩ = ⟨β⁺^m β^n⟩ / γ^{(m+n)/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    find_limit_cycle, stationary_states, ClassicalError, CycleOptions, ModelParams,
};
use crate::floquet::FloquetSystem;
use crate::fluctuations::{theta_kernel, FluctuationError};
use crate::numerics::{GaussianStream, NoiseDraw, PeriodicSamples, Vec2, C64, I};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StochasticError {
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Fluctuation(#[from] FluctuationError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("trajectory diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("{diverged} of {total} trajectories diverged (more than 1%)")]
    Reliability { diverged: usize, total: usize },
    #[error("projected θ noise has imaginary variance fraction {fraction:e} (limit 1e-2)")]
    ModeConsistency { fraction: f64 },
}

/// Default escape radius for `|β|`, `|β⁺|`.
pub const DIVERGENCE_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PPState {
    pub beta: C64,
    pub beta_plus: C64,
    pub time: f64,
}

impl PPState {
    pub fn coherent(beta: C64) -> Self {
        PPState {
            beta,
            beta_plus: beta.conj(),
            time: 0.0,
        }
    }
}

/// One Euler–Maruyama step. `noise` holds white-noise values of variance
/// `1/dt`, so each increment is `dt` times the stored value.
pub fn pp_step(
    state: &PPState,
    params: &ModelParams,
    noise: &NoiseDraw,
) -> Result<PPState, StochasticError> {
    pp_step_with_radius(state, params, noise, DIVERGENCE_RADIUS)
}

pub fn pp_step_with_radius(
    state: &PPState,
    params: &ModelParams,
    noise: &NoiseDraw,
    radius: f64,
) -> Result<PPState, StochasticError> {
    let dt = noise.dt;
    let (b, bp) = (state.beta, state.beta_plus);
    let n = bp * b;
    let s = params.gamma.sqrt() * dt;
    let r2 = std::f64::consts::SQRT_2;
    let beta = b
        + (params.f + (C64::new(1.0, params.delta) - n) * b) * dt
        + s * (r2 * noise.xi + I * b * noise.eta);
    let beta_plus = bp
        + (params.f + (C64::new(1.0, -params.delta) - n) * bp) * dt
        + s * (r2 * noise.xi.conj() - I * bp * noise.eta_plus);
    let time = state.time + dt;
    if !(beta.norm() <= radius && beta_plus.norm() <= radius) {
        return Err(StochasticError::Divergence { time });
    }
    Ok(PPState {
        beta,
        beta_plus,
        time,
    })
}

/// Settings of an ensemble run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Moments are recorded every this many steps.
    pub record_every: usize,
    /// Start of the steady-state averaging window; `None` picks ten
    /// relaxation times of the attractor.
    pub window_start: Option<f64>,
    pub divergence_radius: f64,
}

impl EnsembleOptions {
    pub fn new(n_traj: usize, dt: f64, t_end: f64, seed: u64) -> Self {
        EnsembleOptions {
            n_traj,
            dt,
            t_end,
            seed,
            record_every: 100,
            window_start: None,
            divergence_radius: DIVERGENCE_RADIUS,
        }
    }
}

/// The moments tracked by [`simulate_ensemble`], as `(m, n)` in `⟨β⁺^m β^n⟩`.
pub const TRACKED: [(u32, u32); 4] = [(0, 1), (1, 1), (0, 2), (2, 2)];

/// Sample mean with standard errors of the real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: C64,
    pub se: [f64; 2],
}

impl Estimate {
    fn from_sums(sum: C64, sq: [f64; 2], count: usize) -> Self {
        let n = count as f64;
        let mean = sum / n;
        let var = |s: f64, m: f64| ((s / n - m * m).max(0.0) * n / (n - 1.0).max(1.0)).max(0.0);
        Estimate {
            mean,
            se: [
                (var(sq[0], mean.re) / n).sqrt(),
                (var(sq[1], mean.im) / n).sqrt(),
            ],
        }
    }

    pub fn scaled(&self, s: f64) -> Estimate {
        Estimate {
            mean: self.mean * s,
            se: [self.se[0] * s.abs(), self.se[1] * s.abs()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyMoment {
    pub m: u32,
    pub n: u32,
    /// `⟨β⁺^m β^n⟩` averaged over the window.
    pub stochastic: Estimate,
    /// Same, rescaled to `⟨a†^m a^n⟩`.
    pub quantum: Estimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub n_diverged: usize,
    pub dt: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `series[i][k]`: moment `TRACKED[i]` at `times[k]`.
    pub series: Vec<Vec<Estimate>>,
    pub window: [f64; 2],
    pub steady: Vec<SteadyMoment>,
}

impl EnsembleStats {
    pub fn steady_moment(&self, m: u32, n: u32) -> Option<&SteadyMoment> {
        self.steady.iter().find(|s| s.m == m && s.n == n)
    }
}

/// Starting points spread uniformly in time over the attractor, and the
/// slowest transverse relaxation rate.
fn attractor_samples(
    params: &ModelParams,
    count: usize,
) -> Result<(Vec<C64>, f64), StochasticError> {
    match find_limit_cycle(params, &CycleOptions::default()) {
        Ok(cyc) => {
            let interp = cyc.interpolant();
            let rate = match FloquetSystem::build(&cyc) {
                Ok(sys) => sys.mu[1].re.abs(),
                Err(_) => 1.0,
            };
            let pts = (0..count)
                .map(|j| interp.at(cyc.period * (j as f64 + 0.5) / count as f64))
                .collect();
            Ok((pts, rate))
        }
        Err(ClassicalError::NoLimitCycle { .. }) => {
            let st = stationary_states(params.f, params.delta)
                .into_iter()
                .filter(|s| s.stable)
                .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
                .ok_or(ClassicalError::NoLimitCycle { amplitude: 0.0 })?;
            let rate = st.lambda_plus.re.abs().min(st.lambda_minus.re.abs());
            Ok((vec![st.amplitude(); count], rate))
        }
        Err(e) => Err(e.into()),
    }
}

fn powers(state: &PPState, m: u32, n: u32) -> C64 {
    state.beta_plus.powu(m) * state.beta.powu(n)
}

/// Per-trajectory output: recorded moments and window averages, or `None`
/// if the trajectory escaped.
struct TrajectoryRecord {
    samples: Vec<[C64; 4]>,
    window_mean: [C64; 4],
}

fn run_trajectory(
    params: &ModelParams,
    opts: &EnsembleOptions,
    start: C64,
    index: usize,
    steps: usize,
    window_step: usize,
) -> Option<TrajectoryRecord> {
    let mut stream = GaussianStream::new(opts.seed, index as u64);
    let mut st = PPState::coherent(start);
    let record = |s: &PPState| TRACKED.map(|(m, n)| powers(s, m, n));
    let mut samples = Vec::with_capacity(steps / opts.record_every + 1);
    samples.push(record(&st));
    let mut acc = [C64::new(0.0, 0.0); 4];
    let mut count = 0usize;
    for k in 1..=steps {
        let noise = NoiseDraw::draw(&mut stream, opts.dt);
        st = pp_step_with_radius(&st, params, &noise, opts.divergence_radius).ok()?;
        if k >= window_step {
            let r = record(&st);
            for i in 0..4 {
                acc[i] += r[i];
            }
            count += 1;
        }
        if k % opts.record_every == 0 {
            samples.push(record(&st));
        }
    }
    let c = count.max(1) as f64;
    Some(TrajectoryRecord {
        samples,
        window_mean: acc.map(|a| a / c),
    })
}

/// Ensemble of positive-P trajectories started on the classical attractor.
///
/// Steady moments are per-trajectory time averages over the late window,
/// then averaged over trajectories; their standard errors therefore account
/// for time correlations within a trajectory.
pub fn simulate_ensemble(
    params: &ModelParams,
    opts: &EnsembleOptions,
) -> Result<EnsembleStats, StochasticError> {
    params.validate()?;
    if opts.n_traj < 100 {
        return Err(StochasticError::InvalidOptions(format!(
            "n_traj = {} < 100",
            opts.n_traj
        )));
    }
    if !(opts.dt > 0.0 && opts.t_end > opts.dt && opts.record_every > 0) {
        return Err(StochasticError::InvalidOptions(
            "need dt > 0, t_end > dt and record_every > 0".into(),
        ));
    }
    let (starts, rate) = attractor_samples(params, opts.n_traj)?;
    let steps = (opts.t_end / opts.dt).round() as usize;
    let w0 = opts.window_start.unwrap_or(10.0 / rate.max(1e-3));
    if w0 >= opts.t_end {
        return Err(StochasticError::InvalidOptions(format!(
            "window start {w0} is past t_end = {}",
            opts.t_end
        )));
    }
    let window_step = ((w0 / opts.dt).ceil() as usize).max(1);
    let n_rec = steps / opts.record_every + 1;

    let zero = C64::new(0.0, 0.0);
    let mut s_sum = vec![[zero; 4]; n_rec];
    let mut s_sq = vec![[[0.0f64; 2]; 4]; n_rec];
    let mut w_sum = [zero; 4];
    let mut w_sq = [[0.0f64; 2]; 4];
    let mut ok = 0usize;
    let mut diverged = 0usize;

    // Fixed chunks, reduced in index order: results do not depend on the
    // thread count.
    const CHUNK: usize = 256;
    for base in (0..opts.n_traj).step_by(CHUNK) {
        let end = (base + CHUNK).min(opts.n_traj);
        let recs: Vec<Option<TrajectoryRecord>> = (base..end)
            .into_par_iter()
            .map(|j| run_trajectory(params, opts, starts[j], j, steps, window_step))
            .collect();
        for rec in recs {
            let Some(rec) = rec else {
                diverged += 1;
                continue;
            };
            ok += 1;
            for (k, smp) in rec.samples.iter().enumerate() {
                for i in 0..4 {
                    s_sum[k][i] += smp[i];
                    s_sq[k][i][0] += smp[i].re * smp[i].re;
                    s_sq[k][i][1] += smp[i].im * smp[i].im;
                }
            }
            for i in 0..4 {
                let v = rec.window_mean[i];
                w_sum[i] += v;
                w_sq[i][0] += v.re * v.re;
                w_sq[i][1] += v.im * v.im;
            }
        }
    }
    if diverged * 100 > opts.n_traj {
        return Err(StochasticError::Reliability {
            diverged,
            total: opts.n_traj,
        });
    }
    let times = (0..n_rec)
        .map(|k| (k * opts.record_every) as f64 * opts.dt)
        .collect();
    let series = (0..4)
        .map(|i| {
            (0..n_rec)
                .map(|k| Estimate::from_sums(s_sum[k][i], s_sq[k][i], ok))
                .collect()
        })
        .collect();
    let steady = TRACKED
        .iter()
        .enumerate()
        .map(|(i, &(m, n))| {
            let est = Estimate::from_sums(w_sum[i], w_sq[i], ok);
            SteadyMoment {
                m,
                n,
                stochastic: est,
                quantum: est.scaled(params.gamma.powf(-0.5 * (m + n) as f64)),
            }
        })
        .collect();
    Ok(EnsembleStats {
        n_traj: opts.n_traj,
        n_diverged: diverged,
        dt: opts.dt,
        seed: opts.seed,
        times,
        series,
        window: [window_step as f64 * opts.dt, steps as f64 * opts.dt],
        steady,
    })
}

/// Output of [`linearized_theta_sim`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaSimResult {
    pub times: Vec<f64>,
    /// `Var[θ(τ) - θ(0)]` from the real part of the projected increments.
    pub theta_variance: Vec<f64>,
    /// `Re⟨θ²⟩` with the full complex increments.
    pub theta_complex_variance: Vec<f64>,
    /// Least-squares slope of `theta_variance` over the whole run.
    pub slope: f64,
    /// `γ (1/T) ∫ q₀†N q₀*`.
    pub predicted_slope: f64,
    /// Imaginary-to-real variance ratio of the projected θ noise.
    pub contamination: f64,
    /// Cycle-phase bin centres and `Re⟨c₁²⟩/γ` in each bin, taken over the
    /// second half of the run.
    pub phase_bins: Vec<f64>,
    pub c1_variance: Vec<f64>,
}

/// Integrates `dθ = √γ q₀†(τ+θ) n dτ` and `dc₁ = μ₁c₁ dτ + √γ q₁†(τ+θ) n dτ`
/// with `n = (√2ξ + iβ̄η, √2ξ* - iβ̄*η⁺)` for an ensemble started at
/// `θ = c₁ = 0`.
pub fn linearized_theta_sim(
    sys: &FloquetSystem,
    gamma: f64,
    dt: f64,
    t_end: f64,
    n_traj: usize,
    seed: u64,
) -> Result<ThetaSimResult, StochasticError> {
    if !(gamma > 0.0 && dt > 0.0 && t_end > dt && n_traj >= 2) {
        return Err(StochasticError::InvalidOptions(
            "need gamma > 0, dt > 0, t_end > dt, n_traj >= 2".into(),
        ));
    }
    let period = sys.period();
    let beta = sys.cycle.interpolant();
    let q0 = PeriodicSamples::new(period, sys.modes.q0.clone());
    let q1 = PeriodicSamples::new(period, sys.modes.q1.clone());

    // imaginary contamination of q₀†n over the cycle
    let (mut re2, mut im2) = (0.0, 0.0);
    for (b, q) in sys.cycle.samples.iter().zip(&sys.modes.q0) {
        let (r, i) = projected_variances(q, *b);
        re2 += r;
        im2 += i;
    }
    let contamination = im2 / re2;
    if !(contamination < 1e-2) {
        return Err(StochasticError::ModeConsistency {
            fraction: contamination,
        });
    }
    let kernel = theta_kernel(sys)?;
    let predicted_slope = gamma * kernel.iter().sum::<f64>() / kernel.len() as f64;

    let steps = (t_end / dt).round() as usize;
    let record_every = (steps / 200).max(1);
    let n_rec = steps / record_every + 1;
    let n_bins = 32;
    let mu1 = sys.mu[1];
    let sg = gamma.sqrt() * dt;
    let r2 = std::f64::consts::SQRT_2;

    struct Out {
        th_re: Vec<f64>,
        th_c: Vec<C64>,
        bins: Vec<(C64, usize)>,
    }
    let run = |j: usize| -> Out {
        let mut stream = GaussianStream::new(seed, j as u64);
        let (mut th_r, mut th_c, mut c1) = (0.0f64, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut th_re = Vec::with_capacity(n_rec);
        let mut th_cv = Vec::with_capacity(n_rec);
        th_re.push(0.0);
        th_cv.push(th_c);
        let mut bins = vec![(C64::new(0.0, 0.0), 0usize); n_bins];
        for k in 0..steps {
            let t = k as f64 * dt;
            let ph = t + th_r;
            let b = beta.at(ph);
            let noise = NoiseDraw::draw(&mut stream, dt);
            let n: Vec2 = [
                r2 * noise.xi + I * b * noise.eta,
                r2 * noise.xi.conj() - I * b.conj() * noise.eta_plus,
            ];
            let a0 = q0.at(ph);
            let a1 = q1.at(ph);
            let d0 = a0[0].conj() * n[0] + a0[1].conj() * n[1];
            let d1 = a1[0].conj() * n[0] + a1[1].conj() * n[1];
            th_r += sg * d0.re;
            th_c += sg * d0;
            c1 += mu1 * c1 * dt + sg * d1;
            if (k + 1) % record_every == 0 {
                th_re.push(th_r);
                th_cv.push(th_c);
            }
            if k >= steps / 2 {
                let phase = (t + dt + th_r).rem_euclid(period);
                let bin = ((phase / period * n_bins as f64) as usize).min(n_bins - 1);
                bins[bin].0 += c1 * c1;
                bins[bin].1 += 1;
            }
        }
        Out {
            th_re,
            th_c: th_cv,
            bins,
        }
    };
    let outs: Vec<Out> = (0..n_traj).into_par_iter().map(run).collect();

    let times: Vec<f64> = (0..n_rec).map(|k| (k * record_every) as f64 * dt).collect();
    let nf = n_traj as f64;
    let mut theta_variance = vec![0.0; n_rec];
    let mut theta_complex_variance = vec![0.0; n_rec];
    for k in 0..n_rec {
        let (mut s, mut sq, mut sc) = (0.0, 0.0, C64::new(0.0, 0.0));
        let mut mc = C64::new(0.0, 0.0);
        for o in &outs {
            s += o.th_re[k];
            sq += o.th_re[k] * o.th_re[k];
            sc += o.th_c[k] * o.th_c[k];
            mc += o.th_c[k];
        }
        let m = s / nf;
        theta_variance[k] = (sq / nf - m * m) * nf / (nf - 1.0);
        let mcm = mc / nf;
        theta_complex_variance[k] = ((sc / nf - mcm * mcm) * nf / (nf - 1.0)).re;
    }
    let slope = least_squares_slope(&times, &theta_variance);

    let mut bin_sum = vec![(C64::new(0.0, 0.0), 0usize); n_bins];
    for o in &outs {
        for (acc, b) in bin_sum.iter_mut().zip(&o.bins) {
            acc.0 += b.0;
            acc.1 += b.1;
        }
    }
    let phase_bins = (0..n_bins)
        .map(|i| (i as f64 + 0.5) * period / n_bins as f64)
        .collect();
    let c1_variance = bin_sum
        .iter()
        .map(|(s, c)| (s / (*c).max(1) as f64).re / gamma)
        .collect();
    Ok(ThetaSimResult {
        times,
        theta_variance,
        theta_complex_variance,
        slope,
        predicted_slope,
        contamination,
        phase_bins,
        c1_variance,
    })
}

/// Real and imaginary variance rates (per unit `γ dτ`) of `q†n` at one
/// cycle point.
fn projected_variances(q: &Vec2, beta: C64) -> (f64, f64) {
    // q†n = √2(q₀* ξ + q₁* ξ*) + i(q₀* β η - q₁* β* η⁺)
    let a = q[0].conj();
    let b = q[1].conj();
    // ξ part: √2(aξ + bξ*), ξ = (u + iv)/√2 per unit variance
    let re_u = (a + b).re;
    let re_v = (I * (a - b)).re;
    let im_u = (a + b).im;
    let im_v = (I * (a - b)).im;
    let e = I * a * beta;
    let f = -I * b * beta.conj();
    let re = re_u * re_u + re_v * re_v + e.re * e.re + f.re * f.re;
    let im = im_u * im_u + im_v * im_v + e.im * e.im + f.im * f.im;
    (re, im)
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
