//! Classical limit of the driven Van der Pol oscillator,
//! `dβ/dτ = F + (1 + iΔ - |β|²) β`.
//!
//! Stationary solutions are parametrized by their intensity `I = |β|²`, which
//! solves the cubic `F² = (Δ² + 1) I - 2 I² + I³`. Their linear stability
//! depends only on `(I, Δ²)`, which makes the phase diagram two-dimensional.
//! Where no stable stationary point attracts the motion, the long-time
//! solution is a limit cycle that [`find_limit_cycle`] locates by Poincaré
//! section crossings followed by Newton shooting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::{hermite_point, rk4_step, PeriodicSamples, C64, I};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassicalError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no limit cycle: motion settles on a fixed point (amplitude {amplitude:e})")]
    NoLimitCycle { amplitude: f64 },
    #[error("no period detected within a time budget of {budget}")]
    PeriodDetectionFailure { budget: f64 },
    #[error("shooting did not converge: closure residual {residual:e}")]
    ShootingFailure { residual: f64 },
    #[error("classical trajectory diverged at t = {time}")]
    Divergence { time: f64 },
}

/// Drive amplitude `F`, detuning `Δ` and nonlinear-loss rate `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(f: f64, delta: f64, gamma: f64) -> Result<Self, ClassicalError> {
        let p = ModelParams { f, delta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ClassicalError> {
        if !(self.f.is_finite() && self.delta.is_finite() && self.gamma.is_finite()) {
            return Err(ClassicalError::InvalidParams("non-finite parameter".into()));
        }
        if self.f < 0.0 {
            return Err(ClassicalError::InvalidParams(format!("F = {} < 0", self.f)));
        }
        if self.gamma <= 0.0 {
            return Err(ClassicalError::InvalidParams(format!(
                "gamma = {} must be positive",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Right-hand side of the classical equation of motion.
pub fn drift(beta: C64, params: &ModelParams) -> C64 {
    C64::new(params.f, 0.0) + (C64::new(1.0 - beta.norm_sqr(), params.delta)) * beta
}

/// `F²(I) = (Δ² + 1) I - 2 I² + I³`.
pub fn drive_squared(intensity: f64, delta: f64) -> f64 {
    (delta * delta + 1.0) * intensity - 2.0 * intensity * intensity + intensity.powi(3)
}

/// Real roots of the intensity cubic, ascending, repeated by multiplicity.
pub fn stationary_intensities(f: f64, delta: f64) -> Vec<f64> {
    let f2 = f * f;
    let b = delta * delta + 1.0;
    // I = t + 2/3 gives t³ + p t + q = 0.
    let p = b - 4.0 / 3.0;
    let q = -16.0 / 27.0 + 2.0 * b / 3.0 - f2;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let shift = 2.0 / 3.0;
    let mut roots: Vec<f64> = if disc.abs() < 1e-12 {
        if p.abs() < 1e-15 {
            vec![shift; 3]
        } else {
            let simple = 3.0 * q / p + shift;
            let double = -1.5 * q / p + shift;
            vec![simple, double, double]
        }
    } else if disc > 0.0 {
        let r = (-p / 3.0).sqrt();
        let arg = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    };
    let simple_roots = roots.len() == 1 || disc.abs() >= 1e-12;
    for r in roots.iter_mut() {
        if simple_roots {
            for _ in 0..4 {
                let val = drive_squared(*r, delta) - f2;
                let der = b - 4.0 * *r + 3.0 * *r * *r;
                if der.abs() < 1e-14 {
                    break;
                }
                *r -= val / der;
            }
        }
        if *r < 0.0 && *r > -1e-12 {
            *r = 0.0;
        }
    }
    roots.retain(|&r| r >= 0.0);
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// `λ± = 1 - 2I ± sqrt(I² - Δ²)`.
pub fn stability_eigenvalues(intensity: f64, delta: f64) -> (C64, C64) {
    let root = C64::new(intensity * intensity - delta * delta, 0.0).sqrt();
    let base = C64::new(1.0 - 2.0 * intensity, 0.0);
    (base + root, base - root)
}

/// Turning points of the S-shaped response `I(F²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub i_plus: f64,
    pub i_minus: f64,
    pub f2_plus: f64,
    pub f2_minus: f64,
}

/// `I± = (2 ± sqrt(1 - 3Δ²))/3`; absent when `Δ² > 1/3`.
pub fn turning_points(delta: f64) -> Option<TurningPoints> {
    let d2 = delta * delta;
    let arg = 1.0 - 3.0 * d2;
    if arg < 0.0 {
        return None;
    }
    let s = arg.sqrt();
    Some(TurningPoints {
        i_plus: (2.0 + s) / 3.0,
        i_minus: (2.0 - s) / 3.0,
        f2_plus: 2.0 / 27.0 * (2.0 + s) * (1.0 + 3.0 * d2 - s),
        f2_minus: 2.0 / 27.0 * (2.0 - s) * (1.0 + 3.0 * d2 + s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    StableOverdamped,
    StableUnderdamped,
    UnstableStatic,
    UnstableHopfSide,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::StableOverdamped => "stable-overdamped",
            RegionLabel::StableUnderdamped => "stable-underdamped",
            RegionLabel::UnstableStatic => "unstable-static",
            RegionLabel::UnstableHopfSide => "unstable-hopf-side",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(
            self,
            RegionLabel::StableOverdamped | RegionLabel::StableUnderdamped
        )
    }
}

/// Region of the `(Δ², I)` phase diagram, with signed intensity offsets
/// `I - I_curve` to each boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRegion {
    pub label: RegionLabel,
    pub to_tp_plus: Option<f64>,
    pub to_tp_minus: Option<f64>,
    pub to_hopf: f64,
    pub to_underdamped: f64,
}

pub fn classify(intensity: f64, delta: f64) -> PhaseRegion {
    let (lp, lm) = stability_eigenvalues(intensity, delta);
    let complex_pair = intensity * intensity < delta * delta;
    let stable = lp.re.max(lm.re) < 0.0;
    let label = match (stable, complex_pair) {
        (true, true) => RegionLabel::StableUnderdamped,
        (true, false) => RegionLabel::StableOverdamped,
        (false, false) => RegionLabel::UnstableStatic,
        (false, true) => RegionLabel::UnstableHopfSide,
    };
    let tp = turning_points(delta);
    PhaseRegion {
        label,
        to_tp_plus: tp.map(|t| intensity - t.i_plus),
        to_tp_minus: tp.map(|t| intensity - t.i_minus),
        to_hopf: intensity - 0.5,
        to_underdamped: intensity - delta.abs(),
    }
}

/// `(Γ, Ω²)` of the damped-oscillator equation obeyed by phase fluctuations
/// around a stationary point.
pub fn phase_oscillator_coefficients(intensity: f64, delta: f64) -> (f64, f64) {
    let g = 2.0 * (2.0 * intensity - 1.0);
    let w2 = delta * delta + (2.0 * intensity - 1.0).powi(2) - intensity * intensity;
    (g, w2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Damping {
    Overdamped,
    Underdamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub intensity: f64,
    /// `arg β ∈ [0, 2π)`.
    pub phase: f64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub stable: bool,
    pub damping: Damping,
}

impl StationaryState {
    pub fn amplitude(&self) -> C64 {
        C64::from_polar(self.intensity.sqrt(), self.phase)
    }
}

/// All stationary solutions for `(F, Δ)` with their stability data.
pub fn stationary_states(f: f64, delta: f64) -> Vec<StationaryState> {
    stationary_intensities(f, delta)
        .into_iter()
        .map(|i| {
            let (lp, lm) = stability_eigenvalues(i, delta);
            // β = F / (I - 1 - iΔ)
            let phase = if f > 0.0 {
                C64::new(i - 1.0, delta).arg().rem_euclid(2.0 * PI)
            } else {
                0.0
            };
            StationaryState {
                intensity: i,
                phase,
                lambda_plus: lp,
                lambda_minus: lm,
                stable: lp.re.max(lm.re) < 0.0,
                damping: if i * i < delta * delta {
                    Damping::Underdamped
                } else {
                    Damping::Overdamped
                },
            }
        })
        .collect()
}

/// A periodic classical orbit sampled on a uniform grid `τ_k = k T / N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitCycle {
    pub params: ModelParams,
    pub period: f64,
    pub samples: Vec<C64>,
    pub derivatives: Vec<C64>,
    /// `|β(T) - β(0)|` of the final integration.
    pub closure_residual: f64,
    /// RK4 substeps per grid interval used to build the orbit.
    pub substeps: usize,
}

impl LimitCycle {
    pub fn n_grid(&self) -> usize {
        self.samples.len()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.samples.len() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    /// `(1/T) ∫ |β̄|² dτ` (periodic trapezoid).
    pub fn mean_intensity(&self) -> f64 {
        self.samples.iter().map(|b| b.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Largest distance of an orbit sample from the orbit centroid.
    pub fn amplitude(&self) -> f64 {
        orbit_amplitude(&self.samples)
    }

    /// Cubic Hermite interpolant of `β̄(τ)`.
    pub fn interpolant(&self) -> PeriodicSamples<C64> {
        PeriodicSamples::with_derivatives(
            self.period,
            self.samples.clone(),
            self.derivatives.clone(),
        )
    }

    /// Largest `|∂τβ̄ - drift(β̄)|` over the grid.
    pub fn drift_residual(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.derivatives)
            .map(|(b, d)| (d - drift(*b, &self.params)).norm())
            .fold(0.0, f64::max)
    }
}

fn orbit_amplitude(samples: &[C64]) -> f64 {
    let n = samples.len().max(1) as f64;
    let centroid: C64 = samples.iter().sum::<C64>() / n;
    samples
        .iter()
        .map(|b| (b - centroid).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    /// Integration time discarded before looking for a period.
    pub transient: f64,
    pub n_grid: usize,
    /// RK4 steps per grid interval for the refined orbit.
    pub substeps: usize,
    /// Step for the transient and detection phases.
    pub detection_dt: f64,
    /// Maximum post-transient time spent looking for a period.
    pub detection_budget: f64,
    /// Extra time after the transient before the section reference point is
    /// picked.
    pub reference_delay: f64,
    pub closure_tol: f64,
    pub max_newton: usize,
    /// Orbits smaller than this are reported as fixed points.
    pub min_amplitude: f64,
    /// Initial condition of the transient.
    pub initial: [f64; 2],
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            transient: 50.0,
            n_grid: 1024,
            substeps: 4,
            detection_dt: 5e-3,
            detection_budget: 3000.0,
            reference_delay: 0.0,
            closure_tol: 1e-10,
            max_newton: 40,
            min_amplitude: 1e-8,
            initial: [1e-3, 0.0],
        }
    }
}

fn classical_step(beta: C64, params: &ModelParams, dt: f64) -> C64 {
    rk4_step(&mut |_, b: &C64| drift(*b, params), 0.0, &beta, dt)
}

/// Signed position relative to the section through `reference` normal to
/// `normal`.
fn section_value(beta: C64, reference: C64, normal: C64) -> f64 {
    (normal.conj() * (beta - reference)).re
}

struct Detection {
    start: C64,
    period: f64,
}

fn detect_period(params: &ModelParams, opts: &CycleOptions) -> Result<Detection, ClassicalError> {
    let dt = opts.detection_dt;
    let mut beta = C64::new(opts.initial[0], opts.initial[1]);
    let mut t = 0.0;
    while t < opts.transient + opts.reference_delay {
        beta = classical_step(beta, params, dt);
        t += dt;
        if !beta.is_finite() {
            return Err(ClassicalError::Divergence { time: t });
        }
    }
    let reference = beta;
    let normal = drift(reference, params);
    let budget_steps = (opts.detection_budget / dt).ceil() as usize;

    // Window of samples since the previous crossing, used for amplitude checks.
    let mut window: Vec<C64> = vec![beta];
    let mut crossings: Vec<(f64, C64)> = Vec::new();
    let mut first_amplitude: Option<f64> = None;
    let mut prev = beta;
    let mut prev_s = section_value(prev, reference, normal);
    let mut last_period: Option<f64> = None;
    for step in 0..budget_steps {
        let next = classical_step(prev, params, dt);
        let elapsed = (step + 1) as f64 * dt;
        if !next.is_finite() {
            return Err(ClassicalError::Divergence { time: t + elapsed });
        }
        window.push(next);
        let s = section_value(next, reference, normal);
        if prev_s < 0.0 && s >= 0.0 {
            let d0 = drift(prev, params);
            let d1 = drift(next, params);
            let same_direction = (normal.conj() * d1).re > 0.0;
            let amp = orbit_amplitude(&window).max(normal.norm() * dt);
            let near = (next - reference).norm() < 0.5 * amp.max(1e-300);
            if same_direction && near {
                // Refine the crossing on the Hermite interpolant by bisection.
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let b = hermite_point(&prev, &d0, &next, &d1, dt, mid);
                    if section_value(b, reference, normal) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let frac = 0.5 * (lo + hi);
                let tc = elapsed - dt + frac * dt;
                let bc = hermite_point(&prev, &d0, &next, &d1, dt, frac);
                let amplitude = orbit_amplitude(&window);
                window.clear();
                window.push(next);
                if amplitude < opts.min_amplitude {
                    return Err(ClassicalError::NoLimitCycle { amplitude });
                }
                first_amplitude.get_or_insert(amplitude);
                if let Some(&(tp, bp)) = crossings.last() {
                    let period = tc - tp;
                    let drift_between = (bc - bp).norm() / amplitude;
                    if let Some(lp) = last_period {
                        if (period - lp).abs() < 1e-3 * period && drift_between < 1e-3 {
                            return Ok(Detection { start: bc, period });
                        }
                    }
                    last_period = Some(period);
                }
                crossings.push((tc, bc));
            }
        }
        prev = next;
        prev_s = s;
    }
    let amplitude = orbit_amplitude(&window);
    let velocity = drift(prev, params).norm();
    if amplitude < opts.min_amplitude || velocity < opts.min_amplitude {
        return Err(ClassicalError::NoLimitCycle { amplitude });
    }
    if let Some(a0) = first_amplitude {
        if amplitude < 1e-3 * a0 {
            return Err(ClassicalError::NoLimitCycle { amplitude });
        }
    }
    if crossings.is_empty() && velocity < 1e-6 {
        return Err(ClassicalError::NoLimitCycle { amplitude });
    }
    Err(ClassicalError::PeriodDetectionFailure {
        budget: opts.detection_budget,
    })
}

/// Flow map over `[0, period]` in `steps` RK4 steps together with the real
/// Jacobian columns `∂β(T)/∂Re β0` and `∂β(T)/∂Im β0`.
fn flow_with_jacobian(
    start: C64,
    period: f64,
    steps: usize,
    params: &ModelParams,
) -> (C64, C64, C64) {
    let dt = period / steps as f64;
    let mut state = vec![start, C64::new(1.0, 0.0), I];
    let mut rhs = |_: f64, y: &Vec<C64>| -> Vec<C64> {
        let b = y[0];
        let a = C64::new(1.0 - 2.0 * b.norm_sqr(), params.delta);
        let c = -b * b;
        vec![
            drift(b, params),
            a * y[1] + c * y[1].conj(),
            a * y[2] + c * y[2].conj(),
        ]
    };
    for k in 0..steps {
        state = rk4_step(&mut rhs, k as f64 * dt, &state, dt);
    }
    (state[0], state[1], state[2])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv =
            (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Damped Newton iteration on `Φ_T(β0) = β0` with `β0` pinned to the
/// section through the detected start point.
fn shoot(
    start: C64,
    period: f64,
    params: &ModelParams,
    opts: &CycleOptions,
) -> Result<(C64, f64), ClassicalError> {
    let steps = opts.n_grid * opts.substeps;
    let normal = drift(start, params);
    let normal = normal / normal.norm();
    let (mut b0, mut t_per) = (start, period);
    let residual_of = |b: C64, t: f64| -> (C64, C64, C64, f64) {
        let (end, j1, j2) = flow_with_jacobian(b, t, steps, params);
        let r = end - b;
        (end, j1, j2, r.norm())
    };
    let (mut end, mut j1, mut j2, mut res) = residual_of(b0, t_per);
    for _ in 0..opts.max_newton {
        if res < opts.closure_tol {
            return Ok((b0, t_per));
        }
        let r = end - b0;
        let f_end = drift(end, params);
        let jac = [
            [j1.re - 1.0, j2.re, f_end.re],
            [j1.im, j2.im - 1.0, f_end.im],
            [normal.re, normal.im, 0.0],
        ];
        let phase = section_value(b0, start, normal);
        let Some(dx) = solve3(jac, [-r.re, -r.im, -phase]) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let cand_b = b0 + C64::new(dx[0], dx[1]) * lambda;
            let cand_t = t_per + dx[2] * lambda;
            if cand_t > 0.0 {
                let (e, a1, a2, cr) = residual_of(cand_b, cand_t);
                if cr.is_finite() && cr < res {
                    b0 = cand_b;
                    t_per = cand_t;
                    end = e;
                    j1 = a1;
                    j2 = a2;
                    res = cr;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res < opts.closure_tol {
        Ok((b0, t_per))
    } else {
        Err(ClassicalError::ShootingFailure { residual: res })
    }
}

/// Locate the attracting limit cycle reached from the configured initial
/// condition.
pub fn find_limit_cycle(
    params: &ModelParams,
    opts: &CycleOptions,
) -> Result<LimitCycle, ClassicalError> {
    params.validate()?;
    if opts.n_grid < 8 || opts.substeps == 0 {
        return Err(ClassicalError::InvalidParams(
            "n_grid must be at least 8 and substeps positive".into(),
        ));
    }
    let detection = detect_period(params, opts)?;
    let (b0, period) = shoot(detection.start, detection.period, params, opts)?;

    let n = opts.n_grid;
    let dt = period / (n * opts.substeps) as f64;
    let mut samples = Vec::with_capacity(n);
    let mut beta = b0;
    for _ in 0..n {
        samples.push(beta);
        for _ in 0..opts.substeps {
            beta = classical_step(beta, params, dt);
        }
    }
    let closure_residual = (beta - b0).norm();
    let amplitude = orbit_amplitude(&samples);
    if amplitude < opts.min_amplitude {
        return Err(ClassicalError::NoLimitCycle { amplitude });
    }
    let derivatives = samples.iter().map(|b| drift(*b, params)).collect();
    Ok(LimitCycle {
        params: *params,
        period,
        samples,
        derivatives,
        closure_residual,
        substeps: opts.substeps,
    })
}

/// One row of a bifurcation scan at fixed `Δ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRow {
    pub f2: f64,
    pub states: Vec<StationaryState>,
    pub cycle_mean_intensity: Option<f64>,
    pub cycle_period: Option<f64>,
    pub cycle_amplitude: Option<f64>,
}

impl BranchRow {
    pub fn stable_states(&self) -> impl Iterator<Item = &StationaryState> {
        self.states.iter().filter(|s| s.stable)
    }
}

/// Stationary branches and limit-cycle mean intensities over a uniform
/// `F²` grid (`resolution` points from `f2_min` to `f2_max` inclusive).
pub fn bifurcation_scan(
    delta: f64,
    f2_min: f64,
    f2_max: f64,
    resolution: usize,
    opts: &CycleOptions,
) -> Result<Vec<BranchRow>, ClassicalError> {
    if !(f2_min >= 0.0 && f2_max >= f2_min) || resolution == 0 {
        return Err(ClassicalError::InvalidParams(format!(
            "invalid scan range [{f2_min}, {f2_max}] with {resolution} points"
        )));
    }
    use rayon::prelude::*;
    let rows = (0..resolution)
        .into_par_iter()
        .map(|k| {
            let f2 = if resolution == 1 {
                f2_min
            } else {
                f2_min + (f2_max - f2_min) * k as f64 / (resolution - 1) as f64
            };
            let f = f2.sqrt();
            let states = stationary_states(f, delta);
            let params = ModelParams {
                f,
                delta,
                gamma: 1.0,
            };
            let cycle = find_limit_cycle(&params, opts).ok();
            BranchRow {
                f2,
                states,
                cycle_mean_intensity: cycle.as_ref().map(|c| c.mean_intensity()),
                cycle_period: cycle.as_ref().map(|c| c.period),
                cycle_amplitude: cycle.as_ref().map(|c| c.amplitude()),
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(f: f64, delta: f64) -> ModelParams {
        ModelParams::new(f, delta, 0.1).unwrap()
    }

    #[test]
    fn drift_examples() {
        assert_eq!(
            drift(C64::new(0.0, 0.0), &params(0.7, 0.3)),
            C64::new(0.7, 0.0)
        );
        assert!(drift(C64::new(1.0, 0.0), &params(0.0, 0.0)).norm() < 1e-15);
        let d = 0.4;
        let phi: f64 = 1.1;
        let b = C64::from_polar(1.0, phi);
        let got = drift(b, &params(0.0, d));
        assert!((got - I * d * b).norm() < 1e-15);
    }

    #[test]
    fn rejects_negative_drive_and_nonpositive_gamma() {
        assert!(ModelParams::new(-0.1, 0.0, 0.1).is_err());
        assert!(ModelParams::new(0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn cubic_with_double_root_at_turning_point() {
        let roots = stationary_intensities((4.0f64 / 27.0).sqrt(), 0.0);
        assert_eq!(roots.len(), 3);
        assert!((roots[0] - 1.0 / 3.0).abs() < 1e-7);
        assert!((roots[1] - 1.0 / 3.0).abs() < 1e-7);
        assert!((roots[2] - 4.0 / 3.0).abs() < 1e-10);
        for r in roots {
            assert!((drive_squared(r, 0.0) - 4.0 / 27.0).abs() < 1e-10);
        }
    }

    #[test]
    fn undriven_roots() {
        let r = stationary_intensities(0.0, 0.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([0.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let r = stationary_intensities(0.0, 0.5);
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-12);
    }

    #[test]
    fn large_detuning_has_single_root() {
        let d = 0.4f64.sqrt();
        for k in 0..50 {
            let f = 0.05 * k as f64;
            let r = stationary_intensities(f, d);
            assert_eq!(r.len(), 1, "F={f}");
            assert!((drive_squared(r[0], d) - f * f).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let (a, b) = stability_eigenvalues(1.0, 0.0);
        assert!(
            (a - C64::new(0.0, 0.0)).norm() < 1e-15 && (b - C64::new(-2.0, 0.0)).norm() < 1e-15
        );
        let (a, b) = stability_eigenvalues(0.5, 1.0);
        let w = 3f64.sqrt() / 2.0;
        assert!((a - C64::new(0.0, w)).norm() < 1e-15 && (b - C64::new(0.0, -w)).norm() < 1e-15);
        let (a, b) = stability_eigenvalues(0.5, 0.5);
        assert_eq!(a, b);
        assert!(a.norm() < 1e-15);
        let (a, b) = stability_eigenvalues(0.8, -0.8);
        assert!((a - C64::new(1.0 - 1.6, 0.0)).norm() < 1e-15 && a == b);
    }

    #[test]
    fn turning_point_examples() {
        let tp = turning_points(0.0).unwrap();
        assert!((tp.i_plus - 1.0).abs() < 1e-15);
        assert!((tp.i_minus - 1.0 / 3.0).abs() < 1e-15);
        assert!(tp.f2_plus.abs() < 1e-15);
        assert!((tp.f2_minus - 4.0 / 27.0).abs() < 1e-15);
        let tp = turning_points((1.0f64 / 3.0).sqrt()).unwrap();
        assert!((tp.i_plus - 2.0 / 3.0).abs() < 1e-7 && (tp.i_minus - 2.0 / 3.0).abs() < 1e-7);
        assert!(turning_points(0.5f64.sqrt()).is_none());
    }

    #[test]
    fn turning_points_are_extrema_of_the_response() {
        for k in 0..30 {
            let d = 0.019 * k as f64;
            let tp = turning_points(d).unwrap();
            for (i, f2) in [(tp.i_plus, tp.f2_plus), (tp.i_minus, tp.f2_minus)] {
                let deriv = d * d + 1.0 - 4.0 * i + 3.0 * i * i;
                assert!(deriv.abs() < 1e-12);
                assert!((drive_squared(i, d) - f2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(1.2, 0.1).label, RegionLabel::StableOverdamped);
        assert_eq!(classify(0.8, 1.0).label, RegionLabel::StableUnderdamped);
        assert_eq!(classify(0.3, 1.0).label, RegionLabel::UnstableHopfSide);
        assert_eq!(classify(0.6, 0.0).label, RegionLabel::UnstableStatic);
    }

    #[test]
    fn stationary_phase_solves_the_fixed_point_equation() {
        for &(f, d) in &[(0.5, 0.2), (1.0, -0.7), (0.1, 0.55), (2.0, 1.3)] {
            let p = params(f, d);
            for s in stationary_states(f, d) {
                assert!(drift(s.amplitude(), &p).norm() < 1e-9, "F={f} Δ={d}");
                assert!((0.0..2.0 * PI).contains(&s.phase));
            }
        }
    }

    #[test]
    fn undriven_cycle_is_the_unit_circle() {
        let d = 0.4f64.sqrt();
        let c = find_limit_cycle(&params(0.0, d), &CycleOptions::default()).unwrap();
        assert!((c.period - 2.0 * PI / d).abs() < 1e-6, "T = {}", c.period);
        for b in &c.samples {
            assert!((b.norm() - 1.0).abs() < 1e-6);
        }
        assert!(c.closure_residual < 1e-8);
    }

    #[test]
    fn resonant_strong_drive_has_no_cycle() {
        let r = find_limit_cycle(&params(1.0, 0.0), &CycleOptions::default());
        assert!(
            matches!(r, Err(ClassicalError::NoLimitCycle { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn driven_cycle_is_nontrivial() {
        let c = find_limit_cycle(
            &params(0.1f64.sqrt(), 0.4f64.sqrt()),
            &CycleOptions::default(),
        )
        .unwrap();
        assert!(c.closure_residual < 1e-8);
        let (lo, hi) = c
            .samples
            .iter()
            .map(|b| b.norm())
            .fold((f64::MAX, 0.0f64), |(l, h), r| (l.min(r), h.max(r)));
        assert!(hi - lo > 0.05, "modulus range {lo}..{hi}");
        assert!(c.drift_residual() < 1e-6);
    }

    #[test]
    fn orbit_samples_match_finite_difference_derivative() {
        let c = find_limit_cycle(
            &params(0.1f64.sqrt(), 0.4f64.sqrt()),
            &CycleOptions::default(),
        )
        .unwrap();
        let n = c.n_grid();
        let h = c.spacing();
        for k in 0..n {
            // fourth-order central difference on the periodic grid
            let s = |j: isize| c.samples[((k as isize + j).rem_euclid(n as isize)) as usize];
            let fd = (s(-2) - s(-1) * 8.0 + s(1) * 8.0 - s(2)) / (12.0 * h);
            assert!((fd - c.derivatives[k]).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn restart_with_delay_gives_same_orbit() {
        let p = params(0.1f64.sqrt(), 0.4f64.sqrt());
        let a = find_limit_cycle(&p, &CycleOptions::default()).unwrap();
        let opts = CycleOptions {
            reference_delay: 3.7,
            ..CycleOptions::default()
        };
        let b = find_limit_cycle(&p, &opts).unwrap();
        assert!((a.period - b.period).abs() < 1e-8);
        // b's start lies on a's orbit
        let interp = a.interpolant();
        let best = (0..20000)
            .map(|j| (interp.at(a.period * j as f64 / 20000.0) - b.samples[0]).norm())
            .fold(f64::MAX, f64::min);
        assert!(best < 1e-3);
    }
}
