//! Fixed-step classical Runge–Kutta integration.

use super::{Mat2, NumericsError, Vec2, C64};

/// State types that the RK4 stepper can advance.
pub trait OdeState: Clone {
    /// `self + s * other`
    fn axpy(&self, s: f64, other: &Self) -> Self;
    fn all_finite(&self) -> bool;
}

impl OdeState for C64 {
    fn axpy(&self, s: f64, other: &Self) -> Self {
        self + other * s
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for f64 {
    fn axpy(&self, s: f64, other: &Self) -> Self {
        self + other * s
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for Vec2 {
    fn axpy(&self, s: f64, other: &Self) -> Self {
        [self[0] + other[0] * s, self[1] + other[1] * s]
    }
    fn all_finite(&self) -> bool {
        self[0].is_finite() && self[1].is_finite()
    }
}

impl OdeState for Mat2 {
    fn axpy(&self, s: f64, other: &Self) -> Self {
        *self + other.scale(C64::new(s, 0.0))
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for Vec<C64> {
    fn axpy(&self, s: f64, other: &Self) -> Self {
        self.iter().zip(other).map(|(a, b)| a + b * s).collect()
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.is_finite())
    }
}

/// One RK4 step of size `dt` from `(t, y)`.
pub fn rk4_step<S, F>(rhs: &mut F, t: f64, y: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k1));
    let k3 = rhs(t + 0.5 * dt, &y.axpy(0.5 * dt, &k2));
    let k4 = rhs(t + dt, &y.axpy(dt, &k3));
    y.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4)
}

/// Samples of an integrated trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrate `y' = rhs(t, y)` from `t0` to `t1` with fixed step `dt`.
///
/// Samples are taken at `t0 + k dt`; a final shorter step lands exactly on
/// `t1`.
pub fn integrate_ode<S, F>(
    mut rhs: F,
    y0: S,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory<S>, NumericsError>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(NumericsError::InvalidArgument(format!(
            "need dt > 0 and t1 > t0, got dt={dt}, t0={t0}, t1={t1}"
        )));
    }
    let full_steps = ((t1 - t0) / dt).floor() as usize;
    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    times.push(t0);
    states.push(y0.clone());
    let mut y = y0;
    for k in 0..full_steps {
        let t = t0 + k as f64 * dt;
        y = rk4_step(&mut rhs, t, &y, dt);
        if !y.all_finite() {
            return Err(NumericsError::Divergence { time: t + dt });
        }
        times.push(t0 + (k + 1) as f64 * dt);
        states.push(y.clone());
    }
    let t_last = t0 + full_steps as f64 * dt;
    let rest = t1 - t_last;
    if rest > 1e-12 * dt {
        y = rk4_step(&mut rhs, t_last, &y, rest);
        if !y.all_finite() {
            return Err(NumericsError::Divergence { time: t1 });
        }
        times.push(t1);
        states.push(y);
    } else if let Some(t) = times.last_mut() {
        *t = t1;
    }
    Ok(Trajectory { times, states })
}
