//! Cubic interpolation of uniformly sampled periodic functions.

use super::OdeState;

/// Cubic Hermite interpolant on `[0, h]` at fraction `s ∈ [0, 1]`.
pub fn hermite_point<S: OdeState>(y0: &S, d0: &S, y1: &S, d1: &S, h: f64, s: f64) -> S {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0.axpy(h00 - 1.0, y0)
        .axpy(h10 * h, d0)
        .axpy(h01, y1)
        .axpy(h11 * h, d1)
}

/// Samples `f(k T / n)` of a `T`-periodic function, `k = 0..n`.
#[derive(Debug, Clone)]
pub struct PeriodicSamples<S> {
    period: f64,
    values: Vec<S>,
    derivs: Option<Vec<S>>,
}

impl<S: OdeState> PeriodicSamples<S> {
    pub fn new(period: f64, values: Vec<S>) -> Self {
        assert!(values.len() >= 4, "need at least four samples");
        PeriodicSamples {
            period,
            values,
            derivs: None,
        }
    }

    /// With derivative samples, interpolation is cubic Hermite.
    pub fn with_derivatives(period: f64, values: Vec<S>, derivs: Vec<S>) -> Self {
        assert_eq!(values.len(), derivs.len());
        assert!(values.len() >= 2, "need at least two samples");
        PeriodicSamples {
            period,
            values,
            derivs: Some(derivs),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn derivatives(&self) -> Option<&[S]> {
        self.derivs.as_deref()
    }

    /// Interpolated value at any real `t` (periodic extension).
    pub fn at(&self, t: f64) -> S {
        let n = self.values.len();
        let h = self.spacing();
        let u = (t / h).rem_euclid(n as f64);
        let mut k = u.floor() as usize;
        let mut s = u - k as f64;
        if k >= n {
            k = 0;
            s = 0.0;
        }
        let k1 = (k + 1) % n;
        if s == 0.0 {
            return self.values[k].clone();
        }
        match &self.derivs {
            Some(d) => hermite_point(&self.values[k], &d[k], &self.values[k1], &d[k1], h, s),
            None => {
                // Four-point Lagrange cubic through k-1, k, k+1, k+2.
                let km = (k + n - 1) % n;
                let k2 = (k + 2) % n;
                let wm = -s * (s - 1.0) * (s - 2.0) / 6.0;
                let w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
                let w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
                let w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
                let y0 = &self.values[k];
                y0.axpy(w0 - 1.0, y0)
                    .axpy(wm, &self.values[km])
                    .axpy(w1, &self.values[k1])
                    .axpy(w2, &self.values[k2])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_reproduces_smooth_periodic_function() {
        let n = 256;
        let t_per = 3.0;
        let w = 2.0 * PI / t_per;
        let vals: Vec<f64> = (0..n)
            .map(|k| (w * k as f64 * t_per / n as f64).sin())
            .collect();
        let ders: Vec<f64> = (0..n)
            .map(|k| w * (w * k as f64 * t_per / n as f64).cos())
            .collect();
        let p = PeriodicSamples::with_derivatives(t_per, vals.clone(), ders);
        let q = PeriodicSamples::new(t_per, vals);
        for j in 0..1000 {
            let t = -5.0 + j as f64 * 0.0173;
            assert!((p.at(t) - (w * t).sin()).abs() < 2e-9);
            assert!((q.at(t) - (w * t).sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn grid_points_are_exact() {
        let vals: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let p = PeriodicSamples::new(8.0, vals);
        assert_eq!(p.at(3.0), 3.0);
        assert_eq!(p.at(8.0), 0.0);
        assert_eq!(p.at(-1.0), 7.0);
    }
}
