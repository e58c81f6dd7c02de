//! Seeded standard-normal streams.
//!
//! Each `(seed, stream_id)` pair selects an independent ChaCha8 stream, so
//! per-trajectory generators can be derived from a single user seed and
//! consumed in any order or on any thread with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::C64;

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        GaussianStream { rng }
    }

    /// One standard-normal real.
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Complex normal with `E|z|² = 1`, independent real and imaginary parts.
    pub fn next_complex(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.next_normal() * s, self.next_normal() * s)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl Iterator for GaussianStream {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

/// Default stream (`stream_id = 0`) for `seed`.
pub fn gaussian_stream(seed: u64) -> GaussianStream {
    GaussianStream::new(seed, 0)
}

/// One time step's worth of white-noise values for the positive-P and
/// linearized Langevin equations.
///
/// The stored values are discretized white noises, each with variance
/// `1/dt`; multiplying by `dt` yields Wiener increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw {
    pub eta: f64,
    pub eta_plus: f64,
    pub xi: C64,
    pub dt: f64,
}

impl NoiseDraw {
    pub fn zero(dt: f64) -> Self {
        NoiseDraw {
            eta: 0.0,
            eta_plus: 0.0,
            xi: C64::new(0.0, 0.0),
            dt,
        }
    }

    pub fn draw(stream: &mut GaussianStream, dt: f64) -> Self {
        let scale = 1.0 / dt.sqrt();
        NoiseDraw {
            eta: stream.next_normal() * scale,
            eta_plus: stream.next_normal() * scale,
            xi: stream.next_complex() * scale,
            dt,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<f64> = gaussian_stream(42).take(1000).collect();
        let b: Vec<f64> = gaussian_stream(42).take(1000).collect();
        assert_eq!(a, b);
        let c: Vec<f64> = gaussian_stream(43).take(1000).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn moments_of_a_million_draws() {
        let n = 1_000_000;
        let mut s = gaussian_stream(7);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = s.next_normal();
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 100_000;
        let mut a = GaussianStream::new(11, 0);
        let mut b = GaussianStream::new(11, 1);
        let (mut sab, mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (x, y) = (a.next_normal(), b.next_normal());
            sab += x * y;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn noise_draw_variance_scales_with_step() {
        let dt = 0.01;
        let mut s = gaussian_stream(3);
        let n = 200_000;
        let (mut e, mut x) = (0.0, 0.0);
        for _ in 0..n {
            let d = NoiseDraw::draw(&mut s, dt);
            e += d.eta * d.eta;
            x += d.xi.norm_sqr();
        }
        assert!(((e / n as f64) * dt - 1.0).abs() < 0.02);
        assert!(((x / n as f64) * dt - 1.0).abs() < 0.02);
    }
}
