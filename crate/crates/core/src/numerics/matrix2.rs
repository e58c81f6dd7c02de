//! Fixed-size 2×2 complex matrices and their eigensystems.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{NumericsError, C64};

/// A complex 2-vector, stored as `[first, second]`.
pub type Vec2 = [C64; 2];

/// Hermitian inner product `a† b`.
pub fn dot_h(a: &Vec2, b: &Vec2) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Euclidean norm of a complex 2-vector.
pub fn norm2(a: &Vec2) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

/// A 2×2 complex matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 {
            m: [[a, b], [c, d]],
        }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Mat2::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Mat2::from_real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), d)
    }

    /// Matrix whose columns are `c0` and `c1`.
    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Mat2::new(c0[0], c1[0], c0[1], c1[1])
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flat_map(|r| r.iter()).all(|z| z.is_finite())
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Row-vector product `u M`.
    pub fn vec_mul(u: &Vec2, m: &Mat2) -> Vec2 {
        [
            u[0] * m.m[0][0] + u[1] * m.m[1][0],
            u[0] * m.m[0][1] + u[1] * m.m[1][1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = det.inv();
        Some(Mat2::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    /// Matrix exponential from the closed form
    /// `exp(A) = e^s [cosh(q) I + sinh(q)/q (A - s I)]`, `s = tr A / 2`,
    /// `q² = s² - det A`.
    pub fn exp(&self) -> Self {
        let s = self.trace() * 0.5;
        let q = (s * s - self.det()).sqrt();
        let shifted = *self - Mat2::identity().scale(s);
        // sinh(q)/q, with its series near q = 0
        let sinhc = if q.norm() < 1e-5 {
            let q2 = q * q;
            C64::new(1.0, 0.0) + q2 / 6.0 + q2 * q2 / 120.0
        } else {
            q.sinh() / q
        };
        (Mat2::identity().scale(q.cosh()) + shifted.scale(sinhc)).scale(s.exp())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Eigensystem of a 2×2 matrix with bi-orthonormal left/right vectors.
#[derive(Debug, Clone, Copy)]
pub struct Eigen2 {
    pub values: [C64; 2],
    /// Right eigenvectors, unit Euclidean norm.
    pub right: [Vec2; 2],
    /// Left eigenvectors `w` with `w† M = λ w†` and `w_j† v_l = δ_jl`.
    pub left: [Vec2; 2],
}

/// Eigenvalues, right and left eigenvectors of `m`.
///
/// Fails when the spectrum is (near-)degenerate, `|λa - λb| < 1e-8 ‖M‖`.
pub fn eig2(m: &Mat2) -> Result<Eigen2, NumericsError> {
    eig2_with_det(m, m.det())
}

/// As [`eig2`], with the determinant supplied by the caller. Useful when
/// `det m` is known more accurately than `ad - bc` can deliver, e.g. for a
/// nearly singular propagator.
pub fn eig2_with_det(m: &Mat2, det: C64) -> Result<Eigen2, NumericsError> {
    if !m.is_finite() {
        return Err(NumericsError::NonFinite("eig2 input"));
    }
    let scale = m.norm();
    let [[a, b], [c, d]] = m.m;
    let half_gap = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let mean = (a + d) * 0.5;
    if 2.0 * half_gap.norm() < 1e-8 * scale || scale == 0.0 {
        return Err(NumericsError::DegenerateSpectrum {
            gap: 2.0 * half_gap.norm(),
            scale,
        });
    }
    // Larger-magnitude root first, the other from the determinant to avoid
    // cancellation when one multiplier is tiny.
    let (l1, l2) = {
        let p = mean + half_gap;
        let q = mean - half_gap;
        if p.norm() >= q.norm() {
            (p, if p.norm() > 0.0 { det / p } else { q })
        } else {
            (q, if q.norm() > 0.0 { det / q } else { p })
        }
    };
    let values = [l1, l2];
    let right = values.map(|l| null_vector(&(*m - Mat2::identity().scale(l))));
    // Left vectors are the rows of the inverse of [v0 v1].
    let vmat = Mat2::from_columns(right[0], right[1]);
    let vinv = vmat
        .inverse()
        .ok_or(NumericsError::DegenerateSpectrum { gap: 0.0, scale })?;
    let left = [
        [vinv.m[0][0].conj(), vinv.m[0][1].conj()],
        [vinv.m[1][0].conj(), vinv.m[1][1].conj()],
    ];
    Ok(Eigen2 {
        values,
        right,
        left,
    })
}

/// Unit vector spanning the (numerical) null space of a rank-one 2×2 matrix.
fn null_vector(a: &Mat2) -> Vec2 {
    let [[p, q], [r, s]] = a.m;
    // Each row (x, y) is annihilated by (y, -x)ᵀ; use the larger row.
    let cand = if p.norm_sqr() + q.norm_sqr() >= r.norm_sqr() + s.norm_sqr() {
        [q, -p]
    } else {
        [s, -r]
    };
    let n = norm2(&cand);
    if n == 0.0 {
        return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    }
    [cand[0] / n, cand[1] / n]
}

/// Principal matrix logarithm via eigendecomposition.
pub fn principal_log2(m: &Mat2) -> Result<Mat2, NumericsError> {
    let eig = eig2(m)?;
    let mut logs = [C64::new(0.0, 0.0); 2];
    for (slot, &lam) in logs.iter_mut().zip(eig.values.iter()) {
        if lam.norm() == 0.0 {
            return Err(NumericsError::Singular);
        }
        if lam.re < 0.0 && lam.im.abs() <= 1e-10 * lam.norm().max(1.0) {
            return Err(NumericsError::BranchCut { eigenvalue: lam });
        }
        let l = lam.ln();
        debug_assert!(l.im > -PI && l.im <= PI);
        *slot = l;
    }
    // V diag(log λ) V⁻¹ with V⁻¹ rows = left vectors†.
    let v = Mat2::from_columns(eig.right[0], eig.right[1]);
    let winv = Mat2::new(
        eig.left[0][0].conj(),
        eig.left[0][1].conj(),
        eig.left[1][0].conj(),
        eig.left[1][1].conj(),
    );
    Ok(v * Mat2::diag(logs[0], logs[1]) * winv)
}

/// Same as [`principal_log2`] but returns the identity case without error:
/// a degenerate identity-like matrix `c I` has log `log(c) I`.
pub fn log2_allow_scalar(m: &Mat2) -> Result<Mat2, NumericsError> {
    let [[a, b], [c, d]] = m.m;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if (b.norm() + c.norm() + (a - d).norm()) <= 1e-14 * scale {
        if a.re < 0.0 && a.im.abs() <= 1e-10 * a.norm() {
            return Err(NumericsError::BranchCut { eigenvalue: a });
        }
        return Ok(Mat2::identity().scale(a.ln()));
    }
    principal_log2(m)
}
