//! Small fixed-size linear algebra for single-mode phase space.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real 2x2 matrix acting on (q, p).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> [f64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    pub fn from_row_major(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Inverse; infinite entries when singular.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.0[1][1] / d, -self.0[0][1] / d, -self.0[1][0] / d, self.0[0][0] / d)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_row_major().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.0[0][0] * s, self.0[0][1] * s, self.0[1][0] * s, self.0[1][1] * s)
    }

    /// exp(self * t) in closed form.
    ///
    /// With F = (tr/2) I + K and K^2 = delta I, exp(Ft) = e^{tr t/2}
    /// (c(t) I + s(t) K) where c, s are cosh/sinh (delta > 0), cos/sin
    /// (delta < 0) or 1, t (delta = 0). Defective drifts need no special case.
    pub fn exp_scaled(&self, t: f64) -> Self {
        let half_tr = 0.5 * self.trace();
        let k = *self - Mat2::identity().scale(half_tr);
        let delta = -k.det();
        let x = delta * t * t;
        let (c, s) = if x.abs() < 1e-8 {
            // series in x = delta t^2
            (1.0 + x / 2.0 + x * x / 24.0, t * (1.0 + x / 6.0 + x * x / 120.0))
        } else if delta > 0.0 {
            let r = delta.sqrt();
            ((r * t).cosh(), (r * t).sinh() / r)
        } else {
            let r = (-delta).sqrt();
            ((r * t).cos(), (r * t).sin() / r)
        };
        (Mat2::identity().scale(c) + k.scale(s)).scale((half_tr * t).exp())
    }

    /// Real logarithm F of a matrix with det = 1, so that exp(F) = self and
    /// tr F = 0.
    pub fn log_symplectic(&self) -> Result<Self> {
        let tr = self.trace();
        let half = 0.5 * tr;
        let id = Mat2::identity();
        if (half - 1.0).abs() < 1e-12 {
            return Ok(*self - id);
        }
        if half > 1.0 {
            let th = half.acosh();
            Ok((*self - id.scale(half)).scale(th / th.sinh()))
        } else if half > -1.0 {
            let th = half.acos();
            Ok((*self - id.scale(half)).scale(th / th.sin()))
        } else {
            Err(Error::NoRealLogarithm { trace: tr })
        }
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.to_row_major(), o.to_row_major());
        Mat2::new(a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])
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
        self.scale(-1.0)
    }
}

/// A real symmetric 2x2 matrix stored as (qq, pp, qp).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub qq: f64,
    pub pp: f64,
    pub qp: f64,
}

impl Sym2 {
    pub const fn new(qq: f64, pp: f64, qp: f64) -> Self {
        Self { qq, pp, qp }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Symmetric part of a general matrix.
    pub fn from_mat(m: &Mat2) -> Self {
        Self::new(m[(0, 0)], m[(1, 1)], 0.5 * (m[(0, 1)] + m[(1, 0)]))
    }

    /// v v^T
    pub fn outer(v: [f64; 2]) -> Self {
        Self::new(v[0] * v[0], v[1] * v[1], v[0] * v[1])
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.qq, self.qp, self.qp, self.pp)
    }

    pub fn det(&self) -> f64 {
        self.qq * self.pp - self.qp * self.qp
    }

    pub fn trace(&self) -> f64 {
        self.qq + self.pp
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.qq * s, self.pp * s, self.qp * s)
    }

    /// T S T^T, symmetric by construction.
    pub fn congruence(&self, t: &Mat2) -> Self {
        let (a, b, c, d) = (t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
        let (x, y, z) = (self.qq, self.pp, self.qp);
        Self::new(
            a * a * x + 2.0 * a * b * z + b * b * y,
            c * c * x + 2.0 * c * d * z + d * d * y,
            a * c * x + (a * d + b * c) * z + b * d * y,
        )
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let r = (0.25 * (self.qq - self.pp).powi(2) + self.qp * self.qp).sqrt();
        let hi = half_tr + r;
        // det / hi avoids cancellation for the small eigenvalue
        let lo = if hi != 0.0 { self.det() / hi } else { half_tr - r };
        (hi, lo)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn max_abs(&self) -> f64 {
        self.qq.abs().max(self.pp.abs()).max(self.qp.abs())
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.qq + o.qq, self.pp + o.pp, self.qp + o.qp)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.qq - o.qq, self.pp - o.pp, self.qp - o.qp)
    }
}
