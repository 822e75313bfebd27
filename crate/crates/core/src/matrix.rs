//! Small dense complex matrices (2×2 and 4×4), row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Mul;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat4(pub [[Complex64; 4]; 4]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([
            [Complex64::new(a, 0.0), Complex64::new(b, 0.0)],
            [Complex64::new(c, 0.0), Complex64::new(d, 0.0)],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        // Largest singular value from the eigenvalues of the Hermitian M†M.
        let p = self.adjoint() * *self;
        let a = p.0[0][0].re;
        let d = p.0[1][1].re;
        let b = p.0[0][1].norm();
        let mean = 0.5 * (a + d);
        let half = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean + half).max(0.0).sqrt()
    }

    /// `max |U†U - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Mat2::IDENTITY)
    }

    /// Operator-norm distance between two unitaries, minimized over a global
    /// phase: `min_φ ‖U - e^{iφ} V‖`.
    ///
    /// `W = V†U` has eigenphases separated by `δ ∈ [0, π]` (shorter arc); the
    /// minimum is `2 sin(δ/4)`. `δ/2` is read off the SU(2) part of `W` with
    /// `atan2(|traceless part|, |trace|/2)`, which stays accurate near `δ = 0`.
    pub fn phase_distance(&self, other: &Mat2) -> f64 {
        let w = other.adjoint() * *self;
        let s = w.det().sqrt();
        let su = w.scale(s.inv());
        let c = su.trace() * 0.5;
        let traceless = su - Mat2::IDENTITY.scale(c);
        let sin_half = (traceless
            .0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / 2.0)
            .sqrt();
        let half = sin_half.atan2(c.norm());
        2.0 * (half / 2.0).sin()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ]);

    pub fn zeros() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn diag(d: [Complex64; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    /// `hi ⊗ lo`: row/column index is `2·hi_bit + lo_bit`.
    pub fn kron(hi: &Mat2, lo: &Mat2) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = hi.0[i >> 1][j >> 1] * lo.0[i & 1][j & 1];
            }
        }
        m
    }

    /// Block-diagonal `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u` with the control as high bit.
    pub fn controlled(u: &Mat2) -> Self {
        let mut m = Self::IDENTITY;
        for i in 0..2 {
            for j in 0..2 {
                m.0[2 + i][2 + j] = u.0[i][j];
            }
        }
        m
    }

    pub fn apply(&self, v: [Complex64; 4]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Mat4::IDENTITY)
    }
}

impl Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = Mat4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl std::ops::Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}
