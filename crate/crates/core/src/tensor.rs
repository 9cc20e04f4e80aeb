//! Small dense 2×2 tensors used for gradients, strains and stresses.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A second-order tensor in two dimensions, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tensor2(pub [[f64; 2]; 2]);

impl Tensor2 {
    pub const ZERO: Tensor2 = Tensor2([[0.0; 2]; 2]);
    pub const IDENTITY: Tensor2 = Tensor2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Tensor2([[xx, xy], [yx, yy]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Tensor2([[a, 0.0], [0.0, b]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Self {
        Tensor2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    /// Cofactor matrix, `det(A) A^{-T}` for invertible `A`.
    pub fn cofactor(&self) -> Self {
        Tensor2([
            [self.0[1][1], -self.0[1][0]],
            [-self.0[0][1], self.0[0][0]],
        ])
    }

    pub fn sym(&self) -> Self {
        (*self + self.transpose()) * 0.5
    }

    /// Double contraction `A : B`.
    pub fn ddot(&self, other: &Tensor2) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn matmul(&self, other: &Tensor2) -> Tensor2 {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j];
            }
        }
        Tensor2(out)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn max_abs_diff(&self, other: &Tensor2) -> f64 {
        let d = *self - *other;
        d.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: Tensor2) -> Tensor2 {
        let mut out = self.0;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += rhs.0[i][j];
            }
        }
        Tensor2(out)
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: Tensor2) -> Tensor2 {
        self + (-rhs)
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        self * -1.0
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|v| *v *= s);
        Tensor2(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_is_det_times_inverse_transpose() {
        let a = Tensor2::new(2.0, 1.0, -0.5, 3.0);
        let prod = a.transpose().matmul(&a.cofactor());
        assert!(prod.max_abs_diff(&(Tensor2::IDENTITY * a.det())) < 1e-14);
    }

    #[test]
    fn sym_of_spin_is_zero() {
        let w = Tensor2::new(0.0, 0.3, -0.3, 0.0);
        assert_eq!(w.sym(), Tensor2::ZERO);
    }
}
