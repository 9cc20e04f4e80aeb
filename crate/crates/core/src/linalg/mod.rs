//! Compressed-row sparse matrices and linear solvers.

mod direct;
mod iterative;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use direct::{banded_storage, rcm_ordering, BandedLu};
pub use iterative::{bicgstab, cg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{method}: breakdown ({reason})")]
    Breakdown { method: &'static str, reason: String },

    #[error("matrix dimension must be at least 1")]
    Empty,

    #[error("entry ({row}, {col}) out of range for dimension {n}")]
    OutOfRange { row: usize, col: usize, n: usize },
}

/// Square matrix in compressed-row form. Column indices are strictly
/// increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        TripletBuilder { n, entries: Vec::with_capacity(cap) }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> Result<SparseMatrix, LinalgError> {
        if self.n == 0 {
            return Err(LinalgError::Empty);
        }
        if let Some(&(row, col, _)) = self.entries.iter().find(|(r, c, _)| *r >= self.n || *c >= self.n) {
            return Err(LinalgError::OutOfRange { row, col, n: self.n });
        }
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix { n: self.n, row_ptr, col_idx, values })
    }
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Result<Self, LinalgError> {
        let mut b = TripletBuilder::new(n);
        (0..n).for_each(|i| b.add(i, i, 1.0));
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, found: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        if x.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, found: x.len() });
        }
        if y.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, found: y.len() });
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
        Ok(())
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    /// Eliminates Dirichlet rows and columns in place.
    ///
    /// Constrained rows become `d * x_k = d * g_k` with `d` the original
    /// diagonal (or 1 when that is zero). Known values are moved to the
    /// right-hand side of the remaining rows, so a symmetric matrix stays
    /// symmetric.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], constraints: &[(usize, f64)]) -> Result<(), LinalgError> {
        if rhs.len() != self.n {
            return Err(LinalgError::DimensionMismatch { expected: self.n, found: rhs.len() });
        }
        let mut fixed: HashMap<usize, f64> = HashMap::with_capacity(constraints.len());
        for &(k, g) in constraints {
            if k >= self.n {
                return Err(LinalgError::OutOfRange { row: k, col: k, n: self.n });
            }
            fixed.insert(k, g);
        }
        if fixed.is_empty() {
            return Ok(());
        }
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz());
        for i in 0..self.n {
            if let Some(&g) = fixed.get(&i) {
                let d = self.get(i, i);
                let d = if d.abs() > 0.0 { d } else { 1.0 };
                b.add(i, i, d);
                rhs[i] = d * g;
                continue;
            }
            for (j, v) in self.row(i) {
                match fixed.get(&j) {
                    Some(&g) => rhs[i] -= v * g,
                    None => b.add(i, j, v),
                }
            }
        }
        *self = b.build()?;
        Ok(())
    }
}

/// Matrix plus right-hand side of one assembled linear system.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// LU with partial pivoting on a bandwidth-reducing reordering.
    Direct,
    /// Jacobi-preconditioned conjugate gradients (SPD systems).
    Cg,
    /// Jacobi-preconditioned BiCGStab.
    #[serde(rename = "bicgstab")]
    BiCgStab,
    /// Direct up to [`DIRECT_SIZE_LIMIT`] unknowns or while the banded factor
    /// fits in [`DIRECT_STORAGE_LIMIT`] entries (the size of a dense
    /// 2000×2000 matrix); otherwise CG for symmetric and BiCGStab for
    /// nonsymmetric matrices.
    Auto,
}

pub const DIRECT_SIZE_LIMIT: usize = 2000;
pub const DIRECT_STORAGE_LIMIT: usize = DIRECT_SIZE_LIMIT * DIRECT_SIZE_LIMIT;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearSolveReport {
    pub method: &'static str,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Relative residual `||b - A x|| / ||b||` after each iteration (iterative
    /// methods only).
    pub residual_history: Vec<f64>,
    /// Energy `½ xᵀAx - bᵀx` after each iteration (CG only).
    pub energy_history: Vec<f64>,
    /// Preconditioned residual `sqrt(rᵀM⁻¹r)` relative to its initial value
    /// (CG only).
    pub preconditioned_history: Vec<f64>,
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Result<f64, LinalgError> {
    let ax = a.spmv(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(b);
    Ok(if bn > 0.0 { norm2(&r) / bn } else { norm2(&r) })
}

/// Solves `A x = b`.
///
/// Iterative methods return the best iterate with `converged = false` when
/// `max_iter` is exhausted; the direct method ignores `tol` and `max_iter`.
pub fn solve(
    a: &SparseMatrix,
    b: &[f64],
    method: SolveMethod,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch { expected: a.dim(), found: b.len() });
    }
    let method = match method {
        SolveMethod::Auto if a.dim() <= DIRECT_SIZE_LIMIT || banded_storage(a) <= DIRECT_STORAGE_LIMIT => {
            SolveMethod::Direct
        }
        SolveMethod::Auto if a.is_symmetric(1e-12) => SolveMethod::Cg,
        SolveMethod::Auto => SolveMethod::BiCgStab,
        m => m,
    };
    match method {
        SolveMethod::Direct => {
            let lu = BandedLu::factor(a)?;
            let x = lu.solve(b)?;
            let final_residual = relative_residual(a, &x, b)?;
            Ok((
                x,
                LinearSolveReport {
                    method: "direct",
                    iterations: 0,
                    final_residual,
                    converged: true,
                    ..Default::default()
                },
            ))
        }
        SolveMethod::Cg => cg(a, b, tol, max_iter),
        SolveMethod::BiCgStab => bicgstab(a, b, tol, max_iter),
        SolveMethod::Auto => unreachable!("resolved above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spmv_examples() {
        let id = SparseMatrix::identity(3).unwrap();
        assert_eq!(id.spmv(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        let zero = TripletBuilder::new(3).build().unwrap();
        assert_eq!(zero.spmv(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        let a = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert!(matches!(a.spmv(&[1.0]), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn builder_sums_duplicates_and_sorts() {
        let mut b = TripletBuilder::new(2);
        b.add(1, 1, 2.0);
        b.add(0, 1, 1.0);
        b.add(1, 1, 3.0);
        b.add(1, 0, 4.0);
        let a = b.build().unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 1), 5.0);
        let cols: Vec<usize> = a.row(1).map(|(c, _)| c).collect();
        assert_eq!(cols, vec![0, 1]);
        assert!(TripletBuilder::new(0).build().is_err());
    }

    #[test]
    fn dirichlet_keeps_symmetry() {
        let mut a = SparseMatrix::from_dense(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let mut rhs = vec![0.0; 3];
        a.apply_dirichlet(&mut rhs, &[(0, 1.0), (2, 3.0)]).unwrap();
        assert!(a.is_symmetric(0.0));
        let (x, _) = solve(&a, &rhs, SolveMethod::Direct, 0.0, 0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14 && (x[2] - 3.0).abs() < 1e-14);
    }
}
