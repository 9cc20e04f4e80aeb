//! Jacobi-preconditioned Krylov solvers.

use super::{dot, norm2, LinalgError, LinearSolveReport, SparseMatrix};

fn jacobi(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect()
}

fn check(a: &SparseMatrix, b: &[f64]) -> Result<(), LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch { expected: a.dim(), found: b.len() });
    }
    Ok(())
}

/// Conjugate gradients from a zero initial guess.
///
/// Stops when `||r|| <= tol * ||b||`. For an SPD matrix the energy
/// `½ xᵀAx - bᵀx` is non-increasing over the iterates, which the report
/// records alongside the relative residual.
pub fn cg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
    check(a, b)?;
    let n = a.dim();
    let minv = jacobi(a);
    let bnorm = norm2(b);
    let mut report = LinearSolveReport { method: "cg", ..Default::default() };
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let rz0 = rz;
    let mut ap = vec![0.0; n];
    // energy(x) = -½ bᵀx - ½ rᵀx with r = b - Ax
    let energy = |x: &[f64], r: &[f64]| -0.5 * (dot(b, x) + dot(r, x));

    for it in 1..=max_iter {
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinalgError::Breakdown {
                method: "cg",
                reason: format!("non-positive curvature pᵀAp = {pap:e}"),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        report.iterations = it;
        report.final_residual = rel;
        report.residual_history.push(rel);
        report.energy_history.push(energy(&x, &r));
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        report.preconditioned_history.push((rz_new / rz0).max(0.0).sqrt());
        if rel <= tol {
            report.converged = true;
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((x, report))
}

/// BiCGStab with right Jacobi preconditioning, zero initial guess.
pub fn bicgstab(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, LinearSolveReport), LinalgError> {
    check(a, b)?;
    let n = a.dim();
    let minv = jacobi(a);
    let bnorm = norm2(b);
    let mut report = LinearSolveReport { method: "bicgstab", ..Default::default() };
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let breakdown = |reason: &str| LinalgError::Breakdown { method: "bicgstab", reason: reason.to_string() };

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            return Err(breakdown("rho vanished"));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * minv[i];
        }
        a.spmv_into(&y, &mut v)?;
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(breakdown("r̂ᵀv vanished"));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        report.iterations = it;
        let snorm = norm2(&s) / bnorm;
        if snorm <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            report.final_residual = snorm;
            report.residual_history.push(snorm);
            report.converged = true;
            break;
        }
        for i in 0..n {
            zs[i] = s[i] * minv[i];
        }
        a.spmv_into(&zs, &mut t)?;
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(breakdown("tᵀt vanished"));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / bnorm;
        report.final_residual = rel;
        report.residual_history.push(rel);
        if rel <= tol {
            report.converged = true;
            break;
        }
        if omega == 0.0 {
            return Err(breakdown("omega vanished"));
        }
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{solve, SolveMethod, TripletBuilder};

    #[test]
    fn cg_identity_and_diagonal() {
        let id = SparseMatrix::identity(4).unwrap();
        let b = [1.0, 2.0, 3.0, 4.0];
        let (x, rep) = cg(&id, &b, 1e-12, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(x.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-14));

        let mut t = TripletBuilder::new(5);
        (0..5).for_each(|i| t.add(i, i, (i + 1) as f64));
        let d = t.build().unwrap();
        let (x, rep) = cg(&d, &[1.0; 5], 1e-12, 10).unwrap();
        assert!(rep.converged);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn bicgstab_matches_direct_on_convection_diffusion() {
        let n = 80;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.add(i, i, 2.5);
            if i > 0 {
                t.add(i, i - 1, -1.4);
            }
            if i + 1 < n {
                t.add(i, i + 1, -0.6);
            }
        }
        let a = t.build().unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let (x1, rep) = bicgstab(&a, &b, 1e-12, 500).unwrap();
        assert!(rep.converged);
        let (x2, _) = solve(&a, &b, SolveMethod::Direct, 0.0, 0).unwrap();
        let err = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let id = SparseMatrix::identity(3).unwrap();
        let (x, rep) = bicgstab(&id, &[0.0; 3], 1e-10, 5).unwrap();
        assert!(rep.converged && x == vec![0.0; 3]);
    }
}
