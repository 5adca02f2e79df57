//! Dense complex linear algebra used by the operator layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square roots of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianRoots {
    pub sqrt: CMatrix,
    pub inv_sqrt: CMatrix,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn hermitian_roots(g: &CMatrix) -> Result<HermitianRoots> {
    let sym = (g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min > 0.0) {
        return Err(Error::LinAlg(format!("Gram matrix is not positive definite (λ_min = {min:e})")));
    }
    let q = &eig.eigenvectors;
    let build = |f: fn(f64) -> f64| {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| Complex64::new(f(l), 0.0)),
        ));
        q * d * q.adjoint()
    };
    Ok(HermitianRoots {
        sqrt: build(f64::sqrt),
        inv_sqrt: build(|l| l.sqrt().recip()),
        min_eigenvalue: min,
        max_eigenvalue: max,
    })
}

/// Singular values in descending order.
pub fn singular_values(b: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = b.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm from a full SVD; the oracle for [`top_singular_value`].
pub fn spectral_norm(b: &CMatrix) -> f64 {
    singular_values(b).first().copied().unwrap_or(0.0)
}

/// Outcome of the iterative largest-singular-value estimate.
#[derive(Debug, Clone)]
pub struct PowerIteration {
    pub value: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Largest singular value of `b` by Lanczos on `bᴴb` with full
/// reorthogonalization. Stops when the residual of the leading Ritz pair is at
/// most `tol` times its Ritz value, or when the Krylov space becomes invariant.
pub fn top_singular_value(b: &CMatrix, tol: f64, max_iter: usize, seed: u64) -> Result<PowerIteration> {
    let n = b.ncols();
    if n == 0 || b.iter().all(|v| *v == ZERO) {
        return Ok(PowerIteration { value: 0.0, iterations: 0, history: vec![0.0] });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = CVector::from_fn(n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    q /= Complex64::new(q.norm(), 0.0);
    let c = b.adjoint() * b;
    let scale = c.norm();
    let mut basis: Vec<CVector> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    for it in 1..=max_iter.max(1) {
        let mut w = &c * &q;
        let a = q.dotc(&w).re;
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let proj = v.dotc(&w);
                w -= v * proj;
            }
        }
        alpha.push(a);
        let bn = w.norm();
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (top_idx, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let residual = bn * eig.eigenvectors[(k - 1, top_idx)].abs();
        let sigma = theta.max(0.0).sqrt();
        history.push(sigma);
        let invariant = bn <= 1e-14 * scale || k == n;
        if residual <= tol * theta.abs() || invariant {
            return Ok(PowerIteration { value: sigma, iterations: it, history });
        }
        beta.push(bn);
        q = w / Complex64::new(bn, 0.0);
    }
    Err(Error::NoConvergence { iterations: max_iter, history })
}

/// `‖a - b‖₂ / ‖b‖₂`, or the absolute norm when `b = 0`.
pub fn relative_spectral_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = spectral_norm(&(a - b));
    let s = spectral_norm(b);
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

/// Result of a Krylov solve.
#[derive(Debug, Clone)]
pub struct KrylovSolve {
    pub x: CVector,
    pub iterations: usize,
    /// True relative residual `‖g - A x_k‖ / ‖g‖` after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Full GMRES for `A x = g`, optionally left-preconditioned by `B`
/// (minimizing `‖B(g - A x)‖` over the Krylov space of `BA`). Convergence is
/// judged on the true residual `‖g - A x‖ / ‖g‖ ≤ tol`.
pub fn gmres(a: &CMatrix, g: &CVector, precond: Option<&CMatrix>, tol: f64, max_iter: usize) -> KrylovSolve {
    let n = g.len();
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return KrylovSolve { x: CVector::zeros(n), iterations: 0, residuals: vec![], converged: true };
    }
    let op = |v: &CVector| -> CVector {
        let av = a * v;
        match precond {
            Some(b) => b * av,
            None => av,
        }
    };
    let r0 = match precond {
        Some(b) => b * g,
        None => g.clone(),
    };
    let beta = r0.norm();
    let max_iter = max_iter.min(n.max(1));
    let mut basis: Vec<CVector> = vec![r0 / Complex64::new(beta, 0.0)];
    // Hessenberg columns after Givens rotation
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut cs: Vec<(Complex64, Complex64)> = Vec::new();
    let mut rhs = vec![Complex64::new(beta, 0.0)];
    let mut residuals = Vec::new();
    let mut x = CVector::zeros(n);
    for k in 0..max_iter {
        let mut w = op(&basis[k]);
        let mut h = vec![ZERO; k + 2];
        for (i, q) in basis.iter().enumerate() {
            h[i] = q.dotc(&w);
            w -= q * h[i];
        }
        // one reorthogonalization pass
        for (i, q) in basis.iter().enumerate() {
            let c = q.dotc(&w);
            h[i] += c;
            w -= q * c;
        }
        let hn = w.norm();
        h[k + 1] = Complex64::new(hn, 0.0);
        for (i, &(c, s)) in cs.iter().enumerate() {
            let t = c.conj() * h[i] + s.conj() * h[i + 1];
            h[i + 1] = -s * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let (a0, b0) = (h[k], h[k + 1]);
        let rr = (a0.norm_sqr() + b0.norm_sqr()).sqrt();
        let (c, s) = if rr == 0.0 { (ONE, ZERO) } else { (a0 / rr, b0 / rr) };
        h[k] = c.conj() * a0 + s.conj() * b0;
        h[k + 1] = ZERO;
        cs.push((c, s));
        let top = rhs[k];
        rhs[k] = c.conj() * top;
        rhs.push(-s * top);
        r_cols.push(h);

        // back substitution for the current iterate
        let m = k + 1;
        let mut y = vec![ZERO; m];
        for i in (0..m).rev() {
            let mut acc = rhs[i];
            for j in (i + 1)..m {
                acc -= r_cols[j][i] * y[j];
            }
            y[i] = if r_cols[i][i] == ZERO { ZERO } else { acc / r_cols[i][i] };
        }
        x = CVector::zeros(n);
        for (yi, q) in y.iter().zip(&basis) {
            x += q * *yi;
        }
        let res = (g - a * &x).norm() / gnorm;
        residuals.push(res);
        if res <= tol {
            return KrylovSolve { x, iterations: k + 1, residuals, converged: true };
        }
        if hn <= 1e-14 * beta {
            break;
        }
        basis.push(w / Complex64::new(hn, 0.0));
    }
    let iterations = residuals.len();
    KrylovSolve { x, iterations, residuals, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn power_iteration_matches_svd() {
        let b = random_matrix(24, 3);
        let est = top_singular_value(&b, 1e-12, 500, 1).unwrap();
        assert!((est.value - spectral_norm(&b)).abs() < 1e-9 * est.value);
    }

    #[test]
    fn lanczos_resolves_clustered_top() {
        // singular values 1, 1 - 1e-4, 1 - 2e-4, ...: hopeless for plain power iteration
        let n = 128;
        let d = CMatrix::from_diagonal(&CVector::from_fn(n, |i, _| Complex64::new(1.0 - 1e-4 * i as f64, 0.0)));
        let u = random_matrix(n, 4).qr().q();
        let b = &u * d * u.adjoint();
        let est = top_singular_value(&b, 1e-8, 500, 0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "{}", est.value);
    }

    #[test]
    fn power_iteration_identity_and_zero() {
        let i = CMatrix::identity(10, 10) * Complex64::new(0.0, 3.0);
        assert!((top_singular_value(&i, 1e-8, 500, 0).unwrap().value - 3.0).abs() < 1e-12);
        assert_eq!(top_singular_value(&CMatrix::zeros(5, 5), 1e-8, 500, 0).unwrap().value, 0.0);
    }

    #[test]
    fn non_convergence_reports_history() {
        let b = random_matrix(30, 9);
        match top_singular_value(&b, 0.0, 3, 2) {
            Err(Error::NoConvergence { iterations, history }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn roots_invert() {
        let a = random_matrix(12, 5);
        let g = &a * a.adjoint() + CMatrix::identity(12, 12);
        let r = hermitian_roots(&g).unwrap();
        let id = &r.sqrt * &r.inv_sqrt;
        assert!((id - CMatrix::identity(12, 12)).norm() < 1e-10);
        assert!((&r.sqrt * &r.sqrt - &g).norm() < 1e-10 * g.norm());
    }

    #[test]
    fn gmres_solves_and_counts() {
        let n = 20;
        let a = CMatrix::identity(n, n) + random_matrix(n, 11) * Complex64::new(0.2, 0.0);
        let g = CVector::from_fn(n, |i, _| Complex64::new(i as f64, 1.0));
        let sol = gmres(&a, &g, None, 1e-10, 500);
        assert!(sol.converged && (g.clone() - &a * &sol.x).norm() <= 1e-10 * g.norm());
        let inv = a.clone().try_inverse().unwrap();
        let pre = gmres(&a, &g, Some(&inv), 1e-10, 500);
        assert!(pre.iterations <= 2, "{}", pre.iterations);
        let id = gmres(&CMatrix::identity(n, n), &g, None, 1e-12, 500);
        assert_eq!(id.iterations, 1);
        let zero = gmres(&a, &CVector::zeros(n), None, 1e-8, 500);
        assert_eq!(zero.iterations, 0);
    }
}
