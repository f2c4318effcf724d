//! Restarted GMRES on `n x p` matrices with the Frobenius inner product.

use nalgebra::DVector;

use crate::field::LinearOperator;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KrylovStats {
    /// Operator applications spent in Arnoldi steps.
    pub iterations: usize,
    /// `||op(x) - rhs|| / ||rhs||`, recomputed from the returned `x`.
    pub relative_residual: f64,
    pub converged: bool,
    /// The Krylov space became invariant without reaching the tolerance
    /// (operator singular on the Krylov space).
    pub breakdown: bool,
    /// A restart cycle failed to reduce the residual.
    pub stagnated: bool,
}

/// Relative size of a new Arnoldi vector below which the Krylov space is
/// taken to be invariant.
const BREAKDOWN_TOL: f64 = 1e-14;

/// Solves `op(x) = rhs` from a zero initial guess.
///
/// Stops once `||op(x) - rhs|| <= tol ||rhs||`, after `maxit` operator
/// applications, on breakdown, or when a whole restart cycle makes no
/// progress. The outcome is always reported in the returned stats.
pub fn krylov_solve<L: LinearOperator + ?Sized>(
    op: &L,
    rhs: &DenseMatrix,
    tol: f64,
    restart: usize,
    maxit: usize,
) -> (DenseMatrix, KrylovStats) {
    let (n, p) = op.shape();
    assert_eq!(rhs.shape(), (n, p), "rhs shape does not match operator");
    let restart = restart.max(1);
    let rhs_norm = rhs.norm();
    let mut x = DenseMatrix::zeros(n, p);
    let mut stats = KrylovStats::default();
    if rhs_norm == 0.0 {
        stats.converged = true;
        return (x, stats);
    }
    let target = tol * rhs_norm;

    let mut r = rhs.clone();
    let mut beta = rhs_norm;
    loop {
        let mut basis: Vec<DenseMatrix> = Vec::with_capacity(restart + 1);
        basis.push(&r / beta);
        // Hessenberg columns after Givens rotation, i.e. the R factor.
        let mut hess: Vec<DVector<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<f64> = Vec::with_capacity(restart);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut happy = false;

        for j in 0..restart {
            if stats.iterations >= maxit {
                break;
            }
            let mut w = op.apply(&basis[j]);
            stats.iterations += 1;
            let w_norm0 = w.norm();
            let mut h = DVector::zeros(j + 2);
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = w.dot(v);
                    h[i] += c;
                    w -= v * c;
                }
            }
            let h_next = w.norm();
            h[j + 1] = h_next;

            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = h[j].hypot(h[j + 1]);
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (h[j] / denom, h[j + 1] / denom)
            };
            h[j] = denom;
            h[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(h);

            if h_next <= BREAKDOWN_TOL * w_norm0.max(f64::MIN_POSITIVE) {
                happy = true;
                break;
            }
            if g[j + 1].abs() <= target {
                break;
            }
            basis.push(w / h_next);
        }

        let k = hess.len();
        if k == 0 {
            break;
        }
        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= hess[l][i] * yl;
            }
            y[i] = if hess[i][i] != 0.0 {
                acc / hess[i][i]
            } else {
                0.0
            };
        }
        for (yi, v) in y.iter().zip(&basis) {
            x += v * *yi;
        }

        r = rhs - op.apply(&x);
        let new_beta = r.norm();
        let progressed = new_beta < beta * (1.0 - 1e-12);
        beta = new_beta;
        if beta <= target {
            stats.converged = true;
            break;
        }
        if happy {
            stats.breakdown = true;
            break;
        }
        if !progressed {
            stats.stagnated = true;
            break;
        }
        if stats.iterations >= maxit {
            break;
        }
    }
    stats.relative_residual = beta / rhs_norm;
    (x, stats)
}
