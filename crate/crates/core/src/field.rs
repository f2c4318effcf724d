//! Oja's vector field `F(X) = AX - X X^T A X`, its horizontal lift on the
//! quotient, and the linear operators of both Newton equations.

use crate::error::{Error, Result};
use crate::geometry::Iterate;
use crate::linalg::{skew_unchecked, symmetric_eigen, DenseMatrix, SpdMatrix};

/// Symmetric positive-definite `A` together with the target dimension `p`.
#[derive(Debug, Clone)]
pub struct OjaProblem {
    a: SpdMatrix,
    p: usize,
}

impl OjaProblem {
    pub fn new(a: SpdMatrix, p: usize) -> Result<Self> {
        let n = a.dim();
        if p == 0 || p >= n {
            return Err(Error::InvalidProblem(format!(
                "need 0 < p < n, got n={n}, p={p}"
            )));
        }
        Ok(Self { a, p })
    }

    pub fn a(&self) -> &SpdMatrix {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn check(&self, x: &DenseMatrix) {
        assert_eq!(
            x.shape(),
            (self.n(), self.p),
            "matrix shape does not match the problem"
        );
    }

    /// `F(X) = AX - X X^T A X`.
    pub fn oja_f(&self, x: &DenseMatrix) -> DenseMatrix {
        self.check(x);
        let ax = self.a.matrix() * x;
        let b = x.tr_mul(&ax);
        &ax - x * b
    }

    /// `DF(X)[Z] = AZ - Z X^T A X - X Z^T A X - X X^T A Z`.
    pub fn oja_df(&self, x: &DenseMatrix, z: &DenseMatrix) -> DenseMatrix {
        PlainJacobian::new(self, x).apply(z)
    }

    /// Horizontal lift `P^h_X(F(X)) = AX - X X^T A X - X skew((X^T X)^{-1} X^T A X)`.
    pub fn xi_lift(&self, x: &Iterate) -> DenseMatrix {
        self.check(x.matrix());
        let xm = x.matrix();
        let ax = self.a.matrix() * xm;
        let b = xm.tr_mul(&ax);
        let correction = skew_unchecked(&x.gram_solve(&b));
        &ax - xm * (b + correction)
    }

    /// Left-hand side operator of the plain Newton equation, `Z -> DF(X)[Z]`.
    pub fn plain_jacobian(&self, x: &DenseMatrix) -> PlainJacobian {
        PlainJacobian::new(self, x)
    }

    /// `Z -> D(P^h F)(X)[Z]`, the flat derivative of the horizontal lift.
    pub fn xi_derivative(&self, x: &Iterate) -> XiDerivative {
        XiDerivative::new(self, x)
    }

    /// Left-hand side of the geometric Newton equation,
    /// `Z -> P^h_X(D(P^h F)(X)[Z])`.
    pub fn newton_operator(&self, x: &Iterate) -> GeometricJacobian {
        GeometricJacobian {
            inner: XiDerivative::new(self, x),
        }
    }

    /// Full-space operator `Z -> P^h(J(P^h Z)) + P^a(Z)` whose solutions
    /// for a horizontal right-hand side are horizontal and solve the
    /// geometric Newton equation.
    pub fn augmented_newton_operator(&self, x: &Iterate) -> AugmentedGeometricJacobian {
        AugmentedGeometricJacobian {
            inner: XiDerivative::new(self, x),
        }
    }
}

/// Which subspace an operator's outputs are guaranteed to lie in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codomain {
    Full,
    Horizontal,
}

/// Linear map on `n x p` matrices.
pub trait LinearOperator {
    /// `(n, p)` of the matrices the operator acts on.
    fn shape(&self) -> (usize, usize);

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix;

    fn codomain(&self) -> Codomain {
        Codomain::Full
    }
}

/// Operator built from a closure.
pub struct FnOperator<F> {
    shape: (usize, usize),
    codomain: Codomain,
    f: F,
}

impl<F: Fn(&DenseMatrix) -> DenseMatrix> FnOperator<F> {
    pub fn new(n: usize, p: usize, f: F) -> Self {
        Self {
            shape: (n, p),
            codomain: Codomain::Full,
            f,
        }
    }

    pub fn with_codomain(mut self, codomain: Codomain) -> Self {
        self.codomain = codomain;
        self
    }
}

impl<F: Fn(&DenseMatrix) -> DenseMatrix> LinearOperator for FnOperator<F> {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        (self.f)(z)
    }

    fn codomain(&self) -> Codomain {
        self.codomain
    }
}

/// `Z -> DF(X)[Z]`.
#[derive(Debug, Clone)]
pub struct PlainJacobian {
    a: DenseMatrix,
    x: DenseMatrix,
    ax: DenseMatrix,
    b: DenseMatrix,
}

impl PlainJacobian {
    fn new(prob: &OjaProblem, x: &DenseMatrix) -> Self {
        prob.check(x);
        let a = prob.a.matrix().clone();
        let ax = &a * x;
        let b = x.tr_mul(&ax);
        Self {
            a,
            x: x.clone(),
            ax,
            b,
        }
    }
}

impl LinearOperator for PlainJacobian {
    fn shape(&self) -> (usize, usize) {
        self.x.shape()
    }

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        let az = &self.a * z;
        // X^T A Z = (AX)^T Z
        let mixed = z.tr_mul(&self.ax) + self.ax.tr_mul(z);
        az - z * &self.b - &self.x * mixed
    }
}

/// `Z -> D(P^h F)(X)[Z]` written out term by term:
///
/// ```text
/// AZ - Z X^T A X - X Z^T A X - X X^T A Z - Z skew(G^{-1} X^T A X)
///   - X skew(-G^{-1} (X^T Z + Z^T X) G^{-1} X^T A X + G^{-1} (Z^T A X + X^T A Z))
/// ```
///
/// with `G = X^T X`.
#[derive(Debug, Clone)]
pub struct XiDerivative {
    a: DenseMatrix,
    base: Iterate,
    ax: DenseMatrix,
    b: DenseMatrix,
    ginv_b: DenseMatrix,
    skew_ginv_b: DenseMatrix,
}

impl XiDerivative {
    fn new(prob: &OjaProblem, x: &Iterate) -> Self {
        prob.check(x.matrix());
        let a = prob.a.matrix().clone();
        let ax = &a * x.matrix();
        let b = x.matrix().tr_mul(&ax);
        let ginv_b = x.gram_solve(&b);
        let skew_ginv_b = skew_unchecked(&ginv_b);
        Self {
            a,
            base: x.clone(),
            ax,
            b,
            ginv_b,
            skew_ginv_b,
        }
    }

    pub fn base(&self) -> &Iterate {
        &self.base
    }
}

impl LinearOperator for XiDerivative {
    fn shape(&self) -> (usize, usize) {
        self.base.matrix().shape()
    }

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        let x = self.base.matrix();
        let az = &self.a * z;
        let zt_ax = z.tr_mul(&self.ax);
        let xt_az = self.ax.tr_mul(z);
        let xt_z = x.tr_mul(z);

        let df = &az - z * &self.b - x * (&zt_ax + &xt_az);
        let gram_dot = &xt_z + xt_z.transpose();
        let inner = -self.base.gram_solve(&gram_dot) * &self.ginv_b
            + self.base.gram_solve(&(zt_ax + xt_az));
        df - z * &self.skew_ginv_b - x * skew_unchecked(&inner)
    }
}

/// `Z -> P^h_X(D(P^h F)(X)[Z])`.
#[derive(Debug, Clone)]
pub struct GeometricJacobian {
    inner: XiDerivative,
}

impl GeometricJacobian {
    pub fn base(&self) -> &Iterate {
        &self.inner.base
    }
}

impl LinearOperator for GeometricJacobian {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        self.inner.base.project_horizontal(&self.inner.apply(z))
    }

    fn codomain(&self) -> Codomain {
        Codomain::Horizontal
    }
}

/// `Z -> P^h_X(J(P^h_X Z)) + P^a_X(Z)`.
#[derive(Debug, Clone)]
pub struct AugmentedGeometricJacobian {
    inner: XiDerivative,
}

impl AugmentedGeometricJacobian {
    pub fn base(&self) -> &Iterate {
        &self.inner.base
    }
}

impl LinearOperator for AugmentedGeometricJacobian {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn apply(&self, z: &DenseMatrix) -> DenseMatrix {
        let base = &self.inner.base;
        let vertical = base.project_skew(z);
        let horizontal = z - &vertical;
        base.project_horizontal(&self.inner.apply(&horizontal)) + vertical
    }
}

/// `np x np` matrix of `op` acting on column-stacked `vec(Z)`.
pub fn dense_operator_matrix<L: LinearOperator + ?Sized>(op: &L) -> DenseMatrix {
    let (n, p) = op.shape();
    let dim = n * p;
    let mut m = DenseMatrix::zeros(dim, dim);
    let mut unit = DenseMatrix::zeros(n, p);
    for j in 0..dim {
        unit[j] = 1.0;
        let image = op.apply(&unit);
        m.column_mut(j).copy_from_slice(image.as_slice());
        unit[j] = 0.0;
    }
    m
}

/// Residuals certifying (or refuting) that `X` is a zero of `F` and of
/// its horizontal lift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroReport {
    pub residual_f: f64,
    pub residual_xi: f64,
    /// `||(I - X X^+) A X||_F`.
    pub invariance_defect: f64,
    /// `||X^T X - I||_F`.
    pub orthonormality_defect: f64,
    pub is_zero_f: bool,
    pub is_zero_xi: bool,
}

pub fn verify_zero(prob: &OjaProblem, x: &Iterate, tol: f64) -> ZeroReport {
    let residual_f = prob.oja_f(x.matrix()).norm();
    let residual_xi = prob.xi_lift(x).norm();
    let ax = prob.a.matrix() * x.matrix();
    let invariance_defect = x.project_perp(&ax).norm();
    ZeroReport {
        residual_f,
        residual_xi,
        invariance_defect,
        orthonormality_defect: x.orthonormality_defect(),
        is_zero_f: residual_f <= tol,
        is_zero_xi: residual_xi <= tol,
    }
}

/// Spectral facts about the Jacobians at a zero `X_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    /// Smallest singular value of the geometric Jacobian restricted to
    /// `H_{X_*}`.
    pub sigma_min_horizontal: f64,
    /// Numerical kernel dimension of the plain Jacobian `DF(X_*)`.
    pub full_kernel_dim: usize,
    /// Largest norm among the blocks of `D(P^h F)(X_*)` that must vanish:
    /// (p,s), (p,a), (s,a) and (a,a), relative to the operator norm.
    pub zero_block_defect: f64,
    pub pp_sigma_min: f64,
    pub ss_sigma_min: f64,
    /// Eigenvalues of the (s,s) block, descending.
    pub ss_eigenvalues: Vec<f64>,
    /// `-(beta_i + beta_j)` for `i <= j`, descending, with `beta` the
    /// eigenvalues of `X_*^T A X_*`.
    pub sylvester_eigenvalues: Vec<f64>,
    pub block_structure_ok: bool,
}

/// Relative singular-value cutoff used to count kernel dimensions.
pub const KERNEL_TOL: f64 = 1e-8;

/// Relative tolerance for the vanishing blocks.
pub const ZERO_BLOCK_TOL: f64 = 1e-10;

/// Orthonormal basis (columns) of the range of a projector matrix.
fn range_basis(projector: &DenseMatrix) -> DenseMatrix {
    let svd = projector.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 0.5)
        .collect();
    DenseMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

fn sigma_min(m: &DenseMatrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    m.clone().singular_values().min()
}

pub fn nondegeneracy_check(prob: &OjaProblem, x_star: &Iterate) -> Result<NondegeneracyReport> {
    let a_norm = prob.a.matrix().norm();
    let report = verify_zero(prob, x_star, 1e-8 * a_norm);
    if !report.is_zero_f {
        return Err(Error::NotAZero {
            residual: report.residual_f,
        });
    }
    let (n, p) = (prob.n(), prob.p());
    let xs = x_star;

    let jac = dense_operator_matrix(&prob.xi_derivative(xs));
    let geometric = dense_operator_matrix(&prob.newton_operator(xs));
    let plain = dense_operator_matrix(&prob.plain_jacobian(xs.matrix()));

    let proj = |f: &dyn Fn(&DenseMatrix) -> DenseMatrix| {
        dense_operator_matrix(&FnOperator::new(n, p, |z: &DenseMatrix| f(z)))
    };
    let p_perp = proj(&|z| xs.project_perp(z));
    let p_sym = proj(&|z| xs.project_sym(z));
    let p_skew = proj(&|z| xs.project_skew(z));
    let p_hor = proj(&|z| xs.project_horizontal(z));

    let u_perp = range_basis(&p_perp);
    let u_sym = range_basis(&p_sym);
    let u_skew = range_basis(&p_skew);
    let u_hor = range_basis(&p_hor);

    let restricted = u_hor.transpose() * &geometric * &u_hor;
    let sigma_min_horizontal = sigma_min(&restricted);

    let plain_sv = plain.clone().singular_values();
    let cutoff = KERNEL_TOL * plain_sv.max();
    let full_kernel_dim = plain_sv.iter().filter(|&&s| s <= cutoff).count();

    let block = |rows: &DenseMatrix, row_proj: &DenseMatrix, cols: &DenseMatrix| {
        rows.transpose() * row_proj * &jac * cols
    };
    let jac_norm = jac.norm().max(f64::MIN_POSITIVE);
    let zero_blocks = [
        block(&u_perp, &p_perp, &u_sym),
        block(&u_perp, &p_perp, &u_skew),
        block(&u_sym, &p_sym, &u_skew),
        block(&u_skew, &p_skew, &u_skew),
    ];
    let zero_block_defect = zero_blocks
        .iter()
        .map(|b| b.norm() / jac_norm)
        .fold(0.0, f64::max);
    let pp_sigma_min = sigma_min(&block(&u_perp, &p_perp, &u_perp));
    let ss = block(&u_sym, &p_sym, &u_sym);
    let ss_sigma_min = sigma_min(&ss);
    let ss_eigenvalues: Vec<f64> = symmetric_eigen(&ss)?.eigenvalues.iter().copied().collect();

    let b = xs.matrix().tr_mul(&(prob.a.matrix() * xs.matrix()));
    let beta = symmetric_eigen(&b)?.eigenvalues;
    let mut sylvester_eigenvalues = Vec::with_capacity(p * (p + 1) / 2);
    for i in 0..p {
        for j in i..p {
            sylvester_eigenvalues.push(-(beta[i] + beta[j]));
        }
    }
    sylvester_eigenvalues.sort_by(|x, y| y.total_cmp(x));

    let block_structure_ok = zero_block_defect <= ZERO_BLOCK_TOL
        && pp_sigma_min > KERNEL_TOL * jac_norm
        && ss_sigma_min > KERNEL_TOL * jac_norm;

    Ok(NondegeneracyReport {
        sigma_min_horizontal,
        full_kernel_dim,
        zero_block_defect,
        pp_sigma_min,
        ss_sigma_min,
        ss_eigenvalues,
        sylvester_eigenvalues,
        block_structure_ok,
    })
}
