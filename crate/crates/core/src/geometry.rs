//! Geometry of the quotient `R*^{n x p} / O_p`.
//!
//! A point of the quotient is represented by any full-rank `n x p` matrix
//! `X` of its class `X O_p`. Tangent directions at `X` split into three
//! parts:
//!
//! ```text
//! Z = P^p_X(Z) + P^s_X(Z) + P^a_X(Z)
//! P^p_X(Z) = (I - X (X^T X)^{-1} X^T) Z        perpendicular to col(X)
//! P^s_X(Z) = X sym((X^T X)^{-1} X^T Z)         X times a symmetric matrix
//! P^a_X(Z) = X skew((X^T X)^{-1} X^T Z)        vertical, along the class
//! ```
//!
//! The horizontal space is `H_X = im(P^p_X) + im(P^s_X)` and
//! `P^h_X = P^p_X + P^s_X`. No orthonormal complement `X_perp` is ever
//! formed; the `K` component of `X_perp K` is measured through `P^p_X`.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{skew_unchecked, sym_unchecked, DenseMatrix};

/// Relative singular-value floor for membership in `R*^{n x p}`.
pub const RANK_GUARD: f64 = 1e-12;

/// Relative bound on `||P^a_X(Z)||` for a matrix to count as horizontal.
pub const HORIZONTAL_TOL: f64 = 1e-12;

/// Full-rank `n x p` matrix with its Gram matrix factored.
#[derive(Debug, Clone)]
pub struct Iterate {
    x: DenseMatrix,
    gram: DenseMatrix,
    gram_chol: Cholesky<f64, Dyn>,
}

impl Iterate {
    pub fn new(x: DenseMatrix) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Empty);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if x.ncols() > x.nrows() {
            return Err(Error::RankDeficient { ratio: 0.0 });
        }
        let sv = x.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(ratio >= RANK_GUARD) {
            return Err(Error::RankDeficient { ratio });
        }
        let gram = x.tr_mul(&x);
        let gram_chol = Cholesky::new(gram.clone()).ok_or(Error::RankDeficient { ratio })?;
        Ok(Self { x, gram, gram_chol })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `X^T X`.
    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    /// `(X^T X)^{-1} B` through the Cholesky factor.
    pub fn gram_solve(&self, b: &DenseMatrix) -> DenseMatrix {
        self.gram_chol.solve(b)
    }

    /// `||X^T X - I||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let p = self.p();
        (&self.gram - DenseMatrix::identity(p, p)).norm()
    }

    fn check_shape(&self, z: &DenseMatrix) {
        assert_eq!(
            z.shape(),
            self.x.shape(),
            "tangent matrix shape does not match base point"
        );
    }

    /// `(X^T X)^{-1} X^T Z`.
    fn coordinates(&self, z: &DenseMatrix) -> DenseMatrix {
        self.check_shape(z);
        self.gram_solve(&self.x.tr_mul(z))
    }

    pub fn project_perp(&self, z: &DenseMatrix) -> DenseMatrix {
        z - &self.x * self.coordinates(z)
    }

    pub fn project_sym(&self, z: &DenseMatrix) -> DenseMatrix {
        &self.x * sym_unchecked(&self.coordinates(z))
    }

    pub fn project_skew(&self, z: &DenseMatrix) -> DenseMatrix {
        &self.x * skew_unchecked(&self.coordinates(z))
    }

    pub fn project_horizontal(&self, z: &DenseMatrix) -> DenseMatrix {
        z - self.project_skew(z)
    }

    /// Norms of the three components of `Z`.
    pub fn components(&self, z: &DenseMatrix) -> ComponentNorms {
        let c = self.coordinates(z);
        let perp = z - &self.x * &c;
        let sym_part = &self.x * sym_unchecked(&c);
        let skew_part = &self.x * skew_unchecked(&c);
        ComponentNorms {
            perp: perp.norm(),
            sym: sym_part.norm(),
            skew: skew_part.norm(),
        }
    }

    /// Noncanonical metric
    /// `tr(Z1^T P^p_X(Z2) + Z1^T X (X^T X)^{-2} X^T Z2)`.
    ///
    /// Under this metric `H_X` is the orthogonal complement of the
    /// vertical space `X S_skew(p)`.
    pub fn metric(&self, z1: &DenseMatrix, z2: &DenseMatrix) -> f64 {
        self.check_shape(z1);
        let c2 = self.coordinates(z2);
        let perp = z2 - &self.x * &c2;
        let c1 = self.coordinates(z1);
        // Z1^T X (X^T X)^{-2} X^T Z2 = c1^T c2 with c = (X^T X)^{-1} X^T Z
        z1.dot(&perp) + c1.dot(&c2)
    }

    /// Whether `z` is horizontal to [`HORIZONTAL_TOL`].
    pub fn is_horizontal(&self, z: &DenseMatrix) -> bool {
        self.project_skew(z).norm() <= HORIZONTAL_TOL * z.norm()
    }
}

/// Frobenius norms of the perpendicular (`X_perp K`), symmetric (`X S`) and
/// vertical (`X Omega`) parts of a tangent matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentNorms {
    pub perp: f64,
    pub sym: f64,
    pub skew: f64,
}

/// Tangent matrix at some base point, with a horizontality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentMatrix {
    pub z: DenseMatrix,
    pub horizontal: bool,
}

impl TangentMatrix {
    /// Wraps `z` without certifying anything.
    pub fn new(z: DenseMatrix) -> Self {
        Self {
            z,
            horizontal: false,
        }
    }

    /// Wraps `z`, setting the flag iff `z` is horizontal at `base`.
    pub fn certified(base: &Iterate, z: DenseMatrix) -> Self {
        let horizontal = base.is_horizontal(&z);
        Self { z, horizontal }
    }

    pub fn norm(&self) -> f64 {
        self.z.norm()
    }
}

/// `min_{Q in O_p} ||X - Y Q||_F`.
///
/// The minimizer is the orthogonal polar factor `U V^T` of `Y^T X = U S V^T`.
pub fn class_distance(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    assert_eq!(x.shape(), y.shape(), "class_distance needs equal shapes");
    let svd = y.tr_mul(x).svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        unreachable!("svd computed with both factors")
    };
    let q = u * v_t;
    (x - y * q).norm()
}
