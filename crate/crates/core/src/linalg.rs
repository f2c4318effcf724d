//! Dense small-matrix primitives.
//!
//! Storage is delegated to [`nalgebra::DMatrix`]; the symmetric
//! eigensolver is a cyclic Jacobi iteration, which is accurate to working
//! precision for the dimensions used here (a few dozen at most).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Real dense matrix. Column-major storage.
pub type DenseMatrix = DMatrix<f64>;

/// Maximum number of cyclic Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 30;

/// Two eigenvalues closer than this (relative to the spectral radius) are
/// treated as repeated.
pub const SIMPLE_EIGENVALUE_TOL: f64 = 1e-12;

/// Smallest eigenvalue gap accepted by [`random_spd_uniform`].
pub const SAMPLED_GAP_FLOOR: f64 = 1e-6;

fn check_square(b: &DenseMatrix) -> Result<()> {
    if b.is_empty() {
        return Err(Error::Empty);
    }
    if b.nrows() != b.ncols() {
        return Err(Error::NotSquare {
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    Ok(())
}

/// Symmetric part `(B + B^T) / 2`.
pub fn sym(b: &DenseMatrix) -> Result<DenseMatrix> {
    check_square(b)?;
    Ok(sym_unchecked(b))
}

/// Skew-symmetric part `(B - B^T) / 2`.
pub fn skew(b: &DenseMatrix) -> Result<DenseMatrix> {
    check_square(b)?;
    Ok(skew_unchecked(b))
}

pub(crate) fn sym_unchecked(b: &DenseMatrix) -> DenseMatrix {
    let n = b.nrows();
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]))
}

pub(crate) fn skew_unchecked(b: &DenseMatrix) -> DenseMatrix {
    let n = b.nrows();
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] - b[(j, i)]))
}

/// Eigenvalues (descending) and matching orthonormal eigenvectors of a
/// symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SpectralDecomposition {
    /// `W diag(lambda) W^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let w = &self.eigenvectors;
        w * DenseMatrix::from_diagonal(&self.eigenvalues) * w.transpose()
    }

    /// Columns of `W` selected by zero-based indices.
    pub fn columns(&self, indices: &[usize]) -> DenseMatrix {
        let n = self.eigenvectors.nrows();
        DenseMatrix::from_fn(n, indices.len(), |i, j| self.eigenvectors[(i, indices[j])])
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Only the upper triangle is trusted; the input is symmetrized first.
/// Eigenvalues come back in descending order and each eigenvector is
/// signed so that its largest-magnitude entry is positive.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<SpectralDecomposition> {
    check_square(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = m.nrows();
    let mut a = sym_unchecked(m);
    let mut v = DenseMatrix::identity(n, n);
    let scale = a.norm();
    let target = f64::EPSILON * scale;

    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            sweeps,
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut eigenvectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    for mut col in eigenvectors.column_iter_mut() {
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Symmetric positive-definite matrix with simple eigenvalues.
///
/// The spectral decomposition is computed once at construction and kept.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: DenseMatrix,
    spectral: SpectralDecomposition,
    symmetry_defect: f64,
}

impl SpdMatrix {
    /// Symmetrizes `m` and validates positivity and simplicity of the
    /// spectrum.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        check_square(&m)?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let matrix = sym_unchecked(&m);
        let symmetry_defect = (&m - m.transpose()).norm();
        let spectral = symmetric_eigen(&matrix)?;
        let lambda = &spectral.eigenvalues;
        let n = lambda.len();
        if lambda[n - 1] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: lambda[n - 1],
            });
        }
        let tol = SIMPLE_EIGENVALUE_TOL * lambda[0].max(1.0);
        let gap = (1..n)
            .map(|i| lambda[i - 1] - lambda[i])
            .fold(f64::INFINITY, f64::min);
        if gap <= tol {
            return Err(Error::RepeatedEigenvalues { gap });
        }
        Ok(Self {
            matrix,
            spectral,
            symmetry_defect,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    /// `||M - M^T||_F` of the matrix handed to [`SpdMatrix::new`].
    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }
}

/// Fresh Jacobi decomposition of `a`.
pub fn spectral_decompose(a: &SpdMatrix) -> Result<SpectralDecomposition> {
    symmetric_eigen(a.matrix())
}

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Distinct stream ids give independent sequences from one seed, so
/// parallel trials can each own a stream without coordinating.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }
}

/// Matrix with i.i.d. standard normal entries, filled column by column.
pub fn random_gaussian(rows: usize, cols: usize, rng: &mut RngStream) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal absorbed into `Q`).
pub fn random_orthogonal(n: usize, rng: &mut RngStream) -> DenseMatrix {
    let qr = random_gaussian(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// `Q diag(lambda) Q^T` with `lambda` uniform on `(0, 1]` and `Q` Haar.
///
/// Eigenvalue draws are rejected and redrawn until all consecutive gaps,
/// including the gap between the smallest eigenvalue and zero, are at
/// least [`SAMPLED_GAP_FLOOR`].
pub fn random_spd_uniform(n: usize, rng: &mut RngStream) -> Result<SpdMatrix> {
    if n < 2 {
        return Err(Error::InvalidProblem(format!(
            "random SPD matrix needs n >= 2, got {n}"
        )));
    }
    let lambda = loop {
        let mut draw: Vec<f64> = (0..n).map(|_| rng.uniform_open_closed()).collect();
        draw.sort_by(|a, b| b.total_cmp(a));
        let separated = draw.windows(2).all(|w| w[0] - w[1] >= SAMPLED_GAP_FLOOR)
            && draw[n - 1] >= SAMPLED_GAP_FLOOR;
        if separated {
            break DVector::from_vec(draw);
        }
    };
    let q = random_orthogonal(n, rng);
    let a = &q * DenseMatrix::from_diagonal(&lambda) * q.transpose();
    SpdMatrix::new(a)
}
