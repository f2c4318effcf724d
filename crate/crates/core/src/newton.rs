//! Plain and geometric Newton iterations for Oja's vector field.
//!
//! Plain Newton solves `DF(X)[Z] = -F(X)` in the full matrix space and sets
//! `X+ = X + Z`. Its zeros are never isolated (`F(XQ) = F(X)Q`), so the
//! Jacobian is singular there.
//!
//! Geometric Newton solves `P^h_X(D xi(X)[Z]) = -xi(X)` for horizontal `Z`
//! and sets `X+ = X + Z`. The Krylov and dense backends both solve the
//! augmented full-space system `P^h(J(P^h Z)) + P^a(Z) = -xi(X)`; its
//! right-hand side is horizontal, so the vertical part of the solution is
//! zero and its horizontal part solves the Newton equation on `H_X`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::field::{dense_operator_matrix, LinearOperator, OjaProblem};
use crate::geometry::{ComponentNorms, Iterate, TangentMatrix};
use crate::krylov::krylov_solve;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSolver {
    Dense,
    Krylov,
}

/// Relative tolerance handed to the inner linear solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingPolicy {
    Fixed(f64),
    /// `min(0.5, sqrt(residual))`.
    Adaptive,
}

/// Floor applied to every forcing term.
pub const FORCING_FLOOR: f64 = 1e-14;

pub fn forcing_term(_k: usize, residual_norm: f64, policy: ForcingPolicy) -> f64 {
    match policy {
        ForcingPolicy::Fixed(eta) => eta,
        ForcingPolicy::Adaptive => residual_norm.sqrt().clamp(FORCING_FLOOR, 0.5),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    /// Stop once `||F||_F` (plain) or `||xi||_F` (geometric) drops below.
    pub residual_tol: f64,
    pub inner_solver: InnerSolver,
    pub forcing: ForcingPolicy,
    pub krylov_restart: usize,
    /// `None` means `n * p`.
    pub krylov_max_iters: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            residual_tol: 1e-14,
            inner_solver: InnerSolver::Krylov,
            forcing: ForcingPolicy::Adaptive,
            krylov_restart: 30,
            krylov_max_iters: None,
        }
    }
}

impl SolverConfig {
    pub fn dense() -> Self {
        Self {
            inner_solver: InnerSolver::Dense,
            ..Self::default()
        }
    }

    /// Resolved Krylov budget for an `n x p` problem.
    pub fn krylov_budget(&self, n: usize, p: usize) -> usize {
        self.krylov_max_iters.unwrap_or(n * p)
    }
}

/// Singular values below this fraction of the largest count as zero in
/// the dense solves.
pub const DENSE_RANK_TOL: f64 = 1e-12;

/// A Krylov solve that ends above this relative residual is treated as
/// stagnated.
pub const KRYLOV_STAGNATION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InnerStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// `sigma_max / sigma_min` of the dense system, when formed.
    pub condition: Option<f64>,
    /// The dense system was numerically singular (solved regardless).
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    SingularSystem,
}

/// Dense solve of `op(z) = rhs` by LU with partial pivoting, with the
/// condition number taken from the singular values.
///
/// Systems with `sigma_min <= DENSE_RANK_TOL * sigma_max` are flagged rank
/// deficient. They are rejected unless `allow_rank_deficient` is set, in
/// which case LU still solves them; only an exactly singular factorization
/// falls back to a minimum-norm least-squares solution.
fn dense_solve<L: LinearOperator + ?Sized>(
    op: &L,
    rhs: &DenseMatrix,
    allow_rank_deficient: bool,
) -> Option<(DenseMatrix, InnerStats)> {
    let (n, p) = op.shape();
    let m = dense_operator_matrix(op);
    let b = DVector::from_column_slice(rhs.as_slice());
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rank_deficient = !(smin > DENSE_RANK_TOL * smax);
    if rank_deficient && !allow_rank_deficient {
        return None;
    }
    let sol = match m.clone().lu().solve(&b) {
        Some(sol) if sol.iter().all(|v| v.is_finite()) => sol,
        _ => m
            .clone()
            .svd(true, true)
            .solve(&b, DENSE_RANK_TOL * smax)
            .ok()?,
    };
    let b_norm = b.norm();
    let relative_residual = if b_norm > 0.0 {
        (&m * &sol - &b).norm() / b_norm
    } else {
        0.0
    };
    Some((
        DenseMatrix::from_column_slice(n, p, sol.as_slice()),
        InnerStats {
            iterations: 1,
            relative_residual,
            condition: Some(if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }),
            rank_deficient,
        },
    ))
}

fn krylov<L: LinearOperator + ?Sized>(
    op: &L,
    rhs: &DenseMatrix,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<(DenseMatrix, InnerStats), StepError> {
    let (n, p) = op.shape();
    let (z, stats) = krylov_solve(op, rhs, eta, cfg.krylov_restart, cfg.krylov_budget(n, p));
    if !stats.converged && !(stats.relative_residual < KRYLOV_STAGNATION) {
        return Err(StepError::SingularSystem);
    }
    Ok((
        z,
        InnerStats {
            iterations: stats.iterations,
            relative_residual: stats.relative_residual,
            condition: None,
            rank_deficient: false,
        },
    ))
}

/// One plain Newton step: `Z` with `DF(X)[Z] = -F(X)`.
///
/// The dense backend never fails: a numerically singular Jacobian is
/// flagged in the stats and solved anyway.
pub fn plain_newton_step(
    prob: &OjaProblem,
    x: &Iterate,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(TangentMatrix, InnerStats), StepError> {
    let rhs = -prob.oja_f(x.matrix());
    let op = prob.plain_jacobian(x.matrix());
    let (z, stats) = match cfg.inner_solver {
        InnerSolver::Dense => dense_solve(&op, &rhs, true).ok_or(StepError::SingularSystem)?,
        InnerSolver::Krylov => {
            let eta = forcing_term(k, rhs.norm(), cfg.forcing);
            krylov(&op, &rhs, eta, cfg)?
        }
    };
    Ok((TangentMatrix::certified(x, z), stats))
}

/// One geometric Newton step: horizontal `Z` solving the projected Newton
/// equation at `X`.
pub fn geometric_newton_step(
    prob: &OjaProblem,
    x: &Iterate,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(TangentMatrix, InnerStats), StepError> {
    let rhs = -prob.xi_lift(x);
    let op = prob.augmented_newton_operator(x);
    let (z, stats) = match cfg.inner_solver {
        InnerSolver::Dense => dense_solve(&op, &rhs, false).ok_or(StepError::SingularSystem)?,
        InnerSolver::Krylov => {
            let eta = forcing_term(k, rhs.norm(), cfg.forcing);
            krylov(&op, &rhs, eta, cfg)?
        }
    };
    let z = x.project_horizontal(&z);
    Ok((TangentMatrix::certified(x, z), stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    SingularSystem,
    RankLost,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::SingularSystem => "singular_system",
            Status::RankLost => "rank_lost",
        }
    }
}

/// One row of a Newton trace. Residuals refer to `X_k`; step fields
/// describe the step `Z_k` taken from it (zero on the final row).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub iter: usize,
    pub res_f: f64,
    pub res_xi: f64,
    pub orth_defect: f64,
    pub step: ComponentNorms,
    pub inner_iters: usize,
    pub inner_res: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonTrace {
    pub rows: Vec<TraceRow>,
}

impl NewtonTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Residual sequence of the chosen method.
    pub fn residuals(&self, method: Method) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match method {
                Method::Plain => r.res_f,
                Method::Geometric => r.res_xi,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub x: Iterate,
    /// All iterates `X_0, ..., X_final`, kept when requested.
    pub iterates: Vec<DenseMatrix>,
    pub trace: NewtonTrace,
    pub status: Status,
    /// Number of steps taken.
    pub iterations: usize,
}

impl NewtonResult {
    pub fn final_residual(&self, method: Method) -> f64 {
        self.trace
            .residuals(method)
            .last()
            .copied()
            .unwrap_or(f64::NAN)
    }
}

/// Runs Newton from `x0` until the residual tolerance, the iteration
/// budget, or a failed step. No line search, no orthogonalization.
pub fn run_newton(
    prob: &OjaProblem,
    x0: Iterate,
    method: Method,
    cfg: &SolverConfig,
) -> NewtonResult {
    run_newton_inner(prob, x0, method, cfg, false)
}

/// As [`run_newton`], also returning every iterate.
pub fn run_newton_recording(
    prob: &OjaProblem,
    x0: Iterate,
    method: Method,
    cfg: &SolverConfig,
) -> NewtonResult {
    run_newton_inner(prob, x0, method, cfg, true)
}

fn run_newton_inner(
    prob: &OjaProblem,
    x0: Iterate,
    method: Method,
    cfg: &SolverConfig,
    record: bool,
) -> NewtonResult {
    let mut x = x0;
    let mut trace = NewtonTrace::default();
    let mut iterates = Vec::new();
    let mut k = 0;
    let status = loop {
        if record {
            iterates.push(x.matrix().clone());
        }
        let res_f = prob.oja_f(x.matrix()).norm();
        let res_xi = prob.xi_lift(&x).norm();
        let mut row = TraceRow {
            iter: k,
            res_f,
            res_xi,
            orth_defect: x.orthonormality_defect(),
            ..TraceRow::default()
        };
        let residual = match method {
            Method::Plain => res_f,
            Method::Geometric => res_xi,
        };
        if residual <= cfg.residual_tol {
            trace.rows.push(row);
            break Status::Converged;
        }
        if k >= cfg.max_outer_iters {
            trace.rows.push(row);
            break Status::MaxIters;
        }
        let step = match method {
            Method::Plain => plain_newton_step(prob, &x, k, cfg),
            Method::Geometric => geometric_newton_step(prob, &x, k, cfg),
        };
        let (z, stats) = match step {
            Ok(s) => s,
            Err(StepError::SingularSystem) => {
                trace.rows.push(row);
                break Status::SingularSystem;
            }
        };
        row.step = x.components(&z.z);
        row.inner_iters = stats.iterations;
        row.inner_res = stats.relative_residual;
        row.rank_deficient = stats.rank_deficient;
        trace.rows.push(row);
        k += 1;
        match Iterate::new(x.matrix() + &z.z) {
            Ok(next) => x = next,
            Err(_) => break Status::RankLost,
        }
    };
    NewtonResult {
        x,
        iterates,
        trace,
        status,
        iterations: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::class_distance;
    use crate::linalg::{
        random_gaussian, random_orthogonal, random_spd_uniform, RngStream, SpdMatrix,
    };

    fn diag21() -> OjaProblem {
        let a = SpdMatrix::new(DenseMatrix::from_diagonal(&DVector::from_vec(vec![
            2.0, 1.0,
        ])))
        .unwrap();
        OjaProblem::new(a, 1).unwrap()
    }

    fn random_problem(seed: u64) -> OjaProblem {
        OjaProblem::new(
            random_spd_uniform(6, &mut RngStream::new(seed, 0)).unwrap(),
            3,
        )
        .unwrap()
    }

    fn dominant(prob: &OjaProblem) -> Iterate {
        Iterate::new(
            prob.a()
                .spectral()
                .eigenvectors
                .columns(0, prob.p())
                .into_owned(),
        )
        .unwrap()
    }

    #[test]
    fn forcing_terms() {
        assert_eq!(forcing_term(3, 0.7, ForcingPolicy::Fixed(1e-12)), 1e-12);
        assert!((forcing_term(0, 1e-4, ForcingPolicy::Adaptive) - 1e-2).abs() < 1e-17);
        assert_eq!(forcing_term(0, 1e-30, ForcingPolicy::Adaptive), 1e-14);
        assert_eq!(forcing_term(0, 4.0, ForcingPolicy::Adaptive), 0.5);
    }

    #[test]
    fn scalar_step_is_shared_by_both_methods() {
        // z = -x(1 - x^2)/(1 - 3x^2) at x = 2 gives -6/11
        let prob = diag21();
        let x = Iterate::new(DenseMatrix::from_column_slice(2, 1, &[2.0, 0.0])).unwrap();
        for cfg in [
            SolverConfig::dense(),
            SolverConfig {
                forcing: ForcingPolicy::Fixed(1e-14),
                ..SolverConfig::default()
            },
        ] {
            let (zp, _) = plain_newton_step(&prob, &x, 0, &cfg).unwrap();
            let (zg, _) = geometric_newton_step(&prob, &x, 0, &cfg).unwrap();
            assert!((zp.z[0] + 6.0 / 11.0).abs() < 1e-14 && zp.z[1].abs() < 1e-14);
            assert!((&zg.z - &zp.z).norm() < 1e-14);
            assert!((x.matrix()[0] + zp.z[0] - 16.0 / 11.0).abs() < 1e-14);
        }
    }

    #[test]
    fn plain_step_flags_singular_jacobian_at_zero() {
        let prob = random_problem(1);
        let xs = dominant(&prob);
        let probe = random_gaussian(6, 3, &mut RngStream::new(1, 1));
        let (_, stats) = dense_solve(&prob.plain_jacobian(xs.matrix()), &probe, true).unwrap();
        assert!(stats.rank_deficient);
        assert!(stats.condition.unwrap() > 1e12);
        assert!(dense_solve(&prob.plain_jacobian(xs.matrix()), &probe, false).is_none());
    }

    #[test]
    fn plain_step_residual_contract() {
        let prob = random_problem(2);
        let mut rng = RngStream::new(2, 1);
        let x = Iterate::new(random_gaussian(6, 3, &mut rng)).unwrap();
        let f = prob.oja_f(x.matrix());
        let cfg = SolverConfig {
            forcing: ForcingPolicy::Fixed(1e-10),
            ..SolverConfig::default()
        };
        let (z, _) = plain_newton_step(&prob, &x, 0, &cfg).unwrap();
        assert!((prob.oja_df(x.matrix(), &z.z) + &f).norm() <= 1e-10 * f.norm());
        let (z, _) = plain_newton_step(&prob, &x, 0, &SolverConfig::dense()).unwrap();
        assert!((prob.oja_df(x.matrix(), &z.z) + &f).norm() <= 1e-10 * f.norm());
    }

    #[test]
    fn geometric_step_is_horizontal_and_solves_equation() {
        let prob = random_problem(3);
        let mut rng = RngStream::new(3, 1);
        for _ in 0..5 {
            let x = Iterate::new(random_gaussian(6, 3, &mut rng)).unwrap();
            for cfg in [SolverConfig::dense(), SolverConfig::default()] {
                let (z, stats) = geometric_newton_step(&prob, &x, 0, &cfg).unwrap();
                assert!(z.horizontal);
                assert!(x.project_skew(&z.z).norm() <= 1e-12 * z.norm());
                let xi = prob.xi_lift(&x);
                let eta = forcing_term(0, xi.norm(), cfg.forcing);
                let lhs = prob.newton_operator(&x).apply(&z.z);
                let tol = match cfg.inner_solver {
                    InnerSolver::Dense => 1e-10,
                    InnerSolver::Krylov => eta * 1.0001,
                };
                assert!((lhs + &xi).norm() <= tol * xi.norm(), "{stats:?}");
            }
        }
    }

    #[test]
    fn dense_and_krylov_steps_agree() {
        let prob = random_problem(4);
        let mut rng = RngStream::new(4, 1);
        let tight = SolverConfig {
            forcing: ForcingPolicy::Fixed(1e-14),
            krylov_max_iters: Some(72),
            ..SolverConfig::default()
        };
        for _ in 0..5 {
            let x = Iterate::new(random_gaussian(6, 3, &mut rng)).unwrap();
            let (zd, _) = geometric_newton_step(&prob, &x, 0, &SolverConfig::dense()).unwrap();
            let (zk, _) = geometric_newton_step(&prob, &x, 0, &tight).unwrap();
            assert!((&zd.z - &zk.z).norm() <= 1e-10 * zd.norm());
        }
    }

    #[test]
    fn geometric_newton_converges_from_nearby_start() {
        let prob = random_problem(5);
        let xs = dominant(&prob);
        let e = random_gaussian(6, 3, &mut RngStream::new(5, 1));
        let x0 = Iterate::new(xs.matrix() + e * 1e-3).unwrap();
        let result = run_newton_recording(&prob, x0, Method::Geometric, &SolverConfig::default());
        assert_eq!(result.status, Status::Converged);
        assert!(result.iterations <= 10);
        assert!(result.final_residual(Method::Geometric) <= 1e-12);
        assert!(result.x.orthonormality_defect() <= 1e-10);
        assert!(class_distance(result.x.matrix(), xs.matrix()) <= 1e-10);
        assert_eq!(result.iterates.len(), result.iterations + 1);
        assert_eq!(result.trace.len(), result.iterations + 1);
    }

    #[test]
    fn geometric_newton_stops_immediately_at_zero() {
        let prob = random_problem(6);
        let q = random_orthogonal(3, &mut RngStream::new(6, 1));
        let xs = Iterate::new(dominant(&prob).matrix() * q).unwrap();
        let result = run_newton(&prob, xs, Method::Geometric, &SolverConfig::default());
        assert_eq!(result.status, Status::Converged);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn budget_is_respected() {
        let prob = random_problem(7);
        let x0 = Iterate::new(random_gaussian(6, 3, &mut RngStream::new(7, 1))).unwrap();
        let cfg = SolverConfig {
            max_outer_iters: 2,
            ..SolverConfig::default()
        };
        let result = run_newton(&prob, x0, Method::Geometric, &cfg);
        assert_eq!(result.status, Status::MaxIters);
        assert_eq!(result.iterations, 2);
        assert_eq!(result.trace.len(), 3);
    }
}
