//! Reproducible experiment farm: plain-Newton degeneracy, basins of
//! attraction of the geometric method, and its local convergence order.
//!
//! Every experiment draws its matrix from stream `MATRIX_STREAM` of the
//! seed and trial `i` from stream `i + 1`, so results do not depend on
//! how trials are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{verify_zero, OjaProblem, ZeroReport};
use crate::geometry::{class_distance, Iterate};
use crate::linalg::{
    random_gaussian, random_spd_uniform, DenseMatrix, RngStream, SpectralDecomposition,
};
use crate::newton::{run_newton, run_newton_recording, Method, NewtonTrace, SolverConfig, Status};

pub const MATRIX_STREAM: u64 = 0;

pub fn trial_stream(trial: usize) -> u64 {
    trial as u64 + 1
}

/// Sorted 1-based indices of the eigenvectors spanning an invariant
/// subspace, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubspaceLabel(Vec<usize>);

impl SubspaceLabel {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Zero-based column indices into the eigenvector matrix.
    pub fn columns(&self) -> Vec<usize> {
        self.0.iter().map(|i| i - 1).collect()
    }

    /// The dominant subspace `{1, ..., p}`.
    pub fn dominant(p: usize) -> Self {
        Self((1..=p).collect())
    }
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compact = self.0.iter().all(|&i| i < 10);
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        if compact {
            write!(f, "{}", parts.concat())
        } else {
            write!(f, "{}", parts.join("-"))
        }
    }
}

/// All `C(n, p)` labels in lexicographic order.
pub fn all_labels(n: usize, p: usize) -> Vec<SubspaceLabel> {
    fn rec(
        start: usize,
        n: usize,
        left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<SubspaceLabel>,
    ) {
        if left == 0 {
            out.push(SubspaceLabel(cur.clone()));
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, p, &mut Vec::with_capacity(p), &mut out);
    out
}

/// Labels `X` by the columns of `X^T W` whose norms exceed `threshold`.
///
/// Returns `None` unless exactly `p` columns are above the threshold and
/// the remaining `n - p` are below it.
pub fn classify(
    x: &DenseMatrix,
    spectral: &SpectralDecomposition,
    threshold: f64,
) -> Option<SubspaceLabel> {
    let w = &spectral.eigenvectors;
    assert_eq!(
        x.nrows(),
        w.nrows(),
        "iterate and eigenvectors disagree on n"
    );
    let xtw = x.tr_mul(w);
    let mut above = Vec::new();
    for (j, col) in xtw.column_iter().enumerate() {
        let norm = col.norm();
        if norm > threshold {
            above.push(j + 1);
        } else if !(norm < threshold) {
            return None;
        }
    }
    (above.len() == x.ncols()).then_some(SubspaceLabel(above))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Degeneracy,
    Basins,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub which: Which,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub trials: usize,
    pub max_iters: usize,
    pub classify_threshold: f64,
    /// Scale of the Gaussian perturbation added to the zero in the
    /// degeneracy experiment.
    pub perturbation_scale: f64,
    pub method: Method,
    pub solver: SolverConfig,
    /// Worker threads; `None` lets rayon decide. Never affects results.
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    /// Plain Newton from 100 starts `X_* + 1e-6 E`, 50 iterations each,
    /// with LU inner solves and no residual stop.
    pub fn degeneracy(seed: u64) -> Self {
        Self {
            which: Which::Degeneracy,
            n: 6,
            p: 3,
            seed,
            trials: 100,
            max_iters: 50,
            classify_threshold: 1e-10,
            perturbation_scale: 1e-6,
            method: Method::Plain,
            solver: SolverConfig {
                max_outer_iters: 50,
                residual_tol: 0.0,
                ..SolverConfig::dense()
            },
            threads: None,
        }
    }

    /// Geometric Newton from `10^4` Gaussian starts.
    pub fn basins(seed: u64) -> Self {
        Self {
            which: Which::Basins,
            trials: 10_000,
            method: Method::Geometric,
            solver: SolverConfig::default(),
            ..Self::degeneracy(seed)
        }
    }

    /// Geometric Newton from Gaussian starts, traced to the limit. Inner
    /// solves are exact so the trace shows the outer convergence order.
    pub fn convergence(seed: u64) -> Self {
        Self {
            which: Which::Convergence,
            trials: 20,
            method: Method::Geometric,
            solver: SolverConfig::dense(),
            ..Self::degeneracy(seed)
        }
    }

    pub fn for_which(which: Which, seed: u64) -> Self {
        match which {
            Which::Degeneracy => Self::degeneracy(seed),
            Which::Basins => Self::basins(seed),
            Which::Convergence => Self::convergence(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 || self.p >= self.n {
            return Err(Error::InvalidProblem(format!(
                "need 0 < p < n, got n={}, p={}",
                self.n, self.p
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidProblem("trials must be positive".into()));
        }
        if !(self.classify_threshold > 0.0) {
            return Err(Error::InvalidProblem(
                "classification threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_outer_iters: self.max_iters,
            ..self.solver
        }
    }

    /// The single matrix shared by all trials.
    pub fn problem(&self) -> Result<OjaProblem> {
        let a = random_spd_uniform(self.n, &mut RngStream::new(self.seed, MATRIX_STREAM))?;
        OjaProblem::new(a, self.p)
    }

    fn farm<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
        let run = || (0..self.trials).into_par_iter().map(&f).collect::<Vec<T>>();
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::InvalidProblem(format!("thread pool: {e}")))?;
                Ok(pool.install(run))
            }
            None => Ok(run()),
        }
    }
}

/// Gaussian `n x p` start that passes the rank guard; redraws from the same
/// stream otherwise.
pub fn random_start(n: usize, p: usize, rng: &mut RngStream) -> Iterate {
    loop {
        if let Ok(x) = Iterate::new(random_gaussian(n, p, rng)) {
            return x;
        }
    }
}

/// `X_* + delta * D / ||D||` with `D` the horizontal part of a Gaussian
/// matrix. For orthonormal `X_*` and small `delta` the class distance of
/// the start to `X_*` is exactly `delta`.
pub fn local_start(x_star: &Iterate, delta: f64, rng: &mut RngStream) -> Iterate {
    loop {
        let d = x_star.project_horizontal(&random_gaussian(x_star.n(), x_star.p(), rng));
        let norm = d.norm();
        if norm == 0.0 {
            continue;
        }
        if let Ok(x) = Iterate::new(x_star.matrix() + d * (delta / norm)) {
            return x;
        }
    }
}

#[derive(Debug, Clone)]
pub struct DegeneracyTrial {
    pub trace: NewtonTrace,
    pub status: Status,
    /// Smallest `||F(X_k)||` over the run.
    pub min_residual: f64,
    /// Step index with the smallest residual among iterates that took a step.
    pub min_residual_step: Option<usize>,
}

impl DegeneracyTrial {
    pub fn reached(&self, tol: f64) -> bool {
        self.min_residual <= tol
    }

    /// `||P^a(Z)|| / max(||P^p(Z)||, ||P^s(Z)||)` at the minimum-residual step.
    pub fn vertical_dominance(&self) -> Option<f64> {
        let row = &self.trace.rows[self.min_residual_step?];
        Some(row.step.skew / row.step.perp.max(row.step.sym))
    }
}

#[derive(Debug, Clone)]
pub struct DegeneracyOutcome {
    pub problem: OjaProblem,
    pub x_star: DenseMatrix,
    pub trials: Vec<DegeneracyTrial>,
}

/// Plain Newton from perturbations of the dominant orthonormal eigenbasis.
pub fn run_degeneracy_experiment(spec: &ExperimentSpec) -> Result<DegeneracyOutcome> {
    spec.validate()?;
    let problem = spec.problem()?;
    let spectral = problem.a().spectral();
    let x_star = spectral.columns(&SubspaceLabel::dominant(spec.p).columns());
    let cfg = spec.solver_config();
    let trials = spec.farm(|i| {
        let mut rng = RngStream::new(spec.seed, trial_stream(i));
        let e = random_gaussian(spec.n, spec.p, &mut rng);
        let x0 = Iterate::new(&x_star + e * spec.perturbation_scale)
            .expect("perturbed orthonormal basis has full rank");
        let result = run_newton(&problem, x0, spec.method, &cfg);
        let residuals = result.trace.residuals(Method::Plain);
        let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        let stepped = result.iterations;
        let min_residual_step = (0..stepped).min_by(|&a, &b| residuals[a].total_cmp(&residuals[b]));
        DegeneracyTrial {
            trace: result.trace,
            status: result.status,
            min_residual,
            min_residual_step,
        }
    })?;
    Ok(DegeneracyOutcome {
        problem,
        x_star,
        trials,
    })
}

#[derive(Debug, Clone)]
pub struct BasinTrial {
    pub label: Option<SubspaceLabel>,
    pub status: Status,
    pub iterations: usize,
    pub zero: ZeroReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinCensus {
    /// Every `C(n, p)` label, including those never reached.
    pub counts: BTreeMap<SubspaceLabel, usize>,
    pub unclassified: usize,
    pub total: usize,
}

impl BasinCensus {
    pub fn new(n: usize, p: usize) -> Self {
        Self {
            counts: all_labels(n, p).into_iter().map(|l| (l, 0)).collect(),
            unclassified: 0,
            total: 0,
        }
    }

    pub fn record(&mut self, label: Option<&SubspaceLabel>) {
        self.total += 1;
        match label.and_then(|l| self.counts.get_mut(l)) {
            Some(c) => *c += 1,
            None => self.unclassified += 1,
        }
    }

    pub fn count(&self, label: &SubspaceLabel) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Label with the largest count, if it is strictly largest.
    pub fn strict_mode(&self) -> Option<&SubspaceLabel> {
        let mut best: Option<(&SubspaceLabel, usize)> = None;
        let mut tie = false;
        for (l, &c) in &self.counts {
            match best {
                Some((_, b)) if c == b => tie = true,
                Some((_, b)) if c < b => {}
                _ => {
                    best = Some((l, c));
                    tie = false;
                }
            }
        }
        if tie {
            None
        } else {
            best.map(|(l, _)| l)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasinOutcome {
    pub problem: OjaProblem,
    pub census: BasinCensus,
    pub trials: Vec<BasinTrial>,
}

/// Geometric Newton from Gaussian starts; each limit is classified by
/// the eigenspace it spans.
pub fn run_basin_experiment(spec: &ExperimentSpec) -> Result<BasinOutcome> {
    spec.validate()?;
    let problem = spec.problem()?;
    let spectral = problem.a().spectral();
    let cfg = spec.solver_config();
    let a_norm = problem.a().matrix().norm();
    let trials = spec.farm(|i| {
        let mut rng = RngStream::new(spec.seed, trial_stream(i));
        let x0 = random_start(spec.n, spec.p, &mut rng);
        let result = run_newton(&problem, x0, spec.method, &cfg);
        let label = classify(result.x.matrix(), spectral, spec.classify_threshold);
        BasinTrial {
            label,
            status: result.status,
            iterations: result.iterations,
            zero: verify_zero(&problem, &result.x, 1e-8 * a_norm),
        }
    })?;
    let mut census = BasinCensus::new(spec.n, spec.p);
    for t in &trials {
        census.record(t.label.as_ref());
    }
    Ok(BasinOutcome {
        problem,
        census,
        trials,
    })
}

/// Class distances below this are treated as rounding noise when fitting
/// convergence orders.
pub const RESOLVABLE_FLOOR: f64 = 1e-13;

/// Fits `log e_{k+1} = q log e_k + c` by least squares over the last
/// `window` consecutive pairs with both errors above `floor`.
///
/// Needs at least two such pairs.
pub fn fit_convergence_order(errors: &[f64], floor: f64, window: usize) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = errors
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    let tail = &pairs[pairs.len().saturating_sub(window)..];
    if tail.len() < 2 {
        return None;
    }
    let m = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / m;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub status: Status,
    /// `||xi(X_k)||_F`.
    pub residuals: Vec<f64>,
    /// Class distance from `X_k` to the final iterate's class.
    pub errors: Vec<f64>,
    pub order: Option<f64>,
    pub label: Option<SubspaceLabel>,
    pub final_orth_defect: f64,
}

/// Traces one run of `method` from `x0` and fits its convergence order.
pub fn trace_convergence(
    problem: &OjaProblem,
    x0: Iterate,
    method: Method,
    cfg: &SolverConfig,
    classify_threshold: f64,
) -> ConvergenceRun {
    let result = run_newton_recording(problem, x0, method, cfg);
    let limit = result.x.matrix();
    let errors: Vec<f64> = result
        .iterates
        .iter()
        .map(|x| class_distance(x, limit))
        .collect();
    ConvergenceRun {
        status: result.status,
        residuals: result.trace.residuals(method),
        order: fit_convergence_order(&errors, RESOLVABLE_FLOOR, 3),
        label: classify(limit, problem.a().spectral(), classify_threshold),
        final_orth_defect: result.x.orthonormality_defect(),
        errors,
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceOutcome {
    pub problem: OjaProblem,
    pub runs: Vec<ConvergenceRun>,
}

/// Geometric Newton from Gaussian starts with per-iteration residuals and
/// distances to the limit class.
pub fn run_convergence_experiment(spec: &ExperimentSpec) -> Result<ConvergenceOutcome> {
    spec.validate()?;
    let problem = spec.problem()?;
    let cfg = spec.solver_config();
    let runs = spec.farm(|i| {
        let mut rng = RngStream::new(spec.seed, trial_stream(i));
        let x0 = random_start(spec.n, spec.p, &mut rng);
        trace_convergence(&problem, x0, spec.method, &cfg, spec.classify_threshold)
    })?;
    Ok(ConvergenceOutcome { problem, runs })
}
