//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use oja_newton::cli::{cmd_experiment, ExperimentArgs, WhichArg};
use oja_newton::experiments::{
    all_labels, local_start, run_basin_experiment, run_degeneracy_experiment, trace_convergence,
    ExperimentSpec, SubspaceLabel, RESOLVABLE_FLOOR,
};
use oja_newton::field::{nondegeneracy_check, verify_zero, LinearOperator, OjaProblem};
use oja_newton::geometry::Iterate;
use oja_newton::linalg::{
    random_gaussian, random_orthogonal, random_spd_uniform, DenseMatrix, RngStream,
};
use oja_newton::newton::{geometric_newton_step, ForcingPolicy, InnerSolver, Method, SolverConfig};

type Check = fn() -> Verdict;

struct Verdict {
    pass: bool,
    detail: String,
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

fn within(elapsed: Duration, limit: Duration, checks: &mut Vec<String>) -> bool {
    let ok = elapsed < limit;
    if !ok {
        checks.push(format!("runtime {elapsed:.1?} over {limit:?}"));
    }
    ok
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut bump = |k: &'static str, v: f64| {
        let e = worst.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    let mut probes = 0;
    for (ni, &n) in [4usize, 6, 10].iter().enumerate() {
        for (pi, &p) in [1usize, 2, 3].iter().enumerate() {
            let count = if ni * 3 + pi < 2 { 23 } else { 22 };
            for t in 0..count {
                let mut rng = RngStream::new(1000 + (ni * 3 + pi) as u64, t);
                let x = Iterate::new(random_gaussian(n, p, &mut rng)).unwrap();
                let z = random_gaussian(n, p, &mut rng);
                let zn = z.norm();
                let (pp, ps, pa) = (x.project_perp(&z), x.project_sym(&z), x.project_skew(&z));
                bump("completeness", rel((&pp + &ps + &pa - &z).norm(), zn));
                bump("idempotence", rel((x.project_perp(&pp) - &pp).norm(), zn));
                bump("idempotence", rel((x.project_sym(&ps) - &ps).norm(), zn));
                bump("idempotence", rel((x.project_skew(&pa) - &pa).norm(), zn));
                for v in [
                    x.project_sym(&pp).norm(),
                    x.project_skew(&pp).norm(),
                    x.project_perp(&ps).norm(),
                    x.project_skew(&ps).norm(),
                    x.project_perp(&pa).norm(),
                    x.project_sym(&pa).norm(),
                ] {
                    bump("annihilation", rel(v, zn));
                }
                let q = random_orthogonal(p, &mut rng);
                let xq = Iterate::new(x.matrix() * &q).unwrap();
                let lhs = xq.project_horizontal(&(&z * &q));
                bump(
                    "equivariance",
                    rel((lhs - x.project_horizontal(&z) * q).norm(), zn),
                );
                probes += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass = probes == 200 && worst.values().all(|&v| v <= 1e-12);
    pass &= within(elapsed, Duration::from_secs(5), &mut notes);
    let parts: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    Verdict {
        pass,
        detail: format!(
            "{probes} probes, worst relative: {}; {elapsed:.2?} {}",
            parts.join(", "),
            notes.join("; ")
        ),
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let h = 1e-6;
    let (mut equi, mut df, mut jac) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..50u64 {
        let (n, p) = [(4, 1), (4, 2), (6, 2), (6, 3), (10, 3)][t as usize % 5];
        let prob = OjaProblem::new(
            random_spd_uniform(n, &mut RngStream::new(2000 + t, 0)).unwrap(),
            p,
        )
        .unwrap();
        let mut rng = RngStream::new(2000 + t, 1);
        let x = random_gaussian(n, p, &mut rng);
        let z = random_gaussian(n, p, &mut rng);

        let q = random_orthogonal(p, &mut rng);
        let fx = prob.oja_f(&x);
        equi = equi.max(rel((prob.oja_f(&(&x * &q)) - &fx * q).norm(), fx.norm()));

        let fd = (prob.oja_f(&(&x + &z * h)) - prob.oja_f(&(&x - &z * h))) / (2.0 * h);
        let exact = prob.oja_df(&x, &z);
        df = df.max(rel((fd - &exact).norm(), exact.norm()));

        let base = Iterate::new(x.clone()).unwrap();
        let zh = base.project_horizontal(&z);
        let xi = |m: DenseMatrix| prob.xi_lift(&Iterate::new(m).unwrap());
        let fd = base.project_horizontal(&((xi(&x + &zh * h) - xi(&x - &zh * h)) / (2.0 * h)));
        let exact = prob.newton_operator(&base).apply(&zh);
        jac = jac.max(rel((fd - &exact).norm(), exact.norm()));
    }
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass = equi <= 1e-12 && df <= 1e-7 && jac <= 1e-7;
    pass &= within(elapsed, Duration::from_secs(5), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "50 probes: F(XQ)=F(X)Q {equi:.1e}, DF vs FD {df:.1e}, J vs FD {jac:.1e}; {elapsed:.2?} {}",
            notes.join("; ")
        ),
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let prob = OjaProblem::new(
        random_spd_uniform(6, &mut RngStream::new(3000, 0)).unwrap(),
        3,
    )
    .unwrap();
    let s = prob.a().spectral();
    let (mut worst_f, mut worst_xi, mut least_doubled) = (0.0f64, 0.0f64, f64::INFINITY);
    let labels = all_labels(6, 3);
    for label in &labels {
        let basis = s.columns(&label.columns());
        let z = verify_zero(&prob, &Iterate::new(basis.clone()).unwrap(), 1e-12);
        worst_f = worst_f.max(z.residual_f);
        worst_xi = worst_xi.max(z.residual_xi);
        let d = verify_zero(&prob, &Iterate::new(basis * 2.0).unwrap(), 1e-12);
        least_doubled = least_doubled.min(d.residual_xi);
    }
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass =
        labels.len() == 20 && worst_f <= 1e-12 && worst_xi <= 1e-12 && least_doubled > 1e-3;
    pass &= within(elapsed, Duration::from_secs(5), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "{} bases: max |F| {worst_f:.1e}, max |xi| {worst_xi:.1e}; scaled by 2: min |xi| {least_doubled:.2e}; {elapsed:.2?} {}",
            labels.len(),
            notes.join("; ")
        ),
    }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let prob = OjaProblem::new(
        random_spd_uniform(6, &mut RngStream::new(4000, 0)).unwrap(),
        3,
    )
    .unwrap();
    let s = prob.a().spectral();
    let a_norm = prob.a().matrix().norm();
    let mut kernels = Vec::new();
    let (mut least_sigma, mut worst_ss) = (f64::INFINITY, 0.0f64);
    for label in all_labels(6, 3) {
        let x = Iterate::new(s.columns(&label.columns())).unwrap();
        let r = nondegeneracy_check(&prob, &x).unwrap();
        kernels.push(r.full_kernel_dim);
        least_sigma = least_sigma.min(r.sigma_min_horizontal);
        // the (s,s) block is S -> -(S B + B S); its spectrum is {-(beta_i + beta_j)}
        let gap = r
            .ss_eigenvalues
            .iter()
            .zip(&r.sylvester_eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let complete = r.ss_eigenvalues.len() == 6 && r.sylvester_eigenvalues.len() == 6;
        worst_ss = worst_ss.max(if complete { gap } else { f64::INFINITY });
    }
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass =
        kernels.iter().all(|&k| k == 3) && least_sigma > 1e-8 * a_norm && worst_ss <= 1e-10;
    pass &= within(elapsed, Duration::from_secs(30), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "20 zeros: kernel dims {:?}, min sigma_min(H) {least_sigma:.3e} (bound {:.1e}), ss-block vs -(beta_i+beta_j) {worst_ss:.1e}; {elapsed:.2?} {}",
            kernels.iter().copied().collect::<std::collections::BTreeSet<_>>(),
            1e-8 * a_norm,
            notes.join("; ")
        ),
    }
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let outcome = run_degeneracy_experiment(&ExperimentSpec::degeneracy(0)).unwrap();
    let n = outcome.trials.len();
    let never = outcome.trials.iter().filter(|t| !t.reached(1e-12)).count();
    let final_above = outcome
        .trials
        .iter()
        .filter(|t| t.trace.rows.last().is_some_and(|r| r.res_f > 1e-12))
        .count();
    let dominated = outcome
        .trials
        .iter()
        .filter(|t| t.vertical_dominance().is_some_and(|d| d > 10.0))
        .count();
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass = never * 5 >= n * 4 && dominated == n;
    pass &= within(elapsed, Duration::from_secs(120), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "{never}/{n} trials never reach |F| <= 1e-12 in 50 iterations (need >= 80%); \
             {final_above}/{n} above 1e-12 at iteration 50; vertical dominance > 10 in {dominated}/{n}; {elapsed:.2?} {}",
            notes.join("; ")
        ),
    }
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let cfg = SolverConfig::dense();
    let labels = all_labels(6, 3);
    let (mut fast, mut ordered) = (0, 0);
    let mut worst_order = f64::INFINITY;
    let mut worst_iters = 0;
    for seed in 0..20u64 {
        let prob = OjaProblem::new(
            random_spd_uniform(6, &mut RngStream::new(6000 + seed, 0)).unwrap(),
            3,
        )
        .unwrap();
        let label = &labels[seed as usize % labels.len()];
        let x_star = Iterate::new(prob.a().spectral().columns(&label.columns())).unwrap();
        let x0 = local_start(&x_star, 1e-2, &mut RngStream::new(6000 + seed, 1));
        let run = trace_convergence(&prob, x0, Method::Geometric, &cfg, 1e-10);
        let hit = run.residuals.iter().position(|&r| r <= 1e-12);
        if hit.is_some_and(|k| k <= 8) {
            fast += 1;
        }
        worst_iters = worst_iters.max(hit.unwrap_or(usize::MAX));
        let order = run.order.unwrap_or(f64::NAN);
        if order >= 1.8 {
            ordered += 1;
        }
        worst_order = worst_order.min(order);
    }
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let mut pass = fast == 20 && ordered == 20;
    pass &= within(elapsed, Duration::from_secs(30), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "20 seeds: residual <= 1e-12 within 8 iterations in {fast}/20 (slowest {worst_iters}), \
             order >= 1.8 in {ordered}/20 (min {worst_order:.3}, floor {RESOLVABLE_FLOOR:.0e}); {elapsed:.2?} {}",
            notes.join("; ")
        ),
    }
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let spec = ExperimentSpec::basins(0);
    let outcome = run_basin_experiment(&spec).unwrap();
    let census = &outcome.census;
    let empty: Vec<String> = census
        .counts
        .iter()
        .filter(|(_, &c)| c == 0)
        .map(|(l, _)| l.to_string())
        .collect();
    let dominant = SubspaceLabel::dominant(3);
    let mode = census.strict_mode().cloned();
    let worst_orth = outcome
        .trials
        .iter()
        .filter(|t| t.label.is_some())
        .map(|t| t.zero.orthonormality_defect)
        .fold(0.0, f64::max);
    let runner_up = census
        .counts
        .iter()
        .filter(|(l, _)| **l != dominant)
        .max_by_key(|(_, &c)| c)
        .map(|(l, c)| format!("{l}={c}"))
        .unwrap_or_default();
    let elapsed = start.elapsed();
    let mut notes = Vec::new();
    let all_reached = empty.is_empty();
    let dominant_wins = mode.as_ref() == Some(&dominant);
    let few_unclassified = census.unclassified * 100 < census.total;
    let orth_ok = worst_orth <= 1e-10;
    let mut pass =
        census.total == 10_000 && all_reached && dominant_wins && few_unclassified && orth_ok;
    pass &= within(elapsed, Duration::from_secs(600), &mut notes);
    Verdict {
        pass,
        detail: format!(
            "{} trials: all 20 labels reached {all_reached} (empty {empty:?}); 123 strictly largest {dominant_wins} \
             (123={}, largest other {runner_up}); unclassified {} ({}); max |X^TX-I| {worst_orth:.1e}; {elapsed:.2?} {}",
            census.total,
            census.count(&dominant),
            census.unclassified,
            if few_unclassified { "< 1%" } else { ">= 1%" },
            notes.join("; ")
        ),
    }
}

fn read_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let dense = SolverConfig::dense();
    let krylov = SolverConfig {
        inner_solver: InnerSolver::Krylov,
        forcing: ForcingPolicy::Fixed(1e-14),
        krylov_max_iters: Some(200),
        ..SolverConfig::default()
    };
    let mut worst = 0.0f64;
    let mut agreed = 0;
    for seed in 0..20u64 {
        let prob = OjaProblem::new(
            random_spd_uniform(6, &mut RngStream::new(8000 + seed, 0)).unwrap(),
            3,
        )
        .unwrap();
        let x = Iterate::new(random_gaussian(6, 3, &mut RngStream::new(8000 + seed, 1))).unwrap();
        let steps = (
            geometric_newton_step(&prob, &x, 0, &dense),
            geometric_newton_step(&prob, &x, 0, &krylov),
        );
        if let (Ok((zd, _)), Ok((zk, _))) = steps {
            let gap = rel((&zd.z - &zk.z).norm(), zd.norm());
            worst = worst.max(gap);
            if gap <= 1e-10 {
                agreed += 1;
            }
        }
    }

    let tmp = tempfile::tempdir().unwrap();
    let mut identical = Vec::new();
    for (which, name) in [
        (WhichArg::Degeneracy, "degeneracy"),
        (WhichArg::Basins, "basins"),
        (WhichArg::Convergence, "convergence"),
    ] {
        let mut outputs = Vec::new();
        for threads in [1usize, 4] {
            let dir = tmp.path().join(format!("{name}-{threads}"));
            cmd_experiment(&ExperimentArgs {
                which,
                trials: None,
                seed: 0,
                threads: Some(threads),
                out_dir: Some(dir.clone()),
            })
            .unwrap();
            outputs.push(read_csvs(&dir));
        }
        let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
        identical.push(format!(
            "{name} {} files {}",
            outputs[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    let elapsed = start.elapsed();
    let pass = agreed == 20 && identical.iter().all(|s| s.ends_with("identical"));
    Verdict {
        pass,
        detail: format!(
            "dense vs Krylov steps agree <= 1e-10 on {agreed}/20 (worst {worst:.1e}); 1 vs 4 threads: {}; {elapsed:.2?}",
            identical.join(", ")
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("1 projector algebra", criterion_1),
        ("2 field consistency", criterion_2),
        ("3 zero characterization", criterion_3),
        ("4 nondegeneracy", criterion_4),
        ("5 plain Newton degeneracy", criterion_5),
        ("6 local quadratic convergence", criterion_6),
        ("7 basin census", criterion_7),
        ("8 backend equivalence", criterion_8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} | {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {}/8 criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
