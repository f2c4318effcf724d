// Plain Newton near the dominant eigenbasis: the Jacobian is singular
// along the orbit, and the steps blow up in the vertical direction.

use oja_newton::experiments::{run_degeneracy_experiment, ExperimentSpec};

fn main() -> oja_newton::Result<()> {
    let spec = ExperimentSpec::degeneracy(0);
    let outcome = run_degeneracy_experiment(&spec)?;

    let t = &outcome.trials[0];
    println!("trial 0");
    for r in t.trace.rows.iter().take(12) {
        println!(
            "  {:2}  |F| {:.2e}  |K| {:.2e}  |XS| {:.2e}  |XOmega| {:.2e}",
            r.iter, r.res_f, r.step.perp, r.step.sym, r.step.skew
        );
    }

    let n = outcome.trials.len();
    let touched = outcome.trials.iter().filter(|t| t.reached(1e-12)).count();
    let ended = outcome
        .trials
        .iter()
        .filter(|t| t.trace.rows.last().is_some_and(|r| r.res_f <= 1e-12))
        .count();
    let dominant = outcome
        .trials
        .iter()
        .filter(|t| t.vertical_dominance().is_some_and(|d| d > 10.0))
        .count();
    println!("|F| <= 1e-12 at some iterate: {touched}/{n}");
    println!("|F| <= 1e-12 at iterate 50:   {ended}/{n}");
    println!("vertical step dominant at best iterate: {dominant}/{n}");
    Ok(())
}
