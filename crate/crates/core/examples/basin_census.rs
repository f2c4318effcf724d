// Census of which invariant subspace geometric Newton reaches from
// Gaussian starts.

use oja_newton::experiments::{run_basin_experiment, ExperimentSpec, SubspaceLabel};

fn main() -> oja_newton::Result<()> {
    let mut spec = ExperimentSpec::basins(0);
    spec.trials = 2000;
    let outcome = run_basin_experiment(&spec)?;
    let census = &outcome.census;

    for (label, count) in &census.counts {
        println!(
            "{label}  {count:5}  {}",
            "#".repeat(count * 60 / census.total)
        );
    }
    println!("unclassified {}", census.unclassified);
    println!(
        "strict mode {:?}",
        census.strict_mode().map(SubspaceLabel::to_string)
    );
    let worst = outcome
        .trials
        .iter()
        .filter(|t| t.label.is_some())
        .map(|t| t.zero.orthonormality_defect)
        .fold(0.0, f64::max);
    println!("worst |X^TX - I| among classified limits {worst:.2e}");
    Ok(())
}
