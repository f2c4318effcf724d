// Local quadratic convergence: start at class distance 1e-2 from the
// dominant eigenbasis and fit the order of the error sequence.

use oja_newton::experiments::{local_start, trace_convergence, SubspaceLabel};
use oja_newton::field::OjaProblem;
use oja_newton::geometry::Iterate;
use oja_newton::linalg::{random_spd_uniform, RngStream};
use oja_newton::newton::{Method, SolverConfig};

fn main() -> oja_newton::Result<()> {
    let prob = OjaProblem::new(random_spd_uniform(6, &mut RngStream::new(8, 0))?, 3)?;
    let x_star = Iterate::new(
        prob.a()
            .spectral()
            .columns(&SubspaceLabel::dominant(3).columns()),
    )?;
    let cfg = SolverConfig::dense();

    for trial in 1..=5 {
        let x0 = local_start(&x_star, 1e-2, &mut RngStream::new(8, trial));
        let run = trace_convergence(&prob, x0, Method::Geometric, &cfg, 1e-10);
        let errors: Vec<String> = run.errors.iter().map(|e| format!("{e:.1e}")).collect();
        println!(
            "{}  order {:.3}  errors {}",
            run.status.as_str(),
            run.order.unwrap_or(f64::NAN),
            errors.join(" ")
        );
    }
    Ok(())
}
