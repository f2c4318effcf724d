// Geometric Newton from a Gaussian start, printing the trace.

use oja_newton::experiments::{classify, random_start};
use oja_newton::field::OjaProblem;
use oja_newton::linalg::{random_spd_uniform, RngStream};
use oja_newton::newton::{run_newton, Method, SolverConfig};

fn main() -> oja_newton::Result<()> {
    let prob = OjaProblem::new(random_spd_uniform(6, &mut RngStream::new(42, 0))?, 3)?;
    let x0 = random_start(6, 3, &mut RngStream::new(42, 1));
    let result = run_newton(&prob, x0, Method::Geometric, &SolverConfig::default());

    println!(" k   |xi|        |X^TX-I|    |K|         |XS|        |XOmega|   inner");
    for r in &result.trace.rows {
        println!(
            "{:2}  {:.3e}  {:.3e}  {:.3e}  {:.3e}  {:.1e}  {}",
            r.iter, r.res_xi, r.orth_defect, r.step.perp, r.step.sym, r.step.skew, r.inner_iters
        );
    }
    let label = classify(result.x.matrix(), prob.a().spectral(), 1e-10);
    println!(
        "{} after {} steps, limit spans {:?}",
        result.status.as_str(),
        result.iterations,
        label.map(|l| l.to_string())
    );
    Ok(())
}
