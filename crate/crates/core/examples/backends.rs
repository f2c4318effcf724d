// The same geometric Newton step from the dense LU solve and from GMRES.

use oja_newton::experiments::random_start;
use oja_newton::field::OjaProblem;
use oja_newton::linalg::{random_spd_uniform, RngStream};
use oja_newton::newton::{geometric_newton_step, ForcingPolicy, InnerSolver, SolverConfig};

fn main() -> oja_newton::Result<()> {
    let dense = SolverConfig::dense();
    let krylov = SolverConfig {
        inner_solver: InnerSolver::Krylov,
        forcing: ForcingPolicy::Fixed(1e-14),
        krylov_max_iters: Some(200),
        ..SolverConfig::default()
    };
    for seed in 0..5 {
        let prob = OjaProblem::new(random_spd_uniform(6, &mut RngStream::new(seed, 0))?, 3)?;
        let x = random_start(6, 3, &mut RngStream::new(seed, 1));
        let (zd, sd) = geometric_newton_step(&prob, &x, 0, &dense).expect("dense step");
        let (zk, sk) = geometric_newton_step(&prob, &x, 0, &krylov).expect("krylov step");
        println!(
            "seed {seed}: cond {:.1e}  gmres iters {:3}  relative gap {:.2e}",
            sd.condition.unwrap_or(f64::NAN),
            sk.iterations,
            (&zd.z - &zk.z).norm() / zd.norm()
        );
    }
    Ok(())
}
