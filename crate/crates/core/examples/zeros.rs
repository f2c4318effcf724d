// Every orthonormal eigenbasis of a 6x6 SPD matrix is a zero of the
// field and of its lift. Twice such a basis is not.

use oja_newton::experiments::all_labels;
use oja_newton::field::{nondegeneracy_check, verify_zero, OjaProblem};
use oja_newton::geometry::Iterate;
use oja_newton::linalg::{random_spd_uniform, RngStream};

fn main() -> oja_newton::Result<()> {
    let prob = OjaProblem::new(random_spd_uniform(6, &mut RngStream::new(5, 0))?, 3)?;
    let spectral = prob.a().spectral();
    println!("eigenvalues {:.4?}", spectral.eigenvalues.as_slice());
    println!("label   |F|       |xi|      |xi(2X)|  kernel  sigma_min(H)");
    for label in all_labels(6, 3) {
        let basis = spectral.columns(&label.columns());
        let x = Iterate::new(basis.clone())?;
        let z = verify_zero(&prob, &x, 1e-12);
        let doubled = verify_zero(&prob, &Iterate::new(basis * 2.0)?, 1e-12);
        let nd = nondegeneracy_check(&prob, &x)?;
        println!(
            "{label}   {:.1e}  {:.1e}  {:.2e}  {}       {:.3e}",
            z.residual_f,
            z.residual_xi,
            doubled.residual_xi,
            nd.full_kernel_dim,
            nd.sigma_min_horizontal
        );
    }
    Ok(())
}
