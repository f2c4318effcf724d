// Oja's field and its derivatives, checked against central differences.

use oja_newton::field::{LinearOperator, OjaProblem};
use oja_newton::geometry::Iterate;
use oja_newton::linalg::{
    random_gaussian, random_orthogonal, random_spd_uniform, DenseMatrix, RngStream,
};

fn main() -> oja_newton::Result<()> {
    let prob = OjaProblem::new(random_spd_uniform(6, &mut RngStream::new(3, 0))?, 2)?;
    let mut rng = RngStream::new(3, 1);
    let x = random_gaussian(6, 2, &mut rng);
    let z = random_gaussian(6, 2, &mut rng);
    let h = 1e-6;

    let fd = (prob.oja_f(&(&x + &z * h)) - prob.oja_f(&(&x - &z * h))) / (2.0 * h);
    let exact = prob.oja_df(&x, &z);
    println!(
        "DF vs central difference: {:.2e}",
        (&fd - &exact).norm() / exact.norm()
    );

    // the field commutes with right multiplication by O_p
    let q = random_orthogonal(2, &mut rng);
    let lhs = prob.oja_f(&(&x * &q));
    println!("F(XQ) - F(X)Q: {:.2e}", (lhs - prob.oja_f(&x) * q).norm());

    // Newton operator against a difference of the horizontal lift
    let xi = |m: &DenseMatrix| prob.xi_lift(&Iterate::new(m.clone()).unwrap());
    let base = Iterate::new(x.clone())?;
    let zh = base.project_horizontal(&z);
    let fd = base.project_horizontal(&((xi(&(&x + &zh * h)) - xi(&(&x - &zh * h))) / (2.0 * h)));
    let exact = prob.newton_operator(&base).apply(&zh);
    println!(
        "J vs central difference:  {:.2e}",
        (&fd - &exact).norm() / exact.norm()
    );
    Ok(())
}
