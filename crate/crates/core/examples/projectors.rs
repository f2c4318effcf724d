// Splits a tangent matrix into its perpendicular, symmetric and vertical
// parts at a random base point, and checks the pieces add back up.

use oja_newton::geometry::Iterate;
use oja_newton::linalg::{random_gaussian, random_orthogonal, RngStream};

fn main() {
    let mut rng = RngStream::new(11, 0);
    let x = Iterate::new(random_gaussian(6, 3, &mut rng)).expect("gaussian start has full rank");
    let z = random_gaussian(6, 3, &mut rng);

    let (zp, zs, za) = (x.project_perp(&z), x.project_sym(&z), x.project_skew(&z));
    let c = x.components(&z);
    println!(
        "|P^p Z| = {:.6}  |P^s Z| = {:.6}  |P^a Z| = {:.6}",
        c.perp, c.sym, c.skew
    );

    let rebuilt = &zp + &zs + &za;
    println!(
        "completeness defect  {:.2e}",
        (rebuilt - &z).norm() / z.norm()
    );

    let h = x.project_horizontal(&z);
    println!("horizontal part is horizontal: {}", x.is_horizontal(&h));
    println!("metric(Z, P^a Z) = {:.2e}", x.metric(&z, &za));

    // moving along the orbit X -> XQ rotates the projection with it
    let q = random_orthogonal(3, &mut rng);
    let xq = Iterate::new(x.matrix() * &q).unwrap();
    let lhs = xq.project_horizontal(&(&z * &q));
    println!(
        "equivariance defect  {:.2e}",
        (lhs - h * q).norm() / z.norm()
    );
}
