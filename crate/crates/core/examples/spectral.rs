// Jacobi eigensolver, the SPD guard and reproducible random streams.

use oja_newton::linalg::{
    random_orthogonal, random_spd_uniform, symmetric_eigen, DenseMatrix, RngStream, SpdMatrix,
};

fn main() -> oja_newton::Result<()> {
    let a = random_spd_uniform(5, &mut RngStream::new(1, 0))?;
    let s = a.spectral();
    println!("eigenvalues {:.6?}", s.eigenvalues.as_slice());
    println!(
        "reconstruction error {:.2e}",
        (s.reconstruct() - a.matrix()).norm()
    );

    let q = random_orthogonal(4, &mut RngStream::new(1, 1));
    println!(
        "|Q^TQ - I| = {:.2e}",
        (q.tr_mul(&q) - DenseMatrix::identity(4, 4)).norm()
    );

    let indefinite = DenseMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
    println!("indefinite: {:?}", SpdMatrix::new(indefinite).unwrap_err());
    let repeated = DenseMatrix::identity(3, 3);
    println!("repeated:   {:?}", SpdMatrix::new(repeated).unwrap_err());

    let m = DenseMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    println!(
        "eig of [[2,1],[1,2]] = {:?}",
        symmetric_eigen(&m)?.eigenvalues.as_slice()
    );

    // same (seed, stream) -> same draws, independent of anything else
    let (mut r1, mut r2) = (RngStream::new(9, 4), RngStream::new(9, 4));
    assert_eq!(r1.normal().to_bits(), r2.normal().to_bits());
    Ok(())
}
