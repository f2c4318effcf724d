// Drives the `solve` subcommand on a matrix file written here, then
// reads back the manifest.

use oja_newton::cli::{cmd_solve, InnerArg, MethodArg, SolveArgs};
use oja_newton::io::{matrix_text, RunManifest};
use oja_newton::linalg::{random_spd_uniform, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("oja-newton-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let a = random_spd_uniform(5, &mut RngStream::new(21, 0))?;
    let matrix_file = dir.join("a.txt");
    std::fs::write(&matrix_file, matrix_text(a.matrix()))?;

    let args = SolveArgs {
        n: None,
        p: 2,
        seed: 21,
        method: MethodArg::Geometric,
        max_iter: 50,
        tol: 1e-14,
        inner: InnerArg::Dense,
        matrix_file: Some(matrix_file),
        x0_file: None,
        out: dir.join("run"),
    };
    let summary = cmd_solve(&args)?;
    println!(
        "{} in {} steps, limit {:?}",
        summary.status.as_str(),
        summary.iterations,
        summary.label
    );

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("run/manifest.json"))?)?;
    println!("manifest lists {:?}", manifest.outputs);
    print!(
        "{}",
        std::fs::read_to_string(dir.join("run/trace.csv"))?
            .lines()
            .take(3)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
