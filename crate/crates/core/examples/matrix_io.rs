//! Writes a generated instance in the text matrix format, reads it back and
//! solves from the files alone.
//!
//! cargo run --release --example matrix_io -- [dir]

use std::path::PathBuf;

use expdol::matrix_io::{read_matrix, to_text, write_matrix};
use expdol::metrics::nse;
use expdol::model::ProblemInstance;
use expdol::scenarios::{generate_synthetic, SyntheticSpec};
use expdol::solver::{self, SolverConfig};

fn main() -> expdol::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let (problem, _) = generate_synthetic(&SyntheticSpec { m: 30, n: 80, l: 5, block_count: 2, block_length: 4, isolated_count: 2, seed: 9, ..Default::default() })?;
    write_matrix(dir.join("H.txt"), problem.h())?;
    write_matrix(dir.join("Y.txt"), problem.y())?;

    let h = read_matrix(dir.join("H.txt"))?;
    let y = read_matrix(dir.join("Y.txt"))?;
    assert_eq!(&h, problem.h());
    print!("{}", to_text(&y).lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n...");

    let loaded = ProblemInstance::new(h, y)?;
    let r = solver::run(&loaded, &SolverConfig::default())?;
    let truth = problem.ground_truth().expect("synthetic instances carry X");
    println!("nse from files: {:.3e}", nse(truth, &r.x_hat)?);
    Ok(())
}
