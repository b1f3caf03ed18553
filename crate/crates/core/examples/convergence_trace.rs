//! Drives the solver one outer iteration at a time and writes the full
//! trace (inner and outer records) as JSON lines.
//!
//! cargo run --release --example convergence_trace -- [out.jsonl]

use std::fs::File;
use std::io::BufWriter;

use expdol::objective::cost_transformed;
use expdol::scenarios::{generate_synthetic, SyntheticSpec};
use expdol::solver::{ExpDolSolver, JsonLinesSink, SolverConfig};

fn main() -> expdol::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "trace.jsonl".into());
    let (problem, _) = generate_synthetic(&SyntheticSpec { m: 20, n: 100, seed: 1, ..Default::default() })?;
    let config = SolverConfig { inner_iters: 5, ..Default::default() };

    let file = File::create(&path).map_err(|e| expdol::Error::io(&path, e))?;
    let mut sink = JsonLinesSink::new(BufWriter::new(file));
    let mut solver = ExpDolSolver::new(&problem, config)?;
    let start = cost_transformed(&problem, &solver.state().hp, &config.prior, config.tau)?;
    println!("iter       cost        tv     change  residual");
    println!("{:4} {:11.4} {:9.4}", 0, start.total, start.tv_term);
    while !solver.is_done() {
        solver.step(&mut sink)?;
        let s = solver.state();
        let c = s.cost_trace.last().expect("one entry per step");
        println!(
            "{:4} {:11.4} {:9.4} {:10.3e} {:9.2e}",
            s.outer_iter,
            c.total,
            c.tv_term,
            solver.last_change(),
            s.diagnostics.primal_residual
        );
    }
    println!("converged: {}; trace in {path}", solver.converged());
    Ok(())
}
