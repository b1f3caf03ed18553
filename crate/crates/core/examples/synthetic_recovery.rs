//! Recover block-sparse signals at a few SNRs and compare against EM-SBL.
//!
//! cargo run --release --example synthetic_recovery -- [trials]

use expdol::metrics::{f1_support, nse, quartiles, DEFAULT_DELTA};
use expdol::scenarios::{generate_synthetic, SyntheticSpec};
use expdol::solver::{self, SolverConfig};

fn main() -> expdol::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let config = SolverConfig::default();
    for snr_db in [15.0, 25.0] {
        println!("SNR {snr_db} dB");
        let mut table: [(Vec<f64>, Vec<f64>, Vec<f64>); 2] = Default::default();
        for seed in 0..trials {
            let spec = SyntheticSpec { snr_db, seed, ..Default::default() };
            let (problem, support) = generate_synthetic(&spec)?;
            let truth = problem.ground_truth().expect("synthetic instances carry X");
            let lambda = problem.true_noise_variance().unwrap_or(0.0);

            let ours = solver::run(&problem, &config)?;
            let base = solver::baseline_sbl(&problem, &config)?;
            for (k, (name, r)) in [("exp-dol", &ours), ("em-sbl", &base)].into_iter().enumerate() {
                table[k].0.push(nse(truth, &r.x_hat)?);
                table[k].1.push(f1_support(&support, &r.x_hat, DEFAULT_DELTA));
                table[k].2.push((10.0 * (r.lambda_hat / lambda).log10()).abs());
                println!(
                    "  seed {seed} {name:8} nse {:.4e} f1 {:.3} lambda_db {:+.2} iters {:3} {:.2}s",
                    nse(truth, &r.x_hat)?,
                    f1_support(&support, &r.x_hat, DEFAULT_DELTA),
                    10.0 * (r.lambda_hat / lambda).log10(),
                    r.outer_iters_used,
                    r.wall_time.as_secs_f64(),
                );
            }
        }
        for (name, (e, f, l)) in ["exp-dol", "em-sbl"].iter().zip(&table) {
            let (q25, q50, q75) = quartiles(e)?;
            println!(
                "  {name:8} nse q25/q50/q75 {q25:.3e} {q50:.3e} {q75:.3e}  mean f1 {:.3}  median |lambda err| {:.2} dB",
                f.iter().sum::<f64>() / f.len() as f64,
                quartiles(l)?.1,
            );
        }
    }
    Ok(())
}
