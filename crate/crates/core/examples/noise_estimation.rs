//! Estimated against pinned noise variance on one synthetic instance per SNR.
//!
//! cargo run --release --example noise_estimation

use expdol::metrics::{f1_support, nse, DEFAULT_DELTA};
use expdol::scenarios::{generate_synthetic, SyntheticSpec};
use expdol::solver::{self, NoiseMode, SolverConfig};

fn main() -> expdol::Result<()> {
    println!("snr  mode       lambda_true  lambda_hat   err_db   nse        f1");
    for snr_db in [10.0, 20.0, 30.0] {
        let (problem, support) = generate_synthetic(&SyntheticSpec { snr_db, seed: 4, ..Default::default() })?;
        let truth = problem.ground_truth().expect("synthetic instances carry X");
        let lambda = problem.true_noise_variance().expect("finite SNR");
        for (mode, noise_mode) in [("estimate", NoiseMode::Estimate), ("pinned", NoiseMode::fixed_variance(lambda)?)] {
            let r = solver::run(&problem, &SolverConfig { noise_mode, ..Default::default() })?;
            println!(
                "{snr_db:4} {mode:10} {lambda:.4e}   {:.4e}   {:+6.2}   {:.3e}  {:.3}",
                r.lambda_hat,
                10.0 * (r.lambda_hat / lambda).log10(),
                nse(truth, &r.x_hat)?,
                f1_support(&support, &r.x_hat, DEFAULT_DELTA)
            );
        }
    }
    Ok(())
}
