//! Runs the numerical property suites behind `expdol validate` and one
//! extra convexity check on the full smooth subproblem.
//!
//! cargo run --release --example validate_properties

use expdol::checks;
use expdol::experiment::cmd_validate;
use expdol::model::ProblemInstance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> expdol::Result<()> {
    let report = cmd_validate()?;
    println!("{report}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let problem = ProblemInstance::new(
        checks::complex_gaussian(10, 25, &mut rng),
        checks::complex_gaussian(10, 4, &mut rng),
    )?;
    println!("{}", checks::check_subproblem_convexity(&problem, 500, 7)?);
    Ok(())
}
