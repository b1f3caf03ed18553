use std::fmt;

use crate::checks::{self, GradientFn};
use crate::error::Result;
use crate::objective::smooth_subproblem_gradient;

/// Seeds and sizes of the validation suites.
pub const CONVEXITY_SEED: u64 = 101;
pub const REALIFICATION_SEED: u64 = 202;
pub const GRADIENT_SEED: u64 = 303;
pub const MAJORIZATION_SEED: u64 = 404;

/// One line per suite plus the overall verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        write!(f, "overall {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Runs the convexity, realification, gradient and majorization suites
/// against the library's own gradient.
pub fn cmd_validate() -> Result<ValidationReport> {
    cmd_validate_with(smooth_subproblem_gradient)
}

/// Same as [`cmd_validate`] with the gradient under test swapped out.
pub fn cmd_validate_with(gradient: GradientFn) -> Result<ValidationReport> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(CONVEXITY_SEED);
    let h = checks::complex_gaussian(8, 20, &mut rng);
    let convexity = checks::check_logdet_convexity(&h, 1000, CONVEXITY_SEED)?;
    let realification = checks::check_realification(200, REALIFICATION_SEED)?;
    let grad = checks::check_gradient(gradient, 20, (6, 12, 3), GRADIENT_SEED)?;
    let major = checks::check_majorization(20, 100, (6, 12, 2), MAJORIZATION_SEED)?;
    let passed = convexity.passed() && realification.passed() && grad.passed() && major.passed();
    Ok(ValidationReport {
        lines: vec![
            convexity.to_string(),
            realification.to_string(),
            grad.to_string(),
            major.to_string(),
        ],
        passed,
    })
}
