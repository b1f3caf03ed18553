//! Numerical verifiers for the structural claims the solver relies on:
//! convexity of the log-determinant in log-variances, the real embedding of
//! Hermitian matrices, analytic gradients, and the majorization bound.
//!
//! Violations are reported, never raised. Each report renders as a short
//! plain-text block suitable for CI logs.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianFactor};
use crate::model::{posterior_mean, Hyperparameters, ProblemInstance};
use crate::objective::{cost_transformed, surrogate_cost, PriorConfig, SmoothSubproblem};

/// Log-variances are drawn uniformly from this box in every check.
const SAMPLE_BOX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    /// Largest violation observed (0 when the property held everywhere).
    pub max_violation: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} trials={} seed={} max_violation={:.3e} tolerance={:.1e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.trials,
            self.seed,
            self.max_violation,
            self.tolerance
        )
    }
}

pub(crate) fn sample_hp(n: usize, rng: &mut impl Rng) -> Hyperparameters {
    let mut draw = || rng.random_range(-SAMPLE_BOX..SAMPLE_BOX);
    let z = (0..n).map(|_| draw()).collect();
    Hyperparameters { z, beta: draw() }
}

pub use crate::linalg::complex_normal as complex_gaussian;

fn interpolate(a: &Hyperparameters, b: &Hyperparameters, t: f64) -> Hyperparameters {
    Hyperparameters {
        z: a.z.iter().zip(&b.z).map(|(x, y)| t * x + (1.0 - t) * y).collect(),
        beta: t * a.beta + (1.0 - t) * b.beta,
    }
}

/// Convexity test on an arbitrary function of `(z, beta)`: samples pairs of
/// points and `t in [0, 1]` and records `f(t p1 + (1-t) p2) - t f(p1) - (1-t) f(p2)`.
pub fn check_convexity<F>(
    name: &str,
    n: usize,
    trials: usize,
    seed: u64,
    tolerance: f64,
    mut f: F,
) -> Result<CheckReport>
where
    F: FnMut(&Hyperparameters) -> Result<f64>,
{
    if trials == 0 {
        return Err(Error::Contract("convexity check needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let p1 = sample_hp(n, &mut rng);
        let p2 = sample_hp(n, &mut rng);
        let t: f64 = rng.random();
        let mid = f(&interpolate(&p1, &p2, t))?;
        let chord = t * f(&p1)? + (1.0 - t) * f(&p2)?;
        worst = worst.max(mid - chord);
    }
    Ok(CheckReport {
        name: name.to_string(),
        trials,
        seed,
        max_violation: worst,
        tolerance,
    })
}

/// Convexity of `log|e^beta I + H diag(e^z) H^H|` in `(z, beta)`.
pub fn check_logdet_convexity(h: &CMatrix, trials: usize, seed: u64) -> Result<CheckReport> {
    check_convexity("logdet convexity", h.ncols(), trials, seed, 1e-9, |hp| {
        HermitianFactor::new(
            linalg::weighted_gram_lower(h, &hp.gamma(), hp.lambda()),
            "convexity check",
        )
        .map(|f| f.log_det())
    })
}

/// Convexity of the complete smooth ADMM primal objective for one random
/// majorization point on `problem`.
pub fn check_subproblem_convexity(problem: &ProblemInstance, trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let anchor = sample_hp(problem.n(), &mut rng);
    let theta = posterior_mean(problem.h(), problem.y(), &anchor)?;
    let v: Vec<f64> = (0..problem.n().saturating_sub(1))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let sub = SmoothSubproblem::new(problem, &theta, PriorConfig::default(), 1.0, v)?;
    check_convexity("subproblem convexity", problem.n(), trials, seed, 1e-9, |hp| sub.value(hp))
}

/// Real `2M x 2M` embedding `[[Re U, -Im U], [Im U, Re U]]`.
pub fn realify(u: &CMatrix) -> DMatrix<f64> {
    let m = u.nrows();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for i in 0..m {
            let v = u[(i, j)];
            out[(i, j)] = v.re;
            out[(i + m, j + m)] = v.re;
            out[(i, j + m)] = -v.im;
            out[(i + m, j)] = v.im;
        }
    }
    out
}

/// Returns `(det M(U), det(U)^2)` for a Hermitian positive-definite `U`.
pub fn realification_determinant_check(u: &CMatrix) -> Result<(f64, f64)> {
    let m = u.nrows();
    if u.ncols() != m {
        return Err(Error::dims("realification", "square matrix", format!("{}x{}", m, u.ncols())));
    }
    let scale = u.norm().max(1.0);
    if (u - u.adjoint()).norm() > 1e-12 * scale {
        return Err(Error::Contract("realification check needs a Hermitian matrix".into()));
    }
    let det_m = realify(u).determinant();
    let det_u = u.clone().determinant();
    Ok((det_m, det_u.re * det_u.re))
}

/// Random Hermitian PD matrices `A A^H + I` of sizes 2 to 8: relative
/// disagreement of the two determinants, plus a symmetry / positive
/// definiteness check on the embedding (any failure counts as violation 1).
pub fn check_realification(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let m = rng.random_range(2..=8);
        let a = complex_gaussian(m, m, &mut rng);
        let u = &a * a.adjoint() + CMatrix::identity(m, m);
        let (det_m, det_u_sq) = realification_determinant_check(&u)?;
        worst = worst.max((det_m - det_u_sq).abs() / det_u_sq.abs());
        let emb = realify(&u);
        let asym = (&emb - emb.transpose()).norm() / emb.norm();
        let pd = emb.clone().cholesky().is_some();
        if asym > 1e-14 || !pd {
            worst = worst.max(1.0);
        }
    }
    Ok(CheckReport {
        name: "realification determinant".into(),
        trials,
        seed,
        max_violation: worst,
        tolerance: 1e-10,
    })
}

/// Gradient function under test: `(problem, hp, theta, prior, rho, v) -> (grad_z, grad_beta)`.
pub type GradientFn =
    fn(&ProblemInstance, &Hyperparameters, &CMatrix, &PriorConfig, f64, &[f64]) -> Result<(Vec<f64>, f64)>;

/// Central finite differences (step `1e-6`) against `gradient` on random
/// instances of shape `m x n x l`. Error per coordinate is
/// `|analytic - fd| / max(|analytic|, |fd|, 1)`.
pub fn check_gradient(
    gradient: GradientFn,
    instances: usize,
    (m, n, l): (usize, usize, usize),
    seed: u64,
) -> Result<CheckReport> {
    let step = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let problem = ProblemInstance::new(complex_gaussian(m, n, &mut rng), complex_gaussian(m, l, &mut rng))?;
        let theta = posterior_mean(problem.h(), problem.y(), &sample_hp(n, &mut rng))?;
        let hp = sample_hp(n, &mut rng);
        let hp = Hyperparameters {
            z: hp.z.iter().map(|z| z * 0.5).collect(),
            beta: hp.beta * 0.5,
        };
        let v: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let prior = PriorConfig {
            a0: rng.random_range(0.0..1.0),
            b0: rng.random_range(0.0..1.0),
        };
        let rho = rng.random_range(0.5..2.0);
        let sub = SmoothSubproblem::new(&problem, &theta, prior, rho, v.clone())?;
        let (gz, gb) = gradient(&problem, &hp, &theta, &prior, rho, &v)?;
        for k in 0..=n {
            let (mut plus, mut minus) = (hp.clone(), hp.clone());
            if k < n {
                plus.z[k] += step;
                minus.z[k] -= step;
            } else {
                plus.beta += step;
                minus.beta -= step;
            }
            let fd = (sub.value(&plus)? - sub.value(&minus)?) / (2.0 * step);
            let an = if k < n { gz[k] } else { gb };
            let err = (an - fd).abs() / an.abs().max(fd.abs()).max(1.0);
            worst = worst.max(if err.is_finite() { err } else { f64::INFINITY });
        }
    }
    Ok(CheckReport {
        name: "gradient finite differences".into(),
        trials: instances,
        seed,
        max_violation: worst,
        tolerance: 1e-5,
    })
}

/// Majorization and tangency of the surrogate on random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationReport {
    pub instances: usize,
    pub probes_per_instance: usize,
    pub seed: u64,
    /// `min(surrogate - cost)` over all probes; must stay above `-1e-9`.
    pub min_slack: f64,
    /// Worst relative gap at the majorization point; must stay below `1e-8`.
    pub max_tangency_error: f64,
}

impl MajorizationReport {
    pub const SLACK_TOLERANCE: f64 = 1e-9;
    pub const TANGENCY_TOLERANCE: f64 = 1e-8;

    pub fn passed(&self) -> bool {
        self.min_slack >= -Self::SLACK_TOLERANCE && self.max_tangency_error <= Self::TANGENCY_TOLERANCE
    }
}

impl fmt::Display for MajorizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} instances={} probes={} seed={} min_slack={:.3e} max_tangency_error={:.3e}",
            "majorization/tangency",
            if self.passed() { "PASS" } else { "FAIL" },
            self.instances,
            self.probes_per_instance,
            self.seed,
            self.min_slack,
            self.max_tangency_error
        )
    }
}

pub fn check_majorization(
    instances: usize,
    probes: usize,
    (m, n, l): (usize, usize, usize),
    seed: u64,
) -> Result<MajorizationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = PriorConfig::default();
    let tau = 0.2;
    let mut min_slack = f64::INFINITY;
    let mut max_tan = 0.0_f64;
    for _ in 0..instances {
        let problem = ProblemInstance::new(complex_gaussian(m, n, &mut rng), complex_gaussian(m, l, &mut rng))?;
        let anchor = sample_hp(n, &mut rng);
        let theta = posterior_mean(problem.h(), problem.y(), &anchor)?;
        let g0 = surrogate_cost(&problem, &anchor, &theta, &prior, tau)?.total;
        let f0 = cost_transformed(&problem, &anchor, &prior, tau)?.total;
        max_tan = max_tan.max((g0 - f0).abs() / f0.abs().max(1e-300));
        for _ in 0..probes {
            let probe = sample_hp(n, &mut rng);
            let g = surrogate_cost(&problem, &probe, &theta, &prior, tau)?.total;
            let f = cost_transformed(&problem, &probe, &prior, tau)?.total;
            min_slack = min_slack.min(g - f);
        }
    }
    Ok(MajorizationReport {
        instances,
        probes_per_instance: probes,
        seed,
        min_slack,
        max_tangency_error: max_tan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn one_dimensional_logdet_is_convex() {
        let h = CMatrix::from_element(1, 1, Complex64::new(1.7, 0.0));
        let r = check_logdet_convexity(&h, 500, 1).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn endpoints_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = complex_gaussian(4, 6, &mut rng);
        let f = |hp: &Hyperparameters| {
            HermitianFactor::new(linalg::weighted_gram_lower(&h, &hp.gamma(), hp.lambda()), "t")
                .unwrap()
                .log_det()
        };
        let p1 = sample_hp(6, &mut rng);
        let p2 = sample_hp(6, &mut rng);
        assert!((f(&interpolate(&p1, &p2, 1.0)) - f(&p1)).abs() < 1e-12);
        assert!((f(&interpolate(&p1, &p2, 0.0)) - f(&p2)).abs() < 1e-12);
    }

    #[test]
    fn random_logdet_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = complex_gaussian(4, 6, &mut rng);
        let r = check_logdet_convexity(&h, 1000, 7).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn detects_a_concave_function() {
        let r = check_convexity("neg", 3, 200, 1, 1e-9, |hp| Ok(-hp.z.iter().map(|z| z * z).sum::<f64>()))
            .unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn realification_small_cases() {
        let (a, b) = realification_determinant_check(&CMatrix::identity(2, 2)).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let d = crate::model::complex_diag(&[2.0, 3.0]);
        let (a, b) = realification_determinant_check(&d).unwrap();
        assert!((a - 36.0).abs() < 1e-12 && (b - 36.0).abs() < 1e-12);
    }

    #[test]
    fn realification_rejects_non_hermitian() {
        let mut u = CMatrix::identity(2, 2);
        u[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(realification_determinant_check(&u).is_err());
    }

    #[test]
    fn realification_random() {
        let r = check_realification(50, 3).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn gradient_check_catches_sign_error() {
        fn flipped(
            p: &ProblemInstance,
            hp: &Hyperparameters,
            t: &CMatrix,
            pr: &PriorConfig,
            rho: f64,
            v: &[f64],
        ) -> Result<(Vec<f64>, f64)> {
            let (gz, gb) = crate::objective::smooth_subproblem_gradient(p, hp, t, pr, rho, v)?;
            Ok((gz, -gb))
        }
        let good = check_gradient(crate::objective::smooth_subproblem_gradient, 3, (3, 5, 2), 1).unwrap();
        assert!(good.passed(), "{good}");
        let bad = check_gradient(flipped, 3, (3, 5, 2), 1).unwrap();
        assert!(!bad.passed());
    }

    #[test]
    fn majorization_holds() {
        let r = check_majorization(5, 20, (4, 6, 2), 4).unwrap();
        assert!(r.passed(), "{r}");
    }
}
