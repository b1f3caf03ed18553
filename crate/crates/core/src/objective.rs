//! Cost functions of the TV-regularized SBL problem.
//!
//! Three evaluations share one decomposition ([`CostBreakdown`]):
//!
//! * [`cost_original`] in variances `(gamma, lambda)`,
//! * [`cost_transformed`] in log-variances `(z, beta)`,
//! * [`surrogate_cost`], the majorizer built at a posterior-mean point `Theta`,
//!
//! plus [`SmoothSubproblem`], the differentiable part of one ADMM primal step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianFactor};
use crate::model::{DifferenceMatrix, Hyperparameters, ProblemInstance};

/// Inverse-Gamma shape `a0` and scale `b0`, shared by every `gamma_n` and `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub a0: f64,
    pub b0: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { a0: 1e-6, b0: 1e-6 }
    }
}

impl PriorConfig {
    pub const NONE: PriorConfig = PriorConfig { a0: 0.0, b0: 0.0 };

    pub fn validate(&self) -> Result<()> {
        if self.a0 >= 0.0 && self.b0 >= 0.0 && self.a0.is_finite() && self.b0.is_finite() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "prior needs finite a0, b0 >= 0, got a0={} b0={}",
                self.a0, self.b0
            )))
        }
    }

    /// `sum_n (a0+1) z_n + b0 e^{-z_n} + (a0+1) beta + b0 e^{-beta}`
    pub fn log_domain_penalty(&self, hp: &Hyperparameters) -> f64 {
        let c = self.a0 + 1.0;
        let per = |x: f64| c * x + self.b0 * (-x).exp();
        hp.z.iter().map(|&z| per(z)).sum::<f64>() + per(hp.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// `L log|Sigma_Y|`
    pub logdet_term: f64,
    /// `trace(Y^H Sigma_Y^{-1} Y)`, or its quadratic upper bound for the surrogate.
    pub data_term: f64,
    pub prior_term: f64,
    pub tv_term: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(logdet_term: f64, data_term: f64, prior_term: f64, tv_term: f64) -> Self {
        Self {
            logdet_term,
            data_term,
            prior_term,
            tv_term,
            total: logdet_term + data_term + prior_term + tv_term,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

fn check_hp(problem: &ProblemInstance, hp: &Hyperparameters) -> Result<()> {
    if hp.z.len() != problem.n() {
        return Err(Error::dims("hyperparameters", format!("z of length {}", problem.n()), hp.z.len()));
    }
    hp.check_finite()
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract(format!("tau must be finite and >= 0, got {tau}")))
    }
}

/// `(L log|Sigma|, trace(Y^H Sigma^{-1} Y))` from a factor of `Sigma`.
fn evidence_terms(problem: &ProblemInstance, factor: &HermitianFactor) -> (f64, f64) {
    let mut w = problem.y().clone();
    factor.forward_in_place(&mut w);
    (problem.l() as f64 * factor.log_det(), linalg::frobenius_sqr(&w))
}

/// Cost in the variance domain.
pub fn cost_original(
    problem: &ProblemInstance,
    gamma: &[f64],
    lambda: f64,
    prior: &PriorConfig,
    tau: f64,
) -> Result<CostBreakdown> {
    if gamma.len() != problem.n() {
        return Err(Error::dims("gamma", problem.n(), gamma.len()));
    }
    if gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Contract("gamma and lambda must be strictly positive".into()));
    }
    prior.validate()?;
    check_tau(tau)?;
    let factor = HermitianFactor::new(
        linalg::weighted_gram_lower(problem.h(), gamma, lambda),
        "measurement covariance",
    )?;
    let (logdet, data) = evidence_terms(problem, &factor);
    let c = prior.a0 + 1.0;
    let prior_term = gamma.iter().map(|&g| c * g.ln() + prior.b0 / g).sum::<f64>()
        + c * lambda.ln()
        + prior.b0 / lambda;
    let logs: Vec<f64> = gamma.iter().map(|g| g.ln()).collect();
    let tv = tau * DifferenceMatrix::possibly_empty(gamma.len()).l1(&logs);
    Ok(CostBreakdown::new(logdet, data, prior_term, tv))
}

/// Cost in the log domain `(z, beta)`.
pub fn cost_transformed(
    problem: &ProblemInstance,
    hp: &Hyperparameters,
    prior: &PriorConfig,
    tau: f64,
) -> Result<CostBreakdown> {
    check_hp(problem, hp)?;
    check_tau(tau)?;
    let factor = HermitianFactor::new(
        linalg::weighted_gram_lower(problem.h(), &hp.gamma(), hp.lambda()),
        "measurement covariance",
    )?;
    let (logdet, data) = evidence_terms(problem, &factor);
    let tv = tau * DifferenceMatrix::possibly_empty(hp.z.len()).l1(&hp.z);
    Ok(CostBreakdown::new(logdet, data, prior.log_domain_penalty(hp), tv))
}

/// `||Y - H Theta||_F^2`
pub fn residual_energy(problem: &ProblemInstance, theta: &CMatrix) -> f64 {
    linalg::frobenius_sqr(&(problem.y() - problem.h() * theta))
}

fn check_theta(problem: &ProblemInstance, theta: &CMatrix) -> Result<()> {
    if theta.nrows() != problem.n() || theta.ncols() != problem.l() {
        return Err(Error::dims(
            "theta",
            format!("{}x{}", problem.n(), problem.l()),
            format!("{}x{}", theta.nrows(), theta.ncols()),
        ));
    }
    Ok(())
}

/// Majorizer of [`cost_transformed`] built at `theta`; `data_term` holds
/// `e^-beta ||Y - H Theta||_F^2 + sum_n ||theta_n||^2 e^{-z_n}`.
pub fn surrogate_cost(
    problem: &ProblemInstance,
    hp: &Hyperparameters,
    theta: &CMatrix,
    prior: &PriorConfig,
    tau: f64,
) -> Result<CostBreakdown> {
    check_hp(problem, hp)?;
    check_theta(problem, theta)?;
    check_tau(tau)?;
    let factor = HermitianFactor::new(
        linalg::weighted_gram_lower(problem.h(), &hp.gamma(), hp.lambda()),
        "measurement covariance",
    )?;
    let logdet = problem.l() as f64 * factor.log_det();
    let rows = linalg::row_norms_sqr(theta);
    let data = (-hp.beta).exp() * residual_energy(problem, theta)
        + rows.iter().zip(&hp.z).map(|(r, z)| r * (-z).exp()).sum::<f64>();
    let tv = tau * DifferenceMatrix::possibly_empty(hp.z.len()).l1(&hp.z);
    Ok(CostBreakdown::new(logdet, data, prior.log_domain_penalty(hp), tv))
}

/// Smooth objective of the ADMM primal step at a fixed majorization point:
///
/// `L log|Sigma_Y| + e^-beta r + sum_n (b0 + ||theta_n||^2) e^{-z_n}
///  + (a0+1)(sum z + beta) + b0 e^-beta + rho/2 ||D z - v||^2`
///
/// with `r = ||Y - H Theta||_F^2` and `v = u - d`.
#[derive(Debug, Clone)]
pub struct SmoothSubproblem<'a> {
    problem: &'a ProblemInstance,
    diff: DifferenceMatrix,
    residual: f64,
    row_energy: Vec<f64>,
    prior: PriorConfig,
    rho: f64,
    v: Vec<f64>,
}

/// Value and gradient of [`SmoothSubproblem`] at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEval {
    pub value: f64,
    pub grad_z: Vec<f64>,
    pub grad_beta: f64,
}

impl<'a> SmoothSubproblem<'a> {
    pub fn new(
        problem: &'a ProblemInstance,
        theta: &CMatrix,
        prior: PriorConfig,
        rho: f64,
        v: Vec<f64>,
    ) -> Result<Self> {
        check_theta(problem, theta)?;
        prior.validate()?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Contract(format!("rho must be positive, got {rho}")));
        }
        let diff = DifferenceMatrix::possibly_empty(problem.n());
        if v.len() != diff.rows() {
            return Err(Error::dims("ADMM offset v", diff.rows(), v.len()));
        }
        Ok(Self {
            problem,
            diff,
            residual: residual_energy(problem, theta),
            row_energy: linalg::row_norms_sqr(theta),
            prior,
            rho,
            v,
        })
    }

    pub fn dim(&self) -> usize {
        self.problem.n()
    }

    /// Replaces the ADMM offset `v = u - d` without recomputing the `Theta` terms.
    pub fn set_offset(&mut self, v: Vec<f64>) {
        debug_assert_eq!(v.len(), self.diff.rows());
        self.v = v;
    }

    fn factor(&self, hp: &Hyperparameters) -> Result<HermitianFactor> {
        HermitianFactor::new(
            linalg::weighted_gram_lower(self.problem.h(), &hp.gamma(), hp.lambda()),
            "measurement covariance",
        )
    }

    fn separable_value(&self, hp: &Hyperparameters) -> f64 {
        let c = self.prior.a0 + 1.0;
        let b0 = self.prior.b0;
        let zs: f64 = hp
            .z
            .iter()
            .zip(&self.row_energy)
            .map(|(&z, &e)| c * z + (b0 + e) * (-z).exp())
            .sum();
        let penalty: f64 = self
            .diff
            .apply(&hp.z)
            .iter()
            .zip(&self.v)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        zs + c * hp.beta + (b0 + self.residual) * (-hp.beta).exp() + 0.5 * self.rho * penalty
    }

    pub fn value(&self, hp: &Hyperparameters) -> Result<f64> {
        let factor = self.factor(hp)?;
        Ok(self.problem.l() as f64 * factor.log_det() + self.separable_value(hp))
    }

    pub fn evaluate(&self, hp: &Hyperparameters) -> Result<SmoothEval> {
        let factor = self.factor(hp)?;
        let l = self.problem.l() as f64;
        let value = l * factor.log_det() + self.separable_value(hp);

        // h_n^H Sigma^{-1} h_n = ||C^{-1} h_n||^2
        let mut w = self.problem.h().clone();
        factor.forward_in_place(&mut w);
        let quad = linalg::column_norms_sqr(&w);

        let c = self.prior.a0 + 1.0;
        let b0 = self.prior.b0;
        let dz = self.diff.apply(&hp.z);
        let pen: Vec<f64> = dz.iter().zip(&self.v).map(|(a, b)| self.rho * (a - b)).collect();
        let pen = self.diff.apply_transpose(&pen);
        let grad_z = hp
            .z
            .iter()
            .enumerate()
            .map(|(n, &z)| {
                l * z.exp() * quad[n] + c - (b0 + self.row_energy[n]) * (-z).exp() + pen[n]
            })
            .collect();
        let grad_beta =
            l * hp.beta.exp() * factor.inverse_trace() + c - (b0 + self.residual) * (-hp.beta).exp();
        Ok(SmoothEval {
            value,
            grad_z,
            grad_beta,
        })
    }
}

/// Gradient of the ADMM primal-step objective with respect to `(z, beta)`.
pub fn smooth_subproblem_gradient(
    problem: &ProblemInstance,
    hp: &Hyperparameters,
    theta: &CMatrix,
    prior: &PriorConfig,
    rho: f64,
    v: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_hp(problem, hp)?;
    let sub = SmoothSubproblem::new(problem, theta, *prior, rho, v.to_vec())?;
    let eval = sub.evaluate(hp)?;
    Ok((eval.grad_z, eval.grad_beta))
}
