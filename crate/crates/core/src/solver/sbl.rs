//! Plain EM sparse Bayesian learning (no TV term, no hyperprior).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{self, HermitianFactor};
use crate::model::{posterior_mean_with_factor, Hyperparameters, ProblemInstance};
use crate::objective::{cost_original, PriorConfig};

use super::{Diagnostics, NoiseMode, RecoveryResult, SolverConfig, VARIABLE_BOUND};

/// EM-SBL starting from `gamma = 1`, `lambda = 1` (or the pinned value).
///
/// Per iteration, with `Sigma_nn = gamma_n - gamma_n^2 h_n^H Sigma_Y^{-1} h_n`:
///
/// ```text
/// gamma_n <- ||mu_n||^2 / L + Sigma_nn
/// lambda  <- (||Y - H mu||_F^2 / L + lambda * sum_n (1 - Sigma_nn / gamma_n)) / M
/// ```
///
/// Stops when `max_n |gamma_n^new - gamma_n| < tolerance` or after
/// `max_outer_iters` iterations. Only `tolerance`, `max_outer_iters` and
/// `noise_mode` are read from `config`.
pub fn baseline_sbl(problem: &ProblemInstance, config: &SolverConfig) -> Result<RecoveryResult> {
    config.validate()?;
    let start = Instant::now();
    let (m, n, l) = (problem.m(), problem.n(), problem.l() as f64);
    let h = problem.h();
    let lo = (-VARIABLE_BOUND).exp();
    let hi = VARIABLE_BOUND.exp();

    let mut gamma = vec![1.0; n];
    let mut lambda = match config.noise_mode {
        NoiseMode::Fixed { log_variance } => log_variance.exp(),
        NoiseMode::Estimate => 1.0,
    };
    let mut cost_trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;

    while iters < config.max_outer_iters {
        let factor = HermitianFactor::new(linalg::weighted_gram_lower(h, &gamma, lambda), "EM-SBL covariance")?;
        let mu = posterior_mean_with_factor(h, problem.y(), &gamma, &factor);
        let mut w = h.clone();
        factor.forward_in_place(&mut w);
        let quad = linalg::column_norms_sqr(&w);
        let row_power = linalg::row_norms_sqr(&mu);

        let mut change = 0.0_f64;
        let mut occupancy = 0.0;
        let new_gamma: Vec<f64> = (0..n)
            .map(|i| {
                let post_var = (gamma[i] - gamma[i] * gamma[i] * quad[i]).max(0.0);
                occupancy += 1.0 - post_var / gamma[i];
                let g = (row_power[i] / l + post_var).clamp(lo, hi);
                change = change.max((g - gamma[i]).abs());
                g
            })
            .collect();
        if let NoiseMode::Estimate = config.noise_mode {
            let resid = linalg::frobenius_sqr(&(problem.y() - h * &mu));
            lambda = ((resid / l + lambda * occupancy) / m as f64).clamp(lo, hi);
        }
        gamma = new_gamma;
        iters += 1;

        let cost = cost_original(problem, &gamma, lambda, &PriorConfig::NONE, 0.0)?;
        if !cost.is_finite() {
            return Err(Error::NonFinite {
                outer_iter: iters,
                state: Box::new(super::SolverState {
                    hp: Hyperparameters::from_variances(&gamma, lambda)?,
                    hp_prev: Hyperparameters::from_variances(&gamma, lambda)?,
                    u: Vec::new(),
                    d: Vec::new(),
                    theta: mu,
                    outer_iter: iters,
                    cost_trace,
                    diagnostics: Diagnostics::default(),
                }),
            });
        }
        cost_trace.push(cost);
        if change < config.tolerance {
            converged = true;
            break;
        }
    }

    let factor = HermitianFactor::new(linalg::weighted_gram_lower(h, &gamma, lambda), "EM-SBL covariance")?;
    let x_hat = posterior_mean_with_factor(h, problem.y(), &gamma, &factor);
    Ok(RecoveryResult {
        x_hat,
        hp: Hyperparameters::from_variances(&gamma, lambda)?,
        gamma_hat: gamma,
        lambda_hat: lambda,
        outer_iters_used: iters,
        converged,
        cost_trace,
        wall_time: start.elapsed(),
        diagnostics: Diagnostics::default(),
    })
}
