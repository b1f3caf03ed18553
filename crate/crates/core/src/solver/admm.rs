//! The three ADMM updates for one majorized subproblem.
//!
//! The split introduces `u = D z` with scaled dual `d`; step 1 is a smooth
//! convex minimization in `(z, beta)`, step 2 a soft threshold, step 3 the
//! dual ascent.

use crate::error::Result;
use crate::model::{DifferenceMatrix, Hyperparameters, ProblemInstance};
use crate::objective::SmoothSubproblem;

use super::lbfgs::{self, LbfgsOptions, SmoothObjective};
use super::{NoiseMode, SolverConfig, SolverState, VARIABLE_BOUND};

/// `sgn(v) * max(|v| - kappa, 0)` elementwise.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    debug_assert!(kappa >= 0.0);
    v.iter()
        .map(|&x| {
            let m = x.abs() - kappa;
            if m > 0.0 {
                m.copysign(x)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step1Outcome {
    pub hp: Hyperparameters,
    pub value: f64,
    pub start_value: f64,
    pub grad_norm: f64,
    pub steps: usize,
    pub converged: bool,
    pub clamp_events: usize,
}

/// Adapter from the flat optimizer vector to `(z, beta)`.
struct Primal<'s, 'p> {
    sub: &'s SmoothSubproblem<'p>,
    fixed_beta: Option<f64>,
}

impl Primal<'_, '_> {
    fn unpack(&self, x: &[f64]) -> Hyperparameters {
        match self.fixed_beta {
            Some(beta) => Hyperparameters { z: x.to_vec(), beta },
            None => {
                let (z, b) = x.split_at(x.len() - 1);
                Hyperparameters { z: z.to_vec(), beta: b[0] }
            }
        }
    }
}

impl SmoothObjective for Primal<'_, '_> {
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let hp = self.unpack(x);
        let eval = self.sub.evaluate(&hp)?;
        let mut g = eval.grad_z;
        if self.fixed_beta.is_none() {
            g.push(eval.grad_beta);
        }
        Ok((eval.value, g))
    }
}

/// Minimizes `sub` from `start`. With a fixed noise level only `z` moves.
pub(crate) fn primal_step(sub: &SmoothSubproblem<'_>, start: &Hyperparameters, config: &SolverConfig) -> Result<Step1Outcome> {
    let fixed_beta = match config.noise_mode {
        NoiseMode::Fixed { log_variance } => Some(log_variance),
        NoiseMode::Estimate => None,
    };
    let mut x0 = start.z.clone();
    if fixed_beta.is_none() {
        x0.push(start.beta);
    }
    let mut primal = Primal { sub, fixed_beta };
    let start_value = primal.evaluate(&x0)?.0;
    let opts = LbfgsOptions {
        grad_tolerance: config.inner_solver.grad_tolerance,
        max_steps: config.inner_solver.max_inner_steps,
        bound: VARIABLE_BOUND,
        ..LbfgsOptions::default()
    };
    let out = lbfgs::minimize(&mut primal, x0, &opts)?;
    Ok(Step1Outcome {
        hp: primal.unpack(&out.x),
        value: out.value,
        start_value,
        grad_norm: out.grad_norm,
        steps: out.steps,
        converged: out.converged,
        clamp_events: out.clamp_events,
    })
}

/// Step 1: smooth minimization over `(z, beta)` at the current majorization
/// point, with penalty offset `v = u - d`, warm-started at `state.hp`.
pub fn admm_step1(problem: &ProblemInstance, state: &SolverState, config: &SolverConfig) -> Result<Step1Outcome> {
    let v: Vec<f64> = state.u.iter().zip(&state.d).map(|(u, d)| u - d).collect();
    let sub = SmoothSubproblem::new(problem, &state.theta, config.prior, config.rho, v)?;
    primal_step(&sub, &state.hp, config)
}

/// Step 2: `u = S_{tau/rho}(D z + d)`.
pub fn admm_step2(state: &SolverState, config: &SolverConfig) -> Vec<f64> {
    let diff = DifferenceMatrix::possibly_empty(state.hp.z.len());
    let arg: Vec<f64> = diff.apply(&state.hp.z).iter().zip(&state.d).map(|(a, b)| a + b).collect();
    soft_threshold(&arg, config.tau / config.rho)
}

/// Step 3: `d = d + D z - u`.
pub fn admm_step3(state: &SolverState) -> Vec<f64> {
    let diff = DifferenceMatrix::possibly_empty(state.hp.z.len());
    diff.apply(&state.hp.z)
        .iter()
        .zip(&state.d)
        .zip(&state.u)
        .map(|((dz, d), u)| d + (dz - u))
        .collect()
}
