//! Exponential-parameterized DoL-TV SBL: a majorization-minimization outer
//! loop whose convex subproblems are solved by ADMM, plus an EM-SBL baseline.
//!
//! Each outer iteration computes the posterior mean `Theta` at the current
//! log-variances, builds the quadratic majorizer of the data term around it,
//! and runs `T` ADMM iterations (smooth step, soft threshold, dual update)
//! on the majorized cost. The ADMM variables are carried across outer
//! iterations.

mod admm;
pub mod lbfgs;
mod sbl;
pub mod trace;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{posterior_mean, DifferenceMatrix, Hyperparameters, ProblemInstance};
use crate::objective::{cost_transformed, CostBreakdown, PriorConfig, SmoothSubproblem};

pub use admm::{admm_step1, admm_step2, admm_step3, soft_threshold, Step1Outcome};
pub use sbl::baseline_sbl;
pub use trace::{JsonLinesSink, NoTrace, TraceRecord, TraceSink};

/// Log-variances are kept inside `[-VARIABLE_BOUND, VARIABLE_BOUND]`.
pub const VARIABLE_BOUND: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NoiseMode {
    /// Treat `beta = log(lambda)` as an unknown.
    Estimate,
    /// Pin `beta` to the given log-variance.
    Fixed { log_variance: f64 },
}

impl NoiseMode {
    pub fn fixed_variance(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(NoiseMode::Fixed {
                log_variance: lambda.ln(),
            })
        } else {
            Err(Error::Contract(format!("fixed noise variance must be positive, got {lambda}")))
        }
    }

    fn pinned_beta(&self) -> Option<f64> {
        match *self {
            NoiseMode::Fixed { log_variance } => Some(log_variance),
            NoiseMode::Estimate => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerSolverConfig {
    /// Stop when the projected gradient infinity norm drops to this.
    pub grad_tolerance: f64,
    pub max_inner_steps: usize,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            grad_tolerance: 1e-6,
            max_inner_steps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// TV weight.
    pub tau: f64,
    /// ADMM penalty.
    pub rho: f64,
    pub prior: PriorConfig,
    /// ADMM iterations per outer iteration.
    pub inner_iters: usize,
    /// Outer stopping threshold on the infinity-norm change of `(z, beta)`.
    pub tolerance: f64,
    pub max_outer_iters: usize,
    pub noise_mode: NoiseMode,
    pub inner_solver: InnerSolverConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            rho: 1.0,
            prior: PriorConfig::default(),
            inner_iters: 1,
            tolerance: 1e-3,
            max_outer_iters: 200,
            noise_mode: NoiseMode::Estimate,
            inner_solver: InnerSolverConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Contract(msg));
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be >= 0, got {}", self.tau));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be > 0, got {}", self.rho));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be > 0, got {}", self.tolerance));
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be >= 1".into());
        }
        if !(self.inner_solver.grad_tolerance > 0.0) {
            return bad("inner grad_tolerance must be > 0".into());
        }
        if let NoiseMode::Fixed { log_variance } = self.noise_mode {
            if !log_variance.is_finite() {
                return bad("fixed log-variance must be finite".into());
            }
        }
        self.prior.validate()
    }
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub clamp_events: usize,
    /// Smooth steps that stopped on the step cap instead of the gradient test.
    pub inner_nonconverged: usize,
    pub inner_steps_total: usize,
    pub last_grad_norm: f64,
    /// `||D z - u||_2` after the last ADMM iteration.
    pub primal_residual: f64,
}

/// Iterates of the outer loop. `hp` is the newest committed point, `hp_prev`
/// the point `theta` was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub hp: Hyperparameters,
    pub hp_prev: Hyperparameters,
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub theta: CMatrix,
    pub outer_iter: usize,
    pub cost_trace: Vec<CostBreakdown>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x_hat: CMatrix,
    pub gamma_hat: Vec<f64>,
    pub lambda_hat: f64,
    pub hp: Hyperparameters,
    pub outer_iters_used: usize,
    pub converged: bool,
    pub cost_trace: Vec<CostBreakdown>,
    pub wall_time: Duration,
    pub diagnostics: Diagnostics,
}

impl RecoveryResult {
    /// Squared row norms of the estimate, i.e. power per dictionary atom.
    pub fn row_power(&self) -> Vec<f64> {
        crate::linalg::row_norms_sqr(&self.x_hat)
    }
}

/// Step-wise driver for the MM/ADMM iteration; [`run`] wraps it.
pub struct ExpDolSolver<'a> {
    problem: &'a ProblemInstance,
    config: SolverConfig,
    state: SolverState,
    last_change: f64,
}

impl<'a> ExpDolSolver<'a> {
    /// Starts from `z = 0`, `beta = 0` (or the pinned value), `u = d = 1`.
    /// The stopping test is seeded with the sentinel iterate `z = 1, beta = 1`.
    pub fn new(problem: &'a ProblemInstance, config: SolverConfig) -> Result<Self> {
        let pinned = config.noise_mode.pinned_beta();
        let start = Hyperparameters::constant(problem.n(), 0.0, pinned.unwrap_or(0.0));
        Self::with_start(problem, config, start)
    }

    /// Starts from the given point instead of the origin. `u` and `d` are
    /// still set to ones and the sentinel is `start + 1`. A pinned noise
    /// level overrides `start.beta`.
    pub fn with_start(problem: &'a ProblemInstance, config: SolverConfig, mut start: Hyperparameters) -> Result<Self> {
        config.validate()?;
        let n = problem.n();
        if start.z.len() != n {
            return Err(Error::dims("starting point", n, start.z.len()));
        }
        start.check_finite()?;
        let pinned = config.noise_mode.pinned_beta();
        if let Some(b) = pinned {
            start.beta = b;
        }
        let sentinel = Hyperparameters {
            z: start.z.iter().map(|z| z + 1.0).collect(),
            beta: start.beta + 1.0,
        };
        let last_change = sentinel.max_change(&start, pinned.is_none());
        let edges = n.saturating_sub(1);
        Ok(Self {
            problem,
            config,
            state: SolverState {
                hp_prev: start.clone(),
                hp: start,
                u: vec![1.0; edges],
                d: vec![1.0; edges],
                theta: CMatrix::zeros(n, problem.l()),
                outer_iter: 0,
                cost_trace: Vec::new(),
                diagnostics: Diagnostics::default(),
            },
            last_change,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Change between the last two committed iterates (the sentinel before
    /// the first step).
    pub fn last_change(&self) -> f64 {
        self.last_change
    }

    pub fn converged(&self) -> bool {
        self.last_change <= self.config.tolerance
    }

    pub fn is_done(&self) -> bool {
        self.converged() || self.state.outer_iter >= self.config.max_outer_iters
    }

    /// One outer iteration: majorize at the current point, run `T` ADMM
    /// iterations, commit.
    pub fn step(&mut self, sink: &mut dyn TraceSink) -> Result<()> {
        let problem = self.problem;
        let config = self.config;
        let anchor = self.state.hp.clone();
        let k = self.state.outer_iter + 1;

        self.state.theta = posterior_mean(problem.h(), problem.y(), &anchor)?;
        let diff = DifferenceMatrix::possibly_empty(problem.n());
        let offset = |s: &SolverState| -> Vec<f64> { s.u.iter().zip(&s.d).map(|(u, d)| u - d).collect() };
        let mut sub = SmoothSubproblem::new(problem, &self.state.theta, config.prior, config.rho, offset(&self.state))?;

        for t in 1..=config.inner_iters {
            sub.set_offset(offset(&self.state));
            let out = admm::primal_step(&sub, &self.state.hp, &config)?;
            let diag = &mut self.state.diagnostics;
            diag.clamp_events += out.clamp_events;
            diag.inner_steps_total += out.steps;
            diag.last_grad_norm = out.grad_norm;
            if !out.converged {
                diag.inner_nonconverged += 1;
            }
            self.state.hp = out.hp;
            if diff.rows() > 0 {
                self.state.u = admm_step2(&self.state, &config);
                self.state.d = admm_step3(&self.state);
            }
            let residual = diff
                .apply(&self.state.hp.z)
                .iter()
                .zip(&self.state.u)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            self.state.diagnostics.primal_residual = residual;
            sink.record(&TraceRecord {
                outer: k,
                inner: t,
                cost: None,
                primal_residual: residual,
                grad_norm: out.grad_norm,
                inner_steps: out.steps,
                change: None,
            });
        }

        let cost = cost_transformed(problem, &self.state.hp, &config.prior, config.tau)?;
        self.state.outer_iter = k;
        self.state.hp_prev = anchor;
        if !cost.is_finite() {
            return Err(Error::NonFinite {
                outer_iter: k,
                state: Box::new(self.state.clone()),
            });
        }
        self.state.cost_trace.push(cost);
        self.last_change = self
            .state
            .hp
            .max_change(&self.state.hp_prev, config.noise_mode.pinned_beta().is_none());
        sink.record(&TraceRecord {
            outer: k,
            inner: 0,
            cost: Some(cost),
            primal_residual: self.state.diagnostics.primal_residual,
            grad_norm: self.state.diagnostics.last_grad_norm,
            inner_steps: 0,
            change: Some(self.last_change),
        });
        Ok(())
    }

    /// Posterior mean at the last committed iterate.
    pub fn finish(self, wall_time: Duration) -> Result<RecoveryResult> {
        let converged = self.converged();
        let SolverState {
            hp,
            outer_iter,
            cost_trace,
            diagnostics,
            ..
        } = self.state;
        let x_hat = posterior_mean(self.problem.h(), self.problem.y(), &hp)?;
        Ok(RecoveryResult {
            x_hat,
            gamma_hat: hp.gamma(),
            lambda_hat: hp.lambda(),
            hp,
            outer_iters_used: outer_iter,
            converged,
            cost_trace,
            wall_time,
            diagnostics,
        })
    }
}

/// Runs the MM/ADMM solver to convergence or the outer iteration cap.
pub fn run(problem: &ProblemInstance, config: &SolverConfig) -> Result<RecoveryResult> {
    run_traced(problem, config, &mut NoTrace)
}

pub fn run_traced(problem: &ProblemInstance, config: &SolverConfig, sink: &mut dyn TraceSink) -> Result<RecoveryResult> {
    let start = Instant::now();
    let mut solver = ExpDolSolver::new(problem, *config)?;
    while !solver.is_done() {
        solver.step(sink)?;
    }
    let elapsed = start.elapsed();
    solver.finish(elapsed)
}
