//! Limited-memory BFGS with backtracking on a box `[-bound, bound]^n`.
//!
//! Trial points are projected onto the box; the stopping test uses the
//! projected gradient so coordinates pinned at a bound with an outward
//! gradient do not block convergence.

use std::collections::VecDeque;

use crate::error::Result;

pub trait SmoothObjective {
    /// Value and gradient at `x`.
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub grad_tolerance: f64,
    pub max_steps: usize,
    pub bound: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tolerance: 1e-6,
            max_steps: 200,
            bound: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Infinity norm of the projected gradient at `x`.
    pub grad_norm: f64,
    pub steps: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Coordinates moved onto the box boundary by projection.
    pub clamp_events: usize,
}

const ARMIJO_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_grad_norm(x: &[f64], g: &[f64], bound: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi >= bound && gi < 0.0) || (xi <= -bound && gi > 0.0) {
                0.0
            } else {
                gi.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Two-loop recursion: `-H_k g`.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let scale = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= scale;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub fn minimize<O: SmoothObjective>(objective: &mut O, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsOutcome> {
    let bound = opts.bound;
    let mut clamp_events = 0;
    let mut x: Vec<f64> = x0
        .into_iter()
        .map(|v| {
            let c = v.clamp(-bound, bound);
            if c != v {
                clamp_events += 1;
            }
            c
        })
        .collect();
    let (mut f, mut g) = objective.evaluate(&x)?;
    let mut evaluations = 1;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut steps = 0;
    let mut gnorm = projected_grad_norm(&x, &g, bound);

    while gnorm > opts.grad_tolerance && steps < opts.max_steps {
        let mut d = direction(&g, &history);
        if !(dot(&g, &d) < 0.0) {
            // stale curvature pairs; restart from steepest descent
            history.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let mut alpha = if history.is_empty() {
            (1.0 / g.iter().map(|v| v * v).sum::<f64>().sqrt()).min(1.0)
        } else {
            1.0
        };
        let noise = 1e-13 * f.abs().max(1.0);

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial_clamps = 0;
            let trial: Vec<f64> = x
                .iter()
                .zip(&d)
                .map(|(xi, di)| {
                    let v = xi + alpha * di;
                    let c = v.clamp(-bound, bound);
                    if c != v {
                        trial_clamps += 1;
                    }
                    c
                })
                .collect();
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            match objective.evaluate(&trial) {
                Ok((ft, gt)) if ft.is_finite() && gt.iter().all(|v| v.is_finite()) => {
                    evaluations += 1;
                    let armijo = ft <= f + ARMIJO_C1 * decrease;
                    // near the optimum the decrease drops below rounding noise in f;
                    // accept if f did not rise beyond noise and the slope flattened
                    let flat = ft <= f + noise && dot(&gt, &step).abs() <= WOLFE_C2 * decrease.abs();
                    if armijo || flat {
                        accepted = Some((trial, ft, gt, step, trial_clamps));
                        break;
                    }
                }
                Ok(_) | Err(_) => evaluations += 1,
            }
            alpha *= 0.5;
        }
        let Some((xn, fnew, gn, s, clamps)) = accepted else {
            break;
        };
        clamp_events += clamps;
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fnew;
        g = gn;
        steps += 1;
        gnorm = projected_grad_norm(&x, &g, bound);
    }

    Ok(LbfgsOutcome {
        converged: gnorm <= opts.grad_tolerance,
        x,
        value: f,
        grad: g,
        grad_norm: gnorm,
        steps,
        evaluations,
        clamp_events,
    })
}
