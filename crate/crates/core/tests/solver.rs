use expdol::linalg::CMatrix;
use expdol::model::{posterior_mean, DifferenceMatrix, Hyperparameters, ProblemInstance};
use expdol::objective::{cost_transformed, surrogate_cost, PriorConfig};
use expdol::solver::{
    admm_step1, admm_step2, admm_step3, run, soft_threshold, Diagnostics, ExpDolSolver, InnerSolverConfig,
    NoTrace, NoiseMode, SolverConfig, SolverState,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_problem(m: usize, n: usize, l: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = expdol::linalg::complex_normal(m, n, &mut rng);
    let y = expdol::linalg::complex_normal(m, l, &mut rng);
    ProblemInstance::new(h, y).unwrap()
}

fn state_for(problem: &ProblemInstance, hp: Hyperparameters, u: Vec<f64>, d: Vec<f64>) -> SolverState {
    let theta = posterior_mean(problem.h(), problem.y(), &hp).unwrap();
    SolverState {
        hp_prev: hp.clone(),
        hp,
        u,
        d,
        theta,
        outer_iter: 0,
        cost_trace: Vec::new(),
        diagnostics: Diagnostics::default(),
    }
}

/// Step-1 objective written out by hand for a single measurement (M = 1),
/// where the covariance is the scalar `e^b + sum |h_n|^2 e^{z_n}`.
fn scalar_step1(h: &[Complex64], y: Complex64, theta: &[Complex64], prior: PriorConfig, rho: f64, v: f64, x: [f64; 3]) -> f64 {
    let [z1, z2, b] = x;
    let sigma = b.exp() + h[0].norm_sqr() * z1.exp() + h[1].norm_sqr() * z2.exp();
    let resid = (y - h[0] * theta[0] - h[1] * theta[1]).norm_sqr();
    let a1 = prior.a0 + 1.0;
    sigma.ln()
        + (prior.b0 + resid) * (-b).exp()
        + (prior.b0 + theta[0].norm_sqr()) * (-z1).exp()
        + (prior.b0 + theta[1].norm_sqr()) * (-z2).exp()
        + a1 * (z1 + z2 + b)
        + 0.5 * rho * (z2 - z1 - v).powi(2)
}

#[test]
fn step1_matches_grid_search_on_scalar_toy() {
    let h = CMatrix::from_row_slice(1, 2, &[c(0.8, 0.3), c(-0.4, 0.9)]);
    let y = CMatrix::from_element(1, 1, c(1.1, -0.7));
    let problem = ProblemInstance::new(h.clone(), y.clone()).unwrap();
    let prior = PriorConfig { a0: 0.1, b0: 0.2 };
    let config = SolverConfig {
        prior,
        rho: 1.0,
        ..Default::default()
    };
    let state = state_for(&problem, Hyperparameters::new(vec![0.3, -0.2], 0.1).unwrap(), vec![0.4], vec![0.1]);
    let out = admm_step1(&problem, &state, &config).unwrap();

    let hs = [h[(0, 0)], h[(0, 1)]];
    let th = [state.theta[(0, 0)], state.theta[(1, 0)]];
    let f = |x: [f64; 3]| scalar_step1(&hs, y[(0, 0)], &th, prior, 1.0, 0.3, x);

    // zooming grid search, independent of the library's optimizer
    let mut centre = [0.0; 3];
    let mut width = 6.0;
    let mut best = f64::INFINITY;
    for _ in 0..30 {
        let mut next = centre;
        for i in -10..=10 {
            for j in -10..=10 {
                for k in -10..=10 {
                    let s = width / 10.0;
                    let x = [centre[0] + i as f64 * s, centre[1] + j as f64 * s, centre[2] + k as f64 * s];
                    let v = f(x);
                    if v < best {
                        best = v;
                        next = x;
                    }
                }
            }
        }
        centre = next;
        width *= 0.3;
    }
    let returned = f([out.hp.z[0], out.hp.z[1], out.hp.beta]);
    assert!((returned - out.value).abs() <= 1e-9 * best.abs().max(1.0), "{returned} vs {}", out.value);
    assert!((returned - best).abs() <= 1e-6 * best.abs().max(1.0), "{returned} vs grid {best}");
    assert!(out.value <= out.start_value);
    assert!(out.grad_norm <= config.inner_solver.grad_tolerance);
}

#[test]
fn step1_never_increases_the_objective() {
    for seed in 0..10 {
        let problem = random_problem(5, 8, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let hp = Hyperparameters::new((0..8).map(|_| rng.random_range(-2.0..2.0)).collect(), -0.5).unwrap();
        let u: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let state = state_for(&problem, hp, u, d);
        let out = admm_step1(&problem, &state, &SolverConfig::default()).unwrap();
        assert!(out.value <= out.start_value, "seed {seed}");
        assert!(out.converged, "seed {seed}");
    }
}

#[test]
fn step1_with_fixed_noise_keeps_beta() {
    let problem = random_problem(4, 6, 1, 9);
    let config = SolverConfig {
        noise_mode: NoiseMode::Fixed { log_variance: -1.25 },
        ..Default::default()
    };
    let state = state_for(&problem, Hyperparameters::constant(6, 0.0, -1.25), vec![0.0; 5], vec![0.0; 5]);
    let out = admm_step1(&problem, &state, &config).unwrap();
    assert_eq!(out.hp.beta, -1.25);
}

/// Proximal map of `kappa |x|`: bisection on the subgradient
/// `x - v + kappa sgn(x)`, which is increasing in `x`.
fn prox_oracle(v: f64, kappa: f64) -> f64 {
    let (mut a, mut b) = (-v.abs() - 1.0, v.abs() + 1.0);
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let slope = if mid > 0.0 {
            mid - v + kappa
        } else if mid < 0.0 {
            mid - v - kappa
        } else {
            // 0 is optimal iff |v| <= kappa
            if v.abs() <= kappa {
                return 0.0;
            }
            -v
        };
        if slope > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

#[test]
fn step2_matches_scalar_prox() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = 6;
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let d: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let config = SolverConfig {
            tau: rng.random_range(0.0..1.0),
            rho: rng.random_range(0.5..2.0),
            ..Default::default()
        };
        let mut state = state_for(&random_problem(2, n, 1, 1), Hyperparameters::new(z.clone(), 0.0).unwrap(), vec![0.0; n - 1], d.clone());
        state.hp.z = z.clone();
        let u = admm_step2(&state, &config);
        for i in 0..n - 1 {
            let expected = prox_oracle(z[i + 1] - z[i] + d[i], config.tau / config.rho);
            assert!((u[i] - expected).abs() < 1e-10);
        }
    }
}

#[test]
fn step2_and_step3_special_cases() {
    let problem = random_problem(2, 4, 1, 3);
    let config = SolverConfig::default();
    // constant z: u = S(d)
    let d = vec![0.5, -0.1, 0.3];
    let state = state_for(&problem, Hyperparameters::constant(4, 1.5, 0.0), vec![0.0; 3], d.clone());
    assert_eq!(admm_step2(&state, &config), soft_threshold(&d, 0.2));
    // tau = 0: u = D z + d
    let z = vec![0.0, 1.0, 3.0, 2.5];
    let mut state = state_for(&problem, Hyperparameters::new(z.clone(), 0.0).unwrap(), vec![0.0; 3], d.clone());
    let u = admm_step2(&state, &SolverConfig { tau: 0.0, ..config });
    assert_eq!(u, vec![1.0 + 0.5, 2.0 - 0.1, -0.5 + 0.3]);
    // u = D z leaves d alone
    state.u = DifferenceMatrix::new(4).unwrap().apply(&z);
    assert_eq!(admm_step3(&state), d);
    // d = 0, constant z, u = 0 keeps d at zero
    let state = state_for(&problem, Hyperparameters::constant(4, 2.0, 0.0), vec![0.0; 3], vec![0.0; 3]);
    assert_eq!(admm_step3(&state), vec![0.0; 3]);
}

#[test]
fn zero_measurements_give_zero_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = expdol::linalg::complex_normal(4, 6, &mut rng);
    let problem = ProblemInstance::new(h, CMatrix::zeros(4, 2)).unwrap();
    // Monotone only when each subproblem is solved exactly: with T = 1 the
    // u = d = 1 start shifts the second penalty by one and the cost can rise.
    let config = SolverConfig {
        tau: 0.0,
        inner_iters: 50,
        inner_solver: InnerSolverConfig {
            grad_tolerance: 1e-8,
            ..Default::default()
        },
        ..Default::default()
    };
    let r = run(&problem, &config).unwrap();
    assert!(r.x_hat.iter().all(|v| *v == c(0.0, 0.0)));
    let default_run = run(&problem, &SolverConfig { tau: 0.0, ..Default::default() }).unwrap();
    assert!(default_run.x_hat.iter().all(|v| *v == c(0.0, 0.0)));
    for w in r.cost_trace.windows(2) {
        assert!(w[1].total <= w[0].total + 1e-8 * w[0].total.abs().max(1.0));
    }
}

#[test]
fn fixed_noise_is_returned_exactly() {
    let problem = random_problem(6, 10, 2, 8);
    let lambda = 0.0371;
    let config = SolverConfig {
        noise_mode: NoiseMode::fixed_variance(lambda).unwrap(),
        ..Default::default()
    };
    let r = run(&problem, &config).unwrap();
    assert_eq!(r.hp.beta, lambda.ln());
    assert_eq!(r.lambda_hat, lambda.ln().exp());
}

#[test]
fn no_tv_weight_means_no_tv_cost() {
    let problem = random_problem(6, 10, 2, 4);
    let config = SolverConfig {
        tau: 0.0,
        ..Default::default()
    };
    let r = run(&problem, &config).unwrap();
    assert!(r.cost_trace.iter().all(|c| c.tv_term == 0.0));
}

#[test]
fn no_tv_weight_matches_plain_map_iteration() {
    // With tau = 0 the threshold is the identity, so d is zero after the
    // first inner iteration and the penalty turns into a proximal term
    // (rho/2)||D(z - z_prev)||^2 that vanishes at a fixed point. The
    // reference drops the penalty (rho -> 0), i.e. plain MM without TV.
    let problem = random_problem(6, 10, 2, 12);
    let base = SolverConfig {
        tau: 0.0,
        tolerance: 1e-6,
        max_outer_iters: 2000,
        inner_solver: InnerSolverConfig {
            grad_tolerance: 1e-10,
            max_inner_steps: 500,
        },
        ..Default::default()
    };
    let with_admm = run(&problem, &base).unwrap();
    let no_tv = run(&problem, &SolverConfig { rho: 1e-9, ..base }).unwrap();
    let num = expdol::linalg::frobenius_sqr(&(&with_admm.x_hat - &no_tv.x_hat));
    let den = expdol::linalg::frobenius_sqr(&no_tv.x_hat);
    assert!(num / den < 1e-6, "nse between variants {}", num / den);
}

#[test]
fn single_atom_runs_without_difference_operator() {
    let problem = random_problem(3, 1, 2, 21);
    let r = run(&problem, &SolverConfig::default()).unwrap();
    assert_eq!(r.x_hat.shape(), (1, 2));
    assert!(r.converged);
    assert!(r.cost_trace.iter().all(|c| c.tv_term == 0.0));
}

#[test]
fn identical_inputs_give_identical_results() {
    let problem = random_problem(8, 20, 3, 31);
    let a = run(&problem, &SolverConfig::default()).unwrap();
    let b = run(&problem, &SolverConfig::default()).unwrap();
    assert_eq!(a.x_hat, b.x_hat);
    assert_eq!(a.hp, b.hp);
    assert_eq!(a.cost_trace, b.cost_trace);
    assert_eq!(a.diagnostics, b.diagnostics);
}

#[test]
fn converged_run_satisfies_the_stopping_rule() {
    let problem = random_problem(8, 20, 3, 41);
    let config = SolverConfig::default();
    let mut solver = ExpDolSolver::new(&problem, config).unwrap();
    assert_eq!(solver.last_change(), 1.0);
    while !solver.is_done() {
        solver.step(&mut NoTrace).unwrap();
    }
    let s = solver.state();
    assert_eq!(s.cost_trace.len(), s.outer_iter);
    if solver.converged() {
        assert!(s.hp.max_change(&s.hp_prev, true) <= config.tolerance);
    }
}

#[test]
fn surrogate_dominates_along_the_iteration() {
    let problem = random_problem(6, 12, 2, 51);
    let config = SolverConfig {
        inner_iters: 5,
        ..Default::default()
    };
    let prior = config.prior;
    let mut solver = ExpDolSolver::new(&problem, config).unwrap();
    for _ in 0..15 {
        solver.step(&mut NoTrace).unwrap();
        let s = solver.state();
        let g_new = surrogate_cost(&problem, &s.hp, &s.theta, &prior, config.tau).unwrap().total;
        let f_new = cost_transformed(&problem, &s.hp, &prior, config.tau).unwrap().total;
        assert!(g_new >= f_new - 1e-9);
        let g_old = surrogate_cost(&problem, &s.hp_prev, &s.theta, &prior, config.tau).unwrap().total;
        let f_old = cost_transformed(&problem, &s.hp_prev, &prior, config.tau).unwrap().total;
        assert!((g_old - f_old).abs() <= 1e-8 * f_old.abs().max(1.0));
    }
}

#[test]
fn many_admm_iterations_drive_the_primal_residual_down() {
    let problem = random_problem(8, 16, 2, 61);
    let config = SolverConfig {
        inner_iters: 50,
        ..Default::default()
    };
    let r = run(&problem, &config).unwrap();
    assert!(r.diagnostics.primal_residual <= 1e-3 * (15f64).sqrt(), "{}", r.diagnostics.primal_residual);
}

#[test]
fn invalid_configs_are_rejected() {
    let problem = random_problem(3, 4, 1, 0);
    for bad in [
        SolverConfig { tau: -0.1, ..Default::default() },
        SolverConfig { rho: 0.0, ..Default::default() },
        SolverConfig { tolerance: 0.0, ..Default::default() },
        SolverConfig { inner_iters: 0, ..Default::default() },
    ] {
        assert!(run(&problem, &bad).is_err());
    }
    assert!(NoiseMode::fixed_variance(0.0).is_err());
    assert!(ExpDolSolver::with_start(&problem, SolverConfig::default(), Hyperparameters::constant(3, 0.0, 0.0)).is_err());
}

