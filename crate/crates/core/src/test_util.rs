use num_complex::Complex64;
use rand::Rng;

use crate::linalg::CMatrix;
use crate::model::{Hyperparameters, ProblemInstance};

pub fn random_cmatrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hp(n: usize, rng: &mut impl Rng) -> Hyperparameters {
    let z = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    Hyperparameters::new(z, rng.random_range(-2.0..1.0)).unwrap()
}

pub fn random_problem(m: usize, n: usize, l: usize, rng: &mut impl Rng) -> ProblemInstance {
    let h = random_cmatrix(m, n, rng);
    let y = random_cmatrix(m, l, rng);
    ProblemInstance::new(h, y).unwrap()
}
