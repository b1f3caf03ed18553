//! Measurement model `Y = H X + N` and the closed-form quantities built on it:
//! the measurement covariance and the posterior mean of `X`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianFactor};

/// A linear inverse problem with `M` sensors, `N` dictionary atoms and `L` snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    h: CMatrix,
    y: CMatrix,
    ground_truth: Option<CMatrix>,
    true_noise_variance: Option<f64>,
}

impl ProblemInstance {
    pub fn new(h: CMatrix, y: CMatrix) -> Result<Self> {
        if h.nrows() != y.nrows() {
            return Err(Error::dims("ProblemInstance", format!("Y with {} rows", h.nrows()), y.nrows()));
        }
        if h.nrows() == 0 || h.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::Contract("empty measurement model".into()));
        }
        if !linalg::all_finite(&h) || !linalg::all_finite(&y) {
            return Err(Error::Contract("non-finite entry in H or Y".into()));
        }
        Ok(Self {
            h,
            y,
            ground_truth: None,
            true_noise_variance: None,
        })
    }

    pub fn with_ground_truth(mut self, x: CMatrix) -> Result<Self> {
        if x.nrows() != self.n() || x.ncols() != self.l() {
            return Err(Error::dims(
                "ground truth",
                format!("{}x{}", self.n(), self.l()),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        if !linalg::all_finite(&x) {
            return Err(Error::Contract("non-finite ground truth".into()));
        }
        self.ground_truth = Some(x);
        Ok(self)
    }

    /// Attaches the variance used to draw the noise. Zero marks a noiseless
    /// instance; negative or non-finite values are rejected.
    pub fn with_noise_variance(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Contract(format!("noise variance must be >= 0, got {lambda}")));
        }
        self.true_noise_variance = Some(lambda);
        Ok(self)
    }

    /// Number of measurements per snapshot.
    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    /// Number of dictionary atoms.
    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// Number of snapshots.
    pub fn l(&self) -> usize {
        self.y.ncols()
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    pub fn ground_truth(&self) -> Option<&CMatrix> {
        self.ground_truth.as_ref()
    }

    pub fn true_noise_variance(&self) -> Option<f64> {
        self.true_noise_variance
    }
}

/// Log-domain hyperparameters: `gamma = exp(z)`, `lambda = exp(beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub z: Vec<f64>,
    pub beta: f64,
}

impl Hyperparameters {
    pub fn new(z: Vec<f64>, beta: f64) -> Result<Self> {
        let hp = Self { z, beta };
        hp.check_finite()?;
        Ok(hp)
    }

    pub fn constant(n: usize, z: f64, beta: f64) -> Self {
        Self { z: vec![z; n], beta }
    }

    pub fn from_variances(gamma: &[f64], lambda: f64) -> Result<Self> {
        if gamma.iter().any(|&g| !(g > 0.0)) || !(lambda > 0.0) {
            return Err(Error::Contract("variances must be strictly positive".into()));
        }
        Self::new(gamma.iter().map(|g| g.ln()).collect(), lambda.ln())
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.exp()).collect()
    }

    pub fn lambda(&self) -> f64 {
        self.beta.exp()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.beta.is_finite() && self.z.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Contract("non-finite hyperparameter".into()))
        }
    }

    /// `max(||z - other.z||_inf, |beta - other.beta|)`, optionally ignoring beta.
    pub fn max_change(&self, other: &Self, include_beta: bool) -> f64 {
        let dz = self
            .z
            .iter()
            .zip(&other.z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if include_beta {
            dz.max((self.beta - other.beta).abs())
        } else {
            dz
        }
    }
}

fn check_h_hp(h: &CMatrix, hp: &Hyperparameters) -> Result<()> {
    if h.ncols() != hp.z.len() {
        return Err(Error::dims("hyperparameters", format!("z of length {}", h.ncols()), hp.z.len()));
    }
    hp.check_finite()
}

/// `Sigma_Y = e^beta I + H diag(e^z) H^H`, full Hermitian.
pub fn assemble_covariance(h: &CMatrix, hp: &Hyperparameters) -> Result<CMatrix> {
    check_h_hp(h, hp)?;
    Ok(linalg::hermitian_from_lower(linalg::weighted_gram_lower(
        h,
        &hp.gamma(),
        hp.lambda(),
    )))
}

/// Cholesky factor of `Sigma_Y`.
pub fn covariance_factor(h: &CMatrix, hp: &Hyperparameters) -> Result<HermitianFactor> {
    check_h_hp(h, hp)?;
    HermitianFactor::new(
        linalg::weighted_gram_lower(h, &hp.gamma(), hp.lambda()),
        "measurement covariance",
    )
}

/// Posterior mean `Theta = e^-b (e^-b H^H H + diag(e^-z))^{-1} H^H Y`.
///
/// Uses the `M x M` form `diag(e^z) H^H Sigma_Y^{-1} Y` when `M < N`, the
/// direct `N x N` system otherwise.
pub fn posterior_mean(h: &CMatrix, y: &CMatrix, hp: &Hyperparameters) -> Result<CMatrix> {
    if h.nrows() < h.ncols() {
        posterior_mean_woodbury(h, y, hp)
    } else {
        posterior_mean_full(h, y, hp)
    }
}

/// The `N x N` Hermitian solve, exactly as the closed form reads.
pub fn posterior_mean_full(h: &CMatrix, y: &CMatrix, hp: &Hyperparameters) -> Result<CMatrix> {
    check_h_hp(h, hp)?;
    check_y(h, y)?;
    let n = h.ncols();
    let inv_lambda = (-hp.beta).exp();
    let mut a = linalg::adjoint_mul(h, h);
    a.scale_mut(inv_lambda);
    for (i, z) in hp.z.iter().enumerate() {
        a[(i, i)].re += (-z).exp();
    }
    let mut rhs = linalg::adjoint_mul(h, y);
    rhs.scale_mut(inv_lambda);
    debug_assert_eq!(a.nrows(), n);
    let factor = HermitianFactor::new(a, "posterior mean (N x N)")?;
    Ok(factor.solve(&rhs))
}

/// Matrix-inversion-lemma form, `diag(gamma) H^H Sigma_Y^{-1} Y`.
pub fn posterior_mean_woodbury(h: &CMatrix, y: &CMatrix, hp: &Hyperparameters) -> Result<CMatrix> {
    check_y(h, y)?;
    let factor = covariance_factor(h, hp)?;
    Ok(posterior_mean_with_factor(h, y, &hp.gamma(), &factor))
}

pub(crate) fn posterior_mean_with_factor(
    h: &CMatrix,
    y: &CMatrix,
    gamma: &[f64],
    factor: &HermitianFactor,
) -> CMatrix {
    let w = factor.solve(y);
    let mut theta = linalg::adjoint_mul(h, &w);
    for l in 0..theta.ncols() {
        for (n, g) in gamma.iter().enumerate() {
            theta[(n, l)] *= *g;
        }
    }
    theta
}

fn check_y(h: &CMatrix, y: &CMatrix) -> Result<()> {
    if h.nrows() != y.nrows() {
        return Err(Error::dims("measurements", format!("{} rows", h.nrows()), y.nrows()));
    }
    Ok(())
}

/// First-difference operator `D` of shape `(n-1) x n`, `(Dv)_i = v_{i+1} - v_i`.
///
/// Stored implicitly; `to_dense` materializes it for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceMatrix {
    n: usize,
}

impl DifferenceMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract(format!("difference matrix needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    /// Like `new` but allows `n < 2`, yielding an operator with no rows.
    pub(crate) fn possibly_empty(n: usize) -> Self {
        Self { n }
    }

    pub fn rows(&self) -> usize {
        self.n.saturating_sub(1)
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        v.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `D^T w` for `w` of length `n - 1`.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.rows());
        let mut out = vec![0.0; self.n];
        for (i, &wi) in w.iter().enumerate() {
            out[i] -= wi;
            out[i + 1] += wi;
        }
        out
    }

    /// `||D v||_1`
    pub fn l1(&self, v: &[f64]) -> f64 {
        v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows(), self.n);
        for i in 0..self.rows() {
            d[(i, i)] = -1.0;
            d[(i, i + 1)] = 1.0;
        }
        d
    }
}

/// Convenience for tests and examples: `diag(values)` as a complex matrix.
pub fn complex_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_cmatrix, random_hp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn covariance_of_identity_dictionary() {
        let h = CMatrix::identity(2, 2);
        let s = assemble_covariance(&h, &Hyperparameters::constant(2, 0.0, 0.0)).unwrap();
        assert!(rel(&s, &(CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0))) < 1e-15);

        let hp = Hyperparameters::new(vec![3f64.ln(), 3f64.ln()], 2f64.ln()).unwrap();
        let s = assemble_covariance(&h, &hp).unwrap();
        assert!(rel(&s, &(CMatrix::identity(2, 2) * Complex64::new(5.0, 0.0))) < 1e-14);
    }

    #[test]
    fn covariance_matches_column_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_cmatrix(4, 6, &mut rng);
        let hp = random_hp(6, &mut rng);
        let s = assemble_covariance(&h, &hp).unwrap();
        // brute force: e^b I + sum_n e^{z_n} h_n h_n^H
        let mut oracle = CMatrix::identity(4, 4) * Complex64::new(hp.beta.exp(), 0.0);
        for n in 0..6 {
            let col = h.column(n).into_owned();
            oracle += &col * col.adjoint() * Complex64::new(hp.z[n].exp(), 0.0);
        }
        assert!(rel(&s, &oracle) < 1e-13);
        // Hermitian and PD
        assert!((&s - s.adjoint()).norm() / s.norm() < 1e-12);
        let eig = s.clone().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn covariance_dimension_mismatch() {
        let h = CMatrix::identity(2, 3);
        assert!(matches!(
            assemble_covariance(&h, &Hyperparameters::constant(2, 0.0, 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn posterior_mean_zero_measurements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_cmatrix(3, 5, &mut rng);
        let y = CMatrix::zeros(3, 2);
        let theta = posterior_mean(&h, &y, &random_hp(5, &mut rng)).unwrap();
        assert!(theta.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn posterior_mean_identity_dictionary_is_shrinkage() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = CMatrix::identity(4, 4);
        let y = random_cmatrix(4, 3, &mut rng);
        let hp = random_hp(4, &mut rng);
        let theta = posterior_mean(&h, &y, &hp).unwrap();
        for n in 0..4 {
            let g = hp.z[n].exp();
            let w = g / (g + hp.beta.exp());
            for l in 0..3 {
                assert!((theta[(n, l)] - y[(n, l)] * w).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn posterior_mean_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let h = random_cmatrix(4, 6, &mut rng);
            let y = random_cmatrix(4, 2, &mut rng);
            let hp = random_hp(6, &mut rng);
            let lam_inv = Complex64::new((-hp.beta).exp(), 0.0);
            let prec = h.adjoint() * &h * lam_inv
                + complex_diag(&hp.z.iter().map(|z| (-z).exp()).collect::<Vec<_>>());
            let oracle = prec.try_inverse().unwrap() * h.adjoint() * &y * lam_inv;

            let full = posterior_mean_full(&h, &y, &hp).unwrap();
            let wood = posterior_mean_woodbury(&h, &y, &hp).unwrap();
            assert!(rel(&full, &oracle) < 1e-10);
            assert!(rel(&wood, &oracle) < 1e-10);
            assert!(rel(&wood, &full) < 1e-8);

            // normal equations residual
            let prec = h.adjoint() * &h * lam_inv
                + complex_diag(&hp.z.iter().map(|z| (-z).exp()).collect::<Vec<_>>());
            let lhs = &prec * &full;
            let rhs = h.adjoint() * &y * lam_inv;
            assert!(rel(&lhs, &rhs) < 1e-8);
        }
    }

    #[test]
    fn difference_matrix_shape_and_action() {
        let d = DifferenceMatrix::new(3).unwrap().to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]));
        assert_eq!(DifferenceMatrix::new(2).unwrap().apply(&[4.0, 9.0]), vec![5.0]);
        assert!(DifferenceMatrix::new(5).unwrap().apply(&[2.5; 5]).iter().all(|&v| v == 0.0));
        assert!(DifferenceMatrix::new(1).is_err());
        assert!(DifferenceMatrix::new(0).is_err());
    }

    #[test]
    fn difference_transpose_is_adjoint() {
        let d = DifferenceMatrix::new(6).unwrap();
        let v = [0.3, -1.0, 2.0, 0.5, 0.0, 7.0];
        let w = [1.0, -2.0, 0.5, 4.0, -0.25];
        let lhs: f64 = d.apply(&v).iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = d.apply_transpose(&w).iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn telescoping_on_monotone_logs() {
        let gamma = [0.01f64, 0.1, 0.5, 2.0, 30.0];
        let logs: Vec<f64> = gamma.iter().map(|g| g.ln()).collect();
        let d = DifferenceMatrix::new(5).unwrap();
        assert!((d.l1(&logs) - (30.0f64.ln() - 0.01f64.ln())).abs() < 1e-12);
    }
}
