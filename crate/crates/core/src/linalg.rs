//! Dense complex kernels used on the hot path.
//!
//! Everything here works on column-major `DMatrix<Complex64>` storage and
//! touches only contiguous columns in the inner loops. The matrices involved
//! are at most a few hundred on a side, so plain loops beat any dispatch.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Solves are refused when the reciprocal condition estimate drops below this.
pub const RCOND_FLOOR: f64 = 1e-14;

/// Lower Cholesky factor `A = C C^H` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    chol: Cholesky<Complex64, Dyn>,
    rcond: f64,
}

impl HermitianFactor {
    /// Factors `a`, reading only its lower triangle.
    ///
    /// The condition estimate is `(min diag C / max diag C)^2`, which is a
    /// cheap lower bound on how far the factor is from singular for the
    /// diagonally dominated systems built in this crate.
    pub fn new(a: CMatrix, context: &'static str) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims(context, "square matrix", format!("{}x{}", n, a.ncols())));
        }
        let chol = Cholesky::new(a).ok_or(Error::IllConditioned { context, rcond: 0.0 })?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.re), hi.max(d.re)));
        let rcond = if n == 0 { 1.0 } else { (lo / hi).powi(2) };
        if !(rcond >= RCOND_FLOOR) {
            return Err(Error::IllConditioned { context, rcond });
        }
        Ok(Self { chol, rcond })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// The factor `C` with its strict upper triangle zeroed.
    pub fn lower(&self) -> CMatrix {
        self.chol.l()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>()
    }

    /// `B <- C^{-1} B`
    pub fn forward_in_place(&self, b: &mut CMatrix) {
        let ok = self.chol.l_dirty().solve_lower_triangular_mut(b);
        debug_assert!(ok, "positive pivots make the factor invertible");
    }

    /// `B <- C^{-H} B`
    pub fn backward_in_place(&self, b: &mut CMatrix) {
        let ok = self.chol.l_dirty().ad_solve_lower_triangular_mut(b);
        debug_assert!(ok, "positive pivots make the factor invertible");
    }

    /// `A^{-1} B`
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.chol.solve(b)
    }

    /// `trace(A^{-1}) = ||C^{-1}||_F^2`
    pub fn inverse_trace(&self) -> f64 {
        let n = self.dim();
        let mut inv = CMatrix::identity(n, n);
        self.forward_in_place(&mut inv);
        inv.as_slice().iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Lower triangle of `shift * I + H diag(weights) H^H`. The strict upper
/// triangle is left at zero.
pub fn weighted_gram_lower(h: &CMatrix, weights: &[f64], shift: f64) -> CMatrix {
    let m = h.nrows();
    let mut out = CMatrix::zeros(m, m);
    {
        let o = out.as_mut_slice();
        let hs = h.as_slice();
        for (n, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = &hs[n * m..(n + 1) * m];
            for j in 0..m {
                let c = col[j].conj() * w;
                let dst = &mut o[j * m + j..(j + 1) * m];
                for (d, &hi) in dst.iter_mut().zip(&col[j..]) {
                    *d += hi * c;
                }
            }
        }
        for j in 0..m {
            o[j * m + j].re += shift;
            o[j * m + j].im = 0.0;
        }
    }
    out
}

/// Copies the lower triangle onto the upper one (conjugated).
pub fn hermitian_from_lower(mut a: CMatrix) -> CMatrix {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            a[(i, j)] = a[(j, i)].conj();
        }
    }
    a
}

/// Squared 2-norm of every column.
pub fn column_norms_sqr(a: &CMatrix) -> Vec<f64> {
    let m = a.nrows();
    if m == 0 {
        return vec![0.0; a.ncols()];
    }
    a.as_slice()
        .chunks_exact(m)
        .map(|c| c.iter().map(|v| v.norm_sqr()).sum())
        .collect()
}

/// Squared 2-norm of every row.
pub fn row_norms_sqr(a: &CMatrix) -> Vec<f64> {
    let m = a.nrows();
    let mut out = vec![0.0; m];
    if m == 0 {
        return out;
    }
    for col in a.as_slice().chunks_exact(m) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += v.norm_sqr();
        }
    }
    out
}

pub fn frobenius_sqr(a: &CMatrix) -> f64 {
    a.as_slice().iter().map(|v| v.norm_sqr()).sum()
}

/// `H^H B`
pub fn adjoint_mul(h: &CMatrix, b: &CMatrix) -> CMatrix {
    let m = h.nrows();
    let mut out = CMatrix::zeros(h.ncols(), b.ncols());
    if m == 0 {
        return out;
    }
    let hs = h.as_slice();
    for l in 0..b.ncols() {
        let bcol = b.column(l);
        let bcol = bcol.as_slice();
        for (n, hcol) in hs.chunks_exact(m).enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (hv, bv) in hcol.iter().zip(bcol) {
                acc += hv.conj() * bv;
            }
            out[(n, l)] = acc;
        }
    }
    out
}

/// iid `CN(0, 1)` entries.
pub fn complex_normal(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

pub fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}
