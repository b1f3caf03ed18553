//! Seeded problem generators: random block-sparse signals with isolated
//! spikes, and extended sources seen by a half-wavelength uniform linear array.
//!
//! A generator draws everything from one `ChaCha8Rng` seeded with
//! `spec.seed`, so a spec fully determines its instance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::ProblemInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Measurements per snapshot.
    pub m: usize,
    /// Signal length.
    pub n: usize,
    /// Snapshots.
    pub l: usize,
    pub block_count: usize,
    pub block_length: usize,
    pub isolated_count: usize,
    /// `f64::INFINITY` generates a noiseless instance.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            m: 40,
            n: 300,
            l: 5,
            block_count: 3,
            block_length: 5,
            isolated_count: 5,
            snr_db: 25.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.l == 0 {
            return Err(Error::Generation("m, n and l must be positive".into()));
        }
        if self.block_count * self.block_length + self.isolated_count > self.n {
            return Err(Error::Generation(format!(
                "{} blocks of {} plus {} isolated entries do not fit in n = {}",
                self.block_count, self.block_length, self.isolated_count, self.n
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Generation(format!("invalid SNR {}", self.snr_db)));
        }
        Ok(())
    }
}

/// Noise variance that puts `||H X||_F^2 / (M L lambda)` at `snr_db`.
/// Infinite SNR gives zero.
pub fn noise_variance_for_snr(signal_energy: f64, m: usize, l: usize, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        signal_energy / ((m * l) as f64 * 10f64.powf(snr_db / 10.0))
    }
}

fn normalize_columns(h: &mut CMatrix) {
    for mut col in h.column_iter_mut() {
        let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

fn add_noise(
    h: &CMatrix,
    x: &CMatrix,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<(CMatrix, f64)> {
    let clean = h * x;
    let lambda = noise_variance_for_snr(linalg::frobenius_sqr(&clean), h.nrows(), x.ncols(), snr_db);
    if lambda == 0.0 {
        return Ok((clean, 0.0));
    }
    let noise = linalg::complex_normal(clean.nrows(), clean.ncols(), rng) * Complex64::new(lambda.sqrt(), 0.0);
    Ok((clean + noise, lambda))
}

/// Places `lengths` on `0..n` uniformly among the slots that keep at least
/// one empty index between any two components.
fn place_components(n: usize, lengths: &[usize], rng: &mut impl Rng) -> Option<Vec<usize>> {
    let mut blocked = vec![false; n];
    let mut support = Vec::new();
    for &len in lengths {
        let candidates: Vec<usize> = (0..=n.saturating_sub(len))
            .filter(|&s| s + len <= n && !blocked[s..s + len].iter().any(|&b| b))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let s = candidates[rng.random_range(0..candidates.len())];
        support.extend(s..s + len);
        let lo = s.saturating_sub(1);
        let hi = (s + len + 1).min(n);
        blocked[lo..hi].iter_mut().for_each(|b| *b = true);
    }
    support.sort_unstable();
    Some(support)
}

const PLACEMENT_RETRIES: usize = 100;

/// Complex Gaussian dictionary with unit-norm columns, `block_count`
/// contiguous blocks plus `isolated_count` singletons (none touching), CN(0,1)
/// nonzeros shared support across snapshots, and white noise at `snr_db`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ProblemInstance, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut h = linalg::complex_normal(spec.m, spec.n, &mut rng);
    normalize_columns(&mut h);

    let mut lengths = vec![spec.block_length; spec.block_count];
    lengths.extend(std::iter::repeat(1).take(spec.isolated_count));
    lengths.retain(|&len| len > 0);
    let support = (0..PLACEMENT_RETRIES)
        .find_map(|_| place_components(spec.n, &lengths, &mut rng))
        .ok_or_else(|| {
            Error::Generation(format!(
                "could not place {} blocks and {} isolated entries in n = {} after {PLACEMENT_RETRIES} attempts",
                spec.block_count, spec.isolated_count, spec.n
            ))
        })?;

    let values = linalg::complex_normal(support.len(), spec.l, &mut rng);
    let mut x = CMatrix::zeros(spec.n, spec.l);
    for (row, &idx) in support.iter().enumerate() {
        for l in 0..spec.l {
            x[(idx, l)] = values[(row, l)];
        }
    }
    let (y, lambda) = add_noise(&h, &x, spec.snr_db, &mut rng)?;
    let problem = ProblemInstance::new(h, y)?
        .with_ground_truth(x)?
        .with_noise_variance(lambda)?;
    Ok((problem, support))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoaSource {
    /// Closed interval in `u = sin(theta)`.
    pub u_interval: [f64; 2],
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoaSpec {
    /// Array elements.
    pub m: usize,
    /// Spacing of the `u` grid on `[-1, 1)`.
    pub grid_step: f64,
    pub sources: Vec<DoaSource>,
    /// Snapshots.
    pub l: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for DoaSpec {
    fn default() -> Self {
        Self {
            m: 20,
            grid_step: 0.01,
            sources: vec![
                DoaSource {
                    u_interval: [-0.5, -0.45],
                    amplitude: 1.0,
                },
                DoaSource {
                    u_interval: [0.0, 0.1],
                    amplitude: 0.5,
                },
            ],
            l: 40,
            snr_db: 15.0,
            seed: 0,
        }
    }
}

/// Grid points are admitted into a closed interval with this much slack
/// (in units of the grid step) to absorb rounding in `-1 + n * step`.
const SNAP_SLACK: f64 = 1e-9;

impl DoaSpec {
    pub fn grid_len(&self) -> Result<usize> {
        if !(self.grid_step > 0.0) {
            return Err(Error::Generation(format!("grid step must be positive, got {}", self.grid_step)));
        }
        let cells = 2.0 / self.grid_step;
        let n = cells.round();
        if (cells - n).abs() > 1e-6 || n < 1.0 {
            return Err(Error::Generation(format!(
                "grid step {} does not divide [-1, 1) evenly",
                self.grid_step
            )));
        }
        Ok(n as usize)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let n = self.grid_len()?;
        Ok((0..n).map(|i| -1.0 + i as f64 * self.grid_step).collect())
    }

    /// Grid indices inside each source's interval.
    pub fn source_cells(&self) -> Result<Vec<Vec<usize>>> {
        let grid = self.grid()?;
        let slack = SNAP_SLACK * self.grid_step;
        self.sources
            .iter()
            .map(|s| {
                let [lo, hi] = s.u_interval;
                let cells: Vec<usize> = grid
                    .iter()
                    .enumerate()
                    .filter(|(_, &u)| u >= lo - slack && u <= hi + slack)
                    .map(|(i, _)| i)
                    .collect();
                if cells.is_empty() {
                    Err(Error::Generation(format!("interval [{lo}, {hi}] contains no grid point")))
                } else {
                    Ok(cells)
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 {
            return Err(Error::Generation("m and l must be positive".into()));
        }
        self.grid_len()?;
        for s in &self.sources {
            let [lo, hi] = s.u_interval;
            if !(lo >= -1.0 && hi < 1.0 && lo <= hi) {
                return Err(Error::Generation(format!("interval [{lo}, {hi}] is not inside [-1, 1)")));
            }
            if !(s.amplitude > 0.0 && s.amplitude.is_finite()) {
                return Err(Error::Generation(format!("amplitude must be positive, got {}", s.amplitude)));
            }
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Generation(format!("invalid SNR {}", self.snr_db)));
        }
        Ok(())
    }
}

/// Unit-norm half-wavelength ULA steering vectors, element `m` of column `n`
/// being `exp(j pi m u_n) / sqrt(M)`.
pub fn steering_matrix(m: usize, grid: &[f64]) -> CMatrix {
    let scale = 1.0 / (m as f64).sqrt();
    CMatrix::from_fn(m, grid.len(), |row, col| {
        Complex64::from_polar(scale, PI * row as f64 * grid[col])
    })
}

/// Extended sources on a `u` grid: every grid cell inside a source interval
/// carries the source amplitude with an independent uniform phase per cell
/// and per snapshot.
pub fn generate_doa(spec: &DoaSpec) -> Result<(ProblemInstance, Vec<usize>)> {
    spec.validate()?;
    let grid = spec.grid()?;
    let cells = spec.source_cells()?;
    let h = steering_matrix(spec.m, &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut x = CMatrix::zeros(grid.len(), spec.l);
    for (source, idx) in spec.sources.iter().zip(&cells) {
        for &n in idx {
            for l in 0..spec.l {
                let phase = rng.random_range(0.0..2.0 * PI);
                x[(n, l)] += Complex64::from_polar(source.amplitude, phase);
            }
        }
    }
    let mut support: Vec<usize> = cells.into_iter().flatten().collect();
    support.sort_unstable();
    support.dedup();

    let (y, lambda) = add_noise(&h, &x, spec.snr_db, &mut rng)?;
    let problem = ProblemInstance::new(h, y)?
        .with_ground_truth(x)?
        .with_noise_variance(lambda)?;
    Ok((problem, support))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_defaults() {
        let (p, support) = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!((p.m(), p.n(), p.l()), (40, 300, 5));
        assert_eq!(support.len(), 20);
        for n in linalg::column_norms_sqr(p.h()) {
            assert!((n.sqrt() - 1.0).abs() < 1e-12);
        }
        let x = p.ground_truth().unwrap();
        let rows = linalg::row_norms_sqr(x);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(*r > 0.0, support.contains(&i));
        }
    }

    #[test]
    fn components_never_touch() {
        for seed in 0..50 {
            let spec = SyntheticSpec { seed, ..SyntheticSpec::default() };
            let (_, support) = generate_synthetic(&spec).unwrap();
            // split into runs of consecutive indices
            let mut runs = vec![1usize];
            for w in support.windows(2) {
                if w[1] == w[0] + 1 {
                    *runs.last_mut().unwrap() += 1;
                } else {
                    assert!(w[1] >= w[0] + 2);
                    runs.push(1);
                }
            }
            runs.sort_unstable();
            assert_eq!(runs, vec![1, 1, 1, 1, 1, 5, 5, 5], "seed {seed}");
        }
    }

    #[test]
    fn noiseless_flag() {
        let spec = SyntheticSpec {
            snr_db: f64::INFINITY,
            ..SyntheticSpec::default()
        };
        let (p, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(p.true_noise_variance(), Some(0.0));
        let clean = p.h() * p.ground_truth().unwrap();
        assert_eq!(&clean, p.y());
    }

    #[test]
    fn infeasible_packing_is_an_error() {
        let spec = SyntheticSpec {
            n: 20,
            block_count: 3,
            block_length: 5,
            isolated_count: 5,
            ..SyntheticSpec::default()
        };
        // 20 nonzeros fit the count check but not with gaps
        assert!(matches!(generate_synthetic(&spec), Err(Error::Generation(_))));
        let spec = SyntheticSpec { n: 10, ..SyntheticSpec::default() };
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn same_seed_same_instance() {
        let spec = SyntheticSpec { seed: 42, ..SyntheticSpec::default() };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 43, ..SyntheticSpec::default() };
        assert_ne!(generate_synthetic(&spec).unwrap().0, generate_synthetic(&other).unwrap().0);
    }

    #[test]
    fn doa_defaults() {
        let spec = DoaSpec::default();
        assert_eq!(spec.grid_len().unwrap(), 200);
        let cells = spec.source_cells().unwrap();
        assert_eq!(cells[0].len(), 6);
        assert_eq!(cells[1].len(), 11);
        let (p, support) = generate_doa(&spec).unwrap();
        assert_eq!(p.n(), 200);
        assert_eq!(support.len(), 17);
        let x = p.ground_truth().unwrap();
        for &n in &cells[0] {
            for l in 0..p.l() {
                assert!((x[(n, l)].norm() - 1.0).abs() < 1e-12);
            }
        }
        for &n in &cells[1] {
            for l in 0..p.l() {
                assert!((x[(n, l)].norm() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_columns() {
        let grid = DoaSpec::default().grid().unwrap();
        let h = steering_matrix(20, &grid);
        for col in h.column_iter() {
            for v in col.iter() {
                assert!((v.norm() * 20f64.sqrt() - 1.0).abs() < 1e-12);
            }
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doa_rejects_bad_specs() {
        let mut spec = DoaSpec::default();
        spec.grid_step = 0.03;
        assert!(generate_doa(&spec).is_err());
        let mut spec = DoaSpec::default();
        spec.sources[0].u_interval = [0.001, 0.002];
        assert!(generate_doa(&spec).is_err());
        let mut spec = DoaSpec::default();
        spec.sources[1].u_interval = [0.5, 1.0];
        assert!(generate_doa(&spec).is_err());
    }
}
