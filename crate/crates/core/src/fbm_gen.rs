//! Exact simulation of fractional Brownian motion on uniform grids.
//!
//! Two samplers share the law `E[X_s X_t] = ½(t^{2H} + s^{2H} - |t-s|^{2H})`:
//! a Cholesky factorization of the full covariance (O(n³), kept as a reference)
//! and the Davies–Harte circulant embedding of fractional Gaussian noise
//! (O(n log n)). Path `i` of an ensemble draws its normals from ChaCha stream
//! `i` under the ensemble seed, so any path can be regenerated on its own.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{FbmError, Result};
use crate::exec::Execution;
use crate::grid::{HurstIndex, PathEnsemble, Role, SamplePath, TimeGrid};

/// Largest grid the Cholesky sampler accepts by default.
pub const CHOLESKY_CAP: usize = 4096;

/// Relative tolerance below which negative circulant eigenvalues are clamped.
pub const EIGEN_TOLERANCE: f64 = 1e-9;

/// `E[X_s X_t]` for fBm with index `h`.
pub fn fbm_covariance(s: f64, t: f64, h: HurstIndex) -> Result<f64> {
    if s < 0.0 || s.is_nan() {
        return Err(FbmError::NegativeTime(s));
    }
    if t < 0.0 || t.is_nan() {
        return Err(FbmError::NegativeTime(t));
    }
    let e = 2.0 * h.value();
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Autocovariance at lag `k` of unit-spaced fractional Gaussian noise.
pub fn fgn_autocovariance(k: usize, h: HurstIndex) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let e = 2.0 * h.value();
    let k = k as f64;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).powf(e))
}

/// Covariance matrix of `(X_{t_1}, …, X_{t_n})`.
pub fn covariance_matrix(grid: &TimeGrid, h: HurstIndex) -> DMatrix<f64> {
    let n = grid.n();
    let e = 2.0 * h.value();
    let pw: Vec<f64> = (0..=n).map(|k| grid.time(k).powf(e)).collect();
    let step_pw: Vec<f64> = (0..=n).map(|k| (grid.step() * k as f64).powf(e)).collect();
    DMatrix::from_fn(n, n, |i, j| {
        0.5 * (pw[i + 1] + pw[j + 1] - step_pw[i.abs_diff(j)])
    })
}

/// Random source for path `index` of the ensemble with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn degenerate_ensemble(grid: TimeGrid, h: HurstIndex, seed: u64, n_paths: usize) -> PathEnsemble {
    let paths = (0..n_paths)
        .map(|_| SamplePath::from_parts(grid, vec![0.0], Role::X))
        .collect();
    PathEnsemble::new(grid, paths, seed, h).expect("paths share the grid")
}

/// Exact sampler via the Cholesky factor of the covariance matrix.
pub fn generate_cholesky(
    grid: TimeGrid,
    h: HurstIndex,
    seed: u64,
    n_paths: usize,
) -> Result<PathEnsemble> {
    generate_cholesky_with(grid, h, seed, n_paths, CHOLESKY_CAP, Execution::default())
}

pub fn generate_cholesky_with(
    grid: TimeGrid,
    h: HurstIndex,
    seed: u64,
    n_paths: usize,
    cap: usize,
    exec: Execution,
) -> Result<PathEnsemble> {
    let n = grid.n();
    if n > cap {
        return Err(FbmError::GridTooLarge { n, cap });
    }
    if n == 0 {
        return Ok(degenerate_ensemble(grid, h, seed, n_paths));
    }
    let chol = covariance_matrix(&grid, h)
        .cholesky()
        .ok_or(FbmError::FactorizationFailed {
            hurst: h.value(),
            n,
        })?;
    let lower = chol.l();
    let paths = exec.map(n_paths, |i| {
        let mut rng = path_rng(seed, i as u64);
        let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        let x = &lower * z;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(x.iter().copied());
        SamplePath::from_parts(grid, values, Role::X)
    });
    PathEnsemble::new(grid, paths, seed, h)
}

/// Size of the circulant embedding for `n` noise values.
pub fn circulant_size(n: usize) -> usize {
    (2 * n).next_power_of_two()
}

/// Eigenvalues of the circulant matrix whose first row embeds the fGn
/// autocovariance `γ(0..=N/2)`, `N = circulant_size(n)`, unclamped.
pub fn circulant_eigenvalues(n: usize, h: HurstIndex) -> Vec<f64> {
    let size = circulant_size(n);
    let half = size / 2;
    let mut row: Vec<Complex64> = (0..size)
        .map(|k| Complex64::new(fgn_autocovariance(k.min(size - k).min(half), h), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut row);
    row.iter().map(|c| c.re).collect()
}

/// Precomputed circulant embedding for one `(n, H)`.
pub struct DaviesHarte {
    n: usize,
    scale: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl DaviesHarte {
    pub fn new(n: usize, h: HurstIndex) -> Result<Self> {
        if n == 0 {
            return Err(FbmError::domain(
                "generate_davies_harte",
                "grid needs n >= 1",
            ));
        }
        let eig = circulant_eigenvalues(n, h);
        let size = eig.len();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        if min < -EIGEN_TOLERANCE * max {
            return Err(FbmError::NegativeEigenvalue {
                value: min,
                max,
                hurst: h.value(),
                n,
            });
        }
        let scale = eig
            .iter()
            .map(|&l| (l.max(0.0) / size as f64).sqrt())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        Ok(DaviesHarte { n, scale, fft })
    }

    /// `n` values of unit-spaced fGn drawn from `rng`.
    pub fn sample_noise<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

/// Exact sampler via circulant embedding of fractional Gaussian noise.
pub fn generate_davies_harte(
    grid: TimeGrid,
    h: HurstIndex,
    seed: u64,
    n_paths: usize,
) -> Result<PathEnsemble> {
    generate_davies_harte_with(grid, h, seed, n_paths, Execution::default())
}

pub fn generate_davies_harte_with(
    grid: TimeGrid,
    h: HurstIndex,
    seed: u64,
    n_paths: usize,
    exec: Execution,
) -> Result<PathEnsemble> {
    let dh = DaviesHarte::new(grid.n(), h)?;
    // self-similarity: a step of length Δ scales unit noise by Δ^H
    let scale = grid.step().powf(h.value());
    let paths = exec.map(n_paths, |i| {
        let mut rng = path_rng(seed, i as u64);
        let noise = dh.sample_noise(&mut rng);
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        values.push(0.0);
        for z in noise {
            acc += scale * z;
            values.push(acc);
        }
        SamplePath::from_parts(grid, values, Role::X)
    });
    PathEnsemble::new(grid, paths, seed, h)
}
