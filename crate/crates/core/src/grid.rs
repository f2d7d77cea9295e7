//! Domain types shared by every module: the Hurst index, uniform time grids
//! and paths observed on them.

use serde::{Deserialize, Serialize};

use crate::error::{FbmError, Result};

/// Self-similarity index, restricted to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstIndex(f64);

impl HurstIndex {
    /// Values within this distance of 1/2 use the Brownian (identity) kernels.
    pub const HALF_TOLERANCE: f64 = 1e-6;

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(HurstIndex(value))
        } else {
            Err(FbmError::InvalidHurst(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `H - 1/2`.
    #[inline]
    pub fn offset(self) -> f64 {
        self.0 - 0.5
    }

    /// True when H is close enough to 1/2 that every kernel collapses to 1.
    #[inline]
    pub fn is_brownian(self) -> bool {
        (self.0 - 0.5).abs() < Self::HALF_TOLERANCE
    }

    /// The reflected index `1 - H`.
    pub fn dual(self) -> Self {
        HurstIndex(1.0 - self.0)
    }
}

impl TryFrom<f64> for HurstIndex {
    type Error = FbmError;

    fn try_from(value: f64) -> Result<Self> {
        HurstIndex::new(value)
    }
}

impl From<HurstIndex> for f64 {
    fn from(h: HurstIndex) -> f64 {
        h.0
    }
}

/// Uniform partition `t_k = t·k/n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(FbmError::InvalidHorizon(horizon));
        }
        Ok(TimeGrid { horizon, n })
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps; the grid has `n + 1` points.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh `t/n`. Zero for the degenerate `n = 0` grid.
    #[inline]
    pub fn step(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.horizon / self.n as f64
        }
    }

    /// `t_k`, computed as `t·k/n` so that `t_n == t` exactly.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.horizon
        } else {
            self.horizon * k as f64 / self.n as f64
        }
    }

    /// Midpoint of the `j`-th cell `(t_{j-1}, t_j)`, `j = 1..=n`.
    #[inline]
    pub fn midpoint(&self, j: usize) -> f64 {
        self.horizon * (j as f64 - 0.5) / self.n as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }

    /// Grid index of time `s` if `n·s/t` is an integer (to rounding).
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let x = s / self.horizon * self.n as f64;
        let k = x.round();
        if (x - k).abs() <= 1e-9 * (1.0 + x.abs()) && k >= 0.0 && k <= self.n as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// The grid with every `factor`-th point, if `factor` divides `n`.
    pub fn coarsen(&self, factor: usize) -> Option<TimeGrid> {
        (factor > 0 && self.n.is_multiple_of(factor)).then(|| TimeGrid {
            horizon: self.horizon,
            n: self.n / factor,
        })
    }

    /// The first `k` steps as a grid on `[0, t_k]`.
    pub fn prefix(&self, k: usize) -> Option<TimeGrid> {
        (k >= 1 && k <= self.n).then(|| TimeGrid {
            horizon: self.time(k),
            n: k,
        })
    }
}

/// Which process a path holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    X,
    Y,
    M,
    W,
    Other,
}

/// A process observed on a uniform grid, stored as levels `values[k] = P(t_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    role: Role,
}

impl SamplePath {
    /// Wraps `values`; they must have one entry per grid point and start at 0.
    pub fn new(grid: TimeGrid, values: Vec<f64>, role: Role) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FbmError::domain(
                "SamplePath::new",
                format!(
                    "{} values for a grid of {} points",
                    values.len(),
                    grid.len()
                ),
            ));
        }
        if values[0] != 0.0 {
            return Err(FbmError::domain(
                "SamplePath::new",
                format!("path must start at 0, got {}", values[0]),
            ));
        }
        Ok(SamplePath { grid, values, role })
    }

    /// Cumulative sum of `increments` (one per cell), starting from 0.
    pub fn from_increments(grid: TimeGrid, increments: &[f64], role: Role) -> Result<Self> {
        if increments.len() != grid.n() {
            return Err(FbmError::domain(
                "SamplePath::from_increments",
                format!("{} increments for n={}", increments.len(), grid.n()),
            ));
        }
        let mut values = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        values.push(0.0);
        for d in increments {
            acc += d;
            values.push(acc);
        }
        Ok(SamplePath { grid, values, role })
    }

    /// Samples `f` at every grid point; `f(0)` is forced to 0.
    pub fn from_fn(grid: TimeGrid, role: Role, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = (0..=grid.n()).map(|k| f(grid.time(k))).collect();
        values[0] = 0.0;
        SamplePath { grid, values, role }
    }

    pub(crate) fn from_parts(grid: TimeGrid, values: Vec<f64>, role: Role) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SamplePath { grid, values, role }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `ΔP_j = P(t_j) - P(t_{j-1})` for `j = 1..=n`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn scaled(&self, c: f64) -> SamplePath {
        SamplePath {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            role: self.role,
        }
    }

    /// Keeps every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Option<SamplePath> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Some(SamplePath {
            grid,
            values,
            role: self.role,
        })
    }

    /// Restriction to `[0, t_k]`.
    pub fn prefix(&self, k: usize) -> Option<SamplePath> {
        let grid = self.grid.prefix(k)?;
        Some(SamplePath {
            grid,
            values: self.values[..=k].to_vec(),
            role: self.role,
        })
    }

    /// `a·self + b·other`, both on the same grid.
    pub fn combine(&self, a: f64, other: &SamplePath, b: f64) -> Result<SamplePath> {
        if self.grid != other.grid {
            return Err(FbmError::GridMismatch);
        }
        Ok(SamplePath {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            role: self.role,
        })
    }
}

/// `N` independent paths on one grid. Path `i` is reproducible from `(seed, i)`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    paths: Vec<SamplePath>,
    seed: u64,
    hurst: HurstIndex,
}

impl PathEnsemble {
    pub fn new(
        grid: TimeGrid,
        paths: Vec<SamplePath>,
        seed: u64,
        hurst: HurstIndex,
    ) -> Result<Self> {
        if paths.iter().any(|p| *p.grid() != grid) {
            return Err(FbmError::GridMismatch);
        }
        Ok(PathEnsemble {
            grid,
            paths,
            seed,
            hurst,
        })
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn paths(&self) -> &[SamplePath] {
        &self.paths
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The index the paths were generated with.
    #[inline]
    pub fn hurst(&self) -> HurstIndex {
        self.hurst
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Every path keeps every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Option<PathEnsemble> {
        let grid = self.grid.coarsen(factor)?;
        let paths = self
            .paths
            .iter()
            .map(|p| p.coarsen(factor))
            .collect::<Option<Vec<_>>>()?;
        Some(PathEnsemble {
            grid,
            paths,
            seed: self.seed,
            hurst: self.hurst,
        })
    }

    /// Values at grid index `k` across the ensemble.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.values()[k]).collect()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> PathEnsemble {
        let paths = self
            .paths
            .iter()
            .map(|p| {
                SamplePath::from_parts(p.grid, p.values.iter().map(|&v| f(v)).collect(), p.role)
            })
            .collect();
        PathEnsemble {
            grid: self.grid,
            paths,
            seed: self.seed,
            hurst: self.hurst,
        }
    }
}
