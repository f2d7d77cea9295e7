//! Pathwise Riemann–Stieltjes transforms between `X`, `Y`, `M` and `W`.
//!
//! Integrands are evaluated at cell midpoints `s_j^* = (t_{j-1}+t_j)/2`, so
//! weights such as `s^{1/2-H}` or `(t-s)^{H-1/2}` are always finite. Kernels
//! that depend on `t - s` only are applied as causal convolutions via FFT; the
//! representation kernels of `X` go through a tabulated [`KernelTable`].

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{FbmError, Result};
use crate::exec::Execution;
use crate::grid::{HurstIndex, Role, SamplePath, TimeGrid};
use crate::kernels::{abel_const, KernelTable};

/// Evaluation node of a Riemann–Stieltjes sum within each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Left,
    Midpoint,
}

impl Scheme {
    fn node(self, grid: &TimeGrid, j: usize) -> f64 {
        match self {
            Scheme::Left => grid.time(j - 1),
            Scheme::Midpoint => grid.midpoint(j),
        }
    }
}

/// `Σ_{j ≤ k} f(s_j^*) (P(t_j) - P(t_{j-1}))` for every `k`.
pub fn rs_integrate(
    f: impl Fn(f64) -> f64,
    path: &SamplePath,
    scheme: Scheme,
) -> Result<SamplePath> {
    let grid = *path.grid();
    let vals = path.values();
    let mut out = Vec::with_capacity(grid.len());
    out.push(0.0);
    let mut acc = 0.0;
    for j in 1..=grid.n() {
        let s = scheme.node(&grid, j);
        let w = f(s);
        if !w.is_finite() {
            return Err(FbmError::NonFinite { node: j, time: s });
        }
        acc += w * (vals[j] - vals[j - 1]);
        out.push(acc);
    }
    Ok(SamplePath::from_parts(grid, out, Role::Other))
}

fn power_weighted(path: &SamplePath, exponent: f64, role: Role) -> Result<SamplePath> {
    if exponent == 0.0 {
        return Ok(path.clone().with_role(role));
    }
    Ok(rs_integrate(|s| s.powf(exponent), path, Scheme::Midpoint)?.with_role(role))
}

/// `Y_t = ∫_0^t s^{1/2-H} dX_s`.
pub fn y_process(x: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let e = if h.is_brownian() {
        0.0
    } else {
        0.5 - h.value()
    };
    power_weighted(x, e, Role::Y)
}

/// `X_t = ∫_0^t s^{H-1/2} dY_s`, the inverse of [`y_process`].
pub fn x_from_y(y: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let e = if h.is_brownian() { 0.0 } else { h.offset() };
    power_weighted(y, e, Role::X)
}

/// `W_t = ∫_0^t s^{H-1/2} dM_s`.
pub fn w_process(m: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let e = if h.is_brownian() { 0.0 } else { h.offset() };
    power_weighted(m, e, Role::W)
}

/// `out_m = Σ_{j=1}^{m} kernel[m-j] · inc[j-1]` for `m = 1..=n`, via FFT.
pub fn causal_convolution(kernel: &[f64], inc: &[f64]) -> Vec<f64> {
    let n = inc.len();
    assert_eq!(kernel.len(), n);
    let mut out = vec![0.0; n + 1];
    if n == 0 {
        return out;
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(if i < n { kernel[i] } else { 0.0 }, 0.0))
        .collect();
    let mut b: Vec<Complex64> = (0..size)
        .map(|i| Complex64::new(if i < n { inc[i] } else { 0.0 }, 0.0))
        .collect();
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let norm = 1.0 / size as f64;
    for m in 1..=n {
        out[m] = a[m - 1].re * norm;
    }
    out
}

/// Same sum as [`causal_convolution`], evaluated directly in O(n²).
pub fn causal_convolution_direct(kernel: &[f64], inc: &[f64]) -> Vec<f64> {
    let n = inc.len();
    let mut out = vec![0.0; n + 1];
    for m in 1..=n {
        out[m] = (1..=m).map(|j| kernel[m - j] * inc[j - 1]).sum();
    }
    out
}

/// Kernel `((i + 1/2)Δ)^e` for lags `i = 0..n`: a weight `(t_m - s)^e` at the
/// midpoint of the cell `m - i`.
fn lag_kernel(grid: &TimeGrid, e: f64) -> Vec<f64> {
    let d = grid.step();
    (0..grid.n())
        .map(|i| ((i as f64 + 0.5) * d).powf(e))
        .collect()
}

/// Fundamental martingale `M_t = ∫_0^t s^{1/2-H}(t-s)^{1/2-H} dX_s`.
pub fn fundamental_martingale(x: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let grid = *x.grid();
    if h.is_brownian() {
        return Ok(x.clone().with_role(Role::M));
    }
    let e = 0.5 - h.value();
    let weighted: Vec<f64> = x
        .increments()
        .iter()
        .enumerate()
        .map(|(j, d)| grid.midpoint(j + 1).powf(e) * d)
        .collect();
    let vals = causal_convolution(&lag_kernel(&grid, e), &weighted);
    Ok(SamplePath::from_parts(grid, vals, Role::M))
}

/// `M_t = ∫_0^t (t-s)^{1/2-H} dY_s` with `Y` from [`y_process`], summed directly.
pub fn fundamental_martingale_via_y(x: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let grid = *x.grid();
    let y = y_process(x, h)?;
    if h.is_brownian() {
        return Ok(y.with_role(Role::M));
    }
    let vals = causal_convolution_direct(&lag_kernel(&grid, 0.5 - h.value()), &y.increments());
    Ok(SamplePath::from_parts(grid, vals, Role::M))
}

/// Abel inversion `Y_t = abel_const(H) ∫_0^t (t-s)^{H-1/2} dM_s`.
pub fn y_from_m_abel(m: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let grid = *m.grid();
    if h.is_brownian() {
        return Ok(m.clone().with_role(Role::Y));
    }
    let c = abel_const(h);
    let kernel: Vec<f64> = lag_kernel(&grid, h.offset())
        .iter()
        .map(|k| c * k)
        .collect();
    let vals = causal_convolution(&kernel, &m.increments());
    Ok(SamplePath::from_parts(grid, vals, Role::Y))
}

/// `X_t = ∫_0^t K(t,u) dM_u` with the `H > 1/2` kernel
/// [`repxm_kernel`](crate::kernels::repxm_kernel).
pub fn x_from_m_high(m: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let table = KernelTable::repxm(*m.grid(), h, Execution::default())?;
    x_from_m_high_with(m, &table)
}

/// As [`x_from_m_high`] with a prebuilt table, for reuse across paths.
pub fn x_from_m_high_with(m: &SamplePath, table: &KernelTable) -> Result<SamplePath> {
    if m.grid() != table.grid() {
        return Err(FbmError::GridMismatch);
    }
    let vals = table.apply(&m.increments());
    Ok(SamplePath::from_parts(*m.grid(), vals, Role::X))
}

/// `X_t = abel_const(H) ∫_0^t z(t,s) dW_s` for `H < 1/2`.
pub fn x_from_w_low(w: &SamplePath, h: HurstIndex) -> Result<SamplePath> {
    let table = KernelTable::z_normalized(*w.grid(), h, Execution::default())?;
    x_from_w_low_with(w, &table)
}

pub fn x_from_w_low_with(w: &SamplePath, table: &KernelTable) -> Result<SamplePath> {
    if w.grid() != table.grid() {
        return Err(FbmError::GridMismatch);
    }
    let vals = table.apply(&w.increments());
    Ok(SamplePath::from_parts(*w.grid(), vals, Role::X))
}

/// Cumulative discrete bracket `Σ_{j ≤ k} (ΔP_j)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl BracketPath {
    /// Wraps bracket values; they must start at 0 and never decrease.
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || values[0] != 0.0 {
            return Err(FbmError::domain(
                "BracketPath::new",
                "bracket needs one value per grid point, starting at 0",
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(FbmError::domain(
                "BracketPath::new",
                "bracket must be non-decreasing",
            ));
        }
        Ok(BracketPath { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise mean of brackets on a common grid.
    pub fn mean(brackets: &[BracketPath]) -> Result<BracketPath> {
        let first = brackets
            .first()
            .ok_or_else(|| FbmError::domain("BracketPath::mean", "no brackets"))?;
        if brackets.iter().any(|b| b.grid != first.grid) {
            return Err(FbmError::GridMismatch);
        }
        let mut values = vec![0.0; first.values.len()];
        for b in brackets {
            for (acc, v) in values.iter_mut().zip(&b.values) {
                *acc += v;
            }
        }
        let inv = 1.0 / brackets.len() as f64;
        values.iter_mut().for_each(|v| *v *= inv);
        Ok(BracketPath {
            grid: first.grid,
            values,
        })
    }
}

pub fn empirical_bracket(path: &SamplePath) -> BracketPath {
    let mut values = Vec::with_capacity(path.values().len());
    values.push(0.0);
    let mut acc = 0.0;
    for d in path.increments() {
        acc += d * d;
        values.push(acc);
    }
    BracketPath {
        grid: *path.grid(),
        values,
    }
}
