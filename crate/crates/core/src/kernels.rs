//! Kernels and constants of the fundamental-martingale transforms.
//!
//! Closed forms where they exist; the remaining kernels are integrals of
//! `x^β (x - c)^γ` evaluated by [`PowerPairQuadrature`]. For `H` within
//! [`HurstIndex::HALF_TOLERANCE`] of 1/2 every kernel is the constant 1.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{FbmError, Result};
use crate::exec::Execution;
use crate::grid::{HurstIndex, TimeGrid};
use crate::quadrature::{tanh_sinh, PowerPairQuadrature, DEFAULT_NODES};
use crate::special::{beta, gamma};

thread_local! {
    static QUAD_CACHE: RefCell<HashMap<(u64, u64, usize), Rc<PowerPairQuadrature>>> =
        RefCell::new(HashMap::new());
}

fn with_quad<R>(
    beta: f64,
    gamma: f64,
    nodes: usize,
    f: impl FnOnce(&PowerPairQuadrature) -> R,
) -> R {
    let q = QUAD_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry((beta.to_bits(), gamma.to_bits(), nodes))
            .or_insert_with(|| Rc::new(PowerPairQuadrature::new(beta, gamma, nodes)))
            .clone()
    });
    f(&q)
}

/// Molchan weight `s^{1/2-H} (t-s)^{1/2-H}`, `0 < s < t`.
pub fn molchan_kernel(t: f64, s: f64, h: HurstIndex) -> Result<f64> {
    if !(s > 0.0 && s < t) {
        return Err(FbmError::domain(
            "molchan_kernel",
            format!("need 0 < s < t, got s={s}, t={t}"),
        ));
    }
    if h.is_brownian() {
        return Ok(1.0);
    }
    let e = 0.5 - h.value();
    Ok((s * (t - s)).powf(e))
}

/// `B_1 = B(H - 1/2, 3/2 - H)`; the arguments sum to one so this is
/// `π / sin(π(H - 1/2))`. Defined for `H > 1/2` only.
pub fn beta_b1(h: HurstIndex) -> Result<f64> {
    if h.value() <= 0.5 {
        return Err(FbmError::domain(
            "beta_b1",
            format!("B(H-1/2, 3/2-H) diverges for H <= 1/2, got H={}", h.value()),
        ));
    }
    Ok(beta(h.offset(), 1.0 - h.offset()))
}

/// Constant of the Abel inversion `Y = c ∫ (t-s)^{H-1/2} dM`:
/// `1 / (Γ(H+1/2) Γ(3/2-H))`.
pub fn abel_const(h: HurstIndex) -> f64 {
    1.0 / (gamma(h.value() + 0.5) * gamma(1.5 - h.value()))
}

/// Kernel of `X_t = ∫_0^t K(t,u) dM_u` for `H > 1/2`:
/// `K(t,u) = (1/B_1) ∫_u^t s^{H-1/2} (s-u)^{H-3/2} ds`, `0 ≤ u < t`.
pub fn repxm_kernel(t: f64, u: f64, h: HurstIndex) -> Result<f64> {
    repxm_kernel_with(t, u, h, DEFAULT_NODES)
}

pub fn repxm_kernel_with(t: f64, u: f64, h: HurstIndex, nodes: usize) -> Result<f64> {
    if h.value() <= 0.5 {
        return Err(FbmError::domain(
            "repxm_kernel",
            format!("requires H > 1/2, got H={}", h.value()),
        ));
    }
    if !(u >= 0.0 && u < t) {
        return Err(FbmError::domain(
            "repxm_kernel",
            format!("need 0 <= u < t, got u={u}, t={t}"),
        ));
    }
    if h.is_brownian() {
        return Ok(1.0);
    }
    let a = h.offset();
    let b1 = beta_b1(h)?;
    Ok(with_quad(a, a - 1.0, nodes, |q| q.integrate(u, u, t)) / b1)
}

/// Kernel of the `H < 1/2` representation through `W`:
/// `z(t,s) = (s/t)^{1/2-H}(t-s)^{H-1/2} - (H-1/2) s^{1/2-H} ∫_s^t u^{H-3/2}(u-s)^{H-1/2} du`.
///
/// This is the kernel exactly as written; the representation
/// `X_t = ∫ z(t,s) dW_s` holds after multiplying by [`abel_const`] when `M`
/// is normalized as `∫ s^{1/2-H}(t-s)^{1/2-H} dX`.
pub fn z_kernel(t: f64, s: f64, h: HurstIndex) -> Result<f64> {
    z_kernel_with(t, s, h, DEFAULT_NODES)
}

pub fn z_kernel_with(t: f64, s: f64, h: HurstIndex, nodes: usize) -> Result<f64> {
    if h.value() >= 0.5 {
        return Err(FbmError::domain(
            "z_kernel",
            format!("requires H < 1/2, got H={}", h.value()),
        ));
    }
    if !(s > 0.0 && s < t) {
        return Err(FbmError::domain(
            "z_kernel",
            format!("need 0 < s < t, got s={s}, t={t}"),
        ));
    }
    Ok(z_eval(t, s, t - s, h, nodes))
}

/// `z(t, s)` with `t - s` supplied separately so it can be evaluated right
/// next to the diagonal.
fn z_eval(t: f64, s: f64, gap: f64, h: HurstIndex, nodes: usize) -> f64 {
    if h.is_brownian() {
        return 1.0;
    }
    let b = 0.5 - h.value();
    let lead = (s / t).powf(b) * gap.powf(-b);
    let corr = with_quad(h.value() - 1.5, h.offset(), nodes, |q| q.integrate(s, s, t));
    lead + b * s.powf(b) * corr
}

/// A cell `(t_{k-1}, t_k]` of a uniform grid.
#[derive(Debug, Clone, Copy)]
pub struct PartitionContext {
    grid: TimeGrid,
    k: usize,
}

impl PartitionContext {
    pub fn new(grid: TimeGrid, k: usize) -> Result<Self> {
        if k == 0 || k > grid.n() {
            return Err(FbmError::domain(
                "PartitionContext",
                format!("cell index k={k} outside 1..={}", grid.n()),
            ));
        }
        Ok(PartitionContext { grid, k })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `(t_{k-1}, t_k)`.
    pub fn cell(&self) -> (f64, f64) {
        (self.grid.time(self.k - 1), self.grid.time(self.k))
    }
}

/// `f_k^t(s) = ∫_{t_{k-1}}^{t_k} u^{H-1/2}(u-s)^{H-3/2} du`, `H > 1/2`, `0 ≤ s < t_{k-1}`.
pub fn partition_kernel_f(ctx: &PartitionContext, s: f64, h: HurstIndex) -> Result<f64> {
    partition_kernel_f_with(ctx, s, h, DEFAULT_NODES)
}

pub fn partition_kernel_f_with(
    ctx: &PartitionContext,
    s: f64,
    h: HurstIndex,
    nodes: usize,
) -> Result<f64> {
    if h.value() <= 0.5 {
        return Err(FbmError::domain(
            "partition_kernel_f",
            format!("requires H > 1/2, got H={}", h.value()),
        ));
    }
    let (lo, hi) = ctx.cell();
    if !(s >= 0.0 && s < lo) {
        return Err(FbmError::domain(
            "partition_kernel_f",
            format!("need 0 <= s < t_(k-1) = {lo}, got s={s}"),
        ));
    }
    let a = h.offset();
    Ok(with_quad(a, a - 1.0, nodes, |q| q.integrate(s, lo, hi)))
}

/// Selects between the two cell kernels of [`partition_kernel_g_p`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKernel {
    /// `g_k^t(s) = ∫_s^{t_k} u^{H-1/2}(u-s)^{H-3/2} du`, `H > 1/2`, `t_{k-1} ≤ s < t_k`.
    G,
    /// `p_k^t(s) = ∫_{t_{k-1}}^{t_k} (s/u)^{1/2-H}(u-s)^{H-3/2} du`, `H < 1/2`, `0 < s < t_{k-1}`.
    P,
}

pub fn partition_kernel_g_p(
    ctx: &PartitionContext,
    s: f64,
    h: HurstIndex,
    which: CellKernel,
) -> Result<f64> {
    partition_kernel_g_p_with(ctx, s, h, which, DEFAULT_NODES)
}

pub fn partition_kernel_g_p_with(
    ctx: &PartitionContext,
    s: f64,
    h: HurstIndex,
    which: CellKernel,
    nodes: usize,
) -> Result<f64> {
    let (lo, hi) = ctx.cell();
    match which {
        CellKernel::G => {
            if h.value() <= 0.5 {
                return Err(FbmError::domain(
                    "partition_kernel_g",
                    format!("requires H > 1/2, got H={}", h.value()),
                ));
            }
            if !(s >= lo && s <= hi) {
                return Err(FbmError::domain(
                    "partition_kernel_g",
                    format!("need t_(k-1) <= s < t_k, got s={s} outside [{lo}, {hi})"),
                ));
            }
            let a = h.offset();
            Ok(with_quad(a, a - 1.0, nodes, |q| q.integrate(s, s, hi)))
        }
        CellKernel::P => {
            if h.value() >= 0.5 {
                return Err(FbmError::domain(
                    "partition_kernel_p",
                    format!("requires H < 1/2, got H={}", h.value()),
                ));
            }
            if !(s > 0.0 && s < lo) {
                return Err(FbmError::domain(
                    "partition_kernel_p",
                    format!("need 0 < s < t_(k-1) = {lo}, got s={s}"),
                ));
            }
            let b = 0.5 - h.value();
            let v = with_quad(-b, h.value() - 1.5, nodes, |q| q.integrate(s, lo, hi));
            Ok(s.powf(b) * v)
        }
    }
}

/// Per-index constants of the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub hurst: HurstIndex,
    /// `B(H-1/2, 3/2-H)`, present for `H > 1/2`.
    pub b1: Option<f64>,
    pub abel_c: f64,
    /// `c_H` with `Var(M_t) = [M]_t = c_H t^{2-2H}`.
    pub molchan_bracket_c: f64,
}

impl KernelConstants {
    pub fn new(h: HurstIndex) -> Self {
        KernelConstants {
            hurst: h,
            b1: beta_b1(h).ok(),
            abel_c: abel_const(h),
            molchan_bracket_c: molchan_bracket_constant(h),
        }
    }
}

/// `c_H = Var(M_1)`, from `Var(X_1) = 1` and the representation of `X` by `M`:
/// `1 = c_H (2-2H) ∫_0^1 K(1,u)^2 u^{1-2H} du` for `H > 1/2` and
/// `1 = c_H (2-2H) ∫_0^1 (abel_const · z(1,s))^2 ds` for `H < 1/2`.
pub fn molchan_bracket_constant(h: HurstIndex) -> f64 {
    if h.is_brownian() {
        return 1.0;
    }
    let hv = h.value();
    let integral = if hv > 0.5 {
        let a = h.offset();
        let b1 = beta_b1(h).expect("H > 1/2");
        with_quad(a, a - 1.0, DEFAULT_NODES, |q| {
            tanh_sinh(0.0, 1.0, 1e-13, |u, dl, _dr| {
                let k = q.integrate(u, u, 1.0) / b1;
                k * k * dl.powf(1.0 - 2.0 * hv)
            })
        })
    } else {
        let c = abel_const(h);
        tanh_sinh(0.0, 1.0, 1e-13, |s, _dl, dr| {
            let z = c * z_eval(1.0, s, dr, h, DEFAULT_NODES);
            z * z
        })
    };
    1.0 / ((2.0 - 2.0 * hv) * integral)
}

/// Lower-triangular kernel values `K(t_m, s_j^*)` for `1 ≤ j ≤ m ≤ n` at cell
/// midpoints `s_j^* = (t_{j-1} + t_j)/2`, stored column by column.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: TimeGrid,
    data: Vec<f64>,
}

/// Nodes per panel used when tabulating kernels.
pub const TABLE_NODES: usize = 16;

impl KernelTable {
    fn column_offset(n: usize, j: usize) -> usize {
        // columns j' < j hold n - j' entries each (0-based j')
        j * n - j * (j.saturating_sub(1)) / 2
    }

    fn build(
        grid: TimeGrid,
        exec: Execution,
        fill: impl Fn(usize, &mut [f64]) + Sync + Send,
    ) -> Self {
        let n = grid.n();
        let mut data = vec![0.0; n * (n + 1) / 2];
        let mut cols: Vec<&mut [f64]> = Vec::with_capacity(n);
        let mut rest: &mut [f64] = &mut data;
        for j in 0..n {
            let (col, tail) = rest.split_at_mut(n - j);
            cols.push(col);
            rest = tail;
        }
        exec.for_each_mut(cols, fill);
        KernelTable { grid, data }
    }

    /// `K(t_m, u_j^*)` of the `H > 1/2` representation by `M`.
    pub fn repxm(grid: TimeGrid, h: HurstIndex, exec: Execution) -> Result<Self> {
        let b1 = beta_b1(h)?;
        if h.is_brownian() {
            return Ok(Self::build(grid, exec, |_, col| col.fill(1.0)));
        }
        let a = h.offset();
        let quad = PowerPairQuadrature::new(a, a - 1.0, TABLE_NODES);
        Ok(Self::build(grid, exec, |j, col| {
            let u = grid.midpoint(j + 1);
            let mut acc = quad.integrate(u, u, grid.time(j + 1));
            col[0] = acc / b1;
            for (i, slot) in col.iter_mut().enumerate().skip(1) {
                let m = j + 1 + i;
                acc += quad.integrate(u, grid.time(m - 1), grid.time(m));
                *slot = acc / b1;
            }
        }))
    }

    /// `abel_const · z(t_m, s_j^*)` of the `H < 1/2` representation by `W`.
    pub fn z_normalized(grid: TimeGrid, h: HurstIndex, exec: Execution) -> Result<Self> {
        if h.value() >= 0.5 {
            return Err(FbmError::domain(
                "z_kernel",
                format!("requires H < 1/2, got H={}", h.value()),
            ));
        }
        if h.is_brownian() {
            return Ok(Self::build(grid, exec, |_, col| col.fill(1.0)));
        }
        let b = 0.5 - h.value();
        let c = abel_const(h);
        let quad = PowerPairQuadrature::new(h.value() - 1.5, h.offset(), TABLE_NODES);
        Ok(Self::build(grid, exec, |j, col| {
            let s = grid.midpoint(j + 1);
            let sb = s.powf(b);
            let mut acc = quad.integrate(s, s, grid.time(j + 1));
            for (i, slot) in col.iter_mut().enumerate() {
                let m = j + 1 + i;
                let t = grid.time(m);
                if i > 0 {
                    acc += quad.integrate(s, grid.time(m - 1), t);
                }
                let lead = (s / t).powf(b) * (t - s).powf(-b);
                *slot = c * (lead + b * sb * acc);
            }
        }))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `K(t_m, s_j^*)` for `1 ≤ j ≤ m ≤ n`.
    pub fn get(&self, m: usize, j: usize) -> f64 {
        assert!(1 <= j && j <= m && m <= self.grid.n());
        self.data[Self::column_offset(self.grid.n(), j - 1) + (m - j)]
    }

    /// `out_m = Σ_{j ≤ m} K(t_m, s_j^*) · increments_j`, `out_0 = 0`.
    pub fn apply(&self, increments: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        assert_eq!(increments.len(), n);
        let mut out = vec![0.0; n + 1];
        let mut off = 0;
        for (j, &d) in increments.iter().enumerate() {
            let col = &self.data[off..off + (n - j)];
            off += n - j;
            if d == 0.0 {
                continue;
            }
            for (o, k) in out[j + 1..].iter_mut().zip(col) {
                *o += k * d;
            }
        }
        out
    }
}
