//! Randomized checks of the deterministic kernel inequalities. Each check
//! draws `CASES` configurations and returns a description of every violation.

use fbm_levy::kernels::{partition_kernel_f, partition_kernel_g_p, CellKernel, PartitionContext};
use fbm_levy::{HurstIndex, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: usize = 1000;
pub const SLACK: f64 = 1e-12;

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs.is_finite() && rhs.is_finite() && lhs <= rhs + SLACK * rhs.abs()
}

pub fn f_upper_bound() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = Vec::new();
    for _ in 0..CASES {
        let t = rng.random_range(0.1..10.0);
        let n = rng.random_range(2..=256usize);
        let h = HurstIndex::new(rng.random_range(0.501..0.999)).unwrap();
        let k = rng.random_range(2..=n);
        let grid = TimeGrid::new(t, n).unwrap();
        let ctx = PartitionContext::new(grid, k).unwrap();
        let (lo, hi) = ctx.cell();
        let s = rng.random_range(0.0..lo);
        let f = partition_kernel_f(&ctx, s, h).unwrap();
        let bound = hi.powf(h.offset()) * (lo - s).powf(h.value() - 1.5) * grid.step();
        if !holds(f, bound) {
            bad.push(format!(
                "t={t} n={n} k={k} H={} s={s}: f={f} > {bound}",
                h.value()
            ));
        }
    }
    bad
}

pub fn f_lower_bound() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = Vec::new();
    for _ in 0..CASES {
        let t = rng.random_range(0.1..10.0);
        let n = rng.random_range(3..=256usize);
        let hv = rng.random_range(0.501..0.999);
        let h = HurstIndex::new(hv).unwrap();
        let k = rng.random_range(3..=n);
        let grid = TimeGrid::new(t, n).unwrap();
        let ctx = PartitionContext::new(grid, k).unwrap();
        let u = rng.random_range(grid.time(k - 3)..grid.time(k - 2));
        let f = partition_kernel_f(&ctx, u, h).unwrap();
        let bound = 3f64.powf(2.0 * hv - 3.0)
            * t.powf(2.0 * hv - 1.0)
            * (n as f64).powf(1.0 - 2.0 * hv)
            * u.powf(2.0 * hv - 1.0);
        if !holds(bound, f * f) {
            bad.push(format!(
                "t={t} n={n} k={k} H={hv} u={u}: f^2={} < {bound}",
                f * f
            ));
        }
    }
    bad
}

pub fn p_upper_bound() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    for _ in 0..CASES {
        let t = rng.random_range(0.1..10.0);
        let n = rng.random_range(3..=256usize);
        let hv = rng.random_range(0.001..0.499);
        let h = HurstIndex::new(hv).unwrap();
        let k = rng.random_range(3..=n);
        let grid = TimeGrid::new(t, n).unwrap();
        let ctx = PartitionContext::new(grid, k).unwrap();
        let (lo, _) = ctx.cell();
        let s = rng
            .random_range(0.0..grid.time(k - 2))
            .max(f64::MIN_POSITIVE);
        let p = partition_kernel_g_p(&ctx, s, h, CellKernel::P).unwrap();
        let dt = grid.step();
        let bound = ((lo - s).powf(hv - 1.5) * dt).min(dt.powf(hv - 0.5) / (0.5 - hv));
        if !holds(p, bound) {
            bad.push(format!("t={t} n={n} k={k} H={hv} s={s}: p={p} > {bound}"));
        }
    }
    bad
}

fn lattice_sum(grid: &TimeGrid, from: usize, u: f64, hv: f64) -> f64 {
    (from..=grid.n())
        .map(|k| (grid.time(k - 1) - u).powf(2.0 * hv - 3.0))
        .sum()
}

fn lattice_bound(x: f64, n: usize, t: f64, hv: f64) -> f64 {
    x.powf(2.0 * hv - 3.0) + n as f64 / ((2.0 - 2.0 * hv) * t) * x.powf(2.0 * hv - 2.0)
}

pub fn lattice_sum_below_split() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = Vec::new();
    for _ in 0..CASES {
        let t = rng.random_range(0.1..10.0);
        let n = rng.random_range(3..=512usize);
        let hv = rng.random_range(0.501..0.999);
        let grid = TimeGrid::new(t, n).unwrap();
        let m = rng.random_range(1..=n - 2);
        let s = grid.time(m);
        let u = rng.random_range(0.0..s);
        let lhs = lattice_sum(&grid, m + 2, u, hv);
        let rhs = lattice_bound(s + grid.step() - u, n, t, hv);
        if !holds(lhs, rhs) {
            bad.push(format!("t={t} n={n} s={s} u={u} H={hv}: {lhs} > {rhs}"));
        }
    }
    bad
}

pub fn lattice_sum_below_grid_point() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();
    for case in 0..CASES {
        let t = rng.random_range(0.1..10.0);
        let n = rng.random_range(3..=512usize);
        let hv = rng.random_range(0.501..0.999);
        let grid = TimeGrid::new(t, n).unwrap();
        let i = rng.random_range(0..=n - 2);
        // include the boundary case u = t_i
        let u = if case % 10 == 0 {
            grid.time(i)
        } else {
            rng.random_range(0.0..=grid.time(i))
        };
        let lhs = lattice_sum(&grid, i + 2, u, hv);
        let rhs = lattice_bound(grid.time(i + 1) - u, n, t, hv);
        if !holds(lhs, rhs) {
            bad.push(format!("t={t} n={n} i={i} u={u} H={hv}: {lhs} > {rhs}"));
        }
    }
    bad
}

pub type Check = fn() -> Vec<String>;

/// Every check with its display name.
pub const CHECKS: [(&str, Check); 5] = [
    ("f upper bound", f_upper_bound),
    ("f^2 lower bound", f_lower_bound),
    ("p upper bound", p_upper_bound),
    ("lattice sum (split)", lattice_sum_below_split),
    ("lattice sum (grid point)", lattice_sum_below_grid_point),
];
