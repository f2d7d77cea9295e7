//! Quadrature rules for the singular integrals behind the kernels.
//!
//! All kernel integrals have the form `∫_lo^hi x^β (x - c)^γ dx` with
//! `0 ≤ c ≤ lo`. [`PowerPairQuadrature`] integrates them on a mesh graded
//! geometrically away from `c`, so that every panel is at least its own length
//! away from both branch points (`c` and `0`); when `lo == c` the first panel
//! carries the `(x - c)^γ` factor in a Gauss–Jacobi weight instead.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::ln_gamma;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule with `m` nodes.
    pub fn legendre(m: usize) -> Self {
        Self::jacobi(m, 0.0, 0.0)
    }

    /// Gauss–Jacobi rule for the weight `(1 - y)^α (1 + y)^β`, `α, β > -1`,
    /// via the Golub–Welsch eigenvalue problem.
    pub fn jacobi(m: usize, alpha: f64, beta: f64) -> Self {
        assert!(m >= 1, "quadrature needs at least one node");
        assert!(
            alpha > -1.0 && beta > -1.0,
            "Jacobi exponents must exceed -1"
        );
        let ab = alpha + beta;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        for (k, d) in diag.iter_mut().enumerate() {
            let kf = k as f64;
            *d = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
        }
        for (i, o) in off.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            let s = 2.0 * k + ab;
            *o = if i == 0 {
                (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                (4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                    .sqrt()
            };
        }
        let jac = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let mu0 =
            ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
                - ln_gamma(ab + 2.0))
            .exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f` with the rule mapped affinely (weight exponents ignored).
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (y, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * y);
        }
        acc * half
    }
}

/// Default node count for standalone kernel evaluations.
pub const DEFAULT_NODES: usize = 64;

/// Panels at most this fraction of their distance to `c` use the short rule.
const FAR_RATIO: f64 = 0.5;
const FAR_NODES: usize = 8;

/// Integrates `x^β (x - c)^γ` over `[lo, hi]` for `0 ≤ c ≤ lo`.
#[derive(Debug, Clone)]
pub struct PowerPairQuadrature {
    beta: f64,
    gamma: f64,
    near: GaussRule,
    far: GaussRule,
    singular: Option<GaussRule>,
}

impl PowerPairQuadrature {
    /// `nodes` is the per-panel node count for panels adjacent to the
    /// singular point. Integrals starting at `c` additionally need `γ > -1`.
    pub fn new(beta: f64, gamma: f64, nodes: usize) -> Self {
        PowerPairQuadrature {
            beta,
            gamma,
            near: GaussRule::legendre(nodes),
            far: GaussRule::legendre(FAR_NODES.min(nodes)),
            singular: (gamma > -1.0).then(|| GaussRule::jacobi(nodes, 0.0, gamma)),
        }
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.beta, self.gamma)
    }

    /// `∫_lo^hi x^β (x - c)^γ dx`.
    pub fn integrate(&self, c: f64, lo: f64, hi: f64) -> f64 {
        debug_assert!(c >= 0.0 && lo >= c, "need 0 <= c <= lo (c={c}, lo={lo})");
        if hi <= lo {
            return 0.0;
        }
        let (beta, gamma) = (self.beta, self.gamma);
        if c == 0.0 {
            let e = beta + gamma + 1.0;
            return if e == 0.0 {
                (hi / lo).ln()
            } else {
                (hi.powf(e) - lo.powf(e)) / e
            };
        }
        let mut acc = 0.0;
        let mut x = lo;
        if lo == c {
            let rule = self
                .singular
                .as_ref()
                .expect("integral from the singular point needs gamma > -1");
            let h = (hi - lo).min(c);
            let half = 0.5 * h;
            let mut s = 0.0;
            for (y, w) in rule.nodes.iter().zip(&rule.weights) {
                s += w * (c + half * (1.0 + y)).powf(beta);
            }
            acc += half.powf(1.0 + gamma) * s;
            x = lo + h;
        }
        while x < hi {
            let d = x - c;
            let next = (x + d).min(hi);
            let rule = if (next - x) <= FAR_RATIO * d {
                &self.far
            } else {
                &self.near
            };
            acc += rule.integrate(x, next, |v| v.powf(beta) * (v - c).powf(gamma));
            x = next;
        }
        acc
    }
}

/// Tanh-sinh quadrature on `[a, b]`, refined until successive levels agree to
/// `rel_tol`. The integrand receives `(x, x - a, b - x)` with the distances
/// computed without cancellation, so endpoint singularities can be evaluated
/// accurately.
pub fn tanh_sinh(a: f64, b: f64, rel_tol: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let t_max = 3.5;
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // 1 - tanh|u| = 2 / (1 + e^{2|u|})
        let comp = 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let dist = half * comp;
        if dist <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let (x, dl, dr) = if u < 0.0 {
            (a + dist, dist, (b - a) - dist)
        } else {
            (b - dist, (b - a) - dist, dist)
        };
        w * f(x, dl, dr)
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h * half;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}
