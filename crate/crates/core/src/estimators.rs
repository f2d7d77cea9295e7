//! Path functionals: weighted quadratic variation, `1/H`-variation, a Hölder
//! regularity estimate and log-log power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{FbmError, Result};
use crate::grid::{HurstIndex, SamplePath};
use crate::transforms::BracketPath;

/// Default confidence multiplier for Monte Carlo comparisons.
pub const DEFAULT_Z: f64 = 3.0;

/// A scalar estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    #[serde(with = "crate::report::nullable_f64")]
    pub value: f64,
    #[serde(with = "crate::report::nullable_f64")]
    pub std_error: f64,
    pub n_samples: usize,
}

impl EstimateWithCI {
    /// Sample mean with standard error `sd/√N`.
    pub fn mean_of(samples: &[f64]) -> EstimateWithCI {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        EstimateWithCI {
            value: mean,
            std_error: se,
            n_samples: n.max(1),
        }
    }

    /// An exact value (zero standard error).
    pub fn exact(value: f64) -> EstimateWithCI {
        EstimateWithCI {
            value,
            std_error: 0.0,
            n_samples: 1,
        }
    }

    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_error
    }

    /// `|value - target| ≤ z · std_error`.
    pub fn covers(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= self.half_width(z)
    }
}

/// `y ≈ coefficient · t^exponent`; `residual` is the RMS of the log-scale fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    #[serde(with = "crate::report::nullable_f64")]
    pub coefficient: f64,
    #[serde(with = "crate::report::nullable_f64")]
    pub exponent: f64,
    #[serde(with = "crate::report::nullable_f64")]
    pub residual: f64,
}

/// `n^{2H-1} Σ_k (ΔX_k)^2`.
pub fn weighted_qv(path: &SamplePath, h: HurstIndex) -> f64 {
    let n = path.grid().n();
    let ss: f64 = path.increments().iter().map(|d| d * d).sum();
    (n as f64).powf(2.0 * h.value() - 1.0) * ss
}

/// `n^{2H-1} Σ_{k > ns/t} (ΔX_k)^2`; requires `n·s/t` to be an integer.
pub fn weighted_qv_tail(path: &SamplePath, h: HurstIndex, s: f64) -> Result<f64> {
    let grid = path.grid();
    let n = grid.n();
    let start = match grid.index_of(s) {
        Some(k) if s >= 0.0 && s <= grid.horizon() => k,
        _ => {
            return Err(FbmError::NonIntegerSplit {
                n,
                s,
                t: grid.horizon(),
            })
        }
    };
    let vals = path.values();
    let ss: f64 = (start + 1..=n)
        .map(|k| (vals[k] - vals[k - 1]).powi(2))
        .sum();
    Ok((n as f64).powf(2.0 * h.value() - 1.0) * ss)
}

/// `Σ_k |ΔX_k|^{1/H}`.
pub fn p_variation(path: &SamplePath, h: HurstIndex) -> f64 {
    let p = 1.0 / h.value();
    if p == 2.0 {
        return path.increments().iter().map(|d| d * d).sum();
    }
    path.increments().iter().map(|d| d.abs().powf(p)).sum()
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual sum of squares.
    pub ssr: f64,
    /// Standard error of the slope (0 with fewer than three points).
    pub slope_se: f64,
}

pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let k = xs.len();
    let n = k as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = if k > 2 {
        (ssr / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        intercept,
        slope,
        ssr,
        slope_se,
    }
}

/// Minimum grid size for [`holder_exponent_estimate`].
pub const HOLDER_MIN_N: usize = 64;

/// Regularity estimate: slope of `log mean_k |X_{t_{k+m}} - X_{t_k}|` against
/// `log(mΔ)` over non-overlapping increments at dyadic lags
/// `m = 1, 2, 4, …, n/16`, clamped to `[0, 1]`. The standard error is the
/// regression slope's.
pub fn holder_exponent_estimate(path: &SamplePath) -> Result<EstimateWithCI> {
    let grid = path.grid();
    let n = grid.n();
    if n < HOLDER_MIN_N {
        return Err(FbmError::domain(
            "holder_exponent_estimate",
            format!("need n >= {HOLDER_MIN_N}, got n={n}"),
        ));
    }
    let vals = path.values();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut m = 1;
    while m <= n / 16 {
        let count = n / m;
        let mean = (0..count)
            .map(|k| (vals[(k + 1) * m] - vals[k * m]).abs())
            .sum::<f64>()
            / count as f64;
        if mean.is_nan() || mean <= 0.0 {
            return Err(FbmError::DegeneratePath { scale: m });
        }
        xs.push((m as f64 * grid.step()).ln());
        ys.push(mean.ln());
        m *= 2;
    }
    let fit = linear_fit(&xs, &ys);
    Ok(EstimateWithCI {
        value: fit.slope.clamp(0.0, 1.0),
        std_error: fit.slope_se,
        n_samples: xs.len(),
    })
}

/// Fits `c · t^α` to `(ts, ys)` by least squares in log-log coordinates.
pub fn powerlaw_fit_points(ts: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if let Some((t, y)) = ts.iter().zip(ys).find(|(t, y)| !(**y > 0.0 && **t > 0.0)) {
        return Err(FbmError::NonPositiveOrdinate { t: *t, value: *y });
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let fit = linear_fit(&xs, &ls);
    Ok(PowerLawFit {
        coefficient: fit.intercept.exp(),
        exponent: fit.slope,
        residual: (fit.ssr / xs.len() as f64).sqrt(),
    })
}

/// Fits `c · t^α` to the bracket over the grid points with `t_min ≤ t ≤ t_max`.
pub fn powerlaw_fit(bracket: &BracketPath, t_min: f64, t_max: f64) -> Result<PowerLawFit> {
    let grid = bracket.grid();
    let tol = 1e-12 * grid.horizon();
    let (ts, ys): (Vec<f64>, Vec<f64>) = (0..=grid.n())
        .map(|k| (grid.time(k), bracket.values()[k]))
        .filter(|(t, _)| *t >= t_min - tol && *t <= t_max + tol && *t > 0.0)
        .unzip();
    if ts.len() < 2 {
        return Err(FbmError::EmptyFitRange { t_min, t_max });
    }
    powerlaw_fit_points(&ts, &ys)
}
