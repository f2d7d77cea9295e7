//! Monte Carlo check of the three properties that characterize fBm.
//!
//! Each property is reduced to a handful of [`Statistic`]s with explicit
//! targets; a property passes when every statistic does, and the combined
//! verdict is consistent only when all three properties pass. The checks are
//! necessary conditions evaluated on finite data, never a proof.

use serde::{Deserialize, Serialize};

use crate::error::{FbmError, Result};
use crate::estimators::{
    holder_exponent_estimate, powerlaw_fit, weighted_qv, weighted_qv_tail, EstimateWithCI,
};
use crate::exec::Execution;
use crate::grid::{HurstIndex, PathEnsemble, SamplePath};
use crate::transforms::{empirical_bracket, fundamental_martingale, BracketPath};

/// Pass/fail thresholds. All fields can be overridden by name via [`Thresholds::set`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Multiplier on standard errors for two-sided Monte Carlo checks.
    pub ci_z: f64,
    /// Allowed distance of the median Hölder estimate from `H`.
    pub holder_median_tol: f64,
    /// Per-path Hölder band half-width.
    pub holder_path_tol: f64,
    /// Minimum fraction of paths inside the per-path band.
    pub holder_path_fraction: f64,
    /// Allowed distance of the fitted bracket exponent from `2 - 2H`.
    pub exponent_tol: f64,
    /// Significance level of the skewness/kurtosis normality tests.
    pub normality_level: f64,
    pub min_n: usize,
    pub min_paths: usize,
    /// Lower end of the bracket fit range as a fraction of the horizon.
    pub fit_start: f64,
    /// Tail split `s` as a fraction of each tested time.
    pub tail_split: f64,
    /// Coarsening factor for the L¹ convergence-direction check.
    pub coarsen_factor: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ci_z: 3.0,
            holder_median_tol: 0.1,
            holder_path_tol: 0.15,
            holder_path_fraction: 0.8,
            exponent_tol: 0.1,
            normality_level: 0.01,
            min_n: 1024,
            min_paths: 100,
            fit_start: 0.1,
            tail_split: 0.5,
            coarsen_factor: 4,
        }
    }
}

impl Thresholds {
    pub const NAMES: [&'static str; 11] = [
        "ci_z",
        "holder_median_tol",
        "holder_path_tol",
        "holder_path_fraction",
        "exponent_tol",
        "normality_level",
        "min_n",
        "min_paths",
        "fit_start",
        "tail_split",
        "coarsen_factor",
    ];

    /// Overrides one threshold from its textual value.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let bad = |detail: String| FbmError::domain("Thresholds::set", detail);
        let real = |lo: f64, hi: f64| -> Result<f64> {
            let v: f64 = value
                .parse()
                .map_err(|_| bad(format!("{name}: '{value}' is not a number")))?;
            if !(v > lo && v < hi) {
                return Err(bad(format!("{name} must lie in ({lo}, {hi}), got {v}")));
            }
            Ok(v)
        };
        let count = |min: usize| -> Result<usize> {
            let v: usize = value
                .parse()
                .map_err(|_| bad(format!("{name}: '{value}' is not a non-negative integer")))?;
            if v < min {
                return Err(bad(format!("{name} must be >= {min}, got {v}")));
            }
            Ok(v)
        };
        match name {
            "ci_z" => self.ci_z = real(0.0, f64::INFINITY)?,
            "holder_median_tol" => self.holder_median_tol = real(0.0, f64::INFINITY)?,
            "holder_path_tol" => self.holder_path_tol = real(0.0, f64::INFINITY)?,
            "holder_path_fraction" => self.holder_path_fraction = real(0.0, 1.0 + 1e-12)?,
            "exponent_tol" => self.exponent_tol = real(0.0, f64::INFINITY)?,
            "normality_level" => self.normality_level = real(0.0, 1.0)?,
            "min_n" => self.min_n = count(64)?,
            "min_paths" => self.min_paths = count(3)?,
            "fit_start" => self.fit_start = real(0.0, 1.0)?,
            "tail_split" => self.tail_split = real(0.0, 1.0)?,
            "coarsen_factor" => self.coarsen_factor = count(2)?,
            _ => {
                return Err(bad(format!(
                    "unknown threshold '{name}'; known: {}",
                    Self::NAMES.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Two-sided standard normal quantile for `normality_level`.
    pub fn normality_critical(&self) -> f64 {
        std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(1.0 - self.normality_level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    A,
    B,
    C,
}

/// How a statistic is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value - target| <= tolerance`
    Within,
    /// `value < target`
    Below,
    /// `value >= target`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub estimate: EstimateWithCI,
    pub target: f64,
    pub comparison: Comparison,
    #[serde(with = "crate::report::nullable_f64")]
    pub tolerance: f64,
    pub pass: bool,
}

impl Statistic {
    pub fn new(
        name: impl Into<String>,
        estimate: EstimateWithCI,
        target: f64,
        comparison: Comparison,
        tolerance: f64,
    ) -> Statistic {
        let v = estimate.value;
        // NaN compares false everywhere, so undefined statistics fail.
        let pass = match comparison {
            Comparison::Within => (v - target).abs() <= tolerance,
            Comparison::Below => v < target,
            Comparison::AtLeast => v >= target,
        };
        Statistic {
            name: name.into(),
            estimate,
            target,
            comparison,
            tolerance,
            pass,
        }
    }

    fn within(name: impl Into<String>, estimate: EstimateWithCI, target: f64, tol: f64) -> Self {
        Statistic::new(name, estimate, target, Comparison::Within, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub statistics: Vec<Statistic>,
    pub pass: bool,
}

impl PropertyReport {
    /// `pass` is the conjunction of the statistics' flags (false when empty).
    pub fn new(property: Property, statistics: Vec<Statistic>) -> PropertyReport {
        let pass = !statistics.is_empty() && statistics.iter().all(|s| s.pass);
        PropertyReport {
            property,
            statistics,
            pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationVerdict {
    pub hurst: HurstIndex,
    pub horizon: f64,
    pub n: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub reports: Vec<PropertyReport>,
    pub verdict: Verdict,
}

impl CharacterizationVerdict {
    /// Combines reports; consistent iff every report passes.
    pub fn from_reports(ens: &PathEnsemble, h: HurstIndex, reports: Vec<PropertyReport>) -> Self {
        let verdict = if !reports.is_empty() && reports.iter().all(|r| r.pass) {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
        CharacterizationVerdict {
            hurst: h,
            horizon: ens.grid().horizon(),
            n: ens.grid().n(),
            n_paths: ens.len(),
            seed: ens.seed(),
            reports,
            verdict,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }
}

/// Runs the property checks with given thresholds and execution mode.
#[derive(Debug, Clone, Default)]
pub struct Characterizer {
    pub thresholds: Thresholds,
    pub exec: Execution,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

/// Pearson correlation; NaN when either sample is constant.
fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        f64::NAN
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// OLS of `y` on two regressors without intercept: coefficients and standard errors.
fn regress2(x1: &[f64], x2: &[f64], y: &[f64]) -> [(f64, f64); 2] {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let (s11, s12, s22) = (dot(x1, x1), dot(x1, x2), dot(x2, x2));
    let (s1y, s2y) = (dot(x1, y), dot(x2, y));
    let det = s11 * s22 - s12 * s12;
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let n = y.len();
    let ssr: f64 = (0..n)
        .map(|i| (y[i] - b1 * x1[i] - b2 * x2[i]).powi(2))
        .sum();
    let sigma2 = ssr / (n as f64 - 2.0);
    [
        (b1, (sigma2 * s22 / det).sqrt()),
        (b2, (sigma2 * s11 / det).sqrt()),
    ]
}

/// Sample skewness and excess kurtosis (population moments).
fn skew_kurtosis(values: &[f64]) -> (f64, f64) {
    let m = mean(values);
    let n = values.len() as f64;
    let m2 = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

impl Characterizer {
    pub fn new(thresholds: Thresholds, exec: Execution) -> Self {
        Characterizer { thresholds, exec }
    }

    fn check_size(&self, ens: &PathEnsemble) -> Result<()> {
        let th = &self.thresholds;
        if ens.grid().n() < th.min_n || ens.len() < th.min_paths {
            return Err(FbmError::EnsembleTooSmall {
                n: ens.grid().n(),
                paths: ens.len(),
                min_n: th.min_n,
                min_paths: th.min_paths,
            });
        }
        Ok(())
    }

    /// Property (a): median and per-path Hölder estimates near `H`.
    pub fn property_a(&self, ens: &PathEnsemble, h: HurstIndex) -> Result<PropertyReport> {
        self.check_size(ens)?;
        let th = &self.thresholds;
        let paths = ens.paths();
        let est: Vec<f64> = self.exec.map(paths.len(), |i| {
            holder_exponent_estimate(&paths[i])
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        });
        let n = est.len();
        let defined: Vec<f64> = est.iter().copied().filter(|v| v.is_finite()).collect();
        let med = if defined.len() == n {
            median(&est)
        } else {
            f64::NAN
        };
        let spread = EstimateWithCI::mean_of(&est).std_error;
        let inside = est
            .iter()
            .filter(|v| (**v - h.value()).abs() <= th.holder_path_tol)
            .count();
        let frac = inside as f64 / n as f64;
        let stats = vec![
            Statistic::within(
                "holder_median",
                EstimateWithCI {
                    value: med,
                    std_error: spread,
                    n_samples: n,
                },
                h.value(),
                th.holder_median_tol,
            ),
            Statistic::new(
                "holder_fraction_in_band",
                EstimateWithCI {
                    value: frac,
                    std_error: (frac * (1.0 - frac) / n as f64).sqrt(),
                    n_samples: n,
                },
                th.holder_path_fraction,
                Comparison::AtLeast,
                0.0,
            ),
        ];
        Ok(PropertyReport::new(Property::A, stats))
    }

    /// Validates the tested times and returns their grid indices.
    fn time_indices(&self, ens: &PathEnsemble, times: &[f64]) -> Result<Vec<usize>> {
        let grid = ens.grid();
        let th = &self.thresholds;
        if times.is_empty() {
            return Err(FbmError::domain("test_property_b", "no times requested"));
        }
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let k = match grid.index_of(t) {
                Some(k) if k > 0 => k,
                _ => {
                    return Err(FbmError::domain(
                        "test_property_b",
                        format!(
                            "t={t} is not a positive grid time in (0, {}]",
                            grid.horizon()
                        ),
                    ))
                }
            };
            if k % th.coarsen_factor != 0 {
                return Err(FbmError::domain(
                    "test_property_b",
                    format!(
                        "t={t} spans {k} steps, not a multiple of the coarsening factor {}",
                        th.coarsen_factor
                    ),
                ));
            }
            let split = th.tail_split * k as f64;
            if (split - split.round()).abs() > 1e-9 {
                return Err(FbmError::NonIntegerSplit {
                    n: k,
                    s: th.tail_split * t,
                    t,
                });
            }
            out.push(k);
        }
        Ok(out)
    }

    /// Property (b): weighted quadratic variation at each requested time.
    pub fn property_b(
        &self,
        ens: &PathEnsemble,
        h: HurstIndex,
        times: &[f64],
    ) -> Result<PropertyReport> {
        let ks = self.time_indices(ens, times)?;
        let th = &self.thresholds;
        let hv = h.value();
        let paths = ens.paths();
        let mut stats = Vec::new();
        for &k in &ks {
            let t = ens.grid().time(k);
            let s = th.tail_split * t;
            let target = t.powf(2.0 * hv);
            let tail_target = t.powf(2.0 * hv - 1.0) * (t - s);
            let per_path: Vec<Result<[f64; 3]>> = self.exec.map(paths.len(), |i| {
                let p = paths[i].prefix(k).expect("index checked");
                let coarse = p.coarsen(th.coarsen_factor).expect("divisibility checked");
                Ok([
                    weighted_qv(&p, h),
                    weighted_qv(&coarse, h),
                    weighted_qv_tail(&p, h, s)?,
                ])
            });
            let per_path: Vec<[f64; 3]> = per_path.into_iter().collect::<Result<_>>()?;
            let fine: Vec<f64> = per_path.iter().map(|r| r[0]).collect();
            let coarse: Vec<f64> = per_path.iter().map(|r| r[1]).collect();
            let tail: Vec<f64> = per_path.iter().map(|r| r[2]).collect();

            let qv = EstimateWithCI::mean_of(&fine);
            stats.push(Statistic::within(
                format!("weighted_qv[t={}]", fmt_t(t)),
                qv,
                target,
                th.ci_z * qv.std_error,
            ));

            let dev_fine: Vec<f64> = fine.iter().map(|v| (v - target).abs()).collect();
            let dev_coarse: Vec<f64> = coarse.iter().map(|v| (v - target).abs()).collect();
            let mad_fine = mean(&dev_fine);
            let mad_coarse = mean(&dev_coarse);
            stats.push(Statistic::new(
                format!("l1_deviation_ratio[t={}]", fmt_t(t)),
                EstimateWithCI {
                    value: mad_fine / mad_coarse,
                    std_error: 0.0,
                    n_samples: fine.len(),
                },
                1.0,
                Comparison::Below,
                0.0,
            ));

            let tq = EstimateWithCI::mean_of(&tail);
            stats.push(Statistic::within(
                format!("weighted_qv_tail[t={},s={}]", fmt_t(t), fmt_t(s)),
                tq,
                tail_target,
                th.ci_z * tq.std_error,
            ));
        }
        Ok(PropertyReport::new(Property::B, stats))
    }

    /// Fundamental martingale of every path.
    pub fn martingales(&self, ens: &PathEnsemble, h: HurstIndex) -> Result<Vec<SamplePath>> {
        let paths = ens.paths();
        self.exec
            .map(paths.len(), |i| fundamental_martingale(&paths[i], h))
            .into_iter()
            .collect()
    }

    /// Property (c): martingale surrogates and the bracket law of `M`.
    pub fn property_c(&self, ens: &PathEnsemble, h: HurstIndex) -> Result<PropertyReport> {
        let ms = self.martingales(ens, h)?;
        self.property_c_from(ens, h, &ms).map(|(r, _)| r)
    }

    /// Property (c) from precomputed martingales; also returns the mean bracket.
    pub fn property_c_from(
        &self,
        ens: &PathEnsemble,
        h: HurstIndex,
        ms: &[SamplePath],
    ) -> Result<(PropertyReport, BracketPath)> {
        self.check_size(ens)?;
        let th = &self.thresholds;
        let grid = ens.grid();
        let n = grid.n();
        if !n.is_multiple_of(4) {
            return Err(FbmError::domain(
                "test_property_c",
                format!("n={n} must be divisible by 4 for the split times T/4 and T/2"),
            ));
        }
        let np = ms.len();
        let rt = (np as f64).sqrt();
        let at = |k: usize| -> Vec<f64> { ms.iter().map(|m| m.values()[k]).collect() };
        let (q, half, full) = (at(n / 4), at(n / 2), at(n));
        let late: Vec<f64> = full.iter().zip(&half).map(|(a, b)| a - b).collect();

        let mut stats = Vec::new();
        let r = correlation(&half, &late);
        stats.push(Statistic::within(
            "increment_correlation",
            EstimateWithCI {
                value: r,
                std_error: 1.0 / rt,
                n_samples: np,
            },
            0.0,
            th.ci_z / rt,
        ));

        let coefs = regress2(&q, &half, &late);
        for (name, (b, se)) in ["regression_m_quarter", "regression_m_half"]
            .iter()
            .zip(coefs)
        {
            stats.push(Statistic::within(
                *name,
                EstimateWithCI {
                    value: b,
                    std_error: se,
                    n_samples: np,
                },
                0.0,
                th.ci_z * se,
            ));
        }

        let brackets: Vec<BracketPath> = ms.iter().map(empirical_bracket).collect();
        let mean_bracket = BracketPath::mean(&brackets)?;
        let t = grid.horizon();
        let expo_target = 2.0 - 2.0 * h.value();
        let expo = match powerlaw_fit(&mean_bracket, th.fit_start * t, t) {
            Ok(fit) => fit.exponent,
            Err(e) if e.is_numeric() => f64::NAN,
            Err(e) => return Err(e),
        };
        stats.push(Statistic::within(
            "bracket_exponent",
            EstimateWithCI {
                value: expo,
                std_error: 0.0,
                n_samples: np,
            },
            expo_target,
            th.exponent_tol,
        ));

        let scale = mean_bracket.values()[n].sqrt();
        let z: Vec<f64> = full.iter().map(|v| v / scale).collect();
        let (skew, kurt) = skew_kurtosis(&z);
        let crit = th.normality_critical();
        let se_skew = (6.0 / np as f64).sqrt();
        let se_kurt = (24.0 / np as f64).sqrt();
        stats.push(Statistic::within(
            "normalized_skewness",
            EstimateWithCI {
                value: skew,
                std_error: se_skew,
                n_samples: np,
            },
            0.0,
            crit * se_skew,
        ));
        stats.push(Statistic::within(
            "normalized_excess_kurtosis",
            EstimateWithCI {
                value: kurt,
                std_error: se_kurt,
                n_samples: np,
            },
            0.0,
            crit * se_kurt,
        ));
        Ok((PropertyReport::new(Property::C, stats), mean_bracket))
    }

    /// All three properties, with property (b) evaluated at the horizon.
    pub fn verdict(&self, ens: &PathEnsemble, h: HurstIndex) -> Result<CharacterizationVerdict> {
        let a = self.property_a(ens, h)?;
        let b = self.property_b(ens, h, &[ens.grid().horizon()])?;
        let c = self.property_c(ens, h)?;
        Ok(CharacterizationVerdict::from_reports(ens, h, vec![a, b, c]))
    }
}

pub fn test_property_a(ens: &PathEnsemble, h: HurstIndex) -> Result<PropertyReport> {
    Characterizer::default().property_a(ens, h)
}

pub fn test_property_b(ens: &PathEnsemble, h: HurstIndex, times: &[f64]) -> Result<PropertyReport> {
    Characterizer::default().property_b(ens, h, times)
}

pub fn test_property_c(ens: &PathEnsemble, h: HurstIndex) -> Result<PropertyReport> {
    Characterizer::default().property_c(ens, h)
}

pub fn characterization_verdict(
    ens: &PathEnsemble,
    h: HurstIndex,
) -> Result<CharacterizationVerdict> {
    Characterizer::default().verdict(ens, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistic_comparisons() {
        let e = |v| EstimateWithCI::exact(v);
        assert!(Statistic::within("x", e(1.05), 1.0, 0.1).pass);
        assert!(!Statistic::within("x", e(1.2), 1.0, 0.1).pass);
        assert!(!Statistic::within("x", e(f64::NAN), 1.0, 0.1).pass);
        assert!(Statistic::new("x", e(0.99), 1.0, Comparison::Below, 0.0).pass);
        assert!(!Statistic::new("x", e(1.0), 1.0, Comparison::Below, 0.0).pass);
        assert!(Statistic::new("x", e(0.8), 0.8, Comparison::AtLeast, 0.0).pass);
        assert!(!Statistic::new("x", e(f64::NAN), 0.8, Comparison::AtLeast, 0.0).pass);
    }

    #[test]
    fn empty_report_fails() {
        assert!(!PropertyReport::new(Property::A, vec![]).pass);
    }

    #[test]
    fn thresholds_override_by_name() {
        let mut th = Thresholds::default();
        th.set("exponent_tol", "0.2").unwrap();
        th.set("min_paths", "10").unwrap();
        assert_eq!(th.exponent_tol, 0.2);
        assert_eq!(th.min_paths, 10);
        assert!(th.set("nope", "1").is_err());
        assert!(th.set("ci_z", "-1").is_err());
        assert!(th.set("ci_z", "abc").is_err());
        assert!(th.set("min_n", "2.5").is_err());
    }

    #[test]
    fn normality_critical_value() {
        let th = Thresholds::default();
        assert!((th.normality_critical() - 2.5758293035489).abs() < 1e-9);
    }

    #[test]
    fn helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.9986).abs() < 1e-3);
        assert!(correlation(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
        let x1 = [1.0, 0.0, 1.0, 2.0];
        let x2 = [0.0, 1.0, 1.0, -1.0];
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let c = regress2(&x1, &x2, &y);
        assert!((c[0].0 - 2.0).abs() < 1e-12 && (c[1].0 + 3.0).abs() < 1e-12);
        assert!(c[0].1 < 1e-6);
    }
}
