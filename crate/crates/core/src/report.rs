//! Report documents: deterministic JSON plus plot-ready CSV series.
//!
//! Every float is written with at most 15 significant digits. Build documents
//! through [`ReportDocument::normalized`] and a write/parse round trip returns
//! an equal document. Non-finite numbers are written as `null` and read back
//! as NaN.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::characterize::{CharacterizationVerdict, Thresholds};
use crate::error::{FbmError, Result};
use crate::estimators::{EstimateWithCI, PowerLawFit};

/// Bumped on any change to the document layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 15;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap()
}

/// Serde adapter writing non-finite floats as `null` and reading `null` as NaN.
pub mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub command: String,
    pub hurst: f64,
    pub horizon: f64,
    pub n: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub generator: String,
    pub input: Option<String>,
    pub output: Option<String>,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub estimate: EstimateWithCI,
    #[serde(with = "nullable_f64")]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub t_min: f64,
    pub t_max: f64,
    pub fit: PowerLawFit,
}

/// A two-column data series, also written as its own CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub estimates: Vec<NamedEstimate>,
    pub fits: Vec<NamedFit>,
    pub verdict: Option<CharacterizationVerdict>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub results: Results,
    /// Wall-clock timings; omitted unless requested so reruns stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

/// Pretty JSON with floats rounded to [`SIGNIFICANT_DIGITS`].
struct RoundingFormatter(PrettyFormatter<'static>);

macro_rules! forward {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        })*
    };
}

impl Formatter for RoundingFormatter {
    forward!(
        end_array,
        end_object,
        end_array_value,
        begin_object_value,
        end_object_value
    );

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        self.0.write_f64(w, round_sig(v))
    }
}

impl ReportDocument {
    pub fn new(config: ConfigEcho, results: Results) -> ReportDocument {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            config,
            results,
            timings: None,
        }
        .normalized()
    }

    /// The document as it reads back after serialization (floats rounded).
    pub fn normalized(&self) -> ReportDocument {
        let text = self.to_json().expect("report serializes");
        serde_json::from_str(&text).expect("report parses back")
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(
            &mut buf,
            RoundingFormatter(PrettyFormatter::new()),
        );
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<ReportDocument> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<ReportDocument> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }
}

fn io_err(path: &Path, source: io::Error) -> FbmError {
    FbmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV file for `series` written next to the JSON report at `json_path`.
pub fn series_path(json_path: &Path, series: &str) -> PathBuf {
    let stem = json_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    json_path.with_file_name(format!("{stem}.{series}.csv"))
}

pub fn series_csv(series: &Series) -> String {
    let mut out = format!("{},{}\n", series.x_label, series.y_label);
    for (x, y) in series.x.iter().zip(&series.y) {
        let mut line = String::new();
        for (i, v) in [x, y].into_iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let v = round_sig(*v);
            if v.is_finite() {
                line.push_str(&format!("{v:?}"));
            } else {
                line.push_str("nan");
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Writes the JSON report to `path` and one CSV per series beside it.
/// Returns every file written, JSON first.
pub fn emit_report(doc: &ReportDocument, path: &Path) -> Result<Vec<PathBuf>> {
    let json = doc.to_json()?;
    fs::write(path, json).map_err(|e| io_err(path, e))?;
    let mut written = vec![path.to_path_buf()];
    for s in &doc.results.series {
        let p = series_path(path, &s.name);
        fs::write(&p, series_csv(s)).map_err(|e| io_err(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportDocument {
        ReportDocument::new(
            ConfigEcho {
                command: "estimate".into(),
                hurst: 0.7,
                horizon: 1.0,
                n: 8,
                n_paths: 2,
                seed: 42,
                generator: "davies-harte".into(),
                input: None,
                output: Some("r.json".into()),
                thresholds: Thresholds::default(),
            },
            Results {
                estimates: vec![NamedEstimate {
                    name: "weighted_qv".into(),
                    estimate: EstimateWithCI {
                        value: 1.0 / 3.0,
                        std_error: f64::NAN,
                        n_samples: 2,
                    },
                    target: 1.0,
                }],
                fits: vec![],
                verdict: None,
                series: vec![Series {
                    name: "bracket".into(),
                    x_label: "t".into(),
                    y_label: "mean_bracket".into(),
                    x: vec![0.0, 0.5, 1.0],
                    y: vec![0.0, std::f64::consts::PI, 1e-300],
                }],
            },
        )
    }

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333333);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
        let json = sample().to_json().unwrap();
        assert!(json.contains("0.333333333333333,"), "{json}");
        assert!(json.contains("\"std_error\": null"));
    }

    #[test]
    fn round_trip_and_determinism() {
        let doc = sample();
        let json = doc.to_json().unwrap();
        let back = ReportDocument::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(back.config, doc.config);
        assert_eq!(back.results.series, doc.results.series);
        assert!(back.results.estimates[0].estimate.std_error.is_nan());
        assert!(!json.contains("timings"));
    }

    #[test]
    fn emit_writes_json_and_series() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        let files = emit_report(&sample(), &p).unwrap();
        assert_eq!(files, vec![p.clone(), dir.path().join("out.bracket.csv")]);
        let csv = fs::read_to_string(&files[1]).unwrap();
        assert_eq!(
            csv,
            "t,mean_bracket\n0.0,0.0\n0.5,3.14159265358979\n1.0,1e-300\n"
        );
        let first = fs::read(&p).unwrap();
        emit_report(&sample(), &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        let bad = dir.path().join("missing/out.json");
        assert!(matches!(
            emit_report(&sample(), &bad),
            Err(FbmError::Io { .. })
        ));
    }
}
