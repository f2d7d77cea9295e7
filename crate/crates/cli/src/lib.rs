//! `fbm-levy` command line: generate ensembles, transform paths, estimate path
//! functionals and run the characterization suite.
//!
//! Exit codes: 0 success (or a consistent verdict), 1 inconsistent verdict,
//! 2 usage, configuration or input error, 3 numeric failure.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fbm_levy::characterize::{Characterizer, Thresholds};
use fbm_levy::estimators::{
    holder_exponent_estimate, p_variation, powerlaw_fit, weighted_qv, weighted_qv_tail,
};
use fbm_levy::fbm_gen::{generate_cholesky, generate_davies_harte_with};
use fbm_levy::pathio::{read_paths, write_paths, write_paths_to};
use fbm_levy::report::{
    emit_report, ConfigEcho, NamedEstimate, NamedFit, ReportDocument, Results, Series, Timing,
};
use fbm_levy::special::abs_normal_moment;
use fbm_levy::transforms::{
    empirical_bracket, fundamental_martingale, w_process, x_from_m_high, x_from_w_low, x_from_y,
    y_from_m_abel, y_process,
};
use fbm_levy::{
    BracketPath, EstimateWithCI, Execution, FbmError, HurstIndex, PathEnsemble, Role, SamplePath,
    TimeGrid, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCONSISTENT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const THRESHOLD_PREFIX: &str = "--threshold.";

#[derive(Debug, Parser)]
#[command(
    name = "fbm-levy",
    version,
    about = "Fractional Brownian motion toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an ensemble and write it as path CSV.
    Generate(Common),
    /// Apply a process transform to every path of a CSV file.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Process held by the input file.
        #[arg(long, value_enum, default_value_t = Process::X)]
        from: Process,
        /// Process to compute.
        #[arg(long, value_enum)]
        to: Process,
    },
    /// Estimate path functionals and write a JSON report.
    Estimate(Common),
    /// Run the three-property characterization and write a JSON report.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Hurst index, strictly between 0 and 1.
    #[arg(long, value_parser = parse_hurst)]
    hurst: HurstIndex,
    /// Time horizon.
    #[arg(long = "t", default_value_t = 1.0, value_parser = parse_horizon)]
    horizon: f64,
    /// Number of grid steps.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of paths.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    paths: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Generator::DaviesHarte)]
    generator: Generator,
    /// Read paths from this CSV instead of simulating.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report (makes it run-dependent).
    #[arg(long)]
    timings: bool,
    /// Run sequentially even when built with parallel support.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Cholesky,
    DaviesHarte,
}

impl Generator {
    fn name(self) -> &'static str {
        match self {
            Generator::Cholesky => "cholesky",
            Generator::DaviesHarte => "davies-harte",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Process {
    X,
    Y,
    M,
    W,
}

fn parse_hurst(s: &str) -> std::result::Result<HurstIndex, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    HurstIndex::new(v).map_err(|e| e.to_string())
}

fn parse_horizon(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("horizon must be finite and > 0, got {v}"))
    }
}

/// Fully validated run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: &'static str,
    pub hurst: HurstIndex,
    pub horizon: f64,
    pub n: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub generator: Generator,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub timings: bool,
    pub exec: Execution,
}

impl RunConfig {
    fn from_common(command: &'static str, c: Common, thresholds: Thresholds) -> Result<Self> {
        let exec = if c.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        Ok(RunConfig {
            command,
            hurst: c.hurst,
            horizon: c.horizon,
            n: usize::try_from(c.n).context("--n too large")?,
            n_paths: usize::try_from(c.paths).context("--paths too large")?,
            seed: c.seed,
            generator: c.generator,
            input: c.input,
            output: c.out,
            thresholds,
            timings: c.timings,
            exec,
        })
    }

    fn echo(&self, ens: &PathEnsemble) -> ConfigEcho {
        ConfigEcho {
            command: self.command.into(),
            hurst: self.hurst.value(),
            horizon: ens.grid().horizon(),
            n: ens.grid().n(),
            n_paths: ens.len(),
            seed: self.seed,
            generator: match self.input {
                Some(_) => "file".into(),
                None => self.generator.name().into(),
            },
            input: self.input.as_ref().map(|p| p.display().to_string()),
            output: self.output.as_ref().map(|p| p.display().to_string()),
            thresholds: self.thresholds.clone(),
        }
    }
}

/// Splits `--threshold.<name> <value>` and `--threshold.<name>=<value>` out of argv.
fn extract_thresholds(args: Vec<String>) -> Result<(Vec<String>, Thresholds)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut thresholds = Thresholds::default();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(rest) = arg.strip_prefix(THRESHOLD_PREFIX) else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match rest.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| anyhow!("{arg} needs a value"))?;
                (rest.to_string(), v)
            }
        };
        thresholds.set(&name, &value)?;
    }
    Ok((rest, thresholds))
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<FbmError>()) {
        Some(e) if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let (args, thresholds) = match extract_thresholds(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, thresholds) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, thresholds: Thresholds) -> Result<i32> {
    match cli.command {
        Command::Generate(c) => cmd_generate(RunConfig::from_common("generate", c, thresholds)?),
        Command::Transform { common, from, to } => cmd_transform(
            RunConfig::from_common("transform", common, thresholds)?,
            from,
            to,
        ),
        Command::Estimate(c) => cmd_estimate(RunConfig::from_common("estimate", c, thresholds)?),
        Command::Verify(c) => cmd_verify(RunConfig::from_common("verify", c, thresholds)?),
    }
}

fn simulate(cfg: &RunConfig) -> Result<PathEnsemble> {
    let grid = TimeGrid::new(cfg.horizon, cfg.n)?;
    let ens = match cfg.generator {
        Generator::DaviesHarte => {
            generate_davies_harte_with(grid, cfg.hurst, cfg.seed, cfg.n_paths, cfg.exec)?
        }
        Generator::Cholesky => generate_cholesky(grid, cfg.hurst, cfg.seed, cfg.n_paths)?,
    };
    Ok(ens)
}

/// The ensemble named by `--in`, or a fresh simulation.
fn load_or_simulate(cfg: &RunConfig) -> Result<PathEnsemble> {
    match &cfg.input {
        Some(p) => {
            let paths = read_paths(p, Role::X).context("cannot use --in file")?;
            let grid = *paths[0].grid();
            Ok(PathEnsemble::new(grid, paths, cfg.seed, cfg.hurst)?)
        }
        None => simulate(cfg),
    }
}

fn write_csv(cfg: &RunConfig, paths: &[SamplePath]) -> Result<()> {
    match &cfg.output {
        Some(p) => write_paths(p, paths)?,
        None => {
            let stdout = std::io::stdout();
            write_paths_to(stdout.lock(), paths).context("writing CSV to stdout")?;
        }
    }
    Ok(())
}

fn cmd_generate(cfg: RunConfig) -> Result<i32> {
    let ens = simulate(&cfg)?;
    write_csv(&cfg, ens.paths())?;
    Ok(EXIT_OK)
}

fn role_of(p: Process) -> Role {
    match p {
        Process::X => Role::X,
        Process::Y => Role::Y,
        Process::M => Role::M,
        Process::W => Role::W,
    }
}

/// Maps a path between processes, routing through X when no direct transform exists.
pub fn convert(path: &SamplePath, h: HurstIndex, from: Process, to: Process) -> Result<SamplePath> {
    use Process::*;
    let out = match (from, to) {
        _ if from == to || h.is_brownian() => path.clone(),
        (X, Y) => y_process(path, h)?,
        (Y, X) => x_from_y(path, h)?,
        (X, M) => fundamental_martingale(path, h)?,
        (M, W) => w_process(path, h)?,
        (M, Y) => y_from_m_abel(path, h)?,
        (M, X) if h.value() > 0.5 => x_from_m_high(path, h)?,
        (M, X) => x_from_w_low(&w_process(path, h)?, h)?,
        (W, X) => x_from_w_low(path, h)?,
        (X, W) => w_process(&fundamental_martingale(path, h)?, h)?,
        (W, _) => bail!("W can only be transformed to X (and only for H < 1/2)"),
        (_, _) => {
            let x = convert(path, h, from, X)?;
            convert(&x, h, X, to)?
        }
    };
    Ok(out.with_role(role_of(to)))
}

fn cmd_transform(cfg: RunConfig, from: Process, to: Process) -> Result<i32> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| anyhow!("transform needs --in <paths.csv>"))?;
    let paths = read_paths(input, role_of(from)).context("cannot use --in file")?;
    let h = cfg.hurst;
    let out: Vec<SamplePath> = cfg
        .exec
        .map(paths.len(), |i| convert(&paths[i], h, from, to))
        .into_iter()
        .collect::<Result<_>>()?;
    write_csv(&cfg, &out)?;
    Ok(EXIT_OK)
}

fn mean_of<F>(exec: Execution, ens: &PathEnsemble, f: F) -> Result<EstimateWithCI>
where
    F: Fn(&SamplePath) -> fbm_levy::Result<f64> + Sync + Send,
{
    let paths = ens.paths();
    let vals: Vec<f64> = exec
        .map(paths.len(), |i| f(&paths[i]))
        .into_iter()
        .collect::<fbm_levy::Result<_>>()?;
    Ok(EstimateWithCI::mean_of(&vals))
}

/// Ensemble-mean weighted QV at the horizon for `n, n/2, n/4, …` (down to 16 steps).
fn qv_series(cfg: &RunConfig, ens: &PathEnsemble) -> Result<Series> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut factor = 1;
    while let Some(c) = ens.coarsen(factor) {
        if c.grid().n() < 16 {
            break;
        }
        let e = mean_of(cfg.exec, &c, |p| Ok(weighted_qv(p, cfg.hurst)))?;
        x.push(c.grid().n() as f64);
        y.push(e.value);
        factor *= 2;
    }
    x.reverse();
    y.reverse();
    Ok(Series {
        name: "qv_vs_n".into(),
        x_label: "n".into(),
        y_label: "mean_weighted_qv".into(),
        x,
        y,
    })
}

fn bracket_series(bracket: &BracketPath) -> Series {
    Series {
        name: "bracket_vs_t".into(),
        x_label: "t".into(),
        y_label: "mean_bracket".into(),
        x: bracket.grid().times(),
        y: bracket.values().to_vec(),
    }
}

struct Stopwatch {
    start: Instant,
    entries: Vec<Timing>,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch {
            start: Instant::now(),
            entries: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.entries.push(Timing {
            stage: stage.into(),
            seconds: (now - self.start).as_secs_f64(),
        });
        self.start = now;
    }
}

fn finish(cfg: &RunConfig, mut doc: ReportDocument, watch: Stopwatch) -> Result<()> {
    if cfg.timings {
        doc.timings = Some(watch.entries);
    }
    match &cfg.output {
        Some(p) => {
            emit_report(&doc, p)?;
        }
        None => {
            let json = doc.to_json()?;
            std::io::stdout()
                .lock()
                .write_all(json.as_bytes())
                .context("writing report to stdout")?;
        }
    }
    Ok(())
}

fn cmd_estimate(cfg: RunConfig) -> Result<i32> {
    let mut watch = Stopwatch::new();
    let ens = load_or_simulate(&cfg)?;
    watch.lap("paths");
    let h = cfg.hurst;
    let hv = h.value();
    let t = ens.grid().horizon();
    let s = cfg.thresholds.tail_split * t;

    let mut estimates = vec![
        NamedEstimate {
            name: "weighted_qv".into(),
            estimate: mean_of(cfg.exec, &ens, |p| Ok(weighted_qv(p, h)))?,
            target: t.powf(2.0 * hv),
        },
        NamedEstimate {
            name: format!("weighted_qv_tail[s={s}]"),
            estimate: mean_of(cfg.exec, &ens, |p| weighted_qv_tail(p, h, s))?,
            target: t.powf(2.0 * hv - 1.0) * (t - s),
        },
        NamedEstimate {
            name: "p_variation".into(),
            estimate: mean_of(cfg.exec, &ens, |p| Ok(p_variation(p, h)))?,
            target: abs_normal_moment(1.0 / hv) * t,
        },
    ];
    if ens.grid().n() >= fbm_levy::estimators::HOLDER_MIN_N {
        estimates.push(NamedEstimate {
            name: "holder_exponent".into(),
            estimate: mean_of(cfg.exec, &ens, |p| {
                holder_exponent_estimate(p).map(|e| e.value)
            })?,
            target: hv,
        });
    }
    watch.lap("estimates");

    let ch = Characterizer::new(cfg.thresholds.clone(), cfg.exec);
    let ms = ch.martingales(&ens, h)?;
    let brackets: Vec<BracketPath> = ms.iter().map(empirical_bracket).collect();
    let mean_bracket = BracketPath::mean(&brackets)?;
    let t_min = cfg.thresholds.fit_start * t;
    let fit = powerlaw_fit(&mean_bracket, t_min, t)?;
    watch.lap("martingale");

    let results = Results {
        estimates,
        fits: vec![NamedFit {
            name: "mean_bracket_of_m".into(),
            t_min,
            t_max: t,
            fit,
        }],
        verdict: None,
        series: vec![qv_series(&cfg, &ens)?, bracket_series(&mean_bracket)],
    };
    let doc = ReportDocument::new(cfg.echo(&ens), results);
    finish(&cfg, doc, watch)?;
    Ok(EXIT_OK)
}

fn cmd_verify(cfg: RunConfig) -> Result<i32> {
    let mut watch = Stopwatch::new();
    let ens = load_or_simulate(&cfg)?;
    watch.lap("paths");
    let h = cfg.hurst;
    let ch = Characterizer::new(cfg.thresholds.clone(), cfg.exec);
    let a = ch.property_a(&ens, h)?;
    watch.lap("property_a");
    let b = ch.property_b(&ens, h, &[ens.grid().horizon()])?;
    watch.lap("property_b");
    let ms = ch.martingales(&ens, h)?;
    let (c, mean_bracket) = ch.property_c_from(&ens, h, &ms)?;
    watch.lap("property_c");
    let verdict = fbm_levy::CharacterizationVerdict::from_reports(&ens, h, vec![a, b, c]);
    let code = match verdict.verdict {
        Verdict::Consistent => EXIT_OK,
        Verdict::Inconsistent => EXIT_INCONSISTENT,
    };
    let t = ens.grid().horizon();
    let t_min = cfg.thresholds.fit_start * t;
    let fits = match powerlaw_fit(&mean_bracket, t_min, t) {
        Ok(fit) => vec![NamedFit {
            name: "mean_bracket_of_m".into(),
            t_min,
            t_max: t,
            fit,
        }],
        Err(_) => vec![],
    };
    let results = Results {
        estimates: vec![],
        fits,
        verdict: Some(verdict),
        series: vec![qv_series(&cfg, &ens)?, bracket_series(&mean_bracket)],
    };
    let doc = ReportDocument::new(cfg.echo(&ens), results);
    finish(&cfg, doc, watch)?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn thresholds_are_pulled_out_of_argv() {
        let (rest, th) = extract_thresholds(args(&[
            "fbm-levy",
            "verify",
            "--threshold.exponent_tol",
            "0.2",
            "--hurst",
            "0.7",
            "--threshold.ci_z=4",
        ]))
        .unwrap();
        assert_eq!(rest, args(&["fbm-levy", "verify", "--hurst", "0.7"]));
        assert_eq!(th.exponent_tol, 0.2);
        assert_eq!(th.ci_z, 4.0);
        assert!(extract_thresholds(args(&["x", "--threshold.bogus=1"])).is_err());
        assert!(extract_thresholds(args(&["x", "--threshold.ci_z"])).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["fbm-levy", "verify", "--hurst", "1.2"]), EXIT_USAGE);
        assert_eq!(run(["fbm-levy", "verify"]), EXIT_USAGE);
        assert_eq!(run(["fbm-levy", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            run(["fbm-levy", "verify", "--hurst", "0.5", "--n", "0"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["fbm-levy", "verify", "--hurst", "0.5", "--bogus"]),
            EXIT_USAGE
        );
        assert_eq!(
            run([
                "fbm-levy",
                "verify",
                "--hurst",
                "0.5",
                "--threshold.nope",
                "1"
            ]),
            EXIT_USAGE
        );
    }

    #[test]
    fn numeric_errors_exit_three() {
        let e =
            anyhow::Error::from(FbmError::DegeneratePath { scale: 1 }).context("while estimating");
        assert_eq!(exit_code(&e), EXIT_NUMERIC);
        let e = anyhow::Error::from(FbmError::InvalidHurst(2.0));
        assert_eq!(exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn conversions_route_through_x() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let x = SamplePath::from_fn(g, Role::X, |t| (5.0 * t).sin());
        let h = HurstIndex::new(0.5).unwrap();
        for to in [Process::X, Process::Y, Process::M, Process::W] {
            let p = convert(&x, h, Process::X, to).unwrap();
            assert_eq!(p.role(), role_of(to));
            for (a, b) in p.values().iter().zip(x.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let h = HurstIndex::new(0.7).unwrap();
        let y = convert(&x, h, Process::X, Process::Y).unwrap();
        let m = convert(&y, h, Process::Y, Process::M).unwrap();
        assert_eq!(m.role(), Role::M);
        assert!(convert(&m, h, Process::W, Process::M).is_err());
    }
}
