//! Command-line front end. Dark count rates given on the command line (`--da`,
//! `--db`) are counts per second and are turned into per-window probabilities
//! once, here, using `--window`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::detection::LinkParams;
use crate::error::{invalid, Error, Result};
use crate::fockstate::{SqueezingParam, DEFAULT_TRUNC};
use crate::io::{read_catalog, read_profile, read_sweep, write_sweep};
use crate::linkapps::{loss_budget, pass_report, simulate_pass, KeyDuration, PassMode, PassProfile};
use crate::keyrate::{MetricsConfig, QAveraging};
use crate::model::{eval_optimal_tf, noise_budget, refit_constants, ModelConstants};
use crate::optimizer::{optimal_epsilon, optimal_epsilon_with, sweep_grid, SearchOptions, SweepRow, NOMINAL_WINDOW};
use crate::oracle::compare_with_analytic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eqkd", version, about = "Entanglement-based QKD link optimizer")]
pub struct Cli {
    /// Fock-space truncation per mode.
    #[arg(long, global = true, default_value_t = DEFAULT_TRUNC)]
    pub trunc: usize,
    /// Coincidence window in seconds (default depends on the command).
    #[arg(long, global = true)]
    pub window: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal squeezing and key rate for one link.
    Optimize(OptimizeArgs),
    /// Optimize a symmetric grid and write CSV.
    Sweep(SweepArgs),
    /// Closed-form optimal two-fold rate and noise budget.
    ModelEval(ModelEvalArgs),
    /// Refit the model constants to a sweep CSV.
    Refit(RefitArgs),
    /// Fiber loss budgets for a detector catalog.
    Budget(BudgetArgs),
    /// Variable versus fixed pumping over a satellite pass.
    Pass(PassArgs),
    /// Monte Carlo check of the analytic click statistics.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Total efficiency of Alice's arm (channel times detector).
    #[arg(long)]
    pub eta_a: f64,
    #[arg(long)]
    pub eta_b: f64,
    /// Alice's dark count rate per detector, counts per second.
    #[arg(long, default_value_t = 0.0)]
    pub da: f64,
    #[arg(long, default_value_t = 0.0)]
    pub db: f64,
}

impl LinkArgs {
    fn link(&self, window: f64) -> Result<LinkParams> {
        LinkParams::new(self.eta_a, self.eta_b, self.da * window, self.db * window, window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QBasis {
    /// Average the Z/Z and X/X coincidence probabilities.
    Both,
    Z,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    /// Pairings that enter the coincidence probability Q.
    #[arg(long, value_enum, default_value_t = QBasis::Both)]
    pub q_basis: QBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Simulation,
    Model,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long)]
    pub eta: String,
    /// Per-window dark probabilities, same syntax as `--eta`.
    #[arg(long, default_value = "0")]
    pub d: String,
    #[arg(long, value_enum, default_value_t = Source::Simulation)]
    pub source: Source,
    /// `tabulated`, `printed`, or a JSON file with keys A..E.
    #[arg(long, default_value = "tabulated")]
    pub constants: String,
}

#[derive(Debug, Args)]
pub struct ModelEvalArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long, default_value = "tabulated")]
    pub constants: String,
}

#[derive(Debug, Args)]
pub struct RefitArgs {
    /// Sweep CSV as written by `sweep`.
    #[arg(long)]
    pub sweep: PathBuf,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Seconds, or `asymptotic`.
    #[arg(long, default_value = "asymptotic")]
    pub duration: String,
    /// Key bits to accumulate.
    #[arg(long, default_value_t = 50_000.0)]
    pub target: f64,
    /// Fiber attenuation used for the distance column, dB/km.
    #[arg(long, default_value_t = 0.17)]
    pub atten: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Variable,
    Fixed,
    Both,
}

#[derive(Debug, Args)]
pub struct PassArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Squeezing parameter; the link optimum when omitted.
    #[arg(long)]
    pub eps: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = execute(&cli, &mut buf);
    let code = match &result {
        Ok(code) => *code,
        Err(Error::InfeasibleLink { .. } | Error::InfeasibleDetector { .. }) => EXIT_INFEASIBLE,
        Err(_) => EXIT_USAGE,
    };
    if let Err(e) = &result {
        let _ = writeln!(err, "error: {e}");
    }
    if !buf.is_empty() {
        let written = match &cli.out {
            Some(path) => std::fs::write(path, &buf).map_err(Error::from),
            None => out.write_all(&buf).map_err(Error::from),
        };
        if let Err(e) = written {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    }
    code
}

fn execute(cli: &Cli, out: &mut Vec<u8>) -> Result<i32> {
    if !(1..=12).contains(&cli.trunc) {
        return Err(invalid(format!("--trunc must lie in 1..=12, got {}", cli.trunc)));
    }
    if let Some(w) = cli.window {
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(format!("--window must be > 0 s, got {w}")));
        }
    }
    let window = cli.window.unwrap_or(NOMINAL_WINDOW);
    match &cli.command {
        Command::Optimize(a) => {
            let link = a.link.link(window)?;
            let opts = SearchOptions {
                metrics: MetricsConfig {
                    q_averaging: match a.q_basis {
                        QBasis::Both => QAveraging::BothBases,
                        QBasis::Z => QAveraging::ZOnly,
                    },
                },
                ..SearchOptions::default()
            };
            match optimal_epsilon_with(&link, cli.trunc, &opts) {
                Ok(rec) => {
                    json(out, &rec)?;
                    Ok(EXIT_OK)
                }
                Err(Error::InfeasibleLink { best }) => {
                    json(out, &Diagnostic { feasible: false, best: &*best })?;
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Sweep(a) => {
            let etas = parse_values(&a.eta, "--eta")?;
            let ds = parse_values(&a.d, "--d")?;
            let rows = match a.source {
                Source::Simulation => sweep_grid(&etas, &ds, cli.trunc)?,
                Source::Model => model_rows(&etas, &ds, &constants(&a.constants)?)?,
            };
            write_sweep(&mut *out, &rows)?;
            Ok(EXIT_OK)
        }
        Command::ModelEval(a) => {
            let link = a.link.link(window)?;
            let k = constants(&a.constants)?;
            let p = eval_optimal_tf(link.eta_a, link.eta_b, link.d_a, link.d_b, &k)?;
            let budget = if link.eta_a + link.eta_b > 0.0 {
                Some(noise_budget(link.eta_a, link.eta_b)?)
            } else {
                None
            };
            json(
                out,
                &ModelEval {
                    constants: k,
                    p_tf: p.p_tf,
                    feasible: p.feasible,
                    rate_per_second: p.rate(window),
                    window,
                    noise_budget: budget,
                },
            )?;
            Ok(if p.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Refit(a) => {
            let rows = read_sweep(open(&a.sweep)?)?;
            json(out, &refit_constants(&rows)?)?;
            Ok(EXIT_OK)
        }
        Command::Budget(a) => {
            let catalog = read_catalog(open(&a.catalog)?)?;
            let duration = parse_duration(&a.duration)?;
            budget_table(out, &catalog, duration, a.target, cli.window, a.atten)?;
            Ok(EXIT_OK)
        }
        Command::Pass(a) => {
            let mut profile = PassProfile::new(read_profile(open(&a.profile)?)?)?;
            profile.trunc = cli.trunc;
            if let Some(w) = cli.window {
                profile.window = w;
            }
            match a.mode {
                ModeArg::Both => json(out, &pass_report(&profile)?)?,
                ModeArg::Variable => json(out, &simulate_pass(&profile, PassMode::Variable)?)?,
                ModeArg::Fixed => json(out, &simulate_pass(&profile, PassMode::Fixed)?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Oracle(a) => {
            let link = a.link.link(window)?;
            let eps = match a.eps {
                Some(e) => SqueezingParam::new(e)?,
                None => match optimal_epsilon(&link, cli.trunc) {
                    Ok(rec) => rec.eps_star,
                    Err(Error::InfeasibleLink { best }) => best.eps_star,
                    Err(e) => return Err(e),
                },
            };
            let cmp = compare_with_analytic(eps, cli.trunc, &link, a.samples, a.seed)?;
            json(
                out,
                &OracleReport {
                    seed: a.seed,
                    agrees: cmp.agrees(),
                    comparison: cmp,
                },
            )?;
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct Diagnostic<'a, T: Serialize> {
    feasible: bool,
    best: &'a T,
}

#[derive(Serialize)]
struct ModelEval {
    constants: ModelConstants,
    p_tf: f64,
    feasible: bool,
    rate_per_second: f64,
    window: f64,
    noise_budget: Option<f64>,
}

#[derive(Serialize)]
struct OracleReport {
    seed: u64,
    agrees: bool,
    comparison: crate::oracle::OracleComparison,
}

fn json<T: Serialize>(out: &mut Vec<u8>, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.push(b'\n');
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))
}

fn constants(spec: &str) -> Result<ModelConstants> {
    match spec {
        "tabulated" => Ok(ModelConstants::TABULATED),
        "printed" => Ok(ModelConstants::PRINTED),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read constants {path}: {e}")))?;
            ModelConstants::from_json(&text)
        }
    }
}

/// `start:stop:step` inclusive of `stop`, or `a,b,c`.
pub fn parse_values(text: &str, flag: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid(format!("{flag}: `{s}` is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || stop < start {
                return Err(invalid(format!("{flag}: need start <= stop and step > 0")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // round away accumulated binary noise so grid values print cleanly
            Ok((0..n)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(invalid(format!("{flag}: expected start:stop:step or a comma list"))),
    }
}

fn parse_duration(text: &str) -> Result<KeyDuration> {
    if text.eq_ignore_ascii_case("asymptotic") {
        return Ok(KeyDuration::Asymptotic);
    }
    text.parse::<f64>()
        .ok()
        .filter(|s| s.is_finite() && *s > 0.0)
        .map(KeyDuration::Seconds)
        .ok_or_else(|| invalid(format!("--duration: expected seconds or `asymptotic`, got `{text}`")))
}

fn model_rows(etas: &[f64], ds: &[f64], k: &ModelConstants) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &eta in etas {
        for &d in ds {
            let p = eval_optimal_tf(eta, eta, d, d, k)?;
            rows.push(SweepRow {
                eta,
                d,
                eps_star: f64::NAN,
                p_tf_star: p.p_tf,
                skr_per_window: f64::NAN,
                mu: f64::NAN,
                feasible: p.feasible,
            });
        }
    }
    Ok(rows)
}

fn budget_table(
    out: &mut Vec<u8>,
    catalog: &[crate::linkapps::DetectorCatalogEntry],
    duration: KeyDuration,
    target: f64,
    window: Option<f64>,
    atten: f64,
) -> Result<()> {
    use rayon::prelude::*;
    let results: Vec<_> = catalog
        .par_iter()
        .map(|det| loss_budget(det, duration, target, window))
        .collect();
    let mut w = csv::Writer::from_writer(&mut *out);
    w.write_record([
        "name",
        "window_s",
        "channel_loss_db",
        "total_loss_db",
        "per_arm_channel_db",
        "fiber_km",
        "capped",
        "coincidence_rate",
        "pair_generation_rate",
        "status",
    ])?;
    for (det, res) in catalog.iter().zip(results) {
        match res {
            Ok(b) => {
                let km = crate::linkapps::fiber_distance(b.channel_loss_db, atten)?;
                w.write_record([
                    b.name.clone(),
                    format!("{:e}", b.window),
                    format!("{:.1}", b.channel_loss_db),
                    format!("{:.1}", b.total_loss_db),
                    format!("{:.2}", b.per_arm_channel_db),
                    format!("{km:.1}"),
                    b.capped.to_string(),
                    format!("{:.4e}", b.coincidence_rate),
                    format!("{:.4e}", b.pair_generation_rate),
                    "ok".into(),
                ])?;
            }
            Err(Error::InfeasibleDetector { .. }) => {
                let win = window.unwrap_or_else(|| det.default_window());
                let mut rec = vec![det.name.clone(), format!("{win:e}")];
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.push("infeasible".into());
                w.write_record(rec)?;
            }
            Err(e) => return Err(e),
        }
    }
    w.flush()?;
    Ok(())
}
