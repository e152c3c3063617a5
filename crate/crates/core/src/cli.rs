//! `scorebench` command line.
//!
//! Every subcommand writes its artifacts into `--out` (a directory, created
//! if missing) or, without `--out`, prints the primary table to stdout.
//! CSV tables carry 9 significant digits; JSON documents carry
//! shortest round-trip numbers and a `schema_version` field.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bench::{self, FileFormat, Metric, SCHEMA_VERSION};
use crate::error::{domain, Result, ScoreError};
use crate::fit::{fit_cond_hist, TrainConfig};
use crate::forecasts::SupportGrid;
use crate::pointscore::{expected_bregman, grid_argmin, BregmanFamily};
use crate::ranking::{beta_sweep, bregman_sweep, rank, toy_suite, RankTable, ScoreMatrix};
use crate::rules::Rule;
use crate::toygen::{
    die_distribution, gen_bimodal, gen_cosine_exptail, gen_factory, BimodalConfig, Dataset,
    DatasetMeta, FactoryConfig, SignalKind, TailSide,
};

#[derive(Debug, Parser)]
#[command(
    name = "scorebench",
    version,
    about = "Proper scoring rules and distributional regression benchmarks"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "SCOREBENCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

impl OutFormat {
    fn ext(self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank models A-E under beta-energy scores.
    RankBeta {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 1.073, 2.0])]
        betas: Vec<f64>,
    },
    /// Rank models A-E under power Bregman divergences.
    RankBregman {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.2, 2.0, 3.0, 4.0])]
        ps: Vec<f64>,
    },
    /// Expected Bregman divergence over a fair die as a function of the prediction.
    Dice {
        #[arg(long, default_value = "power_shifted")]
        family: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
        p: f64,
        /// Prediction grid as lo:hi:step.
        #[arg(long, default_value = "1:6:0.01")]
        grid: String,
    },
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Train a conditional histogram by minimizing a scoring rule.
    Fit(FitArgs),
    /// Score every record of a forecast file.
    Score {
        #[arg(long)]
        rule: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Paired comparison of two forecast files over the same observations.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value_t = bench::DEFAULT_EPSILON)]
        epsilon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Factory,
    Exptail,
    Bimodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Left,
    Right,
}

impl From<Side> for TailSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => TailSide::Left,
            Side::Right => TailSide::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Signal {
    DampenedOscillation,
    Polynomial,
    RectifiedTrend,
    PiecewiseSawtooth,
}

impl From<Signal> for SignalKind {
    fn from(s: Signal) -> Self {
        match s {
            Signal::DampenedOscillation => SignalKind::DampenedOscillation,
            Signal::Polynomial => SignalKind::Polynomial,
            Signal::RectifiedTrend => SignalKind::RectifiedTrend,
            Signal::PiecewiseSawtooth => SignalKind::PiecewiseSawtooth,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Side::Right)]
    pub side: Side,
    #[arg(long, value_enum, default_value_t = Signal::DampenedOscillation)]
    pub signal: Signal,
    #[arg(long, default_value_t = 0.25)]
    pub p_out: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gap: f64,
    #[arg(long, default_value_t = 0.15)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset CSV with columns x,y.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "crps")]
    pub rule: String,
    #[arg(long, default_value_t = 8)]
    pub x_bins: usize,
    #[arg(long, default_value_t = 40)]
    pub y_bins: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
}

/// Formats `v` rounded to `digits` significant digits, in shortest form.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .unwrap_or(v);
    rounded.to_string()
}

fn csv_num(v: f64) -> String {
    fmt_sig(v, 9)
}

/// In-memory artifact: file stem plus rendered content.
struct Artifact {
    stem: String,
    content: String,
}

fn table_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| ScoreError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_doc<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let mut v = serde_json::to_value(body)?;
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("kind".into(), json!(kind));
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn matrix_artifact(m: &ScoreMatrix, stem: &str, fmt: OutFormat) -> Result<Artifact> {
    let content = match fmt {
        OutFormat::Csv => {
            let header = vec!["model".into(), m.param_name.clone(), "score".into()];
            let mut rows = Vec::new();
            for (name, row) in m.models.iter().zip(&m.scores) {
                for (p, s) in m.params.iter().zip(row) {
                    rows.push(vec![name.clone(), csv_num(*p), csv_num(*s)]);
                }
            }
            table_csv(&header, &rows)?
        }
        OutFormat::Json => json_doc("score_matrix", m)?,
    };
    Ok(Artifact {
        stem: stem.into(),
        content,
    })
}

fn ranks_artifact(r: &RankTable, stem: &str, fmt: OutFormat) -> Result<Artifact> {
    let content = match fmt {
        OutFormat::Csv => {
            let mut header = vec!["model".to_string()];
            header.extend(
                r.params
                    .iter()
                    .map(|p| format!("rank_{}={}", r.param_name, csv_num(*p))),
            );
            let rows: Vec<Vec<String>> = r
                .models
                .iter()
                .zip(&r.ranks)
                .map(|(m, row)| {
                    let mut v = vec![m.clone()];
                    v.extend(row.iter().map(|x| x.to_string()));
                    v
                })
                .collect();
            table_csv(&header, &rows)?
        }
        OutFormat::Json => json_doc("rank_table", r)?,
    };
    Ok(Artifact {
        stem: stem.into(),
        content,
    })
}

fn parse_range(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return domain(format!("expected lo:hi:step, got {s:?}"));
    }
    let nums: std::result::Result<Vec<f64>, _> =
        parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    match nums.as_deref() {
        Ok([lo, hi, step]) => Ok((*lo, *hi, *step)),
        _ => domain(format!("expected lo:hi:step, got {s:?}")),
    }
}

/// Runs one parsed command and returns the lines it prints plus artifacts.
fn execute(cli: &Cli) -> Result<(String, Vec<Artifact>)> {
    let fmt = cli.format;
    match &cli.command {
        Command::RankBeta { betas } => {
            let (models, truth) = toy_suite();
            let m = beta_sweep(&models, &truth, betas)?;
            let r = rank(&m)?;
            let summary = r.to_text();
            Ok((
                summary,
                vec![
                    ranks_artifact(&r, "ranks", fmt)?,
                    matrix_artifact(&m, "scores", fmt)?,
                ],
            ))
        }
        Command::RankBregman { ps } => {
            let (models, truth) = toy_suite();
            let (m, r) = bregman_sweep(&models, &truth, ps)?;
            let mut summary = r.to_text();
            if r.params.len() >= 2 {
                let flips = r.flipped_pairs(0, r.params.len() - 1);
                summary.push_str(&format!(
                    "flipped pairs between first and last p: {}\n",
                    flips.len()
                ));
            }
            Ok((
                summary,
                vec![
                    ranks_artifact(&r, "ranks", fmt)?,
                    matrix_artifact(&m, "scores", fmt)?,
                ],
            ))
        }
        Command::Dice { family, p, grid } => {
            let fam = BregmanFamily::from_name(family, *p)?;
            let (lo, hi, step) = parse_range(grid)?;
            let die = die_distribution();
            let (argmin, curve) = grid_argmin(|c| expected_bregman(fam, &die, c), lo, hi, step)?;
            let content = match fmt {
                OutFormat::Csv => {
                    let rows: Vec<Vec<String>> = curve
                        .iter()
                        .map(|(c, v)| vec![csv_num(*c), csv_num(*v)])
                        .collect();
                    table_csv(&["c".into(), "expected_divergence".into()], &rows)?
                }
                OutFormat::Json => json_doc(
                    "dice_curve",
                    &json!({
                        "family": fam,
                        "argmin": argmin,
                        "c": curve.iter().map(|p| p.0).collect::<Vec<_>>(),
                        "expected_divergence": curve.iter().map(|p| p.1).collect::<Vec<_>>(),
                    }),
                )?,
            };
            let summary = format!("family={} argmin={}\n", fam.name(), fmt_sig(argmin, 9));
            Ok((
                summary,
                vec![Artifact {
                    stem: "dice".into(),
                    content,
                }],
            ))
        }
        Command::Generate(args) => {
            let data = match args.kind {
                GenKind::Factory => gen_factory(
                    &FactoryConfig {
                        n: args.n,
                        p_out: args.p_out,
                        signal_kind: args.signal.into(),
                        tail_side: args.side.into(),
                        ..FactoryConfig::default()
                    },
                    cli.seed,
                )?,
                GenKind::Exptail => gen_cosine_exptail(args.n, cli.seed, args.side.into())?,
                GenKind::Bimodal => gen_bimodal(
                    &BimodalConfig {
                        n: args.n,
                        gap: args.gap,
                        sigma: args.sigma,
                        ..BimodalConfig::default()
                    },
                    cli.seed,
                )?,
            };
            let content = match fmt {
                OutFormat::Csv => {
                    let mut buf = Vec::new();
                    data.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("utf-8")
                }
                OutFormat::Json => json_doc("dataset", &data)?,
            };
            let meta = json_doc("dataset_meta", &data.meta)?;
            let summary = format!(
                "generated {} points ({})\n",
                data.len(),
                data.meta.generator
            );
            Ok((
                summary,
                vec![
                    Artifact {
                        stem: "dataset".into(),
                        content,
                    },
                    Artifact {
                        stem: "dataset_meta".into(),
                        content: meta,
                    },
                ],
            ))
        }
        Command::Fit(args) => run_fit(args, cli.seed, fmt),
        Command::Score { rule, input } => {
            let rule = Rule::parse(rule)?;
            let records = bench::ingest(input, FileFormat::from_path(input))?;
            let mut values = Vec::with_capacity(records.len());
            for r in &records {
                values.push(rule.score_gridded(&r.forecast, r.y)?.value);
            }
            let content = match fmt {
                OutFormat::Csv => {
                    let rows: Vec<Vec<String>> = records
                        .iter()
                        .zip(&values)
                        .map(|(r, v)| vec![r.id.clone(), csv_num(r.y), csv_num(*v)])
                        .collect();
                    table_csv(&["id".into(), "y".into(), rule.to_string()], &rows)?
                }
                OutFormat::Json => json_doc(
                    "scores",
                    &json!({
                        "rule": rule,
                        "ids": records.iter().map(|r| r.id.clone()).collect::<Vec<_>>(),
                        "y": records.iter().map(|r| r.y).collect::<Vec<_>>(),
                        "scores": values,
                    }),
                )?,
            };
            let mean = bench::stable_sum(&values) / values.len().max(1) as f64;
            let summary = format!(
                "{} records, mean {} = {}\n",
                records.len(),
                rule,
                fmt_sig(mean, 9)
            );
            Ok((
                summary,
                vec![Artifact {
                    stem: "scores".into(),
                    content,
                }],
            ))
        }
        Command::Compare {
            baseline,
            candidate,
            epsilon,
        } => {
            let b = bench::ingest(baseline, FileFormat::from_path(baseline))?;
            let c = bench::ingest(candidate, FileFormat::from_path(candidate))?;
            let p = bench::compare_records(&b, &c, *epsilon)?;
            let content = match fmt {
                OutFormat::Csv => {
                    let header: Vec<String> = [
                        "metric",
                        "unit_of_improvement",
                        "mean",
                        "std",
                        "median",
                        "wins",
                        "losses",
                        "ties",
                        "excluded",
                    ]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                    let rows: Vec<Vec<String>> = p
                        .metrics
                        .iter()
                        .map(|m| {
                            vec![
                                m.metric.name().into(),
                                if m.metric == Metric::R2 {
                                    "pp".into()
                                } else {
                                    "percent".into()
                                },
                                csv_num(m.mean),
                                csv_num(m.std),
                                csv_num(m.median),
                                m.wins.to_string(),
                                m.losses.to_string(),
                                m.ties.to_string(),
                                m.excluded.to_string(),
                            ]
                        })
                        .collect();
                    table_csv(&header, &rows)?
                }
                OutFormat::Json => json_doc("paired_improvement", &p)?,
            };
            let mut summary = String::new();
            for m in &p.metrics {
                summary.push_str(&format!(
                    "{:<5} mean {:>12} W/L/T {}/{}/{}\n",
                    m.metric.name(),
                    fmt_sig(m.mean, 6),
                    m.wins,
                    m.losses,
                    m.ties
                ));
            }
            Ok((
                summary,
                vec![Artifact {
                    stem: "improvement".into(),
                    content,
                }],
            ))
        }
    }
}

fn run_fit(args: &FitArgs, seed: u64, fmt: OutFormat) -> Result<(String, Vec<Artifact>)> {
    let rule = Rule::parse(&args.rule)?;
    let data = Dataset::read_csv(
        &args.data,
        DatasetMeta {
            generator: "file".into(),
            seed,
            parameters: json!({ "path": args.data.display().to_string() }),
        },
    )?;
    if data.is_empty() {
        return domain("dataset is empty");
    }
    if args.x_bins == 0 || args.y_bins == 0 {
        return domain("bin counts must be positive");
    }
    let (xmin, xmax) = min_max(&data.x);
    let (ymin, ymax) = min_max(&data.y);
    let pad = |lo: f64, hi: f64| 1e-6 * (hi - lo).abs().max(1.0);
    let xp = pad(xmin, xmax);
    let yp = pad(ymin, ymax);
    let x_edges: Vec<f64> = (0..=args.x_bins)
        .map(|i| (xmin - xp) + (xmax - xmin + 2.0 * xp) * i as f64 / args.x_bins as f64)
        .collect();
    let y_grid = SupportGrid::uniform(ymin - yp, ymax + yp, args.y_bins)?;
    let mut cfg = TrainConfig::new(rule);
    cfg.learning_rate = args.lr;
    cfg.max_epochs = args.epochs;
    cfg.patience = args.patience;
    cfg.seed = seed;
    let fit = fit_cond_hist(&data, x_edges, y_grid, &cfg)?;
    let model = json_doc(
        "cond_hist_model",
        &json!({ "config": cfg, "rule": rule, "model": fit.model }),
    )?;
    let trace = match fmt {
        OutFormat::Csv => {
            let rows: Vec<Vec<String>> = fit
                .loss_trace
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let g = fit.grad_norms.get(i).map_or(String::new(), |g| csv_num(*g));
                    vec![i.to_string(), csv_num(*l), g]
                })
                .collect();
            table_csv(&["epoch".into(), "loss".into(), "grad_norm".into()], &rows)?
        }
        OutFormat::Json => json_doc(
            "loss_trace",
            &json!({ "loss": fit.loss_trace, "grad_norm": fit.grad_norms, "epochs_run": fit.epochs_run }),
        )?,
    };
    let summary = format!(
        "trained {} epochs on {} points, best {} = {}\n",
        fit.epochs_run,
        data.len(),
        rule,
        fmt_sig(fit.best_score, 9)
    );
    Ok((
        summary,
        vec![
            Artifact {
                stem: "model".into(),
                content: model,
            },
            Artifact {
                stem: "trace".into(),
                content: trace,
            },
        ],
    ))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn write_artifacts(dir: &Path, fmt: OutFormat, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for a in artifacts {
        // Model files and metadata are JSON regardless of --format.
        let ext = if a.content.trim_start().starts_with('{') {
            "json"
        } else {
            fmt.ext()
        };
        let path = dir.join(format!("{}.{ext}", a.stem));
        fs::write(&path, &a.content)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Parses `argv` and runs it; returns the process exit code
/// (0 success, 1 runtime error, 2 usage error).
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((summary, artifacts)) => {
            match &cli.out {
                Some(dir) => match write_artifacts(dir, cli.format, &artifacts) {
                    Ok(paths) => {
                        let _ = write!(stdout, "{summary}");
                        for p in paths {
                            let _ = writeln!(stdout, "wrote {}", p.display());
                        }
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "error: {e}");
                        return 1;
                    }
                },
                None => {
                    let _ = write!(stdout, "{}", artifacts[0].content);
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
