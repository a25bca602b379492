//! Command-line front end: synthetic data generation, the distributed
//! pipeline, single-pair tests, and the experiment drivers.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use dtgm::error::{Error, Result};
use dtgm::experiment::{
    emit_report, render_csv, render_json, run_estimation_experiment, run_power, run_type1,
    EstimationRow, ExperimentConfig, ExperimentModel, ExperimentSetting, RepFailure, ReportFormat,
    ReportRow,
};
use dtgm::matrix::DenseMatrix;
use dtgm::runtime::codec::{decode_matrix, encode_matrix};
use dtgm::runtime::{run_pipeline, PairSelection, PipelineConfig, TransportKind};
use dtgm::seed::derive_seed;
use dtgm::synth::{generate_precision, GraphSpec};

#[derive(Parser)]
#[command(
    name = "dtgm",
    version,
    about = "Distributed estimation and inference for transelliptical graphical models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransportArg {
    Inprocess,
    Socket,
}

impl From<TransportArg> for TransportKind {
    fn from(t: TransportArg) -> Self {
        match t {
            TransportArg::Inprocess => TransportKind::InProcess,
            TransportArg::Socket => TransportKind::Socket,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset plus its ground truth.
    Synth {
        /// JSON config: {"graph": {...GraphSpec...}, "n": rows, "model": ..., "seed": ...}
        #[arg(long)]
        config: PathBuf,
        /// Overrides both the graph seed and the data seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix; writes <out>.data.bin, <out>.theta_star.bin,
        /// <out>.sigma_star.bin, <out>.meta.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the distributed pipeline on a dataset file.
    Estimate {
        /// Data file in the binary matrix format (written by `synth`).
        data: PathBuf,
        /// JSON config mirroring the pipeline config fields.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// json = full report, csv = thresholded matrix dump.
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
    },
    /// Run the pipeline and report entrywise hypothesis tests.
    Test {
        /// Data file in the binary matrix format (written by `synth`).
        data: PathBuf,
        /// JSON config mirroring the pipeline config fields.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured pair list, e.g. --pair 0,3.
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
    },
    /// Run an experiment driver from a JSON config.
    Experiment {
        /// JSON config mirroring the experiment config fields.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output path; also writes <out>.rows.* and <out>.meta.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Scale d, reps, and the grids up to the full benchmark profile.
        #[arg(long)]
        full: bool,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    graph: GraphSpec,
    n: usize,
    #[serde(default = "default_synth_model")]
    model: ExperimentModel,
    /// Seed for the data draw; the graph seed lives in `graph.seed`.
    #[serde(default)]
    seed: u64,
}

fn default_synth_model() -> ExperimentModel {
    ExperimentModel::Gaussian
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let (x, used) = decode_matrix(&bytes)?;
    if used != bytes.len() {
        return Err(Error::Protocol(format!(
            "{}: {} trailing bytes after the matrix message",
            path.display(),
            bytes.len() - used
        )));
    }
    Ok(x)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// results.csv -> results.rows.csv
fn rows_path(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("rows.{ext}")),
        None => out.with_extension("rows"),
    }
}

/// results.csv -> results.meta.json
fn meta_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn parse_pair(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "--pair wants the form j,k, got {text:?}"
        )));
    }
    let j = parts[0].trim().parse::<usize>();
    let k = parts[1].trim().parse::<usize>();
    match (j, k) {
        (Ok(j), Ok(k)) => Ok((j, k)),
        _ => Err(Error::InvalidConfig(format!(
            "--pair wants two indices, got {text:?}"
        ))),
    }
}

fn matrix_csv(a: &DenseMatrix) -> String {
    let mut out = String::new();
    for j in 0..a.rows() {
        let row: Vec<String> = (0..a.cols())
            .map(|k| dtgm::experiment::fmt_float(a.get(j, k)))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn report_failures(failures: &[RepFailure]) {
    for f in failures {
        match f.mu {
            Some(mu) => eprintln!("rep failed: m={} rep={} mu={}: {}", f.m, f.rep, mu, f.message),
            None => eprintln!("rep failed: m={} rep={}: {}", f.m, f.rep, f.message),
        }
    }
}

fn emit_rows<R: ReportRow>(
    rows: &[R],
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    match out {
        Some(path) => {
            emit_report(rows, format, path)?;
            println!("wrote {}", path.display());
        }
        None => {
            let text = match format {
                ReportFormat::Csv => render_csv(rows)?,
                ReportFormat::Json => render_json(rows)?,
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn emit_secondary<R: ReportRow>(rows: &[R], format: ReportFormat, out: &Path) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let path = rows_path(out);
    emit_report(rows, format, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn emit_meta(cfg: &ExperimentConfig, rows: usize, failures: usize, out: &Path) -> Result<()> {
    let meta = serde_json::json!({
        "config": cfg,
        "rows": rows,
        "failed_reps": failures,
    });
    let path = meta_path(out);
    write_text(&path, &format!("{}\n", serde_json::to_string_pretty(&meta)?))
}

fn run_synth(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg: SynthConfig = read_config(config)?;
    if let Some(s) = seed {
        cfg.graph.seed = derive_seed(s, 0);
        cfg.seed = derive_seed(s, 1);
    }
    let truth = generate_precision(&cfg.graph)?;
    let x = cfg.model.sample(&truth, cfg.n, cfg.seed)?;

    let prefix = out.as_os_str().to_string_lossy();
    write_bytes(&PathBuf::from(format!("{prefix}.data.bin")), &encode_matrix(&x))?;
    write_bytes(
        &PathBuf::from(format!("{prefix}.theta_star.bin")),
        &encode_matrix(truth.theta_star()),
    )?;
    write_bytes(
        &PathBuf::from(format!("{prefix}.sigma_star.bin")),
        &encode_matrix(truth.sigma_star()),
    )?;
    let meta = serde_json::json!({
        "graph": cfg.graph,
        "model": cfg.model,
        "n": cfg.n,
        "seed": cfg.seed,
        "dimension": truth.dimension(),
        "edges": truth.support().len(),
        "sparsity": truth.sparsity(),
    });
    write_text(
        &PathBuf::from(format!("{prefix}.meta.json")),
        &format!("{}\n", serde_json::to_string_pretty(&meta)?),
    )
}

fn load_pipeline_config(
    config: &Path,
    seed: Option<u64>,
    transport: Option<TransportArg>,
) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = read_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = transport {
        cfg.transport = t.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_estimate(
    data: &Path,
    config: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    format: FormatArg,
    transport: Option<TransportArg>,
) -> Result<()> {
    let cfg = load_pipeline_config(config, seed, transport)?;
    let x = read_matrix(data)?;
    let report = run_pipeline(&x, &cfg)?;
    eprintln!(
        "n_total={} d={} m={} messages={} threshold={:.6e} total_ms={:.1}",
        x.rows(),
        x.cols(),
        cfg.m,
        report.result.messages,
        report.result.threshold_used,
        report.timings.total_ms,
    );
    let text = match format {
        FormatArg::Json => format!("{}\n", serde_json::to_string_pretty(&report)?),
        FormatArg::Csv => matrix_csv(&report.result.theta_check),
    };
    match out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_test_cmd(
    data: &Path,
    config: &Path,
    pair: Option<&str>,
    seed: Option<u64>,
    out: Option<&Path>,
    format: FormatArg,
    transport: Option<TransportArg>,
) -> Result<()> {
    let mut cfg = load_pipeline_config(config, seed, transport)?;
    if let Some(text) = pair {
        cfg.infer.pairs = PairSelection::Explicit(vec![parse_pair(text)?]);
    }
    let x = read_matrix(data)?;
    let report = run_pipeline(&x, &cfg)?;
    if report.result.tests.is_empty() {
        return Err(Error::InvalidConfig(
            "no pairs to test; set infer.pairs in the config or pass --pair j,k".into(),
        ));
    }
    for t in &report.result.tests {
        eprintln!(
            "pair ({}, {}): theta_bar={:.6e} U={:.4} p={:.4} reject={}",
            t.j, t.k, t.theta_bar_jk, t.u_stat, t.p_value, t.reject
        );
    }
    emit_rows(&report.result.tests, format.into(), out)
}

/// Informational only: mean DistTGM wall time per m, to eyeball the
/// worker-phase trend at fixed N.
fn timing_trend(rows: &[EstimationRow]) {
    use dtgm::experiment::EstimatorKind;
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    for m in ms {
        let times: Vec<f64> = rows
            .iter()
            .filter(|r| r.m == m && r.estimator == EstimatorKind::DistTgm)
            .map(|r| r.elapsed)
            .collect();
        if !times.is_empty() {
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            eprintln!("m={m}: mean dist_tgm wall time {mean:.1} ms (informational)");
        }
    }
}

fn run_experiment_cmd(
    config: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    format: FormatArg,
    full: bool,
    transport: Option<TransportArg>,
) -> Result<()> {
    let mut cfg: ExperimentConfig = read_config(config)?;
    if full {
        // Swap in the full-scale profile, keeping everything that is not a
        // size: model, seeds, tuning, estimators, graph, levels.
        let scaled = ExperimentConfig::full_scale(cfg.setting, cfg.model);
        cfg.d = scaled.d;
        cfg.n_total = scaled.n_total.or(cfg.n_total);
        cfg.n_per_worker = scaled.n_per_worker.or(cfg.n_per_worker);
        cfg.m_grid = scaled.m_grid;
        cfg.reps = scaled.reps;
        if cfg.setting == ExperimentSetting::Power {
            cfg.mu_grid = scaled.mu_grid;
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = transport {
        cfg.transport = t.into();
    }
    cfg.validate()?;

    let format: ReportFormat = format.into();
    match cfg.setting {
        ExperimentSetting::FixedTotal | ExperimentSetting::FixedPerWorker => {
            let outcome = run_estimation_experiment(&cfg)?;
            report_failures(&outcome.failures);
            if cfg.setting == ExperimentSetting::FixedTotal {
                timing_trend(&outcome.rows);
            }
            emit_rows(&outcome.rows, format, out)?;
            if let Some(path) = out {
                emit_meta(&cfg, outcome.rows.len(), outcome.failures.len(), path)?;
            }
        }
        ExperimentSetting::Type1 => {
            let outcome = run_type1(&cfg)?;
            report_failures(&outcome.failures);
            for s in &outcome.summaries {
                eprintln!(
                    "m={}: rejection rate {:.4} ({} of {}), 95% CI [{:.4}, {:.4}]",
                    s.m, s.rate, s.rejections, s.reps, s.ci_low, s.ci_high
                );
            }
            emit_rows(&outcome.summaries, format, out)?;
            if let Some(path) = out {
                emit_secondary(&outcome.rows, format, path)?;
                emit_meta(&cfg, outcome.rows.len(), outcome.failures.len(), path)?;
            }
        }
        ExperimentSetting::Power => {
            let outcome = run_power(&cfg)?;
            report_failures(&outcome.failures);
            for p in &outcome.points {
                eprintln!(
                    "m={} mu={:.2}: power {:.4} (se {:.4}, {} reps)",
                    p.m, p.mu, p.power, p.se, p.reps
                );
            }
            emit_rows(&outcome.points, format, out)?;
            if let Some(path) = out {
                emit_secondary(&outcome.rows, format, path)?;
                emit_meta(&cfg, outcome.rows.len(), outcome.failures.len(), path)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Synth { config, seed, out } => run_synth(&config, seed, &out),
        Cmd::Estimate {
            data,
            config,
            seed,
            out,
            format,
            transport,
        } => run_estimate(&data, &config, seed, out.as_deref(), format, transport),
        Cmd::Test {
            data,
            config,
            pair,
            seed,
            out,
            format,
            transport,
        } => run_test_cmd(
            &data,
            &config,
            pair.as_deref(),
            seed,
            out.as_deref(),
            format,
            transport,
        ),
        Cmd::Experiment {
            config,
            seed,
            out,
            format,
            full,
            transport,
        } => run_experiment_cmd(&config, seed, out.as_deref(), format, full, transport),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
