//! The `sleepnet` command line.
//!
//! Every command returns its machine-readable output as a string; the
//! binary prints it to stdout. Human notes go to stderr.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::eval::{
    assemble_hypnogram, confusion, metrics, metrics_report, read_hypnogram_csv, write_hypnogram_csv, WindowDecode,
};
use crate::graph::{cost_report, load_model, run_logits, save_model, BnParamCount, CostOptions, ModelGraph};
use crate::physio::{
    make_windows_with, parse_annotations, parse_movement, parse_rr, read_windows, write_windows, HrvUnit, HrvWindow,
    ResampleConfig, SleepRecord,
};
use crate::quant::{agreement, calibrate, quantize_graph};
use crate::tensor::BitWidth;
use crate::zoo::{build_paper_cnn, build_paper_rnn, decode_head, HeadConfig, WeightInit};

#[derive(Debug, Parser)]
#[command(
    name = "sleepnet",
    version,
    about = "HRV sleep staging: cost accounting, ingestion, inference, quantization, scoring"
)]
pub struct Cli {
    /// key=value file of option defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer and total parameters, MACs and peak activation memory.
    Stats(StatsArgs),
    /// Turn RR and movement event files into model-ready windows.
    Ingest(IngestArgs),
    /// Score windows with a model and write a hypnogram CSV.
    Infer(InferArgs),
    /// Calibrate and quantize a model to q7 or q15.
    Quantize(QuantizeArgs),
    /// Compare hypnograms against reference annotations.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    PaperCnn,
    PaperRnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BnCount {
    Shift,
    ScaleShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    RrSeconds,
    Bpm,
}

#[derive(Debug, Clone, Args)]
pub struct BuiltinArgs {
    /// Use a built-in architecture with random weights instead of a file.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Weight seed for built-in models.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Input channels (CNN) or input size (RNN) of a built-in model.
    #[arg(long)]
    pub input_channels: Option<usize>,
    /// Epoch groups in the built-in head (CNN: 7; RNN default: 1).
    #[arg(long)]
    pub head_groups: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Model manifest to analyze.
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub builtin: BuiltinArgs,
    #[arg(long, default_value_t = 4)]
    pub bytes_per_element: u64,
    /// Batch-norm parameter counting rule.
    #[arg(long, value_enum, default_value = "shift")]
    pub bn_params: BnCount,
    /// Count one MAC per batch-norm element.
    #[arg(long)]
    pub include_elementwise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// RR event file: `time_s,rr_ms` per line.
    #[arg(long)]
    pub rr: PathBuf,
    /// Movement file: `start_s,end_s` per line.
    #[arg(long)]
    pub movement: Option<PathBuf>,
    /// Epoch annotations; only used to extend the record span.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Output window file.
    #[arg(long)]
    pub out: PathBuf,
    /// Window stride in 30 s epochs.
    #[arg(long, default_value_t = 7)]
    pub stride: usize,
    #[arg(long, value_enum, default_value = "rr-seconds")]
    pub unit: Unit,
    /// Record identifier; defaults to the RR file stem.
    #[arg(long)]
    pub record_id: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    /// Model manifest.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub builtin: BuiltinArgs,
    /// Window file written by `ingest`.
    #[arg(long)]
    pub windows: PathBuf,
    /// Hypnogram CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub builtin: BuiltinArgs,
    /// Window file(s) used for calibration.
    #[arg(long, required = true)]
    pub calibration: Vec<PathBuf>,
    /// Use at most this many calibration windows.
    #[arg(long)]
    pub max_windows: Option<usize>,
    /// 8 or 16.
    #[arg(long, default_value_t = 16)]
    pub bits: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Hypnogram CSV, one per record.
    #[arg(long, required = true)]
    pub hypnogram: Vec<PathBuf>,
    /// Annotation file, paired with `--hypnogram` by position.
    #[arg(long, required = true)]
    pub annotations: Vec<PathBuf>,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "record".to_string(), |s| s.to_string_lossy().into_owned())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(f))
}

fn build_builtin(b: &BuiltinArgs, which: Builtin) -> Result<ModelGraph> {
    let init = WeightInit::Uniform { seed: b.seed };
    Ok(match which {
        Builtin::PaperCnn => build_paper_cnn(
            HeadConfig::from_groups(b.head_groups.unwrap_or(7)),
            b.input_channels.unwrap_or(3),
            init,
        )?,
        Builtin::PaperRnn => build_paper_rnn(
            HeadConfig::from_groups(b.head_groups.unwrap_or(1)),
            b.input_channels.unwrap_or(2),
            init,
        )?,
    })
}

fn resolve_model(path: Option<&Path>, b: &BuiltinArgs) -> Result<ModelGraph> {
    match (path, b.builtin) {
        (Some(_), Some(_)) => bail!("give either a model file or --builtin, not both"),
        (Some(p), None) => load_model(p).with_context(|| format!("loading model {}", p.display())),
        (None, Some(which)) => build_builtin(b, which),
        (None, None) => bail!("no model given: pass a model file or --builtin"),
    }
}

pub fn cmd_stats(args: &StatsArgs) -> Result<String> {
    let g = resolve_model(args.model.as_deref(), &args.builtin)?;
    let opts = CostOptions {
        bn_params: match args.bn_params {
            BnCount::Shift => BnParamCount::ShiftOnly,
            BnCount::ScaleShift => BnParamCount::ScaleAndShift,
        },
        include_elementwise: args.include_elementwise,
        bytes_per_element: args.bytes_per_element,
    };
    let report = cost_report(&g, &opts);
    let mut out = String::new();
    writeln!(out, "model={}", g.name())?;
    for l in &report.layers {
        writeln!(
            out,
            "layer={} kind={} input={} output={} params={} macs={} activation_bytes={}",
            l.index,
            l.kind.name(),
            l.input,
            l.output,
            l.params,
            l.macs,
            l.activation_bytes
        )?;
    }
    writeln!(out, "total_params={}", report.total_params)?;
    writeln!(out, "total_macs={}", report.total_macs)?;
    writeln!(out, "peak_activation_bytes={}", report.peak_activation_bytes)?;
    Ok(out)
}

/// Stderr note for the recurrent builtin.
pub const RNN_NOTE: &str = "note: these totals follow from the layer sizes alone (two stacked LSTMs of 128 and 32 \
units, a 32-unit dense layer and the output layer); the 1.2M parameter / 1.2M MAC figures reported elsewhere for this \
model cannot be reproduced from that description";

pub fn cmd_ingest(args: &IngestArgs) -> Result<String> {
    let rr = parse_rr(open(&args.rr)?, &args.rr.display().to_string())?;
    let movement = match &args.movement {
        Some(p) => parse_movement(open(p)?, &p.display().to_string())?,
        None => Vec::new(),
    };
    let annotations = match &args.annotations {
        Some(p) => parse_annotations(open(p)?, &p.display().to_string())?,
        None => Vec::new(),
    };
    let record_id = args.record_id.clone().unwrap_or_else(|| stem(&args.rr));
    let record = SleepRecord::new(record_id.clone(), rr, movement, annotations)?;
    let cfg = ResampleConfig {
        unit: match args.unit {
            Unit::RrSeconds => HrvUnit::RrSeconds,
            Unit::Bpm => HrvUnit::BeatsPerMinute,
        },
        ..ResampleConfig::default()
    };
    let windows = make_windows_with(&record, args.stride, &cfg)?;
    write_windows(&args.out, &record_id, &windows)?;
    let mut out = String::new();
    writeln!(out, "record_id={record_id}")?;
    writeln!(out, "windows={}", windows.len())?;
    if let (Some(first), Some(last)) = (windows.first(), windows.last()) {
        writeln!(out, "first_target_epoch={}", first.target_epochs[0])?;
        writeln!(
            out,
            "last_target_epoch={}",
            last.target_epochs[last.target_epochs.len() - 1]
        )?;
    }
    Ok(out)
}

/// Score every window and map head groups onto the window's target epochs:
/// one group per target, or a single group scoring the center target.
pub fn infer_windows(g: &ModelGraph, record_id: &str, windows: &[HrvWindow]) -> Result<String> {
    let (groups, _) = g.head().unwrap_or((g.output_shape().elements() / 3, 3));
    let head = HeadConfig::from_groups(groups);
    let mut decodes = Vec::with_capacity(windows.len());
    for (i, w) in windows.iter().enumerate() {
        if w.series.shape() != g.input_shape() {
            return Err(Error::InputShape {
                expected: g.input_shape(),
                found: w.series.shape(),
            })
            .with_context(|| format!("window {i}"));
        }
        let epochs = decode_head(&run_logits(g, &w.series)?, head)?;
        let targets = if groups == w.target_epochs.len() {
            w.target_epochs.clone()
        } else if groups == 1 && !w.target_epochs.is_empty() {
            vec![w.target_epochs[w.target_epochs.len() / 2]]
        } else {
            bail!(
                "model scores {groups} epochs per window but window {i} has {} targets",
                w.target_epochs.len()
            );
        };
        decodes.push(WindowDecode { targets, epochs });
    }
    Ok(write_hypnogram_csv(&assemble_hypnogram(record_id, &decodes)?))
}

pub fn cmd_infer(args: &InferArgs) -> Result<String> {
    let g = resolve_model(args.model.as_deref(), &args.builtin)?;
    let (record_id, windows) = read_windows(&args.windows)?;
    let csv = infer_windows(&g, &record_id, &windows)?;
    match &args.out {
        None => Ok(csv),
        Some(path) => {
            fs::write(path, &csv).map_err(|e| Error::io(path, e))?;
            Ok(format!("record_id={record_id}\nepochs={}\n", csv.lines().count() - 1))
        }
    }
}

pub fn cmd_quantize(args: &QuantizeArgs) -> Result<String> {
    let g = resolve_model(args.model.as_deref(), &args.builtin)?;
    let bits = BitWidth::from_bits(args.bits)?;
    let mut samples = Vec::new();
    for path in &args.calibration {
        let (_, windows) = read_windows(path)?;
        samples.extend(windows.into_iter().map(|w| w.series));
    }
    if let Some(n) = args.max_windows {
        samples.truncate(n);
    }
    if let Some(w) = samples.iter().find(|s| s.shape() != g.input_shape()) {
        return Err(Error::InputShape {
            expected: g.input_shape(),
            found: w.shape(),
        }
        .into());
    }
    let schemes = calibrate(&g, &samples, bits)?;
    let q = quantize_graph(&g, &schemes)?;
    save_model(&q, &args.out)?;
    let a = agreement(&g, &q, &samples)?;
    let mut out = String::new();
    writeln!(out, "bits={}", bits.bits())?;
    writeln!(out, "calibration_windows={}", samples.len())?;
    writeln!(out, "agreement_rate={}", a.rate)?;
    writeln!(out, "max_abs_deviation={}", a.max_abs_deviation)?;
    writeln!(out, "compared_epochs={}", a.compared)?;
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    if args.hypnogram.len() != args.annotations.len() {
        bail!(
            "{} hypnogram files but {} annotation files",
            args.hypnogram.len(),
            args.annotations.len()
        );
    }
    let mut records: Vec<(String, _)> = Vec::new();
    for (hp, ap) in args.hypnogram.iter().zip(&args.annotations) {
        let id = stem(hp);
        let h = read_hypnogram_csv(open(hp)?, &hp.display().to_string(), &id)?;
        let ann = parse_annotations(open(ap)?, &ap.display().to_string())?;
        let reference = SleepRecord::new(id.clone(), vec![], vec![], ann)?.reference();
        let m = confusion(&h, &reference).with_context(|| format!("scoring {}", hp.display()))?;
        records.push((id, m));
    }
    records.sort_by(|a, b| a.0.cmp(&b.0));
    let matrices: Vec<_> = records.iter().map(|(_, m)| *m).collect();
    let mut out = metrics_report(&matrices)?;
    for (id, m) in &records {
        writeln!(out, "record.{id}.epochs={}", m.total())?;
        writeln!(out, "record.{id}.accuracy={}", metrics(m)?.accuracy)?;
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<String> {
    argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Parse `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Append config defaults for options the command line leaves unset.
pub fn apply_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let entries = parse_config(&text)?;
    let cmd = Cli::command();
    let sub_name = argv
        .iter()
        .skip(1)
        .find(|a| cmd.find_subcommand(a.as_str()).is_some())
        .cloned();
    let Some(sub) = sub_name.as_deref().and_then(|n| cmd.find_subcommand(n)) else {
        return Ok(argv);
    };
    let mut out = argv.clone();
    for (key, value) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            bail!("config key {key:?} is not an option of `{}`", sub.get_name());
        };
        let flag = format!("--{key}");
        let given = argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        if arg.get_action().takes_values() {
            out.push(flag);
            out.push(value);
        } else if matches!(value.as_str(), "true" | "1" | "yes") {
            out.push(flag);
        }
    }
    Ok(out)
}

/// Run one invocation; returns the text for stdout.
pub fn run(argv: Vec<String>) -> Result<String> {
    let cli = Cli::try_parse_from(apply_config(argv)?)?;
    match &cli.command {
        Command::Stats(a) => {
            if a.builtin.builtin == Some(Builtin::PaperRnn) {
                eprintln!("{RNN_NOTE}");
            }
            cmd_stats(a)
        }
        Command::Ingest(a) => cmd_ingest(a),
        Command::Infer(a) => cmd_infer(a),
        Command::Quantize(a) => cmd_quantize(a),
        Command::Eval(a) => cmd_eval(a),
    }
}
