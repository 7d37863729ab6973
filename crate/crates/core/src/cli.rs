//! Command implementations behind the `embr` binary. Each command returns
//! the bytes it would write, so the binary only routes output and maps
//! errors to exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compose::{build_score_fst, compose, LogitMatrix};
use crate::error::{Error, Result};
use crate::fst::{path_distribution_bounded, SymbolTable, Wfst, WordSequence, DEFAULT_MAX_PATHS};
use crate::inference::{sample_paths_seeded, stochastic_deviation};
use crate::losses::{frame_positions, ReferenceAlignment, ReferenceTranscript};
use crate::mbr::{
    embr_estimate, expected_loss_exact, expected_loss_gradient_exact, finite_difference_check,
    EstimateReport, EstimatorConfig, LossFunction,
};
use crate::trainer::{curve_csv, make_synthetic_task, run_experiment, TrainConfig};

/// Deviation from local normalization below which an FST counts as stochastic.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "embr",
    version,
    about = "Sampled MBR training over weighted FSTs"
)]
pub struct Cli {
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled expected loss and gradient as a JSON report.
    Estimate(EstimateArgs),
    /// Compare the exact gradient against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Histogram of sampled output word sequences.
    Sample(SampleArgs),
    /// Train the toy model on a synthetic task.
    Train(TrainArgs),
    /// Summarize an FST.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    WordEdit,
    FrameError,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Decoder graph FST (arc-list text).
    #[arg(long)]
    pub fst: PathBuf,
    /// Logits CSV, one row per frame.
    #[arg(long)]
    pub logits: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Reference transcript (word-edit) or alignment (frame-error).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_enum, default_value = "word-edit")]
    pub loss: LossArg,
    /// Symbol table for a transcript written as tokens.
    #[arg(long)]
    pub symbols: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Also report enumeration values and deviations.
    #[arg(long)]
    pub exact: bool,
    /// Use the estimator without the mean-loss baseline.
    #[arg(long)]
    pub no_variance_reduction: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat `key = value` training config.
    #[arg(long)]
    pub config: PathBuf,
    /// Training-curve CSV output.
    #[arg(long)]
    pub curve: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub fst: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// What a command produced: the main output and an exit status.
#[derive(Debug)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome {
            output,
            exit_code: 0,
        }
    }
}

pub const DEFAULT_SEED: u64 = 0;

pub fn run(cli: &Cli) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Estimate(args) => cmd_estimate(args, seed).map(Outcome::ok),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Sample(args) => cmd_sample(args, seed).map(Outcome::ok),
        Command::Train(args) => cmd_train(args, cli.seed).map(Outcome::ok),
        Command::Inspect(args) => cmd_inspect(args).map(Outcome::ok),
    }
}

fn read(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(e).in_file(path.display().to_string()))
}

fn write(path: &FsPath, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(e).in_file(path.display().to_string()))
}

fn load_fst(path: &FsPath) -> Result<Wfst> {
    Wfst::parse_text(&read(path)?).map_err(|e| e.in_file(path.display().to_string()))
}

fn load_logits(path: &FsPath) -> Result<LogitMatrix> {
    LogitMatrix::read_csv(read(path)?.as_bytes()).map_err(|e| e.in_file(path.display().to_string()))
}

fn load_lattice(args: &LatticeArgs) -> Result<(Wfst, LogitMatrix)> {
    let graph = load_fst(&args.fst)?;
    let z = load_logits(&args.logits)?;
    check_decoder_dimensions(&graph, &z).map_err(|e| e.in_file(args.fst.display().to_string()))?;
    let u = compose(&build_score_fst(&z), &graph)?;
    Ok((u, z))
}

/// Rejects decoder graphs whose input labels or frame count cannot match the
/// logits. Graphs without a well-defined frame count are left to composition.
fn check_decoder_dimensions(graph: &Wfst, z: &LogitMatrix) -> Result<()> {
    if let Some(e) = graph
        .edges()
        .iter()
        .find(|e| e.ilabel as usize > z.clusters())
    {
        return Err(Error::Dimension(format!(
            "input label {} exceeds the {} logit columns",
            e.ilabel,
            z.clusters()
        )));
    }
    if let Ok(depth) = frame_positions(graph) {
        if let Some(t) = depth[graph.final_state()] {
            if t != z.frames() {
                return Err(Error::Dimension(format!(
                    "decoder graph spans {t} frames, logits have {}",
                    z.frames()
                )));
            }
        }
    }
    Ok(())
}

fn load_loss(args: &LossArgs, z: &LogitMatrix) -> Result<LossFunction> {
    let path = args.reference.display().to_string();
    let text = read(&args.reference)?;
    match args.loss {
        LossArg::WordEdit => {
            let words = match &args.symbols {
                Some(sym) => {
                    let table = SymbolTable::parse(&read(sym)?)
                        .map_err(|e| e.in_file(sym.display().to_string()))?;
                    table.encode(&text)
                }
                None => WordSequence::parse_ids(&text),
            }
            .map_err(|e| e.in_file(path.clone()))?;
            Ok(LossFunction::WordEdit(ReferenceTranscript(words)))
        }
        LossArg::FrameError => {
            let align = ReferenceAlignment::parse(&text).map_err(|e| e.in_file(path.clone()))?;
            if align.frames() != z.frames() {
                return Err(Error::Dimension(format!(
                    "alignment has {} frames, logits have {}",
                    align.frames(),
                    z.frames()
                ))
                .in_file(path));
            }
            if let Some(&c) = align
                .clusters()
                .iter()
                .find(|&&c| c as usize > z.clusters())
            {
                return Err(Error::Dimension(format!(
                    "alignment cluster {c} exceeds the {} logit columns",
                    z.clusters()
                ))
                .in_file(path));
            }
            Ok(LossFunction::FrameError(align))
        }
    }
}

#[derive(Serialize)]
struct ExactSection {
    expected_loss: f64,
    gradient: Vec<f64>,
    abs_deviation: f64,
    max_abs_gradient_deviation: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(flatten)]
    report: EstimateReport,
    variance_reduction: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactSection>,
}

pub fn cmd_estimate(args: &EstimateArgs, seed: u64) -> Result<String> {
    let (u, z) = load_lattice(&args.lattice)?;
    let loss = load_loss(&args.loss, &z)?;
    let config = EstimatorConfig {
        samples: args.samples as usize,
        seed,
        variance_reduction: !args.no_variance_reduction,
    };
    let estimate = embr_estimate(&u, &z, &loss, &config)?;
    let exact = if args.exact {
        let value = expected_loss_exact(&u, &loss)?;
        let gradient = expected_loss_gradient_exact(&u, &z, &loss)?;
        let max_dev = gradient
            .as_slice()
            .iter()
            .zip(estimate.gradient.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Some(ExactSection {
            expected_loss: value,
            abs_deviation: (estimate.expected_loss - value).abs(),
            max_abs_gradient_deviation: max_dev,
            gradient: gradient.into_vec(),
        })
    } else {
        None
    };
    let out = EstimateOutput {
        report: estimate.report(),
        variance_reduction: config.variance_reduction,
        exact,
    };
    let mut json = serde_json::to_string_pretty(&out)
        .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
    json.push('\n');
    Ok(json)
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<Outcome> {
    let graph = load_fst(&args.lattice.fst)?;
    let z = load_logits(&args.lattice.logits)?;
    let loss = load_loss(&args.loss, &z)?;
    let report = finite_difference_check(&graph, &z, &loss, args.eps)?;
    let pass = report.passes(args.tol);
    let mut out = String::new();
    out.push_str(&format!("entries checked: {}\n", report.checked));
    out.push_str(&format!("max relative error: {:e}\n", report.max_rel_error));
    if let Some((t, q)) = report.worst {
        out.push_str(&format!(
            "worst: frame {t} cluster {} (exact {:e}, numeric {:e})\n",
            q + 1,
            report.exact.get(t, q),
            report.numeric.get(t, q)
        ));
    }
    out.push_str(&format!("tolerance: {:e}\n", args.tol));
    out.push_str(if pass {
        "result: pass\n"
    } else {
        "result: fail\n"
    });
    Ok(Outcome {
        output: out,
        exit_code: if pass { 0 } else { 1 },
    })
}

pub fn cmd_sample(args: &SampleArgs, seed: u64) -> Result<String> {
    let (u, _) = load_lattice(&args.lattice)?;
    let n = args.samples as usize;
    let paths = sample_paths_seeded(&u, n, seed)?;
    let mut counts: BTreeMap<WordSequence, usize> = BTreeMap::new();
    for p in &paths {
        *counts.entry(crate::fst::collapse_path(&u, p)?).or_insert(0) += 1;
    }
    let exact = match path_distribution_bounded(&u, DEFAULT_MAX_PATHS) {
        Ok(dist) => Some(dist),
        Err(Error::PathOverflow(_)) => None,
        Err(e) => return Err(e),
    };

    let mut keys: Vec<&WordSequence> = counts.keys().collect();
    if let Some(dist) = &exact {
        keys.extend(dist.keys().filter(|k| !counts.contains_key(*k)));
        keys.sort();
    }
    let mut out = format!("samples: {n}\nseed: {seed}\n");
    out.push_str("words\tcount\tempirical\texact\n");
    let mut tv = 0.0;
    for k in keys {
        let c = counts.get(k).copied().unwrap_or(0);
        let emp = c as f64 / n as f64;
        let label = if k.is_empty() {
            "<empty>".to_string()
        } else {
            k.to_string()
        };
        match &exact {
            Some(dist) => {
                let p = dist.get(k).copied().unwrap_or(0.0);
                tv += (emp - p).abs();
                out.push_str(&format!("{label}\t{c}\t{emp:.6}\t{p:.6}\n"));
            }
            None => out.push_str(&format!("{label}\t{c}\t{emp:.6}\tn/a\n")),
        }
    }
    match exact {
        Some(_) => out.push_str(&format!("tv_distance: {:.6}\n", tv / 2.0)),
        None => out.push_str("tv_distance: n/a\n"),
    }
    Ok(out)
}

/// Writes the curve to `--curve` and returns the serialized model.
pub fn cmd_train(args: &TrainArgs, seed: Option<u64>) -> Result<String> {
    let path = args.config.display().to_string();
    let mut config = TrainConfig::parse(&read(&args.config)?).map_err(|e| e.in_file(path))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let data = make_synthetic_task(&config.task)?;
    let result = run_experiment(&data, &config)?;
    write(&args.curve, &curve_csv(&result.records)?)?;
    Ok(result.model.to_text())
}

#[derive(Serialize)]
struct InspectSummary {
    states: usize,
    edges: usize,
    initial: usize,
    #[serde(rename = "final")]
    final_state: usize,
    acyclic: bool,
    paths: Option<u128>,
    stochastic: bool,
    max_stochastic_deviation: f64,
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<String> {
    let fst = load_fst(&args.fst)?;
    let acyclic = fst.is_acyclic();
    let paths = if acyclic {
        Some(fst.count_paths()?)
    } else {
        None
    };
    let dev = stochastic_deviation(&fst);
    let summary = InspectSummary {
        states: fst.num_states(),
        edges: fst.num_edges(),
        initial: fst.initial(),
        final_state: fst.final_state(),
        acyclic,
        paths,
        stochastic: dev <= STOCHASTIC_TOLERANCE,
        max_stochastic_deviation: dev,
    };
    if args.json {
        let mut json = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Internal(format!("summary serialization: {e}")))?;
        json.push('\n');
        return Ok(json);
    }
    let paths = match (summary.acyclic, summary.paths) {
        (true, Some(n)) if n <= DEFAULT_MAX_PATHS as u128 => n.to_string(),
        (true, Some(_)) => format!("> {DEFAULT_MAX_PATHS}"),
        _ => "n/a".to_string(),
    };
    Ok(format!(
        "states: {}\nedges: {}\ninitial: {}\nfinal: {}\nacyclic: {}\npaths: {paths}\nstochastic: {} (max dev {:.1e})\n",
        summary.states,
        summary.edges,
        summary.initial,
        summary.final_state,
        summary.acyclic,
        summary.stochastic,
        summary.max_stochastic_deviation,
    ))
}
