//! `pasta`: train, apply and inspect word-wise intonation models.
//!
//! Exit codes: 0 on success, 1 for invalid arguments or configuration, 2 for
//! data and runtime failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pasta_core::pipeline::{
    export_dataset, load_model, read_jsonl, read_manifest, run_markup, run_train, save_matrix, save_model,
    write_jsonl, FeatureConfig, MarkupRecord, PipelineError, TrainConfig,
};
use pasta_core::{
    fit_momel, load_f0, plot, F0Format, F0LoadOptions, IntsintError, Metric, MomelFitParams, NormMode, PatternMatrix,
    SynthesisPlan,
};

#[derive(Parser)]
#[command(name = "pasta", version, about = "Word-wise intonation patterns and states")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit splines over a corpus and cluster the word patterns.
    Train(TrainArgs),
    /// Label every word of a corpus with a trained model.
    Markup {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Label a text plan through INTSINT synthesis.
    Synth {
        #[arg(long)]
        text_plan: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Join a markup with manifest texts into a classifier dataset.
    ExportDataset {
        #[arg(long)]
        markup: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a spline to one pitch track and write it as JSON.
    Momel {
        #[arg(long)]
        f0: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        f0_min: f64,
        #[arg(long, default_value_t = 600.0)]
        f0_max: f64,
    },
    /// Render SVG figures.
    Plot {
        #[command(subcommand)]
        what: PlotCommand,
    },
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Barycenters, one panel each, optionally over their member patterns.
    Model {
        #[arg(long)]
        model: PathBuf,
        /// Pattern matrix JSONL written by `train`.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// One utterance of a markup file.
    Markup {
        #[arg(long)]
        markup: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the first record.
        #[arg(long)]
        utterance: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// A spline JSON file, or a spline fitted to a pitch track.
    Spline {
        #[arg(long, conflicts_with = "f0", required_unless_present = "f0")]
        spline: Option<PathBuf>,
        #[arg(long)]
        f0: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Dtw,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Phrase,
    Speaker,
}

impl From<NormArg> for NormMode {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Phrase => NormMode::Phrase,
            NormArg::Speaker => NormMode::Speaker,
        }
    }
}

#[derive(Args)]
struct FeatureArgs {
    /// Keep every n-th pitch frame after low-pass averaging.
    #[arg(long, default_value_t = 1)]
    decimate: usize,
    #[arg(long, default_value_t = 50.0)]
    f0_min: f64,
    #[arg(long, default_value_t = 600.0)]
    f0_max: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 24)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, value_enum, default_value = "dtw")]
    metric: MetricArg,
    #[arg(long = "n-f0", default_value_t = 32)]
    n_f0: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "phrase")]
    norm: NormArg,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 10)]
    dba_iter: usize,
    /// Sakoe-Chiba band half-width for DTW.
    #[arg(long)]
    band: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the pattern matrix; defaults next to the model.
    #[arg(long)]
    patterns_out: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<PipelineError>() {
            Some(e) if e.is_validation() => 1,
            _ => match error.downcast_ref::<IntsintError>() {
                Some(IntsintError::InvalidParams(_)) => 1,
                _ => 2,
            },
        };
        Failure { code, error }
    }
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        error: anyhow!(msg.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn features(args: &FeatureArgs, n_f0: usize, norm_mode: NormMode) -> FeatureConfig {
    FeatureConfig {
        n_f0,
        norm_mode,
        momel: MomelFitParams::default(),
        f0: F0LoadOptions {
            frame_step: None,
            f0_min: args.f0_min,
            f0_max: args.f0_max,
        },
        decimation: args.decimate,
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Train(a) => {
            let cfg = TrainConfig {
                k: a.k,
                s: a.s,
                metric: match a.metric {
                    MetricArg::Dtw => Metric::Dtw,
                    MetricArg::Euclidean => Metric::Euclidean,
                },
                seed: a.seed,
                max_iter: a.max_iter,
                dba_iter: a.dba_iter,
                band: a.band,
                features: features(&a.features, a.n_f0, a.norm.into()),
            };
            cfg.validate().map_err(anyhow::Error::from)?;
            let records = read_manifest(&a.manifest).map_err(anyhow::Error::from)?;
            let run = run_train(&records, &cfg).map_err(anyhow::Error::from)?;
            save_model(&a.out, &run.output.model).map_err(anyhow::Error::from)?;
            let patterns = a.patterns_out.unwrap_or_else(|| a.out.with_extension("patterns.jsonl"));
            save_matrix(&patterns, &run.matrix).map_err(anyhow::Error::from)?;
            log::info!(
                "{} words, {} skipped, inertia {:?}",
                run.matrix.len(),
                run.skipped.len(),
                run.output.inertia.last()
            );
        }
        Command::Markup {
            manifest,
            model,
            out,
            features: f,
        } => {
            let model = load_model(&model).map_err(anyhow::Error::from)?;
            let cfg = features(&f, model.n_f0, model.norm_mode);
            let records = read_manifest(&manifest).map_err(anyhow::Error::from)?;
            let (markups, skipped) = run_markup(&records, &model, &cfg).map_err(anyhow::Error::from)?;
            if markups.is_empty() && !records.is_empty() {
                return Err(anyhow::Error::from(PipelineError::AllUtterancesSkipped(skipped.len())).into());
            }
            write_jsonl(&out, &markups).map_err(anyhow::Error::from)?;
        }
        Command::Synth { text_plan, model, out } => {
            let text = fs::read_to_string(&text_plan).with_context(|| format!("reading {}", text_plan.display()))?;
            let plan: SynthesisPlan = serde_json::from_str(&text)
                .map_err(|e| validation(format!("{}: {e}", text_plan.display())))?;
            let model = load_model(&model).map_err(anyhow::Error::from)?;
            let result = plan.run(&model).map_err(anyhow::Error::from)?;
            let mut json = serde_json::to_string_pretty(&result).map_err(anyhow::Error::from)?;
            json.push('\n');
            write_text(&out, &json)?;
        }
        Command::ExportDataset { markup, manifest, out } => {
            let markups: Vec<MarkupRecord> = read_jsonl(&markup).map_err(anyhow::Error::from)?;
            let records = read_manifest(&manifest).map_err(anyhow::Error::from)?;
            let data = export_dataset(&markups, &records).map_err(anyhow::Error::from)?;
            write_jsonl(&out, &data).map_err(anyhow::Error::from)?;
        }
        Command::Momel { f0, out, f0_min, f0_max } => {
            let opts = F0LoadOptions {
                frame_step: None,
                f0_min,
                f0_max,
            };
            let contour = load_f0(&f0, F0Format::from_path(&f0), &opts).map_err(anyhow::Error::from)?;
            let spline = fit_momel(&contour, &MomelFitParams::default()).map_err(anyhow::Error::from)?;
            let mut json = serde_json::to_string_pretty(&spline).map_err(anyhow::Error::from)?;
            json.push('\n');
            write_text(&out, &json)?;
        }
        Command::Plot { what } => plot_cmd(what)?,
    }
    Ok(())
}

fn plot_cmd(what: PlotCommand) -> Result<(), Failure> {
    match what {
        PlotCommand::Model { model, patterns, out } => {
            let model = load_model(&model).map_err(anyhow::Error::from)?;
            let svg = match patterns {
                Some(p) => {
                    let file = fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    let matrix = PatternMatrix::read_jsonl(std::io::BufReader::new(file)).map_err(anyhow::Error::from)?;
                    let labels: Vec<usize> = matrix
                        .rows()
                        .iter()
                        .map(|r| model.assign(r).map(|l| l.pattern_id))
                        .collect::<Result<_, _>>()
                        .map_err(anyhow::Error::from)?;
                    plot::plot_model(&model, Some((&matrix, &labels)))
                }
                None => plot::plot_model(&model, None),
            };
            write_text(&out, &svg)?;
        }
        PlotCommand::Markup {
            markup,
            model,
            utterance,
            out,
        } => {
            let model = load_model(&model).map_err(anyhow::Error::from)?;
            let markups: Vec<MarkupRecord> = read_jsonl(&markup).map_err(anyhow::Error::from)?;
            let rec = match &utterance {
                Some(id) => markups.iter().find(|m| &m.utterance_id == id),
                None => markups.first(),
            }
            .ok_or_else(|| validation(format!("no utterance {:?} in {}", utterance, markup.display())))?;
            write_text(&out, &plot::plot_markup(rec, &model))?;
        }
        PlotCommand::Spline { spline, f0, out } => {
            let (spline, contour) = match (spline, f0) {
                (Some(p), _) => {
                    let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    (serde_json::from_str(&text).map_err(anyhow::Error::from)?, None)
                }
                (None, Some(p)) => {
                    let c = load_f0(&p, F0Format::from_path(&p), &F0LoadOptions::default())
                        .map_err(anyhow::Error::from)?;
                    let s = fit_momel(&c, &MomelFitParams::default()).map_err(anyhow::Error::from)?;
                    (s, Some(c))
                }
                (None, None) => return Err(validation("need --spline or --f0")),
            };
            write_text(&out, &plot::plot_spline(&spline, contour.as_ref()))?;
        }
    }
    Ok(())
}
