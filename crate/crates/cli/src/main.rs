//! `drc`: command-line front end for the reversible compressor toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use drc_core::analysis::{
    identify_profile, perturbation_sweep, solver_benchmark, summarize_sweep, write_summary_csv, write_sweep_csv,
    SweepOptions,
};
use drc_core::catalog::ProfileRecord;
use drc_core::corpus::{
    build_dataset, chunk_and_gate, inject_noise_at_snr, list_wav_files, read_audio, write_audio, write_manifest,
    DatasetOptions, SampleFormatKind, SnrSchedule,
};
use drc_core::inverter::invert;
use drc_core::metrics::{evaluate, SpectralConfig};
use drc_core::{builtin_catalog, compress, AudioClip, DrcParams, InvertOptions, ProfileCatalog, SolverKind};

#[derive(Parser, Debug)]
#[command(name = "drc", version, about = "Reversible dynamic range compression toolkit")]
struct Cli {
    /// Seed for noise generation and corpus sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Root finder used for inversion: newton or hybrid.
    #[arg(long, global = true, default_value = "hybrid")]
    solver: SolverKind,
    /// Convergence tolerance on the characteristic function.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compress a WAV file with one profile.
    Compress {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Write the per-sample envelope/gain trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Output sample format: pcm16 or float32.
        #[arg(long, default_value = "float32")]
        format: SampleFormatKind,
    },
    /// Recover the uncompressed signal given the profile.
    Invert {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Diagnostics JSON path (default: stdout).
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[arg(long, default_value = "float32")]
        format: SampleFormatKind,
    },
    /// Compare an estimate against a reference (MSE, mel L2, SI-SDR).
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        /// Report JSON path (default: stdout).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Dataset construction.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Add Gaussian noise at a target SNR, or print the SNR curriculum.
    #[command(args_conflicts_with_subcommands = true)]
    Augment {
        #[command(subcommand)]
        command: Option<AugmentCommand>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        snr_db: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "float32")]
        format: SampleFormatKind,
    },
    /// Single-parameter sensitivity sweep over a corpus.
    Sweep {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "small")]
        catalog: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Largest relative perturbation.
        #[arg(long, default_value_t = 0.5)]
        range: f64,
        /// Clip length in seconds.
        #[arg(long, default_value_t = 1.0)]
        clip_secs: f64,
        /// Per-row results CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Box-plot summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Rank catalog profiles by how consistently they invert a file.
    Identify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "small")]
        catalog: String,
        /// Report JSON path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum DatasetCommand {
    /// Chunk, gate and compress every WAV file under a directory.
    Build {
        #[arg(long)]
        input_dir: PathBuf,
        /// small, large, or a profile JSON file.
        #[arg(long, default_value = "small")]
        catalog: String,
        #[arg(long, default_value_t = 5.0)]
        chunk_secs: f64,
        /// Chunks with RMS below this level (dBFS) are dropped.
        #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
        gate_db: f64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Manifest CSV path (default: stdout).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "float32")]
        format: SampleFormatKind,
    },
}

#[derive(Subcommand, Debug)]
enum AugmentCommand {
    /// Print the SNR (dB) used at a training epoch.
    Schedule {
        #[arg(long)]
        epoch: u64,
        #[arg(long, default_value_t = 65.0, allow_hyphen_values = true)]
        start_db: f64,
        #[arg(long, default_value_t = 5.0)]
        step_db: f64,
        #[arg(long, default_value_t = 20)]
        epochs_per_step: u32,
        #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
        floor_db: f64,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Wall time and round-trip error of both root finders.
    Solvers {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "small")]
        catalog: String,
        #[arg(long, default_value_t = 5.0)]
        clip_secs: f64,
        /// Report JSON path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct ProfileArgs {
    /// Profile label from the small or large catalog.
    #[arg(long)]
    profile: Option<String>,
    /// Profile JSON file with threshold_db, ratio, tau_*_ms and detector.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Directory of WAV files.
    #[arg(long)]
    corpus: PathBuf,
    /// Chunks below this RMS level (dBFS) are skipped.
    #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
    gate_db: f64,
    /// Use at most this many chunks, drawn with `--seed`.
    #[arg(long)]
    max_clips: Option<usize>,
}

enum Failure {
    Usage(anyhow::Error),
    Processing(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Processing(e.into())
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Processing(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(value) = std::env::var("DRC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("DRC_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    if !(cli.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    let invert_opts = InvertOptions::new(cli.solver, cli.tol);
    match cli.command {
        Command::Compress {
            profile,
            input,
            output,
            trace,
            format,
        } => {
            let params = resolve_profile(&profile)?;
            let x = read_audio(&input)?;
            let (y, t) = match &params {
                Some(p) => compress(&x, p, trace.is_some()),
                None => (x, None),
            };
            write_audio(&y, &output, format)?;
            if let (Some(path), Some(t)) = (trace, t) {
                let file = create(&path)?;
                t.write_csv(BufWriter::new(file))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Invert {
            profile,
            input,
            output,
            diagnostics,
            format,
        } => {
            let params = resolve_profile(&profile)?;
            let y = read_audio(&input)?;
            let (x, diag) = match &params {
                Some(p) => invert(&y, p, invert_opts),
                None => (y, Default::default()),
            };
            write_audio(&x, &output, format)?;
            emit_json(&diag.to_json(), diagnostics.as_deref())
        }
        Command::Eval { reference, est, report } => {
            let x = read_audio(&reference)?;
            let x_hat = read_audio(&est)?;
            let r = evaluate(&x_hat, &x, &SpectralConfig::default())?;
            emit_json(&serde_json::to_value(r)?, report.as_deref())
        }
        Command::Dataset {
            command:
                DatasetCommand::Build {
                    input_dir,
                    catalog,
                    chunk_secs,
                    gate_db,
                    out_dir,
                    manifest,
                    format,
                },
        } => {
            let catalog = resolve_catalog(&catalog)?;
            if !(chunk_secs > 0.0) {
                return Err(usage(format!("--chunk-secs must be positive, got {chunk_secs}")));
            }
            if !input_dir.is_dir() {
                return Err(usage(format!("--input-dir {} is not a directory", input_dir.display())));
            }
            let opts = DatasetOptions {
                chunk_secs,
                gate_dbfs: gate_db,
                format,
            };
            let report = build_dataset(&input_dir, &catalog, &out_dir, &opts)?;
            for (file, err) in &report.errors {
                eprintln!("warning: {file}: {err}");
            }
            with_output(manifest.as_deref(), |w| Ok(write_manifest(&report.manifest, w)?))
        }
        Command::Augment {
            command:
                Some(AugmentCommand::Schedule {
                    epoch,
                    start_db,
                    step_db,
                    epochs_per_step,
                    floor_db,
                }),
            ..
        } => {
            let schedule = SnrSchedule::new(start_db, step_db, epochs_per_step, floor_db).map_err(usage)?;
            println!("{}", schedule.snr_at_epoch(epoch));
            Ok(())
        }
        Command::Augment {
            command: None,
            input,
            snr_db,
            output,
            format,
        } => {
            let input = input.ok_or_else(|| usage("augment needs --input (or the `schedule` subcommand)"))?;
            let snr_db = snr_db.ok_or_else(|| usage("augment needs --snr-db"))?;
            let output = output.ok_or_else(|| usage("augment needs --output"))?;
            if !snr_db.is_finite() {
                return Err(usage(format!("--snr-db must be finite, got {snr_db}")));
            }
            let clip = read_audio(&input)?;
            let noisy = inject_noise_at_snr(&clip, snr_db, cli.seed)?;
            write_audio(&noisy, &output, format)?;
            Ok(())
        }
        Command::Sweep {
            corpus,
            catalog,
            steps,
            range,
            clip_secs,
            out,
            summary,
        } => {
            let catalog = resolve_catalog(&catalog)?;
            if steps < 2 {
                return Err(usage(format!("--steps must be at least 2, got {steps}")));
            }
            if !(range > 0.0 && range <= 0.5) {
                return Err(usage(format!("--range must be in (0, 0.5], got {range}")));
            }
            let clips = load_corpus(&corpus, clip_secs, cli.seed)?;
            let opts = SweepOptions {
                steps,
                range_frac: range,
                spectral: SpectralConfig::default(),
                invert: invert_opts,
            };
            let result = perturbation_sweep(&clips, &catalog, &opts)?;
            if result.failed_count() > 0 {
                log::warn!("{} sweep rows could not be scored", result.failed_count());
            }
            with_output(out.as_deref(), |w| Ok(write_sweep_csv(&result, w)?))?;
            if let Some(path) = summary {
                let rows = summarize_sweep(&result);
                write_summary_csv(&rows, BufWriter::new(create(&path)?))?;
            }
            Ok(())
        }
        Command::Bench {
            command:
                BenchCommand::Solvers {
                    corpus,
                    catalog,
                    clip_secs,
                    out,
                },
        } => {
            let catalog = resolve_catalog(&catalog)?;
            let clips = load_corpus(&corpus, clip_secs, cli.seed)?;
            let reports = solver_benchmark(&clips, &catalog, cli.tol)?;
            emit_json(&serde_json::to_value(reports)?, out.as_deref())
        }
        Command::Identify { input, catalog, out } => {
            let catalog = resolve_catalog(&catalog)?;
            let y = read_audio(&input)?;
            let report = identify_profile(&y, &catalog, invert_opts)?;
            emit_json(&serde_json::to_value(report)?, out.as_deref())
        }
    }
}

/// `None` means the neutral label: a pass-through.
fn resolve_profile(args: &ProfileArgs) -> Result<Option<DrcParams>, Failure> {
    if let Some(path) = &args.params {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--params {}: {e}", path.display())))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("--params {}: {e}", path.display())))?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("label").or_insert_with(|| "custom".into());
        }
        let record: ProfileRecord =
            serde_json::from_value(value).map_err(|e| usage(format!("--params {}: {e}", path.display())))?;
        let params = record
            .to_params()
            .map_err(|e| usage(format!("--params {}: {e}", path.display())))?;
        return Ok(Some(params));
    }
    let label = args
        .profile
        .as_deref()
        .expect("clap requires one of --profile/--params");
    for name in ["small", "large"] {
        let catalog = builtin_catalog(name).expect("built-in catalog");
        if let Some(entry) = catalog.get(label) {
            return Ok(entry.params);
        }
    }
    Err(usage(format!("--profile: unknown profile label `{label}`")))
}

fn resolve_catalog(spec: &str) -> Result<ProfileCatalog, Failure> {
    ProfileCatalog::resolve(spec).map_err(|e| usage(format!("--catalog {spec}: {e}")))
}

fn load_corpus(args: &CorpusArgs, clip_secs: f64, seed: u64) -> Result<Vec<AudioClip>, Failure> {
    if !(clip_secs > 0.0) {
        return Err(usage(format!("--clip-secs must be positive, got {clip_secs}")));
    }
    if !args.corpus.is_dir() {
        return Err(usage(format!("--corpus {} is not a directory", args.corpus.display())));
    }
    let mut clips = Vec::new();
    for path in list_wav_files(&args.corpus) {
        let clip = read_audio(&path)?;
        clips.extend(
            chunk_and_gate(&clip, clip_secs, args.gate_db)
                .into_iter()
                .map(|(_, c)| c),
        );
    }
    if let Some(max) = args.max_clips {
        if max < clips.len() {
            clips.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            clips.truncate(max);
        }
    }
    if clips.is_empty() {
        return Err(Failure::Processing(anyhow::anyhow!(
            "no clips of {clip_secs} s above {} dBFS in {}",
            args.gate_db,
            args.corpus.display()
        )));
    }
    Ok(clips)
}

fn create(path: &Path) -> anyhow::Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn with_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> Outcome {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(create(p)?);
            write(&mut w)?;
            w.flush().with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn emit_json(value: &serde_json::Value, path: Option<&Path>) -> Outcome {
    with_output(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}
