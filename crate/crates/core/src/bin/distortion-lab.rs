use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use distortion_lab::distortions::{apply, DistortionContext, DistortionSpec};
use distortion_lab::harness::{
    run_model_experiment, sample_augmentation, training_config_preset, AdapterSpec, AugmentationPolicy, Corpus, DecisionRule, ExperimentConfig,
    ModelRunOptions, Sampling,
};
use distortion_lab::metrics::analyze;
use distortion_lab::pixel::ingest::{read_manifest, write_jsonl, IngestRules};
use distortion_lab::pixel::{io, preprocess, to_greyscale, MonitorModel};
use distortion_lab::rng::StreamKey;
use distortion_lab::session::{serve, AppState};
use distortion_lab::spectral::{mean_amplitude_spectrum, MeanAmplitudeSpectrum};
use distortion_lab::trial::{read_csv, to_csv_string};
use distortion_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "distortion-lab", version, about = "Image distortions, model evaluation and forced-choice sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a manifest, drop excluded images and write the retained corpus.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 224)]
        side: usize,
        #[arg(long, default_value_t = 256)]
        min_side: usize,
        #[arg(long, default_value_t = 2.0)]
        max_sd: f64,
        #[arg(long)]
        keep_greyscale: bool,
    },
    /// Apply one distortion to every image of a manifest.
    Distort {
        /// Distortion spec as JSON, or @path to a JSON file.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 224)]
        side: usize,
        #[arg(long)]
        mean_grey: Option<f64>,
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        allow_off_grid: bool,
    },
    /// Corpus spectrum utilities.
    Spectrum {
        #[command(subcommand)]
        action: SpectrumAction,
    },
    /// Evaluate a model on an experiment and write raw-trial CSV.
    Evaluate {
        /// Preset name or path to a config JSON file.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Precomputed scores CSV.
        #[arg(long, conflicts_with = "adapter_cmd")]
        precomputed: Option<PathBuf>,
        /// Adapter process command.
        #[arg(long)]
        adapter_cmd: Option<String>,
        #[arg(long = "adapter-arg", allow_hyphen_values = true)]
        adapter_args: Vec<String>,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 8)]
        max_in_flight: usize,
        /// Use the disjoint run partition with this many runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Sample decisions at this softmax temperature instead of taking the argmax.
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long)]
        side: Option<usize>,
        #[arg(long)]
        mean_grey: Option<f64>,
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Continue an interrupted run from the existing output file.
        #[arg(long)]
        resume: bool,
    },
    /// Draw training augmentations as JSON lines.
    AugmentSample {
        /// `all`, `unperturbed` or a policy JSON file.
        #[arg(long, default_value = "all")]
        policy: String,
        #[arg(long)]
        without: Vec<String>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Print a preset as JSON.
    ExportConfig {
        #[arg(long, conflicts_with_all = ["training", "policy"])]
        preset: Option<String>,
        /// Training schedule for 100 or 200 epochs.
        #[arg(long)]
        training: Option<u32>,
        /// Augmentation policy `all` or `unperturbed`.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise a raw-trial CSV.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the session HTTP API.
    Serve {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        mean_grey: Option<f64>,
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpectrumAction {
    /// Mean amplitude spectrum of the greyscale, preprocessed corpus.
    Mean {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 224)]
        side: usize,
    },
}

fn read_arg_json(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e)),
        None => Ok(arg.to_string()),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn file_stem(image_id: &str) -> String {
    image_id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn load_corpus(manifest: &Path, mean_grey: Option<f64>, spectrum: Option<&Path>) -> Result<Corpus> {
    let stats_path = manifest.with_file_name("stats.json");
    let mean_grey = match mean_grey {
        Some(m) => Some(m),
        None if stats_path.exists() => {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats_path).map_err(|e| Error::io(&stats_path, e))?)?;
            v["mean_grey"].as_f64()
        }
        None => None,
    };
    let corpus = Corpus::load(manifest, mean_grey)?;
    Ok(match spectrum {
        Some(p) => corpus.with_spectrum(MeanAmplitudeSpectrum::load(p)?),
        None => corpus,
    })
}

fn resolve_config(arg: &str) -> Result<ExperimentConfig> {
    if Path::new(arg).is_file() {
        Ok(serde_json::from_str(&read_arg_json(&format!("@{arg}"))?)?)
    } else {
        ExperimentConfig::preset(arg)
    }
}

fn resolve_policy(arg: &str) -> Result<AugmentationPolicy> {
    match arg {
        "all" => Ok(AugmentationPolicy::all_distortions()),
        "unperturbed" => Ok(AugmentationPolicy::unperturbed()),
        path => Ok(serde_json::from_str(&read_arg_json(&format!("@{path}"))?)?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out, side, min_side, max_sd, keep_greyscale } => {
            let entries = read_manifest(&input)?;
            let rules = IngestRules { min_side, max_sd, exclude_greyscale: !keep_greyscale };
            let (corpus, outcome, stats) = Corpus::ingest(&entries, &rules, side)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let mut retained = corpus.manifest_entries();
            for e in &mut retained {
                e.path = fs::canonicalize(&e.path).unwrap_or_else(|_| e.path.clone());
            }
            write_jsonl(&out.join("corpus.jsonl"), &retained)?;
            write_jsonl(&out.join("excluded.jsonl"), &outcome.excluded)?;
            write(&out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
            eprintln!("retained {} images, excluded {}", stats.retained, stats.excluded);
        }
        Command::Distort { spec, seed, input, out, side, mean_grey, spectrum, calibration, allow_off_grid } => {
            let spec: DistortionSpec = serde_json::from_str(&read_arg_json(&spec)?)?;
            let entries = read_manifest(&input)?;
            let monitor = match calibration {
                Some(p) => MonitorModel::load(&p)?,
                None => MonitorModel::default(),
            };
            let target = spectrum.map(|p| MeanAmplitudeSpectrum::load(&p)).transpose()?;
            let mut ctx = DistortionContext::new(seed, &monitor);
            if let Some(m) = mean_grey {
                ctx.mean_grey = m;
            }
            ctx.target_spectrum = target.as_ref();
            ctx.allow_off_grid = allow_off_grid;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            entries.par_iter().try_for_each(|e| -> Result<()> {
                let decoded = io::load(&e.path)?;
                let (img, _) = preprocess(&decoded.image, side)?;
                let d = apply(&img, &e.image_id, &spec, &ctx)?;
                let stem = file_stem(&e.image_id);
                io::save_png(&d.image, &out.join(format!("{stem}.png")))?;
                write(&out.join(format!("{stem}.json")), serde_json::to_string_pretty(&d.provenance)?)
            })?;
            eprintln!("wrote {} images to {}", entries.len(), out.display());
        }
        Command::Spectrum { action: SpectrumAction::Mean { input, out, side } } => {
            let entries = read_manifest(&input)?;
            let images = entries
                .par_iter()
                .map(|e| {
                    let (img, _) = preprocess(&io::load(&e.path)?.image, side)?;
                    let grey = if img.channels() == 3 { to_greyscale(&img)? } else { img };
                    Ok((e.image_id.clone(), grey))
                })
                .collect::<Result<Vec<_>>>()?;
            mean_amplitude_spectrum(&images)?.save(&out)?;
        }
        Command::Evaluate {
            config,
            seed,
            corpus,
            out,
            precomputed,
            adapter_cmd,
            adapter_args,
            timeout_ms,
            max_in_flight,
            runs,
            temperature,
            side,
            mean_grey,
            spectrum,
            resume,
        } => {
            let mut config = resolve_config(&config)?;
            config.seed = seed;
            if let Some(side) = side {
                config.side = side;
            }
            let adapter = match (precomputed, adapter_cmd) {
                (Some(path), None) => AdapterSpec::Precomputed { path },
                (None, Some(command)) => AdapterSpec::ExternalProcess { command, args: adapter_args, timeout_ms, max_in_flight },
                _ => return Err(Error::InvalidParameter("give exactly one of --precomputed or --adapter-cmd".into())),
            };
            let corpus = load_corpus(&corpus, mean_grey, spectrum.as_deref())?;
            let options = ModelRunOptions {
                sampling: runs.map_or(Sampling::Crossed, Sampling::Runs),
                decision: temperature.map_or(DecisionRule::Argmax, DecisionRule::Temperature),
                journal: resume.then(|| out.clone()),
                ..ModelRunOptions::default()
            };
            if !resume && out.exists() {
                fs::remove_file(&out).map_err(|e| Error::io(&out, e))?;
            }
            let result = run_model_experiment(&config, adapter.open()?.as_mut(), &corpus, &options)?;
            if !resume {
                write(&out, to_csv_string(&result.rows)?)?;
            }
            eprintln!(
                "{} trials ({} resumed), {} adapter errors, {} without category evidence",
                result.rows.len(),
                result.resumed_rows,
                result.adapter_errors,
                result.no_evidence
            );
        }
        Command::AugmentSample { policy, without, count, seed } => {
            let mut policy = resolve_policy(&policy)?;
            for name in &without {
                policy = policy.without(name)?;
            }
            let mut rng = StreamKey(seed).chacha();
            for _ in 0..count {
                println!("{}", serde_json::to_string(&sample_augmentation(&policy, &mut rng)?)?);
            }
        }
        Command::ExportConfig { preset, training, policy, out } => {
            let text = match (preset, training, policy) {
                (Some(name), None, None) => serde_json::to_string_pretty(&ExperimentConfig::preset(&name)?)?,
                (None, Some(epochs), None) => serde_json::to_string_pretty(
                    &training_config_preset(epochs).ok_or_else(|| Error::InvalidParameter("training presets exist for 100 and 200 epochs".into()))?,
                )?,
                (None, None, Some(p)) => serde_json::to_string_pretty(&resolve_policy(&p)?)?,
                (None, None, None) => serde_json::to_string_pretty(&ExperimentConfig::preset_names())?,
                _ => return Err(Error::InvalidParameter("give one of --preset, --training or --policy".into())),
            };
            match out {
                Some(path) => write(&path, text + "\n")?,
                None => println!("{text}"),
            }
        }
        Command::Analyze { input, out } => {
            let f = fs::File::open(&input).map_err(|e| Error::io(&input, e))?;
            let report = analyze(&read_csv(f)?)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write(&out.join("report.json"), report.to_json()? + "\n")?;
            write(&out.join("long.csv"), report.long_csv()?)?;
            for (name, csv) in report.confusion_csvs() {
                write(&out.join(name), csv)?;
            }
        }
        Command::Serve { corpus, addr, data_dir, mean_grey, spectrum } => {
            let corpus = load_corpus(&corpus, mean_grey, spectrum.as_deref())?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            runtime.block_on(serve(addr, AppState::new(corpus, data_dir)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
