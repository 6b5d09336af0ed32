use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spatter::harness::{self, ExperimentConfig, ExtractConfig, SynthSpec};
use spatter::imgproc::Threshold;
use spatter::learn::impute::{knn_impute, zero_impute, Imputation};
use spatter::learn::model::{train, ModelKind, ModelParams, TreeEnsemble};
use spatter::learn::{evaluate, FeatureMatrix, DEFAULT_BT_THRESHOLDS};

#[derive(Parser)]
#[command(
    name = "spatter",
    version,
    about = "Bloodstain spatter feature extraction and mechanism classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract pattern features from the scans listed in a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "auto")]
        threshold: Threshold,
        #[arg(long)]
        out: PathBuf,
        /// Exit successfully even if some images could not be processed.
        #[arg(long)]
        lenient: bool,
    },
    /// Generate a synthetic two-class dataset with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON generator spec; overrides --per-class and --seed.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Train one model on all rows and save it as JSON.
    Train {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated train/test evaluation, or scoring of a saved model.
    Evaluate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        fits: FitArgs,
        /// Score this saved model on the input instead of refitting.
        #[arg(long)]
        trained: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stability importance scores over repeated fits.
    Sis {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        fits: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class boxplot statistics of every feature.
    Report {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Input {
    /// Feature CSV written by `extract`.
    #[arg(
        long,
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    features: Option<PathBuf>,
    /// Dataset manifest; features are extracted first.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    threshold: Threshold,
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "boosted")]
    model: ModelKind,
    /// knn, zero or none; required for the forest.
    #[arg(long)]
    impute: Option<Imputation>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON hyperparameters, e.g. {"kind":"boosted","n_trees":100,...}.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Choose hyperparameters by cross-validated grid search first.
    #[arg(long)]
    tune: bool,
}

struct Loaded {
    matrix: FeatureMatrix,
    failures: usize,
}

fn load(input: &Input) -> Result<Loaded> {
    if let Some(path) = &input.features {
        let file =
            std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return Ok(Loaded {
            matrix: FeatureMatrix::read_csv(file)?,
            failures: 0,
        });
    }
    let path = input.manifest.as_ref().expect("clap enforces one input");
    let manifest = harness::DatasetManifest::load(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let report = harness::extract(
        &manifest,
        &ExtractConfig {
            threshold: input.threshold,
            ..Default::default()
        },
    );
    Ok(Loaded {
        matrix: report.matrix(),
        failures: report.errors.len(),
    })
}

fn experiment_config(model: &ModelArgs, fits: &FitArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::new(model.model, model.impute, fits.reps, model.seed);
    config.k = model.k;
    config.tune = fits.tune;
    config.params = read_params(model)?;
    config.validate()?;
    Ok(config)
}

fn read_params(model: &ModelArgs) -> Result<Option<ModelParams>> {
    model
        .params
        .as_ref()
        .map(|p| -> Result<ModelParams> {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        })
        .transpose()
}

fn impute(m: &FeatureMatrix, imputation: Imputation, k: usize) -> Result<FeatureMatrix> {
    Ok(match imputation {
        Imputation::None => m.clone(),
        Imputation::Zero => zero_impute(m),
        Imputation::Knn => knn_impute(m, k)?,
    })
}

fn finish(failures: usize, lenient: bool) -> ExitCode {
    if failures > 0 && !lenient {
        log::error!("{failures} image(s) could not be processed (use --lenient to ignore)");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_and_write(
    input: &Input,
    model: &ModelArgs,
    fits: &FitArgs,
    out: &Path,
) -> Result<(harness::ExperimentOutcome, usize)> {
    let config = experiment_config(model, fits)?;
    let loaded = load(input)?;
    let outcome = harness::run_experiment(&loaded.matrix, &config)?;
    for f in harness::write_experiment(&outcome, out)? {
        log::info!("wrote {}", f.display());
    }
    Ok((outcome, loaded.failures))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Extract {
            manifest,
            threshold,
            out,
            lenient,
        } => {
            let m = harness::DatasetManifest::load(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let report = harness::extract(
                &m,
                &ExtractConfig {
                    threshold,
                    ..Default::default()
                },
            );
            report.write(&out)?;
            println!(
                "{} patterns, {} skipped, {} failed -> {}",
                report.features.len(),
                report.skipped.len(),
                report.errors.len(),
                out.join("features.csv").display()
            );
            Ok(finish(report.errors.len(), lenient))
        }
        Command::Synth {
            out,
            per_class,
            seed,
            spec,
        } => {
            let spec = match spec {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)?,
                None => SynthSpec::two_class(per_class, seed),
            };
            let patterns = harness::synth_generate(&spec)?;
            let manifest = harness::write_synth(&patterns, &out)?;
            println!(
                "{} patterns -> {}",
                manifest.records.len(),
                out.join("manifest.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { input, model, out } => {
            let probe = ExperimentConfig::new(model.model, model.impute, 1, model.seed);
            probe.validate()?;
            let params =
                read_params(&model)?.unwrap_or_else(|| ModelParams::default_for(model.model));
            if params.kind() != model.model {
                bail!(
                    "{} parameters given for a {} model",
                    params.kind(),
                    model.model
                );
            }
            let loaded = load(&input)?;
            let data = impute(&loaded.matrix, probe.resolved_imputation(), model.k)?;
            let ensemble = train(&data, &params, model.seed)?;
            harness::io::atomic_write(&out.join("model.json"), ensemble.to_json()?.as_bytes())?;
            println!(
                "trained {} trees on {} patterns -> {}",
                ensemble.trees.len(),
                data.n_rows(),
                out.join("model.json").display()
            );
            Ok(finish(loaded.failures, input.lenient))
        }
        Command::Evaluate {
            input,
            model,
            fits,
            trained,
            out,
        } => {
            if let Some(path) = trained {
                let ensemble = TreeEnsemble::from_json(&std::fs::read_to_string(&path)?)?;
                let loaded = load(&input)?;
                if ensemble.feature_names != loaded.matrix.names {
                    bail!("model columns do not match the feature table");
                }
                let probe = ExperimentConfig::new(model.model, model.impute, 1, model.seed);
                let data = impute(&loaded.matrix, probe.resolved_imputation(), model.k)?;
                let result = evaluate(&ensemble, &data, &DEFAULT_BT_THRESHOLDS);
                harness::io::write_json(&out.join("evaluation.json"), &result)?;
                println!(
                    "accuracy {:.4} on {} patterns",
                    result.overall, result.n_test
                );
                return Ok(finish(loaded.failures, input.lenient));
            }
            let (outcome, failures) = run_and_write(&input, &model, &fits, &out)?;
            println!(
                "mean accuracy {:.4} over {} fits",
                outcome.evaluation.mean_overall,
                outcome.evaluation.fits.len()
            );
            for s in &outcome.evaluation.mean_subsets {
                match s.accuracy {
                    Some(a) => println!("  bt <= {} cm: {a:.4}", s.max_distance_cm),
                    None => println!("  bt <= {} cm: no test patterns", s.max_distance_cm),
                }
            }
            Ok(finish(failures, input.lenient))
        }
        Command::Sis {
            input,
            model,
            fits,
            out,
        } => {
            let (outcome, failures) = run_and_write(&input, &model, &fits, &out)?;
            for i in outcome.sis.ranking().into_iter().take(15) {
                println!(
                    "{:<22} {:.4}",
                    outcome.sis.feature_names[i], outcome.sis.scores[i]
                );
            }
            Ok(finish(failures, input.lenient))
        }
        Command::Report { input, out } => {
            let loaded = load(&input)?;
            let path = out.join("class_summaries.json");
            harness::write_class_summaries(&loaded.matrix, &path)?;
            println!(
                "{} features summarised -> {}",
                loaded.matrix.n_cols(),
                path.display()
            );
            Ok(finish(loaded.failures, input.lenient))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
