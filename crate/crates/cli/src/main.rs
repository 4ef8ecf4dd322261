//! Command-line front end for the QIF causal-discovery pipeline.
//!
//! Subcommands cover the full workflow: `synth` emits a labeled benchmark in
//! the challenge CSV layout, `features` turns any supported dataset into the
//! feature table, `train` fits the boosted-tree classifier on such a table,
//! `predict` scores a single pair file, and `evaluate` runs a complete
//! experiment from a JSON spec.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qif_causal::{
    extract_all, extract_features, generate_synthetic_anm, load_challenge, load_tuebingen,
    randomize_directions, read_features_csv, run_experiment, write_challenge, write_features_csv,
    BoostedModel, ExperimentSpec, ExtractionConfig, FeatureRecord, FeatureVector, PairDataset,
    PairLabel, TaskKind, TrainConfig, VariableKind, VariablePair,
};

#[derive(Parser)]
#[command(
    name = "qif-causal",
    version,
    about = "Information-flow features for pairwise causal discovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataFormat {
    Challenge,
    Tuebingen,
    Synthetic,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the QIF feature table from a dataset directory.
    Features {
        /// Dataset directory (challenge/synthetic: pairs.csv + targets.csv;
        /// tuebingen: pairNNNN.txt files + pairmeta.txt).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: DataFormat,
        /// Bin count for the equal-width discretizer.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Grid resolution per axis for the kernel estimator.
        #[arg(long = "kde-grid", default_value_t = 32)]
        kde_grid: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Randomize pair directions first (tuebingen only).
        #[arg(long = "randomize-seed")]
        randomize_seed: Option<u64>,
    },
    /// Train the boosted-tree classifier on a feature table.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// 2class (causal/anticausal) or 4class (all relationships).
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 200)]
        trees: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "model-out")]
        model_out: PathBuf,
    },
    /// Run a full experiment described by a JSON spec.
    Evaluate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "report-out")]
        report_out: PathBuf,
    },
    /// Classify one pair file with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Two-column text file: one x y sample per line.
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long = "kde-grid", default_value_t = 32)]
        kde_grid: usize,
    },
    /// Generate a synthetic benchmark in the challenge CSV layout.
    Synth {
        #[arg(long)]
        pairs: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for pairs.csv and targets.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    qif_causal::init_thread_pool();
    match Cli::parse().command {
        Command::Features {
            input,
            format,
            bins,
            kde_grid,
            out,
            randomize_seed,
        } => cmd_features(&input, format, bins, kde_grid, &out, randomize_seed),
        Command::Train {
            features,
            task,
            trees,
            depth,
            lr,
            seed,
            model_out,
        } => cmd_train(&features, &task, trees, depth, lr, seed, &model_out),
        Command::Evaluate { spec, report_out } => cmd_evaluate(&spec, &report_out),
        Command::Predict {
            model,
            pair,
            out,
            bins,
            kde_grid,
        } => cmd_predict(&model, &pair, &out, bins, kde_grid),
        Command::Synth {
            pairs,
            samples,
            classes,
            seed,
            out,
        } => cmd_synth(pairs, samples, classes, seed, &out),
    }
}

fn load_dataset(input: &Path, format: DataFormat, randomize_seed: Option<u64>) -> Result<PairDataset> {
    let ds = match format {
        DataFormat::Challenge | DataFormat::Synthetic => load_challenge(
            &input.join("pairs.csv"),
            &input.join("targets.csv"),
        )
        .with_context(|| format!("loading challenge layout from {}", input.display()))?,
        DataFormat::Tuebingen => load_tuebingen(input)
            .with_context(|| format!("loading pair files from {}", input.display()))?,
    };
    match randomize_seed {
        Some(seed) => Ok(randomize_directions(&ds, seed)?),
        None => Ok(ds),
    }
}

fn cmd_features(
    input: &Path,
    format: DataFormat,
    bins: usize,
    kde_grid: usize,
    out: &Path,
    randomize_seed: Option<u64>,
) -> Result<()> {
    let ds = load_dataset(input, format, randomize_seed)?;
    let cfg = ExtractionConfig {
        n_bins: bins,
        kde_grid,
        ..ExtractionConfig::default()
    };
    let features = extract_all(ds.pairs(), &cfg)?;
    let records: Vec<FeatureRecord> = ds
        .pairs()
        .iter()
        .zip(ds.labels())
        .zip(&features)
        .map(|((p, l), f)| FeatureRecord {
            id: p.id().to_string(),
            label: *l,
            features: *f,
        })
        .collect();
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_features_csv(file, &records)?;
    println!(
        "wrote {} feature rows ({} pairs skipped) to {}",
        records.len(),
        ds.skipped(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    features: &Path,
    task: &str,
    trees: usize,
    depth: usize,
    lr: f64,
    seed: u64,
    model_out: &Path,
) -> Result<()> {
    let task: TaskKind = task.parse()?;
    let file = fs::File::open(features)
        .with_context(|| format!("opening {}", features.display()))?;
    let mut records = read_features_csv(file)?;
    if task == TaskKind::TwoClass {
        records.retain(|r| matches!(r.label, PairLabel::Causal | PairLabel::Anticausal));
    } else {
        let mut distinct: Vec<PairLabel> = records.iter().map(|r| r.label).collect();
        distinct.sort_by_key(|l| *l as usize);
        distinct.dedup();
        if distinct.len() <= 2 {
            bail!("4class task needs more than 2 label values in the feature table");
        }
    }
    if records.is_empty() {
        bail!("no rows left after the task filter");
    }
    let rows: Vec<Vec<f64>> = records.iter().map(|r| r.features.values().to_vec()).collect();
    let labels: Vec<PairLabel> = records.iter().map(|r| r.label).collect();
    let names: Vec<String> = FeatureVector::NAMES.iter().map(|n| n.to_string()).collect();
    let cfg = TrainConfig {
        n_trees: trees,
        max_depth: depth,
        learning_rate: lr,
        seed,
        ..TrainConfig::default()
    };
    let model = qif_causal::fit(&rows, &labels, &names, &cfg)?;
    model.save(model_out)?;
    let correct = rows
        .iter()
        .zip(&labels)
        .filter(|(row, label)| model.predict(row).ok().as_ref() == Some(label))
        .count();
    println!(
        "trained on {} rows, training accuracy {:.4}, model saved to {}",
        rows.len(),
        correct as f64 / rows.len() as f64,
        model_out.display()
    );
    Ok(())
}

fn cmd_evaluate(spec_path: &Path, report_out: &Path) -> Result<()> {
    let text = fs::read_to_string(spec_path)
        .with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = ExperimentSpec::from_json(&text)?;
    let report = run_experiment(&spec)?;
    fs::write(report_out, report.to_json()?)
        .with_context(|| format!("writing {}", report_out.display()))?;
    print!("{}", report.render_text());
    println!("report written to {}", report_out.display());
    Ok(())
}

#[derive(Serialize)]
struct ClassProbability {
    class: PairLabel,
    probability: f64,
}

#[derive(Serialize)]
struct Prediction {
    schema_version: u32,
    pair: String,
    predicted: PairLabel,
    probabilities: Vec<ClassProbability>,
}

fn cmd_predict(
    model_path: &Path,
    pair_path: &Path,
    out: &Path,
    bins: usize,
    kde_grid: usize,
) -> Result<()> {
    let model = BoostedModel::load(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let pair = read_pair_file(pair_path)?;
    let cfg = ExtractionConfig {
        n_bins: bins,
        kde_grid,
        ..ExtractionConfig::default()
    };
    let features = extract_features(&pair, &cfg)?;
    let proba = model.predict_proba(features.values())?;
    let predicted = model.predict(features.values())?;
    let prediction = Prediction {
        schema_version: 1,
        pair: pair_path.display().to_string(),
        predicted,
        probabilities: model
            .classes()
            .iter()
            .zip(proba.probs())
            .map(|(class, p)| ClassProbability {
                class: *class,
                probability: *p,
            })
            .collect(),
    };
    fs::write(out, serde_json::to_string_pretty(&prediction)?)?;
    println!("{}: {}", pair_path.display(), predicted);
    Ok(())
}

/// Reads a two-column sample file: one `x y` pair per line, whitespace or
/// comma separated, blank lines ignored.
fn read_pair_file(path: &Path) -> Result<VariablePair> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            bail!("{} line {}: expected two columns", path.display(), ln + 1);
        }
        let x: f64 = fields[0]
            .parse()
            .with_context(|| format!("{} line {}: bad value", path.display(), ln + 1))?;
        let y: f64 = fields[1]
            .parse()
            .with_context(|| format!("{} line {}: bad value", path.display(), ln + 1))?;
        xs.push(x);
        ys.push(y);
    }
    let x_kind = infer(&xs);
    let y_kind = infer(&ys);
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "pair".to_string());
    Ok(VariablePair::new(id, xs, ys, x_kind, y_kind)?)
}

fn infer(values: &[f64]) -> VariableKind {
    qif_causal::dataset::infer_kind(values, qif_causal::dataset::DEFAULT_CATEGORICAL_THRESHOLD)
}

fn cmd_synth(pairs: usize, samples: usize, classes: usize, seed: u64, out: &Path) -> Result<()> {
    let ds = generate_synthetic_anm(pairs, samples, classes, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_challenge(&ds, &out.join("pairs.csv"), &out.join("targets.csv"))?;
    println!(
        "wrote {} pairs x {} samples ({classes} classes, seed {seed}) to {}",
        pairs,
        samples,
        out.display()
    );
    Ok(())
}
