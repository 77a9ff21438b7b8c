use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use annotator_models::classifiers::Family;
use annotator_models::corpus::{parse_dataset_with, split_train_validation, AnnotatorId, Dataset, Label, Provenance};
use annotator_models::embed_store::{read_embeddings, EmbeddingTable, MAGIC};
use annotator_models::metrics::{score_subtask1, score_subtask2};
use annotator_models::pipeline::submission::{read_file, read_task1, read_task1_gold, read_task2, write_task1_gold};
use annotator_models::pipeline::{
    explore, export_submission, gold_subtask1, gold_subtask2, predict_dataset, subtask1_from_multisets, subtask2_from_multisets,
    train_all_annotators, Exploration, ExperimentConfig, ModelStore, Submission,
};
use annotator_models::synthetic::{generate, SyntheticSpec};
use annotator_models::{Error, Result};

const WORKERS_ENV: &str = "ANNOTATOR_MODELS_WORKERS";
const TUNING_FILE: &str = "tuning.json";
const PREDICTIONS_FILE: &str = "predictions.json";
const MODELS_DIR: &str = "models";

#[derive(Parser)]
#[command(name = "annotator-models", version, about = "Per-annotator classifiers over fixed text embeddings")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-search every family on the exploration split and pick the best
    /// on the validation split.
    Tune,
    /// Retrain every annotator on the full training set.
    Train {
        /// Family to train instead of the tuned winner.
        #[arg(long)]
        family: Option<Family>,
    },
    /// Predict one label per listed annotator for every test comment.
    Predict,
    /// Aggregate predictions (or gold annotations) into a submission file.
    Export {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        task: u8,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Annotated dataset to aggregate instead of the predictions.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Score a submission file against a gold file.
    Score {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        task: u8,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Convert exporter output (EMB1 or JSON lines of {id, vector}) to EMB1.
    PackEmbeddings {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Keep exactly this dataset's ids, in corpus order.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Write a synthetic corpus, embeddings and config.
    Synth {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Serialize, Deserialize)]
struct PredictedComment {
    id: String,
    labels: Vec<(AnnotatorId, Label)>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = dir;
    }
    match cli.command {
        Command::Tune => tune(&cfg),
        Command::Train { family } => train(&cfg, family),
        Command::Predict => predict(&cfg),
        Command::Export { task, output, gold } => export(&cfg, task, output, gold),
        Command::Score { task, predictions, gold } => score(&cfg, task, predictions, gold),
        Command::PackEmbeddings { input, output, dataset } => pack(&cfg, &input, &output, dataset.as_deref()),
        Command::Synth { dir } => {
            let corpus = generate(&SyntheticSpec {
                seed: cli.seed.unwrap_or(0),
                ..SyntheticSpec::default()
            })?;
            let files = corpus.write_to_dir(&dir)?;
            println!("{}", files.config.display());
            Ok(())
        }
    }
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{WORKERS_ENV}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn load_dataset(cfg: &ExperimentConfig, path: &Path, provenance: Provenance) -> Result<Dataset> {
    let file = File::open(path).map_err(Error::file(path))?;
    let d = parse_dataset_with(BufReader::new(file), &cfg.label_vocab()?, &cfg.data.fields).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    Ok(d.with_provenance(provenance))
}

fn load_embeddings(cfg: &ExperimentConfig) -> Result<EmbeddingTable> {
    let path = cfg.require(&cfg.data.embeddings, "embeddings")?;
    let file = File::open(path).map_err(Error::file(path))?;
    read_embeddings(BufReader::new(file))
}

fn create_output_dir(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(Error::file(&cfg.output_dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, json).map_err(Error::file(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::file(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn tune(cfg: &ExperimentConfig) -> Result<()> {
    let full = load_dataset(cfg, cfg.require(&cfg.data.train, "train")?, Provenance::Full)?;
    let features = load_embeddings(cfg)?;
    let (train, validation) = split_train_validation(&full, cfg.split_ratio, cfg.seed)?;
    let exploration = explore(&train, &validation, &features, cfg)?;
    create_output_dir(cfg)?;
    write_json(&cfg.output_dir.join(TUNING_FILE), &exploration)?;
    let mut report = String::new();
    for e in &exploration.evaluations {
        report += &e.subtask1.to_text(&format!("{}.subtask1", e.family));
        report += &e.subtask2.to_text(&format!("{}.subtask2", e.family));
    }
    report += &format!("best\t{}\n", exploration.best);
    let path = cfg.output_dir.join("validation_scores.txt");
    fs::write(&path, &report).map_err(Error::file(&path))?;
    print!("{report}");
    Ok(())
}

fn train(cfg: &ExperimentConfig, family: Option<Family>) -> Result<()> {
    let exploration: Exploration = read_json(&cfg.output_dir.join(TUNING_FILE))?;
    let family = family.or(cfg.family).unwrap_or(exploration.best);
    let evaluation = exploration
        .evaluation(family)
        .ok_or_else(|| Error::Config(format!("no tuning results for family {family}")))?;
    let full = load_dataset(cfg, cfg.require(&cfg.data.train, "train")?, Provenance::Full)?;
    let features = load_embeddings(cfg)?;
    let store = train_all_annotators(&full, &features, &evaluation.choices, &cfg.models(), cfg.seed)?;
    let manifest = store.save(&cfg.output_dir.join(MODELS_DIR))?;
    for entry in &manifest.models {
        println!("{}  {}  {}", entry.sha256, entry.family, entry.annotator);
    }
    Ok(())
}

fn predict(cfg: &ExperimentConfig) -> Result<()> {
    let test = load_dataset(cfg, cfg.require(&cfg.data.test, "test")?, Provenance::Test)?;
    let features = load_embeddings(cfg)?;
    let store = ModelStore::load(&cfg.output_dir.join(MODELS_DIR))?;
    let multisets = predict_dataset(test.comments(), &store, &features)?;
    let records: Vec<PredictedComment> = test
        .comments()
        .iter()
        .zip(multisets)
        .map(|(c, labels)| PredictedComment {
            id: c.id.clone(),
            labels: c.annotator_ids.iter().cloned().zip(labels).collect(),
        })
        .collect();
    write_json(&cfg.output_dir.join(PREDICTIONS_FILE), &records)?;
    println!("{} comments predicted", records.len());
    Ok(())
}

fn export(cfg: &ExperimentConfig, task: u8, output: Option<PathBuf>, gold: Option<PathBuf>) -> Result<()> {
    create_output_dir(cfg)?;
    if let Some(gold) = gold {
        let d = load_dataset(cfg, &gold, Provenance::Full)?;
        let path = output.unwrap_or_else(|| cfg.output_dir.join(format!("gold_task{task}.tsv")));
        if task == 1 {
            let file = File::create(&path).map_err(Error::file(&path))?;
            let mut w = BufWriter::new(file);
            write_task1_gold(&mut w, &gold_subtask1(&d, cfg.tie_mode)?)?;
            w.flush().map_err(Error::file(&path))?;
        } else {
            export_submission(&Submission::Task2(gold_subtask2(&d)?), &path)?;
        }
        println!("{}", path.display());
        return Ok(());
    }
    let records: Vec<PredictedComment> = read_json(&cfg.output_dir.join(PREDICTIONS_FILE))?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let multisets: Vec<Vec<Label>> = records.iter().map(|r| r.labels.iter().map(|(_, l)| *l).collect()).collect();
    let submission = if task == 1 {
        Submission::Task1(subtask1_from_multisets(ids, &multisets, cfg.tie_mode)?)
    } else {
        Submission::Task2(subtask2_from_multisets(ids, &multisets)?)
    };
    let path = output.unwrap_or_else(|| cfg.output_dir.join(format!("submission_task{task}.tsv")));
    export_submission(&submission, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn score(cfg: &ExperimentConfig, task: u8, predictions: Option<PathBuf>, gold: Option<PathBuf>) -> Result<()> {
    let predictions = predictions.unwrap_or_else(|| cfg.output_dir.join(format!("submission_task{task}.tsv")));
    let gold = gold.unwrap_or_else(|| cfg.output_dir.join(format!("gold_task{task}.tsv")));
    let report = if task == 1 {
        let p = read_file(&predictions, read_task1)?;
        let g = read_file(&gold, read_task1_gold)?;
        score_subtask1(&p, &g)?.to_text("subtask1")
    } else {
        let p = read_file(&predictions, read_task2)?;
        let g = read_file(&gold, read_task2)?;
        score_subtask2(&p, &g, cfg.js_base)?.to_text("subtask2")
    };
    create_output_dir(cfg)?;
    let path = cfg.output_dir.join(format!("scores_task{task}.txt"));
    fs::write(&path, &report).map_err(Error::file(&path))?;
    print!("{report}");
    Ok(())
}

#[derive(Deserialize)]
struct VectorRecord {
    id: String,
    vector: Vec<f32>,
}

fn read_any_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let mut file = BufReader::new(File::open(path).map_err(Error::file(path))?);
    if file.fill_buf().map_err(Error::file(path))?.starts_with(MAGIC) {
        return read_embeddings(file);
    }
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(Error::file(path))?;
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: VectorRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{}: {e}", path.display()),
        })?;
        table
            .get_or_insert_with(|| EmbeddingTable::new(record.vector.len()))
            .push(record.id, &record.vector)?;
    }
    table.ok_or(Error::EmptyInput)
}

fn pack(cfg: &ExperimentConfig, input: &Path, output: &Path, dataset: Option<&Path>) -> Result<()> {
    let mut table = read_any_embeddings(input)?;
    if let Some(path) = dataset {
        let d = load_dataset(cfg, path, Provenance::Full)?;
        let ids = d.ids();
        let missing: Vec<String> = ids.iter().filter(|id| table.get(id).is_none()).cloned().collect();
        if !missing.is_empty() {
            return Err(Error::MissingIds(missing));
        }
        table = EmbeddingTable::from_entries(table.dim(), ids.iter().map(|id| (id.clone(), table.get(id).unwrap().to_vec())))?;
    }
    let file = File::create(output).map_err(Error::file(output))?;
    let mut w = BufWriter::new(file);
    table.write_to(&mut w)?;
    w.flush().map_err(Error::file(output))?;
    println!("{} vectors of dimension {} written to {}", table.len(), table.dim(), output.display());
    Ok(())
}
