use std::error::Error;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use skillrec::api::{serve, AppState};
use skillrec::demo::write_demo_store;
use skillrec::store::{write_atomic, Store};
use skillrec_core::catalog::{ingest_catalog_file, load_catalog, FixtureTranscripts, IngestOptions, TranscriptProvider};
use skillrec_core::embeddings::WordVectorStore;
use skillrec_core::fit_model::{train_and_evaluate, ForestConfig};
use skillrec_core::metrics::train_test_split;
use skillrec_core::simulation::{simulate, CatalogShape, SimulationConfig};
use skillrec_core::skill_mining::{
    classify_sentence, enrich_description, evaluate_f1, extract_skill_terms, labeled_corpus, read_skills,
    read_vacancies, train_sentence_classifier, ClassifierConfig, DescriptionProvider, FixtureDescriptions,
    HttpEncyclopedia, SentenceClassifierModel,
};
use skillrec_core::text::StopWords;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "skillrec", version, about = "Skill-driven open educational video recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Independent,
    TradeOff,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API from a store directory.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Train the skill-sentence classifier on vacancy JSONL and report held-out F1.
    TrainSentenceClassifier {
        #[arg(long)]
        vacancies: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Classify vacancy sentences and mine skill terms from the positive ones.
    ExtractSkills {
        #[arg(long)]
        vacancies: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        min_df: usize,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = 16)]
        top_k: usize,
        /// JSON object mapping skill name to description.
        #[arg(long, conflicts_with = "encyclopedia")]
        descriptions: Option<PathBuf>,
        /// Base URL of a `/page/summary/{title}` REST endpoint.
        #[arg(long)]
        encyclopedia: Option<String>,
    },
    /// Compute text similarity for raw video records and write the catalog.
    IngestVideos {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        skills: PathBuf,
        /// Word vectors in GloVe text format.
        #[arg(long)]
        vectors: PathBuf,
        /// JSON object mapping video id to transcript.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long)]
        keep_stopwords: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the video fit model on an annotated catalog.
    TrainFit {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        split: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run synthetic learners through the recommend and rate loop.
    Simulate {
        #[arg(long, default_value_t = 20)]
        users: usize,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = ShapeArg::TradeOff)]
        catalog_shape: ShapeArg,
        #[arg(long)]
        shared_occupations: bool,
        /// Include every user's hidden and learned weights.
        #[arg(long)]
        details: bool,
    },
    /// Write a demo store with sixteen skills and a synthetic catalog.
    DemoStore {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_level: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Serve { store, port, host } => {
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let state = Arc::new(AppState::load(Store::open(store)?)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                log::info!("listening on http://{}", listener.local_addr()?);
                serve(listener, state, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
            })?;
        }
        Command::TrainSentenceClassifier { vacancies, out, train_fraction, seed, epochs, learning_rate, dim } => {
            let data = labeled_corpus(&read_vacancies(vacancies)?, &StopWords::english());
            let (train_idx, test_idx) = train_test_split(data.len(), train_fraction, seed);
            let train: Vec<_> = train_idx.iter().map(|&i| data[i].clone()).collect();
            let test: Vec<_> = test_idx.iter().map(|&i| data[i].clone()).collect();
            let defaults = ClassifierConfig::default();
            let config = ClassifierConfig {
                epochs: epochs.unwrap_or(defaults.epochs),
                learning_rate: learning_rate.unwrap_or(defaults.learning_rate),
                dim: dim.unwrap_or(defaults.dim),
                seed,
                ..defaults
            };
            let trained = train_sentence_classifier(&train, &config)?;
            trained.model.save(&out)?;
            let mut report = json!({
                "sentences": data.len(),
                "train_size": train.len(),
                "test_size": test.len(),
                "epoch_losses": trained.epoch_losses,
            });
            if !test.is_empty() {
                report["scores"] = serde_json::to_value(evaluate_f1(&trained.model, &test)?)?;
            }
            print_json(&report);
        }
        Command::ExtractSkills { vacancies, model, out, min_df, max_n, top_k, descriptions, encyclopedia } => {
            let model = SentenceClassifierModel::load(model)?;
            let sentences = labeled_corpus(&read_vacancies(vacancies)?, &StopWords::english());
            let positive: Vec<_> = sentences
                .into_iter()
                .map(|s| s.sentence)
                .filter(|s| classify_sentence(&model, s).label)
                .collect();
            log::info!("{} sentences classified as skill requirements", positive.len());
            let provider: Option<Box<dyn DescriptionProvider>> = match (descriptions, encyclopedia) {
                (Some(path), _) => Some(Box::new(FixtureDescriptions::load(path)?)),
                (None, Some(url)) => Some(Box::new(HttpEncyclopedia::new(&url)?)),
                (None, None) => None,
            };
            let mut skills = extract_skill_terms(&positive, min_df, max_n, top_k)?;
            if let Some(provider) = provider {
                skills = skills
                    .into_iter()
                    .map(|s| enrich_description(s, provider.as_ref()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            write_atomic(&out, &serde_json::to_vec_pretty(&skills)?)?;
            print_json(&json!({ "skills": skills.len(), "out": out }));
        }
        Command::IngestVideos { videos, skills, vectors, transcripts, keep_stopwords, out } => {
            let skills = read_skills(skills)?;
            let vectors = WordVectorStore::load(vectors, None)?;
            let stopwords = StopWords::english();
            let fixture = transcripts.map(FixtureTranscripts::load).transpose()?;
            let options = IngestOptions {
                filter_stopwords: !keep_stopwords,
                transcripts: fixture.as_ref().map(|f| f as &dyn TranscriptProvider),
                ..IngestOptions::new(&stopwords)
            };
            let catalog = ingest_catalog_file(videos, &vectors, &skills, &options)?;
            let mut buf = Vec::new();
            catalog.write_jsonl(&mut buf)?;
            write_atomic(&out, &buf)?;
            print_json(&json!({ "videos": catalog.len(), "out": out }));
        }
        Command::TrainFit { catalog, split, seed, trees, out } => {
            let data = load_catalog(catalog)?.labeled_fit_data();
            let config = ForestConfig { n_trees: trees, seed, ..Default::default() };
            let eval = train_and_evaluate(&data, split, &config)?;
            eval.model.save(&out)?;
            let importances: serde_json::Map<String, serde_json::Value> =
                eval.model.importances.named().map(|(k, v)| (k.to_string(), json!(v))).collect();
            print_json(&json!({
                "train_size": eval.train_size,
                "test_size": eval.test_size,
                "scores": eval.scores,
                "importances": importances,
            }));
        }
        Command::Simulate { users, rounds, seed, noise, catalog_shape, shared_occupations, details } => {
            let config = SimulationConfig {
                users,
                rounds,
                seed,
                noise_sigma: noise,
                shape: match catalog_shape {
                    ShapeArg::Independent => CatalogShape::Independent,
                    ShapeArg::TradeOff => CatalogShape::TradeOff,
                },
                shared_occupations,
                ..Default::default()
            };
            let report = simulate(&config)?;
            let mut summary = json!({
                "users": report.users.len(),
                "rounds": rounds,
                "mean_cosine": report.mean_cosine,
                "mean_achieved_early": report.mean_achieved_early,
                "mean_achieved_late": report.mean_achieved_late,
                "elapsed_s": report.elapsed.as_secs_f64(),
            });
            if details {
                summary["per_user"] = serde_json::to_value(&report.users)?;
            }
            print_json(&summary);
        }
        Command::DemoStore { out, per_level, seed } => {
            let store = write_demo_store(out, per_level, seed)?;
            print_json(&json!({ "store": store.root() }));
        }
    }
    Ok(())
}
