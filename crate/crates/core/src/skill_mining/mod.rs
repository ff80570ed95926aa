//! Skill mining from job-vacancy text: a sentence classifier that spots
//! skill-requirement sentences, a TF-IDF n-gram ranker that turns those
//! sentences into skill records, and description enrichment.

mod classifier;
mod description;
mod tfidf;

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{preprocess_section, Sentence, StopWords};

pub use classifier::{
    classify_sentence, evaluate_f1, train_sentence_classifier, ClassifierConfig, Prediction,
    SentenceClassifierModel, TrainedClassifier, CLASSIFIER_FORMAT_VERSION,
};
pub use description::{
    enrich_description, first_paragraph, DescriptionProvider, FixtureDescriptions,
    HttpEncyclopedia,
};
pub use tfidf::{extract_skill_terms, score_ngrams, ScoredNGram};

/// Section name whose sentences are labelled as skill requirements.
pub const REQUIRED_SKILLS_SECTION: &str = "Required Skills";

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("training data contains only one label")]
    SingleClassCorpus,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("description provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("unsupported model format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A sentence with its section-derived label (true = "Required Skills").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub label: bool,
}

/// A mined skill: a display name, the n-grams that matched it and an
/// optional description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRecord {
    pub name: String,
    pub keywords: Vec<String>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacancySection {
    pub name: String,
    pub text: String,
}

/// One job posting as stored in the vacancy corpus (JSONL, one per line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vacancy {
    pub id: String,
    pub sections: Vec<VacancySection>,
}

impl Vacancy {
    /// Every sentence of the posting, labelled by the section it came from.
    pub fn labeled_sentences(&self, stopwords: &StopWords) -> Vec<LabeledSentence> {
        self.sections
            .iter()
            .flat_map(|section| {
                let label = section.name.trim().eq_ignore_ascii_case(REQUIRED_SKILLS_SECTION);
                preprocess_section(&self.id, &section.name, &section.text, stopwords)
                    .into_iter()
                    .map(move |sentence| LabeledSentence { sentence, label })
            })
            .collect()
    }
}

pub fn read_vacancies(path: impl AsRef<Path>) -> Result<Vec<Vacancy>, MiningError> {
    parse_vacancies(BufReader::new(File::open(path)?))
}

pub fn parse_vacancies(reader: impl BufRead) -> Result<Vec<Vacancy>, MiningError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|source| MiningError::Parse { line: i + 1, source })?;
        out.push(v);
    }
    Ok(out)
}

pub fn labeled_corpus(vacancies: &[Vacancy], stopwords: &StopWords) -> Vec<LabeledSentence> {
    vacancies.iter().flat_map(|v| v.labeled_sentences(stopwords)).collect()
}

pub fn read_skills(path: impl AsRef<Path>) -> Result<Vec<SkillRecord>, MiningError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
