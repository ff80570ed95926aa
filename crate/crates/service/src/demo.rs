//! A ready-to-serve store with sixteen data science skills, a synthetic video
//! catalog and a fit model, for trying the API or developing a front end.

use std::path::PathBuf;

use skillrec_core::catalog::Catalog;
use skillrec_core::fit_model::{train_fit_model, ForestConfig};
use skillrec_core::skill_mining::SkillRecord;
use skillrec_core::synth::{learner_catalog, separable_fit_catalog};

use crate::store::{Store, StoreError};

const SKILLS: [(&str, &[&str], &str); 16] = [
    ("python programming", &["python", "python programming"], "Python is an interpreted, high-level, general-purpose programming language."),
    ("sql", &["sql"], "SQL is a domain-specific language for managing data held in relational databases."),
    ("machine learning", &["machine learning", "machine"], "Machine learning studies algorithms that improve automatically through experience."),
    ("statistics", &["statistics", "statistical analysis"], "Statistics is the discipline concerned with collecting, analysing and interpreting data."),
    ("data visualization", &["data visualization", "visualization"], "Data visualization is the graphical representation of information and data."),
    ("r programming", &["r", "r programming"], "R is a programming language and environment for statistical computing and graphics."),
    ("deep learning", &["deep learning", "neural network"], "Deep learning is machine learning based on artificial neural networks with many layers."),
    ("big data", &["big data"], "Big data refers to data sets too large or complex for traditional processing software."),
    ("data mining", &["data mining", "mining"], "Data mining is the process of discovering patterns in large data sets."),
    ("apache spark", &["spark", "apache spark"], "Apache Spark is an open-source engine for large-scale distributed data processing."),
    ("hadoop", &["hadoop"], "Apache Hadoop is a framework for distributed storage and processing of big data."),
    ("tableau", &["tableau"], "Tableau is interactive data visualization software for business intelligence."),
    ("natural language processing", &["natural language processing", "nlp"], "Natural language processing lets computers process and analyse human language."),
    ("data cleaning", &["data cleaning", "data cleansing"], "Data cleaning detects and corrects corrupt or inaccurate records in a data set."),
    ("cloud computing", &["cloud computing", "cloud"], "Cloud computing is on-demand access to computing resources over the internet."),
    ("excel", &["excel", "microsoft excel"], "Microsoft Excel is a spreadsheet program with calculation and charting tools."),
];

pub fn demo_skills() -> Vec<SkillRecord> {
    SKILLS
        .iter()
        .enumerate()
        .map(|(i, (name, keywords, description))| SkillRecord {
            name: name.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
            description: description.to_string(),
            score: (SKILLS.len() - i) as f64,
        })
        .collect()
}

/// Writes the demo store under `root` with `per_level` videos per skill and level.
pub fn write_demo_store(root: impl Into<PathBuf>, per_level: usize, seed: u64) -> Result<Store, StoreError> {
    let skills = demo_skills();
    let names: Vec<String> = skills.iter().map(|s| s.name.clone()).collect();
    let catalog = Catalog::new(learner_catalog(&names, per_level, seed)).expect("generated ids are unique");

    let annotated = Catalog::new(separable_fit_catalog(500, seed)).expect("generated ids are unique");
    let model = train_fit_model(&annotated.labeled_fit_data(), &ForestConfig { seed, ..Default::default() })
        .expect("synthetic labels contain both classes");
    Store::create(root, &skills, &catalog, Some(&model))
}
