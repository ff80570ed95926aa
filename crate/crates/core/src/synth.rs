//! Seeded synthetic corpora: vacancy text for the sentence classifier and
//! video catalogs for the fit model and the learner simulation.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Level, VideoRecord, VideoSource};
use crate::skill_mining::{LabeledSentence, Vacancy, VacancySection, REQUIRED_SKILLS_SECTION};
use crate::text::{preprocess, StopWords};

const TOOLS: [&str; 16] = [
    "Python", "SQL", "R", "Spark", "Hadoop", "Tableau", "TensorFlow", "PyTorch", "Excel", "Scala", "Docker",
    "Kubernetes", "AWS", "pandas", "NumPy", "Java",
];
const TOPICS: [&str; 12] = [
    "machine learning", "statistics", "data visualization", "deep learning", "data mining", "big data",
    "natural language processing", "time series analysis", "A/B testing", "data cleaning", "predictive modeling",
    "cloud computing",
];
const SKILL_TEMPLATES: [&str; 8] = [
    "Strong experience with {tool} and {topic} required",
    "Proficiency in {tool} is a must",
    "Solid knowledge of {topic} and {tool}",
    "At least 3 years of hands-on experience in {topic}",
    "Degree in computer science, statistics or a related field with {topic} background",
    "Excellent {tool} programming skills",
    "Familiarity with {tool}, {tool2} or similar tools",
    "Demonstrated expertise in {topic} using {tool}",
];
const OTHER_TEMPLATES: [&str; 14] = [
    "We offer a competitive salary and flexible working hours",
    "Our company is a leading provider of retail analytics in {city}",
    "You will join a friendly team of twelve people",
    "Benefits include health insurance and paid vacation",
    "The position is based in our {city} office",
    "Collaborate with product managers to define reporting needs",
    "Build dashboards for the sales department using {tool}",
    "Present findings to senior management every quarter",
    "Apply online with your resume and cover letter",
    "We are an equal opportunity employer",
    "Travel to client sites up to twenty percent of the time",
    "Maintain data pipelines that feed our {topic} platform",
    "Founded in 1998 the firm now serves customers worldwide",
    "Report directly to the head of analytics",
];
const CITIES: [&str; 6] = ["Berlin", "Boston", "Chicago", "Hannover", "Austin", "Denver"];

fn fill(template: &str, rng: &mut impl Rng) -> String {
    let tool = *TOOLS.choose(rng).expect("non-empty");
    let tool2 = *TOOLS.choose(rng).expect("non-empty");
    let topic = *TOPICS.choose(rng).expect("non-empty");
    let city = *CITIES.choose(rng).expect("non-empty");
    template
        .replace("{tool2}", tool2)
        .replace("{tool}", tool)
        .replace("{topic}", topic)
        .replace("{city}", city)
}

/// Settings of the bundled vacancy fixture: 1,000 sentences, 20% of the
/// skill sentences filed outside "Required Skills".
pub const VACANCY_FIXTURE_VACANCIES: usize = 100;
pub const VACANCY_FIXTURE_NOISE: f64 = 0.2;
pub const VACANCY_FIXTURE_SEED: u64 = 11;

/// Vacancies with `n_vacancies * 10` sentences, 3 of 10 being skill
/// requirements. A skill sentence lands in the "Required Skills" section
/// except with probability `noise`, when it is filed under
/// "Responsibilities" and so carries label 0.
pub fn noisy_vacancy_corpus(n_vacancies: usize, noise: f64, seed: u64) -> Vec<Vacancy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_vacancies)
        .map(|i| {
            let mut about = Vec::new();
            let mut duties = Vec::new();
            let mut required = Vec::new();
            for _ in 0..3 {
                let s = fill(SKILL_TEMPLATES.choose(&mut rng).expect("non-empty"), &mut rng);
                if rng.random_bool(noise) {
                    duties.push(s);
                } else {
                    required.push(s);
                }
            }
            for k in 0..7 {
                let s = fill(OTHER_TEMPLATES.choose(&mut rng).expect("non-empty"), &mut rng);
                if k < 4 {
                    about.push(s);
                } else {
                    duties.push(s);
                }
            }
            let section = |name: &str, sentences: Vec<String>| VacancySection {
                name: name.to_string(),
                text: sentences.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" "),
            };
            Vacancy {
                id: format!("vac-{i:04}"),
                sections: vec![
                    section("About Us", about),
                    section("Responsibilities", duties),
                    section(REQUIRED_SKILLS_SECTION, required),
                ],
            }
        })
        .collect()
}

/// Sentences whose positive and negative vocabularies are disjoint.
pub fn separable_sentences(n: usize, seed: u64) -> Vec<LabeledSentence> {
    const POS: [&str; 10] = [
        "python", "sql", "regression", "clustering", "spark", "tableau", "hadoop", "tensorflow", "scala", "numpy",
    ];
    const NEG: [&str; 10] = [
        "salary", "office", "holiday", "insurance", "parking", "coffee", "pension", "gym", "canteen", "bonus",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sw = StopWords::empty();
    (0..n)
        .map(|i| {
            let label = i % 2 == 0;
            let vocab = if label { &POS } else { &NEG };
            let len = rng.random_range(3..8);
            let text = (0..len).map(|_| *vocab.choose(&mut rng).expect("non-empty")).collect::<Vec<_>>().join(" ");
            let sentence = preprocess(&text, &sw).into_iter().next().expect("non-empty sentence");
            LabeledSentence { sentence, label }
        })
        .collect()
}

fn random_video(id: String, skill: &str, level: Level, rng: &mut impl Rng) -> VideoRecord {
    VideoRecord {
        id: id.clone(),
        source: VideoSource::Youtube,
        title: format!("{skill} tutorial {id}"),
        target_skill: skill.to_string(),
        url: format!("https://videos.example.org/watch?v={id}"),
        length_s: rng.random_range(60.0..3600.0_f64).round(),
        description: String::new(),
        transcript: String::new(),
        view_count: Some(rng.random_range(0..2_000_000)),
        rating: Some((rng.random_range(1.0..5.0_f64) * 100.0).round() / 100.0),
        likes: Some(rng.random_range(0..20_000)),
        dislikes: Some(rng.random_range(0..2_000)),
        relevancy_score: 1.0 / rng.random_range(1..=50) as f64,
        level,
        text_similarity: rng.random_range(0.0..1.0),
        fit_label: None,
    }
}

/// Annotated catalog whose fit label is exactly `text_similarity > 0.5`.
pub fn separable_fit_catalog(n: usize, seed: u64) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skills = ["python", "sql", "statistics", "machine learning"];
    (0..n)
        .map(|i| {
            let skill = skills[i % skills.len()];
            let level = Level::ALL[rng.random_range(0..3)];
            let mut v = random_video(format!("fit-{i:04}"), skill, level, &mut rng);
            v.text_similarity = rng.random_range(-1.0..1.0);
            v.fit_label = Some(u8::from(v.text_similarity > 0.5));
            v
        })
        .collect()
}

/// Catalog with `per_level` videos for each (skill, level) pair.
pub fn learner_catalog(skills: &[String], per_level: usize, seed: u64) -> Vec<VideoRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (s, skill) in skills.iter().enumerate() {
        for level in Level::ALL {
            for k in 0..per_level {
                let id = format!("s{s}-{}-{k:03}", level.ordinal());
                out.push(random_video(id, skill, level, &mut rng));
            }
        }
    }
    out
}
