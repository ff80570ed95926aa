//! Video catalog: ingestion, per-skill grouping and the min-max normalized
//! features shared by the fit model and the recommender.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{cosine, WordVectorStore};
use crate::fit_model::FitFeatures;
use crate::recommender::FeatureVectorX;
use crate::skill_mining::SkillRecord;
use crate::text::{word_tokens, StopWords};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("ranking position must be >= 1, got {0}")]
    InvalidRank(i64),
    #[error("cannot normalize an empty list")]
    EmptyInput,
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unknown skill {name:?}")]
    UnknownSkill { line: usize, name: String },
    #[error("line {line}: {reason}")]
    InvalidRecord { line: usize, reason: String },
    #[error("duplicate video id {0:?}")]
    DuplicateId(String),
    #[error("transcript provider failed: {0}")]
    Transcript(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoSource {
    Youtube,
    AvPortal,
}

/// Expertise tier, shared by videos (search level) and learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Beginner,
    Intermediate,
    Advanced,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Beginner, Level::Intermediate, Level::Advanced];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    /// The next tier up, `None` at advanced.
    pub fn next(self) -> Option<Level> {
        match self {
            Level::Beginner => Some(Level::Intermediate),
            Level::Intermediate => Some(Level::Advanced),
            Level::Advanced => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Beginner => "beginner",
            Level::Intermediate => "intermediate",
            Level::Advanced => "advanced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub source: VideoSource,
    pub title: String,
    pub target_skill: String,
    pub url: String,
    pub length_s: f64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub transcript: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dislikes: Option<u64>,
    pub relevancy_score: f64,
    pub level: Level,
    #[serde(default)]
    pub text_similarity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_label: Option<u8>,
}

impl VideoRecord {
    /// `likes - dislikes`, with absent counts read as 0.
    pub fn like_balance(&self) -> f64 {
        self.likes.unwrap_or(0) as f64 - self.dislikes.unwrap_or(0) as f64
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.length_s.is_finite() && self.length_s >= 0.0) {
            return Err(format!("length_s must be a non-negative number, got {}", self.length_s));
        }
        let r = self.relevancy_score;
        let position = (1.0 / r).round();
        if !(r > 0.0 && r <= 1.0) || (1.0 / position - r).abs() > 1e-9 {
            return Err(format!("relevancy_score {r} is not 1/position for an integer position >= 1"));
        }
        if let Some(rating) = self.rating {
            if !rating.is_finite() {
                return Err("rating must be finite".into());
            }
        }
        if !(-1.0..=1.0).contains(&self.text_similarity) {
            return Err(format!("text_similarity {} outside [-1, 1]", self.text_similarity));
        }
        if matches!(self.fit_label, Some(l) if l > 1) {
            return Err("fit_label must be 0 or 1".into());
        }
        Ok(())
    }
}

/// Per-skill normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillGroup {
    pub skill: String,
    pub members: Vec<String>,
    pub popularity_min: f64,
    pub popularity_max: f64,
    pub length_min: f64,
    pub length_max: f64,
    /// Median of the ratings present in the group, 0 when none are.
    pub rating_median: f64,
}

impl SkillGroup {
    fn build(skill: &str, videos: &[&VideoRecord]) -> Self {
        let bal: Vec<f64> = videos.iter().map(|v| v.like_balance()).collect();
        let len: Vec<f64> = videos.iter().map(|v| v.length_s).collect();
        let mut ratings: Vec<f64> = videos.iter().filter_map(|v| v.rating).collect();
        ratings.sort_by(f64::total_cmp);
        let rating_median = match ratings.len() {
            0 => 0.0,
            n if n % 2 == 1 => ratings[n / 2],
            n => (ratings[n / 2 - 1] + ratings[n / 2]) / 2.0,
        };
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SkillGroup {
            skill: skill.to_string(),
            members: videos.iter().map(|v| v.id.clone()).collect(),
            popularity_min: min(&bal),
            popularity_max: max(&bal),
            length_min: min(&len),
            length_max: max(&len),
            rating_median,
        }
    }
}

/// 1/position for a 1-based search-result position.
pub fn relevancy_from_rank(position: i64) -> Result<f64, CatalogError> {
    if position < 1 {
        return Err(CatalogError::InvalidRank(position));
    }
    Ok(1.0 / position as f64)
}

/// `(v - min) / (max - min)`, or 0.5 when `max == min`.
pub fn minmax_scale(v: f64, min: f64, max: f64) -> f64 {
    if max == min {
        0.5
    } else {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    }
}

pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>, CatalogError> {
    if values.is_empty() {
        return Err(CatalogError::EmptyInput);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(values.iter().map(|&v| minmax_scale(v, min, max)).collect())
}

pub fn popularity(v: &VideoRecord, group: &SkillGroup) -> f64 {
    minmax_scale(v.like_balance(), group.popularity_min, group.popularity_max)
}

pub fn normalized_length(v: &VideoRecord, group: &SkillGroup) -> f64 {
    minmax_scale(v.length_s, group.length_min, group.length_max)
}

pub fn build_feature_vector_x(v: &VideoRecord, group: &SkillGroup, fit_probability: f64) -> FeatureVectorX {
    FeatureVectorX::new(
        popularity(v, group),
        fit_probability,
        normalized_length(v, group),
        v.text_similarity,
    )
}

/// Fit-model inputs with missing engagement fields imputed (counts → 0,
/// rating → group median).
pub fn fit_features(v: &VideoRecord, group: &SkillGroup) -> FitFeatures {
    FitFeatures {
        length_s: v.length_s,
        rating: v.rating.unwrap_or(group.rating_median),
        view_count: v.view_count.unwrap_or(0) as f64,
        relevancy_score: v.relevancy_score,
        level: v.level,
        text_similarity: v.text_similarity,
    }
}

/// Validated videos indexed by id and grouped by target skill.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    videos: Vec<VideoRecord>,
    by_id: HashMap<String, usize>,
    groups: BTreeMap<String, SkillGroup>,
}

impl Catalog {
    pub fn new(videos: Vec<VideoRecord>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::with_capacity(videos.len());
        for (i, v) in videos.iter().enumerate() {
            if by_id.insert(v.id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateId(v.id.clone()));
            }
        }
        let mut members: BTreeMap<&str, Vec<&VideoRecord>> = BTreeMap::new();
        for v in &videos {
            members.entry(v.target_skill.as_str()).or_default().push(v);
        }
        let groups = members
            .iter()
            .map(|(skill, vs)| (skill.to_string(), SkillGroup::build(skill, vs)))
            .collect();
        Ok(Self { videos, by_id, groups })
    }

    pub fn videos(&self) -> &[VideoRecord] {
        &self.videos
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&VideoRecord> {
        self.by_id.get(id).map(|&i| &self.videos[i])
    }

    pub fn groups(&self) -> &BTreeMap<String, SkillGroup> {
        &self.groups
    }

    pub fn group(&self, skill: &str) -> Option<&SkillGroup> {
        self.groups.get(skill)
    }

    pub fn group_of(&self, v: &VideoRecord) -> &SkillGroup {
        &self.groups[&v.target_skill]
    }

    pub fn fit_features(&self, v: &VideoRecord) -> FitFeatures {
        fit_features(v, self.group_of(v))
    }

    /// Annotated rows for training the fit model, in catalog order.
    pub fn labeled_fit_data(&self) -> Vec<(FitFeatures, bool)> {
        self.videos
            .iter()
            .filter_map(|v| v.fit_label.map(|l| (self.fit_features(v), l == 1)))
            .collect()
    }

    /// X for every video, with the fit probability supplied by `fit`.
    pub fn feature_vectors<F>(&self, mut fit: F) -> BTreeMap<String, FeatureVectorX>
    where
        F: FnMut(&FitFeatures) -> f64,
    {
        self.videos
            .iter()
            .map(|v| {
                let group = self.group_of(v);
                let p = fit(&fit_features(v, group)).clamp(0.0, 1.0);
                (v.id.clone(), build_feature_vector_x(v, group, p))
            })
            .collect()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for v in &self.videos {
            serde_json::to_writer(&mut out, v)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf)
    }
}

/// Source of transcripts for videos whose record has none.
pub trait TranscriptProvider {
    fn transcript(&self, video_id: &str) -> Result<Option<String>, CatalogError>;
}

/// Transcripts from a JSON object mapping video id to text.
#[derive(Debug, Clone, Default)]
pub struct FixtureTranscripts(pub BTreeMap<String, String>);

impl FixtureTranscripts {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map(Self)
            .map_err(|source| CatalogError::Parse { line: 1, source })
    }
}

impl TranscriptProvider for FixtureTranscripts {
    fn transcript(&self, video_id: &str) -> Result<Option<String>, CatalogError> {
        Ok(self.0.get(video_id).cloned())
    }
}

/// Options for [`ingest_catalog`].
pub struct IngestOptions<'a> {
    pub stopwords: &'a StopWords,
    /// Drop stop words before averaging word vectors.
    pub filter_stopwords: bool,
    pub transcripts: Option<&'a dyn TranscriptProvider>,
}

impl<'a> IngestOptions<'a> {
    pub fn new(stopwords: &'a StopWords) -> Self {
        Self {
            stopwords,
            filter_stopwords: true,
            transcripts: None,
        }
    }
}

/// Parses catalog JSONL without recomputing derived fields.
pub fn parse_catalog(reader: impl BufRead) -> Result<Vec<VideoRecord>, CatalogError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: VideoRecord = serde_json::from_str(&line).map_err(|source| CatalogError::Parse { line: i + 1, source })?;
        v.validate().map_err(|reason| CatalogError::InvalidRecord { line: i + 1, reason })?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    Catalog::new(parse_catalog(BufReader::new(File::open(path)?))?)
}

/// Reads catalog JSONL, checks every record names a known skill, fills
/// missing transcripts from the provider and computes `text_similarity` as
/// the cosine between the averaged word vectors of the transcript and of the
/// skill description.
pub fn ingest_catalog(
    reader: impl BufRead,
    store: &WordVectorStore,
    skills: &[SkillRecord],
    options: &IngestOptions<'_>,
) -> Result<Catalog, CatalogError> {
    let stopwords = options.filter_stopwords.then_some(options.stopwords);
    let descriptions: HashMap<&str, _> = skills
        .iter()
        .map(|s| (s.name.as_str(), store.embed_text(&word_tokens(&s.description, stopwords))))
        .collect();

    let mut videos = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let mut v: VideoRecord = serde_json::from_str(&line).map_err(|source| CatalogError::Parse { line: n, source })?;
        let Some(skill_vec) = descriptions.get(v.target_skill.as_str()) else {
            return Err(CatalogError::UnknownSkill { line: n, name: v.target_skill });
        };
        if v.transcript.trim().is_empty() {
            if let Some(provider) = options.transcripts {
                v.transcript = provider.transcript(&v.id)?.unwrap_or_default();
            }
        }
        let transcript_vec = store.embed_text(&word_tokens(&v.transcript, stopwords));
        v.text_similarity = cosine(&transcript_vec, skill_vec).unwrap_or(0.0);
        v.validate().map_err(|reason| CatalogError::InvalidRecord { line: n, reason })?;
        videos.push(v);
    }
    Catalog::new(videos)
}

pub fn ingest_catalog_file(
    path: impl AsRef<Path>,
    store: &WordVectorStore,
    skills: &[SkillRecord],
    options: &IngestOptions<'_>,
) -> Result<Catalog, CatalogError> {
    ingest_catalog(BufReader::new(File::open(path)?), store, skills, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(id: &str, skill: &str, length: f64, likes: Option<u64>, dislikes: Option<u64>) -> VideoRecord {
        VideoRecord {
            id: id.into(),
            source: VideoSource::Youtube,
            title: format!("video {id}"),
            target_skill: skill.into(),
            url: format!("https://example.org/{id}"),
            length_s: length,
            description: String::new(),
            transcript: String::new(),
            view_count: Some(100),
            rating: Some(4.0),
            likes,
            dislikes,
            relevancy_score: 1.0,
            level: Level::Beginner,
            text_similarity: 0.0,
            fit_label: None,
        }
    }

    #[test]
    fn relevancy() {
        assert_eq!(relevancy_from_rank(1).unwrap(), 1.0);
        assert_eq!(relevancy_from_rank(4).unwrap(), 0.25);
        assert!(matches!(relevancy_from_rank(0), Err(CatalogError::InvalidRank(0))));
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_normalize(&[10.0, 20.0, 30.0]).unwrap(), [0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&[5.0, 5.0]).unwrap(), [0.5, 0.5]);
        assert_eq!(minmax_normalize(&[-2.0, 0.0, 2.0]).unwrap(), [0.0, 0.5, 1.0]);
        assert!(matches!(minmax_normalize(&[]), Err(CatalogError::EmptyInput)));
    }

    #[test]
    fn popularity_over_group() {
        let cat = Catalog::new(vec![
            video("a", "sql", 60.0, Some(100), Some(20)),
            video("b", "sql", 60.0, Some(40), Some(10)),
            video("c", "sql", 60.0, Some(0), Some(10)),
        ])
        .unwrap();
        let g = cat.group("sql").unwrap();
        let pops: Vec<f64> = cat.videos().iter().map(|v| popularity(v, g)).collect();
        assert_eq!(pops, [1.0, 40.0 / 90.0, 0.0]);
    }

    #[test]
    fn degenerate_and_missing_engagement() {
        let cat = Catalog::new(vec![video("a", "sql", 60.0, None, None)]).unwrap();
        let v = &cat.videos()[0];
        assert_eq!(v.like_balance(), 0.0);
        let x = build_feature_vector_x(v, cat.group_of(v), 0.9);
        assert_eq!(x, FeatureVectorX::new(0.5, 0.9, 0.5, 0.0));
    }

    #[test]
    fn adding_a_longer_video_only_moves_length() {
        let mut vids = vec![video("a", "sql", 100.0, Some(5), None), video("b", "sql", 200.0, Some(1), None)];
        let before = Catalog::new(vids.clone()).unwrap().feature_vectors(|_| 0.7);
        vids.push(video("c", "sql", 400.0, Some(3), None));
        let after = Catalog::new(vids).unwrap().feature_vectors(|_| 0.7);
        let (xb, xa) = (before["b"], after["b"]);
        assert_eq!(xb.norm_length(), 1.0);
        assert!((xa.norm_length() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(xb.popularity(), xa.popularity());
        assert_eq!(xb.fit_probability(), xa.fit_probability());
        assert_eq!(xb.text_similarity(), xa.text_similarity());
    }

    #[test]
    fn groups_are_local() {
        let base = vec![video("a", "sql", 10.0, Some(1), None), video("b", "python", 20.0, Some(2), None), video("c", "python", 30.0, None, None)];
        let before = Catalog::new(base.clone()).unwrap().feature_vectors(|_| 0.5);
        let mut more = base;
        more.push(video("d", "sql", 999.0, Some(500), None));
        let after = Catalog::new(more).unwrap().feature_vectors(|_| 0.5);
        assert_eq!(before["b"], after["b"]);
        assert_eq!(before["c"], after["c"]);
    }

    #[test]
    fn rating_imputed_with_group_median() {
        let mut a = video("a", "sql", 10.0, None, None);
        a.rating = Some(3.0);
        let mut b = video("b", "sql", 10.0, None, None);
        b.rating = Some(5.0);
        let mut c = video("c", "sql", 10.0, None, None);
        c.rating = None;
        c.view_count = None;
        c.source = VideoSource::AvPortal;
        let cat = Catalog::new(vec![a, b, c]).unwrap();
        let f = cat.fit_features(cat.get("c").unwrap());
        assert_eq!(f.rating, 4.0);
        assert_eq!(f.view_count, 0.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = Catalog::new(vec![video("a", "sql", 1.0, None, None), video("a", "sql", 2.0, None, None)]);
        assert!(matches!(r, Err(CatalogError::DuplicateId(id)) if id == "a"));
    }

    fn skill(name: &str, description: &str) -> SkillRecord {
        SkillRecord { name: name.into(), keywords: vec![name.into()], description: description.into(), score: 1.0 }
    }

    fn vectors() -> WordVectorStore {
        WordVectorStore::parse("python 1 0\nlanguage 1 0\nsql 0 1\nquery 0 1\n".as_bytes(), None).unwrap()
    }

    fn line(v: &VideoRecord) -> String {
        serde_json::to_string(v).unwrap() + "\n"
    }

    #[test]
    fn ingest_computes_similarity() {
        let skills = [skill("python", "Python is a language"), skill("sql", "SQL query language")];
        let mut v1 = video("v1", "python", 60.0, None, None);
        v1.transcript = "we write python today".into();
        let mut v2 = video("v2", "python", 60.0, None, None);
        v2.transcript = "the query".into();
        let v3 = video("v3", "sql", 60.0, None, None);
        let text = line(&v1) + &line(&v2) + &line(&v3);
        let sw = StopWords::english();
        let cat = ingest_catalog(text.as_bytes(), &vectors(), &skills, &IngestOptions::new(&sw)).unwrap();
        assert!((cat.get("v1").unwrap().text_similarity - 1.0).abs() < 1e-12);
        assert_eq!(cat.get("v2").unwrap().text_similarity, 0.0);
        assert_eq!(cat.get("v3").unwrap().text_similarity, 0.0);
        assert_eq!(cat.groups().len(), 2);

        let again = ingest_catalog(text.as_bytes(), &vectors(), &skills, &IngestOptions::new(&sw)).unwrap();
        assert_eq!(cat, again);

        let mut out = Vec::new();
        cat.write_jsonl(&mut out).unwrap();
        let reparsed = Catalog::new(parse_catalog(out.as_slice()).unwrap()).unwrap();
        assert_eq!(reparsed, cat);
    }

    #[test]
    fn ingest_uses_transcript_provider() {
        let skills = [skill("sql", "SQL query")];
        let v = video("v1", "sql", 60.0, None, None);
        let sw = StopWords::english();
        let provider = FixtureTranscripts(BTreeMap::from([("v1".to_string(), "query".to_string())]));
        let opts = IngestOptions { transcripts: Some(&provider), ..IngestOptions::new(&sw) };
        let cat = ingest_catalog(line(&v).as_bytes(), &vectors(), &skills, &opts).unwrap();
        assert_eq!(cat.get("v1").unwrap().transcript, "query");
        assert!((cat.get("v1").unwrap().text_similarity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ingest_errors() {
        let skills = [skill("sql", "SQL")];
        let sw = StopWords::english();
        let opts = IngestOptions::new(&sw);
        let unknown = line(&video("v1", "cobol", 1.0, None, None));
        let text = line(&video("v0", "sql", 1.0, None, None)) + &unknown;
        match ingest_catalog(text.as_bytes(), &vectors(), &skills, &opts) {
            Err(CatalogError::UnknownSkill { line, name }) => {
                assert_eq!(line, 2);
                assert_eq!(name, "cobol");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = "{\"id\": 1}\n";
        assert!(matches!(ingest_catalog(bad.as_bytes(), &vectors(), &skills, &opts), Err(CatalogError::Parse { line: 1, .. })));

        let mut v = video("v1", "sql", 1.0, None, None);
        v.relevancy_score = 0.3;
        assert!(matches!(
            ingest_catalog(line(&v).as_bytes(), &vectors(), &skills, &opts),
            Err(CatalogError::InvalidRecord { line: 1, .. })
        ));
    }

    #[test]
    fn level_serializes_as_string() {
        assert_eq!(serde_json::to_string(&Level::Intermediate).unwrap(), "\"intermediate\"");
        assert_eq!(Level::Beginner.next(), Some(Level::Intermediate));
        assert_eq!(Level::Advanced.next(), None);
        assert_eq!(Level::Advanced.ordinal(), 2);
    }
}
