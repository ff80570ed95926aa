//! TF-IDF ranking of n-grams over skill sentences.
//!
//! Every sentence is one document. `tf` is the raw count of an n-gram in a
//! document, `idf = ln((1 + N) / (1 + df)) + 1`, and an n-gram's score is the
//! sum of `tf * idf` over all documents. N-grams seen in fewer than `min_df`
//! documents are dropped before ranking.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{MiningError, SkillRecord};
use crate::text::{ngrams, NGram, Sentence};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredNGram {
    pub ngram: NGram,
    pub df: usize,
    pub score: f64,
}

/// Scores every n-gram that survives the `min_df` cutoff. Sorted by score
/// descending, ties by n-gram text ascending.
pub fn score_ngrams(docs: &[Sentence], min_df: usize, max_n: usize) -> Result<Vec<ScoredNGram>, MiningError> {
    if docs.is_empty() {
        return Err(MiningError::EmptyCorpus);
    }
    let mut tf_total: HashMap<NGram, usize> = HashMap::new();
    let mut df: HashMap<NGram, usize> = HashMap::new();
    for doc in docs {
        let grams = ngrams(doc, max_n);
        let mut seen = HashSet::new();
        for g in grams {
            *tf_total.entry(g.clone()).or_default() += 1;
            if seen.insert(g.clone()) {
                *df.entry(g).or_default() += 1;
            }
        }
    }

    // Since idf is constant per n-gram, sum(tf * idf) == idf * sum(tf).
    let n_docs = docs.len() as f64;
    let mut scored: Vec<ScoredNGram> = df
        .into_iter()
        .filter(|(_, d)| *d >= min_df.max(1))
        .map(|(ngram, d)| {
            let idf = ((1.0 + n_docs) / (1.0 + d as f64)).ln() + 1.0;
            let score = tf_total[&ngram] as f64 * idf;
            ScoredNGram { ngram, df: d, score }
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.ngram.cmp(&b.ngram)));
    Ok(scored)
}

/// Takes the `top_k` best n-grams and folds those sharing a head token into
/// one [`SkillRecord`]. A record is named after its longest keyword and scored
/// by its best one; descriptions are left empty.
pub fn extract_skill_terms(
    positive_sentences: &[Sentence],
    min_df: usize,
    max_n: usize,
    top_k: usize,
) -> Result<Vec<SkillRecord>, MiningError> {
    let scored = score_ngrams(positive_sentences, min_df, max_n)?;

    let mut records: Vec<SkillRecord> = Vec::new();
    let mut by_head: BTreeMap<String, usize> = BTreeMap::new();
    for s in scored.into_iter().take(top_k) {
        let text = s.ngram.text();
        match by_head.get(s.ngram.head()) {
            Some(&i) => {
                let rec = &mut records[i];
                if text.split(' ').count() > rec.name.split(' ').count() {
                    rec.name = text.clone();
                }
                rec.keywords.push(text);
            }
            None => {
                by_head.insert(s.ngram.head().to_string(), records.len());
                records.push(SkillRecord {
                    name: text.clone(),
                    keywords: vec![text],
                    description: String::new(),
                    score: s.score,
                });
            }
        }
    }
    Ok(records)
}
