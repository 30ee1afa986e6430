//! Dynamic-query-expansion simulator: per-class keyword extraction (minus
//! globally dominant terms), keyword-driven retrieval from a document pool,
//! and automatic label assignment.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document};
use crate::stats::{expected_dqe_samples, DQEEstimate, LabelDraw};
use crate::vectorize::tokenize;
use crate::{Error, Result};

/// Top terms of one class, highest score first. Scores are in-class term
/// frequencies; terms on the global exclusion list never appear.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordSet<L> {
    pub label: L,
    pub keywords: Vec<(String, f64)>,
}

/// Unlabeled documents standing in for the external source expansion pulls
/// from.
#[derive(Debug, Clone)]
pub struct DocumentPool {
    pub documents: Vec<Document>,
}

impl DocumentPool {
    /// CSV with a text column and no label column; ids are `pool_<ordinal>`.
    pub fn load_csv(path: impl AsRef<Path>, text_column: &str) -> Result<DocumentPool> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => {
                    Error::Config(format!("cannot read {}: {e}", path.display()))
                }
                _ => Error::Csv(e),
            })?;
        let headers = reader.headers()?.clone();
        let text_idx = headers
            .iter()
            .position(|h| h == text_column)
            .ok_or_else(|| Error::ColumnNotFound(text_column.to_string()))?;
        let mut documents = Vec::new();
        for (ordinal, record) in reader.records().enumerate() {
            let record = record?;
            if let Some(text) = record.get(text_idx) {
                documents.push(Document::new(format!("pool_{ordinal}"), text));
            }
        }
        Ok(DocumentPool { documents })
    }
}

/// Documents retrieved and auto-labeled in one expansion pass, plus the
/// skip counters.
#[derive(Debug, Clone)]
pub struct ExpansionResult<L> {
    pub added: Vec<(Document, L, Vec<String>)>,
    pub skipped_ambiguous: usize,
    pub skipped_no_match: usize,
}

fn doc_tokens(doc: &Document) -> Vec<String> {
    match &doc.tokens {
        Some(t) => t.clone(),
        None => tokenize(&doc.text),
    }
}

/// Top `per_class_k` terms per class by in-class frequency, excluding the
/// `global_exclude_k` terms that rank highest over the whole dataset. Ties
/// break lexicographically.
pub fn class_keywords<L: Clone + Ord + fmt::Display>(
    ds: &Dataset<L>,
    per_class_k: usize,
    global_exclude_k: usize,
) -> Result<Vec<KeywordSet<L>>> {
    if per_class_k < 1 || global_exclude_k < 1 {
        return Err(Error::InvalidParameter(
            "per_class_k and global_exclude_k must be >= 1".into(),
        ));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.name.clone()));
    }

    let mut class_freq: BTreeMap<L, HashMap<String, u64>> = BTreeMap::new();
    let mut global_freq: HashMap<String, u64> = HashMap::new();
    for (doc, label) in &ds.entries {
        let freq = class_freq.entry(label.clone()).or_default();
        for token in doc_tokens(doc) {
            *global_freq.entry(token.clone()).or_insert(0) += 1;
            *freq.entry(token).or_insert(0) += 1;
        }
    }

    let mut global_ranked: Vec<(&String, &u64)> = global_freq.iter().collect();
    global_ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let excluded: HashSet<&String> = global_ranked
        .iter()
        .take(global_exclude_k)
        .map(|(term, _)| *term)
        .collect();

    let mut sets = Vec::new();
    for (label, freq) in &class_freq {
        if freq.is_empty() {
            return Err(Error::ClassAbsent(format!(
                "class {label} has an empty vocabulary"
            )));
        }
        let mut ranked: Vec<(&String, &u64)> = freq
            .iter()
            .filter(|(term, _)| !excluded.contains(term))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let keywords = ranked
            .into_iter()
            .take(per_class_k)
            .map(|(term, &count)| (term.clone(), count as f64))
            .collect();
        sets.push(KeywordSet {
            label: label.clone(),
            keywords,
        });
    }
    Ok(sets)
}

/// Scan the pool: a document matching strictly more keywords of one class
/// than of every other class is added with that class's label (the label is
/// fixed by the matching keyword set, never re-derived). Equal-match ties
/// and no-match documents are skipped and counted.
pub fn expand<L: Clone + PartialEq>(
    keyword_sets: &[KeywordSet<L>],
    pool: &DocumentPool,
) -> Result<ExpansionResult<L>> {
    if keyword_sets.is_empty() {
        return Err(Error::InvalidParameter("no keyword sets given".into()));
    }
    let mut added = Vec::new();
    let mut skipped_ambiguous = 0usize;
    let mut skipped_no_match = 0usize;

    for doc in &pool.documents {
        let tokens: HashSet<String> = doc_tokens(doc).into_iter().collect();
        let mut best: Option<(usize, Vec<String>, &L)> = None;
        let mut tied = false;
        for set in keyword_sets {
            let matched: Vec<String> = set
                .keywords
                .iter()
                .filter(|(term, _)| tokens.contains(term))
                .map(|(term, _)| term.clone())
                .collect();
            if matched.is_empty() {
                continue;
            }
            match &best {
                Some((count, _, _)) if matched.len() == *count => tied = true,
                Some((count, _, _)) if matched.len() > *count => {
                    best = Some((matched.len(), matched, &set.label));
                    tied = false;
                }
                None => best = Some((matched.len(), matched, &set.label)),
                _ => {}
            }
        }
        match best {
            None => skipped_no_match += 1,
            Some(_) if tied => skipped_ambiguous += 1,
            Some((_, matched, label)) => added.push((doc.clone(), label.clone(), matched)),
        }
    }

    Ok(ExpansionResult {
        added,
        skipped_ambiguous,
        skipped_no_match,
    })
}

/// Feed the expansion outcome into the hypergeometric estimator: per label,
/// |S_l| = added count, N_l = original + added, with `sample_n` draws.
pub fn contamination_report<L: Clone + Ord + fmt::Display>(
    original: &Dataset<L>,
    expanded: &ExpansionResult<L>,
    sample_n: u64,
) -> Result<DQEEstimate> {
    let original_counts = original.class_counts();
    let mut added_counts: BTreeMap<L, u64> = BTreeMap::new();
    for (_, label, _) in &expanded.added {
        *added_counts.entry(label.clone()).or_insert(0) += 1;
    }

    let mut labels: Vec<L> = original_counts.keys().cloned().collect();
    for label in added_counts.keys() {
        if !original_counts.contains_key(label) {
            labels.push(label.clone());
        }
    }
    labels.sort();

    let mut draws = Vec::new();
    for label in labels {
        let added = added_counts.get(&label).copied().unwrap_or(0);
        let total = original_counts.get(&label).copied().unwrap_or(0) as u64 + added;
        if sample_n > total {
            return Err(Error::InvalidParameter(format!(
                "sample_n {sample_n} exceeds N_l {total} for label {label}"
            )));
        }
        draws.push(LabelDraw {
            label: label.to_string(),
            draws: sample_n,
            dqe_count: added,
            total,
        });
    }
    expected_dqe_samples(&draws)
}
