//! Preprocessing: strip links, mentions, retweet markers, and HTML entities;
//! drop predominantly non-English documents.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document};
use crate::vectorize::tokenize;
use crate::{Error, Result};

/// Reconciles document counts through the cleaning pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_count: usize,
    pub removed_non_english: usize,
    pub emptied_and_dropped: usize,
    pub output_count: usize,
}

/// Reference list of English terms, one lowercase term per line,
/// '#' comments permitted.
#[derive(Debug, Clone)]
pub struct Wordlist {
    terms: HashSet<String>,
}

impl Wordlist {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read wordlist {}: {e}", path.display())))?;
        Ok(Self::from_lines(&content))
    }

    /// Small bundled list covering common English plus the synthetic
    /// corpus vocabulary.
    pub fn builtin() -> Self {
        Self::from_lines(include_str!("../assets/wordlist_en.txt"))
    }

    fn from_lines(content: &str) -> Self {
        let terms = content
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Wordlist { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = S>, S: Into<String>>(terms: I) -> Self {
        Wordlist {
            terms: terms.into_iter().map(|t| t.into().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[a-z][a-z0-9+.\-]*://|\bwww\.").unwrap());
static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static ENTITY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&#[0-9]+;|&[a-zA-Z][a-zA-Z0-9]*;").unwrap());

fn is_retweet_marker(span: &str, next: Option<&str>) -> bool {
    if span == "RT" {
        // Only when it functions as a retweet marker: followed by a mention
        // or a colon span.
        return matches!(next, Some(n) if n.starts_with('@') || n.starts_with(':'));
    }
    span.len() > 2 && span.starts_with("RT") && span[2..].chars().all(|c| c == ':')
}

fn filter_pass<'a>(spans: &[&'a str]) -> Vec<&'a str> {
    let mut kept = Vec::with_capacity(spans.len());
    for (i, span) in spans.iter().enumerate() {
        if URL_RE.is_match(span) || MENTION_RE.is_match(span) || ENTITY_RE.is_match(span) {
            continue;
        }
        if is_retweet_marker(span, spans.get(i + 1).copied()) {
            continue;
        }
        kept.push(*span);
    }
    kept
}

/// Remove tweet artifacts. Operates on whitespace-delimited spans: a span
/// containing a URL (`scheme://` or `www.`), an `@`-mention, or an HTML
/// entity (`&name;` / `&#digits;`) is dropped whole; an `RT` span is dropped
/// when followed by a mention or colon. Runs of whitespace collapse to
/// single spaces and the ends are trimmed. The filter repeats until stable,
/// which makes the function idempotent.
pub fn strip_artifacts(text: &str) -> String {
    let mut spans: Vec<&str> = text.split_whitespace().collect();
    loop {
        let kept = filter_pass(&spans);
        if kept.len() == spans.len() {
            break;
        }
        spans = kept;
    }
    spans.join(" ")
}

/// Fraction of tokens found in the wordlist. An empty token list counts as
/// fully English (the document is kept).
pub fn english_token_ratio(tokens: &[String], wordlist: &Wordlist) -> Result<f64> {
    if wordlist.is_empty() {
        return Err(Error::Config("empty wordlist".into()));
    }
    if tokens.is_empty() {
        return Ok(1.0);
    }
    let hits = tokens.iter().filter(|t| wordlist.contains(t)).count();
    Ok(hits as f64 / tokens.len() as f64)
}

/// Strip artifacts from every document, tokenize, drop documents left with
/// no tokens, then drop documents whose English-token ratio falls below
/// `english_threshold`. Surviving documents carry their tokens; labels are
/// untouched and ordering is preserved.
pub fn clean_dataset<L: Clone + Ord + fmt::Display>(
    ds: &Dataset<L>,
    wordlist: &Wordlist,
    english_threshold: f64,
) -> Result<(Dataset<L>, CleaningReport)> {
    if !(0.0..=1.0).contains(&english_threshold) {
        return Err(Error::InvalidParameter(format!(
            "english_threshold must be in [0,1], got {english_threshold}"
        )));
    }
    if wordlist.is_empty() {
        return Err(Error::Config("empty wordlist".into()));
    }

    let mut entries = Vec::with_capacity(ds.entries.len());
    let mut removed_non_english = 0usize;
    let mut emptied_and_dropped = 0usize;
    for (doc, label) in &ds.entries {
        let text = strip_artifacts(&doc.text);
        let tokens = tokenize(&text);
        if tokens.is_empty() {
            emptied_and_dropped += 1;
            continue;
        }
        let ratio = english_token_ratio(&tokens, wordlist)?;
        if ratio < english_threshold {
            removed_non_english += 1;
            continue;
        }
        entries.push((
            Document {
                id: doc.id.clone(),
                text,
                tokens: Some(tokens),
            },
            label.clone(),
        ));
    }

    let report = CleaningReport {
        input_count: ds.len(),
        removed_non_english,
        emptied_and_dropped,
        output_count: entries.len(),
    };
    let cleaned = Dataset::new(ds.name.clone(), entries)?;
    Ok((cleaned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BinaryLabel, Dataset};
    use proptest::prelude::*;

    #[test]
    fn strip_retweet_mention_url_entity() {
        assert_eq!(
            strip_artifacts("RT @user: check https://t.co/abc &amp; this"),
            "check this"
        );
    }

    #[test]
    fn strip_identity_on_plain_text() {
        assert_eq!(strip_artifacts("plain words only"), "plain words only");
    }

    #[test]
    fn strip_all_artifact_spans() {
        assert_eq!(strip_artifacts("@a @b &lt;3"), "");
    }

    #[test]
    fn rt_kept_when_not_a_marker() {
        assert_eq!(strip_artifacts("the RT button"), "the RT button");
        assert_eq!(strip_artifacts("RT: something"), "something");
        assert_eq!(strip_artifacts("word www.example.com/x"), "word");
    }

    proptest! {
        #[test]
        fn strip_artifacts_idempotent(text in ".{0,120}") {
            let once = strip_artifacts(&text);
            prop_assert_eq!(strip_artifacts(&once), once.clone());
        }

        #[test]
        fn strip_artifacts_idempotent_tweetlike(
            parts in proptest::collection::vec(
                prop_oneof![
                    Just("RT".to_string()),
                    Just("@user".to_string()),
                    Just(":".to_string()),
                    Just("https://t.co/x".to_string()),
                    Just("www.example.org".to_string()),
                    Just("&amp;".to_string()),
                    Just("&#38;".to_string()),
                    "[a-z]{1,6}",
                ],
                0..12,
            )
        ) {
            let text = parts.join(" ");
            let once = strip_artifacts(&text);
            prop_assert_eq!(strip_artifacts(&once), once.clone());
        }
    }

    #[test]
    fn english_ratio_cases() {
        let wl = Wordlist::from_terms(["one", "two", "three", "four"]);
        let toks = |v: &[&str]| -> Vec<String> { v.iter().map(|s| s.to_string()).collect() };
        assert_eq!(
            english_token_ratio(&toks(&["one", "two", "three", "four"]), &wl).unwrap(),
            1.0
        );
        assert_eq!(
            english_token_ratio(&toks(&["one", "two", "xx", "yy"]), &wl).unwrap(),
            0.5
        );
        assert_eq!(english_token_ratio(&[], &wl).unwrap(), 1.0);
        let empty = Wordlist::from_terms(Vec::<String>::new());
        assert!(english_token_ratio(&toks(&["one"]), &empty).is_err());
    }

    fn labeled(texts: &[&str]) -> Dataset<BinaryLabel> {
        let entries = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    Document::new(i.to_string(), *t),
                    if i % 2 == 0 {
                        BinaryLabel::Cyberbullying
                    } else {
                        BinaryLabel::NotCyberbullying
                    },
                )
            })
            .collect();
        Dataset::new("toy", entries).unwrap()
    }

    #[test]
    fn clean_dataset_drops_emptied() {
        let wl = Wordlist::from_terms(["keep", "these", "words"]);
        let ds = labeled(&["keep these", "@only @mentions", "these words"]);
        let (out, report) = clean_dataset(&ds, &wl, 0.5).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(report.emptied_and_dropped, 1);
        assert_eq!(report.removed_non_english, 0);
        assert_eq!(
            report.output_count,
            report.input_count - report.removed_non_english - report.emptied_and_dropped
        );
    }

    #[test]
    fn clean_dataset_zero_threshold_removes_nothing_non_english() {
        let wl = Wordlist::from_terms(["keep"]);
        let ds = labeled(&["totally unknown words", "keep", "mas palabras aqui"]);
        let (_, report) = clean_dataset(&ds, &wl, 0.0).unwrap();
        assert_eq!(report.removed_non_english, 0);
    }

    #[test]
    fn clean_dataset_non_english_threshold() {
        let wl = Wordlist::from_terms(["one"]);
        // 1 of 5 tokens known -> ratio 0.2 < 0.5 -> dropped.
        let ds = labeled(&["one dos tres cuatro cinco"]);
        let (out, report) = clean_dataset(&ds, &wl, 0.5).unwrap();
        assert_eq!(out.len(), 0);
        assert_eq!(report.removed_non_english, 1);
    }

    #[test]
    fn clean_dataset_monotone_in_threshold_and_keeps_labels() {
        let wl = Wordlist::from_terms(["alpha", "beta", "gamma"]);
        let ds = labeled(&[
            "alpha beta",
            "alpha zz yy",
            "zz yy xx",
            "gamma beta alpha",
            "beta qq",
        ]);
        let mut last = usize::MAX;
        for threshold in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (out, report) = clean_dataset(&ds, &wl, threshold).unwrap();
            assert!(report.output_count <= last);
            last = report.output_count;
            for (doc, label) in &out.entries {
                let orig = ds
                    .entries
                    .iter()
                    .find(|(d, _)| d.id == doc.id)
                    .expect("survivor exists in input");
                assert_eq!(*label, orig.1);
            }
        }
    }
}
