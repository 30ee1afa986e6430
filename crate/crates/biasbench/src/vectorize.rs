//! Tokenization, vocabulary fitting, count/tf-idf sparse encodings, and
//! out-of-vocabulary ratios.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Document};
use crate::{Error, Result};

/// Lowercase and split on maximal runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect()
}

/// Terms of a document under an n-gram range: unigrams plus space-joined
/// windows up to `range.1`. Uses the document's cached tokens when present.
pub fn doc_terms(doc: &Document, range: (usize, usize)) -> Vec<String> {
    let owned;
    let tokens: &[String] = match &doc.tokens {
        Some(t) => t,
        None => {
            owned = tokenize(&doc.text);
            &owned
        }
    };
    ngrams(tokens, range)
}

pub fn ngrams(tokens: &[String], range: (usize, usize)) -> Vec<String> {
    if range == (1, 1) {
        return tokens.to_vec();
    }
    let mut terms = Vec::new();
    for n in range.0..=range.1 {
        if n == 0 || tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            terms.push(window.join(" "));
        }
    }
    terms
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorizerOptions {
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub ngram_range: (usize, usize),
}

impl Default for VectorizerOptions {
    fn default() -> Self {
        VectorizerOptions {
            min_df: 1,
            max_features: None,
            ngram_range: (1, 1),
        }
    }
}

/// Fitted state shared by the count and tf-idf encoders: term→column map
/// plus document frequencies. Column indices follow lexicographic term
/// order for platform-independent determinism.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub term_to_index: BTreeMap<String, usize>,
    pub document_frequency: BTreeMap<String, usize>,
    pub fitted_on: String,
    pub n_documents: usize,
    pub ngram_range: (usize, usize),
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.term_to_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_to_index.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.term_to_index.contains_key(term)
    }
}

/// Fit a vocabulary with the default unigram options.
pub fn fit_vocabulary<L: Clone + Ord>(
    ds: &Dataset<L>,
    min_df: usize,
    max_features: Option<usize>,
) -> Result<Vocabulary> {
    fit_vocabulary_with(
        ds,
        &VectorizerOptions {
            min_df,
            max_features,
            ngram_range: (1, 1),
        },
    )
}

/// Fit a vocabulary: keep terms with document frequency >= min_df; when
/// max_features is set keep the top terms by document frequency with a
/// lexicographic tie-break.
pub fn fit_vocabulary_with<L: Clone + Ord>(
    ds: &Dataset<L>,
    opts: &VectorizerOptions,
) -> Result<Vocabulary> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset(ds.name.clone()));
    }
    if opts.min_df < 1 {
        return Err(Error::InvalidParameter("min_df must be >= 1".into()));
    }
    let (lo, hi) = opts.ngram_range;
    if lo < 1 || hi < lo || hi > 3 {
        return Err(Error::InvalidParameter(format!(
            "ngram_range must satisfy 1 <= lo <= hi <= 3, got ({lo},{hi})"
        )));
    }

    let mut df: HashMap<String, usize> = HashMap::new();
    for (doc, _) in &ds.entries {
        let mut seen = HashSet::new();
        for term in doc_terms(doc, opts.ngram_range) {
            if seen.insert(term.clone()) {
                *df.entry(term).or_insert(0) += 1;
            }
        }
    }

    let mut kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|(_, count)| *count >= opts.min_df)
        .collect();
    if let Some(max) = opts.max_features {
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(max);
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let mut term_to_index = BTreeMap::new();
    let mut document_frequency = BTreeMap::new();
    for (i, (term, count)) in kept.into_iter().enumerate() {
        term_to_index.insert(term.clone(), i);
        document_frequency.insert(term, count);
    }
    Ok(Vocabulary {
        term_to_index,
        document_frequency,
        fitted_on: ds.name.clone(),
        n_documents: ds.len(),
        ngram_range: opts.ngram_range,
    })
}

/// Sparse row: strictly increasing indices, nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Count,
    Tfidf,
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Encoding::Count => f.write_str("count"),
            Encoding::Tfidf => f.write_str("tfidf"),
        }
    }
}

/// Row-major sparse feature matrix; row order equals source entry order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<SparseVector>,
    pub n_columns: usize,
    pub encoding: Encoding,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVector::nnz).sum()
    }

    /// Coordinate-format text export: one-line header `rows cols nnz
    /// encoding`, then `row col value` triples.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.n_rows(),
            self.n_columns,
            self.nnz(),
            self.encoding
        )?;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter() {
                writeln!(w, "{r} {c} {v}")?;
            }
        }
        Ok(())
    }
}

fn count_row(doc: &Document, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for term in doc_terms(doc, vocab.ngram_range) {
        if let Some(idx) = vocab.index_of(&term) {
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
    }
    let (indices, values) = counts.into_iter().unzip();
    SparseVector { indices, values }
}

/// Term-occurrence counts per document; terms outside the vocabulary are
/// ignored.
pub fn encode_count(docs: &[Document], vocab: &Vocabulary) -> FeatureMatrix {
    FeatureMatrix {
        rows: docs.iter().map(|d| count_row(d, vocab)).collect(),
        n_columns: vocab.len(),
        encoding: Encoding::Count,
    }
}

/// tf-idf encoding: value = tf · (ln((1+n)/(1+df)) + 1), rows L2-normalized.
/// All-zero rows stay all-zero.
pub fn encode_tfidf(docs: &[Document], vocab: &Vocabulary) -> FeatureMatrix {
    let mut idf = vec![0.0; vocab.len()];
    let n = vocab.n_documents as f64;
    for (term, &idx) in &vocab.term_to_index {
        let df = vocab.document_frequency[term] as f64;
        idf[idx] = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
    }
    let rows = docs
        .iter()
        .map(|doc| {
            let mut row = count_row(doc, vocab);
            for (value, &idx) in row.values.iter_mut().zip(&row.indices) {
                *value *= idf[idx];
            }
            let norm = row.l2_norm();
            if norm > 0.0 {
                for value in &mut row.values {
                    *value /= norm;
                }
            }
            row
        })
        .collect();
    FeatureMatrix {
        rows,
        n_columns: vocab.len(),
        encoding: Encoding::Tfidf,
    }
}

/// Out-of-vocabulary rates of a test corpus against a fitted vocabulary,
/// at both token (occurrence) and type (distinct term) level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OOVReport {
    pub ratio_token_level: f64,
    pub ratio_type_level: f64,
    pub oov_token_count: usize,
    pub total_token_count: usize,
    pub oov_type_count: usize,
    pub total_type_count: usize,
}

pub fn oov_ratio<L: Clone + Ord>(
    train_vocab: &Vocabulary,
    test_ds: &Dataset<L>,
) -> Result<OOVReport> {
    let mut total_tokens = 0usize;
    let mut oov_tokens = 0usize;
    let mut types: HashSet<String> = HashSet::new();
    let mut oov_types: HashSet<String> = HashSet::new();
    for (doc, _) in &test_ds.entries {
        for term in doc_terms(doc, train_vocab.ngram_range) {
            total_tokens += 1;
            let in_vocab = train_vocab.contains(&term);
            if !in_vocab {
                oov_tokens += 1;
            }
            if types.insert(term.clone()) && !in_vocab {
                oov_types.insert(term);
            }
        }
    }
    if total_tokens == 0 {
        return Err(Error::NoTokens(test_ds.name.clone()));
    }
    Ok(OOVReport {
        ratio_token_level: oov_tokens as f64 / total_tokens as f64,
        ratio_type_level: oov_types.len() as f64 / types.len() as f64,
        oov_token_count: oov_tokens,
        total_token_count: total_tokens,
        oov_type_count: oov_types.len(),
        total_type_count: types.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleaning::strip_artifacts;
    use crate::corpus::{BinaryLabel, Dataset};
    use proptest::prelude::*;

    fn ds(texts: &[&str]) -> Dataset<BinaryLabel> {
        let entries = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    Document::new(i.to_string(), *t),
                    BinaryLabel::Cyberbullying,
                )
            })
            .collect();
        Dataset::new("toy", entries).unwrap()
    }

    #[test]
    fn tokenize_cases() {
        assert_eq!(tokenize("Hello, World!"), vec!["hello", "world"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("don't stop2"), vec!["don", "t", "stop2"]);
    }

    #[test]
    fn fit_vocabulary_hand_counts() {
        let corpus = ds(&["a b", "b c"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        assert_eq!(vocab.index_of("a"), Some(0));
        assert_eq!(vocab.index_of("b"), Some(1));
        assert_eq!(vocab.index_of("c"), Some(2));
        assert_eq!(vocab.document_frequency["a"], 1);
        assert_eq!(vocab.document_frequency["b"], 2);
        assert_eq!(vocab.document_frequency["c"], 1);

        let vocab2 = fit_vocabulary(&corpus, 2, None).unwrap();
        assert_eq!(vocab2.len(), 1);
        assert_eq!(vocab2.index_of("b"), Some(0));

        assert!(matches!(
            fit_vocabulary(&corpus, 3, None),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn fit_vocabulary_max_features_tie_break() {
        let corpus = ds(&["a b c", "b c d", "c d"]);
        // df: a=1 b=2 c=3 d=2; top-2 by df -> c, then b (lexicographic over the b/d tie).
        let vocab = fit_vocabulary(&corpus, 1, Some(2)).unwrap();
        assert_eq!(vocab.index_of("b"), Some(0));
        assert_eq!(vocab.index_of("c"), Some(1));
        assert_eq!(vocab.index_of("d"), None);
    }

    #[test]
    fn encode_count_cases() {
        let corpus = ds(&["a x", "b c"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let m = encode_count(&ds(&["b b c"]).documents(), &vocab);
        let row = &m.rows[0];
        assert_eq!(row.get(vocab.index_of("b").unwrap()), 2.0);
        assert_eq!(row.get(vocab.index_of("c").unwrap()), 1.0);
        assert_eq!(row.nnz(), 2);

        let oov_only = encode_count(&ds(&["zz qq"]).documents(), &vocab);
        assert_eq!(oov_only.rows[0].nnz(), 0);

        let empty = encode_count(&[], &vocab);
        assert_eq!(empty.n_rows(), 0);
        assert_eq!(empty.n_columns, vocab.len());
    }

    #[test]
    fn encode_count_column_sums_match_corpus_frequency() {
        let corpus = ds(&["a b b", "b c c c", "a a c"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let m = encode_count(&corpus.documents(), &vocab);
        for (term, &idx) in &vocab.term_to_index {
            let col_sum: f64 = m.rows.iter().map(|r| r.get(idx)).sum();
            let brute: usize = corpus
                .entries
                .iter()
                .map(|(d, _)| tokenize(&d.text).iter().filter(|t| *t == term).count())
                .sum();
            assert_eq!(col_sum, brute as f64);
        }
    }

    #[test]
    fn tfidf_single_doc() {
        let corpus = ds(&["a"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let m = encode_tfidf(&corpus.documents(), &vocab);
        assert_eq!(m.rows[0].indices, vec![0]);
        assert!((m.rows[0].values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tfidf_hand_computed_two_docs() {
        let corpus = ds(&["a b", "b"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let m = encode_tfidf(&corpus.documents(), &vocab);
        let row = &m.rows[0];
        // idf(a) = ln(3/2)+1, idf(b) = ln(3/3)+1 = 1; then L2 normalization.
        let idf_a = (3.0f64 / 2.0).ln() + 1.0;
        assert!((idf_a - 1.405465).abs() < 1e-6);
        let norm = (idf_a * idf_a + 1.0).sqrt();
        assert!((row.get(0) - idf_a / norm).abs() < 1e-9);
        assert!((row.get(1) - 1.0 / norm).abs() < 1e-9);
        assert!((row.get(0) - 0.814802).abs() < 1e-6);
        assert!((row.get(1) - 0.579739).abs() < 1e-6);
        assert!((row.l2_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tfidf_rows_unit_norm_or_zero() {
        let corpus = ds(&["a b c", "d e", "a a a f", "g"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let test_docs = ds(&["a b", "zz zz", "c d e f g"]).documents();
        let m = encode_tfidf(&test_docs, &vocab);
        for row in &m.rows {
            let norm = row.l2_norm();
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn oov_cases() {
        let train = ds(&["a b"]);
        let vocab = fit_vocabulary(&train, 1, None).unwrap();

        let subset = ds(&["a b b a"]);
        let r = oov_ratio(&vocab, &subset).unwrap();
        assert_eq!(r.ratio_token_level, 0.0);
        assert_eq!(r.ratio_type_level, 0.0);

        let disjoint = ds(&["x y z"]);
        let r = oov_ratio(&vocab, &disjoint).unwrap();
        assert_eq!(r.ratio_token_level, 1.0);
        assert_eq!(r.ratio_type_level, 1.0);

        let mixed = ds(&["a a c"]);
        let r = oov_ratio(&vocab, &mixed).unwrap();
        assert!((r.ratio_token_level - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.ratio_type_level - 0.5).abs() < 1e-12);

        let empty = ds(&["..."]);
        assert!(matches!(oov_ratio(&vocab, &empty), Err(Error::NoTokens(_))));
    }

    #[test]
    fn oov_zero_on_fitting_corpus() {
        let corpus = ds(&["a b c", "d e f a", "b b g"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let r = oov_ratio(&vocab, &corpus).unwrap();
        assert_eq!(r.ratio_token_level, 0.0);
        assert_eq!(r.ratio_type_level, 0.0);
    }

    #[test]
    fn coo_export_format() {
        let corpus = ds(&["a b b", "c"]);
        let vocab = fit_vocabulary(&corpus, 1, None).unwrap();
        let m = encode_count(&corpus.documents(), &vocab);
        let mut buf = Vec::new();
        m.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("2 3 3 count"));
        assert_eq!(lines.next(), Some("0 0 1"));
        assert_eq!(lines.next(), Some("0 1 2"));
        assert_eq!(lines.next(), Some("1 2 1"));
    }

    #[test]
    fn ngram_terms() {
        let toks: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            ngrams(&toks, (1, 2)),
            vec!["a", "b", "c", "a b", "b c"]
        );
    }

    proptest! {
        #[test]
        fn tokens_of_stripped_text_are_alphanumeric(text in ".{0,80}") {
            for token in tokenize(&strip_artifacts(&text)) {
                prop_assert!(token.chars().all(char::is_alphanumeric));
            }
        }

        #[test]
        fn sparse_rows_sorted_nonzero(texts in proptest::collection::vec("[a-e ]{0,20}", 1..6)) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let corpus = ds(&refs);
            if let Ok(vocab) = fit_vocabulary(&corpus, 1, None) {
                for m in [
                    encode_count(&corpus.documents(), &vocab),
                    encode_tfidf(&corpus.documents(), &vocab),
                ] {
                    for row in &m.rows {
                        prop_assert!(row.indices.windows(2).all(|w| w[0] < w[1]));
                        prop_assert!(row.values.iter().all(|v| *v != 0.0));
                        prop_assert!(row.indices.iter().all(|i| *i < m.n_columns));
                    }
                }
            }
        }
    }
}
