//! Data model, CSV ingestion, label harmonization, and stratified
//! partitioning for labeled text datasets.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single text document. `tokens` is filled in by the cleaning stage so
/// downstream encoders do not re-tokenize.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Option<Vec<String>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            tokens: None,
        }
    }
}

/// A label name drawn from a dataset's declared label set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(pub String);

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassLabel {
    fn from(s: &str) -> Self {
        ClassLabel(s.to_string())
    }
}

/// The harmonized binary scheme every dataset is converted into.
/// `Cyberbullying` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    Cyberbullying,
    NotCyberbullying,
}

impl BinaryLabel {
    pub fn is_positive(self) -> bool {
        self == BinaryLabel::Cyberbullying
    }

    pub fn parse(s: &str) -> Option<BinaryLabel> {
        match normalize_label(s).as_str() {
            "cyberbullying" => Some(BinaryLabel::Cyberbullying),
            "not cyberbullying" => Some(BinaryLabel::NotCyberbullying),
            _ => None,
        }
    }
}

impl fmt::Display for BinaryLabel {
    // Stays in sync with the serde snake_case names used in CSV/JSON.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryLabel::Cyberbullying => f.write_str("cyberbullying"),
            BinaryLabel::NotCyberbullying => f.write_str("not_cyberbullying"),
        }
    }
}

/// A named collection of labeled documents. Generic over the label type:
/// raw datasets carry [`ClassLabel`]s, harmonized ones carry
/// [`BinaryLabel`]s. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset<L> {
    pub name: String,
    pub entries: Vec<(Document, L)>,
    pub label_set: BTreeSet<L>,
}

pub type RawDataset = Dataset<ClassLabel>;
pub type BinaryDataset = Dataset<BinaryLabel>;

impl<L: Clone + Ord> Dataset<L> {
    /// Build a dataset, validating id uniqueness and deriving the label set
    /// from the observed labels.
    pub fn new(name: impl Into<String>, entries: Vec<(Document, L)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for (doc, _) in &entries {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        let label_set = entries.iter().map(|(_, l)| l.clone()).collect();
        Ok(Dataset {
            name: name.into(),
            entries,
            label_set,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn documents(&self) -> Vec<Document> {
        self.entries.iter().map(|(d, _)| d.clone()).collect()
    }

    pub fn labels(&self) -> Vec<L> {
        self.entries.iter().map(|(_, l)| l.clone()).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<L, usize> {
        let mut counts = BTreeMap::new();
        for (_, l) in &self.entries {
            *counts.entry(l.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Entry indices grouped by class, classes in sorted label order,
    /// indices in entry order.
    fn class_members(&self) -> BTreeMap<L, Vec<usize>> {
        let mut members: BTreeMap<L, Vec<usize>> = BTreeMap::new();
        for (i, (_, l)) in self.entries.iter().enumerate() {
            members.entry(l.clone()).or_default().push(i);
        }
        members
    }

    /// New dataset containing the entries at `indices`, original order
    /// preserved.
    pub fn subset(&self, indices: &[usize]) -> Dataset<L> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let entries: Vec<_> = sorted.iter().map(|&i| self.entries[i].clone()).collect();
        let label_set = entries.iter().map(|(_, l)| l.clone()).collect();
        Dataset {
            name: self.name.clone(),
            entries,
            label_set,
        }
    }
}

/// Row counts from a CSV load; malformed rows are rejected, not fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_total: usize,
    pub rows_rejected: usize,
}

/// Load a labeled dataset from a CSV file with a header row (RFC-4180
/// quoting). Entry ids are the 0-based data-row ordinals. Rows that are not
/// valid UTF-8 (or are structurally malformed) are rejected and counted.
pub fn load_csv(
    path: impl AsRef<Path>,
    text_column: &str,
    label_column: &str,
) -> Result<(RawDataset, LoadReport)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Config(format!("cannot read {}: {e}", path.display())),
            _ => Error::Csv(e),
        })?;

    let headers = reader.byte_headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name.as_bytes())
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    };
    let text_idx = find(text_column)?;
    let label_idx = find(label_column)?;

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());

    let mut entries = Vec::new();
    let mut rows_total = 0usize;
    let mut rows_rejected = 0usize;
    for (ordinal, record) in reader.byte_records().enumerate() {
        rows_total += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                rows_rejected += 1;
                continue;
            }
        };
        let text = record.get(text_idx).map(std::str::from_utf8);
        let label = record.get(label_idx).map(std::str::from_utf8);
        match (text, label) {
            (Some(Ok(text)), Some(Ok(label))) => {
                entries.push((
                    Document::new(ordinal.to_string(), text),
                    ClassLabel(label.to_string()),
                ));
            }
            _ => rows_rejected += 1,
        }
    }

    if entries.is_empty() {
        return Err(Error::EmptyDataset(path.display().to_string()));
    }
    let dataset = Dataset::new(name, entries)?;
    Ok((
        dataset,
        LoadReport {
            rows_total,
            rows_rejected,
        },
    ))
}

/// Write a binary-labeled dataset as CSV with `id,text,label` columns.
pub fn write_csv(ds: &BinaryDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(["id", "text", "label"])?;
    for (doc, label) in &ds.entries {
        writer.write_record([doc.id.as_str(), doc.text.as_str(), &label.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Load a binary-labeled dataset (e.g. one previously written by the clean
/// stage) directly, without a label map.
pub fn load_binary_csv(
    path: impl AsRef<Path>,
    text_column: &str,
    label_column: &str,
) -> Result<(BinaryDataset, LoadReport)> {
    let (raw, report) = load_csv(path, text_column, label_column)?;
    let ds = apply_label_map(&raw, &LabelMap::preset("binary").expect("builtin preset"))?;
    Ok((ds, report))
}

/// What to do with a source label the map does not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnmappedPolicy {
    /// Fail, naming the label. The default: silent coercion is itself a
    /// labeling bias.
    Error,
    /// Drop entries whose label is unmapped.
    Drop,
}

/// Maps source label names onto the binary scheme. Lookup normalizes case,
/// surrounding whitespace, and underscore/space variants so the presets
/// match the common spellings of their datasets' label names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelMap {
    pub source_scheme: BTreeMap<String, BinaryLabel>,
    /// Catch-all target for labels absent from `source_scheme`
    /// ("all classes except X" style schemes).
    pub fallback: Option<BinaryLabel>,
    pub preset_id: Option<String>,
    pub unmapped: UnmappedPolicy,
}

fn normalize_label(s: &str) -> String {
    s.trim().to_lowercase().replace('_', " ")
}

impl LabelMap {
    pub fn new(mapping: BTreeMap<String, BinaryLabel>, fallback: Option<BinaryLabel>) -> Self {
        let source_scheme = mapping
            .into_iter()
            .map(|(k, v)| (normalize_label(&k), v))
            .collect();
        LabelMap {
            source_scheme,
            fallback,
            preset_id: None,
            unmapped: UnmappedPolicy::Error,
        }
    }

    pub fn with_policy(mut self, unmapped: UnmappedPolicy) -> Self {
        self.unmapped = unmapped;
        self
    }

    /// The three label-conversion schemes used by the source datasets, plus
    /// `binary` for re-ingesting already-harmonized files.
    ///
    /// - `dataset1`: every class except "Not Cyberbullying" → Cyberbullying.
    /// - `dataset2`: "Hate Speech" → Cyberbullying; "Offensive" and
    ///   "Non-Offensive" → NotCyberbullying.
    /// - `dataset3`: "Harassing" → Cyberbullying; "Non-Harassing" →
    ///   NotCyberbullying.
    pub fn preset(id: &str) -> Option<LabelMap> {
        use BinaryLabel::*;
        let m = |pairs: &[(&str, BinaryLabel)], fallback: Option<BinaryLabel>| {
            let mut map = LabelMap::new(
                pairs
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect::<BTreeMap<_, _>>(),
                fallback,
            );
            map.preset_id = Some(id.to_string());
            Some(map)
        };
        match id {
            "dataset1" => m(&[("not cyberbullying", NotCyberbullying)], Some(Cyberbullying)),
            "dataset2" => m(
                &[
                    ("hate speech", Cyberbullying),
                    ("offensive", NotCyberbullying),
                    ("non-offensive", NotCyberbullying),
                    ("non offensive", NotCyberbullying),
                ],
                None,
            ),
            "dataset3" => m(
                &[
                    ("harassing", Cyberbullying),
                    ("non-harassing", NotCyberbullying),
                    ("non harassing", NotCyberbullying),
                ],
                None,
            ),
            "binary" => m(
                &[
                    ("cyberbullying", Cyberbullying),
                    ("not cyberbullying", NotCyberbullying),
                ],
                None,
            ),
            _ => None,
        }
    }

    pub fn lookup(&self, label: &str) -> Option<BinaryLabel> {
        self.source_scheme
            .get(&normalize_label(label))
            .copied()
            .or(self.fallback)
    }
}

/// Convert a raw dataset to the binary scheme. Entry count and ids are
/// preserved under the strict policy; the drop policy removes unmapped
/// entries instead of failing.
pub fn apply_label_map(ds: &RawDataset, map: &LabelMap) -> Result<BinaryDataset> {
    let mut entries = Vec::with_capacity(ds.entries.len());
    for (doc, label) in &ds.entries {
        match map.lookup(&label.0) {
            Some(binary) => entries.push((doc.clone(), binary)),
            None => match map.unmapped {
                UnmappedPolicy::Error => return Err(Error::UnmappedLabel(label.0.clone())),
                UnmappedPolicy::Drop => {}
            },
        }
    }
    Dataset::new(ds.name.clone(), entries)
}

/// Assignment of every entry id to one of `k` folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    /// Entry indices per fold, in entry order within each fold.
    pub fn fold_indices<L>(&self, ds: &Dataset<L>) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (i, (doc, _)) in ds.entries.iter().enumerate() {
            if let Some(&f) = self.assignment.get(&doc.id) {
                folds[f].push(i);
            }
        }
        folds
    }
}

/// Stratified k-fold assignment: per class, members are shuffled and dealt
/// round-robin from a seeded starting fold, so per-fold per-class counts
/// stay within ±1 of exact proportionality.
pub fn stratified_folds<L: Clone + Ord + fmt::Display>(
    ds: &Dataset<L>,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let members = ds.class_members();
    for (label, idxs) in &members {
        if idxs.len() < k {
            return Err(Error::ClassTooSmall {
                class: label.to_string(),
                count: idxs.len(),
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    for (_, idxs) in members {
        let mut idxs = idxs;
        idxs.shuffle(&mut rng);
        let start = rng.gen_range(0..k);
        for (offset, idx) in idxs.into_iter().enumerate() {
            let fold = (start + offset) % k;
            assignment.insert(ds.entries[idx].0.id.clone(), fold);
        }
    }
    Ok(FoldAssignment { k, assignment })
}

// Half-integer targets round down; the 1e-9 snap absorbs f64 noise in
// fraction*n so the rule is exact-rational in effect.
fn round_half_down(x: f64) -> usize {
    (x + 0.5 - 1e-9).floor().max(0.0) as usize
}

/// Stratified holdout split. Returns `(remainder, holdout)`; the holdout
/// size is round(fraction·N), apportioned across classes by largest
/// remainder so each class deviates less than 1 from proportionality.
pub fn holdout_split<L: Clone + Ord + fmt::Display>(
    ds: &Dataset<L>,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset<L>, Dataset<L>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must be in (0,1), got {fraction}"
        )));
    }
    let n = ds.len();
    let target = round_half_down(fraction * n as f64);
    if target == 0 || target >= n {
        return Err(Error::EmptyHoldout { fraction, n });
    }

    let members = ds.class_members();
    // Largest-remainder apportionment of `target` across classes.
    let mut base = Vec::new();
    let mut assigned = 0usize;
    for (label, idxs) in &members {
        let quota = fraction * idxs.len() as f64;
        let floor = (quota + 1e-9).floor() as usize;
        assigned += floor;
        base.push((label.clone(), floor, quota - floor as f64));
    }
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.sort_by(|&a, &b| {
        base[b].2.total_cmp(&base[a].2).then_with(|| base[a].0.cmp(&base[b].0))
    });
    let mut extras = target.saturating_sub(assigned);
    let mut take: BTreeMap<L, usize> = BTreeMap::new();
    for &i in &order {
        let mut h = base[i].1;
        if extras > 0 && h < members[&base[i].0].len() {
            h += 1;
            extras -= 1;
        }
        take.insert(base[i].0.clone(), h);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut holdout_idx = Vec::new();
    for (label, idxs) in &members {
        let mut idxs = idxs.clone();
        idxs.shuffle(&mut rng);
        holdout_idx.extend(idxs.into_iter().take(take[label]));
    }
    let holdout_set: HashSet<usize> = holdout_idx.iter().copied().collect();
    let rest_idx: Vec<usize> = (0..n).filter(|i| !holdout_set.contains(i)).collect();
    if holdout_idx.is_empty() || rest_idx.is_empty() {
        return Err(Error::EmptyHoldout { fraction, n });
    }
    Ok((ds.subset(&rest_idx), ds.subset(&holdout_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(id: usize, text: &str) -> Document {
        Document::new(id.to_string(), text)
    }

    fn binary_ds(n_pos: usize, n_neg: usize) -> BinaryDataset {
        let mut entries = Vec::new();
        for i in 0..n_pos {
            entries.push((doc(i, "pos text"), BinaryLabel::Cyberbullying));
        }
        for i in 0..n_neg {
            entries.push((doc(n_pos + i, "neg text"), BinaryLabel::NotCyberbullying));
        }
        Dataset::new("toy", entries).unwrap()
    }

    #[test]
    fn load_csv_three_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "text,label\nhello there,a\nsecond row,b\nthird row,a").unwrap();
        let (ds, report) = load_csv(f.path(), "text", "label").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(report.rows_rejected, 0);
        let labels: Vec<String> = ds.label_set.iter().map(|l| l.0.clone()).collect();
        assert_eq!(labels, vec!["a", "b"]);
        assert_eq!(ds.entries[0].0.id, "0");
        assert_eq!(ds.entries[2].0.id, "2");
    }

    #[test]
    fn load_csv_rejects_malformed_utf8_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"text,label\nok one,a\n\xff\xfe bad,a\nok two,b\nok three,b\n")
            .unwrap();
        let (ds, report) = load_csv(f.path(), "text", "label").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(report.rows_total, 4);
        assert_eq!(report.rows_rejected, 1);
    }

    #[test]
    fn load_csv_missing_column() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "text,tag\nhello,a").unwrap();
        let err = load_csv(f.path(), "text", "label").unwrap_err();
        assert!(matches!(err, Error::ColumnNotFound(c) if c == "label"));
    }

    #[test]
    fn label_map_dataset2_preset() {
        let map = LabelMap::preset("dataset2").unwrap();
        assert_eq!(map.lookup("Hate Speech"), Some(BinaryLabel::Cyberbullying));
        assert_eq!(map.lookup("Offensive"), Some(BinaryLabel::NotCyberbullying));
        assert_eq!(map.lookup("Non-Offensive"), Some(BinaryLabel::NotCyberbullying));
        assert_eq!(map.lookup("spam"), None);

        let ds = Dataset::new(
            "d2",
            vec![(doc(0, "x"), ClassLabel::from("spam"))],
        )
        .unwrap();
        let err = apply_label_map(&ds, &map).unwrap_err();
        assert!(matches!(err, Error::UnmappedLabel(l) if l == "spam"));
    }

    #[test]
    fn label_map_dataset1_fallback() {
        let map = LabelMap::preset("dataset1").unwrap();
        for raw in ["Age", "Ethnicity", "Gender", "Religion", "Other Cyberbullying"] {
            assert_eq!(map.lookup(raw), Some(BinaryLabel::Cyberbullying), "{raw}");
        }
        assert_eq!(
            map.lookup("Not Cyberbullying"),
            Some(BinaryLabel::NotCyberbullying)
        );
        assert_eq!(
            map.lookup("not_cyberbullying"),
            Some(BinaryLabel::NotCyberbullying)
        );
    }

    #[test]
    fn identity_map_on_binary_dataset() {
        let map = LabelMap::preset("binary").unwrap();
        let raw = Dataset::new(
            "b",
            vec![
                (doc(0, "x"), ClassLabel::from("cyberbullying")),
                (doc(1, "y"), ClassLabel::from("not_cyberbullying")),
            ],
        )
        .unwrap();
        let binary = apply_label_map(&raw, &map).unwrap();
        assert_eq!(binary.len(), 2);
        assert_eq!(binary.entries[0].1, BinaryLabel::Cyberbullying);
        assert_eq!(binary.entries[1].1, BinaryLabel::NotCyberbullying);
    }

    #[test]
    fn apply_label_map_preserves_ids_and_count() {
        let map = LabelMap::preset("dataset1").unwrap();
        let raw = Dataset::new(
            "d1",
            (0..20)
                .map(|i| {
                    let label = if i % 3 == 0 { "Not Cyberbullying" } else { "Age" };
                    (doc(i, "text"), ClassLabel::from(label))
                })
                .collect(),
        )
        .unwrap();
        let binary = apply_label_map(&raw, &map).unwrap();
        assert_eq!(binary.len(), raw.len());
        for (a, b) in raw.entries.iter().zip(binary.entries.iter()) {
            assert_eq!(a.0.id, b.0.id);
        }
    }

    #[test]
    fn stratified_folds_balanced_12() {
        let ds = binary_ds(6, 6);
        let folds = stratified_folds(&ds, 6, 7).unwrap();
        let idxs = folds.fold_indices(&ds);
        for fold in &idxs {
            assert_eq!(fold.len(), 2);
            let pos = fold
                .iter()
                .filter(|&&i| ds.entries[i].1.is_positive())
                .count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn stratified_folds_class_too_small() {
        let ds = binary_ds(10, 2);
        let err = stratified_folds(&ds, 6, 7).unwrap_err();
        assert!(matches!(err, Error::ClassTooSmall { class, .. } if class == "not_cyberbullying"));
    }

    #[test]
    fn stratified_folds_deterministic() {
        let ds = binary_ds(70, 30);
        let a = stratified_folds(&ds, 6, 123).unwrap();
        let b = stratified_folds(&ds, 6, 123).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn fold_partition_and_stratification_properties() {
        // Random sizes/ratios; partition and the ±1 bound must always hold.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..50 {
            let n_pos = rng.gen_range(6..200);
            let n_neg = rng.gen_range(6..200);
            let ds = binary_ds(n_pos, n_neg);
            let k = 6;
            let assignment = stratified_folds(&ds, k, trial).unwrap();
            let folds = assignment.fold_indices(&ds);
            let total: usize = folds.iter().map(Vec::len).sum();
            assert_eq!(total, ds.len());
            let mut seen = HashSet::new();
            for fold in &folds {
                for &i in fold {
                    assert!(seen.insert(i));
                }
            }
            for fold in &folds {
                let pos = fold
                    .iter()
                    .filter(|&&i| ds.entries[i].1.is_positive())
                    .count();
                let neg = fold.len() - pos;
                assert!((pos as f64 - n_pos as f64 / k as f64).abs() < 1.0 + 1e-9);
                assert!((neg as f64 - n_neg as f64 / k as f64).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn holdout_split_100_50_50() {
        let ds = binary_ds(50, 50);
        let (rest, holdout) = holdout_split(&ds, 0.10, 3).unwrap();
        assert_eq!(holdout.len(), 10);
        assert_eq!(rest.len(), 90);
        let pos = holdout
            .entries
            .iter()
            .filter(|(_, l)| l.is_positive())
            .count();
        assert_eq!(pos, 5);
    }

    #[test]
    fn holdout_split_too_small_errors() {
        let ds = binary_ds(4, 1);
        let err = holdout_split(&ds, 0.10, 3).unwrap_err();
        assert!(matches!(err, Error::EmptyHoldout { .. }));
    }

    #[test]
    fn holdout_split_disjoint_union_deterministic() {
        let ds = binary_ds(33, 67);
        let (rest1, hold1) = holdout_split(&ds, 0.2, 9).unwrap();
        let (rest2, hold2) = holdout_split(&ds, 0.2, 9).unwrap();
        let ids = |d: &BinaryDataset| -> Vec<String> {
            d.entries.iter().map(|(doc, _)| doc.id.clone()).collect()
        };
        assert_eq!(ids(&rest1), ids(&rest2));
        assert_eq!(ids(&hold1), ids(&hold2));
        let mut all: Vec<String> = ids(&rest1).into_iter().chain(ids(&hold1)).collect();
        all.sort();
        let mut expected: Vec<String> =
            ds.entries.iter().map(|(doc, _)| doc.id.clone()).collect();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let entries = vec![
            (doc(0, "a"), BinaryLabel::Cyberbullying),
            (doc(0, "b"), BinaryLabel::Cyberbullying),
        ];
        assert!(matches!(
            Dataset::new("dup", entries),
            Err(Error::DuplicateId(_))
        ));
    }
}
