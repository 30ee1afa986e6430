//! Batch pipeline stages behind the CLI subcommands. Each stage reads its
//! prerequisites from the run's output directory and writes deterministic
//! JSON/CSV artifacts there.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cleaning::{clean_dataset, CleaningReport, Wordlist};
use crate::config::RunConfig;
use crate::corpus::{
    apply_label_map, load_binary_csv, load_csv, write_csv, BinaryDataset, BinaryLabel, Dataset,
    Document, LoadReport,
};
use crate::dqe::{class_keywords, expand, contamination_report, DocumentPool, ExpansionResult, KeywordSet};
use crate::evaluate::{
    cross_dataset_eval, cross_validate, select_top, write_experiments_csv, CVResult, CvOptions,
    ExperimentResult, SpecFailure,
};
use crate::model::Family;
use crate::stats::{kendall_tau_b, spearman_rho, CorrelationResult, DQEEstimate};
use crate::synth::{generate, SynthParams};
use crate::vectorize::{fit_vocabulary, oov_ratio, OOVReport, VectorizerOptions};
use crate::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        Error::MissingArtifact(format!("{what} at {} (run the earlier stage first)", path.display()))
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn wordlist(config: &RunConfig) -> Result<Wordlist> {
    match &config.cleaning.wordlist_path {
        Some(path) => Wordlist::from_path(config.resolve(path)),
        None => Ok(Wordlist::builtin()),
    }
}

fn vectorizer_options(config: &RunConfig) -> VectorizerOptions {
    VectorizerOptions {
        min_df: config.vectorizer.min_df,
        max_features: config.vectorizer.max_features,
        ngram_range: config.vectorizer.ngram_range,
    }
}

fn cv_options(config: &RunConfig) -> CvOptions {
    CvOptions {
        k: config.cv.k,
        holdout_fraction: config.cv.holdout_fraction,
        seed: config.seed,
        vectorizer: vectorizer_options(config),
    }
}

fn cleaned_path(config: &RunConfig, name: &str) -> PathBuf {
    config.out_dir().join("clean").join(format!("{name}.csv"))
}

fn load_cleaned(config: &RunConfig, name: &str) -> Result<BinaryDataset> {
    let path = cleaned_path(config, name);
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "cleaned dataset {name} at {} (run `biasbench clean` first)",
            path.display()
        )));
    }
    let (ds, _) = load_binary_csv(&path, "text", "label")?;
    Ok(ds)
}

/// Generate the synthetic corpora and pool into `out/synth/`.
pub fn run_synth(config: &RunConfig) -> Result<()> {
    let out = config.out_dir().join("synth");
    std::fs::create_dir_all(&out)?;
    let output = generate(&config.synth, config.seed);
    for ds in &output.datasets {
        write_csv(ds, out.join(format!("{}.csv", ds.name)))?;
    }
    let mut writer = csv::Writer::from_path(out.join("pool.csv"))?;
    writer.write_record(["id", "text"])?;
    for doc in &output.pool.documents {
        writer.write_record([doc.id.as_str(), doc.text.as_str()])?;
    }
    writer.flush()?;
    let params: &SynthParams = &output.params;
    write_json(&out.join("params.json"), params)?;
    println!(
        "synth: wrote {} datasets x {} docs and a pool of {} to {}",
        output.datasets.len(),
        config.synth.n_docs,
        output.pool.documents.len(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CleanReportFile {
    schema_version: u32,
    dataset: String,
    load: LoadReport,
    cleaning: CleaningReport,
    class_counts: BTreeMap<String, usize>,
}

/// Load each configured dataset, harmonize labels, clean, and write the
/// cleaned CSV plus a count-reconciliation report.
pub fn run_clean(config: &RunConfig) -> Result<()> {
    if config.datasets.is_empty() {
        return Err(Error::Config("no datasets configured".into()));
    }
    let wordlist = wordlist(config)?;
    let out = config.out_dir().join("clean");
    std::fs::create_dir_all(&out)?;

    for ds_config in &config.datasets {
        let path = config.resolve(&ds_config.path);
        let (raw, load) = load_csv(&path, &ds_config.text_column, &ds_config.label_column)?;
        let label_map = ds_config.label_map.build()?;
        let mut binary = apply_label_map(&raw, &label_map)?;
        binary.name = ds_config.name.clone();
        let (cleaned, report) =
            clean_dataset(&binary, &wordlist, config.cleaning.english_threshold)?;
        if cleaned.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "{}: no documents survived cleaning",
                ds_config.name
            )));
        }
        write_csv(&cleaned, out.join(format!("{}.csv", ds_config.name)))?;
        let class_counts = cleaned
            .class_counts()
            .into_iter()
            .map(|(label, count)| (label.to_string(), count))
            .collect();
        write_json(
            &out.join(format!("{}.report.json", ds_config.name)),
            &CleanReportFile {
                schema_version: REPORT_SCHEMA_VERSION,
                dataset: ds_config.name.clone(),
                load,
                cleaning: report.clone(),
                class_counts,
            },
        )?;
        println!(
            "clean: {} -> {} docs ({} non-english, {} emptied)",
            ds_config.name, report.output_count, report.removed_non_english, report.emptied_and_dropped
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CvResultsFile {
    schema_version: u32,
    dataset: String,
    seed: u64,
    k: usize,
    results: Vec<CVResult>,
    failures: Vec<SpecFailure>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopFile {
    schema_version: u32,
    dataset: String,
    top_n: usize,
    per_family: bool,
    underfilled: bool,
    selected: Vec<CVResult>,
}

/// Cross-validate the grid on each cleaned dataset and persist all results
/// plus the selected top models.
pub fn run_cv(config: &RunConfig) -> Result<()> {
    let out = config.out_dir().join("cv");
    std::fs::create_dir_all(&out)?;
    let opts = cv_options(config);
    let grid = config.grid.specs(config.seed);
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }

    for ds_config in &config.datasets {
        let ds = load_cleaned(config, &ds_config.name)?;
        let run = cross_validate(&ds, &grid, &opts)?;

        let (selected, underfilled) = if config.cv.top_per_family {
            let mut families: Vec<Family> = Vec::new();
            for spec in &grid {
                if !families.contains(&spec.family) {
                    families.push(spec.family);
                }
            }
            let mut all = Vec::new();
            let mut any_underfilled = false;
            for family in families {
                let top = select_top(&run.results, config.cv.top_n, Some(family))?;
                any_underfilled |= top.underfilled;
                all.extend(top.selected);
            }
            (all, any_underfilled)
        } else {
            let top = select_top(&run.results, config.cv.top_n, None)?;
            (top.selected, top.underfilled)
        };

        write_json(
            &out.join(format!("{}.results.json", ds_config.name)),
            &CvResultsFile {
                schema_version: REPORT_SCHEMA_VERSION,
                dataset: ds_config.name.clone(),
                seed: config.seed,
                k: opts.k,
                results: run.results.clone(),
                failures: run.failures.clone(),
            },
        )?;
        write_json(
            &out.join(format!("{}.top.json", ds_config.name)),
            &TopFile {
                schema_version: REPORT_SCHEMA_VERSION,
                dataset: ds_config.name.clone(),
                top_n: config.cv.top_n,
                per_family: config.cv.top_per_family,
                underfilled,
                selected: selected.clone(),
            },
        )?;
        let best = selected
            .first()
            .map(|r| r.mean_f1_macro)
            .unwrap_or(f64::NAN);
        println!(
            "cv: {} -> {} results, {} failures, best mean macro F1 {best:.4}",
            ds_config.name,
            run.results.len(),
            run.failures.len()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentSummaryRow {
    experiment_id: usize,
    train_set: String,
    test_set: String,
    avg_drop_f1_macro: f64,
    avg_drop_f1_weighted: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentsFile {
    schema_version: u32,
    experiments: Vec<ExperimentResult>,
    summary: Vec<ExperimentSummaryRow>,
}

/// Run every ordered dataset pair: train on x's top models, test on y.
pub fn run_cross_eval(config: &RunConfig) -> Result<()> {
    if config.datasets.len() < 2 {
        return Err(Error::Config(
            "cross-dataset evaluation needs at least two datasets".into(),
        ));
    }
    let out = config.out_dir().join("cross_eval");
    std::fs::create_dir_all(&out)?;
    let opts = cv_options(config);

    let mut datasets = Vec::new();
    let mut tops: Vec<Vec<CVResult>> = Vec::new();
    for ds_config in &config.datasets {
        datasets.push(load_cleaned(config, &ds_config.name)?);
        let top_path = config
            .out_dir()
            .join("cv")
            .join(format!("{}.top.json", ds_config.name));
        let top: TopFile = read_json(
            &top_path,
            &format!("cv top-model output for dataset {}", ds_config.name),
        )?;
        if top.selected.is_empty() {
            return Err(Error::MissingArtifact(format!(
                "no selected models for dataset {}",
                ds_config.name
            )));
        }
        tops.push(top.selected);
    }

    let mut experiments = Vec::new();
    let mut experiment_id = 0;
    for (i, train) in datasets.iter().enumerate() {
        for (j, test) in datasets.iter().enumerate() {
            if i == j {
                continue;
            }
            experiment_id += 1;
            let result = cross_dataset_eval(experiment_id, train, test, &tops[i], &opts)?;
            println!(
                "cross-eval: exp {} {} -> {}: avg drop macro {:.4}, weighted {:.4}",
                experiment_id,
                result.train_set,
                result.test_set,
                result.avg_drop_f1_macro,
                result.avg_drop_f1_weighted
            );
            experiments.push(result);
        }
    }

    let summary = experiments
        .iter()
        .map(|e| ExperimentSummaryRow {
            experiment_id: e.experiment_id,
            train_set: e.train_set.clone(),
            test_set: e.test_set.clone(),
            avg_drop_f1_macro: e.avg_drop_f1_macro,
            avg_drop_f1_weighted: e.avg_drop_f1_weighted,
        })
        .collect();
    write_json(
        &out.join("experiments.json"),
        &ExperimentsFile {
            schema_version: REPORT_SCHEMA_VERSION,
            experiments: experiments.clone(),
            summary,
        },
    )?;
    let mut csv_bytes = Vec::new();
    write_experiments_csv(&experiments, &mut csv_bytes)?;
    std::fs::write(out.join("experiments.csv"), csv_bytes)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PairOov {
    train_set: String,
    test_set: String,
    report: OOVReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct CorrelationOutcome {
    method: String,
    target: String,
    result: Option<CorrelationResult>,
    error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OverlapEntry {
    dataset_a: String,
    dataset_b: String,
    shared_texts: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalysisReport {
    schema_version: u32,
    /// OOV level feeding the correlation tests; type-level is also reported
    /// per pair.
    oov_level_used: String,
    summary: Vec<ExperimentSummaryRow>,
    oov: Vec<PairOov>,
    correlations: Vec<CorrelationOutcome>,
    overall_avg_drop_f1_macro: f64,
    overall_avg_drop_f1_weighted: f64,
    models_analyzed: usize,
    excluded_failures: usize,
    duplicate_overlap: Vec<OverlapEntry>,
    dqe_estimate: Option<DQEEstimate>,
}

fn correlation_outcome(
    method: &str,
    target: &str,
    x: &[f64],
    y: &[f64],
) -> CorrelationOutcome {
    let result = match method {
        "kendall_tau_b" => kendall_tau_b(x, y),
        _ => spearman_rho(x, y),
    };
    match result {
        Ok(r) => CorrelationOutcome {
            method: method.into(),
            target: target.into(),
            result: Some(r),
            error: None,
        },
        Err(e) => CorrelationOutcome {
            method: method.into(),
            target: target.into(),
            result: None,
            error: Some(e.to_string()),
        },
    }
}

fn write_drop_plot_csv(
    path: &Path,
    experiments: &[ExperimentResult],
    macro_level: bool,
    overall_mean: f64,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "experiment_id",
        "train_set",
        "test_set",
        "model_rank",
        "family",
        "vectorizer",
        "drop",
        "experiment_mean_drop",
        "overall_mean_drop",
    ])?;
    for exp in experiments {
        let exp_mean = if macro_level {
            exp.avg_drop_f1_macro
        } else {
            exp.avg_drop_f1_weighted
        };
        for (rank, m) in exp.per_model.iter().enumerate() {
            let value = if macro_level {
                m.drop_f1_macro
            } else {
                m.drop_f1_weighted
            };
            writer.write_record([
                exp.experiment_id.to_string(),
                exp.train_set.clone(),
                exp.test_set.clone(),
                rank.to_string(),
                m.spec.family.to_string(),
                m.spec.vectorizer.to_string(),
                value.to_string(),
                exp_mean.to_string(),
                overall_mean.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Pair each model's drop with its experiment's OOV ratio, run both rank
/// correlations for both drop variants, and emit the plot data behind the
/// per-experiment drop charts.
pub fn run_analyze(config: &RunConfig) -> Result<()> {
    let out = config.out_dir().join("analyze");
    std::fs::create_dir_all(&out)?;
    let experiments_path = config.out_dir().join("cross_eval").join("experiments.json");
    let experiments_file: ExperimentsFile =
        read_json(&experiments_path, "cross-eval experiments output")?;
    let experiments = experiments_file.experiments;

    let mut cleaned: BTreeMap<String, BinaryDataset> = BTreeMap::new();
    for ds_config in &config.datasets {
        cleaned.insert(ds_config.name.clone(), load_cleaned(config, &ds_config.name)?);
    }

    // Token-level OOV ratio per ordered experiment pair, from a unigram
    // vocabulary fitted on the full cleaned training dataset.
    let mut oov_reports = Vec::new();
    let mut pair_ratio: BTreeMap<(String, String), f64> = BTreeMap::new();
    for exp in &experiments {
        let key = (exp.train_set.clone(), exp.test_set.clone());
        if pair_ratio.contains_key(&key) {
            continue;
        }
        let train = cleaned.get(&exp.train_set).ok_or_else(|| {
            Error::Config(format!("experiment references unknown dataset {}", exp.train_set))
        })?;
        let test = cleaned.get(&exp.test_set).ok_or_else(|| {
            Error::Config(format!("experiment references unknown dataset {}", exp.test_set))
        })?;
        let vocab = fit_vocabulary(train, 1, None)?;
        let report = oov_ratio(&vocab, test)?;
        pair_ratio.insert(key.clone(), report.ratio_token_level);
        oov_reports.push(PairOov {
            train_set: exp.train_set.clone(),
            test_set: exp.test_set.clone(),
            report,
        });
    }

    let mut r_values = Vec::new();
    let mut drops_macro = Vec::new();
    let mut drops_weighted = Vec::new();
    let mut excluded_failures = 0usize;
    for exp in &experiments {
        let r = pair_ratio[&(exp.train_set.clone(), exp.test_set.clone())];
        excluded_failures += exp.failures.len();
        for m in &exp.per_model {
            r_values.push(r);
            drops_macro.push(m.drop_f1_macro);
            drops_weighted.push(m.drop_f1_weighted);
        }
    }

    let correlations = vec![
        correlation_outcome("kendall_tau_b", "drop_f1_macro", &r_values, &drops_macro),
        correlation_outcome("spearman", "drop_f1_macro", &r_values, &drops_macro),
        correlation_outcome("kendall_tau_b", "drop_f1_weighted", &r_values, &drops_weighted),
        correlation_outcome("spearman", "drop_f1_weighted", &r_values, &drops_weighted),
    ];

    let n_models = drops_macro.len().max(1) as f64;
    let overall_avg_drop_f1_macro = drops_macro.iter().sum::<f64>() / n_models;
    let overall_avg_drop_f1_weighted = drops_weighted.iter().sum::<f64>() / n_models;

    // Exact-duplicate cleaned-text overlap between dataset pairs.
    let mut duplicate_overlap = Vec::new();
    let names: Vec<&String> = cleaned.keys().collect();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let texts_a: HashSet<&str> = cleaned[names[i]]
                .entries
                .iter()
                .map(|(d, _)| d.text.as_str())
                .collect();
            let shared = cleaned[names[j]]
                .entries
                .iter()
                .map(|(d, _)| d.text.as_str())
                .collect::<HashSet<_>>()
                .intersection(&texts_a)
                .count();
            duplicate_overlap.push(OverlapEntry {
                dataset_a: names[i].clone(),
                dataset_b: names[j].clone(),
                shared_texts: shared,
            });
        }
    }

    let dqe_estimate = config
        .dqe
        .dataset
        .clone()
        .or_else(|| config.datasets.first().map(|d| d.name.clone()))
        .and_then(|name| {
            let path = config.out_dir().join("dqe").join(format!("{name}.estimate.json"));
            read_json::<DqeReportFile>(&path, "dqe estimate").ok()
        })
        .map(|file| file.estimate);

    write_drop_plot_csv(
        &out.join("drop_f1_macro.csv"),
        &experiments,
        true,
        overall_avg_drop_f1_macro,
    )?;
    write_drop_plot_csv(
        &out.join("drop_f1_weighted.csv"),
        &experiments,
        false,
        overall_avg_drop_f1_weighted,
    )?;

    let report = AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        oov_level_used: "token".into(),
        summary: experiments
            .iter()
            .map(|e| ExperimentSummaryRow {
                experiment_id: e.experiment_id,
                train_set: e.train_set.clone(),
                test_set: e.test_set.clone(),
                avg_drop_f1_macro: e.avg_drop_f1_macro,
                avg_drop_f1_weighted: e.avg_drop_f1_weighted,
            })
            .collect(),
        oov: oov_reports,
        correlations,
        overall_avg_drop_f1_macro,
        overall_avg_drop_f1_weighted,
        models_analyzed: drops_macro.len(),
        excluded_failures,
        duplicate_overlap,
        dqe_estimate,
    };
    write_json(&out.join("analysis.json"), &report)?;
    println!(
        "analyze: {} models over {} experiments, overall avg macro drop {:.4}",
        report.models_analyzed,
        report.summary.len(),
        overall_avg_drop_f1_macro
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct DqeReportFile {
    schema_version: u32,
    dataset: String,
    pool_size: usize,
    added: usize,
    skipped_ambiguous: usize,
    skipped_no_match: usize,
    iterations: usize,
    keyword_sets: Vec<KeywordSet<BinaryLabel>>,
    estimate: DQEEstimate,
}

/// Run the expansion simulator on one cleaned dataset against a document
/// pool, write the auto-labeled additions, and estimate the contamination
/// a sample would carry.
pub fn run_dqe(config: &RunConfig) -> Result<()> {
    let out = config.out_dir().join("dqe");
    std::fs::create_dir_all(&out)?;
    let name = config
        .dqe
        .dataset
        .clone()
        .or_else(|| config.datasets.first().map(|d| d.name.clone()))
        .ok_or_else(|| Error::Config("no dataset configured for dqe".into()))?;
    config.dataset(&name)?;
    let original = load_cleaned(config, &name)?;

    let pool_path = config
        .dqe
        .pool_path
        .as_ref()
        .ok_or_else(|| Error::Config("dqe.pool_path not configured".into()))?;
    let pool = DocumentPool::load_csv(config.resolve(pool_path), &config.dqe.pool_text_column)?;

    let mut added: Vec<(Document, BinaryLabel, Vec<String>)> = Vec::new();
    let mut skipped_ambiguous = 0;
    let mut skipped_no_match = 0;
    let mut keyword_sets: Vec<KeywordSet<BinaryLabel>> = Vec::new();
    let mut remaining = pool.documents.clone();
    for _ in 0..config.dqe.iterations.max(1) {
        let mut entries = original.entries.clone();
        entries.extend(added.iter().map(|(d, l, _)| (d.clone(), *l)));
        let seeded = Dataset::new(original.name.clone(), entries)?;
        keyword_sets = class_keywords(&seeded, config.dqe.per_class_k, config.dqe.global_exclude_k)?;
        let pass = expand(&keyword_sets, &DocumentPool { documents: remaining.clone() })?;
        skipped_ambiguous = pass.skipped_ambiguous;
        skipped_no_match = pass.skipped_no_match;
        if pass.added.is_empty() {
            break;
        }
        let added_ids: HashSet<String> =
            pass.added.iter().map(|(d, _, _)| d.id.clone()).collect();
        remaining.retain(|d| !added_ids.contains(&d.id));
        added.extend(pass.added);
    }

    // The last pass scanned every never-added document, so its skip counts
    // are the final disposition of the pool.
    let expansion = ExpansionResult {
        added: added.clone(),
        skipped_ambiguous,
        skipped_no_match,
    };
    let estimate = contamination_report(&original, &expansion, config.dqe.sample_n)?;
    let total_expected = estimate.total_expected;

    let expanded_path = out.join(format!("{name}.expanded.csv"));
    let mut writer = csv::Writer::from_path(&expanded_path)?;
    writer.write_record(["id", "text", "label", "matched_keywords"])?;
    for (doc, label, matched) in &added {
        writer.write_record([
            doc.id.as_str(),
            doc.text.as_str(),
            &label.to_string(),
            &matched.join(";"),
        ])?;
    }
    writer.flush()?;

    write_json(
        &out.join(format!("{name}.estimate.json")),
        &DqeReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            dataset: name.clone(),
            pool_size: pool.documents.len(),
            added: added.len(),
            skipped_ambiguous,
            skipped_no_match,
            iterations: config.dqe.iterations.max(1),
            keyword_sets,
            estimate,
        },
    )?;
    println!(
        "dqe: {name} +{} docs ({} ambiguous, {} unmatched), expected contamination {:.2}",
        added.len(),
        skipped_ambiguous,
        skipped_no_match,
        total_expected
    );
    Ok(())
}
