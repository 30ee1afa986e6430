//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)] // each test target uses a different subset

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Config used by the acceptance pipeline runs: synth section omitted so
/// the generator runs with its defaults; compact grid sized for the
/// acceptance runtime budgets.
pub fn acceptance_config_json() -> String {
    r#"{
  "seed": 42,
  "out_dir": "out",
  "datasets": [
    {"name": "synth_a", "path": "out/synth/synth_a.csv", "label_map": {"preset": "binary"}},
    {"name": "synth_b", "path": "out/synth/synth_b.csv", "label_map": {"preset": "binary"}},
    {"name": "synth_c", "path": "out/synth/synth_c.csv", "label_map": {"preset": "binary"}}
  ],
  "cv": {"k": 6, "holdout_fraction": 0.10, "top_n": 5},
  "grid": {
    "learning_rates": [0.1, 0.3],
    "l2_penalties": [0.0, 0.1],
    "max_depths": [3, 6],
    "max_rounds": 120,
    "early_stopping_patience": 8
  },
  "dqe": {
    "dataset": "synth_a",
    "pool_path": "out/synth/pool.csv",
    "per_class_k": 10,
    "global_exclude_k": 10,
    "sample_n": 100
  }
}
"#
    .to_string()
}

/// Small-corpus variant for the CLI end-to-end tests.
pub fn small_config_json() -> String {
    r#"{
  "seed": 7,
  "out_dir": "out",
  "datasets": [
    {"name": "synth_a", "path": "out/synth/synth_a.csv", "label_map": {"preset": "binary"}},
    {"name": "synth_b", "path": "out/synth/synth_b.csv", "label_map": {"preset": "binary"}},
    {"name": "synth_c", "path": "out/synth/synth_c.csv", "label_map": {"preset": "binary"}}
  ],
  "cv": {"k": 6, "holdout_fraction": 0.10, "top_n": 2},
  "grid": {
    "learning_rates": [0.3],
    "l2_penalties": [0.0],
    "max_depths": [3],
    "max_rounds": 40,
    "early_stopping_patience": 5
  },
  "synth": {
    "n_docs": 240,
    "positive_rate": 0.35,
    "doc_len": [8, 20],
    "p_mark": 0.95,
    "q_mark": 0.05,
    "shared_signal_rate": 0.3,
    "shared_noise_rate": 0.05,
    "pool_size": 200,
    "pool_family_rate": 0.15
  },
  "dqe": {
    "dataset": "synth_a",
    "pool_path": "out/synth/pool.csv",
    "per_class_k": 8,
    "global_exclude_k": 10,
    "sample_n": 50
  }
}
"#
    .to_string()
}

pub fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("biasbench.json");
    std::fs::write(&path, json).expect("write config");
    path
}

/// Recursive (relative path -> bytes) snapshot of a directory tree.
pub fn snapshot_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("read_dir") {
            let entry = entry.expect("dir entry");
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    out
}
