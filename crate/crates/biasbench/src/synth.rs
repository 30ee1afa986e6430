//! Synthetic corpus generation: three datasets whose positive classes are
//! marked by dataset-specific keyword families (A and B disjoint, C mixed),
//! emulating lexicon-driven collection bias at desk scale, plus an
//! unlabeled document pool for expansion experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryDataset, BinaryLabel, Dataset, Document};
use crate::dqe::DocumentPool;
use crate::util::derive_seed;

/// Explicit-language markers of dataset A's positive class.
pub const FAMILY_A: [&str; 10] = [
    "troll", "loser", "idiot", "stupid", "dumb", "jerk", "pathetic", "worthless", "ugly", "freak",
];

/// Markers of dataset B's positive class; disjoint from [`FAMILY_A`].
pub const FAMILY_B: [&str; 10] = [
    "harass", "threat", "abuse", "bully", "creep", "attack", "insult", "mock", "shame", "taunt",
];

/// Mild markers shared by every dataset's positive class; these carry the
/// only signal that transfers across datasets.
pub const SHARED_SIGNAL: [&str; 6] = ["mean", "cruel", "nasty", "toxic", "hostile", "rude"];

/// Neutral filler vocabulary used by all datasets and the pool.
pub const BASE_VOCABULARY: [&str; 120] = [
    "about", "after", "again", "always", "amazing", "another", "anyone", "around", "because",
    "before", "better", "between", "coffee", "could", "day", "dinner", "doing", "down", "dream",
    "early", "enough", "evening", "every", "family", "feeling", "finally", "first", "friend",
    "fun", "game", "getting", "going", "good", "great", "happy", "having", "hello", "helping",
    "home", "hope", "hours", "house", "just", "know", "later", "laugh", "learn", "life", "like",
    "listen", "little", "live", "long", "looking", "love", "lunch", "made", "make", "maybe",
    "money", "morning", "movie", "much", "music", "need", "never", "new", "next", "nice",
    "night", "nothing", "now", "off", "only", "other", "over", "people", "photo", "place",
    "playing", "pretty", "probably", "rain", "read", "ready", "really", "right", "school",
    "see", "should", "sleep", "some", "something", "song", "soon", "start", "still", "story",
    "sunny", "sure", "take", "talk", "team", "thanks", "there", "thing", "think", "time",
    "today", "tomorrow", "tonight", "totally", "want", "watch", "weekend", "well", "when",
    "work", "world", "year",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Documents per generated dataset.
    pub n_docs: usize,
    pub positive_rate: f64,
    /// Inclusive range of neutral body tokens per document.
    pub doc_len: (usize, usize),
    /// Probability a positive document carries its dataset's family terms.
    pub p_mark: f64,
    /// Probability a negative document carries a family term anyway.
    pub q_mark: f64,
    /// Probability a positive document carries a shared mild-signal term.
    pub shared_signal_rate: f64,
    /// Probability a negative document carries a shared term anyway.
    pub shared_noise_rate: f64,
    pub pool_size: usize,
    /// Per family, the probability a pool document contains one of its terms.
    pub pool_family_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 2000,
            positive_rate: 0.35,
            doc_len: (8, 20),
            p_mark: 0.95,
            q_mark: 0.05,
            shared_signal_rate: 0.30,
            shared_noise_rate: 0.05,
            pool_size: 3000,
            pool_family_rate: 0.15,
        }
    }
}

/// Sidecar record of every generative parameter, including the keyword
/// families, so downstream analyses can audit the construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthParams {
    pub schema_version: u32,
    pub seed: u64,
    pub config: SynthConfig,
    pub dataset_names: Vec<String>,
    pub family_a: Vec<String>,
    pub family_b: Vec<String>,
    pub shared_signal: Vec<String>,
    pub base_vocabulary_size: usize,
}

pub struct SynthOutput {
    pub datasets: Vec<BinaryDataset>,
    pub pool: DocumentPool,
    pub params: SynthParams,
}

/// Which family marks a dataset's positives.
enum FamilyMix {
    A,
    B,
    Mixed,
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.gen_range(0..words.len())]
}

fn insert_at_random(rng: &mut ChaCha8Rng, tokens: &mut Vec<String>, term: &str) {
    let at = rng.gen_range(0..=tokens.len());
    tokens.insert(at, term.to_string());
}

fn generate_dataset(
    name: &str,
    mix: FamilyMix,
    config: &SynthConfig,
    seed: u64,
) -> BinaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let positive = rng.gen_bool(config.positive_rate);
        let len = rng.gen_range(config.doc_len.0..=config.doc_len.1);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| pick(&mut rng, &BASE_VOCABULARY).to_string())
            .collect();

        let family: &[&str] = match mix {
            FamilyMix::A => &FAMILY_A,
            FamilyMix::B => &FAMILY_B,
            FamilyMix::Mixed => {
                if rng.gen_bool(0.5) {
                    &FAMILY_A
                } else {
                    &FAMILY_B
                }
            }
        };

        if positive {
            if rng.gen_bool(config.p_mark) {
                let extra = rng.gen_range(2..=3);
                for _ in 0..extra {
                    let term = pick(&mut rng, family);
                    insert_at_random(&mut rng, &mut tokens, term);
                }
            }
            if rng.gen_bool(config.shared_signal_rate) {
                let term = pick(&mut rng, &SHARED_SIGNAL);
                insert_at_random(&mut rng, &mut tokens, term);
            }
        } else {
            if rng.gen_bool(config.q_mark) {
                let term = pick(&mut rng, family);
                insert_at_random(&mut rng, &mut tokens, term);
            }
            if rng.gen_bool(config.shared_noise_rate) {
                let term = pick(&mut rng, &SHARED_SIGNAL);
                insert_at_random(&mut rng, &mut tokens, term);
            }
        }

        let label = if positive {
            BinaryLabel::Cyberbullying
        } else {
            BinaryLabel::NotCyberbullying
        };
        entries.push((Document::new(i.to_string(), tokens.join(" ")), label));
    }
    Dataset::new(name, entries).expect("ordinal ids are unique")
}

fn generate_pool(config: &SynthConfig, seed: u64) -> DocumentPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let documents = (0..config.pool_size)
        .map(|i| {
            let len = rng.gen_range(config.doc_len.0..=config.doc_len.1);
            let mut tokens: Vec<String> = (0..len)
                .map(|_| pick(&mut rng, &BASE_VOCABULARY).to_string())
                .collect();
            if rng.gen_bool(config.pool_family_rate) {
                for _ in 0..rng.gen_range(1..=2) {
                    let term = pick(&mut rng, &FAMILY_A);
                    insert_at_random(&mut rng, &mut tokens, term);
                }
            }
            if rng.gen_bool(config.pool_family_rate) {
                for _ in 0..rng.gen_range(1..=2) {
                    let term = pick(&mut rng, &FAMILY_B);
                    insert_at_random(&mut rng, &mut tokens, term);
                }
            }
            Document::new(format!("pool_{i}"), tokens.join(" "))
        })
        .collect();
    DocumentPool { documents }
}

/// Generate the three datasets and the pool. Deterministic in `seed`.
pub fn generate(config: &SynthConfig, seed: u64) -> SynthOutput {
    let datasets = vec![
        generate_dataset("synth_a", FamilyMix::A, config, derive_seed(seed, 0)),
        generate_dataset("synth_b", FamilyMix::B, config, derive_seed(seed, 1)),
        generate_dataset("synth_c", FamilyMix::Mixed, config, derive_seed(seed, 2)),
    ];
    let pool = generate_pool(config, derive_seed(seed, 3));
    let params = SynthParams {
        schema_version: 1,
        seed,
        config: *config,
        dataset_names: datasets.iter().map(|d| d.name.clone()).collect(),
        family_a: FAMILY_A.iter().map(|s| s.to_string()).collect(),
        family_b: FAMILY_B.iter().map(|s| s.to_string()).collect(),
        shared_signal: SHARED_SIGNAL.iter().map(|s| s.to_string()).collect(),
        base_vocabulary_size: BASE_VOCABULARY.len(),
    };
    SynthOutput {
        datasets,
        pool,
        params,
    }
}
