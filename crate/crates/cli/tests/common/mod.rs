//! Synthetic review-attack task shared by the integration tests.
//!
//! The vocabulary is built from planar word clusters: every cluster occupies
//! its own pair of axes, so within-cluster cosines follow the chosen angles
//! exactly and cross-cluster cosines are zero. Each keyword cluster carries
//! three kinds of neighbors around a victim-known keyword:
//!
//! * traps: closest neighbors the victim also knows, so substituting them
//!   never flips the label;
//! * goods: slightly farther neighbors the victim does not know, the only
//!   substitutions that flip;
//! * junk: victim-known words at low cosine, padding the bottom of the
//!   candidate list.
//!
//! Rows come in two shapes: 12 tokens with one keyword (one substitution
//! within the perturbation ceiling) and 21 tokens with two keywords (flipping
//! takes two substitutions, which forces the beam to carry an intermediate
//! state across rounds).

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use wordflip::text::Label;
use wordflip::{
    AttackConfig, LexiconVictim, StopWordList, SurrogateQueryCap, TokenSequence, VectorStore,
};

pub struct KeywordCluster {
    pub keyword: &'static str,
    pub traps: [&'static str; 5],
    pub goods: [&'static str; 4],
    pub junk: [&'static str; 8],
}

pub const KEYWORD_CLUSTERS: [KeywordCluster; 8] = [
    KeywordCluster {
        keyword: "dreadful",
        traps: ["awful", "terrible", "appalling", "frightful", "ghastly"],
        goods: ["unpleasant", "distressing", "alarming", "upsetting"],
        junk: [
            "catastrophe",
            "disaster",
            "calamity",
            "debacle",
            "fiasco",
            "travesty",
            "mess",
            "wreck",
        ],
    },
    KeywordCluster {
        keyword: "atrocious",
        traps: [
            "heinous",
            "monstrous",
            "egregious",
            "deplorable",
            "abominable",
        ],
        goods: ["offensive", "shameful", "disgraceful", "scandalous"],
        junk: [
            "outrage", "insult", "affront", "disgrace", "scandal", "abuse", "crime", "offense",
        ],
    },
    KeywordCluster {
        keyword: "abysmal",
        traps: ["wretched", "miserable", "lamentable", "pitiful", "pathetic"],
        goods: ["inadequate", "deficient", "substandard", "underwhelming"],
        junk: [
            "failure", "flop", "dud", "bust", "letdown", "misfire", "bomb", "washout",
        ],
    },
    KeywordCluster {
        keyword: "horrid",
        traps: ["hideous", "horrendous", "horrifying", "gruesome", "grisly"],
        goods: ["unsightly", "repulsive", "revolting", "sickening"],
        junk: [
            "monster",
            "beast",
            "fright",
            "terror",
            "menace",
            "nightmare",
            "ghoul",
            "specter",
        ],
    },
    KeywordCluster {
        keyword: "woeful",
        traps: ["sorrowful", "mournful", "grievous", "anguished", "doleful"],
        goods: ["unhappy", "saddening", "dispiriting", "disheartening"],
        junk: [
            "misery",
            "sorrow",
            "grief",
            "despair",
            "anguish",
            "gloom",
            "woe",
            "heartache",
        ],
    },
    KeywordCluster {
        keyword: "dismal",
        traps: ["bleak", "dreary", "gloomy", "somber", "cheerless"],
        goods: ["joyless", "lifeless", "colorless", "uninviting"],
        junk: [
            "fog", "murk", "shadow", "drizzle", "slush", "sludge", "smog", "haze",
        ],
    },
    KeywordCluster {
        keyword: "lousy",
        traps: ["crummy", "shoddy", "sloppy", "slipshod", "shabby"],
        goods: ["careless", "clumsy", "amateurish", "slapdash"],
        junk: [
            "junk", "trash", "garbage", "rubbish", "refuse", "litter", "debris", "scrap",
        ],
    },
    KeywordCluster {
        keyword: "rotten",
        traps: ["putrid", "rancid", "fetid", "moldy", "spoiled"],
        goods: ["stale", "sour", "curdled", "decayed"],
        junk: [
            "decay", "rot", "mold", "rust", "grime", "filth", "muck", "slime",
        ],
    },
];

pub const DECOY_CLUSTERS: [[&str; 17]; 8] = [
    [
        "film",
        "movie",
        "picture",
        "flick",
        "feature",
        "cinema",
        "screen",
        "reel",
        "footage",
        "sequel",
        "trilogy",
        "production",
        "documentary",
        "biopic",
        "remake",
        "adaptation",
        "release",
    ],
    [
        "plot",
        "story",
        "narrative",
        "script",
        "screenplay",
        "premise",
        "storyline",
        "subplot",
        "twist",
        "pacing",
        "structure",
        "outline",
        "synopsis",
        "setup",
        "arc",
        "denouement",
        "payoff",
    ],
    [
        "acting",
        "actor",
        "actress",
        "cast",
        "performer",
        "ensemble",
        "portrayal",
        "performance",
        "presence",
        "charisma",
        "range",
        "chemistry",
        "timing",
        "expression",
        "gesture",
        "diction",
        "delivery",
    ],
    [
        "music",
        "score",
        "soundtrack",
        "melody",
        "theme",
        "motif",
        "orchestration",
        "rhythm",
        "harmony",
        "tune",
        "composition",
        "arrangement",
        "refrain",
        "crescendo",
        "tempo",
        "chord",
        "percussion",
    ],
    [
        "director",
        "filmmaker",
        "auteur",
        "producer",
        "editor",
        "cinematographer",
        "writer",
        "creator",
        "visionary",
        "craftsman",
        "storyteller",
        "technician",
        "planner",
        "supervisor",
        "veteran",
        "apprentice",
        "mentor",
    ],
    [
        "audience",
        "crowd",
        "viewers",
        "patrons",
        "public",
        "spectators",
        "fans",
        "moviegoers",
        "attendees",
        "watchers",
        "critics",
        "reviewers",
        "commentators",
        "journalists",
        "press",
        "pundits",
        "bloggers",
    ],
    [
        "theater",
        "venue",
        "hall",
        "auditorium",
        "multiplex",
        "screening",
        "matinee",
        "premiere",
        "showing",
        "lobby",
        "balcony",
        "aisle",
        "seat",
        "row",
        "projector",
        "curtain",
        "stage",
    ],
    [
        "dialogue",
        "lines",
        "banter",
        "exchange",
        "conversation",
        "monologue",
        "voiceover",
        "narration",
        "quip",
        "retort",
        "remark",
        "speech",
        "phrasing",
        "wording",
        "subtext",
        "cadence",
        "inflection",
    ],
];

/// Filler drawn from the bundled stop list, so these positions are never
/// attackable.
pub const GLUE: [&str; 10] = [
    "the", "a", "and", "of", "to", "in", "was", "it", "this", "that",
];

const TRAP_ANGLES: [f64; 5] = [10.0, 12.0, 14.0, 16.0, 18.0];
const GOOD_ANGLES: [f64; 4] = [24.0, 27.0, 30.0, 33.0];
const JUNK_ANGLES: [f64; 8] = [58.0, 61.0, 64.0, 67.0, 70.0, 73.0, 76.0, 79.0];

pub struct ToyTask {
    pub store: VectorStore<f64>,
    pub victim: LexiconVictim,
    pub stops: StopWordList,
    pub rows: Vec<(TokenSequence, Label)>,
}

fn planar(dim: usize, plane: usize, degrees: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let theta = degrees * PI / 180.0;
    v[2 * plane] = theta.cos();
    v[2 * plane + 1] = theta.sin();
    v
}

/// All cluster vectors, one plane per cluster.
pub fn toy_store() -> VectorStore<f64> {
    let planes = KEYWORD_CLUSTERS.len() + DECOY_CLUSTERS.len();
    let dim = 2 * planes;
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |word: &str, vector: Vec<f64>, seen: &mut HashSet<String>| {
        assert!(seen.insert(word.to_string()), "duplicate toy word: {word}");
        entries.push((word.to_string(), vector));
    };
    for (plane, cluster) in KEYWORD_CLUSTERS.iter().enumerate() {
        push(cluster.keyword, planar(dim, plane, 0.0), &mut seen);
        for (word, angle) in cluster.traps.iter().zip(TRAP_ANGLES) {
            push(word, planar(dim, plane, angle), &mut seen);
        }
        for (word, angle) in cluster.goods.iter().zip(GOOD_ANGLES) {
            push(word, planar(dim, plane, angle), &mut seen);
        }
        for (word, angle) in cluster.junk.iter().zip(JUNK_ANGLES) {
            push(word, planar(dim, plane, angle), &mut seen);
        }
    }
    for (offset, cluster) in DECOY_CLUSTERS.iter().enumerate() {
        let plane = KEYWORD_CLUSTERS.len() + offset;
        for (i, word) in cluster.iter().enumerate() {
            push(word, planar(dim, plane, 2.0 * i as f64 + 8.0), &mut seen);
        }
    }
    VectorStore::from_entries(entries)
}

/// The victim knows keywords, traps, and junk at weight -1; goods and decoys
/// score nothing. Any sentence holding a known word lands in class 0.
pub fn toy_victim() -> LexiconVictim {
    let mut weights = BTreeMap::new();
    for cluster in &KEYWORD_CLUSTERS {
        weights.insert(cluster.keyword.to_string(), -1.0);
        for word in cluster.traps.iter().chain(cluster.junk.iter()) {
            weights.insert(word.to_string(), -1.0);
        }
    }
    LexiconVictim::new(weights, -0.5)
}

fn pick<'a, R: Rng>(rng: &mut R, words: &'a [&'a str]) -> &'a str {
    words[rng.gen_range(0..words.len())]
}

/// A 12-token row with one keyword: eight decoys (one per decoy cluster),
/// three glue words, shuffled.
fn one_keyword_row<R: Rng>(rng: &mut R) -> TokenSequence {
    let cluster = &KEYWORD_CLUSTERS[rng.gen_range(0..KEYWORD_CLUSTERS.len())];
    let mut tokens: Vec<String> = vec![cluster.keyword.to_string()];
    for decoys in &DECOY_CLUSTERS {
        tokens.push(pick(rng, decoys).to_string());
    }
    for _ in 0..3 {
        tokens.push(pick(rng, &GLUE).to_string());
    }
    tokens.shuffle(rng);
    TokenSequence::new(tokens).expect("non-empty row")
}

/// A 21-token row with two keywords from distinct clusters. Six decoys from
/// distinct clusters keep the attackable count low enough for the surrogate
/// to spot both keywords; glue fills the rest, and the length leaves room for
/// exactly two substitutions under the 0.10 ceiling.
fn two_keyword_row<R: Rng>(rng: &mut R) -> TokenSequence {
    let first = rng.gen_range(0..KEYWORD_CLUSTERS.len());
    let second = (first + rng.gen_range(1..KEYWORD_CLUSTERS.len())) % KEYWORD_CLUSTERS.len();
    let mut tokens: Vec<String> = vec![
        KEYWORD_CLUSTERS[first].keyword.to_string(),
        KEYWORD_CLUSTERS[second].keyword.to_string(),
    ];
    let mut clusters: Vec<&[&str; 17]> = DECOY_CLUSTERS.iter().collect();
    clusters.shuffle(rng);
    for decoys in clusters.into_iter().take(6) {
        tokens.push(pick(rng, decoys.as_slice()).to_string());
    }
    for _ in 0..13 {
        tokens.push(pick(rng, &GLUE).to_string());
    }
    tokens.shuffle(rng);
    TokenSequence::new(tokens).expect("non-empty row")
}

/// A 12-token row without any keyword: one decoy per cluster plus glue. The
/// victim knows none of these words, so it reads the row as class 1, and no
/// substitution can push it back.
pub fn decoy_only_row<R: Rng>(rng: &mut R) -> TokenSequence {
    let mut tokens: Vec<String> = DECOY_CLUSTERS
        .iter()
        .map(|decoys| pick(rng, decoys).to_string())
        .collect();
    for _ in 0..4 {
        tokens.push(pick(rng, &GLUE).to_string());
    }
    tokens.shuffle(rng);
    TokenSequence::new(tokens).expect("non-empty row")
}

impl ToyTask {
    /// Builds the task deterministically: `one_kw` single-keyword rows and
    /// `two_kw` double-keyword rows, interleaved by the seeded shuffle.
    pub fn generate(seed: u64, one_kw: usize, two_kw: usize) -> Self {
        let store = toy_store();
        let victim = toy_victim();
        let stops = StopWordList::default();
        for word in GLUE {
            assert!(stops.contains(word), "glue word {word} is not a stop word");
        }

        let mut rng = StdRng::seed_from_u64(seed);
        let mut rows: Vec<(TokenSequence, Label)> = Vec::with_capacity(one_kw + two_kw);
        for _ in 0..one_kw {
            rows.push((one_keyword_row(&mut rng), Label::new(0)));
        }
        for _ in 0..two_kw {
            rows.push((two_keyword_row(&mut rng), Label::new(0)));
        }
        rows.shuffle(&mut rng);

        use wordflip::HardLabelOracle;
        for (text, label) in &rows {
            let predicted = victim.predict(text).expect("lexicon victim never fails");
            assert!(
                predicted.same_class(label),
                "toy row must be classified correctly: {}",
                text.text()
            );
        }

        ToyTask {
            store,
            victim,
            stops,
            rows,
        }
    }

    /// Attack settings the toy geometry was shaped around: narrow beam,
    /// candidate lists capped to one cluster.
    pub fn config(&self, budget: u64, seed: u64) -> AttackConfig<f64> {
        AttackConfig::<f64> {
            query_budget: budget,
            beam_size: 6,
            synonym_k: 16,
            seed,
            ..AttackConfig::default()
        }
    }

    pub fn config_with_cap(&self, budget: u64, seed: u64, cap: u64) -> AttackConfig<f64> {
        AttackConfig::<f64> {
            surrogate_query_cap: SurrogateQueryCap::Fixed(cap),
            ..self.config(budget, seed)
        }
    }

    /// Writes the task as the three files the binary consumes; returns
    /// (dataset, vectors, lexicon) paths.
    pub fn write_files(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let dataset = dir.join("toy_reviews.tsv");
        let vectors = dir.join("toy_vectors.txt");
        let lexicon = dir.join("toy_lexicon.json");

        let mut tsv = String::new();
        for (text, label) in &self.rows {
            tsv.push_str(&format!("{}\t{}\n", label.id, text.text()));
        }
        std::fs::write(&dataset, tsv).expect("write dataset");

        self.store.save(&vectors).expect("write vectors");

        let model = serde_json::to_string_pretty(&self.victim).expect("serialize victim");
        std::fs::write(&lexicon, model + "\n").expect("write lexicon");

        (dataset, vectors, lexicon)
    }
}
