//! Query-budgeted hard-label adversarial attacks on text classifiers.
//!
//! The attacker sees nothing but predicted class ids and pays one query per
//! prediction out of a fixed budget. Each attack fits a kernel-weighted
//! linear surrogate on masked variants of the input to rank word importance,
//! then beam-searches synonym substitutions at the ranked positions, keeping
//! a similarity-stratified slice of the candidate pool each round. A success
//! is a label flip that stays under the perturbation-rate threshold.
//!
//! Numeric code is generic over the scalar type through [`scalar::Scalar`];
//! `f64` is the default everywhere and the `*32`/`*64` aliases at the crate
//! root pin a precision explicitly.

pub mod config;
pub mod dataset;
pub mod lime;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod remote;
pub mod runner;
pub mod scalar;
pub mod search;
pub mod similarity;
pub mod store;
pub mod text;

pub use config::{AttackConfig, ConfigError, KernelDistance, SurrogateQueryCap};
pub use dataset::{load_dataset, sample_rows, DatasetError};
pub use lime::{
    attackable_positions, cosine_binary, fit_surrogate, kernel_weight, rank_words,
    sample_neighborhood, ImportanceRanking, NeighborhoodSample, RankError, SurrogateFit,
    MASK_TOKEN,
};
pub use metrics::{
    aggregate, attack_success_rate, attack_success_rate_literal, budget_sweep, read_report,
    write_report, Aggregates, MetricsError, ReportFormat, RunReport, SweepError, SweepPoint,
};
pub use oracle::{
    query, train_naive_bayes, HardLabelOracle, LexiconVictim, NaiveBayesVictim, OracleError,
    ProbabilityScorer, QueryLedger, TrainError,
};
pub use remote::{RemoteSimilarity, RemoteVictim};
pub use runner::{derive_attack_seed, run_attacks, SampleOutcome};
pub use scalar::Scalar;
pub use search::{
    attack, check_success, expand, sample_beam, AttackDeps, AttackError, AttackOutcome,
    AttackStatus, BeamState, CheckResult, RankingSource, SamplingRule,
};
pub use similarity::{
    mean_embedding_similarity, MeanEmbeddingSimilarity, SimilarityError, SimilarityProvider,
};
pub use store::{load_vectors, Candidate, CandidateSet, StopWordList, StoreError, VectorStore};
pub use text::{perturbation_rate, tokenize, Label, TextError, TokenSequence};

pub type AttackConfig32 = AttackConfig<f32>;
pub type AttackConfig64 = AttackConfig<f64>;
pub type VectorStore32 = VectorStore<f32>;
pub type VectorStore64 = VectorStore<f64>;
pub type AttackOutcome32 = AttackOutcome<f32>;
pub type AttackOutcome64 = AttackOutcome<f64>;
pub type RunReport32 = RunReport<f32>;
pub type RunReport64 = RunReport<f64>;
