//! Hard-label victim models and per-attack query accounting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{Label, TokenSequence};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("server returned status {0}")]
    ServerError(u16),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("degenerate corpus: class {0} has no documents")]
    DegenerateCorpus(usize),
}

/// Counts oracle queries for one attack and enforces the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLedger {
    budget: u64,
    used: u64,
}

impl QueryLedger {
    pub fn new(budget: u64) -> Self {
        QueryLedger { budget, used: 0 }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    /// Charges one query, or fails once the budget is spent.
    pub fn record(&mut self) -> Result<(), OracleError> {
        if self.used == self.budget {
            return Err(OracleError::BudgetExhausted);
        }
        self.used += 1;
        Ok(())
    }
}

/// A classifier that reveals nothing but its predicted label.
///
/// Implementations must be safe to share across attack threads; any
/// per-attack state lives in the caller's `QueryLedger`.
pub trait HardLabelOracle: Send + Sync {
    fn num_classes(&self) -> usize;

    /// One prediction, without budget accounting.
    fn predict(&self, text: &TokenSequence) -> Result<Label, OracleError>;

    /// One prediction charged against `ledger`. Remote victims override this
    /// to charge every attempt that reached the server.
    fn predict_metered(
        &self,
        text: &TokenSequence,
        ledger: &mut QueryLedger,
    ) -> Result<Label, OracleError> {
        ledger.record()?;
        self.predict(text)
    }

    /// Class-probability access for score-based baselines, when the victim
    /// can provide it. Hard-label-only victims return `None`.
    fn probability_scorer(&self) -> Option<&dyn ProbabilityScorer> {
        None
    }
}

/// Queries the oracle through the ledger; the sole entry point attacks use.
pub fn query(
    oracle: &dyn HardLabelOracle,
    ledger: &mut QueryLedger,
    text: &TokenSequence,
) -> Result<Label, OracleError> {
    oracle.predict_metered(text, ledger)
}

/// Full class-probability access, available only for in-process victims that
/// expose scores. Used by the deletion-ranking baseline, never by the
/// hard-label attack itself.
pub trait ProbabilityScorer: Send + Sync {
    fn num_classes(&self) -> usize;

    /// Probabilities per class id; non-negative, summing to 1.
    fn class_probabilities(&self, text: &TokenSequence) -> Vec<f64>;
}

/// Two-class keyword victim: class 1 iff the summed weights of the tokens
/// present exceed the threshold. Tokens without a weight contribute nothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconVictim {
    pub weights: BTreeMap<String, f64>,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_names: Option<[String; 2]>,
}

impl LexiconVictim {
    pub fn new(weights: BTreeMap<String, f64>, threshold: f64) -> Self {
        LexiconVictim {
            weights,
            threshold,
            class_names: None,
        }
    }

    /// Summed weight of every token occurrence.
    pub fn score(&self, text: &TokenSequence) -> f64 {
        text.tokens()
            .iter()
            .filter_map(|t| self.weights.get(t))
            .sum()
    }

    fn label(&self, id: usize) -> Label {
        match &self.class_names {
            Some(names) => Label::named(id, names[id].clone()),
            None => Label::new(id),
        }
    }
}

impl HardLabelOracle for LexiconVictim {
    fn num_classes(&self) -> usize {
        2
    }

    fn predict(&self, text: &TokenSequence) -> Result<Label, OracleError> {
        let id = usize::from(self.score(text) > self.threshold);
        Ok(self.label(id))
    }

    fn probability_scorer(&self) -> Option<&dyn ProbabilityScorer> {
        Some(self)
    }
}

impl ProbabilityScorer for LexiconVictim {
    fn num_classes(&self) -> usize {
        2
    }

    fn class_probabilities(&self, text: &TokenSequence) -> Vec<f64> {
        let margin = self.score(text) - self.threshold;
        let p1 = 1.0 / (1.0 + (-margin).exp());
        vec![1.0 - p1, p1]
    }
}

/// Multinomial naive Bayes over bag-of-words counts with additive smoothing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesVictim {
    pub alpha: f64,
    pub class_log_priors: Vec<f64>,
    /// Per class, log P(word | class) for every vocabulary word.
    pub word_log_likelihoods: Vec<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_names: Option<Vec<String>>,
}

impl NaiveBayesVictim {
    /// Unnormalized log-posterior per class. Words outside the vocabulary are
    /// ignored, so the score order is invariant to unseen tokens.
    pub fn log_scores(&self, text: &TokenSequence) -> Vec<f64> {
        let mut scores = self.class_log_priors.clone();
        for token in text.tokens() {
            for (class, likelihoods) in self.word_log_likelihoods.iter().enumerate() {
                if let Some(ll) = likelihoods.get(token) {
                    scores[class] += ll;
                }
            }
        }
        scores
    }

    fn label(&self, id: usize) -> Label {
        match &self.class_names {
            Some(names) => Label::named(id, names[id].clone()),
            None => Label::new(id),
        }
    }
}

impl HardLabelOracle for NaiveBayesVictim {
    fn num_classes(&self) -> usize {
        self.class_log_priors.len()
    }

    fn predict(&self, text: &TokenSequence) -> Result<Label, OracleError> {
        let scores = self.log_scores(text);
        let mut best = 0;
        for (class, score) in scores.iter().enumerate().skip(1) {
            if *score > scores[best] {
                best = class;
            }
        }
        Ok(self.label(best))
    }

    fn probability_scorer(&self) -> Option<&dyn ProbabilityScorer> {
        Some(self)
    }
}

impl ProbabilityScorer for NaiveBayesVictim {
    fn num_classes(&self) -> usize {
        self.class_log_priors.len()
    }

    fn class_probabilities(&self, text: &TokenSequence) -> Vec<f64> {
        let scores = self.log_scores(text);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }
}

/// Fits a naive Bayes victim on labeled token sequences.
///
/// Class ids must cover `0..=max_label` with at least one document each and at
/// least two classes overall.
pub fn train_naive_bayes(
    corpus: &[(TokenSequence, Label)],
    alpha: f64,
) -> Result<NaiveBayesVictim, TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let num_classes = corpus.iter().map(|(_, l)| l.id + 1).max().unwrap().max(2);

    let mut doc_counts = vec![0u64; num_classes];
    let mut word_counts: Vec<BTreeMap<String, u64>> = vec![BTreeMap::new(); num_classes];
    let mut token_totals = vec![0u64; num_classes];
    let mut vocabulary: BTreeMap<String, ()> = BTreeMap::new();

    for (text, label) in corpus {
        doc_counts[label.id] += 1;
        for token in text.tokens() {
            *word_counts[label.id].entry(token.clone()).or_insert(0) += 1;
            token_totals[label.id] += 1;
            vocabulary.entry(token.clone()).or_insert(());
        }
    }
    if let Some(class) = doc_counts.iter().position(|&c| c == 0) {
        return Err(TrainError::DegenerateCorpus(class));
    }

    let total_docs = corpus.len() as f64;
    let class_log_priors = doc_counts
        .iter()
        .map(|&c| (c as f64 / total_docs).ln())
        .collect();

    let vocab_size = vocabulary.len() as f64;
    let word_log_likelihoods = (0..num_classes)
        .map(|class| {
            let denominator = token_totals[class] as f64 + alpha * vocab_size;
            vocabulary
                .keys()
                .map(|word| {
                    let count = *word_counts[class].get(word).unwrap_or(&0) as f64;
                    (word.clone(), ((count + alpha) / denominator).ln())
                })
                .collect()
        })
        .collect();

    Ok(NaiveBayesVictim {
        alpha,
        class_log_priors,
        word_log_likelihoods,
        class_names: None,
    })
}
