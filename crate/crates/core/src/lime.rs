//! Word importance from a kernel-weighted linear surrogate, plus the random
//! and deletion ranking baselines.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::KernelDistance;
use crate::linalg::{fit_weighted_ridge, SolveError};
use crate::oracle::ProbabilityScorer;
use crate::scalar::Scalar;
use crate::store::{StopWordList, VectorStore};
use crate::text::{Label, TokenSequence};

/// Placeholder substituted for masked tokens in neighborhood samples.
pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankError {
    #[error("need at least two tokens to sample a neighborhood")]
    TooShort,
    #[error("mask vectors must contain at least one set bit")]
    ZeroVector,
    #[error("every neighborhood sample must be labeled before fitting")]
    UnlabeledSample,
    #[error("surrogate system is singular")]
    SingularSystem,
    #[error("no position is both in the vector store and outside the stop list")]
    NoAttackablePositions,
    #[error("victim does not expose class probabilities")]
    ScoreUnavailable,
}

impl From<SolveError> for RankError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::SingularSystem => RankError::SingularSystem,
            SolveError::ShapeMismatch => RankError::UnlabeledSample,
        }
    }
}

/// One masked variant of the input, with its oracle verdict once labeled.
#[derive(Debug, Clone)]
pub struct NeighborhoodSample<F: Scalar = f64> {
    /// True where the original token was kept.
    pub mask: Vec<bool>,
    pub text: TokenSequence,
    pub label: Option<Label>,
    /// 1 when the label matched the original prediction, else 0.
    pub target: Option<F>,
}

impl<F: Scalar> NeighborhoodSample<F> {
    /// Records the oracle label relative to the original prediction.
    pub fn fill_label(&mut self, label: Label, original: &Label) {
        self.target = Some(if label.same_class(original) {
            F::one()
        } else {
            F::zero()
        });
        self.label = Some(label);
    }
}

/// Draws `m` masked variants of `x`. Each position is kept with probability
/// one half, and degenerate all-kept or all-masked draws are rejected, so
/// inputs need at least two tokens.
pub fn sample_neighborhood<F: Scalar, R: Rng>(
    x: &TokenSequence,
    m: usize,
    rng: &mut R,
) -> Result<Vec<NeighborhoodSample<F>>, RankError> {
    let n = x.len();
    if n < 2 {
        return Err(RankError::TooShort);
    }
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        let mask = loop {
            let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let kept = mask.iter().filter(|&&b| b).count();
            if kept > 0 && kept < n {
                break mask;
            }
        };
        let tokens = x
            .tokens()
            .iter()
            .zip(&mask)
            .map(|(token, &kept)| {
                if kept {
                    token.clone()
                } else {
                    MASK_TOKEN.to_string()
                }
            })
            .collect();
        samples.push(NeighborhoodSample {
            mask,
            text: TokenSequence::new(tokens).expect("n >= 2"),
            label: None,
            target: None,
        });
    }
    Ok(samples)
}

/// Cosine similarity between two binary vectors of equal length.
pub fn cosine_binary<F: Scalar>(a: &[bool], b: &[bool]) -> Result<F, RankError> {
    assert_eq!(a.len(), b.len(), "mask vectors must have equal length");
    let ones_a = a.iter().filter(|&&x| x).count();
    let ones_b = b.iter().filter(|&&x| x).count();
    if ones_a == 0 || ones_b == 0 {
        return Err(RankError::ZeroVector);
    }
    let dot = a.iter().zip(b).filter(|(&x, &y)| x && y).count();
    Ok(F::from_count(dot) / (F::from_count(ones_a).sqrt() * F::from_count(ones_b).sqrt()))
}

/// Exponential kernel `exp(-d^2 / sigma^2)`.
pub fn kernel_weight<F: Scalar>(distance: F, sigma: F) -> F {
    (-(distance * distance) / (sigma * sigma)).exp()
}

/// The fitted linear surrogate: per-token coefficients plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SurrogateFit<F: Scalar = f64> {
    pub theta0: F,
    /// One coefficient per input token position.
    pub theta: Vec<F>,
    /// Kernel weight given to each neighborhood sample, in input order.
    pub weights: Vec<F>,
    pub kernel_width: F,
    pub ridge_lambda: F,
}

/// Fits the weighted ridge surrogate to labeled neighborhood samples.
///
/// Each sample is weighted by the kernel applied to its mask's distance from
/// the all-ones vector, where the distance term is either the raw cosine or
/// `1 - cosine` depending on `distance`.
pub fn fit_surrogate<F: Scalar>(
    x: &TokenSequence,
    samples: &[NeighborhoodSample<F>],
    sigma: F,
    lambda: F,
    distance: KernelDistance,
) -> Result<SurrogateFit<F>, RankError> {
    let n = x.len();
    let ones = vec![true; n];
    let mut rows = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    for sample in samples {
        let target = sample.target.ok_or(RankError::UnlabeledSample)?;
        let cosine = cosine_binary::<F>(&sample.mask, &ones)?;
        let d = match distance {
            KernelDistance::Cosine => cosine,
            KernelDistance::OneMinusCosine => F::one() - cosine,
        };
        rows.push(sample.mask.clone());
        targets.push(target);
        weights.push(kernel_weight(d, sigma));
    }

    let (theta0, theta) = fit_weighted_ridge(&rows, &targets, &weights, lambda)?;
    if !theta0.is_finite() || theta.iter().any(|t| !t.is_finite()) {
        return Err(RankError::SingularSystem);
    }
    Ok(SurrogateFit {
        theta0,
        theta,
        weights,
        kernel_width: sigma,
        ridge_lambda: lambda,
    })
}

/// Attackable positions of an input, most important first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ImportanceRanking<F: Scalar = f64> {
    /// Position indices sorted by descending score, index ascending on ties.
    pub order: Vec<usize>,
    /// Score per ranked position.
    pub scores: BTreeMap<usize, F>,
}

impl<F: Scalar> ImportanceRanking<F> {
    fn from_scores(scored: Vec<(usize, F)>) -> Result<Self, RankError> {
        if scored.is_empty() {
            return Err(RankError::NoAttackablePositions);
        }
        let scores: BTreeMap<usize, F> = scored.iter().cloned().collect();
        let mut order: Vec<usize> = scored.iter().map(|(i, _)| *i).collect();
        order.sort_by(|&i, &j| {
            scores[&j]
                .partial_cmp(&scores[&i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| i.cmp(&j))
        });
        Ok(ImportanceRanking { order, scores })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Positions eligible for substitution: outside the stop list and present in
/// the vector store.
pub fn attackable_positions(
    x: &TokenSequence,
    stops: &StopWordList,
    store: &VectorStore<impl Scalar>,
) -> Vec<usize> {
    x.tokens()
        .iter()
        .enumerate()
        .filter(|(_, token)| !stops.contains(token) && store.contains(token))
        .map(|(i, _)| i)
        .collect()
}

/// Ranks attackable positions by their surrogate coefficient, descending.
pub fn rank_words<F: Scalar>(
    x: &TokenSequence,
    fit: &SurrogateFit<F>,
    stops: &StopWordList,
    store: &VectorStore<F>,
) -> Result<ImportanceRanking<F>, RankError> {
    let scored = attackable_positions(x, stops, store)
        .into_iter()
        .map(|i| (i, fit.theta[i]))
        .collect();
    ImportanceRanking::from_scores(scored)
}

/// Shuffles the attackable positions uniformly; the no-signal baseline.
pub fn random_rank<F: Scalar, R: Rng>(
    x: &TokenSequence,
    stops: &StopWordList,
    store: &VectorStore<F>,
    rng: &mut R,
) -> Result<ImportanceRanking<F>, RankError> {
    let mut positions = attackable_positions(x, stops, store);
    if positions.is_empty() {
        return Err(RankError::NoAttackablePositions);
    }
    use rand::seq::SliceRandom;
    positions.shuffle(rng);
    let scores = positions.iter().map(|&i| (i, F::zero())).collect();
    let order = positions;
    Ok(ImportanceRanking { order, scores })
}

/// Scores each attackable position by the drop in the predicted class's
/// probability when that token is deleted. A score-based baseline, so it
/// needs a probability-exposing victim.
pub fn deletion_rank<F: Scalar>(
    x: &TokenSequence,
    scorer: &dyn ProbabilityScorer,
    stops: &StopWordList,
    store: &VectorStore<F>,
) -> Result<ImportanceRanking<F>, RankError> {
    let base = scorer.class_probabilities(x);
    let predicted = base
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let scored = attackable_positions(x, stops, store)
        .into_iter()
        .map(|i| {
            let drop = if x.len() == 1 {
                0.0
            } else {
                let tokens: Vec<String> = x
                    .tokens()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, t)| t.clone())
                    .collect();
                let shortened = TokenSequence::new(tokens).expect("n > 1");
                base[predicted] - scorer.class_probabilities(&shortened)[predicted]
            };
            (i, F::from_config(drop))
        })
        .collect();
    ImportanceRanking::from_scores(scored)
}
