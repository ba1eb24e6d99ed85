//! Sentence similarity between a perturbed candidate and its original.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::store::VectorStore;
use crate::text::TokenSequence;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("no token of the sentence is covered by the vector store")]
    NoCoverage,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Scores how much of a sentence's meaning a perturbation preserved, in
/// [-1, 1]. Implementations must be shareable across attack threads.
pub trait SimilarityProvider<F: Scalar>: Send + Sync {
    fn similarity(&self, a: &TokenSequence, b: &TokenSequence) -> Result<F, SimilarityError>;
}

/// Cosine between the mean embeddings of the two sentences, ignoring tokens
/// outside the store. Errors with `NoCoverage` when a side has no known token.
pub fn mean_embedding_similarity<F: Scalar>(
    store: &VectorStore<F>,
    a: &TokenSequence,
    b: &TokenSequence,
) -> Result<F, SimilarityError> {
    let mean_a = mean_vector(store, a)?;
    let mean_b = mean_vector(store, b)?;
    let norm_a = norm(&mean_a);
    let norm_b = norm(&mean_b);
    if norm_a == F::zero() || norm_b == F::zero() {
        // Covered tokens cancelled out exactly; report no preserved signal.
        return Ok(F::zero());
    }
    let dot = mean_a.iter().zip(&mean_b).map(|(x, y)| *x * *y).sum::<F>();
    Ok(dot / (norm_a * norm_b))
}

fn mean_vector<F: Scalar>(
    store: &VectorStore<F>,
    text: &TokenSequence,
) -> Result<Vec<F>, SimilarityError> {
    let mut sum = vec![F::zero(); store.dim()];
    let mut covered = 0usize;
    for token in text.tokens() {
        if let Some(vector) = store.vector(token) {
            for (s, v) in sum.iter_mut().zip(vector) {
                *s += *v;
            }
            covered += 1;
        }
    }
    if covered == 0 {
        return Err(SimilarityError::NoCoverage);
    }
    let count = F::from_count(covered);
    for s in sum.iter_mut() {
        *s = *s / count;
    }
    Ok(sum)
}

fn norm<F: Scalar>(v: &[F]) -> F {
    v.iter().map(|x| *x * *x).sum::<F>().sqrt()
}

/// The built-in provider: mean-embedding cosine over a borrowed store.
#[derive(Debug, Clone, Copy)]
pub struct MeanEmbeddingSimilarity<'a, F: Scalar = f64> {
    store: &'a VectorStore<F>,
}

impl<'a, F: Scalar> MeanEmbeddingSimilarity<'a, F> {
    pub fn new(store: &'a VectorStore<F>) -> Self {
        MeanEmbeddingSimilarity { store }
    }
}

impl<F: Scalar> SimilarityProvider<F> for MeanEmbeddingSimilarity<'_, F> {
    fn similarity(&self, a: &TokenSequence, b: &TokenSequence) -> Result<F, SimilarityError> {
        mean_embedding_similarity(self.store, a, b)
    }
}
