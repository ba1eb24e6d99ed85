//! Beam search over synonym substitutions, driven by an importance ranking.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AttackConfig;
use crate::lime::{
    attackable_positions, deletion_rank, fit_surrogate, random_rank, rank_words,
    sample_neighborhood, ImportanceRanking, RankError,
};
use crate::oracle::{query, HardLabelOracle, OracleError, QueryLedger};
use crate::scalar::Scalar;
use crate::similarity::{SimilarityError, SimilarityProvider};
use crate::store::{CandidateSet, StopWordList, VectorStore};
use crate::text::{perturbation_rate, Label, TokenSequence};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("beam state has consumed every ranked position")]
    Exhausted,
    #[error("deletion ranking requires a probability-exposing victim")]
    ScoreUnavailable,
    #[error("oracle failure: {0}")]
    Oracle(OracleError),
    #[error("similarity failure: {0}")]
    Similarity(SimilarityError),
    #[error("ranking failure: {0}")]
    Rank(RankError),
}

/// How word importance is obtained before the search runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankingSource {
    /// Kernel-weighted linear surrogate fitted on masked neighborhood samples.
    Lime,
    /// Uniformly shuffled positions; the ablation baseline.
    Random,
    /// Probability drop under single-token deletion; needs a scoring victim.
    Deletion,
}

/// How survivors are picked from a beam round's candidate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingRule {
    /// b/3 most similar, b/3 least similar, b/3 random from the remainder.
    Stratified,
    /// The b most similar states.
    Top,
    /// The b least similar states.
    Bottom,
    /// b states uniformly at random.
    Random,
}

/// Terminal outcome kind of one attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackStatus {
    /// Found a label-flipping substitution under the perturbation threshold.
    Success,
    /// The query budget ran out first.
    BudgetExhausted,
    /// Every beam state consumed all ranked positions without a flip.
    CandidatesExhausted,
    /// The victim already misclassified the unperturbed input.
    SkippedMisclassified,
}

impl std::fmt::Display for AttackStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AttackStatus::Success => "Success",
            AttackStatus::BudgetExhausted => "BudgetExhausted",
            AttackStatus::CandidatesExhausted => "CandidatesExhausted",
            AttackStatus::SkippedMisclassified => "SkippedMisclassified",
        };
        f.write_str(name)
    }
}

/// The record every attack produces, success or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttackOutcome<F: Scalar = f64> {
    pub status: AttackStatus,
    pub adversarial: Option<TokenSequence>,
    pub pert_rate: F,
    pub similarity: F,
    pub queries_used: u64,
    pub ranking_source: RankingSource,
}

impl<F: Scalar> AttackOutcome<F> {
    fn terminal(status: AttackStatus, queries_used: u64, ranking_source: RankingSource) -> Self {
        AttackOutcome {
            status,
            adversarial: None,
            pert_rate: F::zero(),
            similarity: F::zero(),
            queries_used,
            ranking_source,
        }
    }
}

/// One in-flight perturbation hypothesis.
#[derive(Debug, Clone)]
pub struct BeamState<F: Scalar = f64> {
    pub text: TokenSequence,
    /// Index into the ranking's order; the next position this state expands.
    pub next_rank_pos: usize,
    /// Similarity against the unperturbed input.
    pub similarity: F,
    /// Oracle verdict, once queried.
    pub label: Option<Label>,
    /// Creation order within the attack; the deterministic tie-breaker.
    birth: u64,
}

impl<F: Scalar> BeamState<F> {
    /// A fresh, unexpanded, unlabeled state. The engine builds its own states
    /// during a run; this is for driving [`sample_beam`] and
    /// [`check_success`] directly.
    pub fn new(text: TokenSequence, similarity: F) -> Self {
        BeamState {
            text,
            next_rank_pos: 0,
            similarity,
            label: None,
            birth: 0,
        }
    }
}

/// Shared, read-only collaborators of a batch of attacks.
pub struct AttackDeps<'a, F: Scalar = f64> {
    pub store: &'a VectorStore<F>,
    pub stops: &'a StopWordList,
    pub similarity: &'a dyn SimilarityProvider<F>,
    pub ranking: RankingSource,
    pub rule: SamplingRule,
}

/// Substitutes every candidate of the state's next ranked position, dropping
/// children at or over the perturbation threshold. Consumes the position even
/// when nothing survives.
pub fn expand<F: Scalar>(
    state: &BeamState<F>,
    ranking: &ImportanceRanking<F>,
    candidates: &HashMap<usize, CandidateSet<F>>,
    original: &TokenSequence,
    similarity: &dyn SimilarityProvider<F>,
    pert_threshold: F,
    births: &mut u64,
) -> Result<Vec<BeamState<F>>, AttackError> {
    let Some(&position) = ranking.order.get(state.next_rank_pos) else {
        return Err(AttackError::Exhausted);
    };
    let n = F::from_count(original.len());
    let mut children = Vec::new();
    let Some(set) = candidates.get(&position) else {
        return Ok(children);
    };
    for candidate in &set.candidates {
        let text = state
            .text
            .with_substitution(position, candidate.word.clone());
        let pert = F::from_count(text.substitution_count()) / n;
        if pert >= pert_threshold {
            continue;
        }
        let similarity = match similarity.similarity(original, &text) {
            Ok(s) => s,
            Err(SimilarityError::NoCoverage) => {
                log::warn!("similarity has no coverage for a candidate; scoring it 0");
                F::zero()
            }
            Err(e) => return Err(AttackError::Similarity(e)),
        };
        children.push(BeamState {
            text,
            next_rank_pos: state.next_rank_pos + 1,
            similarity,
            label: None,
            birth: *births,
        });
        *births += 1;
    }
    Ok(children)
}

/// What a round of querying fresh children produced.
#[derive(Debug)]
pub enum CheckResult<F: Scalar = f64> {
    /// The highest-similarity child whose label differs from the original.
    Flipped(BeamState<F>),
    /// All children labeled; none flipped.
    NoFlip,
    /// The budget ran out before a flip was found.
    OutOfBudget,
}

/// Queries unlabeled children in descending-similarity order. Since the best
/// candidates go first, the first flip found is the highest-similarity flip.
pub fn check_success<F: Scalar>(
    children: &mut [BeamState<F>],
    oracle: &dyn HardLabelOracle,
    ledger: &mut QueryLedger,
    original_label: &Label,
) -> Result<CheckResult<F>, AttackError> {
    sort_by_similarity(children);
    for child in children.iter_mut() {
        let label = match &child.label {
            Some(label) => label.clone(),
            None => match query(oracle, ledger, &child.text) {
                Ok(label) => label,
                Err(OracleError::BudgetExhausted) => return Ok(CheckResult::OutOfBudget),
                Err(e) => return Err(AttackError::Oracle(e)),
            },
        };
        let flipped = !label.same_class(original_label);
        child.label = Some(label);
        if flipped {
            return Ok(CheckResult::Flipped(child.clone()));
        }
    }
    Ok(CheckResult::NoFlip)
}

fn sort_by_similarity<F: Scalar>(states: &mut [BeamState<F>]) {
    states.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.birth.cmp(&b.birth))
    });
}

/// Shrinks a round's pool to the beam width under the given rule.
///
/// Stratified keeps `b/3` top-similarity states, `b/3` bottom-similarity
/// states, and `b/3` drawn uniformly from the middle; pools no larger than
/// that pass through untouched.
pub fn sample_beam<F: Scalar, R: Rng>(
    mut pool: Vec<BeamState<F>>,
    b: usize,
    rule: SamplingRule,
    rng: &mut R,
) -> Vec<BeamState<F>> {
    sort_by_similarity(&mut pool);
    match rule {
        SamplingRule::Top => {
            pool.truncate(b);
            pool
        }
        SamplingRule::Bottom => {
            let skip = pool.len().saturating_sub(b);
            pool.split_off(skip)
        }
        SamplingRule::Random => {
            if pool.len() <= b {
                return pool;
            }
            take_random(pool, b, rng)
        }
        SamplingRule::Stratified => {
            let stratum = b / 3;
            if pool.len() <= 3 * stratum {
                return pool;
            }
            let middle_start = stratum;
            let middle_end = pool.len() - stratum;
            let bottom = pool.split_off(middle_end);
            let middle = pool.split_off(middle_start);
            let mut kept = pool;
            kept.extend(bottom);
            kept.extend(take_random(middle, stratum, rng));
            kept
        }
    }
}

fn take_random<F: Scalar, R: Rng>(
    pool: Vec<BeamState<F>>,
    count: usize,
    rng: &mut R,
) -> Vec<BeamState<F>> {
    if pool.len() <= count {
        return pool;
    }
    let mut picked = rand::seq::index::sample(rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    let mut picked = picked.into_iter().peekable();
    pool.into_iter()
        .enumerate()
        .filter(|(i, _)| {
            if picked.peek() == Some(i) {
                picked.next();
                true
            } else {
                false
            }
        })
        .map(|(_, state)| state)
        .collect()
}

/// Runs one full attack: misclassification pre-check, importance ranking,
/// then beam rounds until a flip, budget exhaustion, or candidate exhaustion.
pub fn attack<F: Scalar, R: Rng>(
    x: &TokenSequence,
    y: &Label,
    oracle: &dyn HardLabelOracle,
    config: &AttackConfig<F>,
    deps: &AttackDeps<'_, F>,
    rng: &mut R,
) -> Result<AttackOutcome<F>, AttackError> {
    let source = deps.ranking;
    let mut ledger = QueryLedger::new(config.query_budget);

    let observed = match query(oracle, &mut ledger, x) {
        Ok(label) => label,
        Err(OracleError::BudgetExhausted) => unreachable!("budget is validated to be >= 1"),
        Err(e) => return Err(AttackError::Oracle(e)),
    };
    if !observed.same_class(y) {
        return Ok(AttackOutcome::terminal(
            AttackStatus::SkippedMisclassified,
            ledger.used(),
            source,
        ));
    }

    let attackable = attackable_positions(x, deps.stops, deps.store);
    if attackable.is_empty() {
        return Ok(AttackOutcome::terminal(
            AttackStatus::CandidatesExhausted,
            ledger.used(),
            source,
        ));
    }

    let ranking = match build_ranking(
        x,
        &observed,
        &attackable,
        oracle,
        config,
        deps,
        &mut ledger,
        rng,
    )? {
        Ok(ranking) => ranking,
        Err(outcome) => return Ok(outcome),
    };

    let candidates: HashMap<usize, CandidateSet<F>> = ranking
        .order
        .iter()
        .map(|&position| {
            let set = deps
                .store
                .top_k_synonyms(x.token(position), config.synonym_k)
                .expect("ranked tokens are in the store");
            (position, set)
        })
        .collect();

    let mut births = 1u64;
    let mut pool = vec![BeamState {
        text: x.clone(),
        next_rank_pos: 0,
        similarity: F::one(),
        label: Some(observed.clone()),
        birth: 0,
    }];

    loop {
        pool.retain(|state| state.next_rank_pos < ranking.order.len());
        if pool.is_empty() {
            return Ok(AttackOutcome::terminal(
                AttackStatus::CandidatesExhausted,
                ledger.used(),
                source,
            ));
        }

        let mut parents = Vec::with_capacity(pool.len());
        let mut children: Vec<BeamState<F>> = Vec::new();
        for mut state in pool {
            children.extend(expand(
                &state,
                &ranking,
                &candidates,
                x,
                deps.similarity,
                config.pert_threshold,
                &mut births,
            )?);
            state.next_rank_pos += 1;
            parents.push(state);
        }

        let mut seen: HashSet<Vec<String>> = HashSet::new();
        children.retain(|child| seen.insert(child.text.tokens().to_vec()));

        if !children.is_empty() {
            match check_success(&mut children, oracle, &mut ledger, &observed)? {
                CheckResult::Flipped(state) => {
                    let pert_rate =
                        perturbation_rate(x, &state.text).expect("substitution preserves length");
                    return Ok(AttackOutcome {
                        status: AttackStatus::Success,
                        similarity: state.similarity,
                        adversarial: Some(state.text),
                        pert_rate,
                        queries_used: ledger.used(),
                        ranking_source: source,
                    });
                }
                CheckResult::OutOfBudget => {
                    return Ok(AttackOutcome::terminal(
                        AttackStatus::BudgetExhausted,
                        ledger.used(),
                        source,
                    ));
                }
                CheckResult::NoFlip => {}
            }
        }

        parents.extend(children);
        pool = sample_beam(parents, config.beam_size, deps.rule, rng);
    }
}

/// Produces the importance ranking, spending ledger queries as the source
/// demands. The inner `Err` carries an early terminal outcome.
#[allow(clippy::too_many_arguments)]
fn build_ranking<F: Scalar, R: Rng>(
    x: &TokenSequence,
    observed: &Label,
    attackable: &[usize],
    oracle: &dyn HardLabelOracle,
    config: &AttackConfig<F>,
    deps: &AttackDeps<'_, F>,
    ledger: &mut QueryLedger,
    rng: &mut R,
) -> Result<Result<ImportanceRanking<F>, AttackOutcome<F>>, AttackError> {
    let source = deps.ranking;
    match source {
        RankingSource::Random => {
            let ranking = random_rank(x, deps.stops, deps.store, rng).map_err(AttackError::Rank)?;
            Ok(Ok(ranking))
        }
        RankingSource::Deletion => {
            let scorer = oracle
                .probability_scorer()
                .ok_or(AttackError::ScoreUnavailable)?;
            let scoring_calls = 1 + if x.len() > 1 { attackable.len() } else { 0 };
            for _ in 0..scoring_calls {
                if ledger.record().is_err() {
                    return Ok(Err(AttackOutcome::terminal(
                        AttackStatus::BudgetExhausted,
                        ledger.used(),
                        source,
                    )));
                }
            }
            let ranking =
                deletion_rank(x, scorer, deps.stops, deps.store).map_err(AttackError::Rank)?;
            Ok(Ok(ranking))
        }
        RankingSource::Lime => {
            if x.len() < 2 {
                // Too short to mask; fall back to index order with no scores.
                let scores = attackable.iter().map(|&i| (i, F::zero())).collect();
                return Ok(Ok(ImportanceRanking {
                    order: attackable.to_vec(),
                    scores,
                }));
            }
            let m = config
                .surrogate_query_cap
                .samples_for(x.len(), config.query_budget);
            if m == 0 {
                return Ok(Err(AttackOutcome::terminal(
                    AttackStatus::BudgetExhausted,
                    ledger.used(),
                    source,
                )));
            }
            let mut samples = sample_neighborhood::<F, _>(x, m, rng).map_err(AttackError::Rank)?;
            for sample in samples.iter_mut() {
                match query(oracle, ledger, &sample.text) {
                    Ok(label) => sample.fill_label(label, observed),
                    Err(OracleError::BudgetExhausted) => {
                        return Ok(Err(AttackOutcome::terminal(
                            AttackStatus::BudgetExhausted,
                            ledger.used(),
                            source,
                        )));
                    }
                    Err(e) => return Err(AttackError::Oracle(e)),
                }
            }
            let fit = fit_surrogate(
                x,
                &samples,
                config.kernel_width,
                config.ridge_lambda,
                config.kernel_distance,
            )
            .map_err(AttackError::Rank)?;
            let ranking = rank_words(x, &fit, deps.stops, deps.store).map_err(AttackError::Rank)?;
            Ok(Ok(ranking))
        }
    }
}
