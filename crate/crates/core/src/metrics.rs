//! Aggregate metrics, run reports on disk, and budget sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AttackConfig, ConfigError};
use crate::oracle::HardLabelOracle;
use crate::runner::{run_attacks, SampleOutcome};
use crate::scalar::Scalar;
use crate::search::{AttackDeps, AttackError, AttackStatus, RankingSource, SamplingRule};
use crate::text::{Label, TokenSequence};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no samples were attacked, so the success rate is undefined")]
    EmptyRun,
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("report serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep budgets must be non-empty and strictly increasing")]
    BadBudgets,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Success rate over the samples the engine actually attacked: skipped
/// misclassifications leave the denominator.
pub fn attack_success_rate<F: Scalar>(outcomes: &[SampleOutcome<F>]) -> Result<F, MetricsError> {
    let skipped = count(outcomes, AttackStatus::SkippedMisclassified);
    let attacked = outcomes.len() - skipped;
    if attacked == 0 {
        return Err(MetricsError::EmptyRun);
    }
    let successes = count(outcomes, AttackStatus::Success);
    Ok(F::from_count(successes) / F::from_count(attacked))
}

/// Success rate over every sample in the run, skipped or not.
pub fn attack_success_rate_literal<F: Scalar>(
    outcomes: &[SampleOutcome<F>],
) -> Result<F, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let successes = count(outcomes, AttackStatus::Success);
    Ok(F::from_count(successes) / F::from_count(outcomes.len()))
}

fn count<F: Scalar>(outcomes: &[SampleOutcome<F>], status: AttackStatus) -> usize {
    outcomes
        .iter()
        .filter(|o| o.outcome.status == status)
        .count()
}

/// Run-level summary. Perturbation and similarity average over successes
/// only; query counts average over everything attacked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Aggregates<F: Scalar = f64> {
    pub total: usize,
    pub attacked: usize,
    pub skipped: usize,
    pub successes: usize,
    pub asr: F,
    pub asr_literal: F,
    pub mean_pert: F,
    pub mean_sim: F,
    pub mean_queries: F,
}

pub fn aggregate<F: Scalar>(outcomes: &[SampleOutcome<F>]) -> Result<Aggregates<F>, MetricsError> {
    let asr = attack_success_rate(outcomes)?;
    let asr_literal = attack_success_rate_literal(outcomes)?;
    let skipped = count(outcomes, AttackStatus::SkippedMisclassified);
    let successes = count(outcomes, AttackStatus::Success);
    let attacked = outcomes.len() - skipped;

    let mut pert_sum = F::zero();
    let mut sim_sum = F::zero();
    let mut query_sum = F::zero();
    for sample in outcomes {
        match sample.outcome.status {
            AttackStatus::SkippedMisclassified => continue,
            AttackStatus::Success => {
                pert_sum += sample.outcome.pert_rate;
                sim_sum += sample.outcome.similarity;
            }
            _ => {}
        }
        query_sum += F::from_config(sample.outcome.queries_used as f64);
    }
    let over_successes = |sum: F| {
        if successes == 0 {
            F::zero()
        } else {
            sum / F::from_count(successes)
        }
    };
    Ok(Aggregates {
        total: outcomes.len(),
        attacked,
        skipped,
        successes,
        asr,
        asr_literal,
        mean_pert: over_successes(pert_sum),
        mean_sim: over_successes(sim_sum),
        mean_queries: query_sum / F::from_count(attacked),
    })
}

/// Everything a run produced, with enough settings to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunReport<F: Scalar = f64> {
    pub timestamp_unix: u64,
    pub config: AttackConfig<F>,
    pub ranking_source: RankingSource,
    pub sampling_rule: SamplingRule,
    #[serde(flatten)]
    pub aggregates: Aggregates<F>,
    pub outcomes: Vec<SampleOutcome<F>>,
}

impl<F: Scalar> RunReport<F> {
    pub fn new(
        config: AttackConfig<F>,
        ranking_source: RankingSource,
        sampling_rule: SamplingRule,
        outcomes: Vec<SampleOutcome<F>>,
    ) -> Result<Self, MetricsError> {
        let aggregates = aggregate(&outcomes)?;
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(RunReport {
            timestamp_unix,
            config,
            ranking_source,
            sampling_rule,
            aggregates,
            outcomes,
        })
    }

    /// Equality for reproducibility checks: the wall-clock stamp is the one
    /// field allowed to differ between reruns.
    pub fn matches_ignoring_timestamp(&self, other: &Self) -> bool {
        self.config == other.config
            && self.ranking_source == other.ranking_source
            && self.sampling_rule == other.sampling_rule
            && self.aggregates == other.aggregates
            && self.outcomes == other.outcomes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Full-precision floats; `read_report` round-trips these bit-exactly.
    Json,
    /// Six-decimal floats, plus a `<stem>_aggregates.csv` sibling file.
    Csv,
}

pub fn write_report<F: Scalar>(
    path: impl AsRef<Path>,
    report: &RunReport<F>,
    format: ReportFormat,
) -> Result<(), MetricsError> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let mut file = fs::File::create(path)?;
            serde_json::to_writer_pretty(&mut file, report)?;
            file.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            fs::write(path, outcomes_csv(report))?;
            fs::write(aggregates_path(path), aggregates_csv(&report.aggregates))?;
        }
    }
    Ok(())
}

pub fn read_report<F: Scalar>(path: impl AsRef<Path>) -> Result<RunReport<F>, MetricsError> {
    let raw = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

fn aggregates_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    path.with_file_name(format!("{stem}_aggregates.csv"))
}

fn outcomes_csv<F: Scalar>(report: &RunReport<F>) -> String {
    let mut out = String::from("sample_id,status,pert_rate,similarity,queries_used\n");
    for sample in &report.outcomes {
        let o = &sample.outcome;
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{}\n",
            sample.sample_id, o.status, o.pert_rate, o.similarity, o.queries_used,
        ));
    }
    out
}

fn aggregates_csv<F: Scalar>(a: &Aggregates<F>) -> String {
    format!(
        "total,attacked,skipped,successes,asr,asr_literal,mean_pert,mean_sim,mean_queries\n\
         {},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        a.total,
        a.attacked,
        a.skipped,
        a.successes,
        a.asr,
        a.asr_literal,
        a.mean_pert,
        a.mean_sim,
        a.mean_queries,
    )
}

/// One budget's aggregates inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepPoint<F: Scalar = f64> {
    pub budget: u64,
    pub aggregates: Aggregates<F>,
}

/// Reruns the same attack set under each budget. Budgets must be strictly
/// increasing; every other setting, including the seed, is held fixed.
pub fn budget_sweep<F: Scalar>(
    budgets: &[u64],
    samples: &[(TokenSequence, Label)],
    oracle: &dyn HardLabelOracle,
    base: &AttackConfig<F>,
    deps: &AttackDeps<'_, F>,
    parallel: bool,
) -> Result<Vec<SweepPoint<F>>, SweepError> {
    if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::BadBudgets);
    }
    let mut points = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut config = base.clone();
        config.query_budget = budget;
        config.validate()?;
        let outcomes = run_attacks(samples, oracle, &config, deps, parallel)?;
        points.push(SweepPoint {
            budget,
            aggregates: aggregate(&outcomes)?,
        });
    }
    Ok(points)
}
