//! Runs attacks over a whole dataset, one independent RNG stream per sample.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AttackConfig;
use crate::oracle::HardLabelOracle;
use crate::scalar::Scalar;
use crate::search::{attack, AttackDeps, AttackError, AttackOutcome};
use crate::text::{Label, TokenSequence};

/// One dataset row's attack result, tagged with its position in the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampleOutcome<F: Scalar = f64> {
    pub sample_id: usize,
    pub outcome: AttackOutcome<F>,
}

/// Mixes the run seed with a sample index so each attack gets its own stream.
/// Reordering or parallelizing the run cannot change any sample's draws.
pub fn derive_attack_seed(run_seed: u64, sample_index: u64) -> u64 {
    let mut z = run_seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(sample_index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Attacks every sample, sequentially or across threads. Output order always
/// matches input order.
pub fn run_attacks<F: Scalar>(
    samples: &[(TokenSequence, Label)],
    oracle: &dyn HardLabelOracle,
    config: &AttackConfig<F>,
    deps: &AttackDeps<'_, F>,
    parallel: bool,
) -> Result<Vec<SampleOutcome<F>>, AttackError> {
    let run_one = |(index, (x, y)): (usize, &(TokenSequence, Label))| {
        let mut rng = StdRng::seed_from_u64(derive_attack_seed(config.seed, index as u64));
        attack(x, y, oracle, config, deps, &mut rng).map(|outcome| SampleOutcome {
            sample_id: index,
            outcome,
        })
    };
    if parallel {
        samples.par_iter().enumerate().map(run_one).collect()
    } else {
        samples.iter().enumerate().map(run_one).collect()
    }
}
