//! Adversary models and their exact analyses.

mod cloner;
mod intercept;
mod misgroup;
mod report;

pub use cloner::{
    bob_fidelity, cloner_curve, curve_to_csv, eve_fidelity, fourier_dual, mutual_information,
    optimal_cloner, optimal_eve_fidelity, second_clone_fidelity, security_threshold, CloneFidelity,
    ClonerAmplitudes, CurveRow, OptimalCloner, Threshold,
};
pub(crate) use intercept::adversary_act;
pub use intercept::{
    cloner_channel_error, eve_outcome_distribution, intercept_oracle, intercept_resend,
    paper_error_rate,
};
pub use misgroup::{
    correlation_attack_mean, misgrouped_density, misgrouped_density_with, Source, TupleSource,
};
pub use report::{AttackReport, ClonerFigures, Estimate, PaperFigure};

use serde::{Deserialize, Serialize};

use crate::error::{GcoreError, Result};
use crate::permutation::{key_block_stream, ControlKey, KeyBlockStream};
use crate::states::Family;

/// How Eve picks the operation she undoes before regrouping.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// A fresh uniformly random operation for every unit.
    #[default]
    Uniform,
    /// Operations read from her own control key, block by block.
    Fixed { key: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackConfig {
    /// Eve regroups the particles, measures every tuple in the entangled
    /// basis and forwards them. With `offsets` she ignores the key and
    /// builds tuple i from Alice's positions `i + offsets[ℓ] − 1` (mod d^N),
    /// so equal offsets mean particles from the same source state.
    InterceptResend {
        #[serde(default)]
        guess: GuessStrategy,
        #[serde(default)]
        offsets: Option<Vec<usize>>,
    },
    /// Every particle passes through a symmetric phase-covariant cloner
    /// whose first clone has the given fidelity.
    Cloner { fidelity: f64 },
}

impl AttackConfig {
    pub fn intercept_resend() -> Self {
        AttackConfig::InterceptResend {
            guess: GuessStrategy::Uniform,
            offsets: None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackConfig::InterceptResend { .. } => "intercept-resend",
            AttackConfig::Cloner { .. } => "cloner",
        }
    }

    /// Validates the attack against a family and returns Eve's key stream
    /// when she guesses with a fixed key.
    pub(crate) fn key_stream(
        &self,
        family: Family,
        group_size: usize,
    ) -> Result<Option<KeyBlockStream>> {
        let err = |m: String| GcoreError::Config(m);
        match self {
            AttackConfig::InterceptResend { guess, offsets } => {
                if let Some(o) = offsets {
                    validate_offsets(family, o).map_err(|e| err(e.to_string()))?;
                }
                match guess {
                    GuessStrategy::Uniform => Ok(None),
                    GuessStrategy::Fixed { key } => {
                        let key = ControlKey::parse(family.dim, key)
                            .and_then(|k| k.with_group_size(group_size))
                            .and_then(|k| key_block_stream(&k, family.particles))
                            .map_err(|e| err(format!("adversary key: {e}")))?;
                        Ok(Some(key))
                    }
                }
            }
            AttackConfig::Cloner { fidelity } => {
                ClonerAmplitudes::symmetric_for_fidelity(family.dim, *fidelity)
                    .map_err(|e| err(e.to_string()))?;
                Ok(None)
            }
        }
    }
}

/// Offsets are 1-based source indices, one per lane, each at most d^N.
pub(crate) fn validate_offsets(family: Family, offsets: &[usize]) -> Result<()> {
    if offsets.len() != family.particles {
        return Err(GcoreError::Domain(format!(
            "expected {} offsets, got {}",
            family.particles,
            offsets.len()
        )));
    }
    if let Some(bad) = offsets.iter().find(|&&o| o == 0 || o > family.size()) {
        return Err(GcoreError::Domain(format!(
            "offset {bad} outside 1..={}",
            family.size()
        )));
    }
    Ok(())
}

/// Lanes grouped by offset value, in order of first appearance.
pub(crate) fn offset_groups(offsets: &[usize]) -> Vec<Vec<usize>> {
    let mut values: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (lane, &o) in offsets.iter().enumerate() {
        match values.iter().position(|&v| v == o) {
            Some(g) => groups[g].push(lane),
            None => {
                values.push(o);
                groups.push(vec![lane]);
            }
        }
    }
    groups
}
