use serde::{Deserialize, Serialize};

use crate::error::{GcoreError, Result};

use super::config::SessionConfig;
use super::session::{run_with_labels, SessionTranscript};

/// Result of forwarding a key to the next party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayOutcome {
    pub transcript: SessionTranscript,
    /// Positions of the input key whose labels were not disclosed during
    /// the downstream check.
    pub kept_positions: Vec<usize>,
    /// The receiver's digits at `kept_positions`. On an honest hop these
    /// equal the sender's digits there.
    pub common_key: Vec<usize>,
}

/// Forwards `key` (base-d digits) to the next party with a full session:
/// every N digits become one basis label, the last unit is padded with
/// random labels, and the downstream check discloses some labels. The
/// common key is what survives that check.
pub fn multiparty_relay(key: &[usize], downstream: &SessionConfig) -> Result<RelayOutcome> {
    if key.is_empty() {
        return Err(GcoreError::Config("relay needs a nonempty key".into()));
    }
    let family = downstream.family()?;
    let (n, d) = (family.particles, family.dim);
    if let Some(bad) = key.iter().find(|&&x| x >= d) {
        return Err(GcoreError::Config(format!(
            "key digit {bad} is not base {d}"
        )));
    }
    let mut padded = key.to_vec();
    padded.resize(key.len().div_ceil(n) * n, 0);
    let labels: Vec<usize> = padded
        .chunks(n)
        .map(|c| c.iter().fold(0, |acc, &x| acc * d + x))
        .collect();
    let config = SessionConfig {
        units: labels.len().div_ceil(family.size()),
        ..downstream.clone()
    };
    let transcript = run_with_labels(&config, Some(&labels), 1)?;
    let mut checked = vec![false; transcript.measured.len()];
    for &i in &transcript.sift.check_positions {
        checked[i] = true;
    }
    let kept_positions: Vec<usize> = (0..key.len()).filter(|&i| !checked[i / n]).collect();
    let common_key = kept_positions
        .iter()
        .map(|&i| {
            let label = transcript.measured[i / n];
            crate::permutation::to_digits(label, d, n)[i % n]
        })
        .collect();
    Ok(RelayOutcome {
        transcript,
        kept_positions,
        common_key,
    })
}
