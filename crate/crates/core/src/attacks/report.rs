use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::protocol::{detection_probability, AdversaryAction, SessionTranscript, Verdict};
use crate::states::Family;

use super::cloner::{mutual_information, optimal_eve_fidelity, security_threshold};
use super::intercept::{expected_label_error, paper_error_rate};
use super::AttackConfig;

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error from the spread of per-unit error fractions.
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error of per-unit fractions.
    pub fn from_fractions(fractions: &[f64], samples: usize) -> Self {
        let n = fractions.len() as f64;
        let mean = fractions.iter().sum::<f64>() / n;
        let var = if fractions.len() > 1 {
            fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
            samples,
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12
    }
}

/// The `(1 − 1/D)^k` figure for one source count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperFigure {
    pub sources: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClonerFigures {
    pub fidelity: f64,
    pub eve_fidelity: f64,
    pub i_ab: f64,
    pub i_ae: f64,
    /// Bob holds more information than Eve.
    pub secure: bool,
}

/// Damage an attack did to a session, beside the exact predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub family: Family,
    pub attack: String,
    pub units: usize,
    /// Bob's per-label error rate over every label.
    pub empirical_label_error: Estimate,
    /// Exact prediction for this run, when one exists.
    pub analytic_label_error: Option<f64>,
    pub within_three_sigma: Option<bool>,
    /// Uniform-outcome per-label figure `1 − 1/D`.
    pub uniform_outcome_error: f64,
    /// `(1 − 1/D)^k` for k = 1..=N.
    pub paper_error_rates: Vec<PaperFigure>,
    pub checks: usize,
    pub check_mismatches: usize,
    pub checked_error: f64,
    /// `1 − (1 − e)^s` with the analytic error when available.
    pub detection_probability: f64,
    pub verdict: Verdict,
    /// Fraction of units where Eve's key guess was right.
    pub eve_guess_success: Option<f64>,
    /// Frequencies of Eve's observed labels.
    pub eve_outcome_frequencies: Option<Vec<f64>>,
    pub cloner: Option<ClonerFigures>,
}

impl AttackReport {
    pub fn from_transcript(t: &SessionTranscript) -> Result<Self> {
        let family = t.family;
        let size = family.size();
        let fractions: Vec<f64> = t
            .unit_errors()
            .iter()
            .map(|&e| e as f64 / size as f64)
            .collect();
        let empirical = Estimate::from_fractions(&fractions, t.prepared.len());
        let analytic = expected_label_error(t)?;
        let checks = t.sift.check_positions.len();
        let detection = detection_probability(analytic.unwrap_or(empirical.value), checks);

        let mut guesses = 0usize;
        let mut right = 0usize;
        let mut counts = vec![0usize; size];
        let mut observed = 0usize;
        for action in &t.adversary {
            if let AdversaryAction::InterceptResend {
                unit,
                guess,
                outcomes,
            } = action
            {
                if let Some(g) = guess {
                    guesses += 1;
                    right += usize::from(*g == t.operations[*unit]);
                }
                for &o in outcomes {
                    counts[o] += 1;
                    observed += 1;
                }
            }
        }
        let cloner = match &t.config.adversary {
            Some(AttackConfig::Cloner { fidelity }) if family.dim <= 3 => {
                let f_e = optimal_eve_fidelity(*fidelity, family.dim)?;
                let i_ab = mutual_information(*fidelity, family.dim)?;
                let i_ae = mutual_information(f_e, family.dim)?;
                let threshold = security_threshold(family.dim).ok();
                Some(ClonerFigures {
                    fidelity: *fidelity,
                    eve_fidelity: f_e,
                    i_ab,
                    i_ae,
                    secure: threshold.map_or(i_ab > i_ae, |th| *fidelity > th.fidelity),
                })
            }
            _ => None,
        };
        Ok(Self {
            family,
            attack: t
                .config
                .adversary
                .as_ref()
                .map_or("none", |a| a.name())
                .to_string(),
            units: t.operations.len(),
            empirical_label_error: empirical,
            analytic_label_error: analytic,
            within_three_sigma: analytic.map(|a| empirical.agrees_with(a, 3.0)),
            uniform_outcome_error: 1.0 - 1.0 / size as f64,
            paper_error_rates: (1..=family.particles)
                .map(|k| paper_error_rate(size, k).map(|value| PaperFigure { sources: k, value }))
                .collect::<Result<_>>()?,
            checks,
            check_mismatches: t.sift.mismatches,
            checked_error: t.checked_error_rate(),
            detection_probability: detection,
            verdict: t.verdict(),
            eve_guess_success: (guesses > 0).then(|| right as f64 / guesses as f64),
            eve_outcome_frequencies: (observed > 0)
                .then(|| counts.iter().map(|&c| c as f64 / observed as f64).collect()),
            cloner,
        })
    }
}
