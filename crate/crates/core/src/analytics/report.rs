use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::{security_threshold, AttackReport};
use crate::error::{GcoreError, Result};
use crate::protocol::{detection_probability, SessionConfig, SessionTranscript, Verdict};
use crate::states::Family;

use super::{capacity, efficiency, Accounting, Ledger};

/// Where a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub provenance: Provenance,
}

impl Quantity {
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            provenance: Provenance::Analytic,
        }
    }

    pub fn sampled(value: f64, samples: usize) -> Self {
        Self {
            value,
            provenance: Provenance::MonteCarlo { samples },
        }
    }
}

/// One session condensed for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SessionConfig,
    pub family: Family,
    pub units: usize,
    pub labels: usize,
    pub verdict: Verdict,
    pub label_error: Quantity,
    pub analytic_label_error: Option<Quantity>,
    pub checked_error: Quantity,
    pub detection_probability: Quantity,
    /// Key digits published during the check. The efficiency figure leaves
    /// them out of `b_t`.
    pub disclosed_digits: usize,
    pub key_digits: usize,
    pub keys_agree: bool,
    pub efficiency: Quantity,
    pub capacity_bits: Quantity,
    pub attack: Option<AttackReport>,
}

impl RunSummary {
    fn new(t: &SessionTranscript, attack: Option<&AttackReport>) -> Result<Self> {
        let family = t.family;
        let labels = t.prepared.len();
        let checks = t.sift.check_positions.len();
        let analytic = attack.and_then(|a| a.analytic_label_error);
        let error_for_detection = analytic.unwrap_or(t.label_error_rate());
        let detection = match analytic {
            Some(_) => Quantity::analytic(detection_probability(error_for_detection, checks)),
            None => Quantity::sampled(detection_probability(error_for_detection, checks), labels),
        };
        let eta = efficiency(
            &Accounting::Gcore {
                dim: family.dim,
                particles: family.particles,
            }
            .input()?,
        )?;
        let (bits, _) = capacity(t.operations.len().max(1), family.particles, family.dim)?;
        Ok(Self {
            config: t.config.clone(),
            family,
            units: t.operations.len(),
            labels,
            verdict: t.verdict(),
            label_error: Quantity::sampled(t.label_error_rate(), labels),
            analytic_label_error: analytic.map(Quantity::analytic),
            checked_error: Quantity::sampled(t.checked_error_rate(), checks),
            detection_probability: detection,
            disclosed_digits: t.disclosed_digits(),
            key_digits: t.sift.alice_key.len(),
            keys_agree: t.sift.alice_key == t.sift.bob_key,
            efficiency: Quantity::analytic(eta),
            capacity_bits: Quantity::analytic(if t.operations.is_empty() { 0.0 } else { bits }),
            attack: attack.cloned(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFigure {
    pub dim: usize,
    pub fidelity: Quantity,
    pub disturbance: Quantity,
    pub information: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub runs: Vec<RunSummary>,
    pub run_count: usize,
    pub detected: usize,
    pub thresholds: Vec<ThresholdFigure>,
    /// Paths of CSV curves written alongside the report.
    pub curve_files: Vec<String>,
    pub ledger: Option<Ledger>,
}

impl SimulationReport {
    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| GcoreError::Serde(e.to_string()))?;
        serde_json::to_string(&value).map_err(|e| GcoreError::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GcoreError::Serde(e.to_string()))
    }
}

/// Collects runs, each optionally paired with its attack report, into a
/// report.
pub fn emit_report(
    runs: &[(SessionTranscript, Option<AttackReport>)],
    curve_files: &[String],
    ledger: Option<Ledger>,
) -> Result<SimulationReport> {
    let runs = runs
        .iter()
        .map(|(t, a)| RunSummary::new(t, a.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let thresholds = [2, 3]
        .into_iter()
        .map(|d| {
            let t = security_threshold(d)?;
            Ok(ThresholdFigure {
                dim: d,
                fidelity: Quantity::analytic(t.fidelity),
                disturbance: Quantity::analytic(t.disturbance),
                information: Quantity::analytic(t.information),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport {
        run_count: runs.len(),
        detected: runs
            .iter()
            .filter(|r| r.verdict == Verdict::Eavesdropped)
            .count(),
        runs,
        thresholds,
        curve_files: curve_files.to_vec(),
        ledger,
    })
}

/// Writes `contents` to `path` through a temporary sibling file, so a
/// failure never leaves a partial file behind.
pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    let io = |source| GcoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| GcoreError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io)
}
