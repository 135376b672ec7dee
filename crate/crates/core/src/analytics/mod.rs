//! Figures of merit for whole protocols and the serialized run report.

mod ledger;
mod report;

pub use ledger::{verify_paper, Ledger, LedgerItem};
pub use report::{
    emit_report, write_output, Provenance, Quantity, RunSummary, SimulationReport, ThresholdFigure,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::states::TOL_EXACT;

/// Bits and carriers counted by the efficiency figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyInput {
    /// Secret bits received.
    pub b_s: f64,
    /// Quantum carriers used, in qudit equivalents.
    pub q_t: f64,
    /// Classical bits exchanged.
    pub b_t: f64,
}

impl EfficiencyInput {
    pub fn new(b_s: f64, q_t: f64, b_t: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(b_s) && ok(q_t) && ok(b_t)) {
            return domain(format!(
                "counts must be finite and nonnegative: ({b_s}, {q_t}, {b_t})"
            ));
        }
        if q_t + b_t <= 0.0 {
            return domain("q_t + b_t must be positive");
        }
        Ok(Self { b_s, q_t, b_t })
    }
}

/// Bookkeeping conventions for the three protocols compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "kebab-case")]
pub enum Accounting {
    /// One unit of d^N states carries d^N·log2 d^N bits on as many carriers
    /// with no public discussion per bit.
    Gcore { dim: usize, particles: usize },
    /// Half the qubits survive basis sifting and each kept bit costs two
    /// classical bits of basis discussion.
    Bb84,
    /// One bit per EPR pair.
    Epr,
}

impl Accounting {
    pub fn input(&self) -> Result<EfficiencyInput> {
        match *self {
            Accounting::Gcore { dim, particles } => {
                let (bits, _) = capacity(1, particles, dim)?;
                let b = (dim as f64).powi(particles as i32) * bits;
                EfficiencyInput::new(b, b, 0.0)
            }
            Accounting::Bb84 => EfficiencyInput::new(1.0, 2.0, 2.0),
            Accounting::Epr => EfficiencyInput::new(1.0, 2.0, 0.0),
        }
    }
}

/// `η = b_s / (q_t + b_t)`, never above 1.
pub fn efficiency(input: &EfficiencyInput) -> Result<f64> {
    let input = EfficiencyInput::new(input.b_s, input.q_t, input.b_t)?;
    let eta = input.b_s / (input.q_t + input.b_t);
    if eta > 1.0 + TOL_EXACT {
        return domain(format!("efficiency {eta} exceeds 1"));
    }
    Ok(eta.min(1.0))
}

/// Bits carried by `units` units of N-particle d-level states: the total
/// `M·log2 d^N` and the per-particle share `log2 d^N / (N·d^N)`.
pub fn capacity(units: usize, particles: usize, dim: usize) -> Result<(f64, f64)> {
    if units == 0 || particles == 0 || dim < 2 {
        return domain(format!(
            "need positive units and particles and d ≥ 2, got ({units}, {particles}, {dim})"
        ));
    }
    let per_symbol = particles as f64 * (dim as f64).log2();
    let states = (dim as f64).powi(particles as i32);
    Ok((
        units as f64 * per_symbol,
        per_symbol / (particles as f64 * states),
    ))
}

/// `log2` of the chance of guessing `digits` uniform base-`d` digits.
pub fn key_guess_probability(d: usize, digits: usize) -> Result<f64> {
    if d < 2 {
        return domain(format!("key base must be at least 2, got {d}"));
    }
    if digits == 0 {
        return Ok(0.0);
    }
    Ok(-(digits as f64) * (d as f64).log2())
}
