use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attacks::{
    bob_fidelity, eve_outcome_distribution, fourier_dual, misgrouped_density_with,
    mutual_information, optimal_cloner, optimal_eve_fidelity, paper_error_rate, security_threshold,
    ClonerAmplitudes, Source,
};
use crate::error::Result;
use crate::states::{measure_in_family, Family, TOL_EXACT};

use super::{capacity, efficiency, key_guess_probability, Accounting};

/// One reproduced figure and the tolerance it was checked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerItem {
    pub name: String,
    pub expected: f64,
    pub reproduced: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl LedgerItem {
    fn new(name: impl Into<String>, expected: f64, reproduced: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            reproduced,
            tolerance,
            pass: (reproduced - expected).abs() <= tolerance,
        }
    }
}

impl fmt::Display for LedgerItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6} ± {:e} (reproduced {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.expected,
            self.tolerance,
            self.reproduced
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub items: Vec<LedgerItem>,
}

impl Ledger {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn failures(&self) -> usize {
        self.items.iter().filter(|i| !i.pass).count()
    }
}

impl fmt::Display for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        write!(
            f,
            "{} of {} items pass",
            self.items.len() - self.failures(),
            self.items.len()
        )
    }
}

fn max_deviation(values: &[f64], target: f64) -> f64 {
    values
        .iter()
        .map(|p| (p - target).abs())
        .fold(0.0, f64::max)
}

/// Recomputes every published figure the simulator can reproduce.
pub fn verify_paper() -> Result<Ledger> {
    let mut items = Vec::new();
    let mut push = |name: &str, expected: f64, reproduced: f64, tol: f64| {
        items.push(LedgerItem::new(name, expected, reproduced, tol));
    };

    let gcore = efficiency(
        &Accounting::Gcore {
            dim: 2,
            particles: 3,
        }
        .input()?,
    )?;
    push("efficiency GCORE", 1.0, gcore, TOL_EXACT);
    push(
        "efficiency BB84",
        0.25,
        efficiency(&Accounting::Bb84.input()?)?,
        TOL_EXACT,
    );
    push(
        "efficiency EPR",
        0.5,
        efficiency(&Accounting::Epr.input()?)?,
        TOL_EXACT,
    );

    push("capacity 2 qubits", 2.0, capacity(1, 2, 2)?.0, TOL_EXACT);
    push("capacity 3 qubits", 3.0, capacity(1, 3, 2)?.0, TOL_EXACT);
    push(
        "capacity 2 qutrits",
        9f64.log2(),
        capacity(1, 2, 3)?.0,
        TOL_EXACT,
    );
    push(
        "capacity 3 qutrits",
        27f64.log2(),
        capacity(1, 3, 3)?.0,
        TOL_EXACT,
    );
    push(
        "log2 key guess 100 triplets",
        -300.0,
        key_guess_probability(2, 300)?,
        TOL_EXACT,
    );

    // Both error conventions, side by side.
    push("error (1-1/8)^3", 0.6699, paper_error_rate(8, 3)?, 5e-5);
    push("error (1-1/8)^2", 0.7656, paper_error_rate(8, 2)?, 5e-5);
    push("error (1-1/9)^2", 0.7901, paper_error_rate(9, 2)?, 5e-5);
    push(
        "error uniform outcome D=8",
        0.875,
        paper_error_rate(8, 1)?,
        TOL_EXACT,
    );
    push(
        "error uniform outcome D=9",
        8.0 / 9.0,
        paper_error_rate(9, 1)?,
        TOL_EXACT,
    );

    let ghz = Family::new(3, 2)?;
    let bell = Family::new(2, 3)?;
    let p8 = eve_outcome_distribution(ghz, &[1, 2, 3])?;
    push(
        "eve outcome 3 qubits",
        0.0,
        max_deviation(&p8, 0.125),
        TOL_EXACT,
    );
    let p9 = eve_outcome_distribution(bell, &[1, 2])?;
    push(
        "eve outcome 2 qutrits",
        0.0,
        max_deviation(&p9, 1.0 / 9.0),
        TOL_EXACT,
    );
    let rho = misgrouped_density_with(ghz, &[1, 2, 3], Source::Label(0))?;
    let p = measure_in_family(&rho, ghz)?.probabilities;
    push(
        "mis-grouped 3 qubits 12.5% each",
        0.0,
        max_deviation(&p, 0.125),
        TOL_EXACT,
    );

    let universal = ClonerAmplitudes::symmetric_for_fidelity(3, 0.75)?;
    push(
        "universal qutrit cloner F",
        0.75,
        bob_fidelity(&universal).fidelity,
        TOL_EXACT,
    );
    push(
        "universal qutrit cloner F_E",
        0.75,
        bob_fidelity(&fourier_dual(&universal)).fidelity,
        TOL_EXACT,
    );
    push(
        "optimal F_E at F=3/4",
        0.824915,
        optimal_cloner(0.75)?.eve_fidelity,
        1e-6,
    );
    push(
        "F_E at v=1, x=0",
        1.0 / 3.0,
        optimal_eve_fidelity(1.0, 3)?,
        TOL_EXACT,
    );

    let t3 = security_threshold(3)?;
    // Closed form against the bisection root of I_AB = I_AE.
    push("threshold d=3", t3.fidelity, t3.numeric_fidelity, 1e-9);
    push("threshold d=3 printed", 0.788675, t3.fidelity, 1e-6);
    push("disturbance d=3", 0.211325, t3.disturbance, 1e-6);
    let t2 = security_threshold(2)?;
    push("disturbance d=2", 0.146447, t2.disturbance, 1e-6);
    push("threshold d=2", t2.fidelity, t2.numeric_fidelity, 1e-9);
    push("information at threshold d=3", 0.6295, t3.information, 5e-4);
    let i_ae = mutual_information(optimal_eve_fidelity(t3.fidelity, 3)?, 3)?;
    push(
        "I_AB - I_AE at threshold d=3",
        0.0,
        t3.information - i_ae,
        TOL_EXACT,
    );

    Ok(Ledger { items })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_item_passes() {
        let ledger = verify_paper().unwrap();
        for item in &ledger.items {
            assert!(item.pass, "{item}");
        }
    }

    #[test]
    fn threshold_line_format() {
        let ledger = verify_paper().unwrap();
        let text = ledger.to_string();
        assert!(text.contains("threshold d=3: 0.788675 ± 1e-9"), "{text}");
        assert!(text.contains("error (1-1/8)^3"));
        assert!(text.contains("error uniform outcome D=8"));
    }

    #[test]
    fn failing_item_is_reported() {
        let item = LedgerItem::new("x", 1.0, 1.1, 1e-3);
        assert!(!item.pass);
        assert!(item.to_string().starts_with("FAIL x"));
    }
}
