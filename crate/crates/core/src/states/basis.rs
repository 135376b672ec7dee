use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c, checked_pow, root_of_unity, CVector, StateVector, MAX_DIM};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// N-qubit GHZ basis state `(|j⟩|0⟩ ± |2^{N−1}−j−1⟩|1⟩)/√2`, where `j` is
/// written on the first N−1 qubits.
pub fn ghz_basis_state(particles: usize, j: usize, sign: Sign) -> Result<StateVector> {
    if particles < 2 {
        return domain(format!(
            "GHZ states need at least 2 qubits, got {particles}"
        ));
    }
    if particles > 9 {
        return domain(format!(
            "{particles} qubits exceed the dimension cap {MAX_DIM}"
        ));
    }
    let half = 1usize << (particles - 1);
    if j >= half {
        return domain(format!("j = {j} out of range [0, {half})"));
    }
    let dim = half * 2;
    let mut amps = CVector::zeros(dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    amps[2 * j] = c(r, 0.0);
    amps[2 * (half - j - 1) + 1] = c(sign.factor() * r, 0.0);
    Ok(StateVector::from_normalized(vec![2; particles], amps))
}

/// Two-qudit generalized Bell state `Σ_j ω^{jn} |j⟩|j+m⟩ / √d`.
pub fn qudit_bell_state(d: usize, n: usize, m: usize) -> Result<StateVector> {
    multi_entangled_state(d, 2, n, &[m])
}

/// N-qudit maximally entangled state
/// `Σ_j ω^{j·phase} |j⟩|j+i₁⟩…|j+i_{N−1}⟩ / √d` with shifts taken mod d.
pub fn multi_entangled_state(
    d: usize,
    particles: usize,
    phase: usize,
    shifts: &[usize],
) -> Result<StateVector> {
    if d < 2 || particles < 2 {
        return domain(format!(
            "need d ≥ 2 and N ≥ 2, got d = {d}, N = {particles}"
        ));
    }
    if shifts.len() != particles - 1 {
        return domain(format!(
            "expected {} shift indices, got {}",
            particles - 1,
            shifts.len()
        ));
    }
    if phase >= d || shifts.iter().any(|&s| s >= d) {
        return domain(format!("phase and shift indices must lie in [0, {d})"));
    }
    let dim = match checked_pow(d, particles) {
        Some(n) if n <= MAX_DIM => n,
        _ => return domain(format!("d^N exceeds the dimension cap {MAX_DIM}")),
    };
    let norm = 1.0 / (d as f64).sqrt();
    let mut amps = CVector::zeros(dim);
    for j in 0..d {
        let index = shifts.iter().fold(j, |acc, s| acc * d + (j + s) % d);
        amps[index] = root_of_unity(j * phase, d) * norm;
    }
    Ok(StateVector::from_normalized(vec![d; particles], amps))
}

/// Maps a GHZ label `(j, sign)` to the `(phase, shifts)` of the d = 2
/// multi-qudit family spanning the same ray, plus the global phase `g`
/// with `ghz = g · multi`.
pub fn ghz_label_to_multi(
    particles: usize,
    j: usize,
    sign: Sign,
) -> Result<(usize, Vec<usize>, Complex64)> {
    if particles < 2 || j >= 1usize << (particles - 1) {
        return domain("GHZ label out of range");
    }
    // Digits of the |j⟩|0⟩ term, first qubit most significant.
    let mut digits: Vec<usize> = (0..particles - 1).rev().map(|b| (j >> b) & 1).collect();
    digits.push(0);
    let lead = digits[0];
    let shifts = digits[1..].iter().map(|&x| (x + 2 - lead) % 2).collect();
    let phase = match sign {
        Sign::Plus => 0,
        Sign::Minus => 1,
    };
    // When the |j⟩|0⟩ term starts with 1 it carries the multi-state's
    // (−1)^phase factor, so the minus states pick up an overall −1.
    let global = if lead == 1 && phase == 1 { -1.0 } else { 1.0 };
    Ok((phase, shifts, c(global, 0.0)))
}
