use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Result};
use crate::permutation::{to_digits, KeyBlockStream};
use crate::protocol::{
    run_session_threads, AdversaryAction, CarrierUnit, ChannelLane, ParticleId, SessionConfig,
    SessionTranscript, SparseBasis,
};
use crate::states::{
    error_operator, measure_in_family, partial_trace, root_of_unity, DensityOperator, Family,
};

use super::misgroup::{misgrouped_density_with, Source};
use super::report::AttackReport;
use super::{offset_groups, validate_offsets, AttackConfig, ClonerAmplitudes};

/// Error figure `(1 − 1/D)^k` for a basis of size `D` and `k` distinct
/// sources in a regrouped tuple.
pub fn paper_error_rate(basis_size: usize, sources: usize) -> Result<f64> {
    if basis_size < 2 || sources < 1 {
        return domain(format!(
            "need D ≥ 2 and k ≥ 1, got D = {basis_size}, k = {sources}"
        ));
    }
    Ok((1.0 - 1.0 / basis_size as f64).powi(sources as i32))
}

/// Distribution of Eve's outcomes on a tuple regrouped by `offsets` when
/// Alice's labels are uniform.
pub fn eve_outcome_distribution(family: Family, offsets: &[usize]) -> Result<Vec<f64>> {
    let rho = misgrouped_density_with(family, offsets, Source::UniformMixture)?;
    Ok(measure_in_family(&rho, family)?.probabilities)
}

const ORACLE_BUDGET: f64 = 5e7;

/// Bob's exact per-label error rate after Eve measures tuples regrouped by
/// `offsets` and forwards them, averaged over Alice's label.
///
/// Only the source state of the label under test is correlated; every
/// other particle in Eve's tuples is maximally mixed once Alice's labels
/// are averaged. If Eve observes `e_g` on the tuple holding lanes `L_g` of
/// that state, Bob receives `⊗_g Tr_rest |e_g⟩⟨e_g|`, and the outcome
/// probabilities follow from the same operators.
pub fn intercept_oracle(family: Family, offsets: &[usize]) -> Result<f64> {
    validate_offsets(family, offsets)?;
    let d = family.dim;
    let n = family.particles;
    let size = family.size();
    let groups = offset_groups(offsets);
    let m = groups.len();
    if (size as f64).powi(m as i32 + 1) > ORACLE_BUDGET {
        return domain(format!("oracle for {family} with {m} sources is too large"));
    }
    let others: usize = groups.iter().map(|g| n - g.len()).sum();
    let dims = family.local_dims();
    let basis = family.basis();
    // reduced[g][e] = Tr over lanes outside g of |e⟩⟨e|
    let reduced: Vec<Vec<DensityOperator>> = groups
        .iter()
        .map(|g| {
            basis
                .iter()
                .map(|e| partial_trace(&e.density(), g, &dims))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let sparse = SparseBasis::new(family);
    let weight = (d as f64).powi(-(others as i32));

    let mut total_correct = 0.0;
    for a in 0..size {
        let support: Vec<(Vec<usize>, Complex64)> = sparse
            .state(a)
            .iter()
            .map(|&(i, amp)| (to_digits(i, d, n), amp))
            .collect();
        let sub = |digits: &[usize], g: &[usize]| g.iter().fold(0, |acc, &l| acc * d + digits[l]);
        let mut choice = vec![0usize; m];
        let mut sum = 0.0;
        loop {
            let mut q = Complex64::new(0.0, 0.0);
            for (ds, s) in &support {
                for (dt, t) in &support {
                    let mut w = s.conj() * t;
                    for (gi, g) in groups.iter().enumerate() {
                        w *= reduced[gi][choice[gi]].matrix()[(sub(ds, g), sub(dt, g))];
                    }
                    q += w;
                }
            }
            sum += q.re * q.re;
            let mut i = 0;
            while i < m {
                choice[i] += 1;
                if choice[i] < size {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
        total_correct += weight * sum;
    }
    Ok(1.0 - total_correct / size as f64)
}

/// Bob's exact per-label error when every particle crosses the cloner
/// channel for first-clone fidelity `fidelity`.
pub fn cloner_channel_error(family: Family, fidelity: f64) -> Result<f64> {
    let a = ClonerAmplitudes::symmetric_for_fidelity(family.dim, fidelity)?;
    let d = family.dim;
    let n = family.particles;
    let size = family.size();
    let local = d * d;
    if (local as f64).powi(n as i32) * size as f64 > ORACLE_BUDGET {
        return domain(format!("cloner oracle for {family} is too large"));
    }
    let probs = a.weights();
    let sparse = SparseBasis::new(family);
    let basis = family.basis();
    let mut correct = 0.0;
    for (a_label, state) in basis.iter().enumerate() {
        let dense = state.amplitudes();
        let support: Vec<(Vec<usize>, Complex64)> = sparse
            .state(a_label)
            .iter()
            .map(|&(i, amp)| (to_digits(i, d, n), amp))
            .collect();
        let mut choice = vec![0usize; n];
        loop {
            let p: f64 = choice.iter().map(|&r| probs[r]).product();
            if p > 0.0 {
                let mut overlap = Complex64::new(0.0, 0.0);
                for (digits, amp) in &support {
                    let mut phase = Complex64::new(1.0, 0.0);
                    let mut index = 0;
                    for (x, &r) in digits.iter().zip(&choice) {
                        // row = phase index, column = shift index
                        let (ph, shift) = (r / d, r % d);
                        phase *= root_of_unity(x * ph, d);
                        index = index * d + (x + shift) % d;
                    }
                    overlap += dense[index].conj() * phase * amp;
                }
                correct += p * overlap.norm_sqr();
            }
            let mut i = 0;
            while i < n {
                choice[i] += 1;
                if choice[i] < local {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    Ok(1.0 - correct / size as f64)
}

/// Eve's action on one unit in flight.
pub(crate) fn adversary_act<R: Rng + ?Sized>(
    attack: &AttackConfig,
    eve_key: Option<&KeyBlockStream>,
    unit: &mut CarrierUnit,
    lanes: &[ChannelLane],
    basis: &SparseBasis,
    rng: &mut R,
) -> Result<AdversaryAction> {
    let family = basis.family();
    let size = basis.len();
    match attack {
        AttackConfig::InterceptResend { offsets, .. } => {
            let (guess, tuples) = match offsets {
                Some(o) => {
                    let tuples: Vec<Vec<ParticleId>> = (0..size)
                        .map(|i| {
                            o.iter()
                                .enumerate()
                                .map(|(lane, &off)| ParticleId {
                                    position: (i + off - 1) % size,
                                    lane,
                                })
                                .collect()
                        })
                        .collect();
                    (None, tuples)
                }
                None => {
                    let (k, perm) = match eve_key {
                        Some(stream) => {
                            let (k, p) = stream.block_for_unit(unit.index);
                            (k, p.clone())
                        }
                        None => {
                            let k = rng.random_range(0..size);
                            (
                                k,
                                crate::permutation::general_permutation(
                                    family.dim,
                                    family.particles,
                                    k,
                                )?,
                            )
                        }
                    };
                    (
                        Some(k),
                        crate::protocol::session_regroup(lanes, unit.index, size, &perm)?,
                    )
                }
            };
            let outcomes = tuples
                .iter()
                .map(|t| unit.register.measure(t, basis, rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(AdversaryAction::InterceptResend {
                unit: unit.index,
                guess,
                outcomes,
            })
        }
        AttackConfig::Cloner { fidelity } => {
            let a = ClonerAmplitudes::symmetric_for_fidelity(family.dim, *fidelity)?;
            let weights = a.weights();
            let d = family.dim;
            let mut disturbed = 0;
            for lane in lanes {
                for transit in &lane.entries {
                    let mut u = rng.random::<f64>();
                    let mut r = weights.len() - 1;
                    for (i, &w) in weights.iter().enumerate() {
                        if u < w {
                            r = i;
                            break;
                        }
                        u -= w;
                    }
                    if r != 0 {
                        let op = error_operator(d, r % d, r / d)?;
                        unit.register.apply_local(transit.particle, op.matrix())?;
                        disturbed += 1;
                    }
                }
            }
            Ok(AdversaryAction::Cloner {
                unit: unit.index,
                disturbed,
            })
        }
    }
}

/// Runs `config` with `attack` in the channel and summarizes the damage.
pub fn intercept_resend(
    config: &SessionConfig,
    attack: &AttackConfig,
    threads: usize,
) -> Result<(SessionTranscript, AttackReport)> {
    let config = SessionConfig {
        adversary: Some(attack.clone()),
        ..config.clone()
    };
    let transcript = run_session_threads(&config, threads)?;
    let report = AttackReport::from_transcript(&transcript)?;
    Ok((transcript, report))
}

pub(crate) fn expected_label_error(transcript: &SessionTranscript) -> Result<Option<f64>> {
    let config = &transcript.config;
    let family = transcript.family;
    if config
        .receiver_key
        .as_deref()
        .is_some_and(|k| k != config.key)
    {
        return Ok(None);
    }
    let Some(attack) = &config.adversary else {
        return Ok(Some(0.0));
    };
    match attack {
        AttackConfig::InterceptResend {
            offsets: Some(o), ..
        } => intercept_oracle(family, o).map(Some),
        AttackConfig::InterceptResend { offsets: None, .. } => {
            let mut misgrouping = vec![2; family.particles];
            misgrouping[0] = 1;
            let wrong = intercept_oracle(family, &misgrouping)?;
            let missed = transcript
                .adversary
                .iter()
                .filter(|a| match a {
                    AdversaryAction::InterceptResend {
                        unit,
                        guess: Some(g),
                        ..
                    } => *g != transcript.operations[*unit],
                    _ => false,
                })
                .count();
            Ok(Some(
                wrong * missed as f64 / transcript.operations.len() as f64,
            ))
        }
        AttackConfig::Cloner { fidelity } => cloner_channel_error(family, *fidelity).map(Some),
    }
}
