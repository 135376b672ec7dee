use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::adversary_act;
use crate::error::{GcoreError, Result};
use crate::permutation::{
    apply_rearrangement, invert_rearrangement, switch_schedule, to_digits, ControlKey,
    PermutationOp, SwitchSchedule,
};
use crate::states::{BasisLabel, Family};

use super::config::{SessionConfig, SessionPlan};
use super::register::{ParticleId, Register, SparseBasis};

/// One block of d^N prepared states sharing a key block.
#[derive(Debug, Clone)]
pub struct CarrierUnit {
    pub index: usize,
    pub family: Family,
    /// Index k of the operation E_k applied to this unit.
    pub operation: usize,
    /// Label indices of the prepared states, in Alice's order.
    pub labels: Vec<usize>,
    pub(crate) register: Register,
}

impl CarrierUnit {
    /// Particle `lane` of the state prepared at `position`.
    pub fn particle(&self, position: usize, lane: usize) -> ParticleId {
        ParticleId { position, lane }
    }
}

/// A particle leaving a lane at a given slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transit {
    pub unit: usize,
    pub particle: ParticleId,
    pub slot: u64,
}

/// The ordered stream one transmission line carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLane {
    /// 1-based lane number.
    pub lane: usize,
    pub entries: Vec<Transit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Clean,
    Eavesdropped,
}

/// What the adversary did to one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdversaryAction {
    InterceptResend {
        unit: usize,
        /// Operation Eve assumed, when she grouped by a key guess.
        guess: Option<usize>,
        /// Label indices Eve observed, one per regrouped tuple.
        outcomes: Vec<usize>,
    },
    Cloner {
        unit: usize,
        /// Particles that picked up a non-identity error.
        disturbed: usize,
    },
}

impl AdversaryAction {
    pub fn unit(&self) -> usize {
        match self {
            AdversaryAction::InterceptResend { unit, .. }
            | AdversaryAction::Cloner { unit, .. } => *unit,
        }
    }
}

/// Result of comparing a random check subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftOutcome {
    pub verdict: Verdict,
    /// Sorted indices of the compared labels.
    pub check_positions: Vec<usize>,
    pub mismatches: usize,
    /// Digits from Alice's unchecked labels.
    pub alice_key: Vec<usize>,
    /// Digits from Bob's unchecked labels.
    pub bob_key: Vec<usize>,
}

/// Every artifact of a session, in unit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub family: Family,
    /// Alice's operation index per unit.
    pub operations: Vec<usize>,
    /// Operation index Bob undid per unit.
    pub receiver_operations: Vec<usize>,
    /// Delay-line programs for each operation used, keyed by operation index.
    pub schedules: BTreeMap<usize, SwitchSchedule>,
    pub prepared: Vec<usize>,
    pub measured: Vec<usize>,
    pub adversary: Vec<AdversaryAction>,
    pub sift: SiftOutcome,
    /// Label disagreements over the whole sequence, checked or not.
    pub label_errors: usize,
}

impl SessionTranscript {
    pub fn verdict(&self) -> Verdict {
        self.sift.verdict
    }

    pub fn label_error_rate(&self) -> f64 {
        self.label_errors as f64 / self.prepared.len() as f64
    }

    /// Error rate on the checked labels only.
    pub fn checked_error_rate(&self) -> f64 {
        self.sift.mismatches as f64 / self.sift.check_positions.len() as f64
    }

    /// Key digits revealed during the check.
    pub fn disclosed_digits(&self) -> usize {
        self.sift.check_positions.len() * self.family.particles
    }

    /// Per-unit label error counts.
    pub fn unit_errors(&self) -> Vec<usize> {
        let size = self.family.size();
        self.prepared
            .chunks(size)
            .zip(self.measured.chunks(size))
            .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
            .collect()
    }

    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| GcoreError::Serde(e.to_string()))?;
        serde_json::to_string(&value).map_err(|e| GcoreError::Serde(e.to_string()))
    }
}

fn unit_rng(seed: u64, unit: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit as u64 + 1);
    rng
}

fn sift_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

fn prepare_unit<R: Rng + ?Sized>(
    index: usize,
    basis: &SparseBasis,
    perm: &PermutationOp,
    operation: usize,
    labels: Option<&[usize]>,
    rng: &mut R,
) -> Result<(CarrierUnit, Vec<ChannelLane>)> {
    let family = basis.family();
    let size = family.size();
    let mut chosen: Vec<usize> = labels.map(|l| l.to_vec()).unwrap_or_default();
    while chosen.len() < size {
        chosen.push(rng.random_range(0..size));
    }
    let register = Register::prepare(basis, &chosen);
    let base = (index * size) as u64;
    let lanes = (0..family.particles)
        .map(|lane| {
            let natural: Vec<ParticleId> = (0..size)
                .map(|position| ParticleId { position, lane })
                .collect();
            let order = if lane == 0 {
                natural
            } else {
                apply_rearrangement(&natural, perm)?
            };
            let entries = order
                .into_iter()
                .enumerate()
                .map(|(pos, particle)| Transit {
                    unit: index,
                    particle,
                    slot: base + pos as u64,
                })
                .collect();
            Ok(ChannelLane {
                lane: lane + 1,
                entries,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let unit = CarrierUnit {
        index,
        family,
        operation,
        labels: chosen,
        register,
    };
    Ok((unit, lanes))
}

/// Draws uniform labels for every unit, applies each unit's key-selected
/// rearrangement to lanes 2..N and lays the particles out one per slot.
pub fn alice_prepare<R: Rng + ?Sized>(
    config: &SessionConfig,
    rng: &mut R,
) -> Result<(Vec<CarrierUnit>, Vec<ChannelLane>)> {
    let plan = config.plan()?;
    let mut units = Vec::with_capacity(config.units);
    let mut lanes: Vec<ChannelLane> = (1..=config.particles)
        .map(|lane| ChannelLane {
            lane,
            entries: Vec::new(),
        })
        .collect();
    for u in 0..config.units {
        let (k, perm) = plan.alice.block_for_unit(u);
        let (unit, unit_lanes) = prepare_unit(u, &plan.basis, perm, k, None, rng)?;
        for (all, part) in lanes.iter_mut().zip(unit_lanes) {
            all.entries.extend(part.entries);
        }
        units.push(unit);
    }
    Ok((units, lanes))
}

/// Regroups one unit's lane streams into measurement tuples, undoing
/// `perm` on lanes 2..N. Checks that every lane carries exactly the unit's
/// slots in increasing order.
pub(crate) fn regroup(
    lanes: &[ChannelLane],
    unit: usize,
    size: usize,
    perm: &PermutationOp,
) -> Result<Vec<Vec<ParticleId>>> {
    let base = (unit * size) as u64;
    let mut columns = Vec::with_capacity(lanes.len());
    for (i, lane) in lanes.iter().enumerate() {
        let slots: Vec<u64> = lane.entries.iter().map(|t| t.slot).collect();
        let expected: Vec<u64> = (base..base + size as u64).collect();
        if slots != expected {
            return Err(GcoreError::Protocol(format!(
                "lane {} of unit {unit} is incomplete or out of order",
                lane.lane
            )));
        }
        let particles: Vec<ParticleId> = lane.entries.iter().map(|t| t.particle).collect();
        columns.push(if i == 0 {
            particles
        } else {
            invert_rearrangement(&particles, perm)?
        });
    }
    Ok((0..size)
        .map(|pos| columns.iter().map(|c| c[pos]).collect())
        .collect())
}

/// Splits session-wide lane streams into per-unit slices.
fn split_lanes(lanes: &[ChannelLane], size: usize) -> Result<Vec<Vec<ChannelLane>>> {
    let first = lanes
        .first()
        .ok_or_else(|| GcoreError::Protocol("no lanes received".into()))?;
    if first.entries.is_empty() {
        return Err(GcoreError::Protocol("received an empty stream".into()));
    }
    if lanes.iter().any(|l| l.entries.len() != first.entries.len())
        || first.entries.len() % size != 0
    {
        return Err(GcoreError::Protocol(
            "lane streams have inconsistent lengths".into(),
        ));
    }
    let count = first.entries.len() / size;
    Ok((0..count)
        .map(|u| {
            lanes
                .iter()
                .map(|l| ChannelLane {
                    lane: l.lane,
                    entries: l.entries[u * size..(u + 1) * size].to_vec(),
                })
                .collect()
        })
        .collect())
}

fn measure_unit<R: Rng + ?Sized>(
    unit: &mut CarrierUnit,
    lanes: &[ChannelLane],
    perm: &PermutationOp,
    basis: &SparseBasis,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let tuples = regroup(lanes, unit.index, basis.len(), perm)?;
    tuples
        .iter()
        .map(|t| unit.register.measure(t, basis, rng))
        .collect()
}

/// Undoes each unit's rearrangement with `key`, regroups the particles into
/// tuples and measures them in the entangled basis.
pub fn bob_recover<R: Rng + ?Sized>(
    units: &mut [CarrierUnit],
    lanes: &[ChannelLane],
    key: &ControlKey,
    rng: &mut R,
) -> Result<Vec<BasisLabel>> {
    let family = units
        .first()
        .map(|u| u.family)
        .ok_or_else(|| GcoreError::Protocol("no carrier units".into()))?;
    if lanes.len() != family.particles {
        return Err(GcoreError::Protocol(format!(
            "expected {} lanes, got {}",
            family.particles,
            lanes.len()
        )));
    }
    let basis = SparseBasis::new(family);
    let stream = crate::permutation::key_block_stream(key, family.particles)?;
    let per_unit = split_lanes(lanes, family.size())?;
    if per_unit.len() != units.len() {
        return Err(GcoreError::Protocol(format!(
            "streams carry {} units, {} were sent",
            per_unit.len(),
            units.len()
        )));
    }
    let mut labels = Vec::new();
    for (unit, unit_lanes) in units.iter_mut().zip(&per_unit) {
        let (_, perm) = stream.block_for_unit(unit.index);
        for idx in measure_unit(unit, unit_lanes, perm, &basis, rng)? {
            labels.push(BasisLabel::from_index(family, idx)?);
        }
    }
    Ok(labels)
}

/// Probability that at least one of `checks` compared labels disagrees when
/// each disagrees independently with probability `error_rate`.
pub fn detection_probability(error_rate: f64, checks: usize) -> f64 {
    if error_rate >= 1.0 {
        return if checks == 0 { 0.0 } else { 1.0 };
    }
    -((checks as f64) * (-error_rate).ln_1p()).exp_m1()
}

/// Compares a uniformly random subset of `check_count` labels and turns
/// the remaining ones into key digits, most significant digit first.
pub fn sift_and_check<R: Rng + ?Sized>(
    family: Family,
    prepared: &[usize],
    measured: &[usize],
    check_count: usize,
    rng: &mut R,
) -> Result<SiftOutcome> {
    if prepared.len() != measured.len() {
        return Err(GcoreError::Protocol(format!(
            "{} prepared labels but {} measured",
            prepared.len(),
            measured.len()
        )));
    }
    if check_count > prepared.len() {
        return Err(GcoreError::Protocol(
            "check subset larger than the sequence".into(),
        ));
    }
    let mut check_positions = sample(rng, prepared.len(), check_count).into_vec();
    check_positions.sort_unstable();
    let mismatches = check_positions
        .iter()
        .filter(|&&i| prepared[i] != measured[i])
        .count();
    let mut checked = vec![false; prepared.len()];
    for &i in &check_positions {
        checked[i] = true;
    }
    let digits = |labels: &[usize]| -> Vec<usize> {
        labels
            .iter()
            .zip(&checked)
            .filter(|(_, &c)| !c)
            .flat_map(|(&l, _)| to_digits(l, family.dim, family.particles))
            .collect()
    };
    Ok(SiftOutcome {
        verdict: if mismatches == 0 {
            Verdict::Clean
        } else {
            Verdict::Eavesdropped
        },
        check_positions,
        mismatches,
        alice_key: digits(prepared),
        bob_key: digits(measured),
    })
}

struct UnitRecord {
    operation: usize,
    receiver_operation: usize,
    prepared: Vec<usize>,
    measured: Vec<usize>,
    action: Option<AdversaryAction>,
}

fn run_unit(
    u: usize,
    config: &SessionConfig,
    plan: &SessionPlan,
    labels: Option<&[usize]>,
) -> Result<UnitRecord> {
    let mut rng = unit_rng(config.seed, u);
    let (k, perm) = plan.alice.block_for_unit(u);
    let (mut unit, lanes) = prepare_unit(u, &plan.basis, perm, k, labels, &mut rng)?;
    let action = match &config.adversary {
        Some(attack) => Some(adversary_act(
            attack,
            plan.eve.as_ref(),
            &mut unit,
            &lanes,
            &plan.basis,
            &mut rng,
        )?),
        None => None,
    };
    let (kb, bob_perm) = plan.bob.block_for_unit(u);
    let measured = measure_unit(&mut unit, &lanes, bob_perm, &plan.basis, &mut rng)?;
    Ok(UnitRecord {
        operation: k,
        receiver_operation: kb,
        prepared: unit.labels,
        measured,
        action,
    })
}

/// Runs a session on one thread. Identical configs give identical
/// transcripts.
pub fn run_session(config: &SessionConfig) -> Result<SessionTranscript> {
    run_session_threads(config, 1)
}

/// Runs a session with units spread over `threads` workers. Every unit
/// draws from its own seeded stream, so the transcript does not depend on
/// the thread count.
pub fn run_session_threads(config: &SessionConfig, threads: usize) -> Result<SessionTranscript> {
    run_with_labels(config, None, threads)
}

pub(crate) fn run_with_labels(
    config: &SessionConfig,
    labels: Option<&[usize]>,
    threads: usize,
) -> Result<SessionTranscript> {
    let plan = config.plan()?;
    let size = plan.family.size();
    let unit_labels = |u: usize| -> Option<&[usize]> {
        labels.map(|l| {
            let start = (u * size).min(l.len());
            let end = ((u + 1) * size).min(l.len());
            &l[start..end]
        })
    };
    let threads = threads.clamp(1, config.units);
    let records: Vec<UnitRecord> = if threads == 1 {
        (0..config.units)
            .map(|u| run_unit(u, config, &plan, unit_labels(u)))
            .collect::<Result<_>>()?
    } else {
        let chunk = config.units.div_ceil(threads);
        let plan = &plan;
        let unit_labels = &unit_labels;
        let parts: Vec<Result<Vec<UnitRecord>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    scope.spawn(move || {
                        let start = t * chunk;
                        let end = ((t + 1) * chunk).min(config.units);
                        (start..end)
                            .map(|u| run_unit(u, config, plan, unit_labels(u)))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("session worker panicked"))
                .collect()
        });
        let mut all = Vec::with_capacity(config.units);
        for part in parts {
            all.extend(part?);
        }
        all
    };

    let mut schedules = BTreeMap::new();
    let mut operations = Vec::with_capacity(records.len());
    let mut receiver_operations = Vec::with_capacity(records.len());
    let mut prepared = Vec::with_capacity(records.len() * size);
    let mut measured = Vec::with_capacity(records.len() * size);
    let mut adversary = Vec::new();
    for (u, r) in records.into_iter().enumerate() {
        if let std::collections::btree_map::Entry::Vacant(slot) = schedules.entry(r.operation) {
            let (_, perm) = plan.alice.block_for_unit(u);
            slot.insert(switch_schedule(
                perm,
                plan.family.particles,
                plan.family.dim,
            )?);
        }
        operations.push(r.operation);
        receiver_operations.push(r.receiver_operation);
        prepared.extend(r.prepared);
        measured.extend(r.measured);
        adversary.extend(r.action);
    }
    let label_errors = prepared
        .iter()
        .zip(&measured)
        .filter(|(a, b)| a != b)
        .count();
    let sift = sift_and_check(
        plan.family,
        &prepared,
        &measured,
        config.check_count(),
        &mut sift_rng(config.seed),
    )?;
    Ok(SessionTranscript {
        config: config.clone(),
        family: plan.family,
        operations,
        receiver_operations,
        schedules,
        prepared,
        measured,
        adversary,
        sift,
        label_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(particles: usize, dim: usize, key: &str, units: usize) -> SessionConfig {
        SessionConfig {
            particles,
            dim,
            key: key.into(),
            units,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn identity_key_keeps_natural_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, lanes) = alice_prepare(&cfg(3, 2, "000", 1), &mut rng).unwrap();
        for lane in &lanes {
            let positions: Vec<usize> = lane.entries.iter().map(|t| t.particle.position).collect();
            assert_eq!(positions, (0..8).collect::<Vec<_>>());
            let slots: Vec<u64> = lane.entries.iter().map(|t| t.slot).collect();
            assert_eq!(slots, (0..8).collect::<Vec<u64>>());
        }
    }

    #[test]
    fn e1_reorders_lower_lanes_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, lanes) = alice_prepare(&cfg(3, 2, "001", 1), &mut rng).unwrap();
        let order = |l: &ChannelLane| -> Vec<usize> {
            l.entries.iter().map(|t| t.particle.position + 1).collect()
        };
        assert_eq!(order(&lanes[0]), (1..=8).collect::<Vec<_>>());
        assert_eq!(order(&lanes[1]), vec![2, 1, 4, 3, 6, 5, 8, 7]);
        assert_eq!(order(&lanes[2]), vec![2, 1, 4, 3, 6, 5, 8, 7]);
    }

    #[test]
    fn honest_recovery_is_exact() {
        for (n, d, key) in [(3, 2, "011"), (2, 3, "21"), (2, 2, "10"), (3, 3, "102")] {
            let config = cfg(n, d, key, 4);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let (mut units, lanes) = alice_prepare(&config, &mut rng).unwrap();
            let key = config.control_key().unwrap();
            let measured = bob_recover(&mut units, &lanes, &key, &mut rng).unwrap();
            let prepared: Vec<usize> = units.iter().flat_map(|u| u.labels.clone()).collect();
            let got: Vec<usize> = measured.iter().map(|l| l.index()).collect();
            assert_eq!(got, prepared, "family ({n},{d})");
        }
    }

    #[test]
    fn empty_or_truncated_streams_fail() {
        let config = cfg(3, 2, "001", 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut units, mut lanes) = alice_prepare(&config, &mut rng).unwrap();
        let key = config.control_key().unwrap();
        let mut empty = lanes.clone();
        for l in &mut empty {
            l.entries.clear();
        }
        assert!(matches!(
            bob_recover(&mut units, &empty, &key, &mut rng),
            Err(GcoreError::Protocol(_))
        ));
        lanes[1].entries.pop();
        assert!(bob_recover(&mut units, &lanes, &key, &mut rng).is_err());
    }

    #[test]
    fn sifting_examples() {
        let family = Family::new(3, 2).unwrap();
        let labels: Vec<usize> = (0..16).map(|i| i % 8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = sift_and_check(family, &labels, &labels, 4, &mut rng).unwrap();
        assert_eq!(out.verdict, Verdict::Clean);
        assert_eq!(out.bob_key.len(), 12 * 3);
        assert_eq!(out.alice_key, out.bob_key);

        let mut corrupted = labels.clone();
        let i = out.check_positions[0];
        corrupted[i] = (corrupted[i] + 1) % 8;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = sift_and_check(family, &labels, &corrupted, 4, &mut rng).unwrap();
        assert_eq!(out.verdict, Verdict::Eavesdropped);
        assert_eq!(out.mismatches, 1);
        assert!(sift_and_check(family, &labels, &labels[1..], 4, &mut rng).is_err());
    }

    #[test]
    fn key_digits_are_msb_first() {
        let family = Family::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = sift_and_check(family, &[5, 7], &[5, 7], 1, &mut rng).unwrap();
        let kept = if out.check_positions == vec![0] {
            vec![2, 1]
        } else {
            vec![1, 2]
        };
        assert_eq!(out.bob_key, kept);
    }

    #[test]
    fn detection_formula() {
        assert!((detection_probability(0.875, 10) - (1.0 - 0.125f64.powi(10))).abs() < 1e-15);
        assert_eq!(detection_probability(0.0, 10), 0.0);
        assert_eq!(detection_probability(1.0, 1), 1.0);
    }

    #[test]
    fn sessions_are_deterministic_across_threads() {
        let mut config = cfg(3, 2, "001011", 12);
        config.seed = 11;
        let a = run_session(&config).unwrap().to_json().unwrap();
        let b = run_session(&config).unwrap().to_json().unwrap();
        let c = run_session_threads(&config, 4).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn transcript_json_round_trip() {
        let t = run_session(&cfg(2, 3, "12", 3)).unwrap();
        let back: SessionTranscript = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
