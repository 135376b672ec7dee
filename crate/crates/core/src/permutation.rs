//! Control keys and the order-rearrangement permutations they select.
//!
//! Positions are 1-indexed throughout, matching the printed tables: a
//! mapping `[2, 1, 4, 3, …]` sends position 1 to 2, position 2 to 1, and so
//! on. Rearranging a unit places input item `i` at output position `perm(i)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, GcoreError, Result};
use crate::states::{checked_pow, MAX_DIM};

/// A bijection on positions `1..=size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PermutationOp {
    mapping: Vec<usize>,
}

impl PermutationOp {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        if n == 0 {
            return domain("permutation must act on at least one position");
        }
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m == 0 || m > n || seen[m - 1] {
                return domain(format!("{mapping:?} is not a bijection on 1..={n}"));
            }
            seen[m - 1] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(size: usize) -> Self {
        Self {
            mapping: (1..=size).collect(),
        }
    }

    /// Cyclic shift `i ↦ ((i − 1 + k) mod size) + 1`.
    pub fn cyclic_shift(size: usize, k: usize) -> Self {
        Self {
            mapping: (0..size).map(|i| (i + k) % size + 1).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    /// 1-indexed image of position `i`.
    pub fn image(&self, i: usize) -> usize {
        self.mapping[i - 1]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| m == i + 1)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.size()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m - 1] = i + 1;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PermutationOp) -> Result<Self> {
        if self.size() != other.size() {
            return domain("cannot compose permutations of different sizes");
        }
        Ok(Self {
            mapping: other.mapping.iter().map(|&m| self.mapping[m - 1]).collect(),
        })
    }
}

impl TryFrom<Vec<usize>> for PermutationOp {
    type Error = GcoreError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PermutationOp> for Vec<usize> {
    fn from(p: PermutationOp) -> Self {
        p.mapping
    }
}

const QUBIT_TABLES: [[usize; 8]; 8] = [
    [1, 2, 3, 4, 5, 6, 7, 8],
    [2, 1, 4, 3, 6, 5, 8, 7],
    [3, 4, 1, 2, 7, 8, 5, 6],
    [4, 3, 2, 1, 8, 7, 6, 5],
    [5, 6, 7, 8, 1, 2, 3, 4],
    [8, 7, 6, 5, 4, 3, 2, 1],
    [7, 8, 5, 6, 3, 4, 1, 2],
    [6, 5, 8, 7, 2, 1, 4, 3],
];

/// The eight three-qubit operations E_0…E_7, stored as printed.
pub fn qubit_permutation(k: usize) -> Result<PermutationOp> {
    match QUBIT_TABLES.get(k) {
        Some(row) => Ok(PermutationOp {
            mapping: row.to_vec(),
        }),
        None => domain(format!(
            "qubit operation E_{k} does not exist (k must be 0..=7)"
        )),
    }
}

/// Operation E_k for an (N, d) family. Three qubits use the printed tables;
/// every other family uses the cyclic shift by k on d^N positions.
pub fn general_permutation(d: usize, particles: usize, k: usize) -> Result<PermutationOp> {
    let size = family_size(d, particles)?;
    if k >= size {
        return domain(format!("operation index {k} out of range [0, {size})"));
    }
    if d == 2 && particles == 3 {
        qubit_permutation(k)
    } else {
        Ok(PermutationOp::cyclic_shift(size, k))
    }
}

fn family_size(d: usize, particles: usize) -> Result<usize> {
    if d < 2 || particles < 2 {
        return domain(format!(
            "need d ≥ 2 and N ≥ 2, got d = {d}, N = {particles}"
        ));
    }
    match checked_pow(d, particles) {
        Some(n) if n <= MAX_DIM => Ok(n),
        _ => domain(format!("d^N exceeds the dimension cap {MAX_DIM}")),
    }
}

/// Digit string the published listing attaches to E_k. Three qutrits use a
/// mixed ordering (E_3 ↔ 100, E_9 ↔ 010); every other family writes k in
/// base d, most significant digit first.
pub fn operation_label(d: usize, particles: usize, k: usize) -> Result<String> {
    let size = family_size(d, particles)?;
    if k >= size {
        return domain(format!("operation index {k} out of range [0, {size})"));
    }
    let digits = if d == 3 && particles == 3 {
        vec![(k / 3) % 3, k / 9, k % 3]
    } else {
        to_digits(k, d, particles)
    };
    Ok(digits.iter().map(|x| x.to_string()).collect())
}

pub(crate) fn to_digits(mut value: usize, base: usize, width: usize) -> Vec<usize> {
    let mut out = vec![0; width];
    for slot in out.iter_mut().rev() {
        *slot = value % base;
        value /= base;
    }
    out
}

/// Rearranges a unit: output position `perm(i)` receives input item `i`.
pub fn apply_rearrangement<T: Clone>(unit: &[T], perm: &PermutationOp) -> Result<Vec<T>> {
    if unit.len() != perm.size() {
        return domain(format!(
            "unit has {} items, permutation acts on {}",
            unit.len(),
            perm.size()
        ));
    }
    let mut out: Vec<Option<T>> = vec![None; unit.len()];
    for (i, item) in unit.iter().enumerate() {
        out[perm.mapping[i] - 1] = Some(item.clone());
    }
    Ok(out
        .into_iter()
        .map(|x| x.expect("bijection fills every slot"))
        .collect())
}

/// Undoes [`apply_rearrangement`].
pub fn invert_rearrangement<T: Clone>(unit: &[T], perm: &PermutationOp) -> Result<Vec<T>> {
    apply_rearrangement(unit, &perm.inverse())
}

/// A pre-shared base-d digit string selecting one operation per key block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlKey {
    pub base: usize,
    pub digits: Vec<usize>,
    /// Consecutive units governed by each key block.
    #[serde(default = "default_group_size")]
    pub group_size: usize,
}

fn default_group_size() -> usize {
    1
}

impl ControlKey {
    pub fn new(base: usize, digits: Vec<usize>) -> Result<Self> {
        if base < 2 {
            return domain(format!("key base must be at least 2, got {base}"));
        }
        if digits.is_empty() {
            return domain("control key needs at least one digit");
        }
        if let Some(bad) = digits.iter().find(|&&x| x >= base) {
            return domain(format!("key digit {bad} is not base {base}"));
        }
        Ok(Self {
            base,
            digits,
            group_size: 1,
        })
    }

    /// Parses a digit string such as `"001011"`.
    pub fn parse(base: usize, text: &str) -> Result<Self> {
        let digits = text
            .trim()
            .chars()
            .map(|ch| {
                ch.to_digit(36)
                    .map(|v| v as usize)
                    .ok_or_else(|| GcoreError::Domain(format!("'{ch}' is not a key digit")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(base, digits)
    }

    pub fn with_group_size(mut self, group_size: usize) -> Result<Self> {
        if group_size == 0 {
            return domain("group size must be positive");
        }
        self.group_size = group_size;
        Ok(self)
    }

    /// Number of key blocks of `particles` digits.
    pub fn block_count(&self, particles: usize) -> usize {
        self.digits.len() / particles
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

impl fmt::Display for ControlKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{}", std::char::from_digit(*d as u32, 36).unwrap_or('?'))?;
        }
        Ok(())
    }
}

impl FromStr for ControlKey {
    type Err = GcoreError;

    /// Parses base-2 digit strings; use [`ControlKey::parse`] for other bases.
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(2, s)
    }
}

/// Endless stream of per-unit operations drawn from a control key.
///
/// Each block of N digits is read as a base-d integer k and yields E_k for
/// `group_size` consecutive units; the key wraps around when exhausted.
#[derive(Debug, Clone)]
pub struct KeyBlockStream {
    blocks: Vec<(usize, PermutationOp)>,
    group_size: usize,
    unit: usize,
}

pub fn key_block_stream(key: &ControlKey, particles: usize) -> Result<KeyBlockStream> {
    if particles == 0 || !key.digits.len().is_multiple_of(particles) {
        return domain(format!(
            "key length {} is not a multiple of the block size {particles}",
            key.digits.len()
        ));
    }
    let blocks = key
        .digits
        .chunks(particles)
        .map(|chunk| {
            let k = chunk.iter().fold(0, |acc, &x| acc * key.base + x);
            general_permutation(key.base, particles, k).map(|p| (k, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KeyBlockStream {
        blocks,
        group_size: key.group_size.max(1),
        unit: 0,
    })
}

impl KeyBlockStream {
    /// Operation index and permutation for an absolute unit number.
    pub fn block_for_unit(&self, unit: usize) -> (usize, &PermutationOp) {
        let (k, p) = &self.blocks[(unit / self.group_size) % self.blocks.len()];
        (*k, p)
    }
}

impl Iterator for KeyBlockStream {
    type Item = (usize, PermutationOp);

    fn next(&mut self) -> Option<Self::Item> {
        let (k, p) = self.block_for_unit(self.unit);
        let item = (k, p.clone());
        self.unit += 1;
        Some(item)
    }
}

/// One particle's passage through a lane's delay-line switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEntry {
    /// 1-indexed position of the particle in its unit, in arrival order.
    pub particle: usize,
    /// Arrival slot is `particle − 1`; departure is arrival plus delay.
    pub departure_slot: u64,
    pub delay: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneProgram {
    pub lane: usize,
    pub entries: Vec<SwitchEntry>,
}

/// Delay-line programs for all lanes of one unit.
///
/// Lane 1 keeps temporal order; lanes 2..N are rearranged by the unit's
/// operation. Every lane shares the same latency so departures across lanes
/// stay aligned and equally spaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub permutation: PermutationOp,
    pub lanes: Vec<LaneProgram>,
    pub slot_interval: u64,
    pub latency: u64,
}

pub fn switch_schedule(perm: &PermutationOp, particles: usize, d: usize) -> Result<SwitchSchedule> {
    let size = family_size(d, particles)?;
    if perm.size() != size {
        return domain(format!(
            "permutation acts on {} positions, family ({particles},{d}) needs {size}",
            perm.size()
        ));
    }
    let latency = perm
        .mapping
        .iter()
        .enumerate()
        .map(|(i, &m)| i.saturating_sub(m - 1))
        .max()
        .unwrap_or(0) as u64;
    let identity = PermutationOp::identity(size);
    let lanes = (1..=particles)
        .map(|lane| {
            let p = if lane == 1 { &identity } else { perm };
            let entries = p
                .mapping
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let departure = latency + (m - 1) as u64;
                    SwitchEntry {
                        particle: i + 1,
                        departure_slot: departure,
                        delay: departure - i as u64,
                    }
                })
                .collect();
            LaneProgram { lane, entries }
        })
        .collect();
    Ok(SwitchSchedule {
        permutation: perm.clone(),
        lanes,
        slot_interval: 1,
        latency,
    })
}

impl SwitchSchedule {
    /// The schedule that undoes this one at the receiver.
    pub fn inverse(&self) -> SwitchSchedule {
        let particles = self.lanes.len();
        let size = self.permutation.size();
        let inv = self.permutation.inverse();
        // The family is only needed for validation, which already passed.
        let d = (2..=size)
            .find(|&d| checked_pow(d, particles) == Some(size))
            .unwrap_or(size);
        switch_schedule(&inv, particles, d).expect("inverse of a valid schedule is valid")
    }

    /// Runs every lane through its delay line. Items arrive one per slot in
    /// input order; the result lists `(departure slot, item)` in departure
    /// order.
    pub fn execute<T: Clone>(&self, lanes: &[Vec<T>]) -> Result<Vec<Vec<(u64, T)>>> {
        if lanes.len() != self.lanes.len() {
            return domain(format!(
                "schedule has {} lanes, got {} input streams",
                self.lanes.len(),
                lanes.len()
            ));
        }
        self.lanes
            .iter()
            .zip(lanes)
            .map(|(program, items)| {
                if items.len() != program.entries.len() {
                    return domain(format!(
                        "lane {} expects {} particles, got {}",
                        program.lane,
                        program.entries.len(),
                        items.len()
                    ));
                }
                let mut out: Vec<(u64, T)> = program
                    .entries
                    .iter()
                    .zip(items)
                    .map(|(e, item)| ((e.particle as u64 - 1) + e.delay, item.clone()))
                    .collect();
                out.sort_by_key(|(slot, _)| *slot);
                Ok(out)
            })
            .collect()
    }

    /// Departure slots of every lane form a gap-free arithmetic progression.
    pub fn is_evenly_spaced(&self) -> bool {
        self.lanes.iter().all(|lane| {
            let mut slots: Vec<u64> = lane.entries.iter().map(|e| e.departure_slot).collect();
            slots.sort_unstable();
            slots.windows(2).all(|w| w[1] - w[0] == self.slot_interval)
        })
    }
}
