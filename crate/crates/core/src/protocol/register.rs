//! Pure-state bookkeeping for the particles of one carrier unit.
//!
//! Particles start in independent N-qudit clusters, one per prepared state.
//! A measurement on a tuple drawn from several clusters merges them,
//! projects the tuple onto a basis state and leaves the rest of the merged
//! cluster in the conditional pure state, so every cluster stays small.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GcoreError, Result};
use crate::states::{CMatrix, Family, TOL_ACCUM};

/// Largest merged cluster the register will build.
pub const MAX_CLUSTER_DIM: usize = 1 << 16;

/// A particle is addressed by the unit position of the state that carried it
/// (0-based, Alice's order) and its lane (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleId {
    pub position: usize,
    pub lane: usize,
}

/// Basis states of a family stored by their nonzero amplitudes. Every
/// entangled basis state has exactly d of them.
#[derive(Debug, Clone)]
pub struct SparseBasis {
    family: Family,
    states: Vec<Vec<(usize, Complex64)>>,
}

impl SparseBasis {
    pub fn new(family: Family) -> Self {
        let states = family
            .basis()
            .iter()
            .map(|s| {
                s.amplitudes()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm_sqr() > 1e-24)
                    .map(|(i, a)| (i, *a))
                    .collect()
            })
            .collect();
        Self { family, states }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, label: usize) -> &[(usize, Complex64)] {
        &self.states[label]
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    particles: Vec<ParticleId>,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Register {
    d: usize,
    clusters: Vec<Option<Cluster>>,
    /// Cluster index of each particle, indexed by `position * lanes + lane`.
    location: Vec<usize>,
    lanes: usize,
}

impl Register {
    /// One cluster per position, holding the basis state `labels[position]`.
    pub fn prepare(basis: &SparseBasis, labels: &[usize]) -> Self {
        let family = basis.family();
        let n = family.particles;
        let size = family.size();
        let clusters = labels
            .iter()
            .enumerate()
            .map(|(pos, &label)| {
                let mut amps = vec![Complex64::new(0.0, 0.0); size];
                for &(i, a) in basis.state(label) {
                    amps[i] = a;
                }
                Some(Cluster {
                    particles: (0..n)
                        .map(|lane| ParticleId {
                            position: pos,
                            lane,
                        })
                        .collect(),
                    amps,
                })
            })
            .collect();
        let location = (0..labels.len() * n).map(|i| i / n).collect();
        Self {
            d: family.dim,
            clusters,
            location,
            lanes: n,
        }
    }

    fn slot(&self, p: ParticleId) -> Result<usize> {
        let idx = p.position * self.lanes + p.lane;
        if p.lane >= self.lanes || idx >= self.location.len() {
            return Err(GcoreError::Protocol(format!("unknown particle {p:?}")));
        }
        Ok(idx)
    }

    /// Number of live clusters, for diagnostics.
    pub fn cluster_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.is_some()).count()
    }

    /// Merges every cluster touching `particles` into one and returns its
    /// index.
    fn merge(&mut self, particles: &[ParticleId]) -> Result<usize> {
        let mut ids: Vec<usize> = Vec::new();
        for &p in particles {
            let c = self.location[self.slot(p)?];
            if !ids.contains(&c) {
                ids.push(c);
            }
        }
        let target = ids[0];
        for &other in &ids[1..] {
            let b = self.clusters[other].take().expect("live cluster");
            let a = self.clusters[target].as_mut().expect("live cluster");
            let dim = a.amps.len() * b.amps.len();
            if dim > MAX_CLUSTER_DIM {
                return Err(GcoreError::Protocol(format!(
                    "entangled cluster of dimension {dim} exceeds {MAX_CLUSTER_DIM}"
                )));
            }
            let mut amps = Vec::with_capacity(dim);
            for x in &a.amps {
                for y in &b.amps {
                    amps.push(x * y);
                }
            }
            a.amps = amps;
            for &p in &b.particles {
                let idx = p.position * self.lanes + p.lane;
                self.location[idx] = target;
            }
            a.particles.extend(b.particles);
        }
        Ok(target)
    }

    /// Reorders a cluster's subsystems so `front` comes first, in order.
    fn bring_to_front(&mut self, index: usize, front: &[ParticleId]) {
        let d = self.d;
        let cluster = self.clusters[index].as_mut().expect("live cluster");
        let mut order: Vec<usize> = front
            .iter()
            .map(|p| {
                cluster
                    .particles
                    .iter()
                    .position(|q| q == p)
                    .expect("particle in cluster")
            })
            .collect();
        let rest: Vec<usize> = (0..cluster.particles.len())
            .filter(|i| !order.contains(i))
            .collect();
        order.extend(rest);
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return;
        }
        let n = order.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * d;
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); cluster.amps.len()];
        for (new_idx, slot) in amps.iter_mut().enumerate() {
            let mut rem = new_idx;
            let mut old_idx = 0;
            for k in (0..n).rev() {
                old_idx += (rem % d) * strides[order[k]];
                rem /= d;
            }
            *slot = cluster.amps[old_idx];
        }
        cluster.amps = amps;
        cluster.particles = order.iter().map(|&i| cluster.particles[i]).collect();
    }

    /// Measures `tuple` (one particle per lane, in lane order) in the
    /// family basis, collapsing it onto the observed state. Returns the
    /// outcome's label index.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        tuple: &[ParticleId],
        basis: &SparseBasis,
        rng: &mut R,
    ) -> Result<usize> {
        if tuple.len() != basis.family().particles {
            return Err(GcoreError::Protocol(format!(
                "tuple of {} particles measured in family {}",
                tuple.len(),
                basis.family()
            )));
        }
        let index = self.merge(tuple)?;
        self.bring_to_front(index, tuple);
        let cluster = self.clusters[index].take().expect("live cluster");
        let rest = cluster.amps.len() / basis.len();

        let conditional = |label: usize| -> Vec<Complex64> {
            let mut v = vec![Complex64::new(0.0, 0.0); rest];
            for &(t, b) in basis.state(label) {
                let bc = b.conj();
                let row = &cluster.amps[t * rest..(t + 1) * rest];
                for (acc, &m) in v.iter_mut().zip(row) {
                    *acc += bc * m;
                }
            }
            v
        };
        let probs: Vec<f64> = (0..basis.len())
            .map(|k| conditional(k).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let total: f64 = probs.iter().sum();
        debug_assert!((total - 1.0).abs() < TOL_ACCUM, "cluster norm {total}");
        let mut u = rng.random::<f64>() * total;
        let mut outcome = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (k, &p) in probs.iter().enumerate() {
            if u < p {
                outcome = k;
                break;
            }
            u -= p;
        }

        let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
        for &(i, a) in basis.state(outcome) {
            amps[i] = a;
        }
        let tuple_particles = tuple.to_vec();
        let rest_particles = cluster.particles[tuple.len()..].to_vec();
        self.clusters[index] = Some(Cluster {
            particles: tuple_particles,
            amps,
        });
        if !rest_particles.is_empty() {
            let scale = 1.0 / probs[outcome].sqrt();
            let amps = conditional(outcome)
                .into_iter()
                .map(|z| z * scale)
                .collect();
            let new_index = self.clusters.len();
            for &p in &rest_particles {
                let idx = p.position * self.lanes + p.lane;
                self.location[idx] = new_index;
            }
            self.clusters.push(Some(Cluster {
                particles: rest_particles,
                amps,
            }));
        }
        Ok(outcome)
    }

    /// Applies a single-qudit operator to one particle.
    pub fn apply_local(&mut self, particle: ParticleId, op: &CMatrix) -> Result<()> {
        let d = self.d;
        if op.nrows() != d || op.ncols() != d {
            return Err(GcoreError::Protocol(format!("operator is not {d}×{d}")));
        }
        let index = self.location[self.slot(particle)?];
        let cluster = self.clusters[index].as_mut().expect("live cluster");
        let k = cluster
            .particles
            .iter()
            .position(|&q| q == particle)
            .expect("particle in cluster");
        let stride = d.pow((cluster.particles.len() - 1 - k) as u32);
        let block = stride * d;
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        for base in (0..cluster.amps.len()).step_by(block) {
            for offset in 0..stride {
                for (j, col) in column.iter_mut().enumerate() {
                    *col = cluster.amps[base + offset + j * stride];
                }
                for i in 0..d {
                    cluster.amps[base + offset + i * stride] =
                        (0..d).map(|j| op[(i, j)] * column[j]).sum();
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{error_operator, TOL_EXACT};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pid(position: usize, lane: usize) -> ParticleId {
        ParticleId { position, lane }
    }

    #[test]
    fn intact_tuples_measure_their_label() {
        let family = Family::new(3, 2).unwrap();
        let basis = SparseBasis::new(family);
        let labels: Vec<usize> = (0..8).rev().collect();
        let mut reg = Register::prepare(&basis, &labels);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (pos, &label) in labels.iter().enumerate() {
            let tuple: Vec<_> = (0..3).map(|l| pid(pos, l)).collect();
            assert_eq!(reg.measure(&tuple, &basis, &mut rng).unwrap(), label);
        }
    }

    #[test]
    fn misgrouped_tuple_leaves_pure_remainder() {
        let family = Family::new(2, 3).unwrap();
        let basis = SparseBasis::new(family);
        let mut reg = Register::prepare(&basis, &[0, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        reg.measure(&[pid(0, 0), pid(1, 1)], &basis, &mut rng)
            .unwrap();
        assert_eq!(reg.cluster_count(), 2);
        let rest = reg
            .clusters
            .iter()
            .flatten()
            .find(|c| c.particles.contains(&pid(0, 1)))
            .unwrap();
        let norm: f64 = rest.amps.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < TOL_EXACT);
        assert_eq!(rest.particles, vec![pid(0, 1), pid(1, 0)]);
    }

    #[test]
    fn local_error_changes_label() {
        let family = Family::new(2, 3).unwrap();
        let basis = SparseBasis::new(family);
        let mut reg = Register::prepare(&basis, &[0]);
        let u = error_operator(3, 1, 2).unwrap();
        reg.apply_local(pid(0, 1), u.matrix()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = reg
            .measure(&[pid(0, 0), pid(0, 1)], &basis, &mut rng)
            .unwrap();
        // shift 1, phase 2 → digits "12"
        assert_eq!(out, 5);
    }

    #[test]
    fn unknown_particle_is_protocol_error() {
        let basis = SparseBasis::new(Family::new(2, 2).unwrap());
        let mut reg = Register::prepare(&basis, &[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(reg
            .measure(&[pid(0, 0), pid(3, 1)], &basis, &mut rng)
            .is_err());
    }
}
