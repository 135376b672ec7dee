use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::states::{
    c, partial_trace, BasisLabel, CMatrix, DensityOperator, Family, ObservableDirection,
};

use super::{offset_groups, validate_offsets};

/// State each source unit contributes to a regrouped tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Every source holds the basis state with this label index.
    Label(usize),
    /// Every source holds an independent uniform mixture of basis states.
    UniformMixture,
}

fn group_density(family: Family, lanes: &[usize], source: Source) -> Result<DensityOperator> {
    let dims = family.local_dims();
    let reduce = |label: usize| -> Result<DensityOperator> {
        let l = BasisLabel::from_index(family, label)?;
        partial_trace(&family.basis_state(&l)?.density(), lanes, &dims)
    };
    match source {
        Source::Label(l) => reduce(l),
        Source::UniformMixture => {
            let w = 1.0 / family.size() as f64;
            let parts = (0..family.size())
                .map(|l| reduce(l).map(|r| (w, r)))
                .collect::<Result<Vec<_>>>()?;
            DensityOperator::mixture(&parts)
        }
    }
}

/// Reduced state of a tuple whose lane ℓ particle comes from source unit
/// `offsets[ℓ]` (1-based; equal values share a source). Each source holds
/// the basis state with label index 0.
pub fn misgrouped_density(family: Family, offsets: &[usize]) -> Result<DensityOperator> {
    misgrouped_density_with(family, offsets, Source::Label(0))
}

/// [`misgrouped_density`] with an explicit source model.
pub fn misgrouped_density_with(
    family: Family,
    offsets: &[usize],
    source: Source,
) -> Result<DensityOperator> {
    validate_offsets(family, offsets)?;
    if let Source::Label(l) = source {
        if l >= family.size() {
            return domain(format!("label index {l} out of range for {family}"));
        }
    }
    let d = family.dim;
    let n = family.particles;
    let groups = offset_groups(offsets);
    let parts = groups
        .iter()
        .map(|g| group_density(family, g, source))
        .collect::<Result<Vec<_>>>()?;
    let size = family.size();
    let digits = |mut x: usize| -> Vec<usize> {
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = x % d;
            x /= d;
        }
        out
    };
    let sub_index = |dg: &[usize], lanes: &[usize]| lanes.iter().fold(0, |acc, &l| acc * d + dg[l]);
    let all_digits: Vec<Vec<usize>> = (0..size).map(digits).collect();
    let matrix = CMatrix::from_fn(size, size, |x, y| {
        groups
            .iter()
            .zip(&parts)
            .fold(c(1.0, 0.0), |acc, (g, rho)| {
                acc * rho.matrix()[(sub_index(&all_digits[x], g), sub_index(&all_digits[y], g))]
            })
    });
    DensityOperator::new(family.local_dims(), matrix)
}

/// Tuple state a correlation measurement is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TupleSource {
    /// Equal-weight mixture of every basis state of the family.
    UniformMixture,
    /// Each particle from a different source, so no correlations survive.
    Uncorrelated,
    /// A single known basis state.
    Label(usize),
}

/// Mean of the product observable `⊗ (direction · generators)` over the
/// given tuple source.
pub fn correlation_attack_mean(
    family: Family,
    directions: &[ObservableDirection],
    source: TupleSource,
) -> Result<f64> {
    if directions.len() != family.particles {
        return domain(format!(
            "need {} directions, got {}",
            family.particles,
            directions.len()
        ));
    }
    if directions.iter().any(|d| d.local_dim() != family.dim) {
        return domain(format!("directions must act on dimension {}", family.dim));
    }
    let rho = match source {
        TupleSource::UniformMixture => {
            let w = 1.0 / family.size() as f64;
            let parts: Vec<_> = family.basis().iter().map(|s| (w, s.density())).collect();
            DensityOperator::mixture(&parts)?
        }
        TupleSource::Uncorrelated => {
            let offsets: Vec<usize> = (1..=family.particles).collect();
            misgrouped_density(family, &offsets)?
        }
        TupleSource::Label(l) => {
            let label = BasisLabel::from_index(family, l)?;
            family.basis_state(&label)?.density()
        }
    };
    let op = directions
        .iter()
        .skip(1)
        .fold(directions[0].operator(), |acc, d| {
            acc.kronecker(&d.operator())
        });
    rho.expectation(&op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{measure_in_family, TOL_EXACT};

    #[test]
    fn fully_misgrouped_qubits_are_maximally_mixed() {
        let f = Family::new(3, 2).unwrap();
        let rho = misgrouped_density(f, &[1, 2, 3]).unwrap();
        assert!(rho.is_maximally_mixed(TOL_EXACT));
        let table = measure_in_family(&rho, f).unwrap();
        assert!(table
            .probabilities
            .iter()
            .all(|p| (p - 0.125).abs() < TOL_EXACT));
    }

    #[test]
    fn partly_misgrouped_qubits() {
        let f = Family::new(3, 2).unwrap();
        let rho = misgrouped_density(f, &[1, 2, 2]).unwrap();
        let m = rho.matrix();
        for i in 0..8 {
            for j in 0..8 {
                let bc = i % 4;
                let expected = if i == j && (bc == 0 || bc == 3) {
                    0.25
                } else {
                    0.0
                };
                assert!(
                    (m[(i, j)] - c(expected, 0.0)).norm() < TOL_EXACT,
                    "({i},{j})"
                );
            }
        }
        let averaged = misgrouped_density_with(f, &[1, 2, 2], Source::UniformMixture).unwrap();
        assert!(averaged.is_maximally_mixed(TOL_EXACT));
    }

    #[test]
    fn misgrouped_qutrits() {
        let f = Family::new(2, 3).unwrap();
        let rho = misgrouped_density(f, &[1, 2]).unwrap();
        assert!(rho.is_maximally_mixed(TOL_EXACT));
        let same = misgrouped_density(f, &[2, 2]).unwrap();
        assert!((same.matrix() - f.basis()[0].density().matrix()).norm() < TOL_EXACT);
    }

    #[test]
    fn invalid_offsets() {
        let f = Family::new(3, 2).unwrap();
        assert!(misgrouped_density(f, &[1, 2]).is_err());
        assert!(misgrouped_density(f, &[0, 1, 2]).is_err());
        assert!(misgrouped_density(f, &[1, 2, 9]).is_err());
    }

    #[test]
    fn correlation_means() {
        let f = Family::new(3, 2).unwrap();
        let x = ObservableDirection::Qubit([1.0, 0.0, 0.0]);
        let dirs = [x.clone(), x.clone(), x];
        assert!(
            correlation_attack_mean(f, &dirs, TupleSource::UniformMixture)
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(
            correlation_attack_mean(f, &dirs, TupleSource::Uncorrelated)
                .unwrap()
                .abs()
                < 1e-12
        );
        let known = correlation_attack_mean(f, &dirs, TupleSource::Label(0)).unwrap();
        assert!((known - 1.0).abs() < 1e-12);
        assert!(correlation_attack_mean(f, &dirs[..2], TupleSource::Label(0)).is_err());
    }
}
