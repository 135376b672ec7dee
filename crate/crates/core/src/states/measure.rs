use serde::{Deserialize, Serialize};

use super::{
    c, BasisLabel, CMatrix, DensityOperator, Family, ObservableDirection, StateVector, TOL_ACCUM,
};
use crate::error::{domain, Result};

/// Either a pure or a mixed state.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityOperator),
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(s: &'a StateVector) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityOperator> for StateRef<'a> {
    fn from(r: &'a DensityOperator) -> Self {
        StateRef::Mixed(r)
    }
}

/// Outcome distribution of a measurement in an entangled basis family,
/// indexed by label index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub family: Family,
    pub probabilities: Vec<f64>,
}

impl ProbabilityTable {
    pub fn get(&self, label: &BasisLabel) -> f64 {
        self.probabilities[label.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisLabel, f64)> + '_ {
        self.family.labels().zip(self.probabilities.iter().copied())
    }
}

/// Born-rule probabilities of every basis state of `family`.
pub fn measure_in_family<'a>(
    state: impl Into<StateRef<'a>>,
    family: Family,
) -> Result<ProbabilityTable> {
    let state = state.into();
    let dim = match state {
        StateRef::Pure(s) => s.dim(),
        StateRef::Mixed(r) => r.dim(),
    };
    if dim != family.size() {
        return domain(format!(
            "state dimension {dim} does not match family {family} of size {}",
            family.size()
        ));
    }
    let probabilities: Vec<f64> = family
        .basis()
        .iter()
        .map(|b| match state {
            StateRef::Pure(s) => b.inner(s).norm_sqr(),
            StateRef::Mixed(r) => {
                let v = b.amplitudes();
                (v.adjoint() * r.matrix() * v)[(0, 0)].re
            }
        })
        .collect();
    let total: f64 = probabilities.iter().sum();
    debug_assert!(
        (total - 1.0).abs() < TOL_ACCUM,
        "probabilities sum to {total}"
    );
    Ok(ProbabilityTable {
        family,
        probabilities,
    })
}

/// Partial trace keeping the subsystems listed in `keep` (0-based, any order;
/// the result keeps the original subsystem order).
pub fn partial_trace(
    rho: &DensityOperator,
    keep: &[usize],
    dims: &[usize],
) -> Result<DensityOperator> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return domain(format!(
            "subsystem dimensions multiply to {total}, density has dimension {}",
            rho.dim()
        ));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return domain("keep set has repeated or out-of-range subsystems");
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let k_size: usize = kept_dims.iter().product();
    let t_size: usize = traced_dims.iter().product();

    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |subsystems: &[usize], sub_dims: &[usize], size: usize| -> Vec<usize> {
        (0..size)
            .map(|mut idx| {
                let mut off = 0;
                for (pos, &s) in subsystems.iter().enumerate().rev() {
                    off += (idx % sub_dims[pos]) * strides[s];
                    idx /= sub_dims[pos];
                }
                off
            })
            .collect()
    };
    let k_off = offsets(&kept, &kept_dims, k_size);
    let t_off = offsets(&traced, &traced_dims, t_size);

    let m = rho.matrix();
    let out = CMatrix::from_fn(k_size, k_size, |r, s| {
        t_off.iter().map(|t| m[(k_off[r] + t, k_off[s] + t)]).sum()
    });
    Ok(DensityOperator::from_matrix_unchecked(kept_dims, out))
}

/// `⟨ψ|A|ψ⟩`.
pub fn expectation(state: &StateVector, op: &CMatrix) -> Result<num_complex::Complex64> {
    if op.nrows() != state.dim() || op.ncols() != state.dim() {
        return domain("observable and state dimensions differ");
    }
    let v = state.amplitudes();
    Ok((v.adjoint() * op * v)[(0, 0)])
}

fn correlation(state: &StateVector, directions: &[&ObservableDirection], d: usize) -> Result<f64> {
    if state.local_dims().len() != directions.len() || state.local_dims().iter().any(|&x| x != d) {
        return domain(format!(
            "expected a {}-party state of local dimension {d}",
            directions.len()
        ));
    }
    if directions.iter().any(|dir| dir.local_dim() != d) {
        return domain(format!("directions must be local dimension {d} vectors"));
    }
    let op = directions
        .iter()
        .skip(1)
        .fold(directions[0].operator(), |acc, dir| {
            acc.kronecker(&dir.operator())
        });
    let value = expectation(state, &op)?;
    debug_assert!(value.im.abs() < TOL_ACCUM);
    Ok(value.re)
}

/// `⟨ψ|(σ⃗·a)⊗(σ⃗·b)⊗(σ⃗·c)|ψ⟩` for a three-qubit state.
pub fn pauli_correlation(
    state: &StateVector,
    a: &ObservableDirection,
    b: &ObservableDirection,
    c_dir: &ObservableDirection,
) -> Result<f64> {
    correlation(state, &[a, b, c_dir], 2)
}

/// `⟨ψ|(λ⃗·M)⊗(λ⃗·N)|ψ⟩` for a two-qutrit state.
pub fn gellmann_correlation(
    state: &StateVector,
    m: &ObservableDirection,
    n: &ObservableDirection,
) -> Result<f64> {
    correlation(state, &[m, n], 3)
}

impl DensityOperator {
    /// `Tr(ρ A)` for a Hermitian observable.
    pub fn expectation(&self, op: &CMatrix) -> Result<f64> {
        if op.nrows() != self.dim() {
            return domain("observable and density dimensions differ");
        }
        Ok((self.matrix() * op).trace().re)
    }

    pub fn is_maximally_mixed(&self, tol: f64) -> bool {
        let n = self.dim();
        let target = CMatrix::identity(n, n) / c(n as f64, 0.0);
        super::max_modulus(&(self.matrix() - target)) <= tol
    }
}
