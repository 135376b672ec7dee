//! Dense state algebra for small multi-qudit systems.
//!
//! Computational basis indices use subsystem 1 as the most significant
//! digit, so `|j⟩⊗|k⟩` on two qutrits sits at index `3j + k`.

mod basis;
mod measure;
mod operators;

pub use basis::{
    ghz_basis_state, ghz_label_to_multi, multi_entangled_state, qudit_bell_state, Sign,
};
pub use measure::{
    expectation, gellmann_correlation, measure_in_family, partial_trace, pauli_correlation,
    ProbabilityTable, StateRef,
};
pub use operators::{error_operator, gell_mann, pauli, qutrit_transform_unitary, six_port_matrix};

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest Hilbert-space dimension the simulator accepts (3^6).
pub const MAX_DIM: usize = 729;

pub const TOL_EXACT: f64 = 1e-12;
pub const TOL_ACCUM: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(2πi k / d)`, reducing `k` first so large products stay exact.
pub(crate) fn root_of_unity(k: usize, d: usize) -> Complex64 {
    let k = k % d;
    match (k, d) {
        (0, _) => c(1.0, 0.0),
        _ if 2 * k == d => c(-1.0, 0.0),
        _ => Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64),
    }
}

/// An (N, d) family of maximally entangled basis states: N particles of
/// local dimension d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Family {
    pub particles: usize,
    pub dim: usize,
}

impl Family {
    pub fn new(particles: usize, dim: usize) -> Result<Self> {
        if particles < 2 {
            return domain(format!(
                "particle count must be at least 2, got {particles}"
            ));
        }
        if dim < 2 {
            return domain(format!("local dimension must be at least 2, got {dim}"));
        }
        match checked_pow(dim, particles) {
            Some(size) if size <= MAX_DIM => Ok(Self { particles, dim }),
            _ => domain(format!(
                "family ({particles},{dim}) exceeds the dimension cap {MAX_DIM}"
            )),
        }
    }

    /// Number of basis states, d^N.
    pub fn size(&self) -> usize {
        self.dim.pow(self.particles as u32)
    }

    pub fn local_dims(&self) -> Vec<usize> {
        vec![self.dim; self.particles]
    }

    pub fn labels(&self) -> impl Iterator<Item = BasisLabel> + '_ {
        (0..self.size()).map(move |i| BasisLabel::from_index(*self, i).expect("index in range"))
    }

    /// The basis state a label names: GHZ states for qubits, the shifted
    /// phase family otherwise.
    pub fn basis_state(&self, label: &BasisLabel) -> Result<StateVector> {
        if label.family != *self {
            return domain("label belongs to a different family");
        }
        let (head, last) = label.digits.split_at(self.particles - 1);
        if self.dim == 2 {
            let j = head.iter().fold(0usize, |acc, &b| 2 * acc + b);
            let sign = if last[0] == 0 {
                Sign::Plus
            } else {
                Sign::Minus
            };
            ghz_basis_state(self.particles, j, sign)
        } else {
            multi_entangled_state(self.dim, self.particles, last[0], head)
        }
    }

    /// All d^N basis states in label-index order.
    pub fn basis(&self) -> Vec<StateVector> {
        self.labels()
            .map(|l| self.basis_state(&l).expect("label from this family"))
            .collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.particles, self.dim)
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Names one basis state of a family.
///
/// Digits are N base-d values. For qubits they are the bits of `j` followed
/// by the sign bit (`+` is 0), which gives the 000…111 naming of the GHZ
/// table. For d ≥ 3 they are the N−1 shifts followed by the phase index,
/// which gives the 00, 01, …, 22 naming of the two-qutrit table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub family: Family,
    pub digits: Vec<usize>,
}

impl BasisLabel {
    pub fn new(family: Family, digits: Vec<usize>) -> Result<Self> {
        if digits.len() != family.particles {
            return domain(format!(
                "label needs {} digits, got {}",
                family.particles,
                digits.len()
            ));
        }
        if let Some(&bad) = digits.iter().find(|&&x| x >= family.dim) {
            return domain(format!("digit {bad} is not base {}", family.dim));
        }
        Ok(Self { family, digits })
    }

    pub fn from_index(family: Family, index: usize) -> Result<Self> {
        if index >= family.size() {
            return domain(format!("label index {index} out of range for {family}"));
        }
        let mut digits = vec![0; family.particles];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = rest % family.dim;
            rest /= family.dim;
        }
        Ok(Self { family, digits })
    }

    /// Base-d value of the digits, most significant first.
    pub fn index(&self) -> usize {
        self.digits
            .iter()
            .fold(0, |acc, &x| acc * self.family.dim + x)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A normalized pure state over a tensor product of local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: CVector,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::from_parts(dims, CVector::from_vec(amplitudes))?;
        let norm = state.amps.norm_squared();
        if (norm - 1.0).abs() > TOL_EXACT {
            return domain(format!("state norm² is {norm}, expected 1"));
        }
        Ok(state)
    }

    fn from_parts(dims: Vec<usize>, amps: CVector) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.iter().any(|&d| d < 2) {
            return domain("local dimensions must be at least 2");
        }
        if total != amps.len() {
            return domain(format!(
                "amplitude count {} does not match dimension {total}",
                amps.len()
            ));
        }
        Ok(Self { dims, amps })
    }

    /// Wraps amplitudes that are normalized by construction.
    pub(crate) fn from_normalized(dims: Vec<usize>, amps: CVector) -> Self {
        debug_assert!((amps.norm_squared() - 1.0).abs() < TOL_ACCUM);
        Self { dims, amps }
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalize(dims: Vec<usize>, amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if n < 1e-300 {
            return domain("cannot normalize the zero vector");
        }
        Self::from_parts(dims, amps / c(n, 0.0))
    }

    /// Computational basis product state `|digits⟩`.
    pub fn basis_ket(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(x, d)| x >= d) {
            return domain("basis digits do not fit the local dimensions");
        }
        let total = dims.iter().product();
        let index = digits.iter().zip(&dims).fold(0, |acc, (x, d)| acc * d + x);
        let mut amps = CVector::zeros(total);
        amps[index] = c(1.0, 0.0);
        Ok(Self { dims, amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            dims: self.dims.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Global-phase representative whose first nonzero amplitude is real
    /// and positive.
    pub fn canonical(&self) -> StateVector {
        let lead = self
            .amps
            .iter()
            .find(|a| a.norm() > TOL_ACCUM)
            .copied()
            .unwrap_or(c(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        Self {
            dims: self.dims.clone(),
            amps: self.amps.map(|a| a * phase),
        }
    }

    /// True when both states agree up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.dims == other.dims
            && max_modulus(&(self.canonical().amps - other.canonical().amps)) <= tol
    }

    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.dims == other.dims && max_modulus(&(&self.amps - &other.amps)) <= tol
    }

    pub fn apply(&self, op: &UnitaryOperator) -> Result<StateVector> {
        if op.dim() != self.dim() {
            return domain("operator and state dimensions differ");
        }
        Ok(Self {
            dims: self.dims.clone(),
            amps: &op.matrix * &self.amps,
        })
    }

    /// Applies a single-subsystem operator to subsystem `target` (0-based).
    pub fn apply_local(&self, target: usize, op: &UnitaryOperator) -> Result<StateVector> {
        if target >= self.dims.len() || self.dims[target] != op.dim() {
            return domain("local operator does not fit the target subsystem");
        }
        let full = embed_local(&self.dims, target, &op.matrix);
        Ok(Self {
            dims: self.dims.clone(),
            amps: full * &self.amps,
        })
    }
}

/// Largest entry modulus of a complex matrix or vector.
pub fn max_modulus<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<Complex64, R, C>>(
    m: &nalgebra::Matrix<Complex64, R, C, S>,
) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on subsystem `target`.
pub(crate) fn embed_local(dims: &[usize], target: usize, op: &CMatrix) -> CMatrix {
    let before: usize = dims[..target].iter().product();
    let after: usize = dims[target + 1..].iter().product();
    identity(before).kronecker(op).kronecker(&identity(after))
}

/// A density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let rho = Self { dims, matrix };
        rho.check_invariants()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(dims: Vec<usize>, matrix: CMatrix) -> Self {
        Self { dims, matrix }
    }

    /// Maximally mixed state `I/D`.
    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            dims,
            matrix: identity(n) / c(n as f64, 0.0),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n: usize = self.dims.iter().product();
        if self.matrix.nrows() != n || self.matrix.ncols() != n {
            return domain("density matrix shape does not match dimensions");
        }
        let herm_dev = max_modulus(&(&self.matrix - self.matrix.adjoint()));
        if herm_dev > TOL_EXACT {
            return domain(format!(
                "density matrix not Hermitian (deviation {herm_dev:e})"
            ));
        }
        let tr = self.matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > TOL_EXACT {
            return domain(format!("density matrix trace is {tr}"));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -TOL_ACCUM {
            return domain(format!("density matrix has eigenvalue {min_eig:e}"));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) / c(2.0, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return domain("empty mixture");
        };
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TOL_EXACT {
            return domain("mixture weights must be nonnegative and sum to 1");
        }
        let mut matrix = CMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.dims != first.dims {
                return domain("mixture components have different dimensions");
            }
            matrix += &rho.matrix * c(*w, 0.0);
        }
        Ok(Self {
            dims: first.dims.clone(),
            matrix,
        })
    }

    pub fn approx_eq(&self, other: &DensityOperator, tol: f64) -> bool {
        self.dims == other.dims && max_modulus(&(&self.matrix - &other.matrix)) <= tol
    }
}

/// A square matrix with `U†U = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return domain("unitary must be square");
        }
        let n = matrix.nrows();
        let dev = max_modulus(&(matrix.adjoint() * &matrix - identity(n)));
        if dev > TOL_EXACT {
            return domain(format!("matrix is not unitary (deviation {dev:e})"));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, after: &UnitaryOperator) -> Result<UnitaryOperator> {
        if self.dim() != after.dim() {
            return domain("cannot compose unitaries of different dimension");
        }
        Ok(Self {
            matrix: &after.matrix * &self.matrix,
        })
    }

    pub fn approx_eq(&self, other: &UnitaryOperator, tol: f64) -> bool {
        self.dim() == other.dim() && max_modulus(&(&self.matrix - &other.matrix)) <= tol
    }
}

/// A measurement direction: a real 3-vector for qubits (Pauli basis) or a
/// real 8-vector for qutrits (Gell-Mann basis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObservableDirection {
    Qubit([f64; 3]),
    Qutrit([f64; 8]),
}

impl ObservableDirection {
    pub fn components(&self) -> &[f64] {
        match self {
            Self::Qubit(v) => v,
            Self::Qutrit(v) => v,
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            Self::Qubit(_) => 2,
            Self::Qutrit(_) => 3,
        }
    }

    pub fn norm(&self) -> f64 {
        self.components().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return domain("zero direction vector");
        }
        Ok(match self {
            Self::Qubit(v) => Self::Qubit(v.map(|x| x / n)),
            Self::Qutrit(v) => Self::Qutrit(v.map(|x| x / n)),
        })
    }

    /// `σ⃗·a` or `λ⃗·M` as a Hermitian matrix.
    pub fn operator(&self) -> CMatrix {
        let d = self.local_dim();
        let mut out = CMatrix::zeros(d, d);
        for (i, &w) in self.components().iter().enumerate() {
            let gen = match self {
                Self::Qubit(_) => pauli(i + 1).expect("pauli index"),
                Self::Qutrit(_) => gell_mann(i + 1).expect("gell-mann index"),
            };
            out += gen * c(w, 0.0);
        }
        out
    }
}

/// Serde helpers for complex values as `[re, im]` pairs.
pub mod complex_pairs {
    use num_complex::Complex64;

    pub fn to_pairs<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> Vec<[f64; 2]> {
        values.into_iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Vec<Complex64> {
        pairs
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct StateVectorRepr {
    dims: Vec<usize>,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateVectorRepr {
            dims: self.dims.clone(),
            amplitudes: complex_pairs::to_pairs(self.amps.iter()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = StateVectorRepr::deserialize(d)?;
        StateVector::new(repr.dims, complex_pairs::from_pairs(&repr.amplitudes))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dims: Vec<usize>,
    /// Row-major entries.
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .matrix
            .row_iter()
            .map(|row| complex_pairs::to_pairs(row.iter()))
            .collect();
        MatrixRepr {
            dims: self.dims.clone(),
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let n = repr.entries.len();
        let flat: Vec<Complex64> = repr
            .entries
            .iter()
            .flat_map(|row| complex_pairs::from_pairs(row))
            .collect();
        if flat.len() != n * n {
            return Err(serde::de::Error::custom("density matrix rows are ragged"));
        }
        DensityOperator::new(repr.dims, CMatrix::from_row_slice(n, n, &flat))
            .map_err(serde::de::Error::custom)
    }
}
