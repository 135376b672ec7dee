use super::{c, root_of_unity, CMatrix, UnitaryOperator};
use crate::error::{domain, Result};

/// Shift-and-phase error operator `U_{m,n} = Σ_k ω^{kn} |k+m⟩⟨k|`.
///
/// Acting on the second qudit of `|ψ_00⟩` it produces `|ψ_{nm}⟩`.
pub fn error_operator(d: usize, m: usize, n: usize) -> Result<UnitaryOperator> {
    if d < 2 || m >= d || n >= d {
        return domain(format!(
            "error operator indices (m={m}, n={n}) out of range for d={d}"
        ));
    }
    let mut u = CMatrix::zeros(d, d);
    for k in 0..d {
        u[((k + m) % d, k)] = root_of_unity(k * n, d);
    }
    UnitaryOperator::new(u)
}

/// The nine single-qutrit operators `U_{ij}` taking `|ψ_00⟩` to `|ψ_ij⟩`,
/// written out entry by entry.
pub fn qutrit_transform_unitary(i: usize, j: usize) -> Result<UnitaryOperator> {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let w = root_of_unity(1, 3);
    let w2 = root_of_unity(2, 3);
    let rows: [[num_complex::Complex64; 3]; 3] = match (i, j) {
        (0, 0) => [[l, o, o], [o, l, o], [o, o, l]],
        (1, 0) => [[l, o, o], [o, w, o], [o, o, w2]],
        (2, 0) => [[l, o, o], [o, w2, o], [o, o, w]],
        (0, 1) => [[o, o, l], [l, o, o], [o, l, o]],
        (1, 1) => [[o, o, w2], [l, o, o], [o, w, o]],
        (2, 1) => [[o, o, w], [l, o, o], [o, w2, o]],
        (0, 2) => [[o, l, o], [o, o, l], [l, o, o]],
        (1, 2) => [[o, w, o], [o, o, w2], [l, o, o]],
        (2, 2) => [[o, w2, o], [o, o, w], [l, o, o]],
        _ => {
            return domain(format!(
                "U_{{{i}{j}}} is not defined; indices must be 0, 1 or 2"
            ))
        }
    };
    let flat: Vec<_> = rows.iter().flatten().copied().collect();
    UnitaryOperator::new(CMatrix::from_row_slice(3, 3, &flat))
}

/// Unbiased six-port beam splitter `T_kl = α^{(k−1)(l−1)}/√3`, `α = e^{2πi/3}`.
pub fn six_port_matrix() -> UnitaryOperator {
    let s = 1.0 / 3f64.sqrt();
    let t = CMatrix::from_fn(3, 3, |k, l| root_of_unity(k * l, 3) * s);
    UnitaryOperator::new(t).expect("six-port matrix is unitary")
}

/// Pauli matrix σ_x, σ_y, σ_z for index 1, 2, 3.
pub fn pauli(index: usize) -> Result<CMatrix> {
    let o = c(0.0, 0.0);
    let entries = match index {
        1 => [o, c(1.0, 0.0), c(1.0, 0.0), o],
        2 => [o, c(0.0, -1.0), c(0.0, 1.0), o],
        3 => [c(1.0, 0.0), o, o, c(-1.0, 0.0)],
        _ => return domain(format!("Pauli index {index} not in 1..=3")),
    };
    Ok(CMatrix::from_row_slice(2, 2, &entries))
}

/// Standard Gell-Mann generator λ_index of SU(3), index 1..=8.
pub fn gell_mann(index: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(3, 3);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match index {
        1 => {
            m[(0, 1)] = one;
            m[(1, 0)] = one;
        }
        2 => {
            m[(0, 1)] = -i;
            m[(1, 0)] = i;
        }
        3 => {
            m[(0, 0)] = one;
            m[(1, 1)] = -one;
        }
        4 => {
            m[(0, 2)] = one;
            m[(2, 0)] = one;
        }
        5 => {
            m[(0, 2)] = -i;
            m[(2, 0)] = i;
        }
        6 => {
            m[(1, 2)] = one;
            m[(2, 1)] = one;
        }
        7 => {
            m[(1, 2)] = -i;
            m[(2, 1)] = i;
        }
        8 => {
            let s = 1.0 / 3f64.sqrt();
            m[(0, 0)] = c(s, 0.0);
            m[(1, 1)] = c(s, 0.0);
            m[(2, 2)] = c(-2.0 * s, 0.0);
        }
        _ => return domain(format!("Gell-Mann index {index} not in 1..=8")),
    }
    Ok(m)
}
