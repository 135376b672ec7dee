//! Phase-covariant cloning: amplitude matrices, their Fourier duals and the
//! closed-form fidelity and information figures.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::states::{root_of_unity, TOL_EXACT};

/// Amplitudes `a_{m,n}` of a Weyl-covariant cloner, stored row-major. The
/// first clone suffers error `U` with phase index `m` and shift index `n`
/// with probability `|a_{m,n}|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonerAmplitudes {
    d: usize,
    entries: Vec<Complex64>,
}

impl ClonerAmplitudes {
    pub fn new(d: usize, entries: Vec<Complex64>) -> Result<Self> {
        if d < 2 || entries.len() != d * d {
            return domain(format!("need {} amplitudes for d = {d}", d * d));
        }
        let norm: f64 = entries.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL_EXACT {
            return domain(format!("amplitudes have squared norm {norm}, not 1"));
        }
        Ok(Self { d, entries })
    }

    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        Self::new(d, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Qutrit pattern with first row `(v, x, x)` and constant rows `y`, `z`.
    pub fn phase_covariant(v: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_real(3, &[v, x, x, y, y, y, z, z, z])
    }

    /// `a_{0,0} = v`, every other entry `x`.
    pub fn symmetric(d: usize, v: f64, x: f64) -> Result<Self> {
        let mut entries = vec![x; d * d];
        entries[0] = v;
        Self::from_real(d, &entries)
    }

    /// The symmetric cloner whose first clone has fidelity `f`.
    pub fn symmetric_for_fidelity(d: usize, f: f64) -> Result<Self> {
        if d < 2 || !(1.0 / d as f64..=1.0).contains(&f) {
            return domain(format!("fidelity {f} outside [1/{d}, 1]"));
        }
        let x2 = (1.0 - f) / (d * (d - 1)) as f64;
        let v2 = (f - (1.0 - f) / d as f64).max(0.0);
        let mut a = Self::symmetric(d, v2.sqrt(), x2.sqrt());
        if a.is_err() {
            // absorb rounding in the last bits
            let norm = v2 + (d * d - 1) as f64 * x2;
            a = Self::symmetric(d, (v2 / norm).sqrt(), (x2 / norm).sqrt());
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.d + n]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Error probabilities `|a_{m,n}|²`, row-major.
    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// `b_{m,n} = (1/d) Σ_{x,y} e^{2πi(nx − my)/d} a_{x,y}`. The transform is
/// its own inverse.
pub fn fourier_dual(a: &ClonerAmplitudes) -> ClonerAmplitudes {
    let d = a.d;
    let scale = 1.0 / d as f64;
    let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
    for m in 0..d {
        for n in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..d {
                for y in 0..d {
                    let k = (n * x + (d - m) * y) % d;
                    acc += root_of_unity(k, d) * a.get(x, y);
                }
            }
            entries[m * d + n] = acc * scale;
        }
    }
    ClonerAmplitudes { d, entries }
}

/// Fidelity of a clone and its disturbances, one per nonzero shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloneFidelity {
    pub fidelity: f64,
    pub disturbances: Vec<f64>,
}

/// Column weights of the amplitude matrix: the shift-free column is the
/// fidelity, the others the disturbances.
pub fn bob_fidelity(a: &ClonerAmplitudes) -> CloneFidelity {
    let d = a.d;
    let column = |n: usize| (0..d).map(|m| a.get(m, n).norm_sqr()).sum::<f64>();
    CloneFidelity {
        fidelity: column(0),
        disturbances: (1..d).map(column).collect(),
    }
}

/// Fidelity and disturbance `(F_B, D_B)` of the second clone for the qutrit
/// pattern with `y = z`.
pub fn second_clone_fidelity(v: f64, x: f64, y: f64, z: f64) -> Result<(f64, f64)> {
    if (y - z).abs() > TOL_EXACT {
        return domain(format!(
            "second-clone formula needs y = z, got y = {y}, z = {z}"
        ));
    }
    ClonerAmplitudes::phase_covariant(v, x, y, z)?;
    let f = (v * v + 2.0 * x * x + 12.0 * y * y + 8.0 * x * y + 4.0 * v * y) / 3.0;
    let dist = (v * v + 2.0 * x * x + 3.0 * y * y - 4.0 * x * y - 2.0 * v * y) / 3.0;
    Ok((f, dist))
}

/// Eve's fidelity `((v + 8x)² + 2(v − x)²)/9` for the symmetric qutrit
/// cloner with `v² + 8x² = 1`.
pub fn eve_fidelity(v: f64, x: f64) -> Result<f64> {
    let norm = v * v + 8.0 * x * x;
    if (norm - 1.0).abs() > TOL_EXACT {
        return domain(format!("v² + 8x² = {norm}, not 1"));
    }
    Ok(((v + 8.0 * x).powi(2) + 2.0 * (v - x).powi(2)) / 9.0)
}

/// Eve's best fidelity against a first clone of fidelity `f` in dimension
/// `d`: `F/d + (d−1)(1−F)/d + (2/d)√((d−1)F(1−F))`.
pub fn optimal_eve_fidelity(f: f64, d: usize) -> Result<f64> {
    if d < 2 || !(1.0 / d as f64 - TOL_EXACT..=1.0).contains(&f) {
        return domain(format!("fidelity {f} outside [1/{d}, 1]"));
    }
    let dd = d as f64;
    let value =
        f / dd + (dd - 1.0) * (1.0 - f) / dd + 2.0 / dd * ((dd - 1.0) * f * (1.0 - f)).sqrt();
    Ok(value.min(1.0))
}

/// The qutrit cloner singled out for a target fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalCloner {
    pub fidelity: f64,
    /// `(v, x) = (F, √(F(1−F)/2))` as written.
    pub literal: (f64, f64),
    /// `v² + 8x²` of the literal pair.
    pub literal_norm: f64,
    /// The literal pair rescaled onto `v² + 8x² = 1`.
    pub normalized: (f64, f64),
    /// Closed-form optimum for Eve at this fidelity.
    pub eve_fidelity: f64,
}

pub fn optimal_cloner(f: f64) -> Result<OptimalCloner> {
    if !(1.0 / 3.0..=1.0).contains(&f) {
        return domain(format!("fidelity {f} outside [1/3, 1]"));
    }
    let (v, x) = (f, (f * (1.0 - f) / 2.0).sqrt());
    let norm = v * v + 8.0 * x * x;
    let s = norm.sqrt();
    Ok(OptimalCloner {
        fidelity: f,
        literal: (v, x),
        literal_norm: norm,
        normalized: (v / s, x / s),
        eve_fidelity: optimal_eve_fidelity(f, 3)?,
    })
}

/// `log2 d + F log2 F + (1−F) log2((1−F)/(d−1))`, with `0 log 0 = 0`.
pub fn mutual_information(f: f64, d: usize) -> Result<f64> {
    if d < 2 || !(0.0..=1.0).contains(&f) {
        return domain(format!("fidelity {f} or dimension {d} out of range"));
    }
    let xlog = |p: f64, q: f64| if p <= 0.0 { 0.0 } else { p * q.log2() };
    let dd = d as f64;
    let value = dd.log2() + xlog(f, f) + xlog(1.0 - f, (1.0 - f) / (dd - 1.0));
    Ok(value.clamp(0.0, dd.log2()))
}

/// Point where Bob's and Eve's information coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub dim: usize,
    /// Closed form `(1 + 1/√d)/2`.
    pub fidelity: f64,
    pub disturbance: f64,
    /// Bob's information at the threshold.
    pub information: f64,
    /// Root of `I_AB − I_AE` found by bisection.
    pub numeric_fidelity: f64,
}

fn information_gap(f: f64, d: usize) -> Result<f64> {
    Ok(mutual_information(f, d)? - mutual_information(optimal_eve_fidelity(f, d)?, d)?)
}

pub fn security_threshold(d: usize) -> Result<Threshold> {
    if d != 2 && d != 3 {
        return domain(format!("threshold is defined for d = 2 or 3, got {d}"));
    }
    let fidelity = 0.5 * (1.0 + 1.0 / (d as f64).sqrt());
    let (mut lo, mut hi) = (1.0 / d as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if information_gap(mid, d)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(Threshold {
        dim: d,
        fidelity,
        disturbance: 1.0 - fidelity,
        information: mutual_information(fidelity, d)?,
        numeric_fidelity: 0.5 * (lo + hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "F_E")]
    pub f_e: f64,
    #[serde(rename = "I_AB")]
    pub i_ab: f64,
    #[serde(rename = "I_AE")]
    pub i_ae: f64,
}

/// Qutrit fidelity/information table on a uniform grid over [1/3, 1].
pub fn cloner_curve(points: usize) -> Result<Vec<CurveRow>> {
    if points < 2 {
        return domain(format!("need at least 2 grid points, got {points}"));
    }
    let lo = 1.0 / 3.0;
    (0..points)
        .map(|i| {
            let f = if i + 1 == points {
                1.0
            } else {
                lo + (1.0 - lo) * i as f64 / (points - 1) as f64
            };
            let f_e = optimal_eve_fidelity(f, 3)?;
            Ok(CurveRow {
                f,
                f_e,
                i_ab: mutual_information(f, 3)?,
                i_ae: mutual_information(f_e, 3)?,
            })
        })
        .collect()
}

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("F,F_E,I_AB,I_AE\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.f, r.f_e, r.i_ab, r.i_ae));
    }
    out
}
