use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use gcore_core::analytics::{self, EfficiencyInput};
use gcore_core::attacks::{self, AttackConfig, GuessStrategy};
use gcore_core::permutation;
use gcore_core::protocol::{self, SessionTranscript, Verdict};
use gcore_core::states::{self, BasisLabel};
use gcore_core::GcoreError;

fn py_err(e: GcoreError) -> PyErr {
    match e {
        GcoreError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gcore_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// An (N, d) family of entangled basis states.
#[pyclass(frozen)]
struct Family {
    inner: states::Family,
}

#[pymethods]
impl Family {
    #[new]
    fn new(particles: usize, dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: states::Family::new(particles, dim).py()?,
        })
    }

    #[getter]
    fn particles(&self) -> usize {
        self.inner.particles
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn size(&self) -> usize {
        self.inner.size()
    }

    /// Digit string of the basis label with this index.
    fn label(&self, index: usize) -> PyResult<String> {
        Ok(BasisLabel::from_index(self.inner, index).py()?.to_string())
    }

    /// Amplitudes of basis state `index` in the computational basis.
    fn basis_state(&self, index: usize) -> PyResult<Vec<Complex64>> {
        let label = BasisLabel::from_index(self.inner, index).py()?;
        let state = self.inner.basis_state(&label).py()?;
        Ok(state.amplitudes().iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Family(particles={}, dim={})",
            self.inner.particles, self.inner.dim
        )
    }
}

/// Session parameters. `adversary` is `None`, `"intercept-resend"` or
/// `"cloner"`.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct SessionConfig {
    inner: protocol::SessionConfig,
}

#[pymethods]
impl SessionConfig {
    #[new]
    #[pyo3(signature = (particles=3, dim=2, units=100, key="001".to_string(), check_fraction=0.25, seed=0, receiver_key=None, group_size=1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        particles: usize,
        dim: usize,
        units: usize,
        key: String,
        check_fraction: f64,
        seed: u64,
        receiver_key: Option<String>,
        group_size: usize,
    ) -> Self {
        Self {
            inner: protocol::SessionConfig {
                particles,
                dim,
                units,
                key,
                group_size,
                receiver_key,
                check_fraction,
                seed,
                adversary: None,
            },
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Puts an intercept-resend adversary in the channel.
    #[pyo3(signature = (offsets=None, eve_key=None))]
    fn with_intercept_resend(&self, offsets: Option<Vec<usize>>, eve_key: Option<String>) -> Self {
        let guess = match eve_key {
            Some(key) => GuessStrategy::Fixed { key },
            None => GuessStrategy::Uniform,
        };
        let mut out = self.clone();
        out.inner.adversary = Some(AttackConfig::InterceptResend { guess, offsets });
        out
    }

    /// Puts a symmetric cloner of first-clone fidelity `fidelity` in the
    /// channel.
    fn with_cloner(&self, fidelity: f64) -> Self {
        let mut out = self.clone();
        out.inner.adversary = Some(AttackConfig::Cloner { fidelity });
        out
    }

    #[getter]
    fn adversary(&self) -> Option<&'static str> {
        self.inner.adversary.as_ref().map(|a| a.name())
    }

    #[getter]
    fn check_count(&self) -> usize {
        self.inner.check_count()
    }
}

#[pyclass(frozen)]
struct Session {
    inner: SessionTranscript,
}

#[pymethods]
impl Session {
    /// `"clean"` or `"eavesdropped"`.
    #[getter]
    fn verdict(&self) -> &'static str {
        match self.inner.verdict() {
            Verdict::Clean => "clean",
            Verdict::Eavesdropped => "eavesdropped",
        }
    }

    #[getter]
    fn operations(&self) -> Vec<usize> {
        self.inner.operations.clone()
    }

    #[getter]
    fn prepared(&self) -> Vec<usize> {
        self.inner.prepared.clone()
    }

    #[getter]
    fn measured(&self) -> Vec<usize> {
        self.inner.measured.clone()
    }

    #[getter]
    fn alice_key(&self) -> Vec<usize> {
        self.inner.sift.alice_key.clone()
    }

    #[getter]
    fn bob_key(&self) -> Vec<usize> {
        self.inner.sift.bob_key.clone()
    }

    #[getter]
    fn check_positions(&self) -> Vec<usize> {
        self.inner.sift.check_positions.clone()
    }

    fn label_error_rate(&self) -> f64 {
        self.inner.label_error_rate()
    }

    fn checked_error_rate(&self) -> f64 {
        self.inner.checked_error_rate()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }
}

#[pyfunction]
#[pyo3(signature = (config, threads=1))]
fn run_session(config: &SessionConfig, threads: usize) -> PyResult<Session> {
    Ok(Session {
        inner: protocol::run_session_threads(&config.inner, threads.max(1)).py()?,
    })
}

/// Runs the session under its adversary, intercept-resend if none is set.
/// Returns the session and the attack report as JSON.
#[pyfunction]
#[pyo3(signature = (config, threads=1))]
fn intercept_resend(config: &SessionConfig, threads: usize) -> PyResult<(Session, String)> {
    let attack = config
        .inner
        .adversary
        .clone()
        .unwrap_or_else(AttackConfig::intercept_resend);
    let (t, report) = attacks::intercept_resend(&config.inner, &attack, threads.max(1)).py()?;
    let json = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((Session { inner: t }, json))
}

/// 1-indexed mapping of operation E_k.
#[pyfunction]
fn general_permutation(dim: usize, particles: usize, k: usize) -> PyResult<Vec<usize>> {
    Ok(permutation::general_permutation(dim, particles, k)
        .py()?
        .mapping()
        .to_vec())
}

#[pyfunction]
fn operation_label(dim: usize, particles: usize, k: usize) -> PyResult<String> {
    permutation::operation_label(dim, particles, k).py()
}

/// Sends item i to position `perm[i]` (1-indexed).
#[pyfunction]
fn apply_rearrangement<'py>(
    items: Vec<Bound<'py, PyAny>>,
    perm: Vec<usize>,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let p = permutation::PermutationOp::new(perm).py()?;
    permutation::apply_rearrangement(&items, &p).py()
}

#[pyfunction]
fn invert_rearrangement<'py>(
    items: Vec<Bound<'py, PyAny>>,
    perm: Vec<usize>,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let p = permutation::PermutationOp::new(perm).py()?;
    permutation::invert_rearrangement(&items, &p).py()
}

#[pyfunction]
fn detection_probability(error_rate: f64, checks: usize) -> f64 {
    protocol::detection_probability(error_rate, checks)
}

#[pyfunction]
fn paper_error_rate(basis_size: usize, sources: usize) -> PyResult<f64> {
    attacks::paper_error_rate(basis_size, sources).py()
}

/// Bob's exact per-label error when Eve regroups by `offsets`.
#[pyfunction]
fn intercept_oracle(particles: usize, dim: usize, offsets: Vec<usize>) -> PyResult<f64> {
    let family = states::Family::new(particles, dim).py()?;
    attacks::intercept_oracle(family, &offsets).py()
}

#[pyfunction]
#[pyo3(signature = (fidelity, dim=3))]
fn optimal_eve_fidelity(fidelity: f64, dim: usize) -> PyResult<f64> {
    attacks::optimal_eve_fidelity(fidelity, dim).py()
}

#[pyfunction]
#[pyo3(signature = (fidelity, dim=3))]
fn mutual_information(fidelity: f64, dim: usize) -> PyResult<f64> {
    attacks::mutual_information(fidelity, dim).py()
}

/// `(F*, D*, I(F*), bisection root)` for d = 2 or 3.
#[pyfunction]
fn security_threshold(dim: usize) -> PyResult<(f64, f64, f64, f64)> {
    let t = attacks::security_threshold(dim).py()?;
    Ok((t.fidelity, t.disturbance, t.information, t.numeric_fidelity))
}

/// Rows `(F, F_E, I_AB, I_AE)` on a uniform grid over [1/3, 1].
#[pyfunction]
fn cloner_curve(points: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    Ok(attacks::cloner_curve(points)
        .py()?
        .into_iter()
        .map(|r| (r.f, r.f_e, r.i_ab, r.i_ae))
        .collect())
}

/// Fidelity and disturbances of a clone from its d×d amplitude matrix,
/// given row-major (row = phase, column = shift).
#[pyfunction]
fn clone_fidelity(dim: usize, amplitudes: Vec<Complex64>) -> PyResult<(f64, Vec<f64>)> {
    let a = attacks::ClonerAmplitudes::new(dim, amplitudes).py()?;
    let f = attacks::bob_fidelity(&a);
    Ok((f.fidelity, f.disturbances))
}

#[pyfunction]
fn efficiency(b_s: f64, q_t: f64, b_t: f64) -> PyResult<f64> {
    analytics::efficiency(&EfficiencyInput::new(b_s, q_t, b_t).py()?).py()
}

#[pyfunction]
fn capacity(units: usize, particles: usize, dim: usize) -> PyResult<(f64, f64)> {
    analytics::capacity(units, particles, dim).py()
}

/// log2 of the chance of guessing `digits` base-d key digits.
#[pyfunction]
fn key_guess_probability(dim: usize, digits: usize) -> PyResult<f64> {
    analytics::key_guess_probability(dim, digits).py()
}

/// `(name, expected, reproduced, tolerance, passed)`.
type LedgerRow = (String, f64, f64, f64, bool);

#[pyfunction]
fn verify_paper() -> PyResult<Vec<LedgerRow>> {
    Ok(analytics::verify_paper()
        .py()?
        .items
        .into_iter()
        .map(|i| (i.name, i.expected, i.reproduced, i.tolerance, i.pass))
        .collect())
}

#[pymodule]
fn gcore(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Family>()?;
    m.add_class::<SessionConfig>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(run_session, m)?)?;
    m.add_function(wrap_pyfunction!(intercept_resend, m)?)?;
    m.add_function(wrap_pyfunction!(general_permutation, m)?)?;
    m.add_function(wrap_pyfunction!(operation_label, m)?)?;
    m.add_function(wrap_pyfunction!(apply_rearrangement, m)?)?;
    m.add_function(wrap_pyfunction!(invert_rearrangement, m)?)?;
    m.add_function(wrap_pyfunction!(detection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(paper_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(intercept_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_eve_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(security_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(cloner_curve, m)?)?;
    m.add_function(wrap_pyfunction!(clone_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(key_guess_probability, m)?)?;
    m.add_function(wrap_pyfunction!(verify_paper, m)?)?;
    Ok(())
}
