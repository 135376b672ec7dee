//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use gcore::analytics::{capacity, efficiency, emit_report, verify_paper, Accounting};
use gcore::attacks::{
    bob_fidelity, correlation_attack_mean, eve_fidelity, fourier_dual, intercept_resend,
    misgrouped_density, mutual_information, optimal_eve_fidelity, paper_error_rate,
    security_threshold, AttackConfig, ClonerAmplitudes, TupleSource,
};
use gcore::protocol::{run_session_threads, SessionConfig};
use gcore::states::{
    error_operator, ghz_basis_state, measure_in_family, multi_entangled_state, qudit_bell_state,
    qutrit_transform_unitary, DensityOperator, Family, ObservableDirection, Sign, StateVector,
    TOL_ACCUM, TOL_EXACT,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Name, check and optional runtime budget.
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ket(dims: &[usize], terms: &[(Vec<usize>, Complex64)]) -> StateVector {
    let total: usize = dims.iter().product();
    let mut amps = vec![Complex64::new(0.0, 0.0); total];
    let norm = 1.0 / (terms.len() as f64).sqrt();
    for (digits, a) in terms {
        let idx = digits.iter().zip(dims).fold(0, |acc, (x, d)| acc * d + x);
        amps[idx] += a * norm;
    }
    StateVector::new(dims.to_vec(), amps).unwrap()
}

fn omega(k: usize, d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
}

fn basis_correctness() -> Check {
    for (n, d) in [(3, 2), (2, 3), (3, 3)] {
        let basis = Family::new(n, d).map_err(err)?.basis();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                ensure(
                    (a.inner(b) - expected).norm() < TOL_ACCUM,
                    format!("({n},{d}) Gram entry ({i},{j})"),
                )?;
            }
        }
    }
    // Three-qubit GHZ kets (|j⟩|0⟩ ± |2²−j−1⟩|1⟩)/√2, written out.
    let ghz: [([usize; 3], [usize; 3]); 4] = [
        ([0, 0, 0], [1, 1, 1]),
        ([0, 1, 0], [1, 0, 1]),
        ([1, 0, 0], [0, 1, 1]),
        ([1, 1, 0], [0, 0, 1]),
    ];
    for (j, (a, b)) in ghz.iter().enumerate() {
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let expected = ket(
                &[2, 2, 2],
                &[(a.to_vec(), 1.0.into()), (b.to_vec(), s.into())],
            );
            let got = ghz_basis_state(3, j, sign).map_err(err)?;
            ensure(
                got.approx_eq(&expected, TOL_EXACT),
                format!("GHZ ψ{j} {sign:?}"),
            )?;
        }
    }
    let mut count = 8;
    // Two-qutrit Bell kets Σ_j ω^{jn}|j, j+m⟩/√3.
    for n in 0..3 {
        for m in 0..3 {
            let terms: Vec<_> = (0..3)
                .map(|j| (vec![j, (j + m) % 3], omega(j * n, 3)))
                .collect();
            let got = multi_entangled_state(3, 2, n, &[m]).map_err(err)?;
            ensure(
                got.approx_eq(&ket(&[3, 3], &terms), TOL_EXACT),
                format!("ψ{n}{m}"),
            )?;
            count += 1;
        }
    }
    // Three-qutrit kets Σ_j ω^{jp}|j, j+s, j+t⟩/√3.
    for p in 0..3 {
        for s in 0..3 {
            for t in 0..3 {
                let terms: Vec<_> = (0..3)
                    .map(|j| (vec![j, (j + s) % 3, (j + t) % 3], omega(j * p, 3)))
                    .collect();
                let got = multi_entangled_state(3, 3, p, &[s, t]).map_err(err)?;
                ensure(
                    got.approx_eq(&ket(&[3, 3, 3], &terms), TOL_EXACT),
                    format!("three-qutrit ({p};{s},{t})"),
                )?;
                count += 1;
            }
        }
    }
    Ok(format!(
        "Gram = I for (3,2),(2,3),(3,3); {count} explicit kets"
    ))
}

fn transform_property() -> Check {
    let psi00 = qudit_bell_state(3, 0, 0).map_err(err)?;
    for i in 0..3 {
        for j in 0..3 {
            let out = psi00
                .apply_local(1, &qutrit_transform_unitary(i, j).map_err(err)?)
                .map_err(err)?;
            let target = qudit_bell_state(3, i, j).map_err(err)?;
            ensure(
                out.approx_eq_up_to_phase(&target, TOL_EXACT),
                format!("U_{i}{j}"),
            )?;
        }
    }
    let mut count = 0;
    for d in 2..=5 {
        let psi00 = qudit_bell_state(d, 0, 0).map_err(err)?;
        for m in 0..d {
            for n in 0..d {
                let out = psi00
                    .apply_local(1, &error_operator(d, m, n).map_err(err)?)
                    .map_err(err)?;
                let target = qudit_bell_state(d, n, m).map_err(err)?;
                ensure(
                    out.approx_eq_up_to_phase(&target, TOL_EXACT),
                    format!("d={d} U_{n}{m}"),
                )?;
                count += 1;
            }
        }
    }
    Ok(format!("9 qutrit operators, {count} operators for d=2..5"))
}

fn protocol_correctness() -> Check {
    for (n, d, key) in [(3, 2, "001110"), (2, 3, "0121")] {
        let config = SessionConfig {
            particles: n,
            dim: d,
            units: 1000,
            key: key.into(),
            seed: 31,
            ..SessionConfig::default()
        };
        let t = run_session_threads(&config, 4).map_err(err)?;
        ensure(t.prepared == t.measured, format!("({n},{d}) labels differ"))?;
        ensure(
            t.label_errors == 0,
            format!("({n},{d}) {} errors", t.label_errors),
        )?;
        ensure(t.sift.alice_key == t.sift.bob_key, "sifted keys differ")?;
    }
    Ok("10^3 units each for (3,2) and (2,3), 100% agreement".into())
}

fn misgroup_densities() -> Check {
    let ghz = Family::new(3, 2).map_err(err)?;
    let rho = misgrouped_density(ghz, &[1, 2, 3]).map_err(err)?;
    ensure(
        rho.is_maximally_mixed(TOL_EXACT),
        "three sources is not I/8",
    )?;
    let probs = measure_in_family(&rho, ghz).map_err(err)?.probabilities;
    ensure(
        probs.iter().all(|p| (p - 0.125).abs() < TOL_EXACT),
        "outcomes not 12.5%",
    )?;

    let rho = misgrouped_density(ghz, &[1, 2, 2]).map_err(err)?;
    for i in 0..8 {
        for j in 0..8 {
            let bc = i % 4;
            let expected = if i == j && (bc == 0 || bc == 3) {
                0.25
            } else {
                0.0
            };
            ensure(
                (rho.matrix()[(i, j)] - expected).norm() < TOL_EXACT,
                format!("two-source entry ({i},{j})"),
            )?;
        }
    }
    let bell = Family::new(2, 3).map_err(err)?;
    let rho = misgrouped_density(bell, &[1, 2]).map_err(err)?;
    let target = DensityOperator::maximally_mixed(vec![3, 3]);
    ensure(rho.approx_eq(&target, TOL_EXACT), "two qutrits not I/9")?;
    Ok("I/8, two-source block, I/9, 1/8 per outcome".into())
}

fn paper_error_figures() -> Check {
    for (d, k, printed) in [(8, 3, "66.99"), (8, 2, "76.56"), (9, 2, "79.01")] {
        let v = paper_error_rate(d, k).map_err(err)?;
        ensure(
            format!("{:.2}", 100.0 * v) == printed,
            format!("(1-1/{d})^{k} = {v}"),
        )?;
    }
    let mut detail = Vec::new();
    for (n, d, key) in [(3, 2, "001"), (2, 3, "0121")] {
        let config = SessionConfig {
            particles: n,
            dim: d,
            units: 10_000,
            key: key.into(),
            seed: 77,
            ..SessionConfig::default()
        };
        let (_, report) =
            intercept_resend(&config, &AttackConfig::intercept_resend(), 4).map_err(err)?;
        let analytic = report.analytic_label_error.ok_or("no analytic error")?;
        let est = report.empirical_label_error;
        ensure(
            report.within_three_sigma == Some(true),
            format!(
                "({n},{d}) MC {} ± {} vs {analytic}",
                est.value, est.std_error
            ),
        )?;
        ensure(
            report.paper_error_rates.len() == n && report.uniform_outcome_error > 0.0,
            "conventions missing from report",
        )?;
        detail.push(format!(
            "({n},{d}) MC {:.4}±{:.4} vs {analytic:.4}",
            est.value, est.std_error
        ));
    }
    Ok(format!("66.99/76.56/79.01; {}", detail.join(", ")))
}

fn correlation_futility() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ghz = Family::new(3, 2).map_err(err)?;
    let bell = Family::new(2, 3).map_err(err)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let qubit: Vec<ObservableDirection> = (0..3)
            .map(|_| {
                ObservableDirection::Qubit(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            })
            .collect();
        let qutrit: Vec<ObservableDirection> = (0..2)
            .map(|_| {
                ObservableDirection::Qutrit(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            })
            .collect();
        for source in [TupleSource::UniformMixture, TupleSource::Uncorrelated] {
            worst = worst.max(
                correlation_attack_mean(ghz, &qubit, source)
                    .map_err(err)?
                    .abs(),
            );
            worst = worst.max(
                correlation_attack_mean(bell, &qutrit, source)
                    .map_err(err)?
                    .abs(),
            );
        }
    }
    ensure(worst < TOL_ACCUM, format!("largest mean {worst}"))?;
    Ok(format!("100 direction sets, largest |mean| {worst:.1e}"))
}

fn cloning_machine() -> Check {
    let universal = ClonerAmplitudes::symmetric_for_fidelity(3, 0.75).map_err(err)?;
    let f = bob_fidelity(&universal).fidelity;
    let f_e = bob_fidelity(&fourier_dual(&universal)).fidelity;
    ensure(
        (f - 0.75).abs() < TOL_EXACT && (f_e - 0.75).abs() < TOL_EXACT,
        format!("F={f}, F_E={f_e}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let s = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (v, x, y, z) = (
            w[0] / s,
            w[1] / s / 2f64.sqrt(),
            w[2] / s / 3f64.sqrt(),
            w[3] / s / 3f64.sqrt(),
        );
        let c = bob_fidelity(&ClonerAmplitudes::phase_covariant(v, x, y, z).map_err(err)?);
        worst = worst.max((c.fidelity + c.disturbances.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst < TOL_EXACT, format!("F + D1 + D2 off by {worst}"))?;
    let fe = eve_fidelity(1.0, 0.0).map_err(err)?;
    ensure(
        (fe - 1.0 / 3.0).abs() < TOL_EXACT,
        format!("F_E(1,0) = {fe}"),
    )?;
    Ok(format!(
        "F = F_E = 3/4, 100 cloners within {worst:.1e}, F_E(1,0) = 1/3"
    ))
}

fn security_thresholds() -> Check {
    let t3 = security_threshold(3).map_err(err)?;
    let closed = 0.5 * (1.0 + 1.0 / 3f64.sqrt());
    ensure((t3.fidelity - closed).abs() < TOL_EXACT, "closed form")?;
    ensure(
        (t3.numeric_fidelity - closed).abs() < 1e-9,
        format!("root {}", t3.numeric_fidelity),
    )?;
    let fe = optimal_eve_fidelity(closed, 3).map_err(err)?;
    ensure((fe - closed).abs() < TOL_EXACT, "F_E != F at threshold")?;
    let i_ab = mutual_information(closed, 3).map_err(err)?;
    let i_ae = mutual_information(fe, 3).map_err(err)?;
    ensure((i_ab - i_ae).abs() < TOL_EXACT, "I_AB != I_AE")?;
    // log2 3 + F log2 F + (1−F) log2((1−F)/2), evaluated by hand
    let by_hand =
        3f64.log2() + closed * closed.log2() + (1.0 - closed) * ((1.0 - closed) / 2.0).log2();
    ensure(
        (i_ab - by_hand).abs() < TOL_EXACT && (i_ab - 0.6295).abs() < 5e-4,
        format!("I = {i_ab}"),
    )?;
    let t2 = security_threshold(2).map_err(err)?;
    let d_qubit = 0.5 * (1.0 - 0.5f64.sqrt());
    ensure(
        (t2.disturbance - d_qubit).abs() < TOL_EXACT,
        "qubit disturbance",
    )?;
    ensure(
        (t2.numeric_fidelity - t2.fidelity).abs() < 1e-9,
        "qubit root",
    )?;
    Ok(format!(
        "F* = {closed:.9}, D_qubit = {d_qubit:.9}, I(F*) = {i_ab:.6}"
    ))
}

fn efficiency_and_capacity() -> Check {
    for (acc, eta) in [
        (
            Accounting::Gcore {
                dim: 2,
                particles: 3,
            },
            1.0,
        ),
        (
            Accounting::Gcore {
                dim: 3,
                particles: 2,
            },
            1.0,
        ),
        (Accounting::Bb84, 0.25),
        (Accounting::Epr, 0.5),
    ] {
        let got = efficiency(&acc.input().map_err(err)?).map_err(err)?;
        ensure((got - eta).abs() < TOL_EXACT, format!("{acc:?}: {got}"))?;
    }
    for (n, d, bits) in [
        (2, 2, 2.0),
        (3, 2, 3.0),
        (2, 3, 9f64.log2()),
        (3, 3, 27f64.log2()),
    ] {
        let (total, _) = capacity(1, n, d).map_err(err)?;
        ensure(total == bits, format!("capacity ({n},{d}) = {total}"))?;
    }
    Ok("η = 1, 0.25, 0.5; capacities 2, 3, log2 9, log2 27".into())
}

fn determinism() -> Check {
    let config = SessionConfig {
        units: 200,
        seed: 12,
        adversary: Some(AttackConfig::intercept_resend()),
        ..SessionConfig::default()
    };
    let report = |threads| -> Result<String, String> {
        let (t, a) =
            intercept_resend(&config, config.adversary.as_ref().unwrap(), threads).map_err(err)?;
        emit_report(&[(t, Some(a))], &[], None)
            .and_then(|r| r.to_json())
            .map_err(err)
    };
    ensure(report(1)? == report(4)?, "library reports differ")?;

    let bin = env!("CARGO_BIN_EXE_gcore");
    let args = [
        "run",
        "--units",
        "100",
        "--seed",
        "7",
        "--adversary",
        "intercept-resend",
    ];
    let a = Command::new(bin).args(args).output().map_err(err)?;
    let b = Command::new(bin).args(args).output().map_err(err)?;
    ensure(
        !a.stdout.is_empty() && a.stdout == b.stdout,
        "CLI reports differ",
    )?;

    let ledger = verify_paper().map_err(err)?;
    ensure(
        ledger.all_pass(),
        format!("{} ledger items fail", ledger.failures()),
    )?;
    let v = Command::new(bin)
        .arg("verify-paper")
        .output()
        .map_err(err)?;
    ensure(v.status.code() == Some(0), "verify-paper exit code")?;
    Ok(format!(
        "byte-identical reports; {} ledger items PASS",
        ledger.items.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "basis correctness",
            basis_correctness,
            Some(Duration::from_secs(1)),
        ),
        (
            "transform property",
            transform_property,
            Some(Duration::from_secs(1)),
        ),
        (
            "protocol correctness",
            protocol_correctness,
            Some(Duration::from_secs(10)),
        ),
        ("mis-group densities", misgroup_densities, None),
        (
            "paper error figures",
            paper_error_figures,
            Some(Duration::from_secs(60)),
        ),
        ("correlation futility", correlation_futility, None),
        ("cloning machine", cloning_machine, None),
        (
            "security threshold",
            security_thresholds,
            Some(Duration::from_secs(1)),
        ),
        ("efficiency and capacity", efficiency_and_capacity, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if elapsed > *limit {
                outcome = Err(format!("took {elapsed:.2?}, budget {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
