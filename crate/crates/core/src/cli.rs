//! Command-line front end.
//!
//! Exit codes: 0 when a session is clean or every ledger item passes,
//! 2 when the check detects eavesdropping, 1 on bad input, I/O failure or
//! a failing ledger item.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytics::{emit_report, verify_paper, write_output};
use crate::attacks::{cloner_curve, curve_to_csv, AttackConfig, AttackReport, GuessStrategy};
use crate::error::{GcoreError, Result};
use crate::permutation::{general_permutation, operation_label, ControlKey};
use crate::protocol::{run_session_threads, SessionConfig, Verdict};
use crate::states::Family;

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DETECTED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gcore",
    version,
    about = "GCORE quantum key distribution simulator",
    after_help = "Exit codes: 0 clean session or all ledger items pass, \
                  2 eavesdropping detected, 1 usage, I/O or ledger failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a session and write its report as JSON.
    Run(SessionArgs),
    /// Run a session with an adversary (intercept-resend unless given).
    Attack(SessionArgs),
    /// Write the qutrit fidelity/information table as CSV.
    ClonerCurve {
        #[arg(long, default_value_t = 201)]
        grid_points: usize,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Recompute every published figure and print PASS/FAIL per item.
    VerifyPaper {
        /// Also write the ledger as JSON here.
        #[arg(long)]
        out: Option<String>,
    },
    /// Print every rearrangement E_k as a 1-indexed mapping.
    Tables {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        particles: usize,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversaryKind {
    InterceptResend,
    Cloner,
}

/// Session flags. Each one overrides the config file, which overrides the
/// defaults.
#[derive(Debug, Args)]
pub struct SessionArgs {
    /// TOML or JSON session config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub units: Option<usize>,
    /// Control key as base-d digits.
    #[arg(long)]
    pub key: Option<String>,
    /// Key Bob uses; defaults to the control key.
    #[arg(long)]
    pub receiver_key: Option<String>,
    /// Units sharing one key block.
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub check_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub adversary: Option<AdversaryKind>,
    /// First-clone fidelity for the cloner.
    #[arg(long)]
    pub fidelity: Option<f64>,
    /// Comma-separated 1-based source offsets, one per lane.
    #[arg(long, value_delimiter = ',')]
    pub offsets: Option<Vec<usize>>,
    /// Eve's own control key instead of uniform guesses.
    #[arg(long)]
    pub eve_key: Option<String>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
}

fn usage(msg: impl Into<String>) -> GcoreError {
    GcoreError::Config(msg.into())
}

impl SessionArgs {
    fn session_config(&self, default_attack: Option<AdversaryKind>) -> Result<SessionConfig> {
        let mut c = match &self.config {
            Some(path) => SessionConfig::from_path(path)?,
            None => SessionConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(particles, dim, units, key, group_size, check_fraction, seed);
        if self.receiver_key.is_some() {
            c.receiver_key = self.receiver_key.clone();
        }

        let family = Family::new(c.particles, c.dim)
            .map_err(|e| usage(format!("invalid --particles/--dim: {e}")))?;
        ControlKey::parse(c.dim, &c.key)
            .and_then(|k| k.with_group_size(c.group_size))
            .map_err(|e| usage(format!("invalid --key: {e}")))?;
        if let Some(k) = &c.receiver_key {
            ControlKey::parse(c.dim, k)
                .map_err(|e| usage(format!("invalid --receiver-key: {e}")))?;
        }
        if c.units == 0 {
            return Err(usage("invalid --units: must be positive"));
        }
        if !(c.check_fraction > 0.0 && c.check_fraction < 1.0) {
            return Err(usage(format!(
                "invalid --check-fraction {}: must lie strictly between 0 and 1",
                c.check_fraction
            )));
        }

        let has_attack_flags =
            self.fidelity.is_some() || self.offsets.is_some() || self.eve_key.is_some();
        let kind = self.adversary.or(match (&c.adversary, has_attack_flags) {
            (Some(_), _) => None,
            (None, true) => Some(AdversaryKind::InterceptResend),
            (None, false) => default_attack,
        });
        if let Some(kind) = kind {
            c.adversary = Some(match kind {
                AdversaryKind::InterceptResend => {
                    if self.fidelity.is_some() {
                        return Err(usage("--fidelity applies only to --adversary cloner"));
                    }
                    AttackConfig::InterceptResend {
                        guess: match &self.eve_key {
                            Some(key) => GuessStrategy::Fixed { key: key.clone() },
                            None => GuessStrategy::Uniform,
                        },
                        offsets: self.offsets.clone(),
                    }
                }
                AdversaryKind::Cloner => {
                    if self.offsets.is_some() || self.eve_key.is_some() {
                        return Err(usage(
                            "--offsets and --eve-key apply only to intercept-resend",
                        ));
                    }
                    let fidelity = self
                        .fidelity
                        .ok_or_else(|| usage("--adversary cloner needs --fidelity"))?;
                    AttackConfig::Cloner { fidelity }
                }
            });
        }
        if let Some(a) = &c.adversary {
            a.key_stream(family, c.group_size)
                .map_err(|e| usage(format!("invalid adversary flags: {e}")))?;
        }
        Ok(c)
    }

    fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn emit(out: &str, contents: &str) -> Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(contents.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|source| GcoreError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
    } else {
        write_output(Path::new(out), contents)
    }
}

fn run_session_command(args: &SessionArgs, default_attack: Option<AdversaryKind>) -> Result<i32> {
    let config = args.session_config(default_attack)?;
    let transcript = run_session_threads(&config, args.threads().max(1))?;
    let attack = match &config.adversary {
        Some(_) => Some(AttackReport::from_transcript(&transcript)?),
        None => None,
    };
    let verdict = transcript.verdict();
    let report = emit_report(&[(transcript, attack)], &[], None)?;
    emit(&args.out, &(report.to_json()? + "\n"))?;
    Ok(match verdict {
        Verdict::Clean => EXIT_CLEAN,
        Verdict::Eavesdropped => EXIT_DETECTED,
    })
}

/// Every E_k of a family, one 1-indexed mapping per line.
pub fn permutation_table(dim: usize, particles: usize) -> Result<String> {
    let family = Family::new(particles, dim)?;
    let mut text = String::new();
    for k in 0..family.size() {
        let perm = general_permutation(dim, particles, k)?;
        let row: Vec<String> = perm.mapping().iter().map(|i| i.to_string()).collect();
        text.push_str(&format!(
            "E_{k} ({}) = [{}]\n",
            operation_label(dim, particles, k)?,
            row.join(",")
        ));
    }
    Ok(text)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(args) => run_session_command(args, None),
        Command::Attack(args) => run_session_command(args, Some(AdversaryKind::InterceptResend)),
        Command::ClonerCurve { grid_points, out } => {
            let rows = cloner_curve(*grid_points)
                .map_err(|e| usage(format!("invalid --grid-points: {e}")))?;
            emit(out, &curve_to_csv(&rows))?;
            Ok(EXIT_CLEAN)
        }
        Command::VerifyPaper { out } => {
            let ledger = verify_paper()?;
            let pass = ledger.all_pass();
            if let Some(out) = out {
                let report = emit_report(&[], &[], Some(ledger.clone()))?;
                emit(out, &(report.to_json()? + "\n"))?;
            }
            if out.as_deref() != Some("-") {
                emit("-", &format!("{ledger}\n"))?;
            }
            Ok(if pass { EXIT_CLEAN } else { EXIT_USAGE })
        }
        Command::Tables {
            dim,
            particles,
            out,
        } => {
            let table = permutation_table(*dim, *particles)
                .map_err(|e| usage(format!("invalid --dim/--particles: {e}")))?;
            emit(out, &table)?;
            Ok(EXIT_CLEAN)
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_CLEAN
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
