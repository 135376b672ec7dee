use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackConfig;
use crate::error::{GcoreError, Result};
use crate::permutation::{key_block_stream, ControlKey, KeyBlockStream};
use crate::states::Family;

use super::register::SparseBasis;

/// Parameters of one session. Missing fields in a config file fall back to
/// the defaults: a (3,2) family, 100 units, key `001`, a quarter of the
/// labels checked, seed 0, no adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub particles: usize,
    pub dim: usize,
    pub units: usize,
    /// Alice's control key as a base-d digit string.
    pub key: String,
    pub group_size: usize,
    /// Key Bob uses to undo the rearrangement; `None` means Alice's key.
    pub receiver_key: Option<String>,
    pub check_fraction: f64,
    pub seed: u64,
    pub adversary: Option<AttackConfig>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            particles: 3,
            dim: 2,
            units: 100,
            key: "001".into(),
            group_size: 1,
            receiver_key: None,
            check_fraction: 0.25,
            seed: 0,
            adversary: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> GcoreError {
    GcoreError::Config(msg.into())
}

impl SessionConfig {
    /// Reads a config file: JSON when the extension is `.json`, TOML
    /// otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| GcoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
        }
    }

    pub fn family(&self) -> Result<Family> {
        Family::new(self.particles, self.dim).map_err(|e| config_err(e.to_string()))
    }

    pub fn control_key(&self) -> Result<ControlKey> {
        self.parse_key(&self.key)
    }

    pub fn receiver_control_key(&self) -> Result<ControlKey> {
        self.parse_key(self.receiver_key.as_deref().unwrap_or(&self.key))
    }

    fn parse_key(&self, text: &str) -> Result<ControlKey> {
        ControlKey::parse(self.dim, text)
            .and_then(|k| k.with_group_size(self.group_size))
            .map_err(|e| config_err(format!("key '{text}': {e}")))
    }

    /// Number of labels compared during sifting.
    pub fn check_count(&self) -> usize {
        let total = self
            .units
            .saturating_mul(self.dim.saturating_pow(self.particles as u32));
        ((self.check_fraction * total as f64).ceil() as usize).clamp(1, total.max(1))
    }

    pub(crate) fn plan(&self) -> Result<SessionPlan> {
        let family = self.family()?;
        if self.units == 0 {
            return Err(config_err("units must be positive"));
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return Err(config_err(format!(
                "check fraction {} must lie strictly between 0 and 1",
                self.check_fraction
            )));
        }
        let total = self.units * family.size();
        if self.check_count() >= total {
            return Err(config_err(format!(
                "check fraction {} leaves no unchecked label out of {total}",
                self.check_fraction
            )));
        }
        let stream = |key: ControlKey| -> Result<KeyBlockStream> {
            key_block_stream(&key, self.particles).map_err(|e| config_err(e.to_string()))
        };
        let alice = stream(self.control_key()?)?;
        let bob = stream(self.receiver_control_key()?)?;
        let eve = match &self.adversary {
            Some(adv) => adv.key_stream(family, self.group_size)?,
            None => None,
        };
        Ok(SessionPlan {
            family,
            basis: SparseBasis::new(family),
            alice,
            bob,
            eve,
        })
    }
}

pub(crate) struct SessionPlan {
    pub family: Family,
    pub basis: SparseBasis,
    pub alice: KeyBlockStream,
    pub bob: KeyBlockStream,
    /// Eve's key stream when she guesses with a fixed key.
    pub eve: Option<KeyBlockStream>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SessionConfig::default();
        assert!(cfg.plan().is_ok());
        assert_eq!(cfg.check_count(), 200);
    }

    #[test]
    fn invalid_configs() {
        let bad = |f: &dyn Fn(&mut SessionConfig)| {
            let mut c = SessionConfig::default();
            f(&mut c);
            matches!(c.plan(), Err(GcoreError::Config(_)))
        };
        assert!(bad(&|c| c.units = 0));
        assert!(bad(&|c| c.check_fraction = 1.0));
        assert!(bad(&|c| c.check_fraction = 0.0));
        assert!(bad(&|c| c.key = "0012".into()));
        assert!(bad(&|c| c.key = "002".into()));
        assert!(bad(&|c| {
            c.dim = 4;
            c.particles = 6;
            c.key = "000000".into();
        }));
        assert!(bad(&|c| {
            c.units = 1;
            c.check_fraction = 0.99;
        }));
    }

    #[test]
    fn toml_and_json_files() {
        let dir = std::env::temp_dir().join(format!("gcore-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let toml_path = dir.join("s.toml");
        std::fs::write(
            &toml_path,
            "particles = 2\ndim = 3\nkey = \"12\"\nunits = 5\n\n[adversary]\nkind = \"intercept-resend\"\n",
        )
        .unwrap();
        let cfg = SessionConfig::from_path(&toml_path).unwrap();
        assert_eq!((cfg.particles, cfg.dim, cfg.units), (2, 3, 5));
        assert!(cfg.adversary.is_some());
        let json_path = dir.join("s.json");
        std::fs::write(&json_path, r#"{"units": 7, "seed": 9}"#).unwrap();
        let cfg = SessionConfig::from_path(&json_path).unwrap();
        assert_eq!((cfg.units, cfg.seed, cfg.key.as_str()), (7, 9, "001"));
        std::fs::write(&json_path, r#"{"colour": 1}"#).unwrap();
        assert!(SessionConfig::from_path(&json_path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
