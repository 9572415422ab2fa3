//! Curation parameters and their key/value text format.
//!
//! ```text
//! # comments start with '#'
//! alpha = 1.5
//! beta = 0.5
//! z = 3
//! min_account_photos = 30
//! mad_epsilon = 1e-12
//! purification_scope = global
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population over which cluster-level MAD statistics are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurificationScope {
    #[default]
    Global,
    PerAccount,
}

impl FromStr for PurificationScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Self::Global),
            "per_account" => Ok(Self::PerAccount),
            other => Err(Error::InvalidConfig(format!(
                "purification_scope must be global or per_account, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for PurificationScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Global => "global",
            Self::PerAccount => "per_account",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    /// MAD deviation threshold shared by cluster flagging and face ejection.
    pub alpha: f64,
    /// Edge threshold as a multiple of the account's mean pairwise distance.
    pub beta: f64,
    /// Minimum identity size.
    pub min_cluster_size: usize,
    /// Accounts with fewer faces are skipped.
    pub min_account_photos: usize,
    /// MAD values below this are treated as zero.
    pub mad_epsilon: f64,
    pub purification_scope: PurificationScope,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 0.5,
            min_cluster_size: 3,
            min_account_photos: 30,
            mad_epsilon: 1e-12,
            purification_scope: PurificationScope::Global,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("mad_epsilon", self.mad_epsilon)?;
        if self.min_cluster_size == 0 {
            return Err(Error::InvalidConfig("z must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
                })?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let bad =
                |e: &dyn fmt::Display| Error::InvalidConfig(format!("line {}: {key}: {e}", n + 1));
            match key {
                "alpha" => cfg.alpha = value.parse().map_err(|e| bad(&e))?,
                "beta" => cfg.beta = value.parse().map_err(|e| bad(&e))?,
                "z" | "min_cluster_size" => {
                    cfg.min_cluster_size = value.parse().map_err(|e| bad(&e))?
                }
                "min_account_photos" => {
                    cfg.min_account_photos = value.parse().map_err(|e| bad(&e))?
                }
                "mad_epsilon" => cfg.mad_epsilon = value.parse().map_err(|e| bad(&e))?,
                "purification_scope" => cfg.purification_scope = value.parse()?,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "line {}: unknown key {other:?}",
                        n + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the config in the format accepted by [`CurationConfig::parse`].
    pub fn to_text(&self) -> String {
        format!(
            "alpha = {}\nbeta = {}\nz = {}\nmin_account_photos = {}\nmad_epsilon = {:e}\npurification_scope = {}\n",
            self.alpha,
            self.beta,
            self.min_cluster_size,
            self.min_account_photos,
            self.mad_epsilon,
            self.purification_scope
        )
    }
}
