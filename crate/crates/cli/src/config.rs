//! Run configuration: flat `key = value` text with optional `[section]`
//! blocks, one per subcommand.
//!
//! ```text
//! # shared by every subcommand
//! profile = exponential
//! n_points = 192
//!
//! [neutral]
//! re_min = 60000
//! re_max = 90000
//! steps = 10
//! ```
//!
//! A value is resolved from, in increasing priority, the top of the file,
//! the section named after the subcommand, and command-line flags. Keys
//! left unset fall back to the defaults below.
//!
//! | key | default |
//! |---|---|
//! | `profile` | `poiseuille` |
//! | `n_points` | 128 on the strip, 192 on the half line |
//! | `map_scale` | 4 (half line only) |
//! | `branch` | `both` (`lower` for `wave`) |
//! | `nx` | 32 |
//! | `workers` | 1 |
//! | `seed` | 0 |
//! | `output` | `-` (stdout) |
//! | `mean_forcing` | `single` |
//! | `closure` | `fixed_flux` |
//! | `quantity` | `growth` |
//!
//! `re`, `alpha`, `epsilon`, the `re_min`/`re_max`/`steps` range and the
//! sweep's `alpha_min`/`alpha_max`/`alpha_steps` have no defaults unless the
//! subcommand documents one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use shearstab::bifurcation::MeanForcing;
use shearstab::oss::MeanFlowClosure;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("unknown section '[{0}]'")]
    UnknownSection(String),
    #[error("invalid value '{value}' for '{key}': {msg}")]
    BadValue {
        key: String,
        value: String,
        msg: String,
    },
    #[error("key '{0}' given twice")]
    Duplicate(String),
    #[error("missing required parameter '{0}' (pass --{flag} or set it in the config file)", flag = .0.replace('_', "-"))]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Sections accepted in a config file.
pub const SECTIONS: &[&str] = &[
    "eigen",
    "neutral",
    "landau",
    "thresholds",
    "wave",
    "validate",
    "sweep",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchChoice {
    Lower,
    Upper,
    Both,
}

impl FromStr for BranchChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lower" => Ok(Self::Lower),
            "upper" => Ok(Self::Upper),
            "both" => Ok(Self::Both),
            _ => Err("expected lower, upper or both".into()),
        }
    }
}

impl fmt::Display for BranchChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lower => "lower",
            Self::Upper => "upper",
            Self::Both => "both",
        })
    }
}

/// What `sweep` evaluates at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// Leading eigenvalue `λ`.
    Growth,
    /// Landau coefficient off the neutral curve.
    Landau,
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "growth" => Ok(Self::Growth),
            "landau" => Ok(Self::Landau),
            _ => Err("expected growth or landau".into()),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Growth => "growth",
            Self::Landau => "landau",
        })
    }
}

macro_rules! params {
    ($($key:ident: $ty:ty),* $(,)?) => {
        /// One layer of settings; `None` means "not set here".
        #[derive(Clone, Debug, Default, PartialEq)]
        pub struct Params {
            $(pub $key: Option<$ty>,)*
        }

        /// All keys in serialization order.
        pub const KEYS: &[&str] = &[$(stringify!($key)),*];

        impl Params {
            /// Parses and stores one value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
                match key {
                    $(stringify!($key) => {
                        let v = value.parse::<$ty>().map_err(|e| ConfigError::BadValue {
                            key: key.to_string(),
                            value: value.to_string(),
                            msg: e.to_string(),
                        })?;
                        self.$key = Some(v);
                        Ok(())
                    })*
                    _ => Err(ConfigError::UnknownKey(key.to_string())),
                }
            }

            /// `(key, value)` pairs of the keys that are set.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(if let Some(v) = &self.$key {
                    out.push((stringify!($key), v.to_string()));
                })*
                out
            }

            /// Values of `over` take precedence.
            pub fn overlay(&self, over: &Params) -> Params {
                Params {
                    $($key: over.$key.clone().or_else(|| self.$key.clone()),)*
                }
            }
        }
    };
}

params! {
    profile: String,
    p: u32,
    n_points: usize,
    map_scale: f64,
    re: f64,
    alpha: f64,
    re_min: f64,
    re_max: f64,
    steps: usize,
    branch: BranchChoice,
    epsilon: f64,
    nx: usize,
    workers: usize,
    seed: u64,
    output: String,
    alpha_min: f64,
    alpha_max: f64,
    alpha_steps: usize,
    quantity: Quantity,
    mean_forcing: MeanForcing,
    closure: MeanFlowClosure,
}

impl Params {
    pub fn require<T: Clone>(v: &Option<T>, key: &'static str) -> Result<T, ConfigError> {
        v.clone().ok_or(ConfigError::Missing(key))
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn output(&self) -> &str {
        self.output.as_deref().unwrap_or("-")
    }
}

/// A parsed config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub global: Params,
    pub sections: BTreeMap<String, Params>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("unterminated section header '{line}'"),
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::UnknownSection(name.to_string()));
                }
                if cfg.sections.contains_key(name) {
                    return Err(ConfigError::Duplicate(format!("[{name}]")));
                }
                cfg.sections.insert(name.to_string(), Params::default());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let target = match &current {
                None => &mut cfg.global,
                Some(s) => cfg.sections.get_mut(s).expect("section was inserted"),
            };
            if target.entries().iter().any(|(k, _)| *k == key) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            target.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Settings for one subcommand, before command-line flags.
    pub fn for_command(&self, command: &str) -> Params {
        match self.sections.get(command) {
            Some(s) => self.global.overlay(s),
            None => self.global.clone(),
        }
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.global.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        for (name, params) in &self.sections {
            writeln!(f, "\n[{name}]")?;
            for (k, v) in params.entries() {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_override_globals() {
        let cfg = RunConfig::parse("profile = quartic\nre = 1000\n[eigen]\nre = 2000\n").unwrap();
        let p = cfg.for_command("eigen");
        assert_eq!(p.re, Some(2000.0));
        assert_eq!(p.profile.as_deref(), Some("quartic"));
        assert_eq!(cfg.for_command("landau").re, Some(1000.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::parse("[plot]"), Err(ConfigError::UnknownSection(_))));
        assert!(matches!(RunConfig::parse("re 5"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::parse("re = 1\nre = 2"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(RunConfig::parse("steps = -3"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(RunConfig::parse("branch = middle"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let cfg = RunConfig::parse("# note\n\n  alpha = 1.02  \n").unwrap();
        assert_eq!(cfg.global.alpha, Some(1.02));
    }

    #[test]
    fn overlay_prefers_the_upper_layer() {
        let mut a = Params::default();
        a.set("seed", "3").unwrap();
        a.set("nx", "8").unwrap();
        let mut b = Params::default();
        b.set("seed", "5").unwrap();
        let c = a.overlay(&b);
        assert_eq!((c.seed, c.nx), (Some(5), Some(8)));
    }
}
