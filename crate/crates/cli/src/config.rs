//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file named by `ZENOLAB_CONFIG`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use zenolab::{custom_params, hydrogen_params, AtomParams, PhysicalConstants};

use crate::CliError;

/// Keys a config file may set. Each mirrors the long flag of the same name.
pub const KNOWN_KEYS: &[&str] = &[
    "z", "alpha", "me", "chi", "a", "lambda", "quad-tol", "pole-tol", "tmin", "tmax", "points",
    "scale", "format", "output", "modes", "x-max", "xmin", "xmax",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = key.trim().trim_start_matches("--");
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{key}'",
                    n + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config value for '{key}' is invalid: {v}"))),
        }
    }

    /// The flag value if given, else the file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as clap::ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub me: Option<f64>,
    pub chi: Option<f64>,
    pub a: Option<f64>,
    pub cutoff_lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Cut-integral and oracle quadrature tolerance.
    pub quadrature: f64,
    /// Residual accepted by the pole search; `None` scales with a.
    pub pole: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTarget {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Nuclear charge; 0 selects synthetic parameters.
    pub z: u32,
    pub overrides: Overrides,
    pub tolerances: Tolerances,
    pub output: OutputTarget,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let o = &self.overrides;
        if self.z == 0 {
            if o.chi.is_none() || o.a.is_none() {
                return Err(CliError::Usage(
                    "synthetic mode (--z 0) requires --chi and --a".into(),
                ));
            }
            if o.alpha.is_some() || o.me.is_some() {
                return Err(CliError::Usage(
                    "--alpha and --me only apply to hydrogen-like parameters".into(),
                ));
            }
        } else if o.chi.is_some() || o.a.is_some() || o.cutoff_lambda.is_some() {
            return Err(CliError::Usage(
                "--chi, --a and --lambda require synthetic mode (--z 0)".into(),
            ));
        }
        if !(self.tolerances.quadrature > 0.0) {
            return Err(CliError::Usage("--quad-tol must be positive".into()));
        }
        if self.tolerances.pole.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Usage("--pole-tol must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<AtomParams, CliError> {
        self.validate()?;
        let o = &self.overrides;
        let params = if self.z == 0 {
            custom_params(
                o.cutoff_lambda.unwrap_or(1.0),
                o.chi.unwrap_or_default(),
                o.a.unwrap_or_default(),
            )?
        } else {
            let base = PhysicalConstants::CODATA;
            let constants =
                PhysicalConstants::new(o.alpha.unwrap_or(base.alpha), o.me.unwrap_or(base.m_e))?;
            hydrogen_params(constants, self.z)?
        };
        Ok(params)
    }

    pub fn pole_tolerance(&self, params: &AtomParams) -> f64 {
        self.tolerances.pole.unwrap_or(1e-14 * params.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(z: u32, overrides: Overrides) -> RunConfig {
        RunConfig {
            z,
            overrides,
            tolerances: Tolerances {
                quadrature: 1e-10,
                pole: None,
            },
            output: OutputTarget {
                path: None,
                format: Format::Csv,
            },
        }
    }

    #[test]
    fn synthetic_needs_chi_and_a() {
        let partial = Overrides {
            chi: Some(1e-2),
            ..Overrides::default()
        };
        assert!(config(0, partial).validate().is_err());
        let full = Overrides {
            chi: Some(1e-2),
            a: Some(0.25),
            ..Overrides::default()
        };
        let p = config(0, full).params().unwrap();
        assert!(p.is_synthetic());
        assert_eq!(p.cutoff_lambda, 1.0);
    }

    #[test]
    fn hydrogen_rejects_model_overrides() {
        let o = Overrides {
            a: Some(0.25),
            ..Overrides::default()
        };
        assert!(matches!(config(1, o).validate(), Err(CliError::Usage(_))));
        assert!(config(1, Overrides::default()).validate().is_ok());
    }

    #[test]
    fn file_parsing() {
        let f = FileConfig::parse("# comment\nz = 2\n--points=40  # trailing\n\nscale = linear\n")
            .unwrap();
        assert_eq!(f.get::<u32>("z").unwrap(), Some(2));
        assert_eq!(f.get::<usize>("points").unwrap(), Some(40));
        assert_eq!(f.pick(Some(7usize), "points").unwrap(), Some(7));
        assert_eq!(f.get::<f64>("chi").unwrap(), None);
        assert!(FileConfig::parse("colour = red").is_err());
        assert!(FileConfig::parse("z 2").is_err());
        assert!(FileConfig::parse("z = two")
            .unwrap()
            .get::<u32>("z")
            .is_err());
    }
}
