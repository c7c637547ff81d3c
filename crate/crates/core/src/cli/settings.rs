use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key accepted in a config file. Command-line flags use the same
/// names.
pub const KNOWN_KEYS: &[&str] = &[
    "agrawal-functions",
    "agrawal-noise",
    "alpha",
    "alphas",
    "csv",
    "delta",
    "drift-at",
    "drift-kind",
    "drift-magnitude",
    "drift-width",
    "dump-tree",
    "epsilon-s",
    "gamma",
    "grace",
    "hyperplane-features",
    "hyperplane-magnitude",
    "hyperplane-noise",
    "instances",
    "label-column",
    "leaf-prediction",
    "learning-rate",
    "max-depth",
    "model",
    "models",
    "no-shuffle",
    "node-limit",
    "normalize",
    "normalizer-momentum",
    "out",
    "plot",
    "precision",
    "rbf-centroids",
    "rbf-classes",
    "rbf-features",
    "rbf-speed",
    "reps",
    "sea-noise",
    "seed",
    "split-weight-init",
    "stream",
    "tau",
    "track-transparency",
    "window",
];

/// Raw `key -> value` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: i as u64 + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(err(format!("unknown key `{key}`")));
            }
            values.insert(key.to_owned(), value.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_owned(), value.into());
    }

    /// Entries of `overrides` replace ours.
    pub fn overlay(mut self, overrides: Settings) -> Self {
        self.values.extend(overrides.values);
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Typed reads from [`Settings`]. Every value read, defaulted or not, is
/// recorded so the resolved configuration can be written back out.
pub struct Resolver<'a> {
    settings: &'a Settings,
    echo: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(settings: &'a Settings) -> Self {
        Self {
            settings,
            echo: BTreeMap::new(),
        }
    }

    fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T>
    where
        T::Err: Display,
    {
        raw.parse::<T>()
            .map_err(|e| Error::config(key, format!("cannot parse `{raw}`: {e}")))
    }

    pub fn opt<T: FromStr + Display>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.settings.raw(key) {
            Some(raw) => {
                let v = Self::parse::<T>(key, raw)?;
                self.echo.insert(key.to_owned(), v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.echo.insert(key.to_owned(), default.to_string());
                Ok(default)
            }
        }
    }

    /// Positive or zero integer; accepts exponent notation such as `1e5`.
    pub fn count(&mut self, key: &str, default: u64) -> Result<u64> {
        let v = match self.settings.raw(key) {
            Some(raw) => match raw.parse::<u64>() {
                Ok(v) => v,
                Err(_) => {
                    let f: f64 = Self::parse(key, raw)?;
                    if !(f >= 0.0 && f.fract() == 0.0 && f <= u64::MAX as f64) {
                        return Err(Error::config(key, format!("`{raw}` is not a non-negative integer")));
                    }
                    f as u64
                }
            },
            None => default,
        };
        self.echo.insert(key.to_owned(), v.to_string());
        Ok(v)
    }

    pub fn flag(&mut self, key: &str) -> Result<bool> {
        self.get(key, false)
    }

    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.echo
    }

    pub fn into_echo(self) -> BTreeMap<String, String> {
        self.echo
    }
}

/// Comma-separated list value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Self(Vec::new()));
        }
        s.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().or_else(|e| {
                    // integer lists also accept exponent notation
                    item.parse::<f64>()
                        .ok()
                        .filter(|f| f.fract() == 0.0 && *f >= 0.0)
                        .and_then(|f| format!("{f:.0}").parse::<T>().ok())
                        .ok_or_else(|| format!("`{item}`: {e}"))
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Writes `key = value` lines in key order.
pub fn render(echo: &BTreeMap<String, String>) -> String {
    echo.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
