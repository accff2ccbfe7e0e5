//! Sectioned key-value run configuration.
//!
//! The format is deliberately plain: `[section]` headers, `key = value`
//! pairs, `#` comments. Unknown sections or keys are rejected outright, and
//! command-level validation collects every violation before reporting, so a
//! bad config fails in one pass with the full list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Allowed keys per section; anything else is a config error.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["master_seed"]),
    (
        "output",
        &[
            "dir",
            "dataset",
            "model",
            "loss_log",
            "samples",
            "trajectory",
            "curve_prefix",
            "summary",
            "report",
        ],
    ),
    (
        "schedule",
        &["T", "beta_start", "beta_end", "total_steps", "sawtooth_n"],
    ),
    (
        "data",
        &[
            "kind",
            "channels",
            "length",
            "classes",
            "per_class",
            "noise_level",
            "count",
            "rho",
            "scale",
            "mean",
            "total",
            "minority_fraction",
        ],
    ),
    (
        "predictor",
        &[
            "kind", "model", "hidden1", "hidden2", "rho", "scale", "mean", "channels", "length",
        ],
    ),
    ("train", &["dataset", "steps", "learning_rate", "class"]),
    (
        "sample",
        &[
            "method",
            "count",
            "eta",
            "label",
            "record_states",
            "checksums",
        ],
    ),
    ("eval-curve", &["real"]),
    ("tstr", &["synthetic", "real"]),
    ("bench", &["count"]),
    (
        "gradcheck",
        &[
            "models", "probes", "channels", "length", "hidden1", "hidden2", "t_max",
        ],
    ),
];

#[derive(Debug)]
pub struct ConfigError {
    violations: Vec<String>,
}

impl ConfigError {
    pub fn violations(&self) -> &[String] {
        &self.violations
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config invalid: {}", self.violations.join("; "))
    }
}

impl std::error::Error for ConfigError {}

/// Parsed but untyped configuration: section -> key -> (value, line).
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl RawConfig {
    /// Parses and schema-checks a config file's contents.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
        let mut violations = Vec::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    violations.push(format!("line {line_no}: unknown section [{name}]"));
                    current = None;
                    continue;
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                violations.push(format!(
                    "line {line_no}: expected 'key = value', got '{line}'"
                ));
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let Some(section) = current.clone() else {
                violations.push(format!("line {line_no}: key '{key}' outside any section"));
                continue;
            };
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                violations.push(format!(
                    "line {line_no}: unknown key '{key}' in section [{section}]"
                ));
                continue;
            }
            let entry = sections.entry(section.clone()).or_default();
            if entry.contains_key(&key) {
                violations.push(format!(
                    "line {line_no}: duplicate key '{key}' in section [{section}]"
                ));
                continue;
            }
            entry.insert(key, (value, line_no));
        }
        if violations.is_empty() {
            Ok(Self { sections })
        } else {
            Err(ConfigError { violations })
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|(v, _)| v.as_str())
    }
}

/// Collects violations while reading typed values out of a [`RawConfig`].
pub struct Reader<'a> {
    raw: &'a RawConfig,
    violations: Vec<String>,
}

impl<'a> Reader<'a> {
    pub fn new(raw: &'a RawConfig) -> Self {
        Self {
            raw,
            violations: Vec::new(),
        }
    }

    pub fn violation(&mut self, section: &str, key: &str, message: impl fmt::Display) {
        self.violations
            .push(format!("[{section}].{key}: {message}"));
    }

    pub fn required<T: FromStr>(&mut self, section: &str, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        match self.raw.get(section, key) {
            None => {
                self.violation(section, key, "missing required key");
                None
            }
            Some(v) => match v.parse::<T>() {
                Ok(t) => Some(t),
                Err(e) => {
                    self.violation(section, key, format!("cannot parse '{v}': {e}"));
                    None
                }
            },
        }
    }

    pub fn optional<T: FromStr>(&mut self, section: &str, key: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        match self.raw.get(section, key) {
            None => None,
            Some(v) => match v.parse::<T>() {
                Ok(t) => Some(t),
                Err(e) => {
                    self.violation(section, key, format!("cannot parse '{v}': {e}"));
                    None
                }
            },
        }
    }

    pub fn optional_or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        self.optional(section, key).unwrap_or(default)
    }

    pub fn string(&self, section: &str, key: &str) -> Option<String> {
        self.raw.get(section, key).map(str::to_string)
    }

    pub fn required_string(&mut self, section: &str, key: &str) -> Option<String> {
        match self.raw.get(section, key) {
            None => {
                self.violation(section, key, "missing required key");
                None
            }
            Some(v) => Some(v.to_string()),
        }
    }

    /// Fails with the accumulated violation list, or passes the value through.
    pub fn finish<T>(self, value: T) -> Result<T, ConfigError> {
        if self.violations.is_empty() {
            Ok(value)
        } else {
            Err(ConfigError {
                violations: self.violations,
            })
        }
    }
}

/// The `[run]` and `[output]` blocks shared by every command.
#[derive(Debug, Clone)]
pub struct RunSection {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl RunSection {
    pub fn read(reader: &mut Reader<'_>, seed_override: Option<u64>) -> Option<Self> {
        let master_seed = match seed_override {
            Some(s) => Some(s),
            None => reader.required::<u64>("run", "master_seed"),
        };
        let out_dir = reader.required_string("output", "dir");
        let mut files = BTreeMap::new();
        for key in [
            "dataset",
            "model",
            "loss_log",
            "samples",
            "trajectory",
            "curve_prefix",
            "summary",
            "report",
        ] {
            if let Some(v) = reader.string("output", key) {
                files.insert(key.to_string(), v);
            }
        }
        Some(Self {
            master_seed: master_seed?,
            out_dir: PathBuf::from(out_dir?),
            files,
        })
    }

    /// Path of a declared output, with the documented default file name.
    pub fn file(&self, key: &str, default: &str) -> PathBuf {
        let name = self
            .files
            .get(key)
            .cloned()
            .unwrap_or_else(|| default.to_string());
        self.out_dir.join(name)
    }
}

/// Typed `[schedule]` block; `total_steps`/`sawtooth_n` stay optional for
/// commands that only need the β tables.
#[derive(Debug, Clone)]
pub struct ScheduleSection {
    pub t_max: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub total_steps: Option<usize>,
    pub sawtooth_n: Option<usize>,
}

impl ScheduleSection {
    pub fn read(reader: &mut Reader<'_>) -> Option<Self> {
        let t_max = reader.required::<usize>("schedule", "T");
        let beta_start = reader.required::<f64>("schedule", "beta_start");
        let beta_end = reader.required::<f64>("schedule", "beta_end");
        let total_steps = reader.optional::<usize>("schedule", "total_steps");
        let sawtooth_n = reader.optional::<usize>("schedule", "sawtooth_n");
        let section = Self {
            t_max: t_max?,
            beta_start: beta_start?,
            beta_end: beta_end?,
            total_steps,
            sawtooth_n,
        };
        // check module preconditions now so nothing fails mid-run
        if let Err(e) = sawtooth_core::schedule::build_schedule(
            section.t_max,
            section.beta_start,
            section.beta_end,
        ) {
            reader.violation("schedule", "T/beta_start/beta_end", e);
            return None;
        }
        Some(section)
    }

    /// The plan-bearing variant: requires `total_steps` and `sawtooth_n` and
    /// validates divisibility and subsequence bounds.
    pub fn read_with_plan(reader: &mut Reader<'_>) -> Option<(Self, usize, usize)> {
        let section = Self::read(reader)?;
        let total = match section.total_steps {
            Some(t) => t,
            None => {
                reader.violation("schedule", "total_steps", "missing required key");
                return None;
            }
        };
        let n = match section.sawtooth_n {
            Some(n) => n,
            None => {
                reader.violation("schedule", "sawtooth_n", "missing required key");
                return None;
            }
        };
        if let Err(e) = sawtooth_core::schedule::build_sawtooth_plan(
            total,
            n,
            section.t_max,
            section.beta_start,
            section.beta_end,
        ) {
            reader.violation("schedule", "total_steps/sawtooth_n", e);
            return None;
        }
        Some((section, total, n))
    }
}
