//! Run configuration: defaults, named presets, `key = value` files and
//! flag overrides.
//!
//! Resolution order is defaults, then preset, then file, then flags. The
//! resolved config is echoed to the output directory in the same format, so
//! a run can be reproduced from its echo.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dtap_core::topology::build_grid;
use dtap_core::{Algorithm, LearnerConfig, SimConfig, Topology};

/// Environment variable naming the root directory for run outputs.
pub const OUT_ROOT_ENV: &str = "DTAP_OUT_ROOT";
pub const DEFAULT_OUT_ROOT: &str = "runs";

/// Learning rate used when none is given. Rewards are raw (negative) time
/// units, often in the hundreds, so the step has to be small.
pub const DEFAULT_ETA: f64 = 1e-6;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_EPSILON_FLOOR: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown preset `{0}` (expected paper-200k or paper-600k)")]
    UnknownPreset(String),
    #[error("{field}: {message}")]
    Invariant { field: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub adjacent_delay: u64,
    /// Height and width of the centred sub-grid that receives tasks.
    pub generator_region: (usize, usize),
    /// Tasks per time unit, per generator agent.
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub algorithm: Algorithm,
    pub eta: f64,
    pub alpha: f64,
    pub epsilon_floor: f64,
    pub duration: u64,
    pub window: u64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub dump_policies: bool,
    /// Policy dump cadence, in windows.
    pub dump_every: u64,
    /// 0 means unlimited.
    pub hop_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_rows: 10,
            grid_cols: 10,
            adjacent_delay: 2,
            generator_region: (4, 4),
            arrival_rate: 0.5,
            service_rate: 0.1,
            algorithm: Algorithm::Wpl,
            eta: DEFAULT_ETA,
            alpha: DEFAULT_ALPHA,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            duration: 200_000,
            window: 1000,
            seed: 0,
            output_dir: None,
            dump_policies: false,
            dump_every: 10,
            hop_limit: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper200k,
    Paper600k,
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-200k" => Ok(Preset::Paper200k),
            "paper-600k" => Ok(Preset::Paper600k),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }
}

impl Preset {
    /// 10x10 grid, adjacent delay 2, 4x4 centre generators at 0.5 tasks per
    /// time unit each, service rate 0.1.
    pub fn config(self) -> RunConfig {
        let duration = match self {
            Preset::Paper200k => 200_000,
            Preset::Paper600k => 600_000,
        };
        RunConfig {
            duration,
            ..RunConfig::default()
        }
    }
}

/// Field-level overrides, typically from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub algorithm: Option<Algorithm>,
    pub seed: Option<u64>,
    pub duration: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub dump_policies: bool,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_region(key: &str, value: &str) -> Result<(usize, usize), ConfigError> {
    let invalid = || ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: "expected ROWSxCOLS".to_string(),
    };
    let (r, c) = value.split_once(['x', 'X']).ok_or_else(invalid)?;
    Ok((
        r.trim().parse().map_err(|_| invalid())?,
        c.trim().parse().map_err(|_| invalid())?,
    ))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".to_string(),
        }),
    }
}

impl RunConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "grid_rows" => self.grid_rows = parse_value(key, value)?,
            "grid_cols" => self.grid_cols = parse_value(key, value)?,
            "adjacent_delay" => self.adjacent_delay = parse_value(key, value)?,
            "generator_region" => self.generator_region = parse_region(key, value)?,
            "arrival_rate" => self.arrival_rate = parse_value(key, value)?,
            "service_rate" => self.service_rate = parse_value(key, value)?,
            "algorithm" => self.algorithm = parse_value(key, value)?,
            "eta" => self.eta = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "epsilon_floor" => self.epsilon_floor = parse_value(key, value)?,
            "duration" => self.duration = parse_value(key, value)?,
            "window" => self.window = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "output_dir" => {
                self.output_dir = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "dump_policies" => self.dump_policies = parse_bool(key, value)?,
            "dump_every" => self.dump_every = parse_value(key, value)?,
            "hop_limit" => self.hop_limit = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment; blank lines are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(a) = o.algorithm {
            self.algorithm = a;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = o.duration {
            self.duration = d;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if o.dump_policies {
            self.dump_policies = true;
        }
        if let Some(eta) = o.eta {
            self.eta = eta;
        }
        if let Some(alpha) = o.alpha {
            self.alpha = alpha;
        }
    }

    /// Canonical `key = value` rendering; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (gr, gc) = self.generator_region;
        let _ = writeln!(s, "grid_rows = {}", self.grid_rows);
        let _ = writeln!(s, "grid_cols = {}", self.grid_cols);
        let _ = writeln!(s, "adjacent_delay = {}", self.adjacent_delay);
        let _ = writeln!(s, "generator_region = {gr}x{gc}");
        let _ = writeln!(s, "arrival_rate = {}", self.arrival_rate);
        let _ = writeln!(s, "service_rate = {}", self.service_rate);
        let _ = writeln!(s, "algorithm = {}", self.algorithm);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "epsilon_floor = {}", self.epsilon_floor);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", dir.display());
        }
        let _ = writeln!(s, "dump_policies = {}", self.dump_policies);
        let _ = writeln!(s, "dump_every = {}", self.dump_every);
        let _ = writeln!(s, "hop_limit = {}", self.hop_limit);
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |field, message: &str| {
            Err(ConfigError::Invariant {
                field,
                message: message.to_string(),
            })
        };
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return fail("grid_rows/grid_cols", "grid must be at least 1x1");
        }
        if self.adjacent_delay == 0 {
            return fail("adjacent_delay", "must be at least 1");
        }
        let (gr, gc) = self.generator_region;
        if gr > self.grid_rows || gc > self.grid_cols {
            return Err(ConfigError::Invariant {
                field: "generator_region",
                message: format!(
                    "{gr}x{gc} does not fit inside the {}x{} grid",
                    self.grid_rows, self.grid_cols
                ),
            });
        }
        if !(self.grid_rows - gr).is_multiple_of(2) || !(self.grid_cols - gc).is_multiple_of(2) {
            return Err(ConfigError::Invariant {
                field: "generator_region",
                message: format!(
                    "{gr}x{gc} cannot be centred in the {}x{} grid",
                    self.grid_rows, self.grid_cols
                ),
            });
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return fail("arrival_rate", "must be finite and >= 0");
        }
        if !(self.service_rate.is_finite() && self.service_rate > 0.0) {
            return fail("service_rate", "must be finite and > 0");
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return fail("eta", "must be > 0");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail("alpha", "must be in (0, 1]");
        }
        let max_actions = self.topology()?.max_actions();
        if !(self.epsilon_floor >= 0.0 && self.epsilon_floor * (max_actions as f64) < 1.0) {
            return Err(ConfigError::Invariant {
                field: "epsilon_floor",
                message: format!("must be in [0, 1/{max_actions})"),
            });
        }
        if self.duration == 0 {
            return fail("duration", "must be > 0");
        }
        if self.window == 0 {
            return fail("window", "must be > 0");
        }
        if self.dump_every == 0 {
            return fail("dump_every", "must be > 0");
        }
        Ok(())
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            eta: self.eta,
            alpha: self.alpha,
            epsilon_floor: self.epsilon_floor,
            algorithm: self.algorithm,
        }
    }

    pub fn topology(&self) -> Result<Topology, ConfigError> {
        build_grid(self.grid_rows, self.grid_cols, self.adjacent_delay).map_err(|e| ConfigError::Invariant {
            field: "grid",
            message: e.to_string(),
        })
    }

    pub fn sim_config(&self, topology: &Topology) -> Result<SimConfig, ConfigError> {
        let (gr, gc) = self.generator_region;
        let generators = topology.centered_region(gr, gc).ok_or(ConfigError::Invariant {
            field: "generator_region",
            message: "cannot be centred".to_string(),
        })?;
        let mut sim = SimConfig::new(
            generators,
            self.arrival_rate,
            self.service_rate,
            self.learner(),
            self.seed,
        );
        sim.hop_limit = (self.hop_limit > 0).then_some(self.hop_limit);
        Ok(sim)
    }

    /// Directory for this run's artifacts. Falls back to
    /// `$DTAP_OUT_ROOT/<algorithm>-seed<seed>`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| {
            let root = std::env::var_os(OUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
            root.join(format!("{}-seed{}", self.algorithm, self.seed))
        })
    }
}

/// Builds a validated config: defaults, then `preset`, then `file`, then
/// `overrides`.
pub fn load_config(
    file: Option<&Path>,
    preset: Option<Preset>,
    overrides: &Overrides,
) -> Result<RunConfig, ConfigError> {
    let mut cfg = preset.map(Preset::config).unwrap_or_default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_overrides(overrides);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_the_grid_experiment() {
        let o = Overrides {
            algorithm: Some(Algorithm::Wpl),
            ..Default::default()
        };
        let c = load_config(None, Some(Preset::Paper200k), &o).unwrap();
        assert_eq!((c.grid_rows, c.grid_cols), (10, 10));
        assert_eq!(c.adjacent_delay, 2);
        assert_eq!(c.generator_region, (4, 4));
        assert_eq!(c.arrival_rate, 0.5);
        assert_eq!(c.service_rate, 0.1);
        assert_eq!(c.duration, 200_000);
        assert_eq!(c.algorithm, Algorithm::Wpl);

        let c = load_config(None, Some("paper-600k".parse().unwrap()), &Overrides::default()).unwrap();
        assert_eq!(c.duration, 600_000);
        assert!("paper-1m".parse::<Preset>().is_err());
    }

    #[test]
    fn oversized_region_rejected() {
        let mut c = RunConfig::default();
        c.apply_text("generator_region = 11x11").unwrap();
        match c.validate() {
            Err(ConfigError::Invariant { field, .. }) => assert_eq!(field, "generator_region"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_duration_rejected() {
        let mut c = RunConfig::default();
        c.apply_text("duration = 0").unwrap();
        assert!(matches!(
            c.validate(),
            Err(ConfigError::Invariant { field: "duration", .. })
        ));
    }

    #[test]
    fn unknown_key_rejected() {
        let mut c = RunConfig::default();
        assert!(matches!(
            c.apply_text("learning_rate = 0.1"),
            Err(ConfigError::UnknownKey(k)) if k == "learning_rate"
        ));
        assert!(matches!(c.apply_text("eta"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(
            c.apply_text("eta = fast"),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig {
            algorithm: Algorithm::GigaWolf,
            eta: 0.000_123_4,
            seed: 77,
            output_dir: Some(PathBuf::from("/tmp/x")),
            hop_limit: 9,
            ..RunConfig::default()
        };
        c.generator_region = (2, 4);
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("dtap-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.txt");
        std::fs::write(&path, "# comment\nseed = 5\nduration = 10 # trailing\n\nalgorithm = giga-wolf\n").unwrap();
        let o = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let c = load_config(Some(&path), None, &o).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.duration, 10);
        assert_eq!(c.algorithm, Algorithm::GigaWolf);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
