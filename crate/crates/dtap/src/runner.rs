//! Single runs and multi-run sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dtap_core::metrics::drive;
use dtap_core::{Algorithm, MetricsFrame, SimError, World};
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::output::{MetricsSink, PolicySink};
use crate::summary::RunSummary;

pub const CONFIG_ECHO: &str = "config.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const POLICY_FILE: &str = "policies.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const INDEX_FILE: &str = "index.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Sim(_) | RunError::Io { .. } => 2,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Builds the world described by `config`.
pub fn build_world(config: &RunConfig) -> Result<World, RunError> {
    config.validate()?;
    let topology = config.topology()?;
    let sim = config.sim_config(&topology)?;
    Ok(World::new(topology, sim)?)
}

/// Runs `config` in memory, handing every frame to `on_frame` as well as
/// collecting it.
pub fn simulate<F>(config: &RunConfig, mut on_frame: F) -> Result<Vec<MetricsFrame>, RunError>
where
    F: FnMut(&MetricsFrame, &World) -> Result<(), RunError>,
{
    let mut world = build_world(config)?;
    let mut frames = Vec::with_capacity((config.duration / config.window) as usize);
    drive(&mut world, config.duration, config.window, |frame, w| {
        frames.push(*frame);
        on_frame(frame, w)
    })?;
    Ok(frames)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub frames: Vec<MetricsFrame>,
    pub summary: RunSummary,
}

/// Executes one run and writes the config echo, metrics CSV, optional
/// policy dump and summary into the run's output directory.
pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    config.validate()?;
    let dir = config.resolved_output_dir();
    fs::create_dir_all(&dir).map_err(io_at(&dir))?;

    let echo = dir.join(CONFIG_ECHO);
    fs::write(&echo, config.to_text()).map_err(io_at(&echo))?;

    let metrics_path = dir.join(METRICS_FILE);
    let mut sink = MetricsSink::create(&metrics_path).map_err(io_at(&metrics_path))?;
    let policy_path = dir.join(POLICY_FILE);
    let mut policies = if config.dump_policies {
        Some(PolicySink::create(&policy_path).map_err(io_at(&policy_path))?)
    } else {
        None
    };

    let mut windows = 0u64;
    let frames = simulate(config, |frame, world| {
        sink.emit_frame(frame).map_err(io_at(&metrics_path))?;
        windows += 1;
        if let Some(p) = policies.as_mut() {
            if windows.is_multiple_of(config.dump_every) {
                p.dump(frame.time, world.policies()).map_err(io_at(&policy_path))?;
            }
        }
        Ok(())
    })?;

    let summary = RunSummary::from_frames(&frames);
    let summary_path = dir.join(SUMMARY_FILE);
    fs::write(&summary_path, summary.to_text()).map_err(io_at(&summary_path))?;
    Ok(RunOutcome {
        output_dir: dir,
        frames,
        summary,
    })
}

/// Cartesian product of algorithms, learning rates and seeds over a base
/// config.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub algorithms: Vec<Algorithm>,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_root: PathBuf,
    pub parallel: usize,
}

impl SweepSpec {
    pub fn runs(&self) -> Vec<(String, RunConfig)> {
        let algorithms = if self.algorithms.is_empty() {
            vec![self.base.algorithm]
        } else {
            self.algorithms.clone()
        };
        let etas = if self.etas.is_empty() {
            vec![self.base.eta]
        } else {
            self.etas.clone()
        };
        let mut out = Vec::new();
        for &algorithm in &algorithms {
            for &eta in &etas {
                for &seed in &self.seeds {
                    let name = format!("{algorithm}-eta{eta}-seed{seed}");
                    let config = RunConfig {
                        algorithm,
                        eta,
                        seed,
                        output_dir: Some(self.out_root.join(&name)),
                        ..self.base.clone()
                    };
                    out.push((name, config));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub name: String,
    pub config: RunConfig,
    pub result: Result<RunSummary, String>,
}

pub const INDEX_HEADER: &str = "run,algorithm,eta,alpha,seed,status,frames,final_atst,final_entropy_mean,peak_atst,overall_atst,tail_atst_relative_change,tail_entropy_change,total_tasks,error";

fn index_row(e: &SweepEntry) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let c = &e.config;
    match &e.result {
        Ok(s) => format!(
            "{},{},{},{},{},ok,{},{},{},{},{},{},{},{},",
            e.name,
            c.algorithm,
            c.eta,
            c.alpha,
            c.seed,
            s.frames,
            opt(s.final_atst),
            s.final_entropy_mean,
            opt(s.peak_atst),
            opt(s.overall_atst),
            opt(s.tail_atst_change),
            opt(s.tail_entropy_change),
            s.total_tasks,
        ),
        Err(msg) => format!(
            "{},{},{},{},{},failed,,,,,,,,,\"{}\"",
            e.name,
            c.algorithm,
            c.eta,
            c.alpha,
            c.seed,
            msg.replace('"', "'")
        ),
    }
}

/// Runs every configuration of `spec` (up to `parallel` at a time), then
/// writes `index.csv` under the sweep root. Failed runs are recorded and do
/// not stop the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepEntry>, RunError> {
    spec.base.validate()?;
    fs::create_dir_all(&spec.out_root).map_err(io_at(&spec.out_root))?;
    let runs = spec.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallel.max(1))
        .build()
        .map_err(|e| RunError::Io {
            path: spec.out_root.clone(),
            source: io::Error::other(e),
        })?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        runs.into_par_iter()
            .map(|(name, config)| {
                let result = run(&config).map(|o| o.summary).map_err(|e| e.to_string());
                SweepEntry { name, config, result }
            })
            .collect()
    });

    let index = spec.out_root.join(INDEX_FILE);
    let mut text = String::from(INDEX_HEADER);
    text.push('\n');
    for e in &entries {
        text.push_str(&index_row(e));
        text.push('\n');
    }
    let mut file = fs::File::create(&index).map_err(io_at(&index))?;
    file.write_all(text.as_bytes()).map_err(io_at(&index))?;
    Ok(entries)
}

/// Parses `A..B` (inclusive of both ends) or a single seed.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>, ConfigError> {
    let invalid = || ConfigError::InvalidValue {
        key: "seeds".to_string(),
        value: text.to_string(),
        reason: "expected A..B with A <= B".to_string(),
    };
    match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| invalid())?;
            let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| invalid())?;
            if a > b {
                return Err(invalid());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![text.trim().parse().map_err(|_| invalid())?]),
    }
}
