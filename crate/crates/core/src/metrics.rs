//! Windowed ATST, policy-entropy aggregation and empirical policies.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::policy::{entropy, Policy, PolicyError};
use crate::sim::{SimError, Tick, World};
use crate::topology::{ActionIndex, AgentId};

pub const CSV_HEADER: &str = "time,window_tasks,atst,entropy_mean,entropy_std,tasks_completed_total";
pub const POLICY_CSV_HEADER: &str = "time,agent_id,action_index,probability";

/// One sampled row of the metrics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsFrame {
    pub time: Tick,
    pub window_tasks: u64,
    /// Mean TST of the window's completions; `None` for an empty window.
    pub atst: Option<f64>,
    pub entropy_mean: f64,
    pub entropy_std: f64,
    pub tasks_completed_total: u64,
}

impl MetricsFrame {
    /// CSV row without line terminator. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn csv_row(&self) -> String {
        let mut row = String::new();
        let _ = write!(row, "{},{},", self.time, self.window_tasks);
        if let Some(atst) = self.atst {
            let _ = write!(row, "{atst}");
        }
        let _ = write!(
            row,
            ",{},{},{}",
            self.entropy_mean, self.entropy_std, self.tasks_completed_total
        );
        row
    }
}

/// Accumulates completions into consecutive windows keyed by the tick at
/// which each completion was finalised.
#[derive(Debug, Clone, Default)]
pub struct WindowRecorder {
    window_sum: f64,
    window_tasks: u64,
    total_sum: f64,
    total_tasks: u64,
}

impl WindowRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_completion(&mut self, tst: f64) {
        debug_assert!(tst >= 0.0);
        self.window_sum += tst;
        self.window_tasks += 1;
        self.total_sum += tst;
        self.total_tasks += 1;
    }

    pub fn window_atst(&self) -> Option<f64> {
        (self.window_tasks > 0).then(|| self.window_sum / self.window_tasks as f64)
    }

    /// Mean TST over everything recorded so far.
    pub fn overall_atst(&self) -> Option<f64> {
        (self.total_tasks > 0).then(|| self.total_sum / self.total_tasks as f64)
    }

    pub fn total_tasks(&self) -> u64 {
        self.total_tasks
    }

    /// Closes the current window and starts the next one.
    pub fn close_window<'a, I>(&mut self, time: Tick, policies: I) -> MetricsFrame
    where
        I: IntoIterator<Item = &'a Policy>,
    {
        let (entropy_mean, entropy_std) = entropy_snapshot(policies);
        let frame = MetricsFrame {
            time,
            window_tasks: self.window_tasks,
            atst: self.window_atst(),
            entropy_mean,
            entropy_std,
            tasks_completed_total: self.total_tasks,
        };
        self.window_sum = 0.0;
        self.window_tasks = 0;
        frame
    }
}

/// Mean and population standard deviation of policy entropy (bits).
/// An empty population yields `(0, 0)`.
pub fn entropy_snapshot<'a, I>(policies: I) -> (f64, f64)
where
    I: IntoIterator<Item = &'a Policy>,
{
    let values: Vec<f64> = policies.into_iter().map(entropy).collect();
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var.max(0.0)))
}

/// Per-agent tallies of chosen actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCounter {
    counts: Vec<Vec<u64>>,
}

impl ActionCounter {
    pub fn new<I: IntoIterator<Item = usize>>(action_counts: I) -> Self {
        Self {
            counts: action_counts.into_iter().map(|n| alloc::vec![0; n]).collect(),
        }
    }

    pub fn record(&mut self, agent: AgentId, action: ActionIndex) {
        self.counts[agent][action] += 1;
    }

    pub fn counts(&self, agent: AgentId) -> &[u64] {
        &self.counts[agent]
    }

    pub fn num_agents(&self) -> usize {
        self.counts.len()
    }

    pub fn reset(&mut self) {
        self.counts.iter_mut().flatten().for_each(|c| *c = 0);
    }

    pub fn empirical_policy(&self, agent: AgentId) -> Result<Policy, PolicyError> {
        empirical_policy(&self.counts[agent])
    }
}

/// Normalised action frequencies.
pub fn empirical_policy(counts: &[u64]) -> Result<Policy, PolicyError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(PolicyError::BadMass(0.0));
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    // rounding can leave the sum a few ulps off
    Policy::new(probs.clone()).or_else(|_| crate::policy::project(&probs, 0.0))
}

/// Runs `world` for `duration` ticks, feeding completions into a
/// [`WindowRecorder`] and calling `on_frame` at each window boundary
/// (every tick divisible by `window`).
pub fn drive<E, F>(world: &mut World, duration: Tick, window: Tick, mut on_frame: F) -> Result<WindowRecorder, E>
where
    E: From<SimError>,
    F: FnMut(&MetricsFrame, &World) -> Result<(), E>,
{
    let mut recorder = WindowRecorder::new();
    let window = window.max(1);
    for _ in 0..duration {
        world.step()?;
        for c in world.completions() {
            recorder.record_completion(c.tst);
        }
        let now = world.now();
        if now.is_multiple_of(window) {
            let frame = recorder.close_window(now, world.policies());
            on_frame(&frame, world)?;
        }
    }
    Ok(recorder)
}
