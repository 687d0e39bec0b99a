//! Per-agent gradient-ascent learners (WPL and GIGA-WoLF) driven by scalar
//! rewards through an exponential-moving-average value estimate.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::policy::{project, GradientVector, Policy, PolicyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error("action {action} out of range for {n} actions")]
    ActionOutOfRange { action: usize, n: usize },
    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid learner config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Wpl,
    GigaWolf,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Wpl => "wpl",
            Algorithm::GigaWolf => "giga-wolf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm (expected wpl or giga-wolf)")]
pub struct UnknownAlgorithm;

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wpl" => Ok(Algorithm::Wpl),
            "giga-wolf" | "gigawolf" | "giga_wolf" => Ok(Algorithm::GigaWolf),
            _ => Err(UnknownAlgorithm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub eta: f64,
    /// EMA smoothing rate of the value estimate.
    pub alpha: f64,
    pub epsilon_floor: f64,
    pub algorithm: Algorithm,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            eta: 0.001,
            alpha: 0.1,
            epsilon_floor: 0.01,
            algorithm: Algorithm::Wpl,
        }
    }
}

impl LearnerConfig {
    /// Checks the config against an action set of size `n`.
    pub fn validate(&self, n: usize) -> Result<(), LearnerError> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(LearnerError::Config("eta must be > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(LearnerError::Config("alpha must be in (0, 1]"));
        }
        if !(self.epsilon_floor >= 0.0 && self.epsilon_floor * (n as f64) < 1.0) {
            return Err(LearnerError::Config("epsilon_floor must be in [0, 1/n)"));
        }
        Ok(())
    }

    /// The floor actually applied for an `n`-action agent. An agent with a
    /// single action has no choice to make, so the floor is dropped there.
    pub fn floor_for(&self, n: usize) -> f64 {
        if self.epsilon_floor * n as f64 >= 1.0 {
            0.0
        } else {
            self.epsilon_floor
        }
    }
}

/// Per-action expected-reward estimates, ordered like the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    q: Vec<f64>,
}

impl ValueEstimate {
    pub fn zeros(n: usize) -> Self {
        Self {
            q: alloc::vec![0.0; n],
        }
    }

    pub fn from_values(q: Vec<f64>) -> Result<Self, LearnerError> {
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite(i).into());
        }
        Ok(Self { q })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// `q[action] <- (1 - alpha) q[action] + alpha reward`.
    pub fn update(&mut self, action: usize, reward: f64, alpha: f64) -> Result<(), LearnerError> {
        let n = self.q.len();
        let slot = self
            .q
            .get_mut(action)
            .ok_or(LearnerError::ActionOutOfRange { action, n })?;
        if !reward.is_finite() {
            return Err(LearnerError::NonFiniteReward(reward));
        }
        *slot = (1.0 - alpha) * *slot + alpha * reward;
        Ok(())
    }
}

pub fn update_value(
    v: &ValueEstimate,
    action: usize,
    reward: f64,
    alpha: f64,
) -> Result<ValueEstimate, LearnerError> {
    let mut next = v.clone();
    next.update(action, reward, alpha)?;
    Ok(next)
}

/// Advantage-centred gradient of `V = sum_j p_j q_j`:
/// `g_j = q_j - sum_k p_k q_k`.
pub fn gradient(v: &ValueEstimate, p: &Policy) -> Result<GradientVector, LearnerError> {
    if v.len() != p.len() {
        return Err(LearnerError::LengthMismatch {
            expected: p.len(),
            got: v.len(),
        });
    }
    let baseline: f64 = v.q.iter().zip(p.as_slice()).map(|(q, pk)| q * pk).sum();
    Ok(GradientVector::new(v.q.iter().map(|q| q - baseline).collect())?)
}

fn check_lengths(p: &Policy, g: &GradientVector) -> Result<(), LearnerError> {
    if p.len() != g.len() {
        return Err(LearnerError::LengthMismatch {
            expected: p.len(),
            got: g.len(),
        });
    }
    Ok(())
}

/// Unprojected WPL increment. Negative gradients are damped by `p_j`,
/// non-negative ones by `1 - p_j`.
pub fn wpl_delta(p: &Policy, g: &GradientVector, eta: f64) -> Result<Vec<f64>, LearnerError> {
    check_lengths(p, g)?;
    Ok(p.as_slice()
        .iter()
        .zip(g.as_slice())
        .map(|(&pj, &gj)| {
            let weight = if gj < 0.0 { pj } else { 1.0 - pj };
            gj * eta * weight
        })
        .collect())
}

pub fn wpl_step(p: &Policy, g: &GradientVector, cfg: &LearnerConfig) -> Result<Policy, LearnerError> {
    let delta = wpl_delta(p, g, cfg.eta)?;
    let raw: Vec<f64> = p.as_slice().iter().zip(&delta).map(|(a, d)| a + d).collect();
    Ok(project(&raw, cfg.floor_for(p.len()))?)
}

/// Slow baseline policy of GIGA-WoLF.
#[derive(Debug, Clone, PartialEq)]
pub struct GigaWolfState {
    pub z: Policy,
}

/// Intermediate quantities of one GIGA-WoLF update.
#[derive(Debug, Clone, PartialEq)]
pub struct GigaWolfStep {
    /// Fast track, `project(p + eta g)`.
    pub fast: Policy,
    /// New baseline, `project(p + eta g / 3)`.
    pub baseline: Policy,
    pub delta: f64,
    pub policy: Policy,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Denominators at or below this are treated as coincident tracks.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

pub fn giga_wolf_update(
    p: &Policy,
    z: &GigaWolfState,
    g: &GradientVector,
    cfg: &LearnerConfig,
) -> Result<GigaWolfStep, LearnerError> {
    check_lengths(p, g)?;
    if z.z.len() != p.len() {
        return Err(LearnerError::LengthMismatch {
            expected: p.len(),
            got: z.z.len(),
        });
    }
    let floor = cfg.floor_for(p.len());
    let step = |scale: f64| -> Vec<f64> {
        p.as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(pj, gj)| pj + scale * gj)
            .collect()
    };
    let fast = project(&step(cfg.eta), floor)?;
    let baseline = project(&step(cfg.eta / 3.0), floor)?;

    let spread = distance(baseline.as_slice(), fast.as_slice());
    let delta = if spread <= COINCIDENCE_TOLERANCE {
        1.0
    } else {
        (distance(baseline.as_slice(), z.z.as_slice()) / spread).min(1.0)
    };

    let mixed: Vec<f64> = fast
        .as_slice()
        .iter()
        .zip(baseline.as_slice())
        .map(|(x, b)| x + delta * (b - x))
        .collect();
    // Convex combination of two floored simplex points; renormalise away
    // rounding only.
    let policy = if delta == 1.0 {
        baseline.clone()
    } else {
        Policy::new(mixed.clone()).or_else(|_| project(&mixed, floor))?
    };
    Ok(GigaWolfStep {
        fast,
        baseline,
        delta,
        policy,
    })
}

pub fn giga_wolf_step(
    p: &Policy,
    z: &GigaWolfState,
    g: &GradientVector,
    cfg: &LearnerConfig,
) -> Result<(Policy, GigaWolfState), LearnerError> {
    let step = giga_wolf_update(p, z, g, cfg)?;
    Ok((step.policy, GigaWolfState { z: step.baseline }))
}

/// Everything one agent learns: policy, value estimates and the
/// algorithm-specific baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub policy: Policy,
    pub values: ValueEstimate,
    pub giga: Option<GigaWolfState>,
}

impl LearnerState {
    pub fn new(n: usize, cfg: &LearnerConfig) -> Result<Self, LearnerError> {
        Self::with_policy(Policy::uniform(n)?, cfg)
    }

    pub fn with_policy(policy: Policy, cfg: &LearnerConfig) -> Result<Self, LearnerError> {
        let n = policy.len();
        let giga = match cfg.algorithm {
            Algorithm::Wpl => None,
            Algorithm::GigaWolf => Some(GigaWolfState { z: policy.clone() }),
        };
        Ok(Self {
            policy,
            values: ValueEstimate::zeros(n),
            giga,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.policy.len()
    }

    /// One value update followed by exactly one policy update.
    pub fn observe(&mut self, action: usize, reward: f64, cfg: &LearnerConfig) -> Result<(), LearnerError> {
        self.values.update(action, reward, cfg.alpha)?;
        let g = gradient(&self.values, &self.policy)?;
        match cfg.algorithm {
            Algorithm::Wpl => {
                self.policy = wpl_step(&self.policy, &g, cfg)?;
            }
            Algorithm::GigaWolf => {
                let z = self.giga.get_or_insert_with(|| GigaWolfState {
                    z: self.policy.clone(),
                });
                let (policy, next) = giga_wolf_step(&self.policy, z, &g, cfg)?;
                self.policy = policy;
                *z = next;
            }
        }
        Ok(())
    }
}

pub fn learner_observe(
    state: &LearnerState,
    action: usize,
    reward: f64,
    cfg: &LearnerConfig,
) -> Result<LearnerState, LearnerError> {
    let mut next = state.clone();
    next.observe(action, reward, cfg)?;
    Ok(next)
}
