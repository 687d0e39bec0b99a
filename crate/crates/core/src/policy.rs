//! Probability-simplex policies: construction, Euclidean projection,
//! sampling and Shannon entropy (bits).

use alloc::vec::Vec;
use core::ops::Index;

use rand::Rng;

/// Tolerance on the unit-mass invariant of a [`Policy`].
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("policy must have at least one action")]
    Empty,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("probability {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    BadMass(f64),
    #[error("epsilon floor {floor} must lie in [0, 1/{n})")]
    BadFloor { floor: f64, n: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A probability vector over an agent's fixed, ordered action set.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(probs: Vec<f64>) -> Result<Self, PolicyError> {
        if probs.is_empty() {
            return Err(PolicyError::Empty);
        }
        let mut sum = 0.0;
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() {
                return Err(PolicyError::NonFinite(index));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(PolicyError::OutOfRange { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(PolicyError::BadMass(sum));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self, PolicyError> {
        if n == 0 {
            return Err(PolicyError::Empty);
        }
        Ok(Self {
            probs: alloc::vec![1.0 / n as f64; n],
        })
    }

    /// Point mass on `action`.
    pub fn deterministic(n: usize, action: usize) -> Result<Self, PolicyError> {
        if n == 0 {
            return Err(PolicyError::Empty);
        }
        if action >= n {
            return Err(PolicyError::LengthMismatch {
                expected: n,
                got: action + 1,
            });
        }
        let mut probs = alloc::vec![0.0; n];
        probs[action] = 1.0;
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy(self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample(self, rng)
    }
}

impl Index<usize> for Policy {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.probs[index]
    }
}

/// Per-action reward-gradient estimate paired with a [`Policy`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
}

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Result<Self, PolicyError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: alloc::vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl Index<usize> for GradientVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

/// Euclidean projection of `raw` onto `{p : sum(p) = 1, p_k >= epsilon_floor}`.
///
/// The floored simplex is an affine image of the standard simplex,
/// `p = floor + (1 - n * floor) * q`, so the problem reduces to projecting
/// `(raw - floor) / (1 - n * floor)` with the sort-based exact algorithm.
pub fn project(raw: &[f64], epsilon_floor: f64) -> Result<Policy, PolicyError> {
    let n = raw.len();
    if n == 0 {
        return Err(PolicyError::Empty);
    }
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(PolicyError::NonFinite(i));
    }
    if !epsilon_floor.is_finite() || epsilon_floor < 0.0 || epsilon_floor * n as f64 >= 1.0 {
        return Err(PolicyError::BadFloor {
            floor: epsilon_floor,
            n,
        });
    }

    let scale = 1.0 - n as f64 * epsilon_floor;
    let shifted: Vec<f64> = raw.iter().map(|&v| (v - epsilon_floor) / scale).collect();
    let q = project_standard(&shifted);
    let probs = q
        .into_iter()
        .map(|qk| (epsilon_floor + scale * qk).clamp(0.0, 1.0))
        .collect();
    Ok(Policy { probs })
}

/// Sort-based projection onto the standard simplex.
fn project_standard(v: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// `-sum p_k log2 p_k` with `0 log 0 = 0`.
pub fn entropy(p: &Policy) -> f64 {
    let h: f64 = p
        .probs
        .iter()
        .filter(|&&pk| pk > 0.0)
        .map(|&pk| -pk * libm::log2(pk))
        .sum();
    h.max(0.0)
}

/// Draws an action index. Consumes exactly one `f64` from `rng`.
pub fn sample<R: Rng + ?Sized>(p: &Policy, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (k, &pk) in p.probs.iter().enumerate() {
        if pk > 0.0 {
            last_positive = k;
            cumulative += pk;
            if u < cumulative {
                return k;
            }
        }
    }
    // u landed in the rounding gap above the accumulated mass
    last_positive
}
