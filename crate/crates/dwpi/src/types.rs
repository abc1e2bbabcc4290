//! Shared domain types: preference weights, vector rewards, and the
//! discretized preference simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex membership checks.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the preference simplex: weights over objectives.
///
/// The canonical invariant is elementwise non-negative summing to 1. For
/// environments with a signed objective (the altruism component of Item
/// Gathering) the invariant relaxes to `Σ|wᵢ| = 1` with signs preserved;
/// see [`normalize_weights`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceWeight(Vec<f64>);

impl PreferenceWeight {
    /// Construct, validating `Σ|wᵢ| = 1` within [`SIMPLEX_TOL`].
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("preference weight"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "preference weight",
            });
        }
        let abs_sum: f64 = values.iter().map(|v| v.abs()).sum();
        if (abs_sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter {
                name: "preference weight",
                reason: format!("|w| must sum to 1, got {abs_sum}"),
            });
        }
        Ok(Self(values))
    }

    /// Uniform weight over `d` objectives.
    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// True when any component is negative (signed-simplex regime).
    pub fn is_signed(&self) -> bool {
        self.0.iter().any(|&v| v < 0.0)
    }

    /// Key usable as a stable map index; exact on the bit pattern.
    pub fn bits_key(&self) -> Vec<u64> {
        self.0.iter().map(|v| v.to_bits()).collect()
    }
}

impl std::fmt::Display for PreferenceWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Per-step vector reward, one component per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Componentwise accumulate.
    pub fn add_assign(&mut self, other: &RewardVector) {
        debug_assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// All weight vectors with non-negative components that are integer multiples
/// of `eta` and sum to 1, in lexicographic order with the first component
/// descending. The count is `C(1/eta + d - 1, d - 1)`.
pub fn discretize_simplex(d: usize, eta: f64) -> Result<Vec<PreferenceWeight>> {
    if d < 2 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "simplex needs at least 2 objectives".into(),
        });
    }
    if eta <= 0.0 || eta > 1.0 {
        return Err(Error::InvalidGranularity {
            eta,
            reason: "eta must lie in (0, 1]".into(),
        });
    }
    let steps_f = 1.0 / eta;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > SIMPLEX_TOL * steps_f {
        return Err(Error::InvalidGranularity {
            eta,
            reason: "1/eta must be an integer".into(),
        });
    }
    let n = steps as u64;
    let mut out = Vec::new();
    let mut current = vec![0u64; d];
    enumerate(n, 0, &mut current, &mut out, n);
    Ok(out)
}

fn enumerate(remaining: u64, pos: usize, current: &mut Vec<u64>, out: &mut Vec<PreferenceWeight>, n: u64) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        // k/n keeps each component exactly representable and the sum within
        // a few ulp of 1.
        let vals: Vec<f64> = current.iter().map(|&k| k as f64 / n as f64).collect();
        out.push(PreferenceWeight(vals));
        return;
    }
    // First component descending matches the documented enumeration order.
    for k in (0..=remaining).rev() {
        current[pos] = k;
        enumerate(remaining - k, pos + 1, current, out, n);
    }
}

/// Number of points `discretize_simplex(d, 1/n)` produces: `C(n + d - 1, d - 1)`.
pub fn simplex_count(d: usize, n: u64) -> u64 {
    binomial(n + d as u64 - 1, d as u64 - 1)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Linear scalarization: the dot product `r · w`.
pub fn scalarize(r: &RewardVector, w: &PreferenceWeight) -> Result<f64> {
    if r.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: r.dim(),
        });
    }
    Ok(r.values().iter().zip(w.values()).map(|(a, b)| a * b).sum())
}

/// Normalize a raw weight vector onto the (signed) simplex.
///
/// Divides by the sum of absolute values, preserving signs. For all
/// non-negative input this is the plain sum, so the result lies on the
/// ordinary simplex; vectors with negative components land on the signed
/// simplex `Σ|wᵢ| = 1`.
pub fn normalize_weights(raw: &[f64]) -> Result<PreferenceWeight> {
    if raw.is_empty() {
        return Err(Error::EmptyInput("weight vector"));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "normalize_weights",
        });
    }
    let abs_sum: f64 = raw.iter().map(|v| v.abs()).sum();
    if abs_sum == 0.0 {
        return Err(Error::ZeroVector);
    }
    PreferenceWeight::new(raw.iter().map(|v| v / abs_sum).collect())
}
