use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of coefficients tabulated for stable offspring laws; the tail
/// beyond is lumped into the last entry.
pub const STABLE_TABLE_LEN: usize = 1_000_000;

const GEOMETRIC_TABLE_LEN: usize = 64;

/// A critical offspring distribution on `{0, 1, 2, …}` stored as a table.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    probs: Vec<f64>,
    /// `tail[k] = P(ξ ≥ k)`, one entry longer than `probs`.
    tail: Vec<f64>,
    gamma: Option<f64>,
}

impl OffspringLaw {
    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// `P(ξ ≥ k)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.tail.get(k).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Stability index for the stable family, `None` for geometric.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Mean of the tabulated (truncated) law.
    pub fn mean(&self) -> f64 {
        // Σ k p_k = Σ_{k≥1} P(ξ ≥ k), summed from the small end of the tail.
        self.tail[1..].iter().rev().sum()
    }

    /// Smallest `k ≥ from` with `P(ξ ≥ from) − P(ξ > k) > u`, for
    /// `u ∈ [0, P(ξ ≥ from))`: inverse CDF of the law conditioned on
    /// `ξ ≥ from`.
    pub(crate) fn inverse_tail(&self, from: usize, u: f64) -> usize {
        let target = self.tail(from) - u;
        // tail is nonincreasing; find the first k ≥ from with tail[k + 1] < target.
        let (mut lo, mut hi) = (from, self.probs.len() - 1);
        if self.tail[hi + 1] >= target {
            return hi;
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.tail[mid + 1] < target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

/// Geometric(1/2): `P(k) = 2^{−k−1}`, the offspring law whose conditioned
/// trees are uniform plane trees.
pub fn offspring_geometric() -> OffspringLaw {
    let mut probs: Vec<f64> = (0..GEOMETRIC_TABLE_LEN).map(|k| libm::ldexp(1.0, -(k as i32) - 1)).collect();
    let last = GEOMETRIC_TABLE_LEN - 1;
    probs[last] = libm::ldexp(1.0, -(last as i32));
    let tail = (0..=GEOMETRIC_TABLE_LEN)
        .map(|k| if k == GEOMETRIC_TABLE_LEN { 0.0 } else { libm::ldexp(1.0, -(k as i32)) })
        .collect();
    OffspringLaw { probs, tail, gamma: None }
}

/// Offspring law with generating function `φ(s) = s + γ⁻¹(1 − s)^γ`,
/// `γ ∈ (1, 2]`.
pub fn offspring_stable(gamma: f64) -> Result<OffspringLaw> {
    offspring_stable_with_len(gamma, STABLE_TABLE_LEN)
}

pub(crate) fn offspring_stable_with_len(gamma: f64, len: usize) -> Result<OffspringLaw> {
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(Error::Domain(format!("stability index must lie in (1, 2], got {gamma}")));
    }
    let len = len.max(3);
    // (1 − s)^γ = Σ c_k s^k with c_k = (−1)^k C(γ, k), and the partial sums
    // Σ_{j≤k} c_j = d_k = (−1)^k C(γ − 1, k). Both follow simple recursions.
    let mut probs = Vec::with_capacity(len);
    let mut tail = Vec::with_capacity(len + 1);
    probs.push(1.0 / gamma);
    probs.push(0.0);
    tail.push(1.0);
    tail.push(1.0 - 1.0 / gamma);
    let mut c = -gamma;
    let mut d = 1.0 - gamma;
    for k in 2..len {
        c *= (k as f64 - 1.0 - gamma) / k as f64;
        // P(ξ ≥ k) = −d_{k−1}/γ.
        tail.push(-d / gamma);
        d *= (k as f64 - gamma) / k as f64;
        probs.push(c / gamma);
    }
    let last = len - 1;
    probs[last] = tail[last];
    tail.push(0.0);
    Ok(OffspringLaw { probs, tail, gamma: Some(gamma) })
}
