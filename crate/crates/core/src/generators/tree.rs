use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::offspring::OffspringLaw;
use super::walk::WalkPath;
use crate::error::{Error, Result};
use crate::path::LatticePath;

/// Attempts allowed by [`gw_tree_conditioned`] before giving up.
pub const DEFAULT_ATTEMPT_BUDGET: u64 = 10_000_000;

/// Below this many undecided draws the multinomial sampler draws them one
/// at a time from the conditional tail.
const SMALL_REMAINDER: u64 = 16;

/// Finite rooted ordered tree stored as the preorder sequence of child
/// counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlaneTree {
    child_counts: Vec<usize>,
}

impl PlaneTree {
    /// Checks the Łukasiewicz condition: partial sums of `count − 1` stay
    /// nonnegative and reach −1 exactly at the last vertex.
    pub fn new(child_counts: Vec<usize>) -> Result<Self> {
        let mut s: i64 = 0;
        for (i, &c) in child_counts.iter().enumerate() {
            s += c as i64 - 1;
            if s < 0 && i + 1 != child_counts.len() {
                return Err(Error::InvalidTree(format!("preorder sequence closes early at vertex {i}")));
            }
        }
        if s != -1 {
            return Err(Error::InvalidTree("child counts do not describe a single tree".into()));
        }
        Ok(PlaneTree { child_counts })
    }

    pub fn single_vertex() -> Self {
        PlaneTree { child_counts: alloc::vec![0] }
    }

    pub fn child_counts(&self) -> &[usize] {
        &self.child_counts
    }

    pub fn vertex_count(&self) -> usize {
        self.child_counts.len()
    }

    pub fn edges(&self) -> usize {
        self.child_counts.len() - 1
    }

    pub fn max_degree(&self) -> usize {
        self.child_counts.iter().copied().max().unwrap_or(0)
    }

    /// Depth of every vertex, in preorder.
    pub fn depths(&self) -> Vec<i64> {
        let mut depths = Vec::with_capacity(self.vertex_count());
        // Remaining children of each open vertex along the current branch.
        let mut open: Vec<usize> = Vec::new();
        for &c in &self.child_counts {
            while open.last() == Some(&0) {
                open.pop();
            }
            if let Some(top) = open.last_mut() {
                *top -= 1;
            }
            depths.push(open.len() as i64);
            open.push(c);
        }
        depths
    }

    /// Depth-first contour, a Dyck path of length `2n`.
    pub fn contour(&self) -> LatticePath {
        let mut steps = Vec::with_capacity(2 * self.edges());
        let mut open: Vec<usize> = alloc::vec![self.child_counts[0]];
        for &c in &self.child_counts[1..] {
            while open.last() == Some(&0) {
                open.pop();
                steps.push(false);
            }
            *open.last_mut().expect("root stays open until the last vertex") -= 1;
            steps.push(true);
            open.push(c);
        }
        steps.extend(core::iter::repeat_n(false, open.len() - 1));
        LatticePath::from_steps(&steps)
    }

    /// Inverse of [`PlaneTree::contour`].
    pub fn from_dyck(path: &LatticePath) -> Result<Self> {
        if !path.is_dyck() {
            return Err(Error::InvalidTree("not a Dyck path".into()));
        }
        let mut counts = alloc::vec![0usize];
        let mut branch = alloc::vec![0usize];
        for w in path.heights().windows(2) {
            if w[1] > w[0] {
                let parent = *branch.last().unwrap();
                counts[parent] += 1;
                branch.push(counts.len());
                counts.push(0);
            } else {
                branch.pop();
            }
        }
        Ok(PlaneTree { child_counts: counts })
    }

    /// Łukasiewicz walk `X_{t+1} = X_t + c_t − 1`, ending at −1.
    pub fn lukasiewicz_walk(&self) -> WalkPath {
        WalkPath::from_steps(self.child_counts.iter().map(|&c| c as i64 - 1)).expect("steps are at least -1")
    }

    /// Balanced parentheses: `(` for each step away from the root and `)`
    /// for each step back.
    pub fn to_parens(&self) -> String {
        self.contour().heights().windows(2).map(|w| if w[1] > w[0] { '(' } else { ')' }).collect()
    }

    pub fn from_parens(s: &str) -> Result<Self> {
        let steps: Vec<bool> = s
            .chars()
            .map(|ch| match ch {
                '(' => Ok(true),
                ')' => Ok(false),
                other => Err(Error::InvalidTree(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_dyck(&LatticePath::from_steps(&steps))
    }

    /// Cycle lemma: the unique rotation of `counts` (summing to `len − 1`)
    /// that is a Łukasiewicz sequence, starting right after the first
    /// minimum of the partial sums of `count − 1`.
    pub fn from_cyclic_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if counts.is_empty() || total + 1 != counts.len() {
            return Err(Error::InvalidTree("child counts must sum to one less than their number".into()));
        }
        let mut s: i64 = 0;
        let mut best = (i64::MAX, 0usize);
        for (k, &c) in counts.iter().enumerate() {
            s += c as i64 - 1;
            if s < best.0 {
                best = (s, k + 1);
            }
        }
        let start = best.1 % counts.len();
        let rotated = counts[start..].iter().chain(&counts[..start]).copied().collect();
        Self::new(rotated)
    }
}

/// Galton–Watson tree with the given offspring law conditioned to have
/// exactly `n` edges.
///
/// Draws `n + 1` i.i.d. child counts conditioned on summing to `n`, then
/// applies the cycle lemma. The conditioned counts are obtained by
/// rejection on their multinomial histogram, which is built category by
/// category with binomial draws, followed by a uniform shuffle.
pub fn gw_tree_conditioned<R: Rng + ?Sized>(law: &OffspringLaw, n: usize, rng: &mut R) -> Result<PlaneTree> {
    gw_tree_conditioned_with_budget(law, n, rng, DEFAULT_ATTEMPT_BUDGET)
}

pub fn gw_tree_conditioned_with_budget<R: Rng + ?Sized>(
    law: &OffspringLaw,
    n: usize,
    rng: &mut R,
    budget: u64,
) -> Result<PlaneTree> {
    if n == 0 {
        return Ok(PlaneTree::single_vertex());
    }
    if law.prob(0) <= 0.0 || law.tail(2) <= 0.0 || (n == 1 && law.prob(1) <= 0.0) {
        return Err(Error::Input(format!("offspring law cannot produce trees with {n} edges")));
    }
    let mut histogram: Vec<(usize, u64)> = Vec::new();
    for _ in 0..budget {
        if sample_histogram(law, n, rng, &mut histogram) {
            let mut counts = Vec::with_capacity(n + 1);
            for &(k, c) in &histogram {
                counts.extend(core::iter::repeat_n(k, c as usize));
            }
            counts.shuffle(rng);
            return PlaneTree::from_cyclic_counts(&counts);
        }
    }
    Err(Error::BudgetExceeded { what: "conditioned Galton-Watson sampler", budget })
}

/// One attempt at the histogram of `n + 1` i.i.d. draws; returns whether the
/// draws sum to `n`.
fn sample_histogram<R: Rng + ?Sized>(law: &OffspringLaw, n: usize, rng: &mut R, out: &mut Vec<(usize, u64)>) -> bool {
    out.clear();
    let mut remaining = (n + 1) as u64;
    let mut sum: u64 = 0;
    let target = n as u64;
    let mut k = 0usize;
    while remaining > 0 {
        if k > n {
            return false;
        }
        let tail = law.tail(k);
        if remaining <= SMALL_REMAINDER {
            for _ in 0..remaining {
                let u = rng.random::<f64>() * tail;
                let v = law.inverse_tail(k, u);
                sum += v as u64;
                if sum > target {
                    return false;
                }
                push_count(out, v, 1);
            }
            break;
        }
        let q = (law.prob(k) / tail).clamp(0.0, 1.0);
        let c = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        if c > 0 {
            remaining -= c;
            sum += c * k as u64;
            push_count(out, k, c);
        }
        // Every undecided draw is at least k + 1.
        if sum + remaining * (k as u64 + 1) > target {
            return false;
        }
        k += 1;
    }
    sum == target
}

fn push_count(out: &mut Vec<(usize, u64)>, k: usize, c: u64) {
    match out.iter_mut().find(|e| e.0 == k) {
        Some(e) => e.1 += c,
        None => out.push((k, c)),
    }
}
