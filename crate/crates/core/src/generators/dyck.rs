use alloc::format;
use alloc::vec::Vec;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::path::LatticePath;

/// Largest half-length accepted by [`enumerate_dyck`].
pub const MAX_DYCK_HALF_LENGTH: usize = 12;

/// `Catalan(n) = binom(2n, n) / (n + 1)`, exact for `n ≤ 35`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c as u64
}

/// All Dyck paths of length `2n`, each exactly once, in lexicographic order
/// of their step words with down before up.
pub fn enumerate_dyck(n: usize) -> Result<DyckPaths> {
    if n == 0 {
        return Err(Error::Domain("Dyck half-length must be at least 1".into()));
    }
    if n > MAX_DYCK_HALF_LENGTH {
        return Err(Error::Resource(format!(
            "Dyck enumeration is limited to half-length {MAX_DYCK_HALF_LENGTH}, got {n}"
        )));
    }
    let mut steps = Vec::with_capacity(2 * n);
    complete_minimal(&mut steps, n);
    Ok(DyckPaths { half: n, steps: Some(steps), remaining: catalan(n) as usize })
}

/// Iterator returned by [`enumerate_dyck`].
#[derive(Debug, Clone)]
pub struct DyckPaths {
    half: usize,
    steps: Option<Vec<bool>>,
    remaining: usize,
}

impl DyckPaths {
    pub fn half_length(&self) -> usize {
        self.half
    }
}

// Smallest valid completion of a prefix: all the way down, then (UD)*.
fn complete_minimal(steps: &mut Vec<bool>, n: usize) {
    let ups = steps.iter().filter(|&&s| s).count();
    let height = 2 * ups - steps.len();
    steps.extend(core::iter::repeat_n(false, height));
    for _ in ups..n {
        steps.push(true);
        steps.push(false);
    }
}

fn advance(steps: &mut Vec<bool>, n: usize) -> bool {
    let mut ups: usize = steps.iter().filter(|&&s| s).count();
    for i in (0..steps.len()).rev() {
        if steps[i] {
            ups -= 1;
            continue;
        }
        if ups < n {
            steps.truncate(i);
            steps.push(true);
            complete_minimal(steps, n);
            return true;
        }
    }
    false
}

impl Iterator for DyckPaths {
    type Item = LatticePath;

    fn next(&mut self) -> Option<LatticePath> {
        let steps = self.steps.as_mut()?;
        let out = LatticePath::from_steps(steps);
        if !advance(steps, self.half) {
            self.steps = None;
        }
        self.remaining = self.remaining.saturating_sub(1);
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for DyckPaths {}

/// GW(geometric 1/2) probability of any fixed plane tree with `n` edges:
/// `2^{−(2n+1)}`.
pub fn srw_excursion_tree_weight(n: usize) -> Result<Ratio<i128>> {
    let exponent = 2 * n + 1;
    if exponent > 125 {
        return Err(Error::Resource(format!("weight 2^-{exponent} does not fit the rational type")));
    }
    Ok(Ratio::new(1, 1i128 << exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    #[test]
    fn catalan_numbers() {
        let known = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786, 208012];
        for (n, &c) in known.iter().enumerate() {
            assert_eq!(catalan(n), c);
        }
    }

    #[test]
    fn enumeration_counts_and_uniqueness() {
        for n in 1..=10 {
            let all: Vec<LatticePath> = enumerate_dyck(n).unwrap().collect();
            assert_eq!(all.len() as u64, catalan(n));
            assert!(all.iter().all(|p| p.is_dyck() && p.len() == 2 * n));
            let distinct: BTreeSet<_> = all.iter().cloned().collect();
            assert_eq!(distinct.len(), all.len());
        }
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_dyck(3).unwrap().count(), 5);
        assert_eq!(enumerate_dyck(5).unwrap().count(), 42);
        let one: Vec<_> = enumerate_dyck(1).unwrap().collect();
        assert_eq!(one, vec![LatticePath::new(vec![0, 1, 0]).unwrap()]);
        assert_eq!(enumerate_dyck(12).unwrap().len(), 208012);
    }

    #[test]
    fn enumeration_bounds() {
        assert!(matches!(enumerate_dyck(13), Err(Error::Resource(_))));
        assert!(enumerate_dyck(0).is_err());
    }

    #[test]
    fn tree_weights() {
        assert_eq!(srw_excursion_tree_weight(0).unwrap(), Ratio::new(1, 2));
        assert_eq!(srw_excursion_tree_weight(1).unwrap(), Ratio::new(1, 8));
        assert!(srw_excursion_tree_weight(70).is_err());
    }

    fn binom(n: u64, k: u64) -> i128 {
        (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
    }

    #[test]
    fn total_weight_tends_to_one() {
        // Σ_{n<N} C_n 4^{−n} = 2 − 2·binom(2N, N)·4^{−N}, so the weights sum to
        // 1 − binom(2N, N)/4^N, which vanishes as N grows.
        let mut partial = Ratio::new(0i128, 1);
        for big_n in 1..=30usize {
            let n = big_n - 1;
            partial += Ratio::from_integer(catalan(n) as i128) * srw_excursion_tree_weight(n).unwrap();
            let rest = Ratio::new(binom(2 * big_n as u64, big_n as u64), 1i128 << (2 * big_n));
            assert_eq!(partial + rest, Ratio::from_integer(1));
        }
        assert!(1.0 - (partial.numer().clone() as f64 / *partial.denom() as f64) < 0.11);
    }
}
