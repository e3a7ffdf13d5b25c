use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A downward skip-free walk `X_0 = 0, X_1, …, X_T` in integer units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    values: Vec<i64>,
}

impl WalkPath {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.first() != Some(&0) {
            return Err(Error::InvalidPath("a walk starts at 0".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] - w[0] < -1) {
            return Err(Error::InvalidPath(format!("step {i} jumps down by more than one unit")));
        }
        Ok(WalkPath { values })
    }

    /// Walk with the given steps, each at least −1.
    pub fn from_steps(steps: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut values = alloc::vec![0i64];
        let mut x = 0;
        for s in steps {
            x += s;
            values.push(x);
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `I_t = min(X_0, …, X_t)`.
    pub fn running_min(&self) -> Vec<i64> {
        let mut m = 0;
        self.values
            .iter()
            .map(|&x| {
                m = m.min(x);
                m
            })
            .collect()
    }

    /// `I^s_t = min(X_s, …, X_t)`.
    pub fn min_between(&self, s: usize, t: usize) -> i64 {
        self.values[s..=t].iter().copied().min().expect("nonempty range")
    }

    /// First time the walk equals `level`.
    pub fn first_hitting(&self, level: i64) -> Option<usize> {
        self.values.iter().position(|&x| x == level)
    }

    /// The walk stopped at time `t`.
    pub fn truncated(&self, t: usize) -> WalkPath {
        WalkPath { values: self.values[..=t].to_vec() }
    }
}

/// Discrete height process: `H_t = #{s < t : X_s ≤ min(X_{s+1}, …, X_t)}`.
///
/// Runs in linear time with a stack of the times `s` still counted, whose
/// walk values are nondecreasing from bottom to top.
pub fn height_of_walk(w: &WalkPath) -> Vec<i64> {
    let x = w.values();
    let mut heights = Vec::with_capacity(x.len());
    let mut stack: Vec<i64> = Vec::new();
    heights.push(0);
    for t in 1..x.len() {
        stack.push(x[t - 1]);
        while stack.last().is_some_and(|&v| v > x[t]) {
            stack.pop();
        }
        heights.push(stack.len() as i64);
    }
    heights
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Direct count from the definition.
    fn height_brute(x: &[i64]) -> Vec<i64> {
        (0..x.len())
            .map(|t| (0..t).filter(|&s| x[s] <= *x[s + 1..=t].iter().min().unwrap()).count() as i64)
            .collect()
    }

    #[test]
    fn height_examples() {
        let w = WalkPath::new(vec![0, -1]).unwrap();
        assert_eq!(height_of_walk(&w), vec![0, 0]);
        let w = WalkPath::new(vec![0, -1, 0, 1, 0, -1, -2]).unwrap();
        assert_eq!(height_of_walk(&w), vec![0, 0, 1, 2, 2, 1, 0]);
        // Łukasiewicz walk of a root with two leaves: preorder depths (0, 1, 1)
        // followed by the terminal 0.
        let w = WalkPath::new(vec![0, 1, 0, -1]).unwrap();
        assert_eq!(height_of_walk(&w), vec![0, 1, 1, 0]);
    }

    #[test]
    fn rejects_big_down_steps() {
        assert!(WalkPath::new(vec![0, -2]).is_err());
        assert!(WalkPath::new(vec![1, 0]).is_err());
        assert!(WalkPath::from_steps([3, -1, -1, -1, -1]).is_ok());
    }

    #[test]
    fn running_min_and_hitting() {
        let w = WalkPath::new(vec![0, -1, 0, 1, 0, -1, -2]).unwrap();
        assert_eq!(w.running_min(), vec![0, -1, -1, -1, -1, -1, -2]);
        assert_eq!(w.first_hitting(-2), Some(6));
        assert_eq!(w.min_between(2, 4), 0);
    }

    proptest::proptest! {
        #[test]
        fn height_matches_definition(steps in proptest::collection::vec(-1i64..3, 0..40)) {
            let w = WalkPath::from_steps(steps).unwrap();
            proptest::prop_assert_eq!(height_of_walk(&w), height_brute(w.values()));
        }
    }
}
