//! Sparse-table range minimum over `f64` samples.

use alloc::vec::Vec;

/// Tabulates minima over all ranges `[i, i + 2^k)`, giving O(1) queries
/// after O(n log n) setup. Query results are exact: every answer is one of
/// the stored samples.
#[derive(Debug, Clone)]
pub struct SparseMin {
    levels: Vec<Vec<f64>>,
}

impl SparseMin {
    pub fn new(values: &[f64]) -> Self {
        let mut levels = Vec::new();
        levels.push(values.to_vec());
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = &levels[levels.len() - 1];
            let next: Vec<f64> = (0..=values.len() - 2 * width)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        SparseMin { levels }
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].is_empty()
    }

    /// Minimum over the inclusive index range `[lo, hi]`.
    ///
    /// Panics if `lo > hi` or `hi` is out of bounds.
    pub fn query(&self, lo: usize, hi: usize) -> f64 {
        assert!(lo <= hi && hi < self.len(), "bad range [{lo}, {hi}]");
        let span = hi - lo + 1;
        let k = (usize::BITS - 1 - span.leading_zeros()) as usize;
        let row = &self.levels[k];
        row[lo].min(row[hi + 1 - (1 << k)])
    }
}
