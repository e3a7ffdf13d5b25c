use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::path::ContourExcursion;

/// Normalized Brownian excursion on `[0, 1]` with `n` grid intervals.
///
/// A Brownian bridge is built from cumulative Gaussian increments through
/// `b(t) = w(t) − t·w(1)` and rotated at its first grid argmin (Vervaat).
pub fn brownian_excursion<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ContourExcursion> {
    if n < 2 {
        return Err(Error::Input("a Brownian excursion needs at least 2 intervals".into()));
    }
    let sd = libm::sqrt(1.0 / n as f64);
    let mut walk = Vec::with_capacity(n + 1);
    let mut w = 0.0;
    walk.push(0.0);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        walk.push(w);
    }
    let end = walk[n];
    for (k, v) in walk.iter_mut().enumerate() {
        *v -= (k as f64 / n as f64) * end;
    }
    walk[n] = 0.0;
    bridge_to_excursion(&walk, 1.0 / n as f64)
}

/// Vervaat rotation of bridge samples (`b[0] = b[n]`) at the earliest grid
/// argmin.
pub fn bridge_to_excursion(bridge: &[f64], step: f64) -> Result<ContourExcursion> {
    let n = bridge.len() - 1;
    let (argmin, &low) = bridge[..n]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Input("empty bridge".into()))?;
    let samples = (0..=n).map(|j| bridge[(argmin + j) % n] - low).collect();
    ContourExcursion::from_samples(samples, step)
}
