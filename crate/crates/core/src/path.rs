//! Finite paths on uniform grids and the deterministic transforms acting on
//! them: evaluation, interval minima, reversal, the `tilde` transform,
//! re-rooting of excursions and splitting at a time.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Relative slack, in grid units, for deciding that a time is a grid point.
const GRID_SLACK: f64 = 1e-9;

/// A continuous path `w: [0, ζ] → ℝ` stored as samples on a uniform grid and
/// evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePath {
    samples: Vec<f64>,
    step: f64,
}

impl FinitePath {
    pub fn new(samples: Vec<f64>, step: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidPath("a path needs at least one sample".into()));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidPath(format!("grid step must be positive, got {step}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("sample {i} is not finite")));
        }
        Ok(FinitePath { samples, step })
    }

    /// Single-sample path with lifetime zero.
    pub fn point(value: f64) -> Self {
        FinitePath { samples: alloc::vec![value], step: 1.0 }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn lifetime(&self) -> f64 {
        self.intervals() as f64 * self.step
    }

    pub fn start(&self) -> f64 {
        self.samples[0]
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let life = self.lifetime();
        let slack = crate::TOLERANCE * life.max(1.0);
        if !(t >= -slack && t <= life + slack) {
            return Err(Error::Domain(format!("time {t} outside [0, {life}]")));
        }
        Ok(t.clamp(0.0, life))
    }

    /// Index of the grid point at time `t`.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let t = self.check_time(t)?;
        let x = t / self.step;
        let r = libm::round(x);
        if libm::fabs(x - r) > GRID_SLACK * x.max(1.0) {
            return Err(Error::OffGrid { time: t, step: self.step });
        }
        Ok((r as usize).min(self.intervals()))
    }

    /// Time of the grid point with the given index.
    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    /// Value at time `t`, interpolating linearly between grid points.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.eval_clamped(t))
    }

    fn eval_clamped(&self, t: f64) -> f64 {
        let n = self.intervals();
        if n == 0 {
            return self.samples[0];
        }
        let x = t / self.step;
        let i = (libm::floor(x) as usize).min(n - 1);
        let frac = x - i as f64;
        if frac <= 0.0 {
            return self.samples[i];
        }
        if frac >= 1.0 {
            return self.samples[i + 1];
        }
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        a + frac * (b - a)
    }

    /// Minimum of the path over `[a, b]`.
    ///
    /// With linear interpolation the minimum is attained at a grid point
    /// inside the interval or at one of the two endpoints.
    pub fn range_min(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        let a = self.check_time(a)?;
        let b = self.check_time(b)?;
        let mut m = self.eval_clamped(a).min(self.eval_clamped(b));
        let (lo, hi) = self.interior_indices(a, b);
        for &v in &self.samples[lo..hi] {
            m = m.min(v);
        }
        Ok(m)
    }

    /// Half-open index range of grid points lying in `[a, b]`.
    pub(crate) fn interior_indices(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = libm::ceil(a / self.step) as usize;
        let hi = (libm::floor(b / self.step) as usize + 1).min(self.samples.len());
        (lo.min(hi), hi)
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integral of the interpolated path (trapezoid rule, exact for it).
    pub fn area(&self) -> f64 {
        let inner: f64 = self.samples.windows(2).map(|w| w[0] + w[1]).sum();
        0.5 * inner * self.step
    }

    /// Time reversal `t ↦ w(ζ − t)`.
    pub fn reverse(&self) -> FinitePath {
        let mut samples = self.samples.clone();
        samples.reverse();
        FinitePath { samples, step: self.step }
    }

    /// `w(0) + w(t) − 2·min_{[0,t]} w`.
    pub fn tilde(&self) -> FinitePath {
        let w0 = self.samples[0];
        let mut running = w0;
        let samples = self
            .samples
            .iter()
            .map(|&v| {
                running = running.min(v);
                (w0 - running) + (v - running)
            })
            .collect();
        FinitePath { samples, step: self.step }
    }

    /// Multiplies times by `time_factor` and values by `value_factor`.
    pub fn rescale(&self, time_factor: f64, value_factor: f64) -> Result<FinitePath> {
        FinitePath::new(
            self.samples.iter().map(|v| v * value_factor).collect(),
            self.step * time_factor,
        )
    }
}

/// The contour function `H` of a real tree: a nonnegative path on `[0, σ]`
/// vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourExcursion {
    path: FinitePath,
}

impl ContourExcursion {
    pub fn new(path: FinitePath) -> Result<Self> {
        if path.start() != 0.0 || path.end() != 0.0 {
            return Err(Error::InvalidPath("an excursion starts and ends at 0".into()));
        }
        if let Some(i) = path.samples().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidPath(format!("negative height at sample {i}")));
        }
        Ok(ContourExcursion { path })
    }

    pub fn from_samples(samples: Vec<f64>, step: f64) -> Result<Self> {
        Self::new(FinitePath::new(samples, step)?)
    }

    /// The excursion of a single point, `σ = 0`.
    pub fn degenerate() -> Self {
        ContourExcursion { path: FinitePath::point(0.0) }
    }

    pub fn path(&self) -> &FinitePath {
        &self.path
    }

    pub fn into_path(self) -> FinitePath {
        self.path
    }

    pub fn samples(&self) -> &[f64] {
        self.path.samples()
    }

    pub fn step(&self) -> f64 {
        self.path.step()
    }

    /// Duration `σ`.
    pub fn sigma(&self) -> f64 {
        self.path.lifetime()
    }

    pub fn height(&self, t: f64) -> Result<f64> {
        self.path.eval(t)
    }

    /// `d_H(s, t) = H_s + H_t − 2·min_{[s∧t, s∨t]} H`.
    pub fn tree_distance(&self, s: f64, t: f64) -> Result<f64> {
        let hs = self.path.eval(s)?;
        let ht = self.path.eval(t)?;
        let m = self.path.range_min(s.min(t), s.max(t))?;
        Ok((hs - m) + (ht - m))
    }

    /// Re-rooting at the grid time `s`: `H^[s]_t = d_H(s, s ⊕ t)` with `⊕`
    /// addition modulo `σ`.
    pub fn reroot(&self, s: f64) -> Result<ContourExcursion> {
        let k = self.path.grid_index(s)?;
        Ok(self.reroot_at(k))
    }

    /// Re-rooting at the grid point with index `k`. Panics if `k` is past
    /// the last grid point.
    pub fn reroot_at(&self, k: usize) -> ContourExcursion {
        let samples = reroot_samples(self.samples(), k);
        ContourExcursion { path: FinitePath { samples, step: self.step() } }
    }

    /// `H^{+,s}` on `[0, σ − s]` and `H^{−,s}` on `[0, s]`.
    pub fn split(&self, s: f64) -> Result<(FinitePath, FinitePath)> {
        let k = self.path.grid_index(s)?;
        let h = self.samples();
        let plus = h[k..].to_vec();
        let mut minus = h[..=k].to_vec();
        minus.reverse();
        Ok((
            FinitePath { samples: plus, step: self.step() },
            FinitePath { samples: minus, step: self.step() },
        ))
    }

    /// Time with the grid point `s ⊕ t`: `s + t` if it does not exceed `σ`,
    /// `s + t − σ` otherwise.
    pub fn shift_time(&self, s: f64, t: f64) -> f64 {
        let sigma = self.sigma();
        if s + t <= sigma {
            s + t
        } else {
            s + t - sigma
        }
    }
}

/// Re-rooting on raw samples. Shared by the floating and lattice versions so
/// that both follow the same arithmetic.
pub(crate) fn reroot_samples<T>(h: &[T], k: usize) -> Vec<T>
where
    T: Copy + PartialOrd + Add<Output = T> + Sub<Output = T>,
{
    let n = h.len() - 1;
    assert!(k <= n, "re-rooting index {k} past the end of a path with {n} intervals");
    let hk = h[k];
    let mut out = Vec::with_capacity(n + 1);
    let mut m = hk;
    for &v in &h[k..n] {
        if v < m {
            m = v;
        }
        out.push((hk - m) + (v - m));
    }
    // Wrapped part: minima over [u, k] for u = 0..=k, computed right to left.
    let mut back = Vec::with_capacity(k + 1);
    let mut m = hk;
    for &v in h[..=k].iter().rev() {
        if v < m {
            m = v;
        }
        back.push(m);
    }
    back.reverse();
    for (u, &v) in h[..=k].iter().enumerate() {
        let m = back[u];
        out.push((hk - m) + (v - m));
    }
    out
}

/// Integer heights on the unit grid, the carrier of Dyck paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePath {
    heights: Vec<i64>,
}

impl LatticePath {
    pub fn new(heights: Vec<i64>) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::InvalidPath("a lattice path needs at least one point".into()));
        }
        Ok(LatticePath { heights })
    }

    /// Builds a path from `true` = up, `false` = down steps starting at 0.
    pub fn from_steps(steps: &[bool]) -> Self {
        let mut h = 0i64;
        let mut heights = Vec::with_capacity(steps.len() + 1);
        heights.push(0);
        for &up in steps {
            h += if up { 1 } else { -1 };
            heights.push(h);
        }
        LatticePath { heights }
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_unit_steps(&self) -> bool {
        self.heights.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
    }

    /// ±1 steps, nonnegative and zero at both ends.
    pub fn is_dyck(&self) -> bool {
        self.has_unit_steps()
            && self.heights[0] == 0
            && self.heights[self.heights.len() - 1] == 0
            && self.heights.iter().all(|&h| h >= 0)
    }

    /// Integer re-rooting at index `k`; exact counterpart of
    /// [`ContourExcursion::reroot_at`].
    pub fn reroot(&self, k: usize) -> Result<LatticePath> {
        if k > self.len() {
            return Err(Error::Domain(format!("re-rooting index {k} past length {}", self.len())));
        }
        if self.heights[0] != 0 || self.heights[self.len()] != 0 || self.heights.iter().any(|&h| h < 0) {
            return Err(Error::InvalidPath("re-rooting needs an excursion".into()));
        }
        Ok(LatticePath { heights: reroot_samples(&self.heights, k) })
    }

    pub fn reverse(&self) -> LatticePath {
        let mut heights = self.heights.clone();
        heights.reverse();
        LatticePath { heights }
    }

    pub fn to_path(&self) -> FinitePath {
        FinitePath { samples: self.heights.iter().map(|&h| h as f64).collect(), step: 1.0 }
    }

    pub fn to_excursion(&self) -> Result<ContourExcursion> {
        ContourExcursion::new(self.to_path())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn path(v: &[f64]) -> FinitePath {
        FinitePath::new(v.to_vec(), 1.0).unwrap()
    }

    fn exc(v: &[f64]) -> ContourExcursion {
        ContourExcursion::new(path(v)).unwrap()
    }

    const H9: [f64; 9] = [0., 1., 2., 3., 2., 1., 2., 1., 0.];

    #[test]
    fn eval_examples() {
        let w = path(&[0., 1., 2., 1., 0.]);
        assert_eq!(w.eval(2.0).unwrap(), 2.0);
        assert_eq!(w.eval(0.5).unwrap(), 0.5);
        assert_eq!(path(&[2., 1., 2., 0., 1.]).eval(3.5).unwrap(), 0.5);
        assert!(matches!(w.eval(4.5), Err(Error::Domain(_))));
        assert!(matches!(w.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn range_min_examples() {
        let h = path(&H9);
        assert_eq!(h.range_min(2.0, 7.0).unwrap(), 1.0);
        assert_eq!(h.range_min(2.5, 2.5).unwrap(), h.eval(2.5).unwrap());
        assert_eq!(path(&[0., 1., 2., 1., 0.]).range_min(0.0, 4.0).unwrap(), 0.0);
        assert!(matches!(h.range_min(3.0, 2.0), Err(Error::Domain(_))));
        // Interval strictly inside one grid cell.
        assert_eq!(h.range_min(4.25, 4.75).unwrap(), 1.25);
    }

    #[test]
    fn tree_distance_examples() {
        let h = exc(&H9);
        assert_eq!(h.tree_distance(3.0, 6.0).unwrap(), 3.0);
        assert_eq!(h.tree_distance(5.5, 5.5).unwrap(), 0.0);
        assert_eq!(h.tree_distance(0.0, 3.0).unwrap(), 3.0);
        assert!(h.tree_distance(0.0, 9.0).is_err());
    }

    #[test]
    fn reroot_examples() {
        let h = exc(&H9);
        assert_eq!(h.reroot(6.0).unwrap().samples(), &[0., 1., 2., 1., 2., 3., 2., 1., 0.]);
        assert_eq!(h.reroot(0.0).unwrap(), h);
        let sym = exc(&[0., 1., 2., 1., 0.]);
        assert_eq!(sym.reroot(2.0).unwrap(), sym);
        assert!(matches!(h.reroot(2.5), Err(Error::OffGrid { .. })));
        assert!(matches!(h.reroot(9.0), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_excursion_is_fixed() {
        let d = ContourExcursion::degenerate();
        assert_eq!(d.sigma(), 0.0);
        assert_eq!(d.reroot(0.0).unwrap(), d);
        assert_eq!(d.path().reverse(), *d.path());
        assert_eq!(d.path().tilde(), *d.path());
        let (p, m) = d.split(0.0).unwrap();
        assert_eq!((p.samples(), m.samples()), (&[0.0][..], &[0.0][..]));
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(path(&[2., 1., 2., 0., 1.]).reverse().samples(), &[1., 0., 2., 1., 2.]);
        assert_eq!(path(&[3., 3., 3.]).reverse(), path(&[3., 3., 3.]));
        assert_eq!(path(&[0., 1., 0.]).reverse(), path(&[0., 1., 0.]));
    }

    #[test]
    fn tilde_examples() {
        let w = path(&[2., 1., 2., 0., 1.]);
        let t = w.tilde();
        assert_eq!(t.samples(), &[0., 1., 2., 2., 3.]);
        assert_eq!(t.end(), w.start() + w.end() - 2.0 * w.min());
        assert_eq!(path(&[0., 1., 2.]).tilde().samples(), &[0., 1., 2.]);
        assert_eq!(path(&[1., 0.]).tilde().samples(), &[0., 1.]);
    }

    #[test]
    fn split_examples() {
        let h = exc(&[0., 1., 2., 1., 0.]);
        let (p, m) = h.split(2.0).unwrap();
        assert_eq!(p.samples(), &[2., 1., 0.]);
        assert_eq!(m.samples(), &[2., 1., 0.]);
        assert_eq!(p.lifetime(), 2.0);
        let (p, m) = h.split(0.0).unwrap();
        assert_eq!(p, *h.path());
        assert_eq!(m.samples(), &[0.]);
        let (p, m) = h.split(4.0).unwrap();
        assert_eq!(p.samples(), &[0.]);
        assert_eq!(m, h.path().reverse());
    }

    #[test]
    fn dyck_recognition() {
        assert!(LatticePath::new(vec![0, 1, 2, 1, 0]).unwrap().is_dyck());
        assert!(!LatticePath::new(vec![0, 1, 0, -1, 0]).unwrap().is_dyck());
        assert!(!LatticePath::new(vec![0, 2, 0]).unwrap().is_dyck());
    }

    #[test]
    fn lattice_and_float_reroot_agree() {
        let l = LatticePath::new(vec![0, 1, 2, 3, 2, 1, 2, 1, 0]).unwrap();
        for k in 0..=8 {
            let a = l.reroot(k).unwrap().to_path();
            let b = exc(&H9).reroot_at(k).into_path();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn excursion_validation() {
        assert!(ContourExcursion::new(path(&[0., 1., 1.])).is_err());
        assert!(ContourExcursion::new(path(&[0., -1., 0.])).is_err());
        assert!(FinitePath::new(vec![], 1.0).is_err());
        assert!(FinitePath::new(vec![0.0], 0.0).is_err());
    }
}
