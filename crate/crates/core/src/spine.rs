//! Finite measures with support `[0, S]`, their truncation and reversal,
//! spine paths `H^μ_t = S(k_{−I_t} μ) + H_t` and their laws `Q_μ`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::generators::{height_of_walk, WalkPath};
use crate::path::FinitePath;

/// Default step budget of [`sample_q`] and [`sample_q_reflected`].
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// Constant density `rate` on `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSegment {
    pub from: f64,
    pub to: f64,
    pub rate: f64,
}

/// Point mass `mass` at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub at: f64,
    pub mass: f64,
}

/// A finite measure on `[0, ∞)` with support exactly `[0, S]`: a positive
/// piecewise constant density covering `[0, S]` plus finitely many atoms.
/// The zero measure has no parts and `S = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    drift: Vec<DriftSegment>,
    atoms: Vec<Atom>,
    total: f64,
}

impl FiniteMeasure {
    /// Segments must be contiguous from 0 with positive rates. Atoms must lie
    /// in `[0, S]`; when there is no drift, `S = 0` and atoms sit at 0.
    pub fn new(drift: Vec<DriftSegment>, mut atoms: Vec<Atom>) -> Result<Self> {
        let mut end = 0.0;
        for (i, seg) in drift.iter().enumerate() {
            if seg.from != end {
                return Err(Error::InvalidMeasure(format!(
                    "drift segment {i} starts at {} but the previous one ends at {end}",
                    seg.from
                )));
            }
            if !(seg.to > seg.from && seg.to.is_finite()) {
                return Err(Error::InvalidMeasure(format!("drift segment {i} is empty or unbounded")));
            }
            if !(seg.rate > 0.0 && seg.rate.is_finite()) {
                return Err(Error::InvalidMeasure(format!("drift segment {i} has nonpositive rate {}", seg.rate)));
            }
            end = seg.to;
        }
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom at {} has nonpositive mass {}", a.at, a.mass)));
            }
            if !(a.at >= 0.0 && a.at <= end) {
                return Err(Error::InvalidMeasure(format!("atom at {} lies outside [0, {end}]", a.at)));
            }
        }
        atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
        let total = drift.iter().map(|s| s.rate * (s.to - s.from)).sum::<f64>() + atoms.iter().map(|a| a.mass).sum::<f64>();
        Ok(FiniteMeasure { drift, atoms, total })
    }

    pub fn zero() -> Self {
        FiniteMeasure { drift: Vec::new(), atoms: Vec::new(), total: 0.0 }
    }

    /// Lebesgue measure on `[0, a]`.
    pub fn lebesgue(a: f64) -> Result<Self> {
        if a == 0.0 {
            return Ok(Self::zero());
        }
        Self::new(alloc::vec![DriftSegment { from: 0.0, to: a, rate: 1.0 }], Vec::new())
    }

    pub fn drift(&self) -> &[DriftSegment] {
        &self.drift
    }

    /// Atoms sorted by position.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `|μ|`.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// `S(μ)`, with `S(0) = 0`.
    pub fn sup_support(&self) -> f64 {
        self.drift.last().map_or(0.0, |s| s.to)
    }

    pub fn is_zero(&self) -> bool {
        self.drift.is_empty() && self.atoms.is_empty()
    }

    /// `F(x) = μ([0, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(x, true)
    }

    /// `F(x−) = μ([0, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf_with(x, false)
    }

    fn cdf_with(&self, x: f64, closed: bool) -> f64 {
        let mut acc = 0.0;
        for seg in &self.drift {
            if x <= seg.from {
                break;
            }
            acc += seg.rate * (x.min(seg.to) - seg.from);
        }
        for a in &self.atoms {
            if a.at < x || (closed && a.at == x) {
                acc += a.mass;
            }
        }
        acc
    }

    /// `inf{x ≥ 0 : F(x) ≥ level}`.
    pub fn quantile(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut pos = 0.0;
        let mut next_atom = 0;
        for seg in &self.drift {
            while next_atom < self.atoms.len() && self.atoms[next_atom].at < seg.to {
                let a = self.atoms[next_atom];
                let gained = seg.rate * (a.at - pos);
                if acc + gained >= level {
                    return pos + (level - acc) / seg.rate;
                }
                acc += gained + a.mass;
                pos = a.at;
                next_atom += 1;
                if acc >= level {
                    return pos;
                }
            }
            let gained = seg.rate * (seg.to - pos);
            if acc + gained >= level {
                return pos + (level - acc) / seg.rate;
            }
            acc += gained;
            pos = seg.to;
        }
        pos
    }

    /// `k_r μ`: the element of the class with CDF `F ∧ (|μ| − r)`. An atom
    /// straddling the cap keeps the part of its mass below it.
    pub fn truncate(&self, r: f64) -> Result<FiniteMeasure> {
        let slack = 1e-12 * self.total.max(1.0);
        if !(r >= 0.0 && r <= self.total + slack) {
            return Err(Error::Domain(format!("cannot remove mass {r} from a measure of mass {}", self.total)));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        let cap = self.total - r;
        if cap <= 0.0 {
            return Ok(Self::zero());
        }
        let top = self.quantile(cap);
        let drift: Vec<DriftSegment> = self
            .drift
            .iter()
            .filter(|s| s.from < top)
            .map(|s| DriftSegment { to: s.to.min(top), ..*s })
            .collect();
        let mut atoms: Vec<Atom> = self.atoms.iter().filter(|a| a.at < top).copied().collect();
        if self.atoms.iter().any(|a| a.at == top) {
            let rest = cap - self.cdf_left(top);
            if rest > 0.0 {
                atoms.push(Atom { at: top, mass: rest });
            }
        }
        let total = drift.iter().map(|s| s.rate * (s.to - s.from)).sum::<f64>() + atoms.iter().map(|a| a.mass).sum::<f64>();
        Ok(FiniteMeasure { drift, atoms, total })
    }

    /// `S(k_r μ)`.
    pub fn truncated_sup(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.sup_support();
        }
        self.quantile(self.total - r)
    }

    /// `μ̄`, the image of `μ` under `x ↦ S(μ) − x`.
    pub fn reverse(&self) -> FiniteMeasure {
        let s = self.sup_support();
        let drift = self.drift.iter().rev().map(|seg| DriftSegment { from: s - seg.to, to: s - seg.from, rate: seg.rate }).collect();
        let atoms = self.atoms.iter().rev().map(|a| Atom { at: s - a.at, mass: a.mass }).collect();
        FiniteMeasure { drift, atoms, total: self.total }
    }
}

/// Checks `S(μ) − S(k_{|μ|−r} μ) = S(k_r μ̄)` within `1e-12`.
pub fn elementary_fact_check(mu: &FiniteMeasure, r: f64) -> Result<bool> {
    if !(r >= 0.0 && r <= mu.total_mass()) {
        return Err(Error::Domain(format!("mass {r} outside [0, {}]", mu.total_mass())));
    }
    let lhs = mu.sup_support() - mu.truncated_sup(mu.total_mass() - r);
    let rhs = mu.reverse().truncated_sup(r);
    Ok((lhs - rhs).abs() <= crate::TOLERANCE)
}

/// For `ψ(λ) = λ²` the pair of subordinators is deterministic with unit
/// drift, so the two measures are both Lebesgue on `[0, a]`.
pub fn brownian_bismut_pair(a: f64) -> Result<(FiniteMeasure, FiniteMeasure)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("spine height must be positive, got {a}")));
    }
    let leb = FiniteMeasure::lebesgue(a)?;
    Ok((leb.clone(), leb))
}

/// How the height part `H_t` of a spine path is read off the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpineHeight {
    /// `δ·#{s < t : X_s ≤ min(X_{s+1..t})}`, run until `T_{|μ|}`.
    WeakRecords,
    /// `2δ·(X_t − I_t)`, run until the last visit of `−|μ|` before
    /// `T_{|μ|+δ}`.
    Reflected,
}

/// `H^μ` computed from a walk in units of `δ`, with the walk, the height
/// part and the measure kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinePath {
    path: FinitePath,
    walk: WalkPath,
    heights: Vec<f64>,
    measure: FiniteMeasure,
    delta: f64,
    rule: SpineHeight,
}

fn mass_units(mu: &FiniteMeasure, delta: f64) -> Result<i64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("mass unit must be positive, got {delta}")));
    }
    let units = mu.total_mass() / delta;
    let rounded = libm::round(units);
    if (units - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Input(format!("mass {} is not a multiple of {delta}", mu.total_mass())));
    }
    Ok(rounded as i64)
}

/// `H^μ_t = S(k_{−δ I_t} μ) + δ H_t` over `[0, T_{|μ|}]`, on a time grid of
/// step `δ²`. The walk is cut at its first visit of `−|μ|/δ`.
pub fn spine_path(mu: &FiniteMeasure, walk: &WalkPath, delta: f64) -> Result<SpinePath> {
    let m = mass_units(mu, delta)?;
    let hit = walk
        .first_hitting(-m)
        .ok_or_else(|| Error::Input(format!("walk never reaches -{m}")))?;
    let walk = walk.truncated(hit);
    let heights: Vec<f64> = height_of_walk(&walk).into_iter().map(|h| h as f64 * delta).collect();
    build(mu, walk, heights, delta, SpineHeight::WeakRecords)
}

/// Spine path with height part `2δ(X − I)`, over the walk cut at the last
/// visit of `−|μ|/δ` before its first visit of `−|μ|/δ − 1`.
pub fn spine_path_reflected(mu: &FiniteMeasure, walk: &WalkPath, delta: f64) -> Result<SpinePath> {
    let m = mass_units(mu, delta)?;
    let hit = walk
        .first_hitting(-m - 1)
        .ok_or_else(|| Error::Input(format!("walk never reaches -{}", m + 1)))?;
    let walk = walk.truncated(hit - 1);
    let heights: Vec<f64> = walk
        .values()
        .iter()
        .zip(walk.running_min())
        .map(|(&x, i)| 2.0 * delta * (x - i) as f64)
        .collect();
    build(mu, walk, heights, delta, SpineHeight::Reflected)
}

fn build(mu: &FiniteMeasure, walk: WalkPath, heights: Vec<f64>, delta: f64, rule: SpineHeight) -> Result<SpinePath> {
    let samples = walk
        .running_min()
        .into_iter()
        .zip(&heights)
        .map(|(i, &h)| mu.truncated_sup(-(i as f64) * delta) + h)
        .collect();
    let path = FinitePath::new(samples, delta * delta)?;
    Ok(SpinePath { path, walk, heights, measure: mu.clone(), delta, rule })
}

impl SpinePath {
    pub fn path(&self) -> &FinitePath {
        &self.path
    }

    pub fn into_path(self) -> FinitePath {
        self.path
    }

    pub fn walk(&self) -> &WalkPath {
        &self.walk
    }

    /// The height part `H_t`, already multiplied by the mass unit.
    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn measure(&self) -> &FiniteMeasure {
        &self.measure
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rule(&self) -> SpineHeight {
        self.rule
    }

    /// Mass removed by time `t`, `−δ I_t`.
    fn removed(&self) -> Vec<f64> {
        self.walk.running_min().into_iter().map(|i| -(i as f64) * self.delta).collect()
    }

    /// `min_{[0,t]} H^μ = S(k_{−I_t} μ)` at every grid time, up to `tol`.
    pub fn running_min_identity(&self, tol: f64) -> bool {
        let mut running = f64::INFINITY;
        self.path.samples().iter().zip(self.removed()).all(|(&w, r)| {
            running = running.min(w);
            (running - self.measure.truncated_sup(r)).abs() <= tol
        })
    }

    /// `S(μ) + H_t − S(k_{|μ|+I_t} μ) = H_t + S(k_{−I_t} μ̄)` at every grid
    /// time, up to `tol`.
    pub fn reversal_identity(&self, tol: f64) -> bool {
        let mu = &self.measure;
        let rev = mu.reverse();
        let s = mu.sup_support();
        self.heights.iter().zip(self.removed()).all(|(&h, r)| {
            let lhs = s + h - mu.truncated_sup(mu.total_mass() - r);
            let rhs = h + rev.truncated_sup(r);
            (lhs - rhs).abs() <= tol
        })
    }
}

/// Fair ±1 walk run until it first equals `target < 0`.
fn fair_walk_until<R: Rng + ?Sized>(target: i64, budget: u64, rng: &mut R) -> Result<WalkPath> {
    let mut values = alloc::vec![0i64];
    let mut x = 0i64;
    let mut steps = 0u64;
    while x != target {
        let mut bits = rng.next_u64();
        for _ in 0..64 {
            if steps == budget {
                return Err(Error::BudgetExceeded { what: "spine walk", budget });
            }
            x += if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
            steps += 1;
            values.push(x);
            if x == target {
                break;
            }
        }
    }
    WalkPath::new(values)
}

/// A sample of `Q_μ`: a fair ±1 walk run until `−|μ|/δ`, read through
/// [`spine_path`]. Fails with a retryable error after `budget` steps.
pub fn sample_q<R: RngCore + ?Sized>(mu: &FiniteMeasure, delta: f64, budget: u64, rng: &mut R) -> Result<SpinePath> {
    let m = mass_units(mu, delta)?;
    let walk = if m == 0 { WalkPath::new(alloc::vec![0])? } else { fair_walk_until(-m, budget, rng)? };
    spine_path(mu, &walk, delta)
}

/// A sample of `Q_μ` read through [`spine_path_reflected`].
pub fn sample_q_reflected<R: RngCore + ?Sized>(mu: &FiniteMeasure, delta: f64, budget: u64, rng: &mut R) -> Result<SpinePath> {
    let m = mass_units(mu, delta)?;
    let walk = fair_walk_until(-m - 1, budget, rng)?;
    spine_path_reflected(mu, &walk, delta)
}

/// Dispatches on the height rule.
pub fn sample_q_with<R: RngCore + ?Sized>(
    rule: SpineHeight,
    mu: &FiniteMeasure,
    delta: f64,
    budget: u64,
    rng: &mut R,
) -> Result<SpinePath> {
    match rule {
        SpineHeight::WeakRecords => sample_q(mu, delta, budget, rng),
        SpineHeight::Reflected => sample_q_reflected(mu, delta, budget, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use alloc::vec;
    use proptest::prelude::*;

    fn example() -> FiniteMeasure {
        FiniteMeasure::new(vec![DriftSegment { from: 0.0, to: 2.0, rate: 1.0 }], vec![Atom { at: 0.5, mass: 3.0 }]).unwrap()
    }

    #[test]
    fn masses_and_supports() {
        let leb = FiniteMeasure::lebesgue(1.5).unwrap();
        assert_eq!((leb.total_mass(), leb.sup_support()), (1.5, 1.5));
        let mu = example();
        assert_eq!((mu.total_mass(), mu.sup_support()), (5.0, 2.0));
        let z = FiniteMeasure::zero();
        assert_eq!((z.total_mass(), z.sup_support()), (0.0, 0.0));
    }

    #[test]
    fn validation() {
        let seg = |from, to, rate| DriftSegment { from, to, rate };
        assert!(FiniteMeasure::new(vec![seg(0.5, 1.0, 1.0)], vec![]).is_err());
        assert!(FiniteMeasure::new(vec![seg(0.0, 1.0, 1.0), seg(1.5, 2.0, 1.0)], vec![]).is_err());
        assert!(FiniteMeasure::new(vec![seg(0.0, 1.0, 0.0)], vec![]).is_err());
        assert!(FiniteMeasure::new(vec![seg(0.0, 1.0, 1.0)], vec![Atom { at: 1.5, mass: 1.0 }]).is_err());
        assert!(FiniteMeasure::new(vec![], vec![Atom { at: 0.2, mass: 1.0 }]).is_err());
        assert!(FiniteMeasure::new(vec![], vec![Atom { at: 0.0, mass: 1.0 }]).is_ok());
        assert!(FiniteMeasure::new(vec![seg(0.0, 1.0, 1.0)], vec![Atom { at: 0.5, mass: -1.0 }]).is_err());
    }

    #[test]
    fn cdf_and_quantile() {
        let mu = example();
        assert_eq!(mu.cdf(0.25), 0.25);
        assert_eq!(mu.cdf_left(0.5), 0.5);
        assert_eq!(mu.cdf(0.5), 3.5);
        assert_eq!(mu.cdf(2.0), 5.0);
        assert_eq!(mu.quantile(0.25), 0.25);
        assert_eq!(mu.quantile(1.0), 0.5);
        assert_eq!(mu.quantile(3.5), 0.5);
        assert_eq!(mu.quantile(4.0), 1.0);
        assert_eq!(mu.quantile(5.0), 2.0);
        assert_eq!(mu.quantile(0.0), 0.0);
    }

    #[test]
    fn truncation_examples() {
        let leb = FiniteMeasure::lebesgue(3.0).unwrap();
        assert_eq!(leb.truncate(1.0).unwrap(), FiniteMeasure::lebesgue(2.0).unwrap());
        let mu = example();
        let k = mu.truncate(4.0).unwrap();
        let expected =
            FiniteMeasure::new(vec![DriftSegment { from: 0.0, to: 0.5, rate: 1.0 }], vec![Atom { at: 0.5, mass: 0.5 }]).unwrap();
        assert_eq!(k, expected);
        assert_eq!(k.sup_support(), 0.5);
        assert_eq!(k.total_mass(), 1.0);
        assert_eq!(mu.truncate(0.0).unwrap(), mu);
        assert!(mu.truncate(5.0).unwrap().is_zero());
        assert!(mu.truncate(6.0).is_err());
        assert!(mu.truncate(-1.0).is_err());
        // Cap landing exactly below the atom drops it.
        let k = mu.truncate(4.5).unwrap();
        assert!(k.atoms().is_empty());
        assert_eq!(k.sup_support(), 0.5);
    }

    #[test]
    fn reversal_examples() {
        let leb = FiniteMeasure::lebesgue(2.0).unwrap();
        assert_eq!(leb.reverse(), leb);
        let mu = example();
        let expected =
            FiniteMeasure::new(vec![DriftSegment { from: 0.0, to: 2.0, rate: 1.0 }], vec![Atom { at: 1.5, mass: 3.0 }]).unwrap();
        assert_eq!(mu.reverse(), expected);
        assert_eq!(mu.reverse().reverse(), mu);
    }

    #[test]
    fn elementary_fact_examples() {
        let mu = example();
        assert_eq!(mu.sup_support() - mu.truncated_sup(4.0), 1.5);
        assert_eq!(mu.reverse().truncated_sup(1.0), 1.5);
        assert!(elementary_fact_check(&mu, 1.0).unwrap());
        let leb = FiniteMeasure::lebesgue(2.5).unwrap();
        for r in [0.0, 0.5, 1.25, 2.5] {
            assert!(elementary_fact_check(&leb, r).unwrap());
        }
        assert!(elementary_fact_check(&mu, 0.0).unwrap());
        assert!(elementary_fact_check(&mu, 5.0).unwrap());
        assert!(elementary_fact_check(&mu, 7.0).is_err());
    }

    #[test]
    fn bismut_pair() {
        let (mu, nu) = brownian_bismut_pair(1.0).unwrap();
        assert_eq!(mu, FiniteMeasure::lebesgue(1.0).unwrap());
        assert_eq!(mu, nu);
        let (mu, nu) = brownian_bismut_pair(2.5).unwrap();
        assert_eq!((mu.sup_support(), nu.sup_support()), (2.5, 2.5));
        assert_eq!((mu.total_mass(), nu.total_mass()), (2.5, 2.5));
        assert!(brownian_bismut_pair(0.0).is_err());
    }

    #[test]
    fn spine_path_examples() {
        let mu = FiniteMeasure::lebesgue(2.0).unwrap();
        let walk = WalkPath::new(vec![0, -1, 0, 1, 0, -1, -2]).unwrap();
        let sp = spine_path(&mu, &walk, 1.0).unwrap();
        assert_eq!(sp.path().samples(), &[2.0, 1.0, 2.0, 3.0, 3.0, 2.0, 0.0]);
        let mut running = f64::INFINITY;
        let mins: Vec<f64> = sp
            .path()
            .samples()
            .iter()
            .map(|&w| {
                running = running.min(w);
                running
            })
            .collect();
        assert_eq!(mins, vec![2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(sp.running_min_identity(0.0));
        assert!(sp.reversal_identity(0.0));

        let leb1 = FiniteMeasure::lebesgue(1.0).unwrap();
        let sp = spine_path(&leb1, &WalkPath::new(vec![0, -1]).unwrap(), 1.0).unwrap();
        assert_eq!(sp.path().samples(), &[1.0, 0.0]);

        assert!(matches!(spine_path(&mu, &WalkPath::new(vec![0, -1]).unwrap(), 1.0), Err(Error::Input(_))));
        assert!(matches!(spine_path(&mu, &walk, 0.3), Err(Error::Input(_))));
    }

    #[test]
    fn spine_path_cuts_at_first_hit() {
        let mu = FiniteMeasure::lebesgue(1.0).unwrap();
        let walk = WalkPath::new(vec![0, -1, 0, -1, -2]).unwrap();
        assert_eq!(spine_path(&mu, &walk, 1.0).unwrap().path().samples(), &[1.0, 0.0]);
    }

    #[test]
    fn reflected_spine_example() {
        let mu = FiniteMeasure::lebesgue(1.0).unwrap();
        let walk = WalkPath::new(vec![0, 1, 0, -1, 0, -1, -2]).unwrap();
        let sp = spine_path_reflected(&mu, &walk, 1.0).unwrap();
        // X − I = (0,1,0,0,1,0), removed mass (0,0,0,1,1,1).
        assert_eq!(sp.path().samples(), &[1.0, 3.0, 1.0, 0.0, 2.0, 0.0]);
        assert!(sp.running_min_identity(0.0));
        assert!(sp.reversal_identity(0.0));
    }

    #[test]
    fn sampled_endpoints() {
        let mu = example();
        for seed in 0..50 {
            for rule in [SpineHeight::WeakRecords, SpineHeight::Reflected] {
                let sp = sample_q_with(rule, &mu, 0.25, DEFAULT_STEP_BUDGET, &mut substream(seed, 3));
                let Ok(sp) = sp else { continue };
                assert_eq!(sp.path().start(), 2.0);
                assert_eq!(sp.path().end(), 0.0);
                assert!(sp.running_min_identity(0.0));
                assert!(sp.reversal_identity(0.0));
            }
        }
        let leb = FiniteMeasure::lebesgue(1.0).unwrap();
        let sp = sample_q(&leb, 1.0, DEFAULT_STEP_BUDGET, &mut substream(1, 1)).unwrap();
        assert_eq!(sp.path().samples()[0], 1.0);
    }

    #[test]
    fn budget_is_retryable() {
        let mu = FiniteMeasure::lebesgue(8.0).unwrap();
        let err = sample_q(&mu, 1.0, 3, &mut substream(0, 0)).unwrap_err();
        assert!(err.is_retryable());
    }

    #[test]
    fn completion_rate_small_masses() {
        // P(T_8 > 10^7) ≈ 8·sqrt(2 / (π·10^7)) ≈ 0.2%; checked on 200 walks
        // with a reduced budget of 10^5 where the rate is still about 2%.
        let mu = FiniteMeasure::lebesgue(8.0).unwrap();
        let done = (0..200).filter(|&i| sample_q(&mu, 1.0, 100_000, &mut substream(11, i)).is_ok()).count();
        assert!(done >= 190, "{done}");
    }

    fn arb_measure() -> impl Strategy<Value = FiniteMeasure> {
        let seg = (1u32..5, prop::sample::select(vec![0.5f64, 1.0, 2.0, 4.0]));
        (prop::collection::vec(seg, 1..4), prop::collection::vec((0u32..100, 1u32..4), 0..3)).prop_map(|(segs, atoms)| {
            let mut end = 0.0;
            let drift: Vec<DriftSegment> = segs
                .into_iter()
                .map(|(len, rate)| {
                    // Half rates get even lengths so every total mass is an integer.
                    let from = end;
                    end += if rate == 0.5 { 2.0 * len as f64 } else { len as f64 };
                    DriftSegment { from, to: end, rate }
                })
                .collect();
            let atoms = atoms
                .into_iter()
                .map(|(pos, mass)| Atom { at: (pos as f64 / 100.0 * end * 4.0).floor() / 4.0, mass: mass as f64 })
                .collect();
            FiniteMeasure::new(drift, atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn truncation_masses(mu in arb_measure(), frac in 0.0f64..1.0) {
            let r = (frac * mu.total_mass() * 8.0).floor() / 8.0;
            let k = mu.truncate(r).unwrap();
            prop_assert_eq!(k.total_mass(), mu.total_mass() - r);
            prop_assert_eq!(k.sup_support(), mu.truncated_sup(r));
            prop_assert!(k.sup_support() <= mu.sup_support());
        }

        #[test]
        fn truncation_is_monotone(mu in arb_measure(), a in 0.0f64..1.0, b in 0.0f64..1.0, x in 0.0f64..1.0) {
            let (r1, r2) = (a.min(b) * mu.total_mass(), a.max(b) * mu.total_mass());
            let x = x * mu.sup_support();
            prop_assert!(mu.truncate(r2).unwrap().cdf(x) <= mu.truncate(r1).unwrap().cdf(x) + 1e-12);
        }

        #[test]
        fn truncations_compose(mu in arb_measure(), a in 0u32..8, b in 0u32..8) {
            let unit = mu.total_mass() / 16.0;
            let (r1, r2) = (a as f64 * unit, b as f64 * unit);
            prop_assert_eq!(mu.truncate(r1).unwrap().truncate(r2).unwrap(), mu.truncate(r1 + r2).unwrap());
        }

        #[test]
        fn reversal_involution(mu in arb_measure()) {
            let r = mu.reverse();
            prop_assert_eq!(r.total_mass(), mu.total_mass());
            prop_assert_eq!(r.sup_support(), mu.sup_support());
            prop_assert_eq!(r.reverse(), mu);
        }

        #[test]
        fn elementary_fact(mu in arb_measure(), frac in 0.0f64..=1.0) {
            prop_assert!(elementary_fact_check(&mu, frac * mu.total_mass()).unwrap());
        }

        #[test]
        fn spine_identities(mu in arb_measure(), steps in prop::collection::vec(-1i64..3, 0..80)) {
            let m = mu.total_mass() as i64;
            let mut walk: Vec<i64> = vec![0];
            for s in steps {
                walk.push(walk.last().unwrap() + s);
            }
            let low = *walk.iter().min().unwrap();
            let mut x = *walk.last().unwrap();
            while x > low.min(0) - m {
                x -= 1;
                walk.push(x);
            }
            let walk = WalkPath::new(walk).unwrap();
            let sp = spine_path(&mu, &walk, 1.0).unwrap();
            prop_assert_eq!(sp.path().start(), mu.sup_support());
            prop_assert_eq!(sp.path().end(), 0.0);
            prop_assert!(sp.running_min_identity(0.0));
            prop_assert!(sp.reversal_identity(0.0));
        }
    }
}
