//! Exhaustive checks over Dyck paths: re-rooting as a bijection, time
//! reversal, and the rational re-rooting identity for GW(geometric 1/2)
//! trees weighted by their size.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::functional::FunctionalSpec;
use crate::generators::{catalan, enumerate_dyck, srw_excursion_tree_weight};
use crate::path::LatticePath;

/// Counts from an exhaustive re-rooting check at one half-length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RerootBijection {
    pub half_length: usize,
    pub paths: usize,
    pub checks: usize,
    /// Outputs that were not Dyck paths of length `2n`.
    pub not_dyck: usize,
    /// Pairs with `(H^[s])^[2n−s] ≠ H`.
    pub involution_failures: usize,
    /// Shifts `s` whose image set is smaller than `Catalan(n)`.
    pub non_bijective_shifts: usize,
}

impl RerootBijection {
    pub fn pass(&self) -> bool {
        self.not_dyck == 0 && self.involution_failures == 0 && self.non_bijective_shifts == 0
    }
}

/// For every Dyck path of length `2n` and every `s ∈ {0, …, 2n}`: `H^[s]` is
/// a Dyck path of length `2n`, `(H^[s])^[2n−s] = H`, and for each `s` the
/// images are pairwise distinct.
pub fn verify_reroot_bijection(n: usize) -> Result<RerootBijection> {
    let paths: Vec<LatticePath> = enumerate_dyck(n)?.collect();
    let len = 2 * n;
    let mut out = RerootBijection {
        half_length: n,
        paths: paths.len(),
        checks: 0,
        not_dyck: 0,
        involution_failures: 0,
        non_bijective_shifts: 0,
    };
    for s in 0..=len {
        let mut images = BTreeSet::new();
        for h in &paths {
            out.checks += 1;
            let r = h.reroot(s)?;
            if !(r.is_dyck() && r.len() == len) {
                out.not_dyck += 1;
            }
            if r.reroot(len - s)? != *h {
                out.involution_failures += 1;
            }
            images.insert(r);
        }
        if images.len() as u64 != catalan(n) {
            out.non_bijective_shifts += 1;
        }
    }
    Ok(out)
}

/// Whether reversal `t ↦ 2n − t` maps the Dyck paths of length `2n` onto
/// themselves bijectively.
pub fn verify_time_reversal_exact(n: usize) -> Result<bool> {
    let paths: BTreeSet<LatticePath> = enumerate_dyck(n)?.collect();
    let images: BTreeSet<LatticePath> = paths.iter().map(LatticePath::reverse).collect();
    Ok(images.len() == paths.len() && images == paths)
}

/// Factor multiplying the path functional in `F(s, w) = a(s)·φ(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeWeight {
    One,
    /// `a(s) = s`.
    Linear,
    /// `a(s) = 1{s < σ/2}`.
    FirstHalf,
}

impl TimeWeight {
    fn at(self, s: usize, sigma: usize) -> Ratio<i128> {
        match self {
            TimeWeight::One => Ratio::one(),
            TimeWeight::Linear => Ratio::from_integer(s as i128),
            TimeWeight::FirstHalf if 2 * s < sigma => Ratio::one(),
            TimeWeight::FirstHalf => Ratio::zero(),
        }
    }
}

impl fmt::Display for TimeWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeWeight::One => "1",
            TimeWeight::Linear => "s",
            TimeWeight::FirstHalf => "1{s<sigma/2}",
        })
    }
}

/// `F(s, w) = a(s)·φ(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftFunctional {
    pub time: TimeWeight,
    pub path: FunctionalSpec,
}

impl ShiftFunctional {
    pub fn new(time: TimeWeight, path: FunctionalSpec) -> Self {
        ShiftFunctional { time, path }
    }

    pub fn name(&self) -> String {
        match self.time {
            TimeWeight::One => format!("{}", self.path),
            t => format!("{t}*{}", self.path),
        }
    }
}

/// Weight `g(σ)` on the duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SigmaWeight {
    One,
    /// `1{σ = value}`.
    Indicator(usize),
    /// `g(σ) = σ`.
    Identity,
}

impl SigmaWeight {
    fn at(self, sigma: usize) -> Ratio<i128> {
        match self {
            SigmaWeight::One => Ratio::one(),
            SigmaWeight::Indicator(v) if v == sigma => Ratio::one(),
            SigmaWeight::Indicator(_) => Ratio::zero(),
            SigmaWeight::Identity => Ratio::from_integer(sigma as i128),
        }
    }
}

impl fmt::Display for SigmaWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaWeight::One => f.write_str("1"),
            SigmaWeight::Indicator(v) => write!(f, "1{{sigma={v}}}"),
            SigmaWeight::Identity => f.write_str("sigma"),
        }
    }
}

/// Both sides of the identity for one `(F, g)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RerootIdentity {
    pub functional: ShiftFunctional,
    pub weight: SigmaWeight,
    /// `Σ_trees 2^{−(2n+1)} g(2n) Σ_{s<2n} F(s, H^[s])`.
    pub rerooted: Ratio<i128>,
    /// The same sum with `F(s, H)`.
    pub plain: Ratio<i128>,
}

impl RerootIdentity {
    pub fn holds(&self) -> bool {
        self.rerooted == self.plain
    }
}

/// Largest tree size accepted by [`verify_prop1_exact`].
pub const MAX_PROP1_EDGES: usize = 8;

/// Evaluates both sides of the re-rooting identity over all plane trees with
/// `1..=n_max` edges, weighted by their GW(geometric 1/2) probability, for
/// every pair of functional and duration weight.
pub fn verify_prop1_exact(
    n_max: usize,
    functionals: &[ShiftFunctional],
    weights: &[SigmaWeight],
) -> Result<Vec<RerootIdentity>> {
    if n_max == 0 || n_max > MAX_PROP1_EDGES {
        return Err(Error::Resource(format!("tree sizes are limited to 1..={MAX_PROP1_EDGES}, got {n_max}")));
    }
    let mut out: Vec<RerootIdentity> = functionals
        .iter()
        .flat_map(|&f| {
            weights.iter().map(move |&g| RerootIdentity {
                functional: f,
                weight: g,
                rerooted: Ratio::zero(),
                plain: Ratio::zero(),
            })
        })
        .collect();
    for n in 1..=n_max {
        let sigma = 2 * n;
        let tree_weight = srw_excursion_tree_weight(n)?;
        // Per functional: Σ_H Σ_s F(s, H^[s]) and Σ_H Σ_s F(s, H).
        let mut sums = alloc::vec![(Ratio::<i128>::zero(), Ratio::<i128>::zero()); functionals.len()];
        for h in enumerate_dyck(n)? {
            let plain: Vec<Ratio<i128>> = functionals.iter().map(|f| f.path.eval_exact(&h)).collect::<Result<_>>()?;
            for s in 0..sigma {
                let r = h.reroot(s)?;
                for (k, f) in functionals.iter().enumerate() {
                    let a = f.time.at(s, sigma);
                    if a.is_zero() {
                        continue;
                    }
                    sums[k].0 += a * f.path.eval_exact(&r)?;
                    sums[k].1 += a * plain[k];
                }
            }
        }
        for (k, _) in functionals.iter().enumerate() {
            for (j, &g) in weights.iter().enumerate() {
                let w = tree_weight * g.at(sigma);
                let entry = &mut out[k * weights.len() + j];
                entry.rerooted += w * sums[k].0;
                entry.plain += w * sums[k].1;
            }
        }
    }
    Ok(out)
}

/// Functionals used by default in the exact identity: at least four,
/// mixing path functionals with time weights.
pub fn default_prop1_functionals() -> Vec<ShiftFunctional> {
    alloc::vec![
        ShiftFunctional::new(TimeWeight::One, FunctionalSpec::Area),
        ShiftFunctional::new(TimeWeight::One, FunctionalSpec::EvalAt(0.5)),
        ShiftFunctional::new(TimeWeight::Linear, FunctionalSpec::Sup),
        ShiftFunctional::new(TimeWeight::FirstHalf, FunctionalSpec::EvalAt(0.25)),
        ShiftFunctional::new(TimeWeight::Linear, FunctionalSpec::TripletComponent { index: 3, u: 0.25, v: 0.75 }),
    ]
}

pub fn default_prop1_weights() -> Vec<SigmaWeight> {
    alloc::vec![SigmaWeight::One, SigmaWeight::Indicator(8), SigmaWeight::Identity]
}
