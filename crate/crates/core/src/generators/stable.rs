use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::offspring::{offspring_geometric, offspring_stable, OffspringLaw};
use super::tree::{gw_tree_conditioned, PlaneTree};
use crate::error::{Error, Result};
use crate::path::{ContourExcursion, LatticePath};

/// Stable branching mechanism `ψ(u) = c·u^γ`, `γ ∈ (1, 2]`.
///
/// The general mechanism `ψ(u) = αu + βu² + ∫(e^{−ur} − 1 + ur) π(dr)` is
/// only represented through its stable specialization: `α = 0`, `β = c` when
/// `γ = 2` and `π(dr) = c·γ(γ−1)/Γ(2−γ)·r^{−1−γ} dr` when `γ < 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyModel {
    gamma: f64,
    scale: f64,
}

impl LevyModel {
    pub fn new(gamma: f64, scale: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(Error::Domain(format!("stability index must lie in (1, 2], got {gamma}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("scale must be positive, got {scale}")));
        }
        Ok(LevyModel { gamma, scale })
    }

    /// `ψ(u) = u^γ`.
    pub fn stable(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    /// The Brownian case `ψ(u) = u²`.
    pub fn brownian() -> Self {
        LevyModel { gamma: 2.0, scale: 1.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_brownian(&self) -> bool {
        self.gamma == 2.0
    }

    pub fn psi(&self, u: f64) -> f64 {
        self.scale * libm::pow(u, self.gamma)
    }

    pub fn alpha(&self) -> f64 {
        0.0
    }

    pub fn beta(&self) -> f64 {
        if self.is_brownian() {
            self.scale
        } else {
            0.0
        }
    }

    /// Density of the Lévy measure `π` at `r > 0`.
    pub fn levy_density(&self, r: f64) -> f64 {
        if self.is_brownian() || r <= 0.0 {
            return 0.0;
        }
        let g = self.gamma;
        self.scale * g * (g - 1.0) / libm::tgamma(2.0 - g) * libm::pow(r, -1.0 - g)
    }

    /// Offspring law of the discrete approximation: geometric(1/2) for
    /// `γ = 2`, otherwise `φ(s) = s + γ⁻¹(1 − s)^γ`.
    pub fn offspring(&self) -> OffspringLaw {
        if self.is_brownian() {
            offspring_geometric()
        } else {
            offspring_stable(self.gamma).expect("gamma validated at construction")
        }
    }

    /// Mechanism constant `c` reached by the offspring law's Łukasiewicz
    /// walk: 1 for geometric(1/2), `1/γ` for the stable family.
    fn native_scale(&self) -> f64 {
        if self.is_brownian() {
            1.0
        } else {
            1.0 / self.gamma
        }
    }
}

/// Height factor turning `n^{−(1−1/γ)}`-scaled GW contours into height
/// processes for `ψ(u) = c·u^γ`: scaling `ψ` by `k^γ` divides heights by
/// `k`, hence `(c_native / c)^{1/γ}`.
pub fn height_constant(model: &LevyModel) -> f64 {
    libm::pow(model.native_scale() / model.scale, 1.0 / model.gamma)
}

/// Ratio of medians matching a raw sample of a functional (usually the
/// supremum) to a reference sample of the same functional.
pub fn calibrate_height_constant(reference: &[f64], raw: &[f64]) -> Result<f64> {
    let m_ref = median(reference)?;
    let m_raw = median(raw)?;
    if m_raw <= 0.0 {
        return Err(Error::Input("raw sample has a nonpositive median".into()));
    }
    Ok(m_ref / m_raw)
}

fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Input("median of an empty sample".into()));
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// Under stable scaling, duration `a·σ` comes with heights multiplied by
/// `a^{1−1/γ}`.
pub fn rescale_stable(h: &ContourExcursion, a: f64, model: &LevyModel) -> Result<ContourExcursion> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("duration factor must be positive, got {a}")));
    }
    let factor = libm::pow(a, 1.0 - 1.0 / model.gamma);
    ContourExcursion::new(h.path().rescale(a, factor)?)
}

/// Approximate sample of `H` under `N^{(1)}`: the contour of a conditioned
/// GW tree with `n` edges on `[0, 1]`, heights scaled by
/// `n^{−(1−1/γ)}·`[`height_constant`].
pub fn normalized_stable_excursion<R: Rng + ?Sized>(n: usize, model: &LevyModel, rng: &mut R) -> Result<ContourExcursion> {
    ExcursionSampler::new(*model).sample(n, rng)
}

/// [`normalized_stable_excursion`] with the offspring table built once.
#[derive(Debug, Clone)]
pub struct ExcursionSampler {
    model: LevyModel,
    law: OffspringLaw,
}

impl ExcursionSampler {
    pub fn new(model: LevyModel) -> Self {
        ExcursionSampler { law: model.offspring(), model }
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ContourExcursion> {
        self.scale(&self.sample_contour(n, rng)?)
    }

    /// The unscaled contour of the conditioned tree.
    pub fn sample_contour<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<LatticePath> {
        if n == 0 {
            return Err(Error::Input("a normalized excursion needs at least one edge".into()));
        }
        // Stable laws have no single-child vertices, so the one-edge tree is
        // returned directly instead of being conditioned on.
        let tree = if n == 1 { PlaneTree::new(alloc::vec![1, 0])? } else { gw_tree_conditioned(&self.law, n, rng)? };
        Ok(tree.contour())
    }

    /// Height factor applied to contours with `n` edges.
    pub fn height_factor(&self, n: usize) -> f64 {
        height_constant(&self.model) * libm::pow(n as f64, -(1.0 - 1.0 / self.model.gamma))
    }

    /// Maps a contour with `n` edges onto `[0, 1]` with heights scaled by
    /// [`Self::height_factor`].
    pub fn scale(&self, contour: &LatticePath) -> Result<ContourExcursion> {
        let n = contour.len() / 2;
        if n == 0 || contour.len() % 2 == 1 {
            return Err(Error::Input("a normalized excursion needs a contour with at least one edge".into()));
        }
        let factor = self.height_factor(n);
        let samples = contour.heights().iter().map(|&h| h as f64 * factor).collect();
        ContourExcursion::from_samples(samples, 1.0 / (2 * n) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn rescale_examples() {
        let h = ContourExcursion::from_samples(alloc::vec![0.0, 0.7, 0.2, 0.0], 0.25).unwrap();
        let m2 = LevyModel::brownian();
        assert_eq!(rescale_stable(&h, 1.0, &m2).unwrap(), h);
        let r = rescale_stable(&h, 4.0, &m2).unwrap();
        assert_eq!(r.step(), 1.0);
        assert_eq!(r.samples(), &[0.0, 1.4, 0.4, 0.0]);
        let m15 = LevyModel::stable(1.5).unwrap();
        let r = rescale_stable(&h, 8.0, &m15).unwrap();
        assert!((r.samples()[1] - 1.4).abs() < 1e-12);
        let back = rescale_stable(&r, 1.0 / 8.0, &m15).unwrap();
        for (a, b) in back.samples().iter().zip(h.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rescale_stable(&h, 0.0, &m2).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(LevyModel::new(1.0, 1.0).is_err());
        assert!(LevyModel::new(2.1, 1.0).is_err());
        assert!(LevyModel::new(1.5, 0.0).is_err());
        let m = LevyModel::new(1.5, 2.0).unwrap();
        assert_eq!(m.psi(4.0), 16.0);
        assert_eq!((m.alpha(), m.beta()), (0.0, 0.0));
        assert_eq!(LevyModel::new(2.0, 3.0).unwrap().beta(), 3.0);
    }

    #[test]
    fn levy_density_reproduces_psi() {
        // ∫ (e^{−ur} − 1 + ur) π(dr) = c u^γ, checked by quadrature in log r.
        let m = LevyModel::new(1.5, 0.7).unwrap();
        let u = 1.3;
        let (lo, hi, steps) = (-30.0f64, 40.0f64, 400_000);
        let dx = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            let r = libm::exp(lo + (i as f64 + 0.5) * dx);
            let ur = u * r;
            let integrand = if ur < 1e-4 { 0.5 * ur * ur * (1.0 - ur / 3.0) } else { libm::exp(-ur) - 1.0 + ur };
            total += integrand * m.levy_density(r) * r * dx;
        }
        assert!((total - m.psi(u)).abs() < 1e-6 * m.psi(u), "{total} vs {}", m.psi(u));
    }

    #[test]
    fn height_constants() {
        assert_eq!(height_constant(&LevyModel::brownian()), 1.0);
        assert!((height_constant(&LevyModel::new(2.0, 2.0).unwrap()) - libm::sqrt(0.5)).abs() < 1e-15);
        let m = LevyModel::stable(1.5).unwrap();
        assert!((height_constant(&m) - libm::pow(1.0 / 1.5, 1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn one_edge_excursion() {
        for gamma in [1.5, 2.0] {
            let m = LevyModel::stable(gamma).unwrap();
            let e = normalized_stable_excursion(1, &m, &mut substream(0, 0)).unwrap();
            assert_eq!(e.samples().len(), 3);
            assert_eq!((e.samples()[0], e.samples()[2]), (0.0, 0.0));
            assert!(e.samples()[1] > 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = LevyModel::stable(1.5).unwrap();
        let s = ExcursionSampler::new(m);
        let a = s.sample(500, &mut substream(9, 1)).unwrap();
        let b = s.sample(500, &mut substream(9, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sigma(), 1.0);
    }

    #[test]
    fn calibration_ratio() {
        assert_eq!(calibrate_height_constant(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert!(calibrate_height_constant(&[], &[1.0]).is_err());
    }
}
