//! Brownian motion indexed by a coded tree, observed at finitely many
//! points, and the right-mass statistic of its occupation measure.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coding::{mass_sample, spanned_subtree, SpannedTree};
use crate::error::Result;
use crate::path::ContourExcursion;

/// Values `Z_{p_H(t)}` of the tree-indexed Gaussian process at the sampled
/// times; the root value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDisplacement {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl LabeledDisplacement {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `values()[k]` is the displacement at `times()[k]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn root_value(&self) -> f64 {
        0.0
    }
}

/// Gaussian displacements on a spanned tree: each edge carries an
/// independent centered increment with variance equal to its length. The
/// result is indexed by vertex.
pub fn displace_tree<R: Rng + ?Sized>(tree: &SpannedTree, rng: &mut R) -> Vec<f64> {
    let mut z = alloc::vec![0.0; tree.vertex_count()];
    for v in tree.topological_order() {
        if let Some(p) = tree.parent(v) {
            let len = tree.height(v) - tree.height(p);
            let g: f64 = StandardNormal.sample(rng);
            z[v] = z[p] + libm::sqrt(len) * g;
        }
    }
    z
}

/// Samples `(Z_a)` at the points coded by `times`, with `E[(Z_a − Z_b)²]
/// = d_H(a, b)` and `Z_ρ = 0`.
pub fn sample_snake<R: Rng + ?Sized>(h: &ContourExcursion, times: &[f64], rng: &mut R) -> Result<LabeledDisplacement> {
    let tree = spanned_subtree(h, times)?;
    let z = displace_tree(&tree, rng);
    let values = (1..=times.len()).map(|label| z[tree.vertex_of_label(label)]).collect();
    Ok(LabeledDisplacement { times: times.to_vec(), values })
}

/// Fraction of `k` points drawn from the mass measure whose displacement is
/// positive: an estimate of the occupation mass of `(0, ∞)`.
pub fn ise_right_mass<R: Rng + ?Sized>(h: &ContourExcursion, k: usize, rng: &mut R) -> Result<f64> {
    if k == 0 {
        return Err(crate::Error::Input("right mass needs at least one sample".into()));
    }
    let times = mass_sample(h, rng, k);
    let snake = sample_snake(h, &times, rng)?;
    let positive = snake.values().iter().filter(|&&z| z > 0.0).count();
    Ok(positive as f64 / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::brownian_excursion;
    use crate::rng::substream;
    use crate::stats::mean_and_se;
    use alloc::vec;

    fn example() -> ContourExcursion {
        ContourExcursion::from_samples(vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 2.0, 1.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn single_edge_variance() {
        let h = example();
        let mut rng = substream(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_snake(&h, &[3.0], &mut rng).unwrap().values()[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // Var of the sample second moment of N(0, 3) is 2·9.
        let se = libm::sqrt(18.0 / n as f64);
        assert!((var - 3.0).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn root_value_and_range() {
        let h = example();
        let mut rng = substream(2, 0);
        let s = sample_snake(&h, &[0.0, 3.0], &mut rng).unwrap();
        assert_eq!(s.root_value(), 0.0);
        assert_eq!(s.values()[0], 0.0);
        for _ in 0..100 {
            let r = ise_right_mass(&h, 7, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn disjoint_branches_uncorrelated() {
        let h = ContourExcursion::from_samples(vec![0.0, 1.0, 0.0, 1.0, 0.0], 1.0).unwrap();
        let mut rng = substream(3, 0);
        let n = 100_000;
        let mut cov = 0.0;
        for _ in 0..n {
            let s = sample_snake(&h, &[1.0, 3.0], &mut rng).unwrap();
            cov += s.values()[0] * s.values()[1];
        }
        cov /= n as f64;
        assert!(cov.abs() < 3.0 / libm::sqrt(n as f64), "{cov}");
    }

    #[test]
    fn covariance_structure() {
        let h = example();
        let times = [2.0, 3.0, 6.0];
        let mut rng = substream(4, 0);
        let n = 100_000;
        let mut sq = [[0.0f64; 3]; 3];
        let mut fourth = [[0.0f64; 3]; 3];
        for _ in 0..n {
            let z = sample_snake(&h, &times, &mut rng).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let d = z.values()[i] - z.values()[j];
                    sq[i][j] += d * d;
                    fourth[i][j] += d * d * d * d;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let m2 = sq[i][j] / n as f64;
                let m4 = fourth[i][j] / n as f64;
                let se = libm::sqrt((m4 - m2 * m2).max(0.0) / n as f64);
                let d = h.tree_distance(times[i], times[j]).unwrap();
                assert!((m2 - d).abs() <= 4.0 * se + 1e-12, "({i},{j}): {m2} vs {d}");
            }
        }
    }

    #[test]
    fn single_edge_right_mass_is_symmetric() {
        // A tent codes a single segment; only the two endpoint grid cells
        // snap to the root, which moves the mean by 1/(4·1000).
        let n = 2000;
        let tent: Vec<f64> = (0..=n).map(|i| 1.0 - (i as f64 - 1000.0).abs() / 1000.0).collect();
        let h = ContourExcursion::from_samples(tent, 1.0 / n as f64).unwrap();
        let mut rng = substream(5, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| ise_right_mass(&h, 5, &mut rng).unwrap()).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - 0.5).abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn sign_symmetry_on_brownian_trees() {
        let mut xs = Vec::new();
        for i in 0..300 {
            let mut rng = substream(6, i);
            let h = brownian_excursion(256, &mut rng).unwrap();
            xs.push(ise_right_mass(&h, 50, &mut rng).unwrap());
        }
        let (m, se) = mean_and_se(&xs);
        assert!((m - 0.5).abs() < 3.0 * se, "{m} ± {se}");
    }
}
