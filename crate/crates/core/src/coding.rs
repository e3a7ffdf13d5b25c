//! The real tree coded by an excursion, seen through time representatives:
//! the equivalence `∼_H`, distance matrices, spanned subtrees, sampling from
//! the mass measure and the triplet functional.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::path::ContourExcursion;
use crate::rmq::SparseMin;
use crate::TOLERANCE;

/// `s ∼_H t` iff `H_s = H_t = min_{[s∧t, s∨t]} H`, i.e. `d_H(s, t) = 0`.
pub fn equivalent(h: &ContourExcursion, s: f64, t: f64) -> Result<bool> {
    Ok(h.tree_distance(s, t)? <= TOLERANCE)
}

/// An excursion with a sparse minimum table, for many distance queries.
#[derive(Debug, Clone)]
pub struct DistanceOracle<'a> {
    h: &'a ContourExcursion,
    table: SparseMin,
}

impl<'a> DistanceOracle<'a> {
    pub fn new(h: &'a ContourExcursion) -> Self {
        DistanceOracle { h, table: SparseMin::new(h.samples()) }
    }

    pub fn excursion(&self) -> &ContourExcursion {
        self.h
    }

    /// Same value as [`ContourExcursion::tree_distance`].
    pub fn distance(&self, s: f64, t: f64) -> Result<f64> {
        let path = self.h.path();
        let (a, b) = (s.min(t), s.max(t));
        let ha = path.eval(a)?;
        let hb = path.eval(b)?;
        let mut m = ha.min(hb);
        let (lo, hi) = path.interior_indices(a.max(0.0), b.min(path.lifetime()));
        if lo < hi {
            m = m.min(self.table.query(lo, hi - 1));
        }
        let (hs, ht) = if s <= t { (ha, hb) } else { (hb, ha) };
        Ok((hs - m) + (ht - m))
    }
}

/// Symmetric matrix of tree distances over a list of times.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut entries = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i + 1..dim {
                let d = f(i, j)?;
                entries[i * dim + j] = d;
                entries[j * dim + i] = d;
            }
        }
        Ok(DistanceMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn max_abs_diff(&self, other: &DistanceMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrices of different size");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    /// Four-point condition: for all i, j, k, l the largest of the three
    /// pairwise sums `d(i,j)+d(k,l)`, `d(i,k)+d(j,l)`, `d(i,l)+d(j,k)` is
    /// attained at least twice.
    pub fn satisfies_four_point(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    for l in k..n {
                        let mut sums = [
                            self.get(i, j) + self.get(k, l),
                            self.get(i, k) + self.get(j, l),
                            self.get(i, l) + self.get(j, k),
                        ];
                        sums.sort_by(f64::total_cmp);
                        if sums[2] - sums[1] > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

pub fn distance_matrix(h: &ContourExcursion, times: &[f64]) -> Result<DistanceMatrix> {
    let oracle = DistanceOracle::new(h);
    for &t in times {
        h.height(t)?;
    }
    DistanceMatrix::from_fn(times.len(), |i, j| oracle.distance(times[i], times[j]))
}

/// Labeled finite real tree spanned by the root and finitely many points.
///
/// Vertex 0 is the root and carries label 0; the point `V_k` carries label
/// `k`. Unlabeled vertices are branch points. Every non-root vertex has a
/// parent edge; a zero-length edge only joins a labeled vertex to another
/// labeled vertex it coincides with.
#[derive(Debug, Clone, PartialEq)]
pub struct SpannedTree {
    labels: Vec<Option<usize>>,
    parents: Vec<Option<usize>>,
    heights: Vec<f64>,
    by_label: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpannedEdge {
    pub parent: usize,
    pub child: usize,
    pub length: f64,
}

impl SpannedTree {
    /// Assembles a tree from parent links and vertex heights (distances to
    /// the root). Labels must be exactly `0..=p` with 0 at the root.
    pub fn from_parts(labels: Vec<Option<usize>>, parents: Vec<Option<usize>>, heights: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || parents.len() != n || heights.len() != n {
            return Err(Error::InvalidTree("inconsistent vertex arrays".into()));
        }
        if parents[0].is_some() || labels[0] != Some(0) || heights[0] != 0.0 {
            return Err(Error::InvalidTree("vertex 0 must be the root with label 0".into()));
        }
        let p = labels.iter().flatten().count();
        let mut by_label = alloc::vec![usize::MAX; p];
        for (v, l) in labels.iter().enumerate() {
            if let Some(l) = *l {
                if l >= p || by_label[l] != usize::MAX {
                    return Err(Error::InvalidTree(format!("labels must be 0..={}", p - 1)));
                }
                by_label[l] = v;
            }
        }
        for (v, parent) in parents.iter().enumerate().skip(1) {
            let Some(u) = *parent else {
                return Err(Error::InvalidTree(format!("vertex {v} has no parent")));
            };
            if u >= n || heights[v] < heights[u] {
                return Err(Error::InvalidTree(format!("bad parent edge {u} -> {v}")));
            }
        }
        // Acyclicity: every vertex reaches the root within n steps.
        for v in 0..n {
            let mut u = v;
            let mut steps = 0;
            while let Some(next) = parents[u] {
                u = next;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidTree("cycle in parent links".into()));
                }
            }
        }
        Ok(SpannedTree { labels, parents, heights, by_label })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of labeled vertices including the root.
    pub fn label_count(&self) -> usize {
        self.by_label.len()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn vertex_of_label(&self, label: usize) -> usize {
        self.by_label[label]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parents[v]
    }

    pub fn height(&self, v: usize) -> f64 {
        self.heights[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = SpannedEdge> + '_ {
        self.parents.iter().enumerate().filter_map(|(child, p)| {
            p.map(|parent| SpannedEdge { parent, child, length: self.heights[child] - self.heights[parent] })
        })
    }

    pub fn degree(&self, v: usize) -> usize {
        let children = self.parents.iter().filter(|&&p| p == Some(v)).count();
        children + usize::from(self.parents[v].is_some())
    }

    /// Vertices ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut children: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (v, p) in self.parents.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack = alloc::vec![0usize];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().rev());
        }
        order
    }

    /// Distance between two vertices by summing edge lengths along the path
    /// through their common ancestor.
    pub fn path_length(&self, a: usize, b: usize) -> f64 {
        let mut ancestors = alloc::vec![false; self.vertex_count()];
        let mut u = a;
        ancestors[u] = true;
        while let Some(p) = self.parents[u] {
            u = p;
            ancestors[u] = true;
        }
        let mut lca = b;
        let mut total = 0.0;
        while !ancestors[lca] {
            let p = self.parents[lca].expect("root is an ancestor of every vertex");
            total += self.heights[lca] - self.heights[p];
            lca = p;
        }
        let mut u = a;
        while u != lca {
            let p = self.parents[u].expect("lca is an ancestor");
            total += self.heights[u] - self.heights[p];
            u = p;
        }
        total
    }

    /// Distance matrix between labels `0..=p`, computed through the tree.
    pub fn label_distances(&self) -> DistanceMatrix {
        let p = self.label_count();
        DistanceMatrix::from_fn(p, |i, j| Ok(self.path_length(self.by_label[i], self.by_label[j])))
            .expect("infallible")
    }
}

/// Subtree spanned by the root and the points `p_H(times[k])`, labeled
/// `k + 1` in input order.
///
/// Points are inserted in time order. Each one hangs off the path from the
/// root to the previous point at height `m_H` of the two times; when that
/// height falls inside an edge a branch point is created there.
pub fn spanned_subtree(h: &ContourExcursion, times: &[f64]) -> Result<SpannedTree> {
    if times.is_empty() {
        return Err(Error::Input("spanned subtree needs at least one time".into()));
    }
    let path = h.path();
    let mut order: Vec<usize> = (0..times.len()).collect();
    for &t in times {
        path.eval(t)?;
    }
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));

    let mut labels = alloc::vec![Some(0)];
    let mut parents = alloc::vec![None];
    let mut heights = alloc::vec![0.0];
    let mut stack = alloc::vec![0usize];
    let mut prev_time = 0.0;
    for &idx in &order {
        let t = times[idx];
        let ht = path.eval(t)?;
        let m = path.range_min(prev_time, t)?;
        prev_time = t;
        let mut popped = None;
        while heights[*stack.last().unwrap()] > m {
            popped = stack.pop();
        }
        let top = *stack.last().unwrap();
        let anchor = if heights[top] < m {
            let below = popped.expect("a vertex above the branch height was popped");
            let b = labels.len();
            labels.push(None);
            parents.push(Some(top));
            heights.push(m);
            parents[below] = Some(b);
            stack.push(b);
            b
        } else {
            top
        };
        if ht == m && labels[anchor].is_none() {
            labels[anchor] = Some(idx + 1);
        } else {
            let v = labels.len();
            labels.push(Some(idx + 1));
            parents.push(Some(anchor));
            heights.push(ht);
            stack.push(v);
        }
    }
    SpannedTree::from_parts(labels, parents, heights)
}

/// Draws `p` independent uniform times on `[0, σ]`, each snapped to the
/// nearest grid point.
pub fn mass_sample<R: Rng + ?Sized>(h: &ContourExcursion, rng: &mut R, p: usize) -> Vec<f64> {
    mass_sample_indices(h, rng, p).into_iter().map(|i| h.path().time_of(i)).collect()
}

/// Grid indices behind [`mass_sample`].
pub fn mass_sample_indices<R: Rng + ?Sized>(h: &ContourExcursion, rng: &mut R, p: usize) -> Vec<usize> {
    let n = h.path().intervals();
    (0..p)
        .map(|_| {
            let u: f64 = rng.random();
            (libm::round(u * n as f64) as usize).min(n)
        })
        .collect()
}

/// `(H_u − m, H_{u'} − m, m)` with `m = min_{[u∧u', u∨u']} H`.
pub fn triplet(h: &ContourExcursion, u: f64, v: f64) -> Result<(f64, f64, f64)> {
    let hu = h.height(u)?;
    let hv = h.height(v)?;
    let m = h.path().range_min(u.min(v), u.max(v))?;
    Ok((hu - m, hv - m, m))
}

/// Checks that the distances of `H^[s]` over `times` match those of `H`
/// over the shifted times `s ⊕ t`, within [`TOLERANCE`].
///
/// Agreement is exact for paths with steps of one unit up or down, such as
/// scaled tree contours. Other grid paths may cross the height of the new
/// root between grid points, and the re-rooted samples miss those visits.
pub fn isometry_check(h: &ContourExcursion, s: f64, times: &[f64]) -> Result<bool> {
    let rerooted = h.reroot(s)?;
    let s = h.path().time_of(h.path().grid_index(s)?);
    let shifted: Vec<f64> = times.iter().map(|&t| h.shift_time(s, t)).collect();
    let a = distance_matrix(&rerooted, times)?;
    let b = distance_matrix(h, &shifted)?;
    Ok(a.max_abs_diff(&b) <= TOLERANCE)
}
