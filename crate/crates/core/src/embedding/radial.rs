//! Wedge-based radial layout used as a crossing-free starting point.

use super::layout::{root_reference, LayoutModel};
use super::{count_crossings, invert_angle, Crossings, ResolvedWeights, RL_MAX};
use crate::geom::{ccw_angle, Vec2};
use crate::scalar::Real;

/// Widest wedge a non-root subtree may span; below π so each subtree sits
/// in a convex cone.
const MAX_WEDGE: f64 = 0.9 * std::f64::consts::PI;

/// Uniform length scales tried when radii make the unscaled layout overlap.
const SCALES: [f64; 5] = [1.0, 1.25, 1.5, 2.0, 3.0];

#[derive(Clone, Debug, PartialEq)]
pub struct RadialSeed<T> {
    pub uv: Vec<Vec2<T>>,
    /// Per-segment ratios recovered from the layout.
    pub ratios: Vec<[T; 2]>,
    pub scale: T,
    pub crossings: Crossings,
}

impl<T: Real> RadialSeed<T> {
    pub fn energy(&self, weights: &ResolvedWeights<T>) -> T {
        weights.energy(&self.ratios, &self.crossings)
    }
}

fn wedge_directions<T: Real>(model: &LayoutModel<'_, T>) -> Vec<T> {
    let tree = model.tree;
    let cap = T::lit(MAX_WEDGE);
    let mut dir = vec![T::zero(); tree.len()];
    // wedge [lo, hi] per node in absolute angle
    let mut wedge = vec![(T::zero(), T::zero()); tree.len()];
    let root = tree.root();
    let start = root_reference::<T>().angle();
    wedge[root] = (start, start + T::two_pi());

    for &n in tree.preorder() {
        let mut kids = tree.children(n).to_vec();
        if kids.is_empty() {
            continue;
        }
        // smaller target angle = further clockwise
        kids.sort_by(|&a, &b| model.target(a).partial_cmp(&model.target(b)).unwrap_or(std::cmp::Ordering::Equal));
        let (lo, hi) = wedge[n];
        let total = T::lit(tree.leaf_count(n) as f64);
        let mut at = lo;
        for c in kids {
            let width = (hi - lo) * T::lit(tree.leaf_count(c) as f64) / total;
            let mid = at + width / T::lit(2.0);
            let half = width.min(cap) / T::lit(2.0);
            wedge[c] = (mid - half, mid + half);
            dir[c] = mid;
            at = at + width;
        }
    }
    dir
}

/// Radial layout with subtrees in disjoint angular wedges proportional to
/// their leaf counts, plus the ratio set that best reproduces it.
pub fn radial_seed<T: Real>(model: &LayoutModel<'_, T>) -> RadialSeed<T> {
    let tree = model.tree;
    let dir = wedge_directions(model);
    let place = |scale: T| {
        let mut uv = vec![Vec2::zero(); tree.len()];
        for &n in &tree.preorder()[1..] {
            let p = tree.parent(n).expect("non-root");
            let (s, c) = dir[n].sin_cos();
            uv[n] = uv[p] + Vec2::new(c, s) * (tree.edge_length(n) * scale);
        }
        uv
    };

    let mut best = None;
    for &s in &SCALES {
        let scale = T::lit(s);
        let uv = place(scale);
        let crossings = count_crossings(tree, model.segments, &uv);
        let done = crossings.total == 0;
        best = Some((uv, scale, crossings));
        if done {
            break;
        }
    }
    let (uv, scale, crossings) = best.expect("at least one scale");

    let m = model.segment_count();
    let mut sum = vec![T::zero(); m];
    let eps = T::lit(1e-12);
    for seg in model.segments.iter() {
        for &n in &seg.nodes {
            let p = tree.parent(n).expect("non-root");
            let back = match tree.parent(p) {
                Some(g) => uv[g] - uv[p],
                None => root_reference(),
            };
            let realized = ccw_angle(back, uv[n] - uv[p], eps).unwrap_or_else(T::PI);
            sum[seg.index] = sum[seg.index] + invert_angle(model.target(n), realized);
        }
    }
    let rl = (scale - T::one()).max(T::zero()).min(T::lit(RL_MAX));
    let ratios = model
        .segments
        .iter()
        .map(|seg| {
            let ra = sum[seg.index] / T::lit(seg.nodes.len() as f64);
            [rl, ra.max(-T::one()).min(T::one())]
        })
        .collect();
    RadialSeed { uv, ratios, scale, crossings }
}
