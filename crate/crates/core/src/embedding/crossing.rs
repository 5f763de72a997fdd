//! Capsule overlap counting between non-adjacent tree edges.

use serde::{Deserialize, Serialize};

use crate::geom::{segment_distance, Vec2};
use crate::scalar::Real;
use crate::skeleton::{Segmentation, SkeletonTree};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Crossings {
    pub total: usize,
    /// Each overlapping pair adds one to the segment of both edges.
    pub per_segment: Vec<usize>,
}

struct Edge<T> {
    parent: usize,
    child: usize,
    a: Vec2<T>,
    b: Vec2<T>,
    radius: T,
    lo: Vec2<T>,
    hi: Vec2<T>,
}

fn edges<T: Real>(tree: &SkeletonTree<T>, uv: &[Vec2<T>]) -> Vec<Edge<T>> {
    tree.edge_nodes()
        .map(|child| {
            let parent = tree.parent(child).expect("edge nodes have parents");
            let (a, b) = (uv[parent], uv[child]);
            let radius = tree.radius(parent).max(tree.radius(child));
            let pad = Vec2::new(radius, radius);
            Edge { parent, child, a, b, radius, lo: a.min(b) - pad, hi: a.max(b) + pad }
        })
        .collect()
}

fn adjacent<T>(e: &Edge<T>, f: &Edge<T>) -> bool {
    e.parent == f.parent || e.parent == f.child || e.child == f.parent || e.child == f.child
}

fn overlaps<T: Real>(e: &Edge<T>, f: &Edge<T>) -> bool {
    !adjacent(e, f) && segment_distance(e.a, e.b, f.a, f.b) <= e.radius + f.radius
}

fn tally<T>(segments: &Segmentation, pairs: impl Iterator<Item = (usize, usize)>, edges: &[Edge<T>]) -> Crossings {
    let mut out = Crossings { total: 0, per_segment: vec![0; segments.len()] };
    for (i, j) in pairs {
        out.total += 1;
        for e in [&edges[i], &edges[j]] {
            let s = segments.segment_of(e.child).expect("edge nodes belong to segments");
            out.per_segment[s] += 1;
        }
    }
    out
}

/// Counts overlapping capsule pairs with a sweep over x-sorted bounding
/// boxes followed by an exact distance test.
pub fn count_crossings<T: Real>(tree: &SkeletonTree<T>, segments: &Segmentation, uv: &[Vec2<T>]) -> Crossings {
    let edges = edges(tree, uv);
    // NaN coordinates would defeat the sweep order
    if edges.iter().any(|e| !(e.lo.is_finite() && e.hi.is_finite())) {
        return count_crossings_brute(tree, segments, uv);
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| edges[i].lo.x.partial_cmp(&edges[j].lo.x).unwrap_or(std::cmp::Ordering::Equal));

    let mut pairs = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let e = &edges[i];
        for &j in &order[k + 1..] {
            let f = &edges[j];
            if f.lo.x > e.hi.x {
                break;
            }
            if f.lo.y <= e.hi.y && e.lo.y <= f.hi.y && overlaps(e, f) {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    tally(segments, pairs.into_iter(), &edges)
}

/// All-pairs reference count.
pub fn count_crossings_brute<T: Real>(tree: &SkeletonTree<T>, segments: &Segmentation, uv: &[Vec2<T>]) -> Crossings {
    let edges = edges(tree, uv);
    let n = edges.len();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    let hits: Vec<_> = pairs.filter(|&(i, j)| overlaps(&edges[i], &edges[j])).collect();
    tally(segments, hits.into_iter(), &edges)
}
