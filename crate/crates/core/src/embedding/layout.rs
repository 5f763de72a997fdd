//! Forward-kinematic realization of a ratio set.

use serde::{Deserialize, Serialize};

use super::adjust_angle;
use crate::geom::Vec2;
use crate::projection::TargetAngles;
use crate::scalar::Real;
use crate::skeleton::{Segmentation, SkeletonTree};

/// A segment and everything below it held rigid relative to its attachment
/// frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct Pin<T> {
    pub segment: usize,
    /// Block node coordinates in preorder, as placed when pinned.
    pub uv: Vec<Vec2<T>>,
    /// Attachment node position when pinned.
    pub origin: Vec2<T>,
    /// Unit direction from the attachment node to its parent when pinned.
    pub axis: Vec2<T>,
}

/// Tree, segmentation and targets flattened for repeated realization.
pub struct LayoutModel<'a, T> {
    pub tree: &'a SkeletonTree<T>,
    pub segments: &'a Segmentation,
    theta: Vec<T>,
    length: Vec<T>,
    segment_of: Vec<usize>,
}

/// Direction from the root toward its virtual grandparent.
pub(crate) fn root_reference<T: Real>() -> Vec2<T> {
    Vec2::new(T::zero(), -T::one())
}

impl<'a, T: Real> LayoutModel<'a, T> {
    pub fn new(tree: &'a SkeletonTree<T>, segments: &'a Segmentation, targets: &TargetAngles<T>) -> Self {
        let n = tree.len();
        Self {
            tree,
            segments,
            theta: (0..n).map(|i| targets.per_node[i].unwrap_or_else(T::PI)).collect(),
            length: (0..n).map(|i| if i == tree.root() { T::zero() } else { tree.edge_length(i) }).collect(),
            segment_of: (0..n).map(|i| segments.segment_of(i).unwrap_or(usize::MAX)).collect(),
        }
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn target(&self, ix: usize) -> T {
        self.theta[ix]
    }

    /// Attachment frame of the block rooted at `first`: origin and unit
    /// axis toward the attachment node's parent (or the virtual one).
    fn frame(&self, uv: &[Vec2<T>], first: usize) -> (Vec2<T>, Vec2<T>) {
        let p = self.tree.parent(first).expect("segments start below the root");
        let axis = match self.tree.parent(p) {
            Some(g) => (uv[g] - uv[p]).normalized().unwrap_or_else(root_reference),
            None => root_reference(),
        };
        (uv[p], axis)
    }

    /// Captures the current placement of `segment` and its descendants.
    pub fn pin(&self, uv: &[Vec2<T>], segment: usize) -> Pin<T> {
        let first = self.segments.segments[segment].first();
        let (origin, axis) = self.frame(uv, first);
        let uv = self.tree.descendants(first).iter().map(|&q| uv[q]).collect();
        Pin { segment, uv, origin, axis }
    }

    /// Segments whose layout is fixed by a pin.
    pub fn pinned_segments(&self, pins: &[Pin<T>]) -> Vec<bool> {
        let mut out = vec![false; self.segment_count()];
        for pin in pins {
            let first = self.segments.segments[pin.segment].first();
            for &q in self.tree.descendants(first) {
                out[self.segment_of[q]] = true;
            }
        }
        out
    }

    /// Node placement for flat ratios `[r_l0, r_a0, r_l1, r_a1, ...]`.
    pub fn realize_flat(&self, ratios: &[T], pins: &[Pin<T>]) -> Vec<Vec2<T>> {
        let tree = self.tree;
        let order = tree.preorder();
        let mut uv = vec![Vec2::zero(); tree.len()];
        // unit direction of each node's incoming edge
        let mut dir_in = vec![Vec2::zero(); tree.len()];
        let mut k = 1;
        while k < order.len() {
            let n = order[k];
            let p = tree.parent(n).expect("preorder past the root");
            if let Some(pin) = pins.iter().find(|pin| self.segments.segments[pin.segment].first() == n) {
                let (o, e1) = self.frame(&uv, n);
                let block = tree.descendants(n);
                // an unchanged frame reproduces the pinned coordinates bit for bit
                let same = o == pin.origin && e1 == pin.axis;
                let (c, s) = (pin.axis.dot(e1), pin.axis.perp_dot(e1));
                for (&q, &at) in block.iter().zip(&pin.uv) {
                    uv[q] = if same {
                        at
                    } else {
                        let d = at - pin.origin;
                        o + Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y)
                    };
                    let qp = tree.parent(q).expect("block nodes have parents");
                    dir_in[q] = (uv[q] - uv[qp]).normalized().unwrap_or_else(|| -root_reference());
                }
                k += block.len();
                continue;
            }
            let s = self.segment_of[n];
            let (rl, ra) = (ratios[2 * s], ratios[2 * s + 1]);
            let reference = if p == tree.root() { root_reference() } else { -dir_in[p] };
            let dir = reference.rotated(adjust_angle(self.theta[n], ra));
            uv[n] = uv[p] + dir * ((T::one() + rl) * self.length[n]);
            dir_in[n] = dir;
            k += 1;
        }
        uv
    }

    pub fn realize(&self, ratios: &[[T; 2]], pins: &[Pin<T>]) -> Vec<Vec2<T>> {
        self.realize_flat(&super::flatten(ratios), pins)
    }
}

/// Public form of the realization step.
pub fn realize_layout<T: Real>(
    tree: &SkeletonTree<T>,
    segments: &Segmentation,
    targets: &TargetAngles<T>,
    ratios: &[[T; 2]],
    pins: &[Pin<T>],
) -> Vec<Vec2<T>> {
    LayoutModel::new(tree, segments, targets).realize(ratios, pins)
}
