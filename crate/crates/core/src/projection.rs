//! Target node angles from local principal planes.
//!
//! Each branching set (a branching node, its parent and its children) and
//! each segment is projected onto the plane of the deepest subtree view
//! that contains it. A node's target angle is the counterclockwise angle
//! at its parent from the parent→grandparent ray to the parent→node ray,
//! measured in that plane.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{angle_between, ccw_angle, Vec2, Vec3};
use crate::scalar::Real;
use crate::skeleton::{NodeId, Segmentation, SkeletonTree, SubtreeHierarchy};
use crate::viewpoint::{ViewEntry, ViewHierarchy};

/// Plane through a subtree center, orthogonal to the view direction, with a
/// right-handed in-plane basis (`x_axis × y_axis = normal`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrincipalPlane<T> {
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
    pub x_axis: Vec3<T>,
    pub y_axis: Vec3<T>,
}

impl<T: Real> PrincipalPlane<T> {
    /// Plane with the given normal; `up` is made orthogonal to it and
    /// becomes the y axis.
    pub fn new(point: Vec3<T>, normal: Vec3<T>, up: Vec3<T>) -> Option<Self> {
        let normal = normal.normalized()?;
        let y_axis = up.reject(normal).normalized()?;
        let x_axis = y_axis.cross(normal);
        Some(Self { point, normal, x_axis, y_axis })
    }

    pub fn project(&self, p: Vec3<T>) -> Vec2<T> {
        let d = p - self.point;
        Vec2::new(d.dot(self.x_axis), d.dot(self.y_axis))
    }

    /// Inverse of [`project`](Self::project) for points in the plane.
    pub fn lift(&self, uv: Vec2<T>) -> Vec3<T> {
        self.point + self.x_axis * uv.x + self.y_axis * uv.y
    }
}

pub fn principal_plane<T: Real>(entry: &ViewEntry<T>) -> PrincipalPlane<T> {
    PrincipalPlane::new(entry.center, entry.pose.look_at - entry.pose.position, entry.pose.up)
        .expect("view entries hold valid poses")
}

pub fn project_point<T: Real>(p: Vec3<T>, plane: &PrincipalPlane<T>) -> Vec2<T> {
    plane.project(p)
}

/// Target angles per node, indexed densely like the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetAngles<T> {
    /// Counterclockwise target angle in `[0, 2π)` for every non-root node.
    pub per_node: Vec<Option<T>>,
    /// Acute 3D angle between a node's edge and its parent edge, in
    /// `[0, π/2]`; only for nodes with a real grandparent.
    pub per_node_3d: Vec<Option<T>>,
    /// Subtree whose plane produced each target.
    pub plane_of: Vec<Option<usize>>,
    /// Nodes whose projection collapsed and took a fallback angle.
    pub degenerate: Vec<usize>,
}

impl<T: Real> TargetAngles<T> {
    pub fn theta(&self, ix: usize) -> Option<T> {
        self.per_node[ix]
    }

    pub fn to_json(&self, tree: &SkeletonTree<T>) -> String {
        let doc = TargetsDoc {
            per_node: collect_map(tree, &self.per_node),
            per_node_3d: collect_map(tree, &self.per_node_3d),
            degenerate: self.degenerate.iter().map(|&i| tree.id(i)).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("targets serialize")
    }
}

fn collect_map<T: Real>(tree: &SkeletonTree<T>, v: &[Option<T>]) -> BTreeMap<NodeId, T> {
    v.iter().enumerate().filter_map(|(i, a)| a.map(|a| (tree.id(i), a))).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
struct TargetsDoc<T> {
    per_node: BTreeMap<NodeId, T>,
    #[serde(rename = "perNode3D")]
    per_node_3d: BTreeMap<NodeId, T>,
    degenerate: Vec<NodeId>,
}

/// Acute angle between the edge into `n` and its parent edge.
pub fn acute_reference_angle<T: Real>(tree: &SkeletonTree<T>, n: usize) -> Option<T> {
    let p = tree.parent(n)?;
    let g = tree.parent(p)?;
    let a = angle_between(tree.position(g) - tree.position(p), tree.position(n) - tree.position(p))?;
    Some(a.min(T::PI() - a))
}

pub fn compute_target_angles<T: Real>(
    tree: &SkeletonTree<T>,
    segments: &Segmentation,
    hierarchy: &SubtreeHierarchy,
    views: &ViewHierarchy<T>,
) -> TargetAngles<T> {
    let n = tree.len();
    let eps = T::lit(1e-9);
    let planes: Vec<PrincipalPlane<T>> = views.entries.iter().map(principal_plane).collect();
    let mut out = TargetAngles {
        per_node: vec![None; n],
        per_node_3d: (0..n).map(|i| acute_reference_angle(tree, i)).collect(),
        plane_of: vec![None; n],
        degenerate: Vec::new(),
    };

    // Segments come in preorder, so a parent's angle is known before its
    // children's.
    for seg in segments.iter() {
        let chain_plane = hierarchy.deepest_containing(tree, &seg.nodes);
        for (k, &node) in seg.nodes.iter().enumerate() {
            let p = tree.parent(node).expect("segment nodes have parents");
            let plane_ix = if k == 0 && tree.is_branching(p) {
                let mut set = vec![p];
                set.extend(tree.grandparent(node));
                set.extend_from_slice(tree.children(p));
                hierarchy.deepest_containing(tree, &set)
            } else {
                chain_plane
            };
            let plane = &planes[plane_ix];
            let pp = plane.project(tree.position(p));
            let pn = plane.project(tree.position(node));
            let pg = match tree.parent(p) {
                Some(g) => plane.project(tree.position(g)),
                // virtual grandparent one unit below the root along -y
                None => pp - Vec2::new(T::zero(), T::one()),
            };
            let theta = match ccw_angle(pg - pp, pn - pp, eps) {
                Some(a) => a,
                None => {
                    out.degenerate.push(node);
                    out.per_node[p].unwrap_or_else(T::PI)
                }
            };
            out.per_node[node] = Some(theta);
            out.plane_of[node] = Some(plane_ix);
        }
    }
    out
}
