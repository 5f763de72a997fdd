//! View information of a skeleton under orthographic projection and the
//! search for per-subtree best views.
//!
//! For a set of 3D edges `O` with lengths `l_o`, `p(o) = l_o / Σ l` and
//! `p(o|v)` is the same ratio after projecting every edge along the view
//! direction. The information of a view is the divergence
//! `Σ p(o|v) log₂(p(o|v) / p(o))`. It is zero exactly when projection keeps
//! every length ratio, so best views are minimizers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::pso::{Bounds, Swarm, SwarmConfig};
use crate::scalar::Real;
use crate::skeleton::{EnhancedTree, NodeId, SkeletonTree, SubtreeHierarchy};

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error("degenerate view: every edge is parallel to the view direction")]
    DegenerateView,
    #[error("subtree rooted at node {0} has no edges to view")]
    DegenerateSubtree(NodeId),
    #[error("edge set has zero total length")]
    EmptyEdgeSet,
    #[error("camera pose has coincident position and look-at point")]
    InvalidPose,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct CameraPose<T> {
    pub position: Vec3<T>,
    pub look_at: Vec3<T>,
    pub up: Vec3<T>,
}

impl<T: Real> CameraPose<T> {
    /// Pose looking from `position` at `look_at` with the default up vector.
    pub fn looking_at(position: Vec3<T>, look_at: Vec3<T>) -> Result<Self, ViewError> {
        let dir = (look_at - position).normalized().ok_or(ViewError::InvalidPose)?;
        Ok(Self { position, look_at, up: default_up(dir) })
    }

    /// Unit look-at direction.
    pub fn direction(&self) -> Vec3<T> {
        (self.look_at - self.position).normalized().expect("valid pose")
    }

    /// Camera right vector, `direction × up`.
    pub fn right(&self) -> Vec3<T> {
        self.direction().cross(self.up)
    }

    pub fn distance(&self) -> T {
        self.position.distance(self.look_at)
    }
}

/// World +Z projected onto the plane orthogonal to `dir`; +X when `dir` is
/// (nearly) vertical.
pub fn default_up<T: Real>(dir: Vec3<T>) -> Vec3<T> {
    let fallback = dir.dot(Vec3::unit_z()).abs() > T::one() - T::lit(1e-6);
    let world = if fallback { Vec3::unit_x() } else { Vec3::unit_z() };
    world.reject(dir).normalized().expect("non-parallel reference axis")
}

/// Precomputed edge vectors and length distribution `p(o)`.
#[derive(Clone, Debug)]
pub struct EdgeSet<T> {
    vectors: Vec<Vec3<T>>,
    prior: Vec<T>,
}

impl<T: Real> EdgeSet<T> {
    pub fn new(vectors: Vec<Vec3<T>>) -> Result<Self, ViewError> {
        let lengths: Vec<T> = vectors.iter().map(|v| v.norm()).collect();
        let total = lengths.iter().fold(T::zero(), |a, &b| a + b);
        if !(total > T::zero()) {
            return Err(ViewError::EmptyEdgeSet);
        }
        Ok(Self { vectors, prior: lengths.into_iter().map(|l| l / total).collect() })
    }

    pub fn from_segments(segments: impl IntoIterator<Item = (Vec3<T>, Vec3<T>)>) -> Result<Self, ViewError> {
        Self::new(segments.into_iter().map(|(a, b)| b - a).collect())
    }

    /// Edges of `etree` (real and imaginary) with both endpoints in `filter`.
    pub fn from_enhanced(etree: &EnhancedTree<T>, filter: &[usize]) -> Result<Self, ViewError> {
        let mut mask = vec![false; etree.base.len()];
        for &n in filter {
            mask[n] = true;
        }
        let tree = &etree.base;
        Self::new(
            etree
                .edges()
                .filter(|&(a, b, _)| mask[a] && mask[b])
                .map(|(a, b, _)| tree.position(b) - tree.position(a))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Information of an orthographic view along unit direction `dir`.
    pub fn information(&self, dir: Vec3<T>) -> Result<T, ViewError> {
        let projected: Vec<T> = self.vectors.iter().map(|v| v.reject(dir).norm()).collect();
        let total = projected.iter().fold(T::zero(), |a, &b| a + b);
        if !(total > T::zero()) {
            return Err(ViewError::DegenerateView);
        }
        // Summed as p·φ(q/p − 1) with φ(x) = (1+x)ln(1+x) − x. Both
        // distributions sum to one, so this equals Σ q log(q/p), but every
        // term is non-negative and small ratios keep their precision.
        let mut info = T::zero();
        for (&proj, &prior) in projected.iter().zip(&self.prior) {
            if prior > T::zero() {
                let x = proj / total / prior - T::one();
                let xlogx = if x > -T::one() { (T::one() + x) * x.ln_1p() } else { T::zero() };
                info = info + prior * (xlogx - x);
            }
        }
        Ok(info.max(T::zero()) / T::LN_2())
    }
}

/// Information of `view` over the enhanced-tree edges whose endpoints both
/// lie in `filter`.
pub fn view_information<T: Real>(
    view: &CameraPose<T>,
    etree: &EnhancedTree<T>,
    filter: &[usize],
) -> Result<T, ViewError> {
    let dir = (view.look_at - view.position).normalized().ok_or(ViewError::InvalidPose)?;
    EdgeSet::from_enhanced(etree, filter)?.information(dir)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ViewSearchConfig {
    /// Camera distance as a multiple of the subtree radius.
    pub beta: f64,
    pub swarm: SwarmConfig,
    pub objective: Objective,
    /// Finish the swarm with a local pattern search around its best view.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn yes() -> bool {
    true
}

impl Default for ViewSearchConfig {
    fn default() -> Self {
        Self {
            beta: 1.5,
            swarm: SwarmConfig { particles: 256, max_iterations: 60, ..SwarmConfig::default() },
            objective: Objective::Minimize,
            refine: true,
        }
    }
}

/// Length-weighted center and enclosing radius of a node set, using the
/// real edges inside it. Each node carries half the length of its incident
/// edges.
pub fn weighted_center<T: Real>(tree: &SkeletonTree<T>, filter: &[usize]) -> Option<(Vec3<T>, T)> {
    let mut mask = vec![false; tree.len()];
    for &n in filter {
        mask[n] = true;
    }
    let mut weight = vec![T::zero(); tree.len()];
    let half = T::lit(0.5);
    for &n in filter {
        if let Some(p) = tree.parent(n).filter(|&p| mask[p]) {
            let w = tree.edge_length(n) * half;
            weight[n] = weight[n] + w;
            weight[p] = weight[p] + w;
        }
    }
    let total = filter.iter().fold(T::zero(), |a, &n| a + weight[n]);
    if !(total > T::zero()) {
        return None;
    }
    let center = filter.iter().fold(Vec3::zero(), |a, &n| a + tree.position(n) * weight[n]) / total;
    let radius = filter.iter().fold(T::zero(), |r, &n| r.max(tree.position(n).distance(center)));
    Some((center, radius))
}

/// Point on the sphere at the given azimuth and polar angle.
pub fn sphere_point<T: Real>(center: Vec3<T>, radius: T, azimuth: T, polar: T) -> Vec3<T> {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    center + Vec3::new(sp * ca, sp * sa, cp) * radius
}

#[derive(Clone, Debug)]
pub struct BestView<T> {
    pub pose: CameraPose<T>,
    pub energy: T,
    pub center: Vec3<T>,
    /// Enclosing radius `R` of the subtree.
    pub principal_radius: T,
    /// Camera distance `D = β R`.
    pub distance: T,
    /// Every candidate energy the swarm evaluated, per round.
    pub probes: Option<Vec<Vec<T>>>,
}

/// Compass search over view directions in the tangent plane of the current
/// best, halving the step until it falls below 1e-10 rad.
fn pattern_search<T: Real>(mut dir: Vec3<T>, mut energy: T, f: impl Fn(Vec3<T>) -> T) -> (Vec3<T>, T) {
    let mut step = T::lit(0.05);
    let mut budget = 4000;
    while step > T::lit(1e-10) && budget > 0 {
        let e1 = default_up(dir);
        let e2 = dir.cross(e1);
        let mut moved = false;
        for axis in [e1, -e1, e2, -e2] {
            let Some(cand) = (dir + axis * step).normalized() else { continue };
            let e = f(cand);
            budget -= 1;
            if e < energy {
                dir = cand;
                energy = e;
                moved = true;
            }
        }
        if !moved {
            step = step / T::lit(2.0);
        }
    }
    (dir, energy)
}

/// Best view of the node set `filter` on the sphere of radius `β R`
/// around its weighted center.
pub fn find_best_view<T: Real>(
    etree: &EnhancedTree<T>,
    filter: &[usize],
    config: &ViewSearchConfig,
) -> Result<BestView<T>, ViewError> {
    find_best_view_traced(etree, filter, config, false)
}

pub fn find_best_view_traced<T: Real>(
    etree: &EnhancedTree<T>,
    filter: &[usize],
    config: &ViewSearchConfig,
    keep_probes: bool,
) -> Result<BestView<T>, ViewError> {
    let tree = &etree.base;
    let label = filter.first().map_or(tree.root_id(), |&n| tree.id(n));
    let (center, principal_radius) =
        weighted_center(tree, filter).ok_or(ViewError::DegenerateSubtree(label))?;
    let edges = EdgeSet::from_enhanced(etree, filter).map_err(|_| ViewError::DegenerateSubtree(label))?;
    let distance = T::lit(config.beta) * principal_radius;
    let sign = match config.objective {
        Objective::Minimize => T::one(),
        Objective::Maximize => -T::one(),
    };

    let energy_dir = |dir: Vec3<T>| -> T {
        match edges.information(dir) {
            Ok(i) => sign * i,
            Err(_) => T::infinity(),
        }
    };
    let energy_at = |x: &[T]| energy_dir(-sphere_point(Vec3::zero(), T::one(), x[0], x[1]));
    let bounds = Bounds { lo: vec![T::zero(), T::zero()], hi: vec![T::two_pi(), T::PI()] };
    let mut swarm = Swarm::new(&config.swarm, bounds);
    swarm.keep_probes = keep_probes;
    let result = swarm.run(energy_at, |_, _| {});
    if !result.best_energy.is_finite() {
        return Err(ViewError::DegenerateView);
    }
    let (az, polar) = (result.best_position[0], result.best_position[1]);
    let mut dir = -sphere_point(Vec3::zero(), T::one(), az, polar);
    let mut best_energy = result.best_energy;
    if config.refine {
        (dir, best_energy) = pattern_search(dir, best_energy, energy_dir);
    }
    let pose = CameraPose::looking_at(center - dir * distance, center)?;
    let probes = result.probes.map(|rows| {
        rows.into_iter().map(|r| r.into_iter().map(|e| sign * e).collect()).collect()
    });
    Ok(BestView {
        pose,
        energy: sign * best_energy,
        center,
        principal_radius,
        distance,
        probes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct ViewEntry<T> {
    pub level: usize,
    /// Index into the subtree hierarchy.
    pub subtree: usize,
    pub subtree_root: NodeId,
    pub pose: CameraPose<T>,
    pub energy: T,
    pub center: Vec3<T>,
    pub principal_radius: T,
    pub distance: T,
}

/// Optimized view per subtree, in hierarchy order (parents first).
#[derive(Clone, Debug, PartialEq)]
pub struct ViewHierarchy<T> {
    pub entries: Vec<ViewEntry<T>>,
}

impl<T: Real> ViewHierarchy<T> {
    pub fn for_subtree(&self, subtree: usize) -> &ViewEntry<T> {
        &self.entries[subtree]
    }

    pub fn count_at_level(&self, level: usize) -> usize {
        self.entries.iter().filter(|e| e.level == level).count()
    }

    pub fn to_json(&self) -> String {
        let views: Vec<ViewJson<T>> = self
            .entries
            .iter()
            .map(|e| ViewJson {
                level: e.level,
                subtree_root: e.subtree_root,
                position: e.pose.position.into(),
                look_at: e.pose.look_at.into(),
                up: e.pose.up.into(),
                energy: e.energy,
            })
            .collect();
        serde_json::to_string_pretty(&ViewsDoc { views }).expect("views serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct ViewJson<T> {
    pub level: usize,
    pub subtree_root: NodeId,
    pub position: [T; 3],
    pub look_at: [T; 3],
    pub up: [T; 3],
    pub energy: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ViewsDoc<T> {
    pub views: Vec<ViewJson<T>>,
}

fn subtree_seed(seed: u64, subtree: usize) -> u64 {
    seed ^ (subtree as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Finds one view per subtree. A child view whose direction points away
/// from its parent's is mirrored through the subtree center; the
/// information is unchanged and neighbouring principal planes keep the
/// same orientation.
pub fn build_view_hierarchy<T: Real>(
    etree: &EnhancedTree<T>,
    hierarchy: &SubtreeHierarchy,
    config: &ViewSearchConfig,
) -> Result<ViewHierarchy<T>, ViewError> {
    let tree = &etree.base;
    let mut entries: Vec<ViewEntry<T>> = Vec::with_capacity(hierarchy.subtrees.len());
    for sub in &hierarchy.subtrees {
        let mut cfg = config.clone();
        cfg.swarm.seed = subtree_seed(config.swarm.seed, sub.id);
        let filter = sub.view_filter(tree);
        let best = find_best_view(etree, &filter, &cfg).map_err(|e| match e {
            ViewError::DegenerateSubtree(_) => ViewError::DegenerateSubtree(sub.root_id),
            other => other,
        })?;
        let mut pose = best.pose;
        if let Some(parent) = sub.parent {
            let pdir = entries[parent].pose.direction();
            if pose.direction().dot(pdir) < T::zero() {
                let mirrored = best.center * T::lit(2.0) - pose.position;
                pose = CameraPose::looking_at(mirrored, best.center)?;
            }
        }
        entries.push(ViewEntry {
            level: sub.level,
            subtree: sub.id,
            subtree_root: sub.root_id,
            pose,
            energy: best.energy,
            center: best.center,
            principal_radius: best.principal_radius,
            distance: best.distance,
        });
    }
    Ok(ViewHierarchy { entries })
}
