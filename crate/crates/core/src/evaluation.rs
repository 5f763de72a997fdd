//! Length and angle losses of an embedding against its targets.
//!
//! Metric 1 compares embedded node angles with the projected target angles;
//! Metric 2 compares folded embedded angles with the acute 3D angles. Both
//! use the 3D edge lengths as the length reference. Sums run over nodes and
//! averages divide the sum by the node count.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embedding::{count_crossings, EmbeddingSolution};
use crate::geom::{ccw_angle, Vec2};
use crate::projection::TargetAngles;
use crate::scalar::Real;
use crate::skeleton::{NodeId, Segmentation, SkeletonTree};

/// Target angles below this are left out of the angle loss.
pub const MIN_TARGET_ANGLE: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricLoss {
    #[serde(rename = "L_l")]
    pub length_sum: f64,
    #[serde(rename = "L_a")]
    pub angle_sum: f64,
    #[serde(rename = "maxPerNode_l")]
    pub length_max: f64,
    #[serde(rename = "maxPerNode_a")]
    pub angle_max: f64,
    #[serde(rename = "avg_l")]
    pub length_avg: f64,
    #[serde(rename = "avg_a")]
    pub angle_avg: f64,
    /// Nodes whose reference angle was too small to divide by.
    pub excluded: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeometryLossReport {
    pub metric1: MetricLoss,
    pub metric2: MetricLoss,
    pub crossings: usize,
    pub node_count: usize,
    /// Nodes whose target angle came from a degenerate projection.
    pub degenerate_targets: usize,
}

/// Smallest absolute difference between two angles on the circle.
fn angle_gap<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs() % T::two_pi();
    d.min(T::two_pi() - d)
}

/// Counterclockwise angle at `n`'s parent in the layout, measured like the
/// targets (virtual grandparent below the root).
pub fn embedded_angle<T: Real>(tree: &SkeletonTree<T>, uv: &[Vec2<T>], n: usize) -> Option<T> {
    let p = tree.parent(n)?;
    let back = match tree.parent(p) {
        Some(g) => uv[g] - uv[p],
        None => Vec2::new(T::zero(), -T::one()),
    };
    ccw_angle(back, uv[n] - uv[p], T::zero())
}

fn accumulate(
    node_count: usize,
    lengths: impl Iterator<Item = f64>,
    angles: impl Iterator<Item = (NodeId, Option<f64>)>,
) -> MetricLoss {
    let mut m = MetricLoss::default();
    for l in lengths {
        m.length_sum += l;
        m.length_max = m.length_max.max(l);
    }
    for (id, a) in angles {
        match a {
            Some(a) => {
                m.angle_sum += a;
                m.angle_max = m.angle_max.max(a);
            }
            None => m.excluded.push(id),
        }
    }
    let n = node_count.max(1) as f64;
    m.length_avg = m.length_sum / n;
    m.angle_avg = m.angle_sum / n;
    m
}

fn length_losses<'a, T: Real>(tree: &'a SkeletonTree<T>, uv: &'a [Vec2<T>]) -> impl Iterator<Item = f64> + 'a {
    tree.edge_nodes().map(move |n| {
        let p = tree.parent(n).expect("edge node");
        let l = tree.edge_length(n);
        ((l - (uv[n] - uv[p]).norm()).abs() / l).to_f64_lossy()
    })
}

pub fn metric1<T: Real>(tree: &SkeletonTree<T>, uv: &[Vec2<T>], targets: &TargetAngles<T>) -> MetricLoss {
    let min = T::lit(MIN_TARGET_ANGLE);
    let angles = tree.edge_nodes().map(|n| {
        let loss = targets.per_node[n].filter(|&t| t >= min).map(|t| {
            let e = embedded_angle(tree, uv, n).unwrap_or(t);
            (angle_gap(t, e) / t).to_f64_lossy()
        });
        (tree.id(n), loss)
    });
    accumulate(tree.len(), length_losses(tree, uv), angles)
}

pub fn metric2<T: Real>(tree: &SkeletonTree<T>, uv: &[Vec2<T>], targets: &TargetAngles<T>) -> MetricLoss {
    let min = T::lit(MIN_TARGET_ANGLE);
    let pi = T::PI();
    let angles = tree.edge_nodes().filter(|&n| tree.grandparent(n).is_some()).map(|n| {
        let loss = targets.per_node_3d[n].filter(|&t| t >= min).map(|t| {
            let e = embedded_angle(tree, uv, n).map_or(t, |e| {
                let a = if e > pi { T::two_pi() - e } else { e };
                a.min(pi - a)
            });
            ((t - e).abs() / t).to_f64_lossy()
        });
        (tree.id(n), loss)
    });
    accumulate(tree.len(), length_losses(tree, uv), angles)
}

/// Both metrics plus the crossing count of `solution`.
pub fn report<T: Real>(
    tree: &SkeletonTree<T>,
    segments: &Segmentation,
    solution: &EmbeddingSolution<T>,
    targets: &TargetAngles<T>,
) -> Option<GeometryLossReport> {
    let uv = solution.dense_uv(tree)?;
    Some(GeometryLossReport {
        metric1: metric1(tree, &uv, targets),
        metric2: metric2(tree, &uv, targets),
        crossings: count_crossings(tree, segments, &uv).total,
        node_count: tree.len(),
        degenerate_targets: targets.degenerate.len(),
    })
}

impl GeometryLossReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table with one row per metric.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# N = {}, Avg = sum / N, crossings = {}", self.node_count, self.crossings);
        let _ = writeln!(s, "{:<8} {:>12} {:>12} {:>12} {:>12}", "metric", "Max L(a)", "Avg L(a)", "Max L(l)", "Avg L(l)");
        for (name, m) in [("metric1", &self.metric1), ("metric2", &self.metric2)] {
            let _ = writeln!(
                s,
                "{:<8} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                name, m.angle_max, m.angle_avg, m.length_max, m.length_avg
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{parse_swc, segment_tree};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    fn targets(n: usize, theta: Vec<Option<f64>>, acute: Vec<Option<f64>>) -> TargetAngles<f64> {
        TargetAngles { per_node: theta, per_node_3d: acute, plane_of: vec![None; n], degenerate: vec![] }
    }

    #[test]
    fn stretched_edge_contributes_its_ratio() {
        let t = parse_swc::<f64>("1 0 0 0 0 1 -1\n2 0 0 2 0 1 1\n").unwrap();
        let uv = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 2.2)];
        let tg = targets(2, vec![None, Some(PI)], vec![None, None]);
        let m = metric1(&t, &uv, &tg);
        assert!((m.length_sum - 0.1).abs() < 1e-12);
        assert!(m.angle_sum.abs() < 1e-12);
        assert!((m.length_avg - 0.05).abs() < 1e-12);
    }

    #[test]
    fn folded_elbow_loss() {
        let t = parse_swc::<f64>("1 0 0 0 0 1 -1\n2 0 0 1 0 1 1\n3 0 1 1 0 1 2\n").unwrap();
        // embedded turn of 45° away from the parent ray
        let uv = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 2.0)];
        let tg = targets(3, vec![None, Some(PI), Some(PI)], vec![None, None, Some(FRAC_PI_3)]);
        let m = metric2(&t, &uv, &tg);
        assert!((m.angle_sum - (FRAC_PI_3 - FRAC_PI_4) / FRAC_PI_3).abs() < 1e-12);
        assert!((m.angle_sum - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tiny_targets_are_excluded() {
        let t = parse_swc::<f64>("1 0 0 0 0 1 -1\n2 0 0 1 0 1 1\n3 0 0 2 0 1 2\n").unwrap();
        let uv = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, 2.0)];
        let tg = targets(3, vec![None, Some(PI), Some(0.0)], vec![None, None, Some(0.0)]);
        let m = metric1(&t, &uv, &tg);
        assert_eq!(m.excluded, vec![3]);
        let s = segment_tree(&t);
        let sol = EmbeddingSolution {
            uv: (0..3).map(|i| (t.id(i), uv[i])).collect(),
            ratios: vec![[0.0, 0.0]],
            energy: 0.0,
            crossings: 0,
            iterations: 1,
            seed: 0,
            root_direction: Vec2::new(0.0, 1.0),
            radial_fallback: false,
            pins: vec![],
            history: vec![],
        };
        let r = report(&t, &s, &sol, &tg).unwrap();
        let back: GeometryLossReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.table().contains("Avg L(a)"));
    }
}
