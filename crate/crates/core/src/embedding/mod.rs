//! Planar embedding by per-segment length and angle ratios.
//!
//! Every segment carries one length ratio `r_l ∈ [0, 2]` and one angle ratio
//! `r_a ∈ [-1, 1]`. A layout is realized by forward kinematics from the root
//! and scored by
//!
//! ```text
//! E_p = Σ_i w_l r_l,i² + w_a r_a,i² + w_X X_i
//! ```
//!
//! where `X_i` counts capsule overlaps involving segment `i`. The solver is a
//! particle swarm seeded with the identity ratios and a crossing-free radial
//! layout.

mod crossing;
mod layout;
mod radial;
mod solver;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::scalar::Real;
use crate::skeleton::{NodeId, SkeletonTree};

pub use crossing::{count_crossings, count_crossings_brute, Crossings};
pub use layout::{realize_layout, LayoutModel, Pin};
pub use radial::{radial_seed, RadialSeed};
pub use solver::{apply_edit, embedding_energy, solve, solve_pinned, validate_edit, EditError, CONVERGED_ENERGY};

pub const RL_MAX: f64 = 2.0;

/// Swarm seed for the `index`-th edit of a run started with `base`.
pub fn edit_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64 + 1)
}

/// Embedded node angle for target `theta` under angle ratio `ra`.
///
/// Positive ratios pull the angle toward a straight line, negative ratios
/// push it away, and the side of the bend never flips.
pub fn adjust_angle<T: Real>(theta: T, ra: T) -> T {
    let pi = T::PI();
    match (theta <= pi, ra >= T::zero()) {
        (true, true) => theta + (pi - theta) * ra,
        (true, false) => (T::one() + ra) * theta,
        (false, true) => theta - (theta - pi) * ra,
        (false, false) => theta - (T::two_pi() - theta) * ra,
    }
}

/// Ratio that maps `theta` as close as possible to `desired`, clamped to
/// `[-1, 1]`.
pub fn invert_angle<T: Real>(theta: T, desired: T) -> T {
    let pi = T::PI();
    let tiny = T::lit(1e-12);
    let r = if theta <= pi {
        if desired >= theta {
            let span = pi - theta;
            if span > tiny { (desired - theta) / span } else { T::zero() }
        } else if theta > tiny {
            desired / theta - T::one()
        } else {
            T::zero()
        }
    } else if desired <= theta {
        (theta - desired) / (theta - pi)
    } else {
        let span = T::two_pi() - theta;
        if span > tiny { -(desired - theta) / span } else { T::zero() }
    };
    r.max(-T::one()).min(T::one())
}

/// Weight on the crossing term: a fixed value or derived from the others.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrossingWeight {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl CrossingWeight {
    pub const AUTO: Self = CrossingWeight::Auto(AutoTag::Auto);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EnergyWeights {
    pub wl: f64,
    pub wa: f64,
    pub wx: CrossingWeight,
    /// Segment index → `[w_l, w_a]`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_segment: BTreeMap<usize, [f64; 2]>,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self { wl: 2.0, wa: 2.0, wx: CrossingWeight::AUTO, per_segment: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedWeights<T> {
    pub wl: Vec<T>,
    pub wa: Vec<T>,
    pub wx: T,
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        let wx_ok = match self.wx {
            CrossingWeight::Fixed(v) => ok(v),
            CrossingWeight::Auto(_) => true,
        };
        if !(ok(self.wl) && ok(self.wa) && wx_ok && self.per_segment.values().all(|w| ok(w[0]) && ok(w[1]))) {
            return Err("weights must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Per-segment weights for `m` segments. `auto` becomes 1.5 times the
    /// largest possible length plus angle loss.
    pub fn resolve<T: Real>(&self, m: usize) -> ResolvedWeights<T> {
        let pair = |i: usize| self.per_segment.get(&i).copied().unwrap_or([self.wl, self.wa]);
        let wl: Vec<f64> = (0..m).map(|i| pair(i)[0]).collect();
        let wa: Vec<f64> = (0..m).map(|i| pair(i)[1]).collect();
        let wx = match self.wx {
            CrossingWeight::Fixed(v) => v,
            CrossingWeight::Auto(_) => {
                let rl2 = RL_MAX * RL_MAX;
                1.5 * wl.iter().zip(&wa).map(|(l, a)| rl2 * l + a).sum::<f64>()
            }
        };
        ResolvedWeights {
            wl: wl.into_iter().map(T::lit).collect(),
            wa: wa.into_iter().map(T::lit).collect(),
            wx: T::lit(wx),
        }
    }
}

impl<T: Real> ResolvedWeights<T> {
    /// Length and angle part of the energy.
    pub fn ratio_energy(&self, ratios: &[[T; 2]]) -> T {
        ratios
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, r)| acc + self.wl[i] * r[0] * r[0] + self.wa[i] * r[1] * r[1])
    }

    pub fn energy(&self, ratios: &[[T; 2]], crossings: &Crossings) -> T {
        let x: usize = crossings.per_segment.iter().sum();
        self.ratio_energy(ratios) + self.wx * T::lit(x as f64)
    }
}

/// A solved planar layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct EmbeddingSolution<T> {
    pub uv: BTreeMap<NodeId, Vec2<T>>,
    pub ratios: Vec<[T; 2]>,
    pub energy: T,
    pub crossings: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Direction of the root's reference edge in the layout.
    pub root_direction: Vec2<T>,
    /// True when the radial seed layout was returned instead of the swarm
    /// best.
    #[serde(default)]
    pub radial_fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pins: Vec<Pin<T>>,
    /// Best energy after each swarm round.
    #[serde(skip)]
    pub history: Vec<T>,
}

impl<T: Real> EmbeddingSolution<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Layout indexed like the tree. `None` if a node is missing.
    pub fn dense_uv(&self, tree: &SkeletonTree<T>) -> Option<Vec<Vec2<T>>> {
        (0..tree.len()).map(|i| self.uv.get(&tree.id(i)).copied()).collect()
    }

    /// Crossing-free.
    pub fn is_valid(&self) -> bool {
        self.crossings == 0
    }

    pub fn is_finite(&self) -> bool {
        self.energy.is_finite()
            && self.uv.values().all(|p| p.is_finite())
            && self.ratios.iter().flatten().all(|r| r.is_finite())
    }
}

pub(crate) fn flatten<T: Copy>(ratios: &[[T; 2]]) -> Vec<T> {
    ratios.iter().flat_map(|r| r.iter().copied()).collect()
}

pub(crate) fn unflatten<T: Copy>(flat: &[T]) -> Vec<[T; 2]> {
    flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}
