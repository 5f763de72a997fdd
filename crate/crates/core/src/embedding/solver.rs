//! Swarm search over ratio sets, and edit-constrained re-solves.

use std::collections::BTreeMap;

use thiserror::Error;

use super::layout::{root_reference, LayoutModel, Pin};
use super::radial::radial_seed;
use super::{count_crossings, flatten, unflatten, Crossings, EmbeddingSolution, EnergyWeights, ResolvedWeights, RL_MAX};
use crate::geom::Vec2;
use crate::pso::{Bounds, Swarm, SwarmConfig};
use crate::scalar::Real;
use crate::skeleton::NodeId;

/// Energies at or below this count as converged.
pub const CONVERGED_ENERGY: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EditError {
    #[error("unknown segment {0}")]
    UnknownSegment(usize),
    #[error("unknown node {0}")]
    UnknownAnchor(NodeId),
    #[error("node {anchor} is neither in segment {segment} nor its attachment node")]
    AnchorOutsideSegment { segment: usize, anchor: NodeId },
    #[error("solution does not match the tree")]
    Mismatch,
}

/// Energy and crossings of `ratios` realized with `pins`.
pub fn embedding_energy<T: Real>(
    model: &LayoutModel<'_, T>,
    ratios: &[[T; 2]],
    weights: &EnergyWeights,
    pins: &[Pin<T>],
) -> (T, Crossings) {
    let w = weights.resolve(model.segment_count());
    let uv = model.realize(ratios, pins);
    let c = count_crossings(model.tree, model.segments, &uv);
    (w.energy(ratios, &c), c)
}

struct Outcome<T> {
    ratios: Vec<[T; 2]>,
    uv: Vec<Vec2<T>>,
    crossings: Crossings,
    energy: T,
    iterations: usize,
    history: Vec<T>,
}

fn run<T: Real>(
    model: &LayoutModel<'_, T>,
    w: &ResolvedWeights<T>,
    cfg: &SwarmConfig,
    pins: &[Pin<T>],
    frozen: &[[T; 2]],
    seeds: Vec<Vec<T>>,
    progress: &mut dyn FnMut(usize, T),
) -> Outcome<T> {
    let m = model.segment_count();
    let pinned = model.pinned_segments(pins);
    let mut lo = Vec::with_capacity(2 * m);
    let mut hi = Vec::with_capacity(2 * m);
    for s in 0..m {
        if pinned[s] {
            lo.extend_from_slice(&frozen[s]);
            hi.extend_from_slice(&frozen[s]);
        } else {
            lo.extend_from_slice(&[T::zero(), -T::one()]);
            hi.extend_from_slice(&[T::lit(RL_MAX), T::one()]);
        }
    }
    let mut swarm = Swarm::new(cfg, Bounds { lo, hi });
    swarm.seeds = seeds;
    swarm.target = Some(T::lit(CONVERGED_ENERGY));

    let objective = |x: &[T]| {
        let uv = model.realize_flat(x, pins);
        let c = count_crossings(model.tree, model.segments, &uv);
        w.energy(&unflatten(x), &c)
    };
    let r = swarm.run(objective, |c, e| progress(c, e));

    let ratios = unflatten(&r.best_position);
    let uv = model.realize(&ratios, pins);
    let crossings = count_crossings(model.tree, model.segments, &uv);
    Outcome { energy: w.energy(&ratios, &crossings), ratios, uv, crossings, iterations: r.iterations, history: r.history }
}

fn to_solution<T: Real>(model: &LayoutModel<'_, T>, o: Outcome<T>, seed: u64, pins: Vec<Pin<T>>) -> EmbeddingSolution<T> {
    let tree = model.tree;
    EmbeddingSolution {
        uv: (0..tree.len()).map(|i| (tree.id(i), o.uv[i])).collect::<BTreeMap<_, _>>(),
        ratios: o.ratios,
        energy: o.energy,
        crossings: o.crossings.total,
        iterations: o.iterations,
        seed,
        root_direction: -root_reference::<T>(),
        radial_fallback: false,
        pins,
        history: o.history,
    }
}

/// Full solve. Particle 0 starts at the identity ratios and particle 1 at
/// the radial seed's ratios, so the result never scores worse than that
/// particle. If the swarm best still overlaps, the radial layout itself is
/// returned.
pub fn solve<T: Real>(
    model: &LayoutModel<'_, T>,
    weights: &EnergyWeights,
    cfg: &SwarmConfig,
    mut progress: impl FnMut(usize, T),
) -> EmbeddingSolution<T> {
    let m = model.segment_count();
    let w = weights.resolve(m);
    let radial = radial_seed(model);
    let zeros = vec![T::zero(); 2 * m];
    let seeds = vec![zeros, flatten(&radial.ratios)];
    let o = run(model, &w, cfg, &[], &vec![[T::zero(); 2]; m], seeds, &mut progress);
    if o.crossings.total == 0 || radial.crossings.total > 0 {
        return to_solution(model, o, cfg.seed, Vec::new());
    }
    let tree = model.tree;
    EmbeddingSolution {
        uv: (0..tree.len()).map(|i| (tree.id(i), radial.uv[i])).collect(),
        energy: radial.energy(&w),
        ratios: radial.ratios,
        crossings: radial.crossings.total,
        iterations: o.iterations,
        seed: cfg.seed,
        root_direction: -root_reference::<T>(),
        radial_fallback: true,
        pins: Vec::new(),
        history: o.history,
    }
}

/// Re-solve keeping `pins` fixed. Without pins this is a full [`solve`].
pub fn solve_pinned<T: Real>(
    model: &LayoutModel<'_, T>,
    current: &EmbeddingSolution<T>,
    weights: &EnergyWeights,
    cfg: &SwarmConfig,
    mut progress: impl FnMut(usize, T),
) -> EmbeddingSolution<T> {
    if current.pins.is_empty() {
        return solve(model, weights, cfg, progress);
    }
    let m = model.segment_count();
    let w = weights.resolve(m);
    let seeds = vec![flatten(&current.ratios), vec![T::zero(); 2 * m]];
    let o = run(model, &w, cfg, &current.pins, &current.ratios, seeds, &mut progress);
    to_solution(model, o, cfg.seed, current.pins.clone())
}

/// Checks that `anchor` may pivot `segment` and returns its node index.
pub fn validate_edit<T: Real>(model: &LayoutModel<'_, T>, segment: usize, anchor: NodeId) -> Result<usize, EditError> {
    let tree = model.tree;
    let seg = model.segments.segments.get(segment).ok_or(EditError::UnknownSegment(segment))?;
    let a = tree.ix(anchor).ok_or(EditError::UnknownAnchor(anchor))?;
    if tree.parent(seg.first()) != Some(a) && !seg.nodes.contains(&a) {
        return Err(EditError::AnchorOutsideSegment { segment, anchor });
    }
    Ok(a)
}

/// Rotates `segment` and everything below it by `rotation` radians about
/// `anchor`, pins the result and re-solves the remaining segments.
///
/// The anchor must lie on the segment or be the node it hangs from. When
/// the anchor is inside the segment, only the part after it turns.
pub fn apply_edit<T: Real>(
    model: &LayoutModel<'_, T>,
    current: &EmbeddingSolution<T>,
    segment: usize,
    anchor: NodeId,
    rotation: T,
    weights: &EnergyWeights,
    cfg: &SwarmConfig,
    mut progress: impl FnMut(usize, T),
) -> Result<EmbeddingSolution<T>, EditError> {
    let tree = model.tree;
    let a = validate_edit(model, segment, anchor)?;
    let seg = &model.segments.segments[segment];
    let first = seg.first();
    let attach = tree.parent(first).expect("segments start below the root");
    if current.ratios.len() != model.segment_count() {
        return Err(EditError::Mismatch);
    }
    if rotation == T::zero() {
        return Ok(current.clone());
    }
    let mut uv = current.dense_uv(tree).ok_or(EditError::Mismatch)?;

    let turning = if a == attach { tree.descendants(first) } else { &tree.descendants(a)[1..] };
    let pivot = uv[a];
    for &q in turning {
        uv[q] = pivot + (uv[q] - pivot).rotated(rotation);
    }

    // An enclosing pin absorbs the edit; pins inside the new block are
    // superseded by it.
    let block_of = |pin: &Pin<T>| model.segments.segments[pin.segment].first();
    let mut pins = current.pins.clone();
    if let Some(outer) = pins.iter().position(|p| tree.is_descendant(first, block_of(p))) {
        let s = pins[outer].segment;
        pins[outer] = model.pin(&uv, s);
    } else {
        pins.retain(|p| !tree.is_descendant(block_of(p), first));
        pins.push(model.pin(&uv, segment));
    }
    pins.sort_by_key(|p| p.segment);

    let m = model.segment_count();
    let w = weights.resolve(m);
    let seeds = vec![flatten(&current.ratios), vec![T::zero(); 2 * m]];
    let o = run(model, &w, cfg, &pins, &current.ratios, seeds, &mut progress);
    Ok(to_solution(model, o, cfg.seed, pins))
}
