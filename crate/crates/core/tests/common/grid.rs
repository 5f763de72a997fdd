//! Exhaustive grid minimum of the embedding energy over per-segment
//! `(r_l, r_a)` at step 0.01.
//!
//! The crossing weight exceeds the largest ratio energy on the grid, so the
//! minimum is the cheapest crossing-free grid point. It is found by
//! branch and bound over segments in index order: a segment's placement
//! depends only on its own ratios and its ancestors', so every capsule pair
//! can be tested as soon as the later of its two segments is fixed. Each
//! segment's grid is visited in increasing energy, which makes the bound
//! `partial + next >= best` final for the rest of that list. The bound
//! starts at 0.01 and doubles until a point is found below it.
//!
//! Placements and the ancestor-only part of the test are cached per level
//! for the current ancestor assignment.

use treeplan::embedding::{EnergyWeights, LayoutModel};
use treeplan::geom::Vec2;

use super::seg_dist;

pub struct GridMin {
    pub energy: f64,
    pub ratios: Vec<[f64; 2]>,
    /// Segment placements computed.
    pub evaluated: usize,
}

struct Edge {
    parent: usize,
    child: usize,
    radius: f64,
    segment: usize,
}

/// Placement of one segment's nodes, and whether it is clear of itself
/// and its ancestors.
struct Placed {
    clean: bool,
    uv: Vec<Vec2<f64>>,
}

struct Level {
    ancestors: Vec<usize>,
    key: Vec<usize>,
    cache: Vec<Option<Placed>>,
}

struct Search<'m, 'a> {
    model: &'m LayoutModel<'a, f64>,
    lists: Vec<Vec<(f64, [f64; 2])>>,
    edges: Vec<Edge>,
    nodes: Vec<Vec<usize>>,
    levels: Vec<Level>,
    choice: Vec<usize>,
    uv: Vec<Vec2<f64>>,
    best: f64,
    best_ratios: Option<Vec<[f64; 2]>>,
    evaluated: usize,
    budget: usize,
}

fn overlap(e: &Edge, f: &Edge, uv: &[Vec2<f64>]) -> bool {
    let p = |i: usize| [uv[i].x, uv[i].y];
    let shared = e.parent == f.parent || e.parent == f.child || e.child == f.parent || e.child == f.child;
    !shared && seg_dist(p(e.parent), p(e.child), p(f.parent), p(f.child)) <= e.radius + f.radius
}

impl Search<'_, '_> {
    fn ratios(&self) -> Vec<[f64; 2]> {
        self.choice.iter().enumerate().map(|(s, &c)| self.lists[s][c].1).collect()
    }

    /// Any overlap between an edge of `k` and one of the segments in `set`
    /// (`k` itself included when listed).
    fn hits(&self, k: usize, set: &[usize], uv: &[Vec2<f64>]) -> bool {
        let mine: Vec<&Edge> = self.edges.iter().filter(|e| e.segment == k).collect();
        for (i, e) in mine.iter().enumerate() {
            for f in self.edges.iter().filter(|f| set.contains(&f.segment)) {
                if f.segment == k && mine[..=i].iter().any(|m| std::ptr::eq(*m, f)) {
                    continue;
                }
                if overlap(e, f, uv) {
                    return true;
                }
            }
        }
        false
    }

    fn place(&mut self, k: usize, ix: usize) -> bool {
        let key: Vec<usize> = self.levels[k].ancestors.iter().map(|&a| self.choice[a]).collect();
        if self.levels[k].key != key {
            self.levels[k].key = key;
            self.levels[k].cache.iter_mut().for_each(|c| *c = None);
        }
        if self.levels[k].cache[ix].is_none() {
            self.choice[k] = ix;
            let uv = self.model.realize(&self.ratios(), &[]);
            self.evaluated += 1;
            assert!(self.evaluated < self.budget, "grid oracle budget exhausted");
            let mut set = self.levels[k].ancestors.clone();
            set.push(k);
            let clean = !self.hits(k, &set, &uv);
            let own = self.nodes[k].iter().map(|&n| uv[n]).collect();
            self.levels[k].cache[ix] = Some(Placed { clean, uv: own });
        }
        let placed = self.levels[k].cache[ix].as_ref().unwrap();
        if !placed.clean {
            return false;
        }
        for (&n, &p) in self.nodes[k].iter().zip(&placed.uv) {
            self.uv[n] = p;
        }
        self.choice[k] = ix;
        let others: Vec<usize> = (0..k).filter(|s| !self.levels[k].ancestors.contains(s)).collect();
        others.is_empty() || !self.hits(k, &others, &self.uv)
    }

    fn descend(&mut self, k: usize, partial: f64) {
        let m = self.lists.len();
        for ix in 0..self.lists[k].len() {
            let e = self.lists[k][ix].0;
            if partial + e >= self.best {
                break;
            }
            if !self.place(k, ix) {
                continue;
            }
            if k + 1 == m {
                self.best = partial + e;
                self.best_ratios = Some(self.ratios());
                // later entries of this list only cost more
                break;
            }
            self.descend(k + 1, partial + e);
        }
    }
}

pub fn grid_minimum(model: &LayoutModel<'_, f64>, weights: &EnergyWeights, budget: usize) -> GridMin {
    let m = model.segment_count();
    assert!((1..=3).contains(&m), "grid oracle handles 1 to 3 segments");
    let w = weights.resolve::<f64>(m);
    let max_ratio: f64 = (0..m).map(|i| 4.0 * w.wl[i] + w.wa[i]).sum();
    assert!(w.wx > max_ratio, "crossing weight must dominate");

    let tree = model.tree;
    let segs = &model.segments.segments;
    let parent_seg = |i: usize| model.segments.segment_of(tree.parent(segs[i].first()).unwrap());
    let levels = (0..m)
        .map(|i| {
            let mut ancestors = Vec::new();
            let mut at = parent_seg(i);
            while let Some(a) = at {
                assert!(a < i, "segments must follow their ancestors");
                ancestors.push(a);
                at = parent_seg(a);
            }
            Level { ancestors, key: vec![usize::MAX], cache: (0..201 * 201).map(|_| None).collect() }
        })
        .collect();
    let edges = tree
        .edge_nodes()
        .map(|c| {
            let p = tree.parent(c).unwrap();
            Edge {
                parent: p,
                child: c,
                radius: tree.radius(p).max(tree.radius(c)),
                segment: model.segments.segment_of(c).unwrap(),
            }
        })
        .collect();

    let ls: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
    let as_: Vec<f64> = (-100..=100).map(|k| k as f64 * 0.01).collect();
    let lists = (0..m)
        .map(|i| {
            let mut v: Vec<(f64, [f64; 2])> = ls
                .iter()
                .flat_map(|&l| as_.iter().map(move |&a| (l, a)))
                .map(|(l, a)| (w.wl[i] * l * l + w.wa[i] * a * a, [l, a]))
                .collect();
            v.sort_by(|x, y| x.0.total_cmp(&y.0));
            v
        })
        .collect();

    let mut s = Search {
        model,
        lists,
        edges,
        nodes: segs.iter().map(|seg| seg.nodes.clone()).collect(),
        levels,
        choice: vec![0; m],
        uv: model.realize(&vec![[0.0, 0.0]; m], &[]),
        best: 0.0,
        best_ratios: None,
        evaluated: 0,
        budget,
    };
    let mut bound = 0.01;
    while s.best_ratios.is_none() {
        assert!(bound <= 2.0 * max_ratio, "no crossing-free grid point");
        s.best = bound;
        s.descend(0, 0.0);
        bound *= 2.0;
    }
    let ratios = s.best_ratios.unwrap();
    GridMin { energy: s.best, ratios, evaluated: s.evaluated }
}
