#![allow(dead_code)]

use std::fmt::Write as _;

use rand::Rng;
use treeplan::skeleton::{parse_swc, SkeletonTree};

pub fn fixture(name: &str) -> String {
    let p = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn fixture_tree(name: &str) -> SkeletonTree<f64> {
    parse_swc(&fixture(name)).unwrap()
}

/// Random tree of `n` nodes: each new node hangs off a random earlier node
/// at a random offset of length 0.5 to 2.
pub fn random_swc(rng: &mut impl Rng, n: usize) -> String {
    let mut pos: Vec<[f64; 3]> = vec![[0.0; 3]];
    let mut s = String::from("1 1 0 0 0 0.1 -1\n");
    for i in 1..n {
        let p = rng.gen_range(0..i);
        let dir = loop {
            let d: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let l = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if l > 0.1 && l <= 1.0 {
                break d.map(|c| c / l);
            }
        };
        let len = rng.gen_range(0.5..2.0);
        let q = [0, 1, 2].map(|k| pos[p][k] + dir[k] * len);
        pos.push(q);
        let r = rng.gen_range(0.01..0.1);
        let _ = writeln!(s, "{} 3 {} {} {} {} {}", i + 1, q[0], q[1], q[2], r, p + 1);
    }
    s
}

pub fn random_tree(rng: &mut impl Rng, n: usize) -> SkeletonTree<f64> {
    parse_swc(&random_swc(rng, n)).unwrap()
}

pub mod grid;

/// Closest distance between two 2D segments via clamped parameters.
pub fn seg_dist(p1: [f64; 2], q1: [f64; 2], p2: [f64; 2], q2: [f64; 2]) -> f64 {
    let sub = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let (d1, d2) = (sub(q1, p1), sub(q2, p2));
    // proper intersection
    let r = sub(p2, p1);
    let den = cross(d1, d2);
    if den != 0.0 {
        let t = cross(r, d2) / den;
        let u = cross(r, d1) / den;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    let pt = |p: [f64; 2], a: [f64; 2], d: [f64; 2]| {
        let l = dot(d, d);
        let t = if l > 0.0 { (dot(sub(p, a), d) / l).clamp(0.0, 1.0) } else { 0.0 };
        let c = [a[0] + d[0] * t, a[1] + d[1] * t];
        dot(sub(p, c), sub(p, c)).sqrt()
    };
    pt(p1, p2, d2).min(pt(q1, p2, d2)).min(pt(p2, p1, d1)).min(pt(q2, p1, d1))
}


/// Overlapping capsule pairs among edges that share no node.
pub fn brute_crossings(t: &SkeletonTree<f64>, uv: &[treeplan::geom::Vec2<f64>]) -> usize {
    let e: Vec<(usize, usize)> = t.edge_nodes().map(|c| (t.parent(c).unwrap(), c)).collect();
    let r = |(a, b): (usize, usize)| t.radius(a).max(t.radius(b));
    let p = |i: usize| [uv[i].x, uv[i].y];
    let mut n = 0;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let (a, b) = (e[i], e[j]);
            if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
                continue;
            }
            if seg_dist(p(a.0), p(a.1), p(b.0), p(b.1)) <= r(a) + r(b) {
                n += 1;
            }
        }
    }
    n
}

/// Three segments: a trunk and two straight branches 10° apart whose thick
/// capsules overlap unless the branches open up.
pub fn narrow_fork() -> SkeletonTree<f64> {
    let (s, c) = 5f64.to_radians().sin_cos();
    let mut txt = String::from("1 0 0 0 0 0.2 -1\n2 0 0 1 0 0.2 1\n3 0 0 2 0 0.2 2\n");
    for (k, sx) in [(4, -s), (6, s)] {
        let _ = writeln!(txt, "{k} 0 {} {} 0 0.2 3", sx, 2.0 + c);
        let _ = writeln!(txt, "{} 0 {} {} 0 0.2 {k}", k + 1, 2.0 * sx, 2.0 + 2.0 * c);
    }
    parse_swc(&txt).unwrap()
}

/// Trunk of two edges forking into two chains of two edges each, all in
/// random directions: three segments.
pub fn random_fork(rng: &mut impl Rng) -> SkeletonTree<f64> {
    let mut pos: Vec<[f64; 3]> = vec![[0.0; 3]];
    let mut txt = String::from("1 1 0 0 0 0.05 -1\n");
    let parents = [0usize, 1, 2, 3, 2, 5];
    for (i, &p) in parents.iter().enumerate() {
        let d = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0f64));
        let l = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(0.2);
        let q = [0, 1, 2].map(|k| pos[p][k] + d[k] / l);
        pos.push(q);
        let _ = writeln!(txt, "{} 3 {} {} {} 0.05 {}", i + 2, q[0], q[1], q[2], p + 1);
    }
    parse_swc(&txt).unwrap()
}
