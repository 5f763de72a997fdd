//! SVG rendering of a planar layout.

use std::fmt::Write as _;

use treeplan::geom::Vec2;
use treeplan::skeleton::SkeletonTree;
use treeplan::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    /// Pixels per layout unit.
    pub scale: f64,
    pub margin: f64,
    /// One color per level-1 subtree, cycled.
    pub palette: Vec<String>,
    /// Color of edges above the first branching.
    pub trunk_color: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];
        Self {
            scale: 40.0,
            margin: 20.0,
            palette: palette.iter().map(|s| s.to_string()).collect(),
            trunk_color: "#444444".into(),
        }
    }
}

impl SvgStyle {
    pub fn color(&self, group: Option<usize>) -> &str {
        match group {
            Some(g) if !self.palette.is_empty() => &self.palette[g % self.palette.len()],
            _ => &self.trunk_color,
        }
    }
}

/// One `<line>` per edge, stroke width equal to the scaled node diameter.
/// `groups` is indexed like the tree (see `level_one_groups`).
pub fn render_svg<T: Real>(tree: &SkeletonTree<T>, uv: &[Vec2<T>], groups: &[Option<usize>], style: &SvgStyle) -> String {
    let pts: Vec<(f64, f64)> = uv.iter().map(|p| (p.x.to_f64_lossy(), p.y.to_f64_lossy())).collect();
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &(u, v)) in pts.iter().enumerate() {
        let r = tree.radius(i).to_f64_lossy();
        u0 = u0.min(u - r);
        u1 = u1.max(u + r);
        v0 = v0.min(v - r);
        v1 = v1.max(v + r);
    }
    if pts.is_empty() {
        (u0, u1, v0, v1) = (0.0, 0.0, 0.0, 0.0);
    }
    let (s, m) = (style.scale, style.margin);
    let width = (u1 - u0) * s + 2.0 * m;
    let height = (v1 - v0) * s + 2.0 * m;
    let x = |u: f64| (u - u0) * s + m;
    let y = |v: f64| (v1 - v) * s + m;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(out, "<!-- screen x = s * (u - u0) + m, screen y = s * (v1 - v) + m (y flipped) -->");
    let _ = writeln!(out, "<!-- u0 = {u0}, v1 = {v1}, s = {s}, m = {m} -->");
    let _ = writeln!(out, r#"<g fill="none" stroke-linecap="round">"#);
    for n in tree.edge_nodes() {
        let p = tree.parent(n).expect("edge node");
        let (a, b) = (pts[p], pts[n]);
        let w = 2.0 * tree.radius(n).to_f64_lossy() * s;
        let _ = writeln!(
            out,
            r#"<line data-node="{}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="{:.4}"/>"#,
            tree.id(n),
            x(a.0),
            y(a.1),
            x(b.0),
            y(b.1),
            style.color(groups.get(n).copied().flatten()),
            w
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
