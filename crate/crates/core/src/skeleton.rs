//! Rooted skeleton trees: ingestion, segmentation, imaginary-edge
//! enhancement and the subtree hierarchy used for local views.
//!
//! Nodes are addressed two ways. [`NodeId`] is the identifier carried by
//! input files and all exported JSON; internally every algorithm works on
//! dense indices into [`SkeletonTree::nodes`], which follow input order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::scalar::Real;

pub type NodeId = i64;

/// Where a bad record came from, for error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loc {
    /// 1-based line in an SWC file.
    Line(usize),
    /// 0-based entry in a JSON `nodes` array.
    Entry(usize),
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::Line(l) => write!(f, "line {l}"),
            Loc::Entry(e) => write!(f, "entry {e}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("{loc}: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: duplicate node id {id}")]
    DuplicateId { loc: Loc, id: NodeId },
    #[error("{loc}: node {id} references missing parent {parent}")]
    MissingParent { loc: Loc, id: NodeId, parent: NodeId },
    #[error("{loc}: node {id} is a second root (first root is {first})")]
    MultipleRoots { loc: Loc, id: NodeId, first: NodeId },
    #[error("{loc}: node {id} is part of a parent cycle")]
    Cycle { loc: Loc, id: NodeId },
    #[error("{loc}: node {id} has a zero-length edge to its parent")]
    ZeroLengthEdge { loc: Loc, id: NodeId },
    #[error("{loc}: node {id} has invalid radius or position")]
    InvalidValue { loc: Loc, id: NodeId },
    #[error("skeleton has no root node")]
    NoRoot,
    #[error("invalid skeleton JSON: {0}")]
    Json(String),
}

impl SkeletonError {
    /// Source location of the offending record, if known.
    pub fn loc(&self) -> Option<Loc> {
        match self {
            Self::Syntax { loc, .. }
            | Self::DuplicateId { loc, .. }
            | Self::MissingParent { loc, .. }
            | Self::MultipleRoots { loc, .. }
            | Self::Cycle { loc, .. }
            | Self::ZeroLengthEdge { loc, .. }
            | Self::InvalidValue { loc, .. } => Some(*loc),
            Self::NoRoot | Self::Json(_) => None,
        }
    }
}

/// One input record before validation.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord<T> {
    pub id: NodeId,
    /// SWC structure type; kept for round trips, otherwise unused.
    pub kind: i32,
    pub position: Vec3<T>,
    pub radius: T,
    pub parent: Option<NodeId>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonNode<T> {
    pub id: NodeId,
    pub kind: i32,
    pub position: Vec3<T>,
    pub radius: T,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct SkeletonTree<T> {
    nodes: Vec<SkeletonNode<T>>,
    index: HashMap<NodeId, usize>,
    root: usize,
    parent_ix: Vec<Option<usize>>,
    children_ix: Vec<Vec<usize>>,
    depth: Vec<usize>,
    preorder: Vec<usize>,
    pre_rank: Vec<usize>,
    subtree_size: Vec<usize>,
}

impl<T: Real> SkeletonTree<T> {
    /// Validates records and builds the tree. Child order follows record
    /// order.
    pub fn from_records(records: Vec<NodeRecord<T>>) -> Result<Self, SkeletonError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !r.position.is_finite() || !r.radius.is_finite() || r.radius < T::zero() {
                return Err(SkeletonError::InvalidValue { loc: r.loc, id: r.id });
            }
            if index.insert(r.id, i).is_some() {
                return Err(SkeletonError::DuplicateId { loc: r.loc, id: r.id });
            }
        }

        let n = records.len();
        let mut root = None;
        let mut parent_ix = vec![None; n];
        let mut children_ix = vec![Vec::new(); n];
        for (i, r) in records.iter().enumerate() {
            match r.parent {
                None => match root {
                    None => root = Some(i),
                    Some(first) => {
                        return Err(SkeletonError::MultipleRoots {
                            loc: r.loc,
                            id: r.id,
                            first: records[first].id,
                        })
                    }
                },
                Some(p) => {
                    let Some(&pi) = index.get(&p) else {
                        return Err(SkeletonError::MissingParent { loc: r.loc, id: r.id, parent: p });
                    };
                    parent_ix[i] = Some(pi);
                    children_ix[pi].push(i);
                }
            }
        }
        let root = root.ok_or(SkeletonError::NoRoot)?;

        // Iterative preorder; anything not reached sits on a parent cycle.
        let mut preorder = Vec::with_capacity(n);
        let mut depth = vec![0; n];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            preorder.push(i);
            for &c in children_ix[i].iter().rev() {
                depth[c] = depth[i] + 1;
                stack.push(c);
            }
        }
        if preorder.len() != n {
            let mut seen = vec![false; n];
            for &i in &preorder {
                seen[i] = true;
            }
            let bad = (0..n).find(|&i| !seen[i]).expect("unreached node");
            return Err(SkeletonError::Cycle { loc: records[bad].loc, id: records[bad].id });
        }

        for (i, r) in records.iter().enumerate() {
            if let Some(p) = parent_ix[i] {
                if r.position.distance(records[p].position) <= T::zero() {
                    return Err(SkeletonError::ZeroLengthEdge { loc: r.loc, id: r.id });
                }
            }
        }

        let mut pre_rank = vec![0; n];
        for (k, &i) in preorder.iter().enumerate() {
            pre_rank[i] = k;
        }
        let mut subtree_size = vec![1; n];
        for &i in preorder.iter().rev() {
            if let Some(p) = parent_ix[i] {
                subtree_size[p] += subtree_size[i];
            }
        }

        let nodes = records
            .iter()
            .enumerate()
            .map(|(i, r)| SkeletonNode {
                id: r.id,
                kind: r.kind,
                position: r.position,
                radius: r.radius,
                parent: r.parent,
                children: children_ix[i].iter().map(|&c| records[c].id).collect(),
            })
            .collect();

        Ok(Self {
            nodes,
            index,
            root,
            parent_ix,
            children_ix,
            depth,
            preorder,
            pre_rank,
            subtree_size,
        })
    }

    pub fn nodes(&self) -> &[SkeletonNode<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> NodeId {
        self.nodes[self.root].id
    }

    pub fn ix(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id(&self, ix: usize) -> NodeId {
        self.nodes[ix].id
    }

    pub fn node(&self, ix: usize) -> &SkeletonNode<T> {
        &self.nodes[ix]
    }

    pub fn position(&self, ix: usize) -> Vec3<T> {
        self.nodes[ix].position
    }

    pub fn radius(&self, ix: usize) -> T {
        self.nodes[ix].radius
    }

    pub fn parent(&self, ix: usize) -> Option<usize> {
        self.parent_ix[ix]
    }

    pub fn grandparent(&self, ix: usize) -> Option<usize> {
        self.parent_ix[ix].and_then(|p| self.parent_ix[p])
    }

    pub fn children(&self, ix: usize) -> &[usize] {
        &self.children_ix[ix]
    }

    pub fn depth(&self, ix: usize) -> usize {
        self.depth[ix]
    }

    pub fn is_branching(&self, ix: usize) -> bool {
        self.children_ix[ix].len() > 1
    }

    /// Nodes in depth-first preorder, children visited in stored order.
    pub fn preorder(&self) -> &[usize] {
        &self.preorder
    }

    /// True if `node` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn is_descendant(&self, node: usize, ancestor: usize) -> bool {
        let r = self.pre_rank[ancestor];
        let k = self.pre_rank[node];
        k >= r && k < r + self.subtree_size[ancestor]
    }

    /// All nodes of the subtree rooted at `ix`, in preorder.
    pub fn descendants(&self, ix: usize) -> &[usize] {
        let r = self.pre_rank[ix];
        &self.preorder[r..r + self.subtree_size[ix]]
    }

    /// Length of the edge from `ix` to its parent; zero for the root.
    pub fn edge_length(&self, ix: usize) -> T {
        match self.parent_ix[ix] {
            Some(p) => self.nodes[ix].position.distance(self.nodes[p].position),
            None => T::zero(),
        }
    }

    /// Non-root nodes, each standing for the edge to its parent.
    pub fn edge_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| i != self.root)
    }

    pub fn leaf_count(&self, ix: usize) -> usize {
        self.descendants(ix).iter().filter(|&&d| self.children_ix[d].is_empty()).count()
    }

    /// Records for this tree in id order.
    pub fn records(&self) -> Vec<NodeRecord<T>> {
        let mut out: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| NodeRecord {
                id: n.id,
                kind: n.kind,
                position: n.position,
                radius: n.radius,
                parent: n.parent,
                loc: Loc::Entry(i),
            })
            .collect();
        out.sort_by_key(|r| r.id);
        out
    }

    /// Applies `f` to every position, keeping topology and radii.
    pub fn map_positions(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Result<Self, SkeletonError> {
        let recs: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| NodeRecord {
                id: n.id,
                kind: n.kind,
                position: f(n.position),
                radius: n.radius,
                parent: n.parent,
                loc: Loc::Entry(i),
            })
            .collect();
        Self::from_records(recs)
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> SkeletonError {
    SkeletonError::Syntax { loc: Loc::Line(line), msg: msg.into() }
}

/// Parses SWC text: `id type x y z radius parent` per line, `#` comments.
/// A negative parent marks the root.
pub fn parse_swc<T: Real>(text: &str) -> Result<SkeletonTree<T>, SkeletonError> {
    let mut records = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(syntax(line, format!("expected 7 fields, found {}", fields.len())));
        }
        let int = |s: &str, what: &str| {
            s.parse::<i64>().map_err(|_| syntax(line, format!("invalid {what} '{s}'")))
        };
        let real = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| syntax(line, format!("invalid {what} '{s}'")))
        };
        let id = int(fields[0], "id")?;
        let kind = int(fields[1], "type")? as i32;
        let position = Vec3::new(real(fields[2], "x")?, real(fields[3], "y")?, real(fields[4], "z")?);
        let radius = real(fields[5], "radius")?;
        let parent = int(fields[6], "parent")?;
        records.push(NodeRecord {
            id,
            kind,
            position,
            radius,
            parent: (parent >= 0).then_some(parent),
            loc: Loc::Line(line),
        });
    }
    SkeletonTree::from_records(records)
}

/// Formats with six significant digits, shortest round-trip spelling.
pub fn fmt_sig6<T: Real>(v: T) -> String {
    let x = v.to_f64_lossy();
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float");
    format!("{rounded}")
}

/// Emits SWC records in id order.
pub fn serialize_swc<T: Real>(tree: &SkeletonTree<T>) -> String {
    let mut out = String::from("# id type x y z radius parent\n");
    for r in tree.records() {
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            r.id,
            r.kind,
            fmt_sig6(r.position.x),
            fmt_sig6(r.position.y),
            fmt_sig6(r.position.z),
            fmt_sig6(r.radius),
            r.parent.unwrap_or(-1)
        ));
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct JsonSkeleton<T> {
    nodes: Vec<JsonNode<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct JsonNode<T> {
    id: NodeId,
    /// SWC structure type, optional.
    #[serde(rename = "type", default, skip_serializing_if = "is_zero")]
    kind: i32,
    pos: [T; 3],
    radius: T,
    parent: Option<NodeId>,
}

fn is_zero(k: &i32) -> bool {
    *k == 0
}

pub fn parse_json<T: Real>(text: &str) -> Result<SkeletonTree<T>, SkeletonError> {
    let doc: JsonSkeleton<T> =
        serde_json::from_str(text).map_err(|e| SkeletonError::Json(e.to_string()))?;
    let records = doc
        .nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| NodeRecord {
            id: n.id,
            kind: n.kind,
            position: n.pos.into(),
            radius: n.radius,
            parent: n.parent,
            loc: Loc::Entry(i),
        })
        .collect();
    SkeletonTree::from_records(records)
}

pub fn serialize_json<T: Real>(tree: &SkeletonTree<T>) -> String {
    let doc = JsonSkeleton {
        nodes: tree
            .records()
            .into_iter()
            .map(|r| JsonNode { id: r.id, kind: r.kind, pos: r.position.into(), radius: r.radius, parent: r.parent })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("skeleton serializes")
}

/// Maximal run of single-child nodes. The first node's parent is the root
/// or a branching node; every node but the last has exactly one child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub index: usize,
    pub node_ids: Vec<NodeId>,
    /// Dense indices matching `node_ids`.
    pub nodes: Vec<usize>,
}

impl Segment {
    pub fn first(&self) -> usize {
        self.nodes[0]
    }

    pub fn last(&self) -> usize {
        *self.nodes.last().expect("segments are non-empty")
    }
}

/// Segments of a tree plus the node → segment lookup.
#[derive(Clone, Debug)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    segment_of: Vec<Option<usize>>,
}

impl Segmentation {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment holding node `ix`; `None` for the root.
    pub fn segment_of(&self, ix: usize) -> Option<usize> {
        self.segment_of[ix]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }
}

/// Splits the non-root nodes into segments, numbered in preorder.
pub fn segment_tree<T: Real>(tree: &SkeletonTree<T>) -> Segmentation {
    let mut segments = Vec::new();
    let mut segment_of = vec![None; tree.len()];
    for &start in tree.preorder() {
        let Some(p) = tree.parent(start) else { continue };
        if p != tree.root() && !tree.is_branching(p) {
            continue;
        }
        let index = segments.len();
        let mut nodes = vec![start];
        let mut cur = start;
        while let [only] = tree.children(cur) {
            cur = *only;
            nodes.push(cur);
        }
        for &n in &nodes {
            segment_of[n] = Some(index);
        }
        segments.push(Segment { index, node_ids: nodes.iter().map(|&n| tree.id(n)).collect(), nodes });
    }
    Segmentation { segments, segment_of }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EdgeKind {
    Real,
    Sibling,
    Grandparent,
    ParentSibling,
}

/// Skeleton plus imaginary edges (sibling, grandparent and parent-sibling
/// links) that capture relative placement for the view metric.
#[derive(Clone, Debug)]
pub struct EnhancedTree<T> {
    pub base: SkeletonTree<T>,
    /// `(a, b, kind)` with dense indices; each unordered pair once.
    pub imaginary: Vec<(usize, usize, EdgeKind)>,
}

impl<T: Real> EnhancedTree<T> {
    /// Real edges followed by imaginary ones, as `(a, b, kind)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        self.base
            .edge_nodes()
            .map(|i| (i, self.base.parent(i).expect("non-root"), EdgeKind::Real))
            .chain(self.imaginary.iter().copied())
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges().filter(|e| e.2 == kind).count()
    }
}

pub fn build_enhanced_tree<T: Real>(tree: &SkeletonTree<T>) -> EnhancedTree<T> {
    let mut imaginary = Vec::new();
    for &n in tree.preorder() {
        let kids = tree.children(n);
        for (a, &x) in kids.iter().enumerate() {
            for &y in &kids[a + 1..] {
                imaginary.push((x, y, EdgeKind::Sibling));
            }
        }
        if let Some(p) = tree.parent(n) {
            if let Some(g) = tree.parent(p) {
                imaginary.push((n, g, EdgeKind::Grandparent));
                for &s in tree.children(g) {
                    if s != p {
                        imaginary.push((n, s, EdgeKind::ParentSibling));
                    }
                }
            }
        }
    }
    EnhancedTree { base: tree.clone(), imaginary }
}

/// A subtree in the view hierarchy: every descendant of `root`, attached
/// to the rest of the tree through `attach` (the parent of `root`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtree {
    pub id: usize,
    pub level: usize,
    pub root: usize,
    pub root_id: NodeId,
    pub attach: Option<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl Subtree {
    pub fn contains<T: Real>(&self, tree: &SkeletonTree<T>, ix: usize) -> bool {
        tree.is_descendant(ix, self.root)
    }

    pub fn nodes<'t, T: Real>(&self, tree: &'t SkeletonTree<T>) -> &'t [usize] {
        tree.descendants(self.root)
    }

    /// Nodes whose edges describe this subtree for viewing: the subtree
    /// plus its attachment node, so a single-node subtree still has its
    /// stem edge.
    pub fn view_filter<T: Real>(&self, tree: &SkeletonTree<T>) -> Vec<usize> {
        let mut v: Vec<usize> = self.attach.into_iter().collect();
        v.extend_from_slice(tree.descendants(self.root));
        v
    }

    /// Nodes whose parent edge belongs to this subtree's view.
    pub fn edge_nodes<T: Real>(&self, tree: &SkeletonTree<T>) -> Vec<usize> {
        tree.descendants(self.root).iter().copied().filter(|&i| tree.parent(i).is_some()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SubtreeHierarchy {
    pub subtrees: Vec<Subtree>,
    /// Subtree ids per level; level 0 holds only the whole tree.
    pub levels: Vec<Vec<usize>>,
}

impl SubtreeHierarchy {
    /// Index of the deepest level.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn global(&self) -> &Subtree {
        &self.subtrees[0]
    }

    /// Deepest subtree whose node set holds every node in `set`.
    pub fn deepest_containing<T: Real>(&self, tree: &SkeletonTree<T>, set: &[usize]) -> usize {
        let mut cur = 0;
        'descend: loop {
            for &c in &self.subtrees[cur].children {
                if set.iter().all(|&n| self.subtrees[c].contains(tree, n)) {
                    cur = c;
                    continue 'descend;
                }
            }
            return cur;
        }
    }

    /// Per node, the position in `levels[1]` of the level-1 subtree holding
    /// it. Nodes above the first branching get `None`.
    pub fn level_one_groups<T: Real>(&self, tree: &SkeletonTree<T>) -> Vec<Option<usize>> {
        let mut out = vec![None; tree.len()];
        for (k, &s) in self.levels.get(1).into_iter().flatten().enumerate() {
            for &n in self.subtrees[s].nodes(tree) {
                out[n] = Some(k);
            }
        }
        out
    }

    /// Subtree ids in depth-first order starting from the whole tree.
    pub fn depth_first(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.subtrees.len());
        let mut stack = vec![0];
        while let Some(s) = stack.pop() {
            out.push(s);
            stack.extend(self.subtrees[s].children.iter().rev());
        }
        out
    }
}

/// Level `h` holds the subtrees rooted at the first node of each segment
/// whose path to the root passes exactly `h` branching nodes.
pub fn build_hierarchy<T: Real>(tree: &SkeletonTree<T>, segments: &Segmentation) -> SubtreeHierarchy {
    let root = tree.root();
    let mut subtrees = vec![Subtree {
        id: 0,
        level: 0,
        root,
        root_id: tree.id(root),
        attach: None,
        parent: None,
        children: Vec::new(),
    }];
    // (subtree id, branching count) of the innermost subtree per node
    let mut owner = vec![(0usize, 0usize); tree.len()];
    let mut levels = vec![vec![0]];
    for &n in tree.preorder() {
        let Some(p) = tree.parent(n) else { continue };
        let (mut sub, mut crossed) = owner[p];
        if tree.is_branching(p) {
            crossed += 1;
        }
        let starts_segment = segments.segment_of(n).map(|s| segments.segments[s].first()) == Some(n);
        if starts_segment && tree.is_branching(p) {
            let id = subtrees.len();
            subtrees.push(Subtree {
                id,
                level: crossed,
                root: n,
                root_id: tree.id(n),
                attach: Some(p),
                parent: Some(sub),
                children: Vec::new(),
            });
            subtrees[sub].children.push(id);
            if levels.len() <= crossed {
                levels.resize(crossed + 1, Vec::new());
            }
            levels[crossed].push(id);
            sub = id;
        }
        owner[n] = (sub, crossed);
    }
    SubtreeHierarchy { subtrees, levels }
}
