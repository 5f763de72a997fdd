//! Command implementations behind the `treeplan` binary.
//!
//! Each `cmd_*` function runs one subcommand against a [`RunConfig`] and
//! writes its files into `out_dir`.

pub mod args;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

use treeplan::embedding::{EnergyWeights, EmbeddingSolution};
use treeplan::evaluation::{report, GeometryLossReport};
use treeplan::navigation::{build_path, PathConfig};
use treeplan::pso::SwarmConfig;
use treeplan::skeleton::{parse_json, parse_swc, NodeId};
use treeplan::viewpoint::ViewSearchConfig;
use treeplan::{CameraPathF64, EmbeddingSolutionF64, PreparedF64, SkeletonTreeF64};
use treeplan_service::session::replay;
use treeplan_service::{Edit, LogEntry, SessionConfig};

pub use svg::{render_svg, SvgStyle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Swc,
    Json,
}

/// `SEG,ANCHOR,RAD`: rotate segment `SEG` about node `ANCHOR` by `RAD`.
#[derive(Clone, Debug, PartialEq)]
pub struct EditSpec {
    pub segment: usize,
    pub anchor: NodeId,
    pub rotation: f64,
}

impl FromStr for EditSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [seg, anchor, rad] = parts[..] else {
            return Err(format!("expected SEG,ANCHOR,RAD, got {s:?}"));
        };
        Ok(Self {
            segment: seg.parse().map_err(|e| format!("segment: {e}"))?,
            anchor: anchor.parse().map_err(|e| format!("anchor: {e}"))?,
            rotation: rad.parse().map_err(|e| format!("rotation: {e}"))?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: PathBuf,
    /// `None` picks by extension: `.json` is JSON, anything else SWC.
    pub format: Option<Format>,
    pub weights: EnergyWeights,
    pub swarm: SwarmConfig,
    pub view: ViewSearchConfig,
    pub out_dir: PathBuf,
    pub dump_targets: bool,
    pub path: PathConfig,
    pub svg: SvgStyle,
    /// Applied in order after the initial solve.
    pub edits: Vec<EditSpec>,
    pub edit_particles: usize,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        let base = SessionConfig::default();
        Self {
            input: input.into(),
            format: None,
            weights: base.weights,
            swarm: base.swarm,
            view: base.view,
            out_dir: PathBuf::from("."),
            dump_targets: false,
            path: PathConfig::default(),
            svg: SvgStyle::default(),
            edits: Vec::new(),
            edit_particles: base.edit_particles,
        }
    }

    /// Sets both the embedding and the view search seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.swarm.seed = seed;
        self.view.swarm.seed = seed;
        self
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            weights: self.weights.clone(),
            swarm: self.swarm.clone(),
            view: self.view.clone(),
            edit_particles: self.edit_particles,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn load_tree(path: &Path, format: Option<Format>) -> Result<SkeletonTreeF64> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Swc,
    });
    let tree = match format {
        Format::Swc => parse_swc(&text),
        Format::Json => parse_json(&text),
    };
    tree.with_context(|| format!("parsing {}", path.display()))
}

pub fn prepare(cfg: &RunConfig) -> Result<PreparedF64> {
    let tree = load_tree(&cfg.input, cfg.format)?;
    PreparedF64::new(tree, &cfg.view).context("view search failed")
}

fn write(cfg: &RunConfig, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let p = cfg.out(name);
    fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
    files.push(p);
    Ok(())
}

pub struct EmbedOutcome {
    pub prepared: PreparedF64,
    pub solution: EmbeddingSolutionF64,
    pub report: GeometryLossReport,
    pub files: Vec<PathBuf>,
}

impl EmbedOutcome {
    /// 0 when the layout is crossing-free, 2 otherwise.
    pub fn exit_code(&self) -> u8 {
        if self.report.crossings == 0 {
            0
        } else {
            2
        }
    }
}

/// Solve plus edits, without writing anything.
pub fn embed(cfg: &RunConfig) -> Result<(PreparedF64, EmbeddingSolutionF64)> {
    let prepared = prepare(cfg)?;
    let log: Vec<LogEntry> = cfg
        .edits
        .iter()
        .map(|e| {
            LogEntry::Edit(Edit { segment_id: e.segment, anchor_node_id: e.anchor, rotation_radians: e.rotation })
        })
        .collect();
    let solution = replay(&prepared, &cfg.session_config(), &log).context("applying edits")?;
    Ok((prepared, solution))
}

/// Writes `embedding.json`, `embedding.svg`, `report.json` and, with
/// `dump_targets`, `targets.json`.
pub fn cmd_embed(cfg: &RunConfig) -> Result<EmbedOutcome> {
    let (prepared, solution) = embed(cfg)?;
    let tree = prepared.tree();
    let rep = report(tree, &prepared.segments, &solution, &prepared.targets).context("solution misses nodes")?;
    let uv = solution.dense_uv(tree).expect("checked by report");
    let groups = prepared.hierarchy.level_one_groups(tree);

    let mut files = Vec::new();
    write(cfg, "embedding.json", &solution.to_json(), &mut files)?;
    write(cfg, "embedding.svg", &render_svg(tree, &uv, &groups, &cfg.svg), &mut files)?;
    write(cfg, "report.json", &rep.to_json(), &mut files)?;
    if cfg.dump_targets {
        write(cfg, "targets.json", &prepared.targets.to_json(tree), &mut files)?;
    }
    Ok(EmbedOutcome { prepared, solution, report: rep, files })
}

/// Writes `views.json`.
pub fn cmd_views(cfg: &RunConfig) -> Result<PreparedF64> {
    let prepared = prepare(cfg)?;
    let mut files = Vec::new();
    write(cfg, "views.json", &prepared.views.to_json(), &mut files)?;
    if cfg.dump_targets {
        write(cfg, "targets.json", &prepared.targets.to_json(prepared.tree()), &mut files)?;
    }
    Ok(prepared)
}

/// Writes `path.json` and `path.csv` for a depth-first tour of the views.
pub fn cmd_path(cfg: &RunConfig) -> Result<CameraPathF64> {
    let prepared = prepare(cfg)?;
    let path = build_path(&prepared.views, &prepared.hierarchy.depth_first(), &cfg.path);
    let mut files = Vec::new();
    write(cfg, "path.json", &path.to_json(), &mut files)?;
    write(cfg, "path.csv", &path.to_csv(), &mut files)?;
    Ok(path)
}

/// Checks `embedding` against the tree and writes `report.json`.
pub fn cmd_eval(cfg: &RunConfig, embedding: &Path) -> Result<GeometryLossReport> {
    let prepared = prepare(cfg)?;
    let text = fs::read_to_string(embedding).with_context(|| format!("reading {}", embedding.display()))?;
    let solution: EmbeddingSolutionF64 =
        EmbeddingSolution::from_json(&text).with_context(|| format!("{} is not an embedding", embedding.display()))?;
    let tree = prepared.tree();
    if let Some(missing) = (0..tree.len()).map(|i| tree.id(i)).find(|id| !solution.uv.contains_key(id)) {
        bail!("embedding has no position for node {missing}");
    }
    if let Some(extra) = solution.uv.keys().find(|id| tree.ix(**id).is_none()) {
        bail!("embedding has node {extra} which is not in the tree");
    }
    if solution.ratios.len() != prepared.segments.len() {
        bail!("embedding has {} ratio pairs, tree has {} segments", solution.ratios.len(), prepared.segments.len());
    }
    if !solution.is_finite() {
        bail!("embedding contains non-finite values");
    }
    let rep = report(tree, &prepared.segments, &solution, &prepared.targets).expect("positions checked");
    write(cfg, "report.json", &rep.to_json(), &mut Vec::new())?;
    Ok(rep)
}

/// Sizes the global rayon pool from `TREEPLAN_THREADS` if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("TREEPLAN_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("TREEPLAN_THREADS={v:?} is not a count"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
