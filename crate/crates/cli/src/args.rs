//! Command-line flags and dispatch.

use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use treeplan::embedding::{CrossingWeight, EnergyWeights};
use treeplan_service::{ServiceOptions, SessionConfig};

use crate::{cmd_embed, cmd_eval, cmd_path, cmd_views, EditSpec, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "treeplan", version, about = "Occlusion-free planar embeddings of 3D tree skeletons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the planar embedding; writes embedding.json, embedding.svg and report.json.
    Embed(RunArgs),
    /// Best view per subtree; writes views.json.
    Views(RunArgs),
    /// Exploration path through the views; writes path.json and path.csv.
    Path(RunArgs),
    /// Losses of an existing embedding; writes report.json.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        embedding: PathBuf,
    },
    /// HTTP and WebSocket session API for the editor.
    Serve(ServeArgs),
}

fn parse_wx(s: &str) -> Result<CrossingWeight, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(CrossingWeight::AUTO);
    }
    s.parse().map(CrossingWeight::Fixed).map_err(|e| format!("{s:?}: {e}"))
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Swarm particles for the embedding solve.
    #[arg(long, default_value_t = 40_960)]
    pub particles: usize,
    /// Swarm iteration cap.
    #[arg(long, default_value_t = 100)]
    pub cmax: usize,
    #[arg(long, default_value_t = 2.0)]
    pub wl: f64,
    #[arg(long, default_value_t = 2.0)]
    pub wa: f64,
    /// Crossing weight, a number or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_wx)]
    pub wx: CrossingWeight,
    /// Camera distance over subtree radius.
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Swarm particles for re-solves after edits.
    #[arg(long, default_value_t = 4096)]
    pub edit_particles: usize,
}

impl SolverArgs {
    pub fn session_config(&self) -> SessionConfig {
        let mut c = SessionConfig::default();
        c.weights = EnergyWeights { wl: self.wl, wa: self.wa, wx: self.wx, ..EnergyWeights::default() };
        c.swarm.particles = self.particles;
        c.swarm.max_iterations = self.cmax;
        c.swarm.seed = self.seed;
        c.view.beta = self.beta;
        c.view.swarm.seed = self.seed;
        c.edit_particles = self.edit_particles;
        c
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; picked from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write targets.json with the projected target angles.
    #[arg(long)]
    pub dump_targets: bool,
    /// Camera path samples per second.
    #[arg(long, default_value_t = 30.0)]
    pub sample_rate: f64,
    /// Rotation edit SEG,ANCHOR,RAD applied after the solve; repeatable.
    #[arg(long = "edit", value_name = "SEG,ANCHOR,RAD", allow_hyphen_values = true)]
    pub edits: Vec<EditSpec>,
    /// SVG pixels per layout unit.
    #[arg(long, default_value_t = 40.0)]
    pub svg_scale: f64,
}

impl RunArgs {
    pub fn config(&self) -> RunConfig {
        let base = self.solver.session_config();
        let mut c = RunConfig::new(&self.input);
        c.format = self.format;
        c.weights = base.weights;
        c.swarm = base.swarm;
        c.view = base.view;
        c.edit_particles = base.edit_particles;
        c.out_dir = self.out_dir.clone();
        c.dump_targets = self.dump_targets;
        c.path.sample_rate = self.sample_rate;
        c.edits = self.edits.clone();
        c.svg.scale = self.svg_scale;
        c
    }
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Editor origin allowed by CORS; any origin when omitted.
    #[arg(long)]
    pub allow_origin: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Embed(a) => {
            let out = cmd_embed(&a.config())?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!("crossings {} energy {:e}", out.report.crossings, out.solution.energy);
            Ok(out.exit_code())
        }
        Command::Views(a) => {
            let p = cmd_views(&a.config())?;
            println!("{} views", p.views.entries.len());
            Ok(0)
        }
        Command::Path(a) => {
            let p = cmd_path(&a.config())?;
            println!("{} phases, {:.2} s", p.phases.len(), p.duration());
            Ok(0)
        }
        Command::Eval { run, embedding } => {
            let r = cmd_eval(&run.config(), &embedding)?;
            print!("{}", r.table());
            Ok(0)
        }
        Command::Serve(a) => {
            let opts = ServiceOptions { defaults: a.solver.session_config(), allow_origin: a.allow_origin.clone() };
            let addr = SocketAddr::new(a.bind, a.port);
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            println!("listening on http://{addr}");
            rt.block_on(treeplan_service::serve(addr, opts))?;
            Ok(0)
        }
    }
}
