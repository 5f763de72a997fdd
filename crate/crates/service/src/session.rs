//! One editing session: the prepared tree, the last committed solution and
//! the single solve job that may be running.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};

use arc_swap::ArcSwapOption;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use treeplan::embedding::{apply_edit, edit_seed, solve, solve_pinned, validate_edit, EditError, EnergyWeights};
use treeplan::pso::SwarmConfig;
use treeplan::skeleton::NodeId;
use treeplan::viewpoint::ViewSearchConfig;
use treeplan::{EmbeddingSolutionF64, PreparedF64, SkeletonTreeF64};

/// Solver settings fixed when the session is created.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionConfig {
    pub weights: EnergyWeights,
    /// Initial solve. Its seed is the session seed.
    pub swarm: SwarmConfig,
    pub view: ViewSearchConfig,
    /// Swarm size for re-solves after edits and weight changes.
    pub edit_particles: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            weights: EnergyWeights::default(),
            swarm: SwarmConfig::default(),
            view: ViewSearchConfig::default(),
            edit_particles: 4096,
        }
    }
}

impl SessionConfig {
    /// Swarm for the `index`-th log entry.
    pub fn edit_swarm(&self, index: usize) -> SwarmConfig {
        SwarmConfig { particles: self.edit_particles, seed: edit_seed(self.swarm.seed, index), ..self.swarm.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Edit {
    pub segment_id: usize,
    pub anchor_node_id: NodeId,
    pub rotation_radians: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEntry {
    Edit(Edit),
    Weights { weights: EnergyWeights },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveState {
    Idle,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressFrame {
    pub c: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobDone {
    pub done: bool,
    pub job_id: u64,
    pub crossings: Option<usize>,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

/// What the progress socket carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Event {
    Progress(ProgressFrame),
    Done(JobDone),
}

#[derive(Debug)]
pub struct Snapshot {
    /// Bumped on every commit.
    pub version: u64,
    pub solution: EmbeddingSolutionF64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Status {
    pub session_id: String,
    pub state: SolveState,
    pub job_id: u64,
    pub version: Option<u64>,
    pub crossings: Option<usize>,
    /// The committed solution still has crossings.
    pub residual: bool,
    pub edits: usize,
    pub error: Option<String>,
}

#[derive(Debug, PartialEq)]
pub enum SubmitError {
    Busy,
    /// No committed solution to edit yet (initial solve failed).
    NoSolution,
    Invalid(String),
}

struct Control {
    state: SolveState,
    job: u64,
    /// Events of the latest job, replayed to late subscribers.
    events: Vec<Event>,
    log: Vec<LogEntry>,
    weights: EnergyWeights,
    error: Option<String>,
}

pub struct Session {
    pub id: String,
    pub config: SessionConfig,
    prepared: OnceLock<Arc<PreparedF64>>,
    snapshot: ArcSwapOption<Snapshot>,
    control: Mutex<Control>,
    events: broadcast::Sender<Event>,
}

enum Job {
    Initial(SkeletonTreeF64),
    Edit(Edit),
    Weights(EnergyWeights),
}

impl Session {
    /// Creates the session and schedules the initial solve on the blocking
    /// pool. Must be called inside a tokio runtime.
    pub fn start(id: String, tree: SkeletonTreeF64, config: SessionConfig) -> Arc<Self> {
        let (events, _) = broadcast::channel(1024);
        let session = Arc::new(Self {
            id,
            control: Mutex::new(Control {
                state: SolveState::Running,
                job: 1,
                events: Vec::new(),
                log: Vec::new(),
                weights: config.weights.clone(),
                error: None,
            }),
            config,
            prepared: OnceLock::new(),
            snapshot: ArcSwapOption::empty(),
            events,
        });
        session.spawn(1, Job::Initial(tree));
        session
    }

    pub fn prepared(&self) -> Option<&Arc<PreparedF64>> {
        self.prepared.get()
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.load_full()
    }

    pub fn log(&self) -> Vec<LogEntry> {
        self.control.lock().log.clone()
    }

    pub fn status(&self) -> Status {
        let snap = self.snapshot();
        let c = self.control.lock();
        let crossings = snap.as_ref().map(|s| s.solution.crossings);
        Status {
            session_id: self.id.clone(),
            state: c.state,
            job_id: c.job,
            version: snap.as_ref().map(|s| s.version),
            crossings,
            residual: crossings.is_some_and(|x| x > 0),
            edits: c.log.len(),
            error: c.error.clone(),
        }
    }

    /// Buffered events of the latest job plus a live receiver, taken under
    /// one lock so nothing falls between them.
    pub fn subscribe(&self) -> (Vec<Event>, broadcast::Receiver<Event>) {
        let c = self.control.lock();
        (c.events.clone(), self.events.subscribe())
    }

    pub fn submit_edit(self: &Arc<Self>, edit: Edit) -> Result<u64, SubmitError> {
        if !edit.rotation_radians.is_finite() {
            return Err(SubmitError::Invalid("rotation must be finite".into()));
        }
        let prepared = self.prepared().ok_or(SubmitError::Busy)?;
        validate_edit(&prepared.model(), edit.segment_id, edit.anchor_node_id)
            .map_err(|e| SubmitError::Invalid(e.to_string()))?;
        self.submit(LogEntry::Edit(edit.clone()), Job::Edit(edit))
    }

    pub fn submit_weights(self: &Arc<Self>, weights: EnergyWeights) -> Result<u64, SubmitError> {
        weights.validate().map_err(SubmitError::Invalid)?;
        self.submit(LogEntry::Weights { weights: weights.clone() }, Job::Weights(weights))
    }

    fn submit(self: &Arc<Self>, entry: LogEntry, job: Job) -> Result<u64, SubmitError> {
        let mut c = self.control.lock();
        if c.state == SolveState::Running {
            return Err(SubmitError::Busy);
        }
        if self.snapshot.load().is_none() {
            return Err(SubmitError::NoSolution);
        }
        c.state = SolveState::Running;
        c.job += 1;
        c.events.clear();
        c.error = None;
        if let Job::Weights(w) = &job {
            c.weights = w.clone();
        }
        c.log.push(entry);
        let id = c.job;
        drop(c);
        self.spawn(id, job);
        Ok(id)
    }

    fn publish(&self, ev: Event) {
        let mut c = self.control.lock();
        c.events.push(ev.clone());
        let _ = self.events.send(ev);
    }

    fn spawn(self: &Arc<Self>, job_id: u64, job: Job) {
        let s = Arc::clone(self);
        tokio::task::spawn_blocking(move || {
            let outcome = catch_unwind(AssertUnwindSafe(|| s.run(job)))
                .unwrap_or_else(|_| Err("solver panicked".to_string()));
            s.finish(job_id, outcome);
        });
    }

    fn run(&self, job: Job) -> Result<EmbeddingSolutionF64, String> {
        let progress = |c: usize, energy: f64| self.publish(Event::Progress(ProgressFrame { c, energy }));
        if let Job::Initial(tree) = job {
            let p = PreparedF64::new(tree, &self.config.view).map_err(|e| e.to_string())?;
            let p = self.prepared.get_or_init(|| Arc::new(p));
            return Ok(solve(&p.model(), &self.config.weights, &self.config.swarm, progress));
        }
        let p = self.prepared().expect("prepared before edits");
        let current = self.snapshot().expect("committed before edits");
        let (index, weights) = {
            let c = self.control.lock();
            (c.log.len() - 1, c.weights.clone())
        };
        let cfg = self.config.edit_swarm(index);
        let model = p.model();
        match job {
            Job::Edit(e) => apply_edit(
                &model,
                &current.solution,
                e.segment_id,
                e.anchor_node_id,
                e.rotation_radians,
                &weights,
                &cfg,
                progress,
            )
            .map_err(|e| e.to_string()),
            Job::Weights(w) => Ok(solve_pinned(&model, &current.solution, &w, &cfg, progress)),
            Job::Initial(_) => unreachable!(),
        }
    }

    fn finish(&self, job_id: u64, outcome: Result<EmbeddingSolutionF64, String>) {
        let done = match outcome {
            Ok(solution) => {
                let version = self.snapshot().map_or(1, |s| s.version + 1);
                let (crossings, energy) = (solution.crossings, solution.energy);
                self.snapshot.store(Some(Arc::new(Snapshot { version, solution })));
                JobDone { done: true, job_id, crossings: Some(crossings), energy: Some(energy), error: None }
            }
            Err(error) => JobDone { done: true, job_id, crossings: None, energy: None, error: Some(error) },
        };
        let mut c = self.control.lock();
        c.state = if done.error.is_some() && self.snapshot.load().is_none() {
            SolveState::Failed
        } else {
            SolveState::Done
        };
        c.error = done.error.clone();
        c.events.push(Event::Done(done.clone()));
        let _ = self.events.send(Event::Done(done));
    }
}

/// Recomputes a session's solution from scratch: the initial solve followed
/// by every log entry with its derived seed.
pub fn replay(
    prepared: &PreparedF64,
    config: &SessionConfig,
    log: &[LogEntry],
) -> Result<EmbeddingSolutionF64, EditError> {
    let model = prepared.model();
    let mut weights = config.weights.clone();
    let mut cur = solve(&model, &weights, &config.swarm, |_, _| {});
    for (i, entry) in log.iter().enumerate() {
        let cfg = config.edit_swarm(i);
        cur = match entry {
            LogEntry::Edit(e) => apply_edit(
                &model,
                &cur,
                e.segment_id,
                e.anchor_node_id,
                e.rotation_radians,
                &weights,
                &cfg,
                |_, _| {},
            )?,
            LogEntry::Weights { weights: w } => {
                weights = w.clone();
                solve_pinned(&model, &cur, &weights, &cfg, |_, _| {})
            }
        };
    }
    Ok(cur)
}
