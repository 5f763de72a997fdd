//! Camera exploration path over a view hierarchy.
//!
//! The camera visits subtree views depth first. At each view it swings 90°
//! around the subtree center (the dolly arc), then flies to the next view
//! along a quadratic Bézier curve that bows away from both subtrees.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::scalar::Real;
use crate::viewpoint::{default_up, CameraPose, ViewEntry, ViewHierarchy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Transition,
    Dolly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathConfig {
    pub sample_rate: f64,
    pub dolly_seconds: f64,
    /// Transition speed in world units per second; `None` uses half the
    /// largest camera distance per second.
    pub speed: Option<f64>,
    pub min_transition_seconds: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { sample_rate: 30.0, dolly_seconds: 3.0, speed: None, min_transition_seconds: 0.25 }
    }
}

pub fn bezier_point<T: Real>(p0: Vec3<T>, p1: Vec3<T>, p2: Vec3<T>, t: T) -> Vec3<T> {
    let s = T::one() - t;
    p0 * (s * s) + p1 * (T::lit(2.0) * s * t) + p2 * (t * t)
}

/// Pose `t ∈ [0, 1]` of the way along the quarter circle that starts at the
/// view's pose and turns toward its right vector, always looking at the
/// subtree center.
pub fn dolly_arc<T: Real>(entry: &ViewEntry<T>, t: T) -> CameraPose<T> {
    if t == T::zero() {
        return entry.pose;
    }
    let c = entry.center;
    let (s, co) = (t * T::FRAC_PI_2()).sin_cos();
    let offset = entry.pose.position - c;
    let side = entry.pose.right() * offset.norm();
    CameraPose { position: c + offset * co + side * s, look_at: c, up: entry.pose.up }
}

/// Smallest sphere containing two spheres.
fn enclosing_sphere<T: Real>(c0: Vec3<T>, r0: T, c1: Vec3<T>, r1: T) -> (Vec3<T>, T) {
    let d = c1.distance(c0);
    if d + r1 <= r0 {
        return (c0, r0);
    }
    if d + r0 <= r1 {
        return (c1, r1);
    }
    let r = (d + r0 + r1) / T::lit(2.0);
    let center = c0 + (c1 - c0) * ((r - r0) / d);
    (center, r)
}

/// Middle control point for the flight between two views.
pub fn control_point<T: Real>(from: &ViewEntry<T>, to: &ViewEntry<T>, p0: Vec3<T>, p2: Vec3<T>) -> Vec3<T> {
    let (center, _) = enclosing_sphere(from.center, from.principal_radius, to.center, to.principal_radius);
    let mid = (p0 + p2) / T::lit(2.0);
    let reach = from.distance.max(to.distance);
    let out = (mid - center).normalized().unwrap_or_else(|| {
        let chord = p2 - p0;
        let side = chord.cross(from.pose.up);
        side.normalized().or_else(|| chord.cross(Vec3::unit_x()).normalized()).unwrap_or_else(Vec3::unit_z)
    });
    center + out * (mid - center).norm().max(reach)
}

fn slerp<T: Real>(a: Vec3<T>, b: Vec3<T>, t: T) -> Vec3<T> {
    let dot = a.dot(b).max(-T::one()).min(T::one());
    let omega = dot.acos();
    if omega < T::lit(1e-9) {
        return a;
    }
    let perp = if T::PI() - omega < T::lit(1e-9) {
        // opposite directions: turn through any perpendicular
        a.cross(Vec3::unit_z()).normalized().or_else(|| a.cross(Vec3::unit_x()).normalized())
    } else {
        (b - a * dot).normalized()
    };
    match perp {
        Some(p) => a * (omega * t).cos() + p * (omega * t).sin(),
        None => a,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<T> {
    pub p0: Vec3<T>,
    pub p1: Vec3<T>,
    pub p2: Vec3<T>,
    look0: Vec3<T>,
    look1: Vec3<T>,
    dist0: T,
    dist1: T,
    up0: Vec3<T>,
    up1: Vec3<T>,
}

impl<T: Real> Transition<T> {
    fn new(from: &ViewEntry<T>, to: &ViewEntry<T>) -> Self {
        let start = dolly_arc(from, T::one());
        let end = to.pose;
        let p0 = start.position;
        let p2 = end.position;
        Self {
            p0,
            p1: control_point(from, to, p0, p2),
            p2,
            look0: start.direction(),
            look1: end.direction(),
            dist0: start.distance(),
            dist1: end.distance(),
            up0: start.up,
            up1: end.up,
        }
    }

    pub fn pose(&self, t: T) -> CameraPose<T> {
        if t == T::one() {
            let look_at = self.p2 + self.look1 * self.dist1;
            return CameraPose { position: self.p2, look_at, up: self.up1 };
        }
        let position = bezier_point(self.p0, self.p1, self.p2, t);
        let dir = slerp(self.look0, self.look1, t);
        let dist = self.dist0 + (self.dist1 - self.dist0) * t;
        let up = self.up0.lerp(self.up1, t).reject(dir).normalized().unwrap_or_else(|| default_up(dir));
        CameraPose { position, look_at: position + dir * dist, up }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Motion<T> {
    Dolly(ViewEntry<T>),
    Transition(Transition<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpan<T> {
    pub phase: Phase,
    /// Subtree of the view this phase ends at.
    pub subtree: usize,
    pub start: f64,
    pub end: f64,
    pub motion: Motion<T>,
}

impl<T: Real> PhaseSpan<T> {
    /// Pose at local parameter `u ∈ [0, 1]`.
    pub fn pose(&self, u: T) -> CameraPose<T> {
        match &self.motion {
            Motion::Dolly(e) => dolly_arc(e, u),
            Motion::Transition(tr) => tr.pose(u),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
pub struct CameraKeyframe<T> {
    pub time: f64,
    pub position: Vec3<T>,
    pub look_at: Vec3<T>,
    pub up: Vec3<T>,
    pub phase: Phase,
}

impl<T: Real> CameraKeyframe<T> {
    pub fn pose(&self) -> CameraPose<T> {
        CameraPose { position: self.position, look_at: self.look_at, up: self.up }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraPath<T> {
    pub keyframes: Vec<CameraKeyframe<T>>,
    pub sample_rate: f64,
    pub phases: Vec<PhaseSpan<T>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase", bound = "T: Real")]
struct PathDoc<'a, T> {
    sample_rate: f64,
    duration: f64,
    phases: Vec<PhaseDoc>,
    keyframes: &'a [CameraKeyframe<T>],
}

#[derive(Serialize)]
struct PhaseDoc {
    phase: Phase,
    subtree: usize,
    start: f64,
    end: f64,
}

impl<T: Real> CameraPath<T> {
    pub fn duration(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.end)
    }

    /// Pose at absolute time `time` (clamped to the path).
    pub fn pose_at(&self, time: f64) -> CameraPose<T> {
        let k = self.phases.partition_point(|p| p.end <= time).min(self.phases.len() - 1);
        let span = &self.phases[k];
        let u = ((time - span.start) / (span.end - span.start)).clamp(0.0, 1.0);
        span.pose(T::lit(u))
    }

    /// Keyframes at `k / rate` seconds for every `k` inside the path.
    pub fn sample(&self, rate: f64) -> Vec<CameraKeyframe<T>> {
        let total = self.duration();
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let time = k as f64 / rate;
            if time > total {
                break;
            }
            let k_ix = self.phases.partition_point(|p| p.end <= time).min(self.phases.len() - 1);
            let pose = self.pose_at(time);
            out.push(CameraKeyframe {
                time,
                position: pose.position,
                look_at: pose.look_at,
                up: pose.up,
                phase: self.phases[k_ix].phase,
            });
            k += 1;
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = PathDoc {
            sample_rate: self.sample_rate,
            duration: self.duration(),
            phases: self
                .phases
                .iter()
                .map(|p| PhaseDoc { phase: p.phase, subtree: p.subtree, start: p.start, end: p.end })
                .collect(),
            keyframes: &self.keyframes,
        };
        serde_json::to_string_pretty(&doc).expect("path serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,phase,px,py,pz,lx,ly,lz,ux,uy,uz\n");
        for k in &self.keyframes {
            let phase = match k.phase {
                Phase::Transition => "transition",
                Phase::Dolly => "dolly",
            };
            let _ = write!(s, "{},{phase}", k.time);
            for v in [k.position, k.look_at, k.up] {
                let _ = write!(s, ",{},{},{}", v.x, v.y, v.z);
            }
            s.push('\n');
        }
        s
    }
}

/// Builds the path through `order` (subtree ids, e.g. depth first).
pub fn build_path<T: Real>(views: &ViewHierarchy<T>, order: &[usize], cfg: &PathConfig) -> CameraPath<T> {
    assert!(!order.is_empty(), "a path needs at least one view");
    let speed = cfg.speed.unwrap_or_else(|| {
        let d = views.entries.iter().map(|e| e.distance.to_f64_lossy()).fold(0.0, f64::max);
        (d / 2.0).max(f64::MIN_POSITIVE)
    });
    let mut phases = Vec::new();
    let mut clock = 0.0;
    let mut prev: Option<&ViewEntry<T>> = None;
    for &id in order {
        let entry = views.for_subtree(id);
        if let Some(from) = prev {
            let tr = Transition::new(from, entry);
            let chord = tr.p2.distance(tr.p0).to_f64_lossy();
            let dt = (chord / speed).max(cfg.min_transition_seconds);
            phases.push(PhaseSpan {
                phase: Phase::Transition,
                subtree: id,
                start: clock,
                end: clock + dt,
                motion: Motion::Transition(tr),
            });
            clock += dt;
        }
        phases.push(PhaseSpan {
            phase: Phase::Dolly,
            subtree: id,
            start: clock,
            end: clock + cfg.dolly_seconds,
            motion: Motion::Dolly(entry.clone()),
        });
        clock += cfg.dolly_seconds;
        prev = Some(entry);
    }
    let mut path = CameraPath { keyframes: Vec::new(), sample_rate: cfg.sample_rate, phases };
    path.keyframes = path.sample(cfg.sample_rate);
    path
}
