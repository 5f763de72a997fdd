//! Box-constrained particle swarm with the damped update
//!
//! ```text
//! x' = x + ω_g (g − x) + ω_p (p − x) + ω_inert (u + γ)
//! ```
//!
//! where `g` is the swarm's best-ever position, `p` the particle's own
//! best, `u` the particle's previous step and `γ` a uniform jitter. Every
//! update is clamped to the bounds.
//!
//! Objective evaluations inside one iteration run in parallel; all random
//! draws and the best-position reduction happen sequentially in particle
//! order, so a run is fully determined by its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Swarm size, iteration cap and update weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SwarmConfig {
    pub particles: usize,
    pub max_iterations: usize,
    pub omega_global: f64,
    pub omega_personal: f64,
    pub omega_inertia: f64,
    /// Half-width of the uniform jitter `γ` added to the inertia term.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particles: 40_960,
            max_iterations: 100,
            omega_global: 0.05,
            omega_personal: 0.05,
            omega_inertia: 0.0375,
            jitter: 0.05,
            seed: 0,
        }
    }
}

/// Per-dimension closed interval. A dimension with `lo == hi` is frozen.
#[derive(Clone, Debug)]
pub struct Bounds<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> Bounds<T> {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, x: &mut [T]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(lo).min(hi);
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<T> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| {
                let u = T::lit(rng.gen::<f64>());
                lo + (hi - lo) * u
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Particle<T> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub best_position: Vec<T>,
    pub best_energy: T,
}

#[derive(Clone, Debug)]
pub struct SwarmResult<T> {
    pub best_position: Vec<T>,
    pub best_energy: T,
    /// Index of the particle whose personal best is the result.
    pub best_particle: usize,
    /// Number of evaluation rounds performed.
    pub iterations: usize,
    /// Best-ever energy after each round.
    pub history: Vec<T>,
    /// Every energy evaluated, row per round; only kept when requested.
    pub probes: Option<Vec<Vec<T>>>,
}

/// A configured swarm run: bounds, fixed starting particles and a stop
/// threshold.
pub struct Swarm<'a, T> {
    pub config: &'a SwarmConfig,
    pub bounds: Bounds<T>,
    /// Starting positions for particles `0..seeds.len()`; the rest are
    /// drawn uniformly inside the bounds.
    pub seeds: Vec<Vec<T>>,
    /// Stop as soon as the best energy is at or below this value.
    pub target: Option<T>,
    pub keep_probes: bool,
}

impl<'a, T: Real> Swarm<'a, T> {
    pub fn new(config: &'a SwarmConfig, bounds: Bounds<T>) -> Self {
        Self { config, bounds, seeds: Vec::new(), target: None, keep_probes: false }
    }

    /// Runs the swarm. `observe(round, best_energy)` is called after each
    /// evaluation round.
    pub fn run<F, O>(&self, objective: F, mut observe: O) -> SwarmResult<T>
    where
        F: Fn(&[T]) -> T + Sync,
        O: FnMut(usize, T),
    {
        let cfg = self.config;
        let dim = self.bounds.dim();
        let n = cfg.particles.max(self.seeds.len()).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

        let mut swarm: Vec<Particle<T>> = (0..n)
            .map(|i| {
                let mut position = match self.seeds.get(i) {
                    Some(s) => s.clone(),
                    None => self.bounds.sample(&mut rng),
                };
                self.bounds.clamp(&mut position);
                Particle {
                    best_position: position.clone(),
                    position,
                    velocity: vec![T::zero(); dim],
                    best_energy: T::infinity(),
                }
            })
            .collect();

        let (wg, wp, wi) =
            (T::lit(cfg.omega_global), T::lit(cfg.omega_personal), T::lit(cfg.omega_inertia));
        let jitter = cfg.jitter;

        let mut best_particle = 0;
        let mut history = Vec::new();
        let mut probes = self.keep_probes.then(Vec::new);
        let mut round = 0;
        let rounds = cfg.max_iterations.max(1);
        while round < rounds {
            round += 1;
            let energies: Vec<T> = swarm.par_iter().map(|p| objective(&p.position)).collect();
            for (p, &e) in swarm.iter_mut().zip(&energies) {
                // NaN never replaces a best
                if e < p.best_energy {
                    p.best_energy = e;
                    p.best_position.clone_from(&p.position);
                }
            }
            // lowest index wins ties
            for (i, p) in swarm.iter().enumerate() {
                if p.best_energy < swarm[best_particle].best_energy {
                    best_particle = i;
                }
            }
            let best = swarm[best_particle].best_energy;
            history.push(best);
            if let Some(pr) = probes.as_mut() {
                pr.push(energies);
            }
            observe(round, best);
            if self.target.is_some_and(|t| best <= t) || round == rounds {
                break;
            }

            let global = swarm[best_particle].best_position.clone();
            for p in swarm.iter_mut() {
                let mut next = Vec::with_capacity(dim);
                for k in 0..dim {
                    let x = p.position[k];
                    let gamma = T::lit(rng.gen_range(-jitter..=jitter));
                    next.push(
                        x + wg * (global[k] - x) + wp * (p.best_position[k] - x) + wi * (p.velocity[k] + gamma),
                    );
                }
                self.bounds.clamp(&mut next);
                for k in 0..dim {
                    p.velocity[k] = next[k] - p.position[k];
                }
                p.position = next;
            }
        }

        let winner = &swarm[best_particle];
        SwarmResult {
            best_position: winner.best_position.clone(),
            best_energy: winner.best_energy,
            best_particle,
            iterations: round,
            history,
            probes,
        }
    }
}
