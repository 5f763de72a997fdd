mod common;

use std::time::{Duration, Instant};

use treeplan::embedding::{count_crossings, embedding_energy, radial_seed, solve, EnergyWeights};
use treeplan::evaluation::{metric1, metric2};
use treeplan::pso::SwarmConfig;
use treeplan::viewpoint::ViewSearchConfig;
use treeplan::{PreparedF64, SkeletonTreeF64};

use common::grid::grid_minimum;
use common::{fixture_tree, narrow_fork, random_fork};
use rand::SeedableRng;

fn prepared(tree: SkeletonTreeF64) -> PreparedF64 {
    PreparedF64::new(tree, &ViewSearchConfig::default()).unwrap()
}

fn swarm(particles: usize, seed: u64) -> SwarmConfig {
    SwarmConfig { particles, seed, ..SwarmConfig::default() }
}

#[test]
fn planar_tree_is_recovered_exactly() {
    let p = prepared(fixture_tree("planar.swc"));
    let global = &p.views.entries[0];
    assert_eq!(global.level, 0);
    assert!(global.energy <= 1e-6, "view energy {}", global.energy);

    let sol = solve(&p.model(), &EnergyWeights::default(), &swarm(4096, 0), |_, _| {});
    assert_eq!(sol.crossings, 0);
    assert!(sol.energy <= 1e-9, "energy {}", sol.energy);
    let uv = sol.dense_uv(p.tree()).unwrap();
    let m1 = metric1(p.tree(), &uv, &p.targets);
    let m2 = metric2(p.tree(), &uv, &p.targets);
    for v in [m1.length_avg, m1.angle_avg, m2.length_avg, m2.angle_avg] {
        assert!(v <= 1e-9, "{m1:?} {m2:?}");
    }
}

fn check_against_grid(tree: SkeletonTreeF64) {
    let p = prepared(tree);
    let model = p.model();
    let w = EnergyWeights::default();
    let t = Instant::now();
    let grid = grid_minimum(&model, &w, 2_000_000);
    assert!(t.elapsed() < Duration::from_secs(60), "grid took {:?}", t.elapsed());
    let (grid_energy, grid_crossings) = embedding_energy(&model, &grid.ratios, &w, &[]);
    assert_eq!(grid_crossings.total, 0);
    assert!((grid_energy - grid.energy).abs() < 1e-12);
    let sol = solve(&model, &w, &SwarmConfig::default(), |_, _| {});
    assert_eq!(sol.crossings, 0);
    assert!(
        sol.energy <= 1.05 * grid.energy + 1e-9,
        "swarm {} grid {} at {:?}",
        sol.energy,
        grid.energy,
        grid.ratios
    );
}

#[test]
fn y_tree_matches_grid_minimum() {
    check_against_grid(fixture_tree("y_tree.swc"));
}

#[test]
fn narrow_fork_matches_grid_minimum() {
    let tree = narrow_fork();
    let p = prepared(tree.clone());
    let model = p.model();
    let identity = model.realize(&vec![[0.0, 0.0]; model.segment_count()], &[]);
    assert!(count_crossings(&tree, &p.segments, &identity).total > 0, "identity must overlap");
    check_against_grid(tree);
}

#[test]
fn random_forks_match_grid_minimum() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        check_against_grid(random_fork(&mut rng));
    }
}

#[test]
fn same_seed_gives_identical_json() {
    let p = prepared(fixture_tree("random20.swc"));
    let run = || solve(&p.model(), &EnergyWeights::default(), &swarm(1024, 42), |_, _| {}).to_json();
    assert_eq!(run(), run());
}

#[test]
fn history_never_increases() {
    let p = prepared(fixture_tree("random20.swc"));
    let mut seen = Vec::new();
    let sol = solve(&p.model(), &EnergyWeights::default(), &swarm(1024, 3), |c, e| seen.push((c, e)));
    assert!(!sol.history.is_empty());
    assert!(sol.history.windows(2).all(|w| w[1] <= w[0]), "{:?}", sol.history);
    assert!(seen.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 > w[0].0));
}

#[test]
fn never_worse_than_radial_seed_ratios() {
    for name in ["y_tree.swc", "star.swc", "random20.swc", "helix.swc"] {
        let p = prepared(fixture_tree(name));
        let model = p.model();
        let w = EnergyWeights::default();
        let radial = radial_seed(&model);
        let (seed_energy, _) = embedding_energy(&model, &radial.ratios, &w, &[]);
        for seed in 0..3 {
            let sol = solve(&model, &w, &swarm(1024, seed), |_, _| {});
            assert!(sol.energy <= seed_energy + 1e-9, "{name} seed {seed}: {} > {seed_energy}", sol.energy);
        }
    }
}

#[test]
fn small_fixtures_are_crossing_free() {
    for name in ["y_tree.swc", "star.swc", "planar.swc", "random20.swc", "helix.swc"] {
        let p = prepared(fixture_tree(name));
        let sol = solve(&p.model(), &EnergyWeights::default(), &swarm(4096, 0), |_, _| {});
        assert_eq!(sol.crossings, 0, "{name}");
        let uv = sol.dense_uv(p.tree()).unwrap();
        assert_eq!(count_crossings(p.tree(), &p.segments, &uv).total, 0, "{name} recount");
    }
}

#[test]
fn f32_solve_is_crossing_free() {
    let tree = treeplan::skeleton::parse_swc::<f32>(&common::fixture("y_tree.swc")).unwrap();
    let p = treeplan::PreparedF32::new(tree, &ViewSearchConfig::default()).unwrap();
    let sol = solve(&p.model(), &EnergyWeights::default(), &swarm(1024, 0), |_, _| {});
    assert_eq!(sol.crossings, 0);
}
