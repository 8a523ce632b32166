//! Root tracking against the forward Weyl ratio.

use std::sync::Arc;

use treespec::graph::EdgeId;
use treespec::inverse::{solve_quadratic_track, CoefficientSource, Environment, PartFunctions, TrackOptions};
use treespec::{MetricTree, Potential, PotentialSet, C64};

fn selected(q: &PotentialSet, rhos: &[f64]) -> (usize, usize) {
    let env = Arc::new(Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(2)).unwrap());
    let src = CoefficientSource::forward(env.clone(), q).unwrap();
    let truth = PartFunctions::new(&env, q).unwrap();
    let grid: Vec<C64> = rhos.iter().map(|r| C64::new(r * r, 0.0)).collect();
    let track = solve_quadratic_track(&src, &grid, &TrackOptions::default()).unwrap();
    let hits = track
        .values
        .iter()
        .zip(&grid)
        .filter(|(v, &l)| {
            let t = truth.ratio2(l).unwrap();
            v.is_some_and(|m| (m - t).norm() <= 1e-6 * t.norm().max(1.0))
        })
        .count();
    (hits, grid.len())
}

// Nodes whose real parts are hit only up to roundoff used to corrupt the
// extrapolation slope and hand the tracker the other root near a pole.
#[test]
fn node_snapping_keeps_the_branch() {
    let q = PotentialSet(
        (0..5)
            .map(|j| Potential::sampled(1.0, 9, |x| (j as f64 + 1.0) * x * (1.0 - x)))
            .collect(),
    );
    let rhos: Vec<f64> = (57..=68).map(|i| 0.55 + 0.1 * i as f64).collect();
    let (hits, n) = selected(&q, &rhos);
    assert_eq!(hits, n);
}

#[test]
fn constant_potentials_on_a_dense_grid() {
    let q = PotentialSet((0..5).map(|j| Potential::constant(0.4 * j as f64 - 1.0)).collect());
    let rhos: Vec<f64> = (0..60).map(|i| 0.4 + 0.13 * i as f64).collect();
    let (hits, n) = selected(&q, &rhos);
    assert_eq!(hits, n);
}
