//! Shared builders for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use treespec::{MetricTree, Potential, PotentialSet, ProblemSpec};

/// Random tree with `edges` ∈ {3, 5, 6, 7, 8, 9, ...} edges and no vertex of
/// degree 2: start from a 3-star and give a random leaf two or three new
/// leaves until the edge count is reached. Rooted at a boundary vertex.
pub fn random_tree(rng: &mut ChaCha8Rng, edges: usize, lengths: (f64, f64)) -> MetricTree {
    assert!(edges >= 3 && edges != 4, "no such tree without degree-2 vertices");
    let mut list: Vec<(usize, usize)> = vec![(1, 0), (2, 0), (3, 0)];
    let mut n = 4;
    while list.len() < edges {
        let left = edges - list.len();
        let k = match left {
            2 | 3 => left,
            4 => 2,
            _ => rng.gen_range(2..=3),
        };
        let leaves: Vec<usize> = (0..n)
            .filter(|&v| list.iter().filter(|e| e.0 == v || e.1 == v).count() == 1)
            .collect();
        let at = leaves[rng.gen_range(0..leaves.len())];
        for _ in 0..k {
            list.push((at, n));
            n += 1;
        }
    }
    let with_len: Vec<(usize, usize, f64)> = list
        .iter()
        .map(|&(a, b)| (a, b, rng.gen_range(lengths.0..lengths.1)))
        .collect();
    let root = (0..n)
        .find(|&v| list.iter().filter(|e| e.0 == v || e.1 == v).count() == 1)
        .expect("trees have leaves");
    MetricTree::from_edges(n, &with_len, root).expect("generated tree is valid")
}

/// Random constants on even edges, random 9-point grid samples on odd ones.
pub fn random_potentials(rng: &mut ChaCha8Rng, tree: &MetricTree, scale: f64) -> PotentialSet {
    PotentialSet(
        (0..tree.edge_count())
            .map(|j| {
                if j % 2 == 0 {
                    Potential::constant(rng.gen_range(-scale..scale))
                } else {
                    Potential::grid((0..9).map(|_| rng.gen_range(-scale..scale)).collect())
                }
            })
            .collect(),
    )
}

pub fn random_constants(rng: &mut ChaCha8Rng, edges: usize, scale: f64) -> PotentialSet {
    PotentialSet(
        (0..edges)
            .map(|_| Potential::constant(rng.gen_range(-scale..scale)))
            .collect(),
    )
}

pub fn five_edge(q: PotentialSet) -> ProblemSpec {
    ProblemSpec::dirichlet(MetricTree::five_edge([1.0; 5]), q).unwrap()
}
