//! Property tests for the structural and numerical invariants.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treespec::charfn::Eigenvalue;
use treespec::graph::{EdgeId, VertexId};
use treespec::inverse::{CoefficientSource, Environment, PartFunctions};
use treespec::io::{read_spectra, write_spectra, TreeFile};
use treespec::spectral::TruncatedProduct;
use treespec::verify::{split_equivalence, Outcome, VerifyOptions};
use treespec::{
    assemble_char_fn, fundamental_pair, split_at_vertex, Bc, MetricTree, Potential, PotentialSet, ProblemSpec,
    SpectralParameter, SpectrumSet, C64,
};

const TOL: f64 = 1e-10;

fn edge_count() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![3usize, 5, 6, 7, 8, 9])
}

fn tree_from(seed: u64, edges: usize) -> MetricTree {
    common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), edges, (0.5, 1.5))
}

fn potential() -> impl Strategy<Value = Potential> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(Potential::constant),
        prop::collection::vec(-3.0..3.0f64, 1..4).prop_map(Potential::pwc),
        prop::collection::vec(-3.0..3.0f64, 2..10).prop_map(Potential::grid),
    ]
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_parts_partition_the_edges(seed in any::<u64>(), m in edge_count()) {
        let tree = tree_from(seed, m);
        prop_assert!(tree.validate().is_valid());
        for w in tree.internal_vertices() {
            let split = split_at_vertex(&tree, w).unwrap();
            prop_assert_eq!(split.parts.len(), tree.degree(w));
            let total: usize = split.parts.iter().map(|p| p.tree.edge_count()).sum();
            prop_assert_eq!(total, m);
            let seen: BTreeSet<usize> = split.parts.iter().flat_map(|p| p.edge_origin.iter().map(|e| e.0)).collect();
            prop_assert_eq!(seen.len(), m);
            for p in &split.parts {
                prop_assert!(p.tree.validate().is_valid() || p.tree.edge_count() == 1);
            }
            let merged = split.reassemble();
            for (j, e) in tree.edges().iter().enumerate() {
                prop_assert_eq!(merged[j], (EdgeId(j), e.from, e.to, e.length));
            }
        }
    }

    #[test]
    fn boundary_edges_start_at_the_boundary(seed in any::<u64>(), m in edge_count()) {
        let tree = tree_from(seed, m);
        for v in tree.boundary_vertices() {
            let (id, _) = tree.boundary_edge(v).unwrap();
            prop_assert_eq!(tree.edge(id).from, v);
        }
    }

    #[test]
    fn wronskian_is_one(q in potential(), len in 0.3..2.0f64, re in -50.0..400.0f64, im in -20.0..20.0f64, frac in 0.0..1.0f64) {
        let tree = MetricTree::single_edge(len);
        let sp = SpectralParameter::from_lambda(C64::new(re, im));
        let fp = fundamental_pair(tree.edge(EdgeId(0)), &q, frac * len, sp, TOL).unwrap();
        prop_assert!((fp.wronskian() - 1.0).norm() <= 10.0 * TOL * fp.c.norm().max(fp.s.norm() * sp.rho.norm()).max(1.0).powi(2),
            "W = {}", fp.wronskian());
    }

    #[test]
    fn real_data_gives_real_solutions(q in potential(), len in 0.3..2.0f64, lambda in -50.0..400.0f64) {
        let tree = MetricTree::single_edge(len);
        let fp = fundamental_pair(tree.edge(EdgeId(0)), &q, len, SpectralParameter::real(lambda), TOL).unwrap();
        for v in [fp.c, fp.cp, fp.s, fp.sp] {
            prop_assert!(v.im.abs() <= 1e-12 * v.norm().max(1.0), "{v}");
        }
    }

    #[test]
    fn tree_file_round_trip(seed in any::<u64>(), m in edge_count(), neumann in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = common::random_tree(&mut rng, m, (0.5, 1.5));
        let q = common::random_potentials(&mut rng, &tree, 2.0);
        let mut spec = ProblemSpec::dirichlet(tree.clone(), q).unwrap();
        if neumann {
            let v = tree.boundary_vertices()[1];
            spec = ProblemSpec::new(tree.clone(), (*spec.potentials).clone(), spec.bc.clone().with(v, Bc::Neumann)).unwrap();
        }
        let text = TreeFile::from_spec(&spec, Some(EdgeId(1))).to_json().unwrap();
        let back = TreeFile::from_json(&text).unwrap().load().unwrap();
        prop_assert_eq!(&back.spec.tree, &spec.tree);
        prop_assert_eq!(&*back.spec.potentials, &*spec.potentials);
        prop_assert_eq!(back.known_edge, Some(EdgeId(1)));
        for v in tree.boundary_vertices() {
            prop_assert_eq!(back.spec.bc.get(v), spec.bc.get(v));
        }
    }

    #[test]
    fn spectra_csv_round_trip(values in prop::collection::vec((-1e3..1e4f64, 1usize..4), 0..30)) {
        let set = SpectrumSet::from_values("L0", (-1e3, 1e4), &values);
        let mut buf = Vec::new();
        write_spectra(&mut buf, std::slice::from_ref(&set)).unwrap();
        let back = read_spectra(buf.as_slice()).unwrap();
        let flat = |s: &SpectrumSet| s.eigenvalues.iter().map(|e: &Eigenvalue| (e.lambda, e.multiplicity)).collect::<Vec<_>>();
        if values.is_empty() {
            prop_assert!(back.iter().all(|s| s.eigenvalues.is_empty()));
        } else {
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(flat(&back[0]), flat(&set));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn determinant_is_conjugate_symmetric(seed in any::<u64>(), m in edge_count(), re in -20.0..200.0f64, im in 0.1..10.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = common::random_tree(&mut rng, m, (0.5, 1.5));
        let q = common::random_potentials(&mut rng, &tree, 2.0);
        let cf = assemble_char_fn(&ProblemSpec::dirichlet(tree, q).unwrap());
        let l = C64::new(re, im);
        let (a, b) = (cf.eval(l).unwrap(), cf.eval(l.conj()).unwrap());
        prop_assert!(rel(a.conj(), b) <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn split_ratio_is_constant(seed in any::<u64>(), m in edge_count(), pick in any::<prop::sample::Index>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = common::random_tree(&mut rng, m, (0.5, 1.5));
        let q = common::random_potentials(&mut rng, &tree, 2.0);
        let spec = ProblemSpec::dirichlet(tree.clone(), q).unwrap();
        let inner = tree.internal_vertices();
        let w: VertexId = inner[pick.index(inner.len())];
        let check = split_equivalence(&spec, w, &VerifyOptions::default()).unwrap();
        prop_assert_eq!(check.outcome, Outcome::Pass, "residual {}", check.max_residual);
    }

    #[test]
    fn identical_spectra_reproduce_the_reference(l in -30.0..300.0f64, im in 0.0..5.0f64) {
        let spec = common::five_edge(PotentialSet::zero(5));
        let cf = assemble_char_fn(&spec);
        let zeros: Vec<f64> = (1..=12).map(|n| (n as f64 * 0.9).powi(2)).collect();
        let tp = TruncatedProduct::new(cf.clone(), &zeros, &zeros).unwrap();
        let lambda = C64::new(l, im);
        prop_assert_eq!(tp.eval(lambda).unwrap(), cf.eval(lambda).unwrap());
    }

    #[test]
    fn forward_ratio_solves_the_quadratic(c in prop::collection::vec(-2.0..2.0f64, 5), re in 0.3..8.0f64, im in 0.0..2.0f64) {
        let env = std::sync::Arc::new(Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(2)).unwrap());
        let q = PotentialSet(c.iter().copied().map(Potential::constant).collect());
        let src = CoefficientSource::forward(env.clone(), &q).unwrap();
        let truth = PartFunctions::new(&env, &q).unwrap();
        let rho = C64::new(re, im);
        let row = src.row(rho * rho).unwrap();
        prop_assume!(!row.is_degenerate());
        let m = truth.ratio2(rho * rho);
        prop_assume!(m.is_ok());
        prop_assert!(row.quad_residual(m.unwrap()) <= 1e-8);
    }
}
