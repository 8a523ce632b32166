//! Large-ρ behaviour and λ-smoothness of the fundamental solutions.

use treespec::graph::EdgeId;
use treespec::verify::log_log_slope;
use treespec::{fundamental_pair, MetricTree, Potential, SpectralParameter, C64};

const TOL: f64 = 1e-11;

fn smooth() -> Potential {
    Potential::sampled(1.3, 65, |x| 1.0 + (2.0 * x).sin())
}

#[test]
fn deviation_from_free_solutions_decays() {
    let t = 1.3;
    let tree = MetricTree::single_edge(t);
    let q = smooth();
    let (mut dc, mut ds) = (Vec::new(), Vec::new());
    for k in 0..5 {
        let rho = 10.0 * 2f64.powi(k);
        // envelope over a short window so a single near-zero sample does not dominate
        let (mut ec, mut es) = (0.0f64, 0.0f64);
        for j in 0..8 {
            let r = rho + j as f64 * 0.2;
            let fp = fundamental_pair(
                tree.edge(EdgeId(0)),
                &q,
                t,
                SpectralParameter::from_rho(C64::new(r, 0.0)),
                TOL,
            )
            .unwrap();
            ec = ec.max((fp.c.re - (r * t).cos()).abs());
            es = es.max((fp.s.re - (r * t).sin() / r).abs());
        }
        dc.push((rho, ec));
        ds.push((rho, es));
    }
    let (sc, ss) = (log_log_slope(&dc), log_log_slope(&ds));
    assert!(sc <= -0.9, "C slope {sc}");
    assert!(ss <= -1.8, "S slope {ss}");
}

#[test]
fn lambda_derivative_is_richardson_consistent() {
    let tree = MetricTree::single_edge(1.3);
    let q = smooth();
    let at = |l: C64| {
        fundamental_pair(tree.edge(EdgeId(0)), &q, 1.3, SpectralParameter::from_lambda(l), TOL)
            .unwrap()
            .c
    };
    for l0 in [C64::new(-4.0, 0.0), C64::new(7.5, 0.3), C64::new(60.0, 0.0)] {
        let d = |h: f64| (at(l0 + h) - at(l0 - h)) / (2.0 * h);
        let (d1, d2) = (d(1e-2), d(5e-3));
        // centered differences are second order: halving h shrinks the error by ~4
        let extrap = (4.0 * d2 - d1) / 3.0;
        let d3 = d(2.5e-3);
        assert!((d3 - extrap).norm() <= 0.3 * (d2 - extrap).norm().max(1e-9), "λ={l0}");
    }
}
