//! Cutting boundary edges off a tree: from one Weyl function M_k at a
//! boundary vertex next to v and the potentials on the boundary edges at v,
//! the Weyl function of the remaining tree at v.

use crate::charfn::{ProblemSpec, WeylSample};
use crate::graph::{EdgeEnd, EdgeId, Subtree, VertexId};
use crate::ode::{transfer, FundamentalPair, SpectralParameter};
use crate::{Error, Result, C64};

/// Relative floor on the transfer denominators.
pub const CUT_FLOOR: f64 = 1e-10;

/// Result of a cut: the reduced tree, its Weyl function at v (local id)
/// and the indices of rejected sample points.
#[derive(Clone, Debug)]
pub struct CutResult {
    pub reduced: Subtree,
    pub sample: WeylSample,
    pub rejected: Vec<usize>,
}

/// Transfer from the boundary end of edge `e` (which sits at `k`) to its
/// other end.
fn boundary_transfer(spec: &ProblemSpec, e: EdgeId, end: EdgeEnd, lambda: C64) -> Result<FundamentalPair> {
    let length = spec.tree.edge(e).length;
    let q = spec.potentials.get(e.0);
    let q = match end {
        EdgeEnd::Start => q.clone(),
        EdgeEnd::End => q.reflect(length),
    };
    transfer(&q, length, length, SpectralParameter::from_lambda(lambda), spec.tol)
}

/// m_{G′}(λ) = (C′_k + M_k S′_k)/(C_k + M_k S_k) + Σ_{j ≠ k} S′_j/S_j, with the
/// sums over the cut edges and all values at the far end (at v).
pub fn cut_boundary_edges(spec: &ProblemSpec, v: VertexId, cut: &[VertexId], sample: &WeylSample) -> Result<CutResult> {
    let tree = &spec.tree;
    if cut.is_empty() {
        // nothing to cut: G′ = G and the sample must already sit at v
        if sample.vertex != v {
            return Err(Error::Invalid(
                "with nothing to cut the Weyl sample must sit at v".into(),
            ));
        }
        let all: Vec<EdgeId> = (0..tree.edge_count()).map(EdgeId).collect();
        return Ok(CutResult {
            reduced: tree.subgraph(&all, &[])?,
            sample: sample.clone(),
            rejected: vec![],
        });
    }
    if tree.is_boundary(v) {
        return Err(Error::Invalid(format!(
            "vertex {} is a boundary vertex",
            tree.vertex_label(v)
        )));
    }
    let mut cut_edges = Vec::new();
    for &k in cut {
        let (e, end) = tree
            .boundary_edge(k)
            .ok_or_else(|| Error::Invalid(format!("vertex {} is not a boundary vertex", tree.vertex_label(k))))?;
        if tree.edge(e).other(k) != v {
            return Err(Error::Invalid(format!(
                "boundary vertex {} is not adjacent to {}",
                tree.vertex_label(k),
                tree.vertex_label(v)
            )));
        }
        cut_edges.push((k, e, end));
    }
    let rest: Vec<EdgeId> = tree
        .incident(v)
        .iter()
        .map(|&(e, _)| e)
        .filter(|e| !cut_edges.iter().any(|c| c.1 == *e))
        .collect();
    if rest.len() != 1 {
        return Err(Error::Invalid(format!(
            "vertex {} must keep exactly one edge after the cut, keeps {}",
            tree.vertex_label(v),
            rest.len()
        )));
    }
    let kept = tree.component_edges(rest[0], v);
    let reduced = tree.subgraph(&kept, &[])?;
    let local_v = reduced.local_vertex(v).expect("v stays in the reduced tree");
    let &(_, ek, endk) = cut_edges
        .iter()
        .find(|c| c.0 == sample.vertex)
        .ok_or_else(|| Error::Invalid("the Weyl sample must sit at a cut vertex".into()))?;

    let mut points = Vec::new();
    let mut rejected = Vec::new();
    for (i, &(lambda, m)) in sample.points.iter().enumerate() {
        let fk = boundary_transfer(spec, ek, endk, lambda)?;
        let den = fk.c + m * fk.s;
        let mut ok = den.norm() > CUT_FLOOR * (fk.c.norm() + (m * fk.s).norm());
        let mut value = (fk.cp + m * fk.sp) / den;
        for &(_, e, end) in &cut_edges {
            if e == ek {
                continue;
            }
            let f = boundary_transfer(spec, e, end, lambda)?;
            ok &= f.s.norm() * lambda.norm().sqrt().max(1.0) > CUT_FLOOR * f.sp.norm();
            value += f.sp / f.s;
        }
        if ok && value.is_finite() {
            points.push((lambda, value));
        } else {
            rejected.push(i);
        }
    }
    Ok(CutResult {
        reduced,
        sample: WeylSample {
            vertex: local_v,
            points,
        },
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{weyl_function, Bc};
    use crate::graph::MetricTree;
    use crate::potential::{Potential, PotentialSet};

    fn grid() -> Vec<C64> {
        vec![
            C64::new(1.5, 0.0),
            C64::new(7.0, 0.3),
            C64::new(-3.0, 0.0),
            C64::new(15.0, 2.0),
        ]
    }

    fn check(spec: &ProblemSpec, v: VertexId, cut: &[VertexId], k: VertexId) {
        let m = weyl_function(spec, k, &grid()).unwrap();
        let out = cut_boundary_edges(spec, v, cut, &m).unwrap();
        assert!(out.rejected.is_empty());
        let sub = spec.restrict(&out.reduced, &|_| Bc::Dirichlet).unwrap();
        let direct = weyl_function(&sub, out.sample.vertex, &grid()).unwrap();
        for (a, b) in out.sample.points.iter().zip(&direct.points) {
            assert!((a.1 - b.1).norm() < 1e-8 * b.1.norm().max(1.0), "{} vs {}", a.1, b.1);
        }
    }

    #[test]
    fn star_cut_matches_remaining_edge() {
        let tree = MetricTree::star(&[1.0, 0.8, 1.3]).unwrap();
        let q = PotentialSet(vec![
            Potential::constant(0.4),
            Potential::pwc(vec![1.0, -0.5]),
            Potential::constant(-0.8),
        ]);
        let spec = ProblemSpec::dirichlet(tree, q).unwrap();
        let center = VertexId(3);
        check(&spec, center, &[VertexId(0), VertexId(1)], VertexId(0));
        check(&spec, center, &[VertexId(0), VertexId(1)], VertexId(1));
    }

    #[test]
    fn five_edge_cut_at_degree_three_vertex() {
        let tree = MetricTree::five_edge([1.0, 0.9, 1.1, 0.7, 1.2]);
        let q = PotentialSet(
            (0..5)
                .map(|j| Potential::pwc(vec![0.2 * j as f64, 0.3 - 0.1 * j as f64]))
                .collect(),
        );
        let spec = ProblemSpec::dirichlet(tree, q).unwrap();
        // v4, v5 hang off v6; cutting them leaves e1, e2, e3
        let v6 = spec.tree.vertex_by_label(6).unwrap();
        let v4 = spec.tree.vertex_by_label(4).unwrap();
        let v5 = spec.tree.vertex_by_label(5).unwrap();
        check(&spec, v6, &[v4, v5], v4);
    }

    #[test]
    fn empty_cut_is_identity() {
        let tree = MetricTree::star(&[1.0, 1.0, 1.0]).unwrap();
        let spec = ProblemSpec::dirichlet(tree, PotentialSet::zero(3)).unwrap();
        let m = weyl_function(&spec, VertexId(0), &grid()).unwrap();
        let out = cut_boundary_edges(&spec, VertexId(0), &[], &m).unwrap();
        assert_eq!(out.sample, m);
        assert_eq!(out.reduced.tree.edge_count(), 3);
        assert!(cut_boundary_edges(&spec, VertexId(3), &[], &m).is_err());
    }
}
