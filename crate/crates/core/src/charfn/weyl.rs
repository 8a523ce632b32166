//! Weyl functions M_k = −Δ_k/Δ_0 and subtree Weyl ratios Δ^N/Δ^D.

use crate::graph::VertexId;
use crate::par::{collect_indexed, Exec};
use crate::{Error, Result, C64};

use super::{Bc, ProblemSpec};

/// Relative floor on |Δ_0| below which a grid point counts as a pole.
pub const POLE_FLOOR: f64 = 1e-8;
/// Allowed relative gap between the determinant ratio and the linear solve.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

/// Weyl-type samples at one boundary vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylSample {
    pub vertex: VertexId,
    pub points: Vec<(C64, C64)>,
}

impl WeylSample {
    pub fn lambdas(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn negated(mut self) -> Self {
        for p in self.points.iter_mut() {
            p.1 = -p.1;
        }
        self
    }
}

fn check_boundary(spec: &ProblemSpec, k: VertexId) -> Result<()> {
    if k.0 >= spec.tree.vertex_count() || !spec.tree.is_boundary(k) {
        return Err(Error::Invalid(format!("vertex index {} is not a boundary vertex", k.0)));
    }
    Ok(())
}

/// Largest |Δ_D| over a stencil of about a quarter zero spacing around λ.
fn local_scale(spec: &ProblemSpec, k: VertexId, lambda: C64) -> Result<f64> {
    let d = spec.with_bc(k, Bc::Dirichlet);
    let rho = crate::ode::SpectralParameter::from_lambda(lambda).rho;
    let length = spec.tree.total_length().max(1e-3);
    let delta = 2.0 * rho.norm() * std::f64::consts::PI / (4.0 * length) + 1e-3;
    let i = C64::new(0.0, 1.0);
    let mut m: f64 = 0.0;
    for z in [lambda + delta, lambda - delta, lambda + i * delta, lambda - i * delta] {
        m = m.max(d.determinant(z)?.norm());
    }
    Ok(m)
}

/// M_k(λ) at one point, with the pole floor and the solve cross-check.
pub fn weyl_value(spec: &ProblemSpec, k: VertexId, lambda: C64) -> Result<C64> {
    check_boundary(spec, k)?;
    let (d, n, m_solve) = spec.weyl_parts(lambda, k)?;
    let floor = POLE_FLOOR * local_scale(spec, k, lambda)?;
    if !(d.norm() >= floor) || d.norm() == 0.0 {
        return Err(Error::PoleProximity {
            lambda,
            value: d.norm(),
            floor,
        });
    }
    let m = -n / d;
    let mismatch = (m - m_solve).norm() / m.norm().max(1.0);
    if !(mismatch <= CROSS_CHECK_TOL) {
        return Err(Error::WeylMismatch { lambda, mismatch });
    }
    Ok(m)
}

/// Per-point results; a pole at one point does not stop the others.
pub fn weyl_points(spec: &ProblemSpec, k: VertexId, grid: &[C64]) -> Vec<Result<(C64, C64)>> {
    Exec::default().map(grid, |&l| weyl_value(spec, k, l).map(|m| (l, m)))
}

/// M_k on a grid; fails on the first rejected point.
pub fn weyl_function(spec: &ProblemSpec, k: VertexId, grid: &[C64]) -> Result<WeylSample> {
    check_boundary(spec, k)?;
    let points = collect_indexed(weyl_points(spec, k, grid))?;
    Ok(WeylSample { vertex: k, points })
}

/// Δ^N/Δ^D at boundary vertex `at` (a split-vertex copy, typically): the
/// negative of the Weyl function there.
pub fn subtree_weyl_ratio(spec: &ProblemSpec, at: VertexId, grid: &[C64]) -> Result<WeylSample> {
    Ok(weyl_function(spec, at, grid)?.negated())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{split_at_vertex, MetricTree};
    use crate::potential::{Potential, PotentialSet};

    fn grid() -> Vec<C64> {
        vec![
            C64::new(2.0, 0.0),
            C64::new(5.5, 0.0),
            C64::new(20.0, 0.0),
            C64::new(3.0, 2.0),
            C64::new(-4.0, 0.0),
        ]
    }

    #[test]
    fn single_edge_weyl() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let w = weyl_function(&spec, VertexId(0), &grid()).unwrap();
        for (l, m) in w.points {
            let r = crate::ode::SpectralParameter::from_lambda(l).rho;
            let expect = -r * r.cos() / r.sin();
            assert!((m - expect).norm() < 1e-10 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn pole_rejected() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let pts = weyl_points(&spec, VertexId(0), &[C64::new(pi2, 0.0), C64::new(3.0, 0.0)]);
        assert!(matches!(pts[0], Err(Error::PoleProximity { .. })));
        assert!(pts[1].is_ok());
    }

    #[test]
    fn three_edge_part_ratio_matches_determinants() {
        // split at a degree-3 vertex, then the 3-edge part seen from the copy
        let tree =
            MetricTree::from_edges(6, &[(0, 4, 0.8), (1, 4, 1.1), (4, 5, 0.9), (2, 5, 1.2), (3, 5, 0.7)], 0).unwrap();
        let mut q = PotentialSet::zero(5);
        for j in 0..5 {
            q.set(j, Potential::constant(0.3 * j as f64 - 0.5));
        }
        let spec = ProblemSpec::dirichlet(tree.clone(), q).unwrap();
        let w = tree.vertex_by_label(5).unwrap();
        let split = split_at_vertex(&tree, w).unwrap();
        let part = split.parts.iter().find(|p| p.tree.edge_count() == 3).unwrap();
        let sub = spec.restrict(part, &|_| Bc::Dirichlet).unwrap();
        let c = part.copy_of(w).unwrap();
        let ratio = subtree_weyl_ratio(&sub, c, &grid()).unwrap();
        for (l, m) in ratio.points {
            let dn = sub.with_bc(c, Bc::Neumann).determinant(l).unwrap();
            let dd = sub.determinant(l).unwrap();
            assert!((m - dn / dd).norm() < 1e-10 * m.norm().max(1.0));
        }
    }
}
