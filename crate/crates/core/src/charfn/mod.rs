//! Characteristic functions of boundary value problems on (sub)trees.

mod assembly;
pub mod eigen;
pub mod weyl;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::graph::{split_at_vertex, MetricTree, Subtree, VertexId};
use crate::ode::{self, FundamentalPair, SpectralParameter};
use crate::par::Exec;
use crate::potential::PotentialSet;
use crate::spectral::TruncatedProduct;
use crate::{Error, Result, C64};

pub use eigen::{find_eigenvalues, find_eigenvalues_with, EigenOptions, Eigenvalue, SpectrumSet};
pub use weyl::{subtree_weyl_ratio, weyl_function, weyl_points, WeylSample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

impl fmt::Display for Bc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bc::Dirichlet => "D",
            Bc::Neumann => "N",
        })
    }
}

/// One condition per boundary vertex; `None` at internal vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec(Vec<Option<Bc>>);

impl BoundarySpec {
    pub fn dirichlet(tree: &MetricTree) -> Self {
        BoundarySpec(
            tree.vertices()
                .map(|v| tree.is_boundary(v).then_some(Bc::Dirichlet))
                .collect(),
        )
    }

    pub fn with(mut self, v: VertexId, bc: Bc) -> Self {
        self.0[v.0] = Some(bc);
        self
    }

    pub fn get(&self, v: VertexId) -> Option<Bc> {
        self.0.get(v.0).copied().flatten()
    }

    pub fn neumann_count(&self) -> usize {
        self.0.iter().filter(|b| **b == Some(Bc::Neumann)).count()
    }

    /// Check that exactly the boundary vertices carry a condition.
    pub fn check(&self, tree: &MetricTree) -> Result<()> {
        if self.0.len() != tree.vertex_count() {
            return Err(Error::Invalid("boundary spec size differs from vertex count".into()));
        }
        for v in tree.vertices() {
            if tree.is_boundary(v) != self.0[v.0].is_some() {
                return Err(Error::Invalid(format!(
                    "boundary condition mismatch at vertex {}",
                    tree.vertex_label(v)
                )));
            }
        }
        Ok(())
    }
}

/// A boundary value problem: tree, potentials and boundary conditions.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub tree: Arc<MetricTree>,
    pub potentials: Arc<PotentialSet>,
    pub bc: BoundarySpec,
    pub tol: f64,
    corrupt: Option<VertexId>,
}

impl ProblemSpec {
    pub fn new(tree: MetricTree, potentials: PotentialSet, bc: BoundarySpec) -> Result<Self> {
        Self::from_shared(Arc::new(tree), Arc::new(potentials), bc)
    }

    pub fn from_shared(tree: Arc<MetricTree>, potentials: Arc<PotentialSet>, bc: BoundarySpec) -> Result<Self> {
        bc.check(&tree)?;
        if potentials.len() != tree.edge_count() {
            return Err(Error::Invalid(format!(
                "{} potentials for {} edges",
                potentials.len(),
                tree.edge_count()
            )));
        }
        for q in potentials.iter() {
            q.validate()?;
        }
        Ok(ProblemSpec {
            tree,
            potentials,
            bc,
            tol: ode::DEFAULT_TOL,
            corrupt: None,
        })
    }

    /// All-Dirichlet problem L_0.
    pub fn dirichlet(tree: MetricTree, potentials: PotentialSet) -> Result<Self> {
        let bc = BoundarySpec::dirichlet(&tree);
        Self::new(tree, potentials, bc)
    }

    pub fn with_bc(&self, v: VertexId, bc: Bc) -> Self {
        let mut s = self.clone();
        s.bc = s.bc.with(v, bc);
        s
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_potentials(&self, potentials: PotentialSet) -> Result<Self> {
        let mut s = Self::from_shared(self.tree.clone(), Arc::new(potentials), self.bc.clone())?;
        s.tol = self.tol;
        s.corrupt = self.corrupt;
        Ok(s)
    }

    /// Same tree and conditions with q ≡ 0.
    pub fn zero_potential(&self) -> Self {
        self.with_potentials(PotentialSet::zero(self.tree.edge_count()))
            .expect("zero potentials are valid")
    }

    /// Test hook: flip the sign of the first derivative term in the
    /// Kirchhoff row of internal vertex `v`.
    pub fn with_corrupted_kirchhoff(mut self, v: VertexId) -> Self {
        self.corrupt = Some(v);
        self
    }

    /// Problem on a subgraph: inherited conditions at original boundary
    /// vertices, `copy_bc` at the copies.
    pub fn restrict(&self, sub: &Subtree, copy_bc: &dyn Fn(VertexId) -> Bc) -> Result<Self> {
        let t = &sub.tree;
        let mut bc = BoundarySpec(vec![None; t.vertex_count()]);
        for v in t.boundary_vertices() {
            let parent = sub.vertex_origin[v.0];
            let cond = if t.is_copy(v) {
                copy_bc(v)
            } else {
                self.bc.get(parent).unwrap_or(Bc::Dirichlet)
            };
            bc.0[v.0] = Some(cond);
        }
        let mut s = ProblemSpec::new(t.clone(), sub.restrict_potentials(&self.potentials), bc)?;
        s.tol = self.tol;
        Ok(s)
    }

    /// C, C', S, S' at x = T for every edge.
    pub fn edge_values(&self, sp: SpectralParameter) -> Result<Vec<FundamentalPair>> {
        self.tree
            .edges()
            .iter()
            .zip(self.potentials.iter())
            .map(|(e, q)| ode::transfer(q, e.length, e.length, sp, self.tol))
            .collect()
    }

    fn determinant_with(&self, vals: &[FundamentalPair], bc: &BoundarySpec) -> C64 {
        let f = |v: VertexId| bc.get(v).unwrap_or(Bc::Dirichlet);
        assembly::build(&self.tree, vals, &f, self.corrupt).determinant()
    }

    /// Δ(λ) of this problem.
    pub fn determinant(&self, lambda: C64) -> Result<C64> {
        let vals = self.edge_values(SpectralParameter::from_lambda(lambda))?;
        Ok(self.determinant_with(&vals, &self.bc))
    }

    /// Determinants for several boundary specs sharing one set of edge values.
    pub fn determinants(&self, lambda: C64, bcs: &[&BoundarySpec]) -> Result<Vec<C64>> {
        let vals = self.edge_values(SpectralParameter::from_lambda(lambda))?;
        Ok(bcs.iter().map(|bc| self.determinant_with(&vals, bc)).collect())
    }

    /// Weyl function at boundary vertex `v` by a linear solve (value 1 at
    /// `v`, derivative taken into the tree) and the determinant pair
    /// (Δ with Dirichlet at v, Δ with Neumann at v), from shared edge values.
    pub(crate) fn weyl_parts(&self, lambda: C64, v: VertexId) -> Result<(C64, C64, C64)> {
        let vals = self.edge_values(SpectralParameter::from_lambda(lambda))?;
        let bc_d = self.bc.clone().with(v, Bc::Dirichlet);
        let bc_n = self.bc.clone().with(v, Bc::Neumann);
        let f = |w: VertexId| bc_d.get(w).unwrap_or(Bc::Dirichlet);
        let sys = assembly::build(&self.tree, &vals, &f, self.corrupt);
        let d = sys.determinant();
        let n = self.determinant_with(&vals, &bc_n);
        let m = assembly::weyl_by_solve(&self.tree, &vals, &sys, v, lambda)?;
        Ok((d, n, m))
    }

    pub fn tag(&self) -> String {
        let mut n: Vec<String> = self
            .tree
            .boundary_vertices()
            .into_iter()
            .filter(|&v| self.bc.get(v) == Some(Bc::Neumann))
            .map(|v| format!("v{}", self.tree.vertex_label(v)))
            .collect();
        if n.is_empty() {
            "L_0".to_string()
        } else {
            n.sort();
            format!("L_{}", n.join(","))
        }
    }
}

#[derive(Clone)]
enum Kind {
    Assembled(ProblemSpec),
    Split(Vec<(ProblemSpec, ProblemSpec)>),
    Product(Arc<TruncatedProduct>),
    Function(Arc<dyn Fn(C64) -> Result<C64> + Send + Sync>),
}

/// An evaluable characteristic function with a problem tag.
#[derive(Clone)]
pub struct CharFn {
    tag: String,
    kind: Kind,
    length: f64,
}

impl fmt::Debug for CharFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharFn")
            .field("tag", &self.tag)
            .field("length", &self.length)
            .finish()
    }
}

/// Δ of `spec` as the determinant of its matching system.
pub fn assemble_char_fn(spec: &ProblemSpec) -> CharFn {
    CharFn {
        tag: spec.tag(),
        length: spec.tree.total_length(),
        kind: Kind::Assembled(spec.clone()),
    }
}

/// Bordered n × n determinant of the subtree functions (Δ_i^D, Δ_i^N):
/// rows Δ_i^D, −Δ_{i+1}^D on the first n − 1 lines and Δ_i^N on the last.
pub fn bordered_determinant(pairs: &[(C64, C64)]) -> C64 {
    let n = pairs.len();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i, i)] = pairs[i].0;
        m[(i, i + 1)] = -pairs[i + 1].0;
    }
    for (j, p) in pairs.iter().enumerate() {
        m[(n - 1, j)] = p.1;
    }
    m.lu().determinant()
}

/// Δ of `spec` through the split at internal vertex `w`.
pub fn char_fn_by_split(spec: &ProblemSpec, w: VertexId) -> Result<CharFn> {
    let split = split_at_vertex(&spec.tree, w)?;
    let parts = split
        .parts
        .iter()
        .map(|p| {
            Ok((
                spec.restrict(p, &|_| Bc::Dirichlet)?,
                spec.restrict(p, &|_| Bc::Neumann)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CharFn {
        tag: format!("{} split at v{}", spec.tag(), spec.tree.vertex_label(w)),
        length: spec.tree.total_length(),
        kind: Kind::Split(parts),
    })
}

impl CharFn {
    pub(crate) fn from_product(tag: String, product: TruncatedProduct, length: f64) -> Self {
        CharFn {
            tag,
            length,
            kind: Kind::Product(Arc::new(product)),
        }
    }

    /// Wrap an arbitrary analytic function; `length` sets the zero density
    /// used by the eigenvalue scan.
    pub fn from_fn(
        tag: impl Into<String>,
        length: f64,
        f: impl Fn(C64) -> Result<C64> + Send + Sync + 'static,
    ) -> Self {
        CharFn {
            tag: tag.into(),
            length,
            kind: Kind::Function(Arc::new(f)),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Total edge length; zeros in ρ have density about length / π.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spec(&self) -> Option<&ProblemSpec> {
        match &self.kind {
            Kind::Assembled(s) => Some(s),
            _ => None,
        }
    }

    pub fn eval(&self, lambda: C64) -> Result<C64> {
        match &self.kind {
            Kind::Assembled(s) => s.determinant(lambda),
            Kind::Split(parts) => {
                let pairs = parts
                    .iter()
                    .map(|(d, n)| Ok((d.determinant(lambda)?, n.determinant(lambda)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(bordered_determinant(&pairs))
            }
            Kind::Product(p) => p.eval(lambda),
            Kind::Function(f) => f(lambda),
        }
    }

    pub fn eval_real(&self, lambda: f64) -> Result<C64> {
        self.eval(C64::new(lambda, 0.0))
    }

    pub fn eval_grid(&self, grid: &[C64]) -> Result<Vec<C64>> {
        self.eval_grid_with(Exec::default(), grid)
    }

    pub fn eval_grid_with(&self, exec: Exec, grid: &[C64]) -> Result<Vec<C64>> {
        crate::par::collect_indexed(exec.map(grid, |&l| self.eval(l)))
    }

    /// dΔ/dλ. On the real axis a complex step is used (Δ is real there for
    /// real potentials); elsewhere a four-point analytic difference.
    pub fn derivative(&self, lambda: C64) -> Result<C64> {
        let scale = lambda.norm().max(1.0);
        if lambda.im == 0.0 {
            let h = 1e-20 * scale;
            let v = self.eval(C64::new(lambda.re, h))?;
            return Ok(C64::new(v.im / h, 0.0));
        }
        let h = 1e-4 * scale;
        let i = C64::new(0.0, 1.0);
        let fp = self.eval(lambda + h)?;
        let fm = self.eval(lambda - h)?;
        let gp = self.eval(lambda + i * h)?;
        let gm = self.eval(lambda - i * h)?;
        Ok((fp - fm - i * (gp - gm)) / (4.0 * h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MetricTree;

    fn rho_grid() -> Vec<C64> {
        [0.7, 1.3, 2.1, 3.3, 4.9]
            .iter()
            .map(|&r: &f64| C64::new(r * r, 0.0))
            .chain([C64::new(2.0, 1.5), C64::new(-3.0, 0.2)])
            .collect()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn single_edge_dirichlet() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let cf = assemble_char_fn(&spec);
        for l in rho_grid() {
            let r = SpectralParameter::from_lambda(l).rho;
            assert!(rel(cf.eval(l).unwrap(), r.sin() / r) < 1e-13);
        }
    }

    #[test]
    fn star_dirichlet() {
        let spec = ProblemSpec::dirichlet(MetricTree::star(&[1.0; 3]).unwrap(), PotentialSet::zero(3)).unwrap();
        let cf = assemble_char_fn(&spec);
        for l in rho_grid() {
            let r = SpectralParameter::from_lambda(l).rho;
            let expect = r.sin() * r.sin() * r.cos() * 3.0 / (r * r);
            assert!(rel(cf.eval(l).unwrap(), expect) < 1e-12);
        }
    }

    #[test]
    fn five_edge_dirichlet_and_neumann() {
        let tree = MetricTree::five_edge([1.0; 5]);
        let spec = ProblemSpec::dirichlet(tree, PotentialSet::zero(5)).unwrap();
        let d0 = assemble_char_fn(&spec);
        let d1 = assemble_char_fn(&spec.with_bc(VertexId(0), Bc::Neumann));
        let d4 = assemble_char_fn(&spec.with_bc(VertexId(3), Bc::Neumann));
        for l in rho_grid() {
            let r = SpectralParameter::from_lambda(l).rho;
            let e0 = (-(r * 5.0).sin() * 9.0 + (r * 3.0).sin() * 13.0 + r.sin() * 6.0) / (r * r * r * 16.0);
            let e1 = (-(r * 5.0).cos() * 9.0 + (r * 3.0).cos() * 7.0 + r.cos() * 2.0) / (r * r * 16.0);
            assert!(rel(d0.eval(l).unwrap(), e0) < 1e-11);
            assert!(rel(d1.eval(l).unwrap(), e1) < 1e-11);
            assert!(rel(d4.eval(l).unwrap(), e1) < 1e-11);
        }
    }

    #[test]
    fn bordered_star_matches() {
        let spec = ProblemSpec::dirichlet(MetricTree::star(&[1.0, 0.7, 1.4]).unwrap(), PotentialSet::zero(3)).unwrap();
        let split = char_fn_by_split(&spec, VertexId(3)).unwrap();
        let direct = assemble_char_fn(&spec);
        let ratios: Vec<C64> = rho_grid()
            .iter()
            .map(|&l| split.eval(l).unwrap() / direct.eval(l).unwrap())
            .collect();
        for r in &ratios {
            assert!(rel(*r, ratios[0]) < 1e-10);
        }
    }

    #[test]
    fn corrupted_row_moves_zeros() {
        let tree = MetricTree::five_edge([1.0; 5]);
        let spec = ProblemSpec::dirichlet(tree, PotentialSet::zero(5)).unwrap();
        let bad = spec.clone().with_corrupted_kirchhoff(VertexId(2));
        let a = assemble_char_fn(&spec);
        let b = assemble_char_fn(&bad);
        let r: Vec<C64> = rho_grid()
            .iter()
            .map(|&l| b.eval(l).unwrap() / a.eval(l).unwrap())
            .collect();
        assert!(r.iter().any(|x| rel(*x, r[0]) > 1e-3));
    }

    #[test]
    fn complex_step_derivative() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let cf = assemble_char_fn(&spec);
        // d/dλ (sin ρ/ρ) = (ρ cos ρ − sin ρ) / (2ρ³)
        for &l in &[2.0, 10.0, 40.0] {
            let r: f64 = f64::sqrt(l);
            let expect = (r * r.cos() - r.sin()) / (2.0 * r * r * r);
            let d = cf.derivative(C64::new(l, 0.0)).unwrap();
            assert!((d.re - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            let dc = cf.derivative(C64::new(l, 0.5)).unwrap();
            let rc = C64::new(l, 0.5).sqrt();
            let ec = (rc * rc.cos() - rc.sin()) / (rc * rc * rc * 2.0);
            assert!(rel(dc, ec) < 1e-9);
        }
    }
}
