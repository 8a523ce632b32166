//! The coefficient systems around the known internal edge.
//!
//! With the tree cut into G_1 … G_5 around e_f = [u, w], Δ_0, Δ_1 and Δ_4
//! are 6 × 6 determinants in the part functions. Expanding them in the four
//! products Δ_2^{D,N} Δ_5^{D,N} gives the rows a_1, a_2, a_3; eliminating
//! the common factor gives b_1, b_2 and the quadratic A m² + B m + C = 0 for
//! m = Δ_2^N/Δ_2^D.

use std::sync::Arc;

use nalgebra::Matrix6;

use crate::charfn::{assemble_char_fn, Bc, BoundarySpec, CharFn, ProblemSpec};
use crate::graph::{split_edge_environment_with, EdgeId, FivePartDecomposition, MetricTree, Subtree, VertexId};
use crate::par::Exec;
use crate::potential::PotentialSet;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A tree with its five-part decomposition around the known edge and the
/// boundary vertices v_1 ∈ G_1, v_4 ∈ G_4 whose Neumann problems enter.
#[derive(Clone, Debug)]
pub struct Environment {
    pub tree: Arc<MetricTree>,
    pub decomp: FivePartDecomposition,
    /// Parent ids of v_1 and v_4.
    pub k1: VertexId,
    pub k4: VertexId,
}

fn first_original_boundary(part: &Subtree) -> Result<VertexId> {
    part.tree
        .boundary_vertices()
        .into_iter()
        .find(|&v| !part.tree.is_copy(v))
        .map(|v| part.vertex_origin[v.0])
        .ok_or_else(|| Error::Invalid("part without an original boundary vertex".into()))
}

impl Environment {
    pub fn new(tree: MetricTree, f: EdgeId) -> Result<Self> {
        Self::with_choice(tree, f, None, None, None)
    }

    /// `far` picks G_5 by a vertex inside it; `k1`, `k4` pick v_1, v_4.
    pub fn with_choice(
        tree: MetricTree,
        f: EdgeId,
        far: Option<VertexId>,
        k1: Option<VertexId>,
        k4: Option<VertexId>,
    ) -> Result<Self> {
        let decomp = split_edge_environment_with(&tree, f, far)?;
        let pick = |i: usize, k: Option<VertexId>| -> Result<VertexId> {
            let part = decomp.part(i);
            match k {
                None => first_original_boundary(part),
                Some(v) => match part.local_vertex(v) {
                    Some(l) if part.tree.is_boundary(l) && !part.tree.is_copy(l) => Ok(v),
                    _ => Err(Error::Invalid(format!(
                        "vertex {} is not a boundary vertex of G_{i}",
                        tree.vertex_label(v)
                    ))),
                },
            }
        };
        let k1 = pick(1, k1)?;
        let k4 = pick(4, k4)?;
        Ok(Environment {
            tree: Arc::new(tree),
            decomp,
            k1,
            k4,
        })
    }

    pub fn known_edge(&self) -> EdgeId {
        self.decomp.edge
    }

    /// v_{r1} ∈ G_2 (the tree root) and v_{r2} ∈ G_5.
    pub fn excluded_vertices(&self) -> (VertexId, VertexId) {
        let r2 = first_original_boundary(self.decomp.part(5)).expect("G_5 has a boundary vertex");
        (self.tree.root(), r2)
    }

    /// Boundary vertices whose spectra are required besides Λ_0.
    pub fn required_vertices(&self) -> Vec<VertexId> {
        let (r1, r2) = self.excluded_vertices();
        self.tree
            .boundary_vertices()
            .into_iter()
            .filter(|&v| v != r1 && v != r2)
            .collect()
    }

    /// Parent edges of part G_i.
    pub fn part_edges(&self, i: usize) -> &[EdgeId] {
        &self.decomp.part(i).edge_origin
    }

    fn copy_in(&self, i: usize, parent: VertexId) -> VertexId {
        self.decomp.part(i).copy_of(parent).expect("part carries the copy")
    }

    /// All-Dirichlet problem on the whole tree.
    pub fn l0(&self, q: &PotentialSet) -> Result<ProblemSpec> {
        ProblemSpec::from_shared(
            self.tree.clone(),
            Arc::new(q.clone()),
            BoundarySpec::dirichlet(&self.tree),
        )
    }

    /// Problem on part G_i: Dirichlet everywhere, potentials from `q`.
    pub fn part_spec(&self, i: usize, q: &PotentialSet) -> Result<ProblemSpec> {
        self.l0(q)?.restrict(self.decomp.part(i), &|_| Bc::Dirichlet)
    }
}

/// Part problems with the boundary condition variants that enter the
/// 6 × 6 determinant.
#[derive(Clone, Debug)]
struct PartFamily {
    spec: ProblemSpec,
    bcs: Vec<BoundarySpec>,
}

impl PartFamily {
    /// Two-vertex family: (x, y) over (DD, DN, ND, NN).
    fn pair(spec: ProblemSpec, x: VertexId, y: VertexId) -> Self {
        let mut bcs = Vec::new();
        for bx in [Bc::Dirichlet, Bc::Neumann] {
            for by in [Bc::Dirichlet, Bc::Neumann] {
                bcs.push(spec.bc.clone().with(x, bx).with(y, by));
            }
        }
        // DD, DN, ND, NN
        PartFamily { spec, bcs }
    }

    fn single(spec: ProblemSpec, y: VertexId) -> Self {
        let bcs = vec![
            spec.bc.clone().with(y, Bc::Dirichlet),
            spec.bc.clone().with(y, Bc::Neumann),
        ];
        PartFamily { spec, bcs }
    }

    fn eval(&self, lambda: C64) -> Result<Vec<C64>> {
        let refs: Vec<&BoundarySpec> = self.bcs.iter().collect();
        self.spec.determinants(lambda, &refs)
    }
}

/// Part characteristic functions at one λ. Four-value parts are ordered
/// DD, DN, ND, NN (first letter at the original vertex, or at u for G_3);
/// two-value parts D, N at the copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartValues {
    pub g1: [C64; 4],
    pub g2: [C64; 2],
    pub g3: [C64; 4],
    pub g4: [C64; 4],
    pub g5: [C64; 2],
}

/// Families for all five parts under one potential.
#[derive(Clone, Debug)]
pub struct PartFunctions {
    families: [PartFamily; 5],
}

impl PartFunctions {
    pub fn new(env: &Environment, q: &PotentialSet) -> Result<Self> {
        let d = &env.decomp;
        let local = |i: usize, v: VertexId| d.part(i).local_vertex(v).expect("vertex in part");
        let f1 = PartFamily::pair(env.part_spec(1, q)?, local(1, env.k1), env.copy_in(1, d.u));
        let f2 = PartFamily::single(env.part_spec(2, q)?, env.copy_in(2, d.u));
        let f3 = PartFamily::pair(env.part_spec(3, q)?, env.copy_in(3, d.u), env.copy_in(3, d.w));
        let f4 = PartFamily::pair(env.part_spec(4, q)?, local(4, env.k4), env.copy_in(4, d.w));
        let f5 = PartFamily::single(env.part_spec(5, q)?, env.copy_in(5, d.w));
        Ok(PartFunctions {
            families: [f1, f2, f3, f4, f5],
        })
    }

    pub fn eval(&self, lambda: C64) -> Result<PartValues> {
        let v: Vec<Vec<C64>> = self.families.iter().map(|f| f.eval(lambda)).collect::<Result<_>>()?;
        let four = |x: &Vec<C64>| [x[0], x[1], x[2], x[3]];
        Ok(PartValues {
            g1: four(&v[0]),
            g2: [v[1][0], v[1][1]],
            g3: four(&v[2]),
            g4: four(&v[3]),
            g5: [v[4][0], v[4][1]],
        })
    }

    /// M̃_2 = Δ_2^N/Δ_2^D and M̃_5 = Δ_5^N/Δ_5^D.
    pub fn ratios(&self, lambda: C64) -> Result<(C64, C64)> {
        let a = self.families[1].eval(lambda)?;
        let b = self.families[4].eval(lambda)?;
        Ok((a[1] / a[0], b[1] / b[0]))
    }

    pub fn ratio2(&self, lambda: C64) -> Result<C64> {
        let a = self.families[1].eval(lambda)?;
        Ok(a[1] / a[0])
    }
}

/// Which of Δ_0, Δ_1, Δ_4 the 6 × 6 determinant represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Zero,
    One,
    Four,
}

/// The 6 × 6 determinant with explicit Δ_2, Δ_5 entries.
pub fn rel_delta(p: &PartValues, variant: Variant, d2: [C64; 2], d5: [C64; 2]) -> C64 {
    let (x1, y1) = match variant {
        Variant::One => (p.g1[2], p.g1[3]),
        _ => (p.g1[0], p.g1[1]),
    };
    let (x4, y4) = match variant {
        Variant::Four => (p.g4[2], p.g4[3]),
        _ => (p.g4[0], p.g4[1]),
    };
    let [dd3, dn3, nd3, nn3] = p.g3;
    #[rustfmt::skip]
    let m = Matrix6::new(
        x1, -d2[0], ZERO, ZERO, ZERO, ZERO,
        ZERO, d2[0], -ONE, ZERO, ZERO, ZERO,
        y1, d2[1], ZERO, -ONE, ZERO, ZERO,
        ZERO, ZERO, nd3, dd3, -x4, ZERO,
        ZERO, ZERO, ZERO, ZERO, x4, -d5[0],
        ZERO, ZERO, nn3, dn3, y4, d5[1],
    );
    m.determinant()
}

const PATTERNS: [([C64; 2], [C64; 2]); 4] = [
    ([ONE, ZERO], [ONE, ZERO]),
    ([ZERO, ONE], [ONE, ZERO]),
    ([ONE, ZERO], [ZERO, ONE]),
    ([ZERO, ONE], [ZERO, ONE]),
];

/// Coefficients of Δ_2^DΔ_5^D, Δ_2^NΔ_5^D, Δ_2^DΔ_5^N, Δ_2^NΔ_5^N.
pub fn a_row(p: &PartValues, variant: Variant) -> [C64; 4] {
    PATTERNS.map(|(d2, d5)| rel_delta(p, variant, d2, d5))
}

/// All coefficients at one λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefRow {
    pub lambda: C64,
    pub a: [[C64; 4]; 3],
    pub b: [[C64; 4]; 2],
    pub deltas: [C64; 3],
    pub abc: [C64; 3],
    pub d: C64,
}

impl CoefRow {
    pub fn from_parts(lambda: C64, p: &PartValues, deltas: [C64; 3], calib: [C64; 3]) -> Self {
        let variants = [Variant::Zero, Variant::One, Variant::Four];
        let a: [[C64; 4]; 3] = std::array::from_fn(|i| a_row(p, variants[i]).map(|x| x / calib[i]));
        Self::from_a(lambda, a, deltas)
    }

    pub fn from_a(lambda: C64, a: [[C64; 4]; 3], deltas: [C64; 3]) -> Self {
        let [d0, d1, d4] = deltas;
        let b = [
            std::array::from_fn(|i| a[0][i] * d1 - a[1][i] * d0),
            std::array::from_fn(|i| a[0][i] * d4 - a[2][i] * d0),
        ];
        let [b11, b12, b13, b14] = b[0];
        let [b21, b22, b23, b24] = b[1];
        // overall sign chosen so that the reference case reproduces the
        // reference closed forms; the roots do not depend on it
        let aa = b22 * b14 - b12 * b24;
        let bb = -(b11 * b24 + b12 * b23 - b21 * b14 - b22 * b13);
        let cc = -(b11 * b23 - b21 * b13);
        CoefRow {
            lambda,
            a,
            b,
            deltas,
            abc: [aa, bb, cc],
            d: bb * bb - aa * cc * 4.0,
        }
    }

    /// Both roots of the quadratic, (−B + √D)/2A first.
    pub fn roots(&self) -> (C64, C64) {
        let [a, b, _] = self.abc;
        let s = self.d.sqrt();
        ((-b + s) / (a * 2.0), (-b - s) / (a * 2.0))
    }

    /// |A m² + B m + C| / max(|A m²|, |B m|, |C|).
    pub fn quad_residual(&self, m: C64) -> f64 {
        let [a, b, c] = self.abc;
        let t = [a * m * m, b * m, c];
        let scale = t.iter().map(|x| x.norm()).fold(0.0, f64::max);
        (t[0] + t[1] + t[2]).norm() / scale.max(1e-300)
    }

    /// M̃_5 from equation i ∈ {0, 1} of the reduced system, with the size
    /// of its denominator relative to its terms.
    pub fn m5_from(&self, i: usize, m2: C64) -> (C64, f64) {
        let b = &self.b[i];
        let den = b[2] + b[3] * m2;
        let scale = b[2].norm().max((b[3] * m2).norm());
        (-(b[0] + b[1] * m2) / den, den.norm() / scale.max(1e-300))
    }

    /// Relative residuals of the three equations for given Δ_2, Δ_5 values.
    pub fn system_a_residual(&self, d2: [C64; 2], d5: [C64; 2]) -> [f64; 3] {
        let x = [d2[0] * d5[0], d2[1] * d5[0], d2[0] * d5[1], d2[1] * d5[1]];
        std::array::from_fn(|i| {
            let terms: Vec<C64> = (0..4).map(|j| self.a[i][j] * x[j]).collect();
            let lhs: C64 = terms.iter().sum();
            let scale = terms.iter().map(|t| t.norm()).fold(self.deltas[i].norm(), f64::max);
            (lhs - self.deltas[i]).norm() / scale.max(1e-300)
        })
    }

    /// No usable quadratic: all Δ_2^DΔ_5^D coefficients or A vanish.
    pub fn is_degenerate(&self) -> bool {
        let amax = self.a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        let col = self.a.iter().map(|r| r[0].norm()).fold(0.0, f64::max);
        let [a, b, c] = self.abc;
        let s = a.norm().max(b.norm()).max(c.norm());
        !(col > 1e-12 * amax) || !(a.norm() > 1e-12 * s) || !self.d.norm().is_finite()
    }
}

/// On-demand coefficient rows from known part potentials and Δ_0, Δ_1, Δ_4.
#[derive(Clone, Debug)]
pub struct CoefficientSource {
    pub env: Arc<Environment>,
    parts: PartFunctions,
    reference: PartFunctions,
    deltas: [CharFn; 3],
    calib: [C64; 3],
}

/// Calibration point for the sign of the 6 × 6 formula.
const CALIB_LAMBDAS: [C64; 2] = [C64::new(2.3, 0.7), C64::new(5.1, -0.4)];

fn calibrate(env: &Environment) -> Result<[C64; 3]> {
    let q0 = PotentialSet::zero(env.tree.edge_count());
    let parts = PartFunctions::new(env, &q0)?;
    let l0 = env.l0(&q0)?;
    let direct = [
        l0.clone(),
        l0.with_bc(env.k1, Bc::Neumann),
        l0.with_bc(env.k4, Bc::Neumann),
    ];
    let variants = [Variant::Zero, Variant::One, Variant::Four];
    let mut out = [ONE; 3];
    for i in 0..3 {
        let mut ratios = Vec::new();
        for &l in &CALIB_LAMBDAS {
            let p = parts.eval(l)?;
            ratios.push(rel_delta(&p, variants[i], p.g2, p.g5) / direct[i].determinant(l)?);
        }
        if (ratios[0] - ratios[1]).norm() > 1e-8 * ratios[0].norm() || !(ratios[0].norm() > 1e-8) {
            return Err(Error::Invalid(format!(
                "six-part determinant does not reproduce the direct one (ratios {} and {})",
                ratios[0], ratios[1]
            )));
        }
        out[i] = ratios[0];
    }
    Ok(out)
}

impl CoefficientSource {
    /// `known` must hold the potentials on G_1, G_3 and G_4; other edges
    /// are ignored.
    pub fn new(env: Arc<Environment>, known: &PotentialSet, deltas: [CharFn; 3]) -> Result<Self> {
        let calib = calibrate(&env)?;
        let q0 = PotentialSet::zero(env.tree.edge_count());
        Ok(CoefficientSource {
            parts: PartFunctions::new(&env, known)?,
            reference: PartFunctions::new(&env, &q0)?,
            env,
            deltas,
            calib,
        })
    }

    /// Source with Δ_0, Δ_1, Δ_4 assembled directly from the full potential.
    pub fn forward(env: Arc<Environment>, q: &PotentialSet) -> Result<Self> {
        let l0 = env.l0(q)?;
        let deltas = [
            assemble_char_fn(&l0),
            assemble_char_fn(&l0.with_bc(env.k1, Bc::Neumann)),
            assemble_char_fn(&l0.with_bc(env.k4, Bc::Neumann)),
        ];
        Self::new(env, q, deltas)
    }

    /// The q ≡ 0 source.
    pub fn reference(env: Arc<Environment>) -> Result<Self> {
        let q0 = PotentialSet::zero(env.tree.edge_count());
        Self::forward(env, &q0)
    }

    pub fn calibration(&self) -> [C64; 3] {
        self.calib
    }

    pub fn part_values(&self, lambda: C64) -> Result<PartValues> {
        self.parts.eval(lambda)
    }

    pub fn row(&self, lambda: C64) -> Result<CoefRow> {
        let p = self.parts.eval(lambda)?;
        let deltas = [
            self.deltas[0].eval(lambda)?,
            self.deltas[1].eval(lambda)?,
            self.deltas[2].eval(lambda)?,
        ];
        Ok(CoefRow::from_parts(lambda, &p, deltas, self.calib))
    }

    /// M̃_2⁰(λ) of the q ≡ 0 problem: the root selection reference.
    pub fn reference_root(&self, lambda: C64) -> Result<C64> {
        self.reference.ratio2(lambda)
    }
}

/// Rows over a grid; degenerate or failing points are kept as `None`.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub grid: Vec<C64>,
    pub rows: Vec<Option<CoefRow>>,
}

impl CoefficientTable {
    pub fn valid(&self) -> impl Iterator<Item = &CoefRow> {
        self.rows.iter().flatten()
    }

    pub fn degenerate_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_none()).count()
    }
}

pub fn coefficient_table(src: &CoefficientSource, grid: &[C64]) -> Result<CoefficientTable> {
    let rows = Exec::default().map(grid, |&l| src.row(l).map(|r| (!r.is_degenerate()).then_some(r)));
    let rows = crate::par::collect_indexed(rows)?;
    if !grid.is_empty() && rows.iter().all(|r| r.is_none()) {
        return Err(Error::DegenerateCoefficients);
    }
    Ok(CoefficientTable {
        grid: grid.to_vec(),
        rows,
    })
}

/// Coefficients from known potentials on G_1, G_3, G_4 and given Δ_0, Δ_1, Δ_4.
pub fn build_coefficient_table(
    env: Arc<Environment>,
    known: &PotentialSet,
    delta0: CharFn,
    delta1: CharFn,
    delta4: CharFn,
    grid: &[C64],
) -> Result<CoefficientTable> {
    let src = CoefficientSource::new(env, known, [delta0, delta1, delta4])?;
    coefficient_table(&src, grid)
}

/// q ≡ 0 table plus the reference roots (physical root first).
#[derive(Clone, Debug)]
pub struct ReferenceTable {
    pub table: CoefficientTable,
    pub roots: Vec<Option<(C64, C64)>>,
}

pub fn reference_table(env: Arc<Environment>, grid: &[C64]) -> Result<ReferenceTable> {
    let src = CoefficientSource::reference(env)?;
    let table = coefficient_table(&src, grid)?;
    let roots = table
        .rows
        .iter()
        .map(|r| {
            r.as_ref().and_then(|row| {
                let m = src.reference_root(row.lambda).ok()?;
                let [a, b, _] = row.abc;
                Some((m, -b / a - m))
            })
        })
        .collect();
    Ok(ReferenceTable { table, roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms as cf;

    fn five_edge() -> Arc<Environment> {
        Arc::new(Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(2)).unwrap())
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn five_edge_reference_matches_closed_forms() {
        let env = five_edge();
        assert_eq!(env.k1, VertexId(0));
        assert_eq!(env.k4, VertexId(3));
        let src = CoefficientSource::reference(env).unwrap();
        assert_eq!(src.calibration().map(|c| c.re.round()), [1.0; 3]);
        for x in [0.7, 1.3, 2.1] {
            let r = C64::new(x, 0.0);
            let row = src.row(r * r).unwrap();
            let a0 = cf::a0(r);
            let b0 = cf::b0(r);
            for i in 0..3 {
                for j in 0..4 {
                    assert!(rel(row.a[i][j], a0[i][j]) < 1e-10, "a{}{}", i + 1, j + 1);
                }
            }
            for i in 0..2 {
                for j in 0..4 {
                    assert!(rel(row.b[i][j], b0[i][j]) < 1e-9, "b{}{}", i + 1, j + 1);
                }
            }
            assert!(rel(row.abc[0], cf::a_coef(r)) < 1e-8);
            assert!(rel(row.abc[1], cf::b_coef(r)) < 1e-8);
            assert!(rel(row.abc[2], cf::c_coef(r)) < 1e-8);
            assert!(rel(row.d, cf::d_coef(r)) < 1e-8);
        }
    }

    #[test]
    fn forward_ratios_solve_everything() {
        let env = five_edge();
        let q = PotentialSet(
            (0..5)
                .map(|j| crate::Potential::pwc(vec![0.4 * j as f64 - 0.6, 0.3]))
                .collect(),
        );
        let src = CoefficientSource::forward(env.clone(), &q).unwrap();
        let full = PartFunctions::new(&env, &q).unwrap();
        for l in [C64::new(3.0, 0.0), C64::new(11.0, 0.4), C64::new(-2.0, 0.0)] {
            let row = src.row(l).unwrap();
            let p = full.eval(l).unwrap();
            for r in row.system_a_residual(p.g2, p.g5) {
                assert!(r < 1e-9, "{r}");
            }
            let (m2, m5) = full.ratios(l).unwrap();
            assert!(row.quad_residual(m2) < 1e-8);
            for i in 0..2 {
                assert!(rel(row.m5_from(i, m2).0, m5) < 1e-7);
            }
        }
    }

    #[test]
    fn boundary_edge_rejected() {
        assert!(Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(0)).is_err());
    }
}
