//! Spectra in, potentials out.
//!
//! Internal known edge: reconstruct Δ's, fit the unknown edges against the
//! Weyl functions M_k, build the coefficient systems from the G_1, G_3, G_4
//! potentials, track M̃_2 and M̃_5, refit G_2 and G_5 against them. Boundary
//! known edge: the same first two stages, then a cutting consistency check.
//! Both finish with a refinement on the eigenvalue equations and a forward
//! certificate.

use std::sync::Arc;

use crate::charfn::{assemble_char_fn, find_eigenvalues, Bc, CharFn, ProblemSpec, SpectrumSet, WeylSample};
use crate::error::StageExt;
use crate::graph::{EdgeId, MetricTree, VertexId};
use crate::par::{collect_indexed, Exec};
use crate::potential::{Potential, PotentialSet};
use crate::spectral::{reconstruct_with_reference_zeros, MIN_TRUNCATION};
use crate::{Error, Result, C64};

use super::coefficients::{CoefficientSource, Environment};
use super::cut::cut_boundary_edges;
use super::fit::{levenberg_marquardt, Block, FitOptions, FitProblem, FitTarget, Observable};
use super::tracking::{solve_quadratic_track, StartPoint, TrackOptions};

/// One input spectrum: `vertex = None` for Λ_0, `Some(k)` for Λ_k.
#[derive(Clone, Debug)]
pub struct SpectrumInput {
    pub vertex: Option<VertexId>,
    pub spectrum: SpectrumSet,
}

#[derive(Clone, Debug)]
pub struct InverseProblem {
    pub tree: MetricTree,
    pub known_edge: EdgeId,
    pub known_potential: Potential,
    pub spectra: Vec<SpectrumInput>,
}

#[derive(Clone, Debug)]
pub struct InverseOptions {
    /// Eigenvalues used per spectrum.
    pub truncation: usize,
    /// Piecewise-constant cells per unknown edge.
    pub cells: usize,
    /// Largest accepted relative change of M_k between the N and N/2
    /// reconstructions.
    pub truncation_tol: f64,
    /// Forward eigenvalue tolerance of the certificate.
    pub spec_tol: f64,
    /// Run the final refinement on the eigenvalue equations.
    pub refine: bool,
    /// Re-reconstructions against the fitted model before the coefficient
    /// stage.
    pub reference_passes: usize,
    pub track: TrackOptions,
    pub fit: FitOptions,
    pub refine_fit: FitOptions,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions {
            truncation: 40,
            cells: 2,
            truncation_tol: 5e-2,
            spec_tol: 1e-6,
            refine: true,
            reference_passes: 2,
            track: TrackOptions {
                start: StartPoint::At(C64::new(0.0, 1.5)),
                ..TrackOptions::default()
            },
            fit: FitOptions {
                max_iter: 100,
                ..FitOptions::default()
            },
            refine_fit: FitOptions {
                tol: 1e-12,
                max_iter: 100,
                ..FitOptions::default()
            },
        }
    }
}

/// Key/value diagnostics of one stage.
#[derive(Clone, Debug, Default)]
pub struct StageReport {
    pub name: &'static str,
    pub entries: Vec<(String, String)>,
}

impl StageReport {
    fn new(name: &'static str) -> Self {
        StageReport { name, entries: vec![] }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub tol: f64,
    pub max_mismatch: f64,
    /// Before the refinement stage.
    pub stepwise_mismatch: f64,
    /// (spectrum tag, index, |λ_forward − λ_input|).
    pub mismatches: Vec<(String, usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Known internal edge.
    InternalEdge,
    /// Known boundary edge.
    BoundaryEdge,
}

#[derive(Clone, Debug)]
pub struct InverseOutcome {
    pub variant: Variant,
    pub potentials: PotentialSet,
    /// Result of the stepwise stages, before refinement.
    pub stepwise: PotentialSet,
    pub unknown_edges: Vec<EdgeId>,
    pub stages: Vec<StageReport>,
    pub certificate: Certificate,
}

/// Λ_0 and Λ_k of `q` in `window`, computed forward.
pub fn forward_spectra(
    tree: &MetricTree,
    q: &PotentialSet,
    vertices: &[Option<VertexId>],
    window: (f64, f64),
) -> Result<Vec<SpectrumInput>> {
    let l0 = ProblemSpec::dirichlet(tree.clone(), q.clone())?;
    vertices
        .iter()
        .map(|&v| {
            let spec = match v {
                None => l0.clone(),
                Some(k) => l0.with_bc(k, Bc::Neumann),
            };
            let mut s = find_eigenvalues(&assemble_char_fn(&spec), window, None)?;
            s.tag = spectrum_tag(tree, v);
            Ok(SpectrumInput { vertex: v, spectrum: s })
        })
        .collect()
}

pub fn spectrum_tag(tree: &MetricTree, v: Option<VertexId>) -> String {
    match v {
        None => "L0".to_string(),
        Some(k) => format!("L{}", tree.vertex_label(k)),
    }
}

fn problem_spec(tree: &Arc<MetricTree>, q: &PotentialSet, v: Option<VertexId>) -> Result<ProblemSpec> {
    let spec = ProblemSpec::from_shared(
        tree.clone(),
        Arc::new(q.clone()),
        crate::charfn::BoundarySpec::dirichlet(tree),
    )?;
    Ok(match v {
        None => spec,
        Some(k) => spec.with_bc(k, Bc::Neumann),
    })
}

/// Reference zeros of the q ≡ 0 problem, widening the window until there
/// are at least `n`.
fn reference_zeros(reference: &CharFn, window: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (lo, mut hi) = window;
    for _ in 0..6 {
        let z = find_eigenvalues(reference, (lo, hi), None)?.expanded();
        if z.len() >= n {
            return Ok(z);
        }
        // keep the upper end off the zeros of the reference
        hi = hi * 1.5 + 1.0 + 0.123456789;
    }
    Err(Error::Pairing {
        lo,
        hi,
        reason: format!("fewer than {n} reference zeros"),
    })
}

struct Reconstructed {
    vertex: Option<VertexId>,
    tag: String,
    full: CharFn,
    half: CharFn,
    /// First N input eigenvalues (expanded) and their multiplicities.
    values: Vec<(f64, usize)>,
    window: (f64, f64),
}

/// Ratio-form reconstructions against the characteristic functions of
/// `reference` (q ≡ 0 on the first pass, the current model afterwards).
fn reconstruct_all(
    tree: &Arc<MetricTree>,
    inputs: &[SpectrumInput],
    reference: &PotentialSet,
    n: usize,
) -> Result<Vec<Reconstructed>> {
    if n < MIN_TRUNCATION {
        return Err(Error::InsufficientSpectra {
            problem: "all".into(),
            reason: format!("truncation {n} is below the minimum {MIN_TRUNCATION}"),
        });
    }
    let results = Exec::default().map(inputs, |inp| -> Result<Reconstructed> {
        let reference = assemble_char_fn(&problem_spec(tree, reference, inp.vertex)?);
        let rz = reference_zeros(&reference, inp.spectrum.window, n)?;
        let full = reconstruct_with_reference_zeros(&inp.spectrum, &reference, &rz, n)?;
        let half = reconstruct_with_reference_zeros(&inp.spectrum, &reference, &rz, n / 2)?;
        let mut values: Vec<(f64, usize)> = Vec::new();
        let mut taken = 0;
        for e in &inp.spectrum.eigenvalues {
            if taken >= n {
                break;
            }
            let m = e.multiplicity.min(n - taken);
            values.push((e.lambda, m));
            taken += m;
        }
        Ok(Reconstructed {
            vertex: inp.vertex,
            tag: inp.spectrum.tag.clone(),
            full,
            half,
            values,
            window: inp.spectrum.window,
        })
    });
    collect_indexed(results)
}

/// Negative λ and the line Im ρ = 1 up to Re ρ = √λ_{N/2} of Λ_0. Real
/// λ are avoided: poles of the model crossing grid points make the fit
/// objective discontinuous.
fn inversion_grid(lambda0: &[(f64, usize)], n: usize) -> Vec<C64> {
    let mut g: Vec<C64> = (1..=4).map(|j| C64::new(-((j * j) as f64), 0.0)).collect();
    let top = lambda0[..(n / 2).min(lambda0.len())]
        .last()
        .map(|v| v.0)
        .unwrap_or(1.0)
        .max(1.0)
        .sqrt();
    let count = (2.0 * top).ceil() as usize;
    for i in 1..=count {
        let r = C64::new(top * i as f64 / count as f64, 1.0);
        g.push(r * r);
    }
    g
}

fn weyl_from(rec: &[Reconstructed], k: VertexId, grid: &[C64], half: bool) -> Result<WeylSample> {
    let d0 = rec.iter().find(|r| r.vertex.is_none()).expect("Λ_0 present");
    let dk = rec.iter().find(|r| r.vertex == Some(k)).expect("Λ_k present");
    let (f0, fk) = if half {
        (&d0.half, &dk.half)
    } else {
        (&d0.full, &dk.full)
    };
    let points = collect_indexed(Exec::default().map(grid, |&l| Ok((l, -fk.eval(l)? / f0.eval(l)?))))?;
    Ok(WeylSample { vertex: k, points })
}

fn sup_rel_change(a: &WeylSample, b: &WeylSample) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(x, y)| (x.1 - y.1).norm() / (1.0 + x.1.norm()))
        .fold(0.0, f64::max)
}

fn blocks_for(edges: &[EdgeId], cells: usize) -> Vec<Block> {
    edges.iter().map(|&edge| Block { edge, cells }).collect()
}

fn params_of(q: &PotentialSet, blocks: &[Block]) -> Vec<f64> {
    let mut p = Vec::new();
    for b in blocks {
        match q.get(b.edge.0) {
            Potential::Pwc { values } if values.len() == b.cells => p.extend(values),
            other => {
                let c = other.as_constant().unwrap_or(0.0);
                p.extend(std::iter::repeat_n(c, b.cells));
            }
        }
    }
    p
}

fn apply(q: &mut PotentialSet, problem: &FitProblem, p: &[f64]) {
    for (e, pot) in problem.potentials(p) {
        q.set(e.0, pot);
    }
}

/// Joint fit of `blocks` against every available M_k.
fn fit_weyl(
    tree: &Arc<MetricTree>,
    q: &PotentialSet,
    targets: &[(VertexId, WeylSample)],
    blocks: Vec<Block>,
    opts: &FitOptions,
) -> Result<(PotentialSet, f64, usize)> {
    let spec = problem_spec(tree, q, None)?;
    let problem = FitProblem {
        targets: targets
            .iter()
            .map(|(k, w)| FitTarget {
                spec: spec.clone(),
                vertex: *k,
                observable: Observable::Weyl,
                points: w.points.clone(),
                local_edges: blocks.iter().map(|b| Some(b.edge)).collect(),
            })
            .collect(),
        blocks,
    };
    let res = problem.solve(&params_of(q, &problem.blocks), opts)?;
    let mut out = q.clone();
    apply(&mut out, &problem, &res.params);
    Ok((out, res.rms, res.iterations))
}

/// Damped Gauss–Newton on Δ_k(λ_{k,n}; p)/w_{k,n} with weights
/// w = |dΔ_k/dλ| at the starting potential, so residuals are in units of λ.
fn refine(
    tree: &Arc<MetricTree>,
    q: &PotentialSet,
    rec: &[Reconstructed],
    blocks: Vec<Block>,
    opts: &FitOptions,
) -> Result<(PotentialSet, f64, usize)> {
    let mut rows: Vec<(Option<VertexId>, f64, f64)> = Vec::new();
    for r in rec {
        let cf = assemble_char_fn(&problem_spec(tree, q, r.vertex)?);
        for &(l, m) in &r.values {
            if m != 1 {
                continue;
            }
            let w = cf.derivative(C64::new(l, 0.0))?.norm();
            if w > 0.0 && w.is_finite() {
                rows.push((r.vertex, l, w));
            }
        }
    }
    let problem = FitProblem {
        blocks,
        targets: vec![],
    };
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let mut qq = q.clone();
        apply(&mut qq, &problem, p);
        let specs: Vec<(Option<VertexId>, ProblemSpec)> = rec
            .iter()
            .map(|r| Ok((r.vertex, problem_spec(tree, &qq, r.vertex)?)))
            .collect::<Result<_>>()?;
        rows.iter()
            .map(|&(v, l, w)| {
                let spec = &specs.iter().find(|s| s.0 == v).expect("spec per spectrum").1;
                Ok(spec.determinant(C64::new(l, 0.0))?.re / w)
            })
            .collect()
    };
    let res = levenberg_marquardt(residuals, &params_of(q, &problem.blocks), opts)?;
    let mut out = q.clone();
    apply(&mut out, &problem, &res.params);
    Ok((out, res.rms, res.iterations))
}

/// Forward eigenvalues of `q` against the first N inputs.
fn certify(tree: &Arc<MetricTree>, q: &PotentialSet, rec: &[Reconstructed]) -> Result<Vec<(String, usize, f64)>> {
    let per = Exec::default().map(rec, |r| -> Result<Vec<(String, usize, f64)>> {
        let cf = assemble_char_fn(&problem_spec(tree, q, r.vertex)?);
        let fwd = find_eigenvalues(&cf, r.window, None)?.expanded();
        let input: Vec<f64> = r.values.iter().flat_map(|&(l, m)| std::iter::repeat_n(l, m)).collect();
        Ok(input
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let d = fwd.get(i).map_or(f64::INFINITY, |&f| (f - l).abs());
                (r.tag.clone(), i + 1, d)
            })
            .collect())
    });
    Ok(collect_indexed(per)?.into_iter().flatten().collect())
}

fn max_of(m: &[(String, usize, f64)]) -> f64 {
    m.iter().map(|x| x.2).fold(0.0, f64::max)
}

fn check_inputs(tree: &MetricTree, inputs: &[SpectrumInput], required: &[VertexId]) -> Result<()> {
    if !inputs.iter().any(|s| s.vertex.is_none()) {
        return Err(Error::InsufficientSpectra {
            problem: "L0".into(),
            reason: "the spectrum of the all-Dirichlet problem is missing".into(),
        });
    }
    for &k in required {
        if !inputs.iter().any(|s| s.vertex == Some(k)) {
            return Err(Error::InsufficientSpectra {
                problem: spectrum_tag(tree, Some(k)),
                reason: "required spectrum is missing".into(),
            });
        }
    }
    Ok(())
}

pub fn run_partial_inverse(problem: &InverseProblem, opts: &InverseOptions) -> Result<InverseOutcome> {
    let tree = Arc::new(problem.tree.clone());
    let f = problem.known_edge;
    if f.0 >= tree.edge_count() {
        return Err(Error::Invalid(format!("unknown edge index {}", f.0)));
    }
    problem.known_potential.validate()?;
    let boundary_end = [tree.edge(f).from, tree.edge(f).to]
        .into_iter()
        .find(|&v| tree.is_boundary(v));
    let variant = if boundary_end.is_some() {
        Variant::BoundaryEdge
    } else {
        Variant::InternalEdge
    };

    let env = match variant {
        Variant::InternalEdge => Some(Arc::new(Environment::new((*tree).clone(), f).stage("environment")?)),
        Variant::BoundaryEdge => None,
    };
    let required: Vec<VertexId> = match (&env, boundary_end) {
        (Some(env), _) => env.required_vertices(),
        (None, Some(vf)) => tree
            .boundary_vertices()
            .into_iter()
            .filter(|&v| v != vf && v != tree.root())
            .collect(),
        (None, None) => unreachable!(),
    };
    check_inputs(&tree, &problem.spectra, &required).stage("inputs")?;

    let unknown: Vec<EdgeId> = (0..tree.edge_count()).map(EdgeId).filter(|&e| e != f).collect();
    let mut stages = Vec::new();

    // characteristic functions from the spectra
    let n = opts.truncation;
    let zero = PotentialSet::zero(tree.edge_count());
    let mut rec = reconstruct_all(&tree, &problem.spectra, &zero, n).stage("reconstruct")?;
    let l0 = &rec.iter().find(|r| r.vertex.is_none()).expect("checked").values;
    let grid = inversion_grid(l0, n);
    let mut targets = Vec::new();
    let mut st = StageReport::new("reconstruct");
    st.add("truncation", n);
    st.add("grid_points", grid.len());
    for &k in &required {
        let full = weyl_from(&rec, k, &grid, false).stage("reconstruct")?;
        let half = weyl_from(&rec, k, &grid, true).stage("reconstruct")?;
        let change = sup_rel_change(&full, &half);
        st.add(
            &format!("weyl_change_{}", spectrum_tag(&tree, Some(k))),
            format!("{change:.3e}"),
        );
        if !(change <= opts.truncation_tol) {
            return Err(Error::InsufficientSpectra {
                problem: spectrum_tag(&tree, Some(k)),
                reason: format!(
                    "M_k from N and N/2 eigenvalues differ by {change:.3e} (limit {:.1e})",
                    opts.truncation_tol
                ),
            }
            .in_stage("reconstruct"));
        }
        targets.push((k, full));
    }
    stages.push(st);

    // all unknown edges against every M_k
    let mut q = PotentialSet::zero(tree.edge_count());
    q.set(f.0, problem.known_potential.clone());
    let (q2, rms, iters) =
        fit_weyl(&tree, &q, &targets, blocks_for(&unknown, opts.cells), &opts.fit).stage("weyl-fit")?;
    let mut st = StageReport::new("weyl-fit");
    st.add("rms", format!("{rms:.3e}"));
    st.add("iterations", iters);
    stages.push(st);
    let mut q = q2;

    // the same with the fitted model as reference for the products
    for pass in 0..opts.reference_passes {
        rec = reconstruct_all(&tree, &problem.spectra, &q, n).stage("reconstruct")?;
        let targets: Vec<(VertexId, WeylSample)> = required
            .iter()
            .map(|&k| Ok((k, weyl_from(&rec, k, &grid, false)?)))
            .collect::<Result<_>>()
            .stage("reconstruct")?;
        let (q2, rms, iters) =
            fit_weyl(&tree, &q, &targets, blocks_for(&unknown, opts.cells), &opts.fit).stage("weyl-fit")?;
        let mut st = StageReport::new("weyl-fit");
        st.add("pass", pass + 1);
        st.add("rms", format!("{rms:.3e}"));
        st.add("iterations", iters);
        stages.push(st);
        q = q2;
    }
    if opts.reference_passes > 0 {
        // final products against the last model
        rec = reconstruct_all(&tree, &problem.spectra, &q, n).stage("reconstruct")?;
    }

    match (&env, boundary_end) {
        (Some(env), _) => {
            // coefficients from G_1, G_3, G_4 and the tracked roots
            let deltas = [
                rec.iter().find(|r| r.vertex.is_none()).expect("checked").full.clone(),
                rec.iter()
                    .find(|r| r.vertex == Some(env.k1))
                    .expect("checked")
                    .full
                    .clone(),
                rec.iter()
                    .find(|r| r.vertex == Some(env.k4))
                    .expect("checked")
                    .full
                    .clone(),
            ];
            let src = CoefficientSource::new(env.clone(), &q, deltas).stage("coefficients")?;
            let track = solve_quadratic_track(&src, &grid, &opts.track).stage("tracking")?;
            let mut st = StageReport::new("tracking");
            st.add("accepted", track.accepted());
            st.add("rejected", track.rejected.len());
            st.add("height", track.height);
            stages.push(st);
            if track.accepted() < 3 * opts.cells {
                return Err(Error::TrackingFailure { rho: track.start }.in_stage("tracking"));
            }

            // G_2 against M̃_2, G_5 against M̃_5
            let mut st = StageReport::new("subtree-fit");
            for (i, points, at) in [
                (2, track.m2_points(), env.decomp.u),
                (5, track.m5_points(), env.decomp.w),
            ] {
                let part = env.decomp.part(i);
                let blocks = blocks_for(&part.edge_origin, opts.cells);
                let spec = env.part_spec(i, &q)?;
                let fp = FitProblem {
                    targets: vec![FitTarget {
                        spec,
                        vertex: part.copy_of(at).expect("copy present"),
                        observable: Observable::Ratio,
                        points,
                        local_edges: blocks.iter().map(|b| part.local_edge(b.edge)).collect(),
                    }],
                    blocks,
                };
                let res = fp.solve(&params_of(&q, &fp.blocks), &opts.fit).stage("subtree-fit")?;
                apply(&mut q, &fp, &res.params);
                st.add(&format!("rms_G{i}"), format!("{:.3e}", res.rms));
            }
            stages.push(st);
        }
        (None, Some(vf)) => {
            // cutting check at every vertex whose boundary neighbours carry data
            let mut st = StageReport::new("cut-check");
            let spec = problem_spec(&tree, &q, None)?;
            for v in tree.internal_vertices() {
                let cut: Vec<VertexId> = tree
                    .neighbors(v)
                    .into_iter()
                    .filter(|&x| tree.is_boundary(x) && x != tree.root())
                    .collect();
                let Some((k, sample)) = targets.iter().find(|(k, _)| cut.contains(k)) else {
                    continue;
                };
                if tree.degree(v) != cut.len() + 1 {
                    continue;
                }
                let out = cut_boundary_edges(&spec, v, &cut, sample).stage("cut-check")?;
                let sub = spec.restrict(&out.reduced, &|_| Bc::Dirichlet)?;
                let direct = crate::charfn::weyl_points(&sub, out.sample.vertex, &out.sample.lambdas());
                let gap = out
                    .sample
                    .points
                    .iter()
                    .zip(direct)
                    .filter_map(|(a, b)| b.ok().map(|b| (a.1 - b.1).norm() / (1.0 + b.1.norm())))
                    .fold(0.0, f64::max);
                st.add(
                    &format!("vertex_{}_via_{}", tree.vertex_label(v), tree.vertex_label(*k)),
                    format!("{gap:.3e}"),
                );
            }
            st.add("known_boundary_vertex", tree.vertex_label(vf));
            stages.push(st);
        }
        (None, None) => unreachable!(),
    }
    let stepwise = q.clone();

    let stepwise_mismatch = max_of(&certify(&tree, &stepwise, &rec).stage("certificate")?);
    if opts.refine {
        let (qr, rms, iters) =
            refine(&tree, &q, &rec, blocks_for(&unknown, opts.cells), &opts.refine_fit).stage("refine")?;
        let mut st = StageReport::new("refine");
        st.add("rms", format!("{rms:.3e}"));
        st.add("iterations", iters);
        stages.push(st);
        q = qr;
    }
    let mismatches = certify(&tree, &q, &rec).stage("certificate")?;
    let max_mismatch = max_of(&mismatches);
    let mut st = StageReport::new("certificate");
    st.add("stepwise_max_mismatch", format!("{stepwise_mismatch:.3e}"));
    st.add("max_mismatch", format!("{max_mismatch:.3e}"));
    st.add("tol", format!("{:.1e}", opts.spec_tol));
    stages.push(st);
    if !(max_mismatch <= opts.spec_tol) {
        return Err(Error::Certificate {
            max_mismatch,
            tol: opts.spec_tol,
            mismatches,
        });
    }
    Ok(InverseOutcome {
        variant,
        potentials: q,
        stepwise,
        unknown_edges: unknown,
        stages,
        certificate: Certificate {
            tol: opts.spec_tol,
            max_mismatch,
            stepwise_mismatch,
            mismatches,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> PotentialSet {
        PotentialSet(vec![
            Potential::pwc(vec![0.6, -0.2]),
            Potential::pwc(vec![-0.4, 0.3]),
            Potential::pwc(vec![0.25, 0.5]),
            Potential::pwc(vec![0.1, -0.5]),
            Potential::pwc(vec![0.45, 0.05]),
        ])
    }

    fn problem(q: &PotentialSet, known: usize, vertices: &[Option<VertexId>]) -> InverseProblem {
        let tree = MetricTree::five_edge([1.0; 5]);
        let spectra = forward_spectra(&tree, q, vertices, (-30.0, 700.3)).unwrap();
        InverseProblem {
            tree,
            known_edge: EdgeId(known),
            known_potential: q.get(known).clone(),
            spectra,
        }
    }

    fn max_param_error(a: &PotentialSet, b: &PotentialSet) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| {
                (0..2)
                    .map(|i| (x.value(0.25 + 0.5 * i as f64, 1.0) - y.value(0.25 + 0.5 * i as f64, 1.0)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn internal_edge_recovers_two_step_potentials() {
        let q = truth();
        let p = problem(&q, 2, &[None, Some(VertexId(0)), Some(VertexId(3))]);
        let out = run_partial_inverse(&p, &InverseOptions::default()).unwrap();
        assert_eq!(out.variant, Variant::InternalEdge);
        assert!(max_param_error(&out.potentials, &q) < 1e-3);
        assert!(out.certificate.max_mismatch <= 1e-6);
        assert!(out.stages.iter().any(|s| s.name == "tracking"));
    }

    #[test]
    fn zero_potential_is_a_fixed_point() {
        let q = PotentialSet::zero(5);
        let p = problem(&q, 2, &[None, Some(VertexId(0)), Some(VertexId(3))]);
        let out = run_partial_inverse(&p, &InverseOptions::default()).unwrap();
        for pot in out.potentials.iter() {
            assert!(pot.sup_norm(1.0) <= 1e-3);
        }
    }

    #[test]
    fn boundary_edge_variant() {
        let q = truth();
        let p = problem(&q, 0, &[None, Some(VertexId(3)), Some(VertexId(4))]);
        let out = run_partial_inverse(&p, &InverseOptions::default()).unwrap();
        assert_eq!(out.variant, Variant::BoundaryEdge);
        assert!(max_param_error(&out.potentials, &q) < 1e-3);
        let cut = out.stages.iter().find(|s| s.name == "cut-check").unwrap();
        assert!(cut.entries.iter().any(|(k, _)| k.starts_with("vertex_")));
    }

    #[test]
    fn short_truncation_rejected() {
        let q = truth();
        let p = problem(&q, 2, &[None, Some(VertexId(0)), Some(VertexId(3))]);
        let opts = InverseOptions {
            truncation: 3,
            ..Default::default()
        };
        let err = run_partial_inverse(&p, &opts).unwrap_err();
        assert!(matches!(err.root(), Error::InsufficientSpectra { .. }));
    }

    #[test]
    fn missing_spectrum_rejected() {
        let q = truth();
        let p = problem(&q, 2, &[None, Some(VertexId(0))]);
        let err = run_partial_inverse(&p, &InverseOptions::default()).unwrap_err();
        assert!(matches!(err.root(), Error::InsufficientSpectra { .. }));
    }
}
