//! Potentials from Weyl-function samples by damped Gauss–Newton
//! (Levenberg–Marquardt) over piecewise-constant bases.

use nalgebra::{DMatrix, DVector};

use crate::charfn::{Bc, ProblemSpec, WeylSample};
use crate::graph::{EdgeId, VertexId};
use crate::par::{collect_indexed, Exec};
use crate::potential::Potential;
use crate::{Error, Result, C64};

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Success threshold on the RMS of the weighted residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step for the Jacobian.
    pub fd_step: f64,
    pub exec: Exec,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-8,
            max_iter: 200,
            fd_step: 1e-6,
            exec: Exec::default(),
        }
    }
}

/// Outcome of a least-squares run. `history` holds the cost after every
/// accepted step, starting with the initial cost.
#[derive(Clone, Debug)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub history: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|x| x * x).sum::<f64>() / r.len().max(1) as f64).sqrt()
}

/// Minimise ½|r(p)|². Never fails on a poor fit; callers judge `rms`.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: &FitOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = residuals(&p)?;
    let mut c = cost(&r);
    let mut history = vec![c];
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iter && rms(&r) > opts.tol * 1e-3 {
        iterations += 1;
        let cols = collect_indexed(opts.exec.map_range(n, |j| {
            let mut q = p.clone();
            let h = opts.fd_step * (1.0 + p[j].abs());
            q[j] += h;
            let rq = residuals(&q)?;
            Ok(rq.iter().zip(&r).map(|(a, b)| (a - b) / h).collect::<Vec<f64>>())
        }))?;
        let jac = DMatrix::from_fn(r.len(), n, |i, j| cols[j][i]);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for j in 0..n {
                m[(j, j)] += mu * (jtj[(j, j)] + 1e-12);
            }
            let Some(step) = m.lu().solve(&(-&g)) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = match residuals(&trial) {
                Ok(rt) => rt,
                Err(_) => {
                    mu *= 4.0;
                    continue;
                }
            };
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let small = step.norm() <= 1e-13 * (1.0 + DVector::from_column_slice(&p).norm());
                let flat = c - ct <= 1e-15 * c;
                p = trial;
                r = rt;
                c = ct;
                history.push(c);
                mu = (mu / 3.0).max(1e-15);
                accepted = !(small || flat);
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(LmResult {
        rms: rms(&r),
        params: p,
        history,
        iterations,
    })
}

/// Which quantity a target samples at its vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// M = −Δ^N/Δ^D (Weyl function).
    Weyl,
    /// Δ^N/Δ^D (subtree ratio seen from a copy vertex).
    Ratio,
}

/// One block of fitted parameters: `cells` piecewise-constant values on a
/// parent edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub edge: EdgeId,
    pub cells: usize,
}

/// Samples to match: the model problem, where its blocks live and the data.
#[derive(Clone, Debug)]
pub struct FitTarget {
    pub spec: ProblemSpec,
    pub vertex: VertexId,
    pub observable: Observable,
    pub points: Vec<(C64, C64)>,
    /// Local edge of each block in `spec.tree`, if present.
    pub local_edges: Vec<Option<EdgeId>>,
}

impl FitTarget {
    fn model(&self, blocks: &[Block], p: &[f64]) -> Result<ProblemSpec> {
        let mut q = (*self.spec.potentials).clone();
        let mut off = 0;
        for (b, local) in blocks.iter().zip(&self.local_edges) {
            if let Some(e) = local {
                q.set(e.0, Potential::pwc(p[off..off + b.cells].to_vec()));
            }
            off += b.cells;
        }
        self.spec.with_potentials(q)
    }

    fn residuals(&self, blocks: &[Block], p: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let spec = self.model(blocks, p)?;
        let bd = spec.bc.clone().with(self.vertex, Bc::Dirichlet);
        let bn = spec.bc.clone().with(self.vertex, Bc::Neumann);
        for &(l, t) in &self.points {
            let v = spec.determinants(l, &[&bd, &bn])?;
            let mut m = v[1] / v[0];
            if self.observable == Observable::Weyl {
                m = -m;
            }
            let w = 1.0 / (1.0 + t.norm());
            let r = (m - t) * w;
            let (re, im) = if r.is_finite() { (r.re, r.im) } else { (1e6, 1e6) };
            out.push(re);
            if l.im != 0.0 || t.im != 0.0 {
                out.push(im);
            }
        }
        Ok(())
    }
}

/// A joint fit of several blocks against several targets.
#[derive(Clone, Debug)]
pub struct FitProblem {
    pub blocks: Vec<Block>,
    pub targets: Vec<FitTarget>,
}

impl FitProblem {
    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.cells).sum()
    }

    pub fn residuals(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for t in &self.targets {
            t.residuals(&self.blocks, p, &mut out)?;
        }
        Ok(out)
    }

    pub fn solve(&self, p0: &[f64], opts: &FitOptions) -> Result<LmResult> {
        if p0.len() != self.dimension() {
            return Err(Error::Invalid(format!(
                "{} start values for {} parameters",
                p0.len(),
                self.dimension()
            )));
        }
        levenberg_marquardt(|p| self.residuals(p), p0, opts)
    }

    /// Split a parameter vector into per-block potentials.
    pub fn potentials(&self, p: &[f64]) -> Vec<(EdgeId, Potential)> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let q = Potential::pwc(p[off..off + b.cells].to_vec());
                off += b.cells;
                (b.edge, q)
            })
            .collect()
    }
}

/// Output of a single-edge recovery.
#[derive(Clone, Debug)]
pub struct RecoveredPotential {
    pub edge: EdgeId,
    pub params: Vec<f64>,
    pub history: Vec<f64>,
    pub mismatch: f64,
}

impl RecoveredPotential {
    pub fn potential(&self) -> Potential {
        Potential::pwc(self.params.clone())
    }
}

/// Fit `cells` piecewise-constant values on `edge` of `model` so that its
/// Weyl function at `target.vertex` matches the samples.
pub fn recover_edge_potential(
    target: &WeylSample,
    model: &ProblemSpec,
    edge: EdgeId,
    cells: usize,
    opts: &FitOptions,
) -> Result<RecoveredPotential> {
    if cells == 0 || edge.0 >= model.tree.edge_count() {
        return Err(Error::Invalid("empty basis or unknown edge".into()));
    }
    let needed = 3 * cells;
    let samples = target.points.len()
        * if target.points.iter().any(|p| p.0.im != 0.0) {
            2
        } else {
            1
        };
    if samples < needed {
        return Err(Error::Invalid(format!(
            "{samples} samples for {cells} parameters, need at least {needed}"
        )));
    }
    let problem = FitProblem {
        blocks: vec![Block { edge, cells }],
        targets: vec![FitTarget {
            spec: model.clone(),
            vertex: target.vertex,
            observable: Observable::Weyl,
            points: target.points.clone(),
            local_edges: vec![Some(edge)],
        }],
    };
    let res = problem.solve(&vec![0.0; cells], opts)?;
    if !(res.rms <= opts.tol) {
        return Err(Error::FitStagnation {
            residual: res.rms,
            tol: opts.tol,
            iterations: res.iterations,
            history: res.history,
        });
    }
    Ok(RecoveredPotential {
        edge,
        params: res.params,
        history: res.history,
        mismatch: res.rms,
    })
}
