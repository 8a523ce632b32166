//! Analytic continuation of the quadratic's roots in the ρ-plane.
//!
//! The physical root is picked at the start of the path as the one closest
//! to the q ≡ 0 reference root, then followed step by step. Paths run from
//! the start up to Im ρ = h, along that line to Re ρ of each target, and
//! straight to the target.

use crate::par::Exec;
use crate::{Error, Result, C64};

use super::coefficients::{CoefRow, CoefficientSource};

/// Where the path begins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartPoint {
    /// A real ρ near the given value, moved to where the reference roots
    /// are best separated.
    RealNear(f64),
    /// A fixed point of the ρ-plane.
    At(C64),
}

#[derive(Clone, Debug)]
pub struct TrackOptions {
    pub start: StartPoint,
    /// Heights of the horizontal leg, tried in order.
    pub heights: Vec<f64>,
    pub max_step: f64,
    pub min_step: f64,
    /// Accepted jump from the prediction, as a fraction of the root gap.
    pub jump_factor: f64,
    /// Relative discriminant floor: |D| < floor · max(|B|², |4AC|).
    pub d_floor: f64,
    /// Allowed gap between the two expressions for M̃_5.
    pub cross_tol: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            start: StartPoint::RealNear(40.0),
            heights: vec![1.0, 1.6, 0.6, 2.3],
            max_step: 0.05,
            min_step: 1e-9,
            jump_factor: 0.3,
            d_floor: 1e-6,
            cross_tol: 1e-6,
        }
    }
}

/// Tracked roots at the requested λ values. Rejected points keep a reason.
#[derive(Clone, Debug)]
pub struct RootTrack {
    pub grid: Vec<C64>,
    /// M̃_2 per point.
    pub values: Vec<Option<C64>>,
    /// true when the tracked root is (−B + √D)/2A.
    pub branch: Vec<Option<bool>>,
    pub m5: Vec<Option<C64>>,
    pub rejected: Vec<(usize, String)>,
    pub floor: f64,
    pub start: C64,
    pub height: f64,
}

impl RootTrack {
    pub fn accepted(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// (λ, M̃_2) pairs.
    pub fn m2_points(&self) -> Vec<(C64, C64)> {
        self.grid
            .iter()
            .zip(&self.values)
            .filter_map(|(&l, v)| v.map(|m| (l, m)))
            .collect()
    }

    /// (λ, M̃_5) pairs.
    pub fn m5_points(&self) -> Vec<(C64, C64)> {
        self.grid
            .iter()
            .zip(&self.m5)
            .filter_map(|(&l, v)| v.map(|m| (l, m)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct State {
    rho: C64,
    m: C64,
    slope: Option<C64>,
}

struct Tracker<'a> {
    src: &'a CoefficientSource,
    opts: &'a TrackOptions,
}

fn collided(row: &CoefRow, floor: f64) -> bool {
    let [a, b, c] = row.abc;
    let scale = (b * b).norm().max((a * c * 4.0).norm());
    !(row.d.norm() >= floor * scale)
}

impl<'a> Tracker<'a> {
    fn row(&self, rho: C64) -> Result<CoefRow> {
        self.src.row(rho * rho)
    }

    fn advance(&self, st: &mut State, to: C64) -> Result<CoefRow> {
        let mut h = self.opts.max_step;
        let mut last = None;
        loop {
            let dist = (to - st.rho).norm();
            if dist == 0.0 {
                if let Some(row) = last {
                    return Ok(row);
                }
                return self.row(to);
            }
            let step = h.min(dist);
            let next = if step >= dist {
                to
            } else {
                st.rho + (to - st.rho) / dist * step
            };
            let row = self.row(next)?;
            if collided(&row, self.opts.d_floor) {
                return Err(Error::RootCollision {
                    rho: next,
                    suggestion: next + C64::new(0.0, 0.5),
                });
            }
            let (r1, r2) = row.roots();
            let pred = st.m + st.slope.unwrap_or_default() * (next - st.rho);
            let (c, o) = if (r1 - pred).norm() <= (r2 - pred).norm() {
                (r1, r2)
            } else {
                (r2, r1)
            };
            let gap = (c - o).norm();
            let jump = (c - pred).norm();
            if jump.is_finite() && jump < self.opts.jump_factor * gap {
                // roundoff-sized steps (snapping onto a node) give a meaningless slope
                if step > 1e-3 * self.opts.max_step {
                    st.slope = Some((c - st.m) / (next - st.rho));
                }
                st.m = c;
                st.rho = next;
                last = Some(row);
                h = (h * 1.5).min(self.opts.max_step);
            } else {
                h /= 2.0;
                if h < self.opts.min_step {
                    return Err(Error::TrackingFailure { rho: next });
                }
            }
        }
    }

    fn start_point(&self) -> Result<C64> {
        match self.opts.start {
            StartPoint::At(r) => Ok(r),
            StartPoint::RealNear(r0) => {
                // best relative separation of the reference roots within ±π/2
                let mut best = (f64::NEG_INFINITY, C64::new(r0, 0.0));
                let n = 64;
                for i in 0..=n {
                    let r = C64::new(
                        r0 - std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / n as f64,
                        0.0,
                    );
                    let row = self.row(r)?;
                    let phys = self.src.reference_root(r * r)?;
                    let [a, b, _] = row.abc;
                    let other = -b / a - phys;
                    let big = phys.norm().max(other.norm());
                    let score = (phys - other).norm() / big.max(1.0) / (1.0 + big / r.norm());
                    if score.is_finite() && score > best.0 {
                        best = (score, r);
                    }
                }
                Ok(best.1)
            }
        }
    }

    fn initial(&self, rho: C64) -> Result<State> {
        let row = self.row(rho)?;
        if collided(&row, self.opts.d_floor) {
            return Err(Error::RootCollision {
                rho,
                suggestion: rho + C64::new(0.0, 0.5),
            });
        }
        let reference = self.src.reference_root(rho * rho)?;
        let (r1, r2) = row.roots();
        let (c, o) = if (r1 - reference).norm() <= (r2 - reference).norm() {
            (r1, r2)
        } else {
            (r2, r1)
        };
        if !((c - reference).norm() < 0.5 * (o - reference).norm()) {
            return Err(Error::TrackingFailure { rho });
        }
        Ok(State { rho, m: c, slope: None })
    }

    /// States on the horizontal leg at each requested real part.
    fn spine(&self, start: C64, height: f64, nodes: &[f64]) -> Result<Vec<State>> {
        let mut st = self.initial(start)?;
        let lift = C64::new(start.re, height);
        self.advance(&mut st, lift)?;
        let mut out = vec![None; nodes.len()];
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
        let (left, right): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&i| nodes[i] < start.re);
        let mut s = st;
        for &i in &right {
            self.advance(&mut s, C64::new(nodes[i], height))?;
            out[i] = Some(s);
        }
        let mut s = st;
        for &i in left.iter().rev() {
            self.advance(&mut s, C64::new(nodes[i], height))?;
            out[i] = Some(s);
        }
        Ok(out.into_iter().map(|s| s.expect("every node visited")).collect())
    }

    fn m5(&self, row: &CoefRow, m2: C64) -> Result<C64> {
        let (a, ca) = row.m5_from(0, m2);
        let (b, cb) = row.m5_from(1, m2);
        const WELL: f64 = 1e-6;
        match (ca > WELL, cb > WELL) {
            (true, true) => {
                let mismatch = (a - b).norm() / a.norm().max(b.norm()).max(1.0);
                if !(mismatch <= self.opts.cross_tol) {
                    return Err(Error::CrossCheck {
                        lambda: row.lambda,
                        mismatch,
                    });
                }
                Ok(if ca >= cb { a } else { b })
            }
            (true, false) => Ok(a),
            (false, true) => Ok(b),
            (false, false) => Err(Error::CrossCheck {
                lambda: row.lambda,
                mismatch: f64::INFINITY,
            }),
        }
    }
}

/// Principal square root with the Im ρ ≥ 0 tie-break.
fn rho_of(lambda: C64) -> C64 {
    crate::ode::SpectralParameter::from_lambda(lambda).rho
}

/// Track the physical root of the quadratic to every λ in `targets` and
/// derive M̃_5 there.
pub fn solve_quadratic_track(src: &CoefficientSource, targets: &[C64], opts: &TrackOptions) -> Result<RootTrack> {
    let tracker = Tracker { src, opts };
    let start = tracker.start_point()?;
    let rhos: Vec<C64> = targets.iter().map(|&l| rho_of(l)).collect();
    let nodes: Vec<f64> = rhos.iter().map(|r| r.re).collect();
    let mut last_err = None;
    for &h in &opts.heights {
        let spine = match tracker.spine(start, h, &nodes) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let idx: Vec<usize> = (0..targets.len()).collect();
        let results = Exec::default().map(&idx, |&i| -> Result<(C64, bool, C64)> {
            let mut st = spine[i];
            let row = tracker.advance(&mut st, rhos[i])?;
            let (r1, _) = row.roots();
            let branch = (st.m - r1).norm() == 0.0;
            let m5 = tracker.m5(&row, st.m)?;
            Ok((st.m, branch, m5))
        });
        let mut track = RootTrack {
            grid: targets.to_vec(),
            values: vec![None; targets.len()],
            branch: vec![None; targets.len()],
            m5: vec![None; targets.len()],
            rejected: Vec::new(),
            floor: opts.d_floor,
            start,
            height: h,
        };
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((m, b, m5)) => {
                    track.values[i] = Some(m);
                    track.branch[i] = Some(b);
                    track.m5[i] = Some(m5);
                }
                Err(e) => track.rejected.push((i, e.to_string())),
            }
        }
        return Ok(track);
    }
    Err(last_err.unwrap_or(Error::TrackingFailure { rho: start }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeId, MetricTree};
    use crate::inverse::coefficients::{Environment, PartFunctions};
    use crate::potential::{Potential, PotentialSet};
    use std::sync::Arc;

    fn env() -> Arc<Environment> {
        Arc::new(Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(2)).unwrap())
    }

    fn targets() -> Vec<C64> {
        let mut t: Vec<C64> = (1..=30).map(|i| C64::new(0.37 * i as f64 * i as f64, 0.0)).collect();
        t.extend([C64::new(-9.0, 0.0), C64::new(4.0, 3.0)]);
        t
    }

    fn check(q: &PotentialSet, opts: &TrackOptions) {
        let env = env();
        let src = CoefficientSource::forward(env.clone(), q).unwrap();
        let truth = PartFunctions::new(&env, q).unwrap();
        let track = solve_quadratic_track(&src, &targets(), opts).unwrap();
        assert!(track.accepted() + 1 >= targets().len(), "{:?}", track.rejected);
        for (i, v) in track.values.iter().enumerate() {
            if let Some(m) = v {
                let (m2, m5) = truth.ratios(track.grid[i]).unwrap();
                assert!(
                    (m - m2).norm() < 1e-6 * m2.norm().max(1.0),
                    "{}: {m} vs {m2}",
                    track.grid[i]
                );
                let t5 = track.m5[i].unwrap();
                assert!((t5 - m5).norm() < 1e-6 * m5.norm().max(1.0));
            }
        }
    }

    #[test]
    fn tracks_zero_potential_on_unknown_parts() {
        let mut q = PotentialSet::zero(5);
        q.set(0, Potential::constant(0.7));
        q.set(2, Potential::pwc(vec![0.3, -0.4]));
        q.set(3, Potential::constant(-1.1));
        check(&q, &TrackOptions::default());
    }

    #[test]
    fn tracks_from_imaginary_start() {
        let q = PotentialSet(
            (0..5)
                .map(|j| Potential::pwc(vec![0.5 - 0.2 * j as f64, 0.1 * j as f64]))
                .collect(),
        );
        let opts = TrackOptions {
            start: StartPoint::At(C64::new(0.0, 6.0)),
            ..Default::default()
        };
        check(&q, &opts);
    }

    #[test]
    fn constant_g2_matches_closed_form() {
        let mut q = PotentialSet::zero(5);
        q.set(1, Potential::constant(1.0));
        let src = CoefficientSource::forward(env(), &q).unwrap();
        let track = solve_quadratic_track(&src, &targets(), &TrackOptions::default()).unwrap();
        for (l, m) in track.m2_points() {
            let mu = rho_of(l - 1.0);
            let expect = mu * mu.cos() / mu.sin();
            assert!((m - expect).norm() < 1e-6 * expect.norm().max(1.0));
        }
    }
}
