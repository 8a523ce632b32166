//! Fundamental solutions C, S of −y'' + q y = λ y on a single edge.
//!
//! The state is the 2×2 transfer matrix [[C, S], [C', S']] starting from
//! the identity. Constant potentials use closed forms, piecewise-constant
//! ones an exact product of constant transfers, and the rest a fourth-order
//! Magnus integrator with step doubling. Every Magnus step multiplies by the
//! exponential of a traceless matrix, so the Wronskian stays 1 to roundoff.

use crate::graph::Edge;
use crate::potential::Potential;
use crate::{Error, Result, C64};

/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParameter {
    pub lambda: C64,
    pub rho: C64,
}

impl SpectralParameter {
    /// ρ = √λ on the principal branch, with Im ρ ≥ 0 when Re ρ = 0.
    pub fn from_lambda(lambda: C64) -> Self {
        let mut rho = lambda.sqrt();
        if rho.re < 0.0 || (rho.re == 0.0 && rho.im < 0.0) {
            rho = -rho;
        }
        SpectralParameter { lambda, rho }
    }

    pub fn from_rho(rho: C64) -> Self {
        let mut sp = SpectralParameter::from_lambda(rho * rho);
        // keep the caller's ρ when it is already on the principal branch
        if rho.re > 0.0 || (rho.re == 0.0 && rho.im >= 0.0) {
            sp.rho = rho;
        }
        sp
    }

    pub fn real(lambda: f64) -> Self {
        SpectralParameter::from_lambda(C64::new(lambda, 0.0))
    }
}

/// Values C, C', S, S' at one point x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalPair {
    pub c: C64,
    pub cp: C64,
    pub s: C64,
    pub sp: C64,
}

impl FundamentalPair {
    pub fn identity() -> Self {
        FundamentalPair {
            c: C64::new(1.0, 0.0),
            cp: C64::new(0.0, 0.0),
            s: C64::new(0.0, 0.0),
            sp: C64::new(1.0, 0.0),
        }
    }

    pub fn wronskian(&self) -> C64 {
        self.c * self.sp - self.cp * self.s
    }

    /// self ∘ first: transfer over [0, a] followed by this one over [a, b].
    fn after(&self, first: &FundamentalPair) -> FundamentalPair {
        FundamentalPair {
            c: self.c * first.c + self.s * first.cp,
            s: self.c * first.s + self.s * first.sp,
            cp: self.cp * first.c + self.sp * first.cp,
            sp: self.cp * first.s + self.sp * first.sp,
        }
    }

    fn max_abs(&self) -> f64 {
        self.c.norm().max(self.s.norm()).max(self.cp.norm()).max(self.sp.norm())
    }

    fn dist(&self, o: &FundamentalPair) -> f64 {
        (self.c - o.c)
            .norm()
            .max((self.s - o.s).norm())
            .max((self.cp - o.cp).norm())
            .max((self.sp - o.sp).norm())
    }
}

/// cos √z, even in √z so the branch does not matter.
pub(crate) fn cos_sqrt(z: C64) -> C64 {
    if z.norm() < 1e-2 {
        // Σ (−z)^k / (2k)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..9 {
            term = term * (-z) / ((2 * k - 1) * (2 * k)) as f64;
            sum += term;
        }
        sum
    } else {
        z.sqrt().cos()
    }
}

/// sin √z / √z, entire in z.
pub(crate) fn sinc_sqrt(z: C64) -> C64 {
    if z.norm() < 1e-2 {
        // Σ (−z)^k / (2k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..9 {
            term = term * (-z) / ((2 * k) * (2 * k + 1)) as f64;
            sum += term;
        }
        sum
    } else {
        let r = z.sqrt();
        r.sin() / r
    }
}

/// Transfer over length x for constant q = c: μ² = λ − c.
pub(crate) fn constant_transfer(mu2: C64, x: f64) -> FundamentalPair {
    let z = mu2 * x * x;
    let c = cos_sqrt(z);
    let s = sinc_sqrt(z) * x;
    FundamentalPair {
        c,
        s,
        cp: -mu2 * s,
        sp: c,
    }
}

/// One fourth-order Magnus step over [x, x + h].
fn magnus_step(q: &dyn Fn(f64) -> f64, lambda: C64, x: f64, h: f64) -> FundamentalPair {
    const G: f64 = 0.288_675_134_594_812_9; // √3 / 6
    let w1 = q(x + h * (0.5 - G)) - lambda;
    let w2 = q(x + h * (0.5 + G)) - lambda;
    // Ω = h/2 (A1 + A2) + (√3/12) h² [A2, A1], A_i = [[0, 1], [w_i, 0]]
    let d = (w1 - w2) * (h * h * 0.5 * G);
    let o12 = C64::new(h, 0.0);
    let o21 = (w1 + w2) * (0.5 * h);
    let s2 = d * d + o12 * o21;
    let ch = cos_sqrt(-s2);
    let sh = sinc_sqrt(-s2);
    FundamentalPair {
        c: ch + sh * d,
        s: sh * o12,
        cp: sh * o21,
        sp: ch - sh * d,
    }
}

fn magnus_interval(
    q: &dyn Fn(f64) -> f64,
    lambda: C64,
    a: f64,
    b: f64,
    tol: f64,
    y: FundamentalPair,
    h0: f64,
) -> Result<(FundamentalPair, f64)> {
    let span = b - a;
    let mut x = a;
    let mut y = y;
    let mut h = h0.min(span);
    let h_min = 1e-13 * span.max(1.0);
    while x < b {
        if x + h > b {
            h = b - x;
        }
        let full = magnus_step(q, lambda, x, h);
        let half = magnus_step(q, lambda, x + 0.5 * h, 0.5 * h).after(&magnus_step(q, lambda, x, 0.5 * h));
        let scale = y.max_abs().max(1.0);
        let y_full = full.after(&y);
        let y_half = half.after(&y);
        let err = y_full.dist(&y_half) / 15.0 / scale;
        let local_tol = tol * (h / span).max(1e-3);
        if err <= local_tol || h <= h_min {
            if !err.is_finite() {
                return Err(Error::Integrator { lambda, x });
            }
            if err > local_tol && h <= h_min {
                return Err(Error::Integrator { lambda, x });
            }
            x += h;
            y = y_half;
            let grow = if err == 0.0 {
                4.0
            } else {
                (0.9 * (local_tol / err).powf(0.2)).clamp(0.2, 4.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * (local_tol / err).powf(0.2)).clamp(0.1, 0.5);
        }
    }
    Ok((y, h))
}

/// Transfer matrix over [0, x] for potential `q` on an edge of length `length`.
pub fn transfer(q: &Potential, length: f64, x: f64, sp: SpectralParameter, tol: f64) -> Result<FundamentalPair> {
    let lambda = sp.lambda;
    if let Some(c) = q.as_constant() {
        if c == 0.0 {
            return Ok(zero_transfer(sp, x));
        }
        return Ok(constant_transfer(lambda - c, x));
    }
    match q {
        Potential::Pwc { values } => {
            let n = values.len();
            let cell = length / n as f64;
            let mut y = FundamentalPair::identity();
            for (i, v) in values.iter().enumerate() {
                let lo = i as f64 * cell;
                if lo >= x {
                    break;
                }
                let hi = ((i + 1) as f64 * cell).min(x);
                y = constant_transfer(lambda - *v, hi - lo).after(&y);
            }
            Ok(y)
        }
        _ => {
            let mut nodes = vec![0.0];
            nodes.extend(q.breakpoints(length).into_iter().filter(|&b| b < x));
            nodes.push(x);
            let f = |t: f64| q.value(t, length);
            let mut y = FundamentalPair::identity();
            let mut h = (length / 16.0).min(0.5 / (sp.rho.norm() + 1.0)).max(1e-3 * length);
            for w in nodes.windows(2) {
                if w[1] > w[0] {
                    let (y2, h2) = magnus_interval(&f, lambda, w[0], w[1], tol, y, h)?;
                    y = y2;
                    h = h2;
                }
            }
            Ok(y)
        }
    }
}

/// q ≡ 0 in terms of ρ: C = cos ρx, S = sin ρx / ρ.
fn zero_transfer(sp: SpectralParameter, x: f64) -> FundamentalPair {
    let rx = sp.rho * x;
    if rx.norm() < 1e-3 {
        return constant_transfer(sp.lambda, x);
    }
    let c = rx.cos();
    let sn = rx.sin();
    FundamentalPair {
        c,
        s: sn / sp.rho,
        cp: -sp.rho * sn,
        sp: c,
    }
}

/// C, C', S, S' at `x` on `edge` with potential `q`.
pub fn fundamental_pair(
    edge: &Edge,
    q: &Potential,
    x: f64,
    sp: SpectralParameter,
    tol: f64,
) -> Result<FundamentalPair> {
    if !(0.0..=edge.length).contains(&x) {
        return Err(Error::Invalid(format!("x = {x} outside [0, {}]", edge.length)));
    }
    if tol <= 0.0 {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    transfer(q, edge.length, x, sp, tol)
}

/// Values at x = T for a batch of spectral parameters, order preserved.
pub fn fundamental_pair_grid(
    edge: &Edge,
    q: &Potential,
    sps: &[SpectralParameter],
    tol: f64,
) -> Result<Vec<FundamentalPair>> {
    let results = crate::par::map(sps, |sp| fundamental_pair(edge, q, edge.length, *sp, tol));
    crate::par::collect_indexed(results)
}
