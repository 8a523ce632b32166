//! Reference closed forms for the five-edge example tree with unit lengths and
//! q ≡ 0 (edges v1→v3, v2→v3, v3→v6, v4→v6, v5→v6, known edge v3v6).
//!
//! These are the golden values the coefficient pipeline is compared with.
//! Everything is a function of ρ = √λ. The forms are generic over the
//! scalar so that real ρ can be evaluated in double-double: several of the
//! trigonometric sums cancel to many digits near their high-order zeros.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use twofloat::TwoFloat;

use crate::graph::{EdgeId, MetricTree};
use crate::inverse::{CoefficientSource, Environment};
use crate::par::{collect_indexed, Exec};
use crate::{Result, C64};

/// Scalars the reference forms can be evaluated in.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
{
    fn zero() -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn sin(self) -> Self {
        C64::sin(self)
    }
    fn cos(self) -> Self {
        C64::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        C64::powi(&self, n)
    }
}

impl Scalar for TwoFloat {
    fn zero() -> Self {
        TwoFloat::from(0.0)
    }
    fn sin(self) -> Self {
        TwoFloat::sin(self)
    }
    fn cos(self) -> Self {
        TwoFloat::cos(self)
    }
    fn powi(self, n: i32) -> Self {
        TwoFloat::powi(self, n)
    }
}

fn sin<T: Scalar>(k: f64, r: T) -> T {
    (r * k).sin()
}

fn cos<T: Scalar>(k: f64, r: T) -> T {
    (r * k).cos()
}

/// Δ⁰_0 = (−9 sin 5ρ + 13 sin 3ρ + 6 sin ρ)/(16ρ³).
pub fn delta0_0<T: Scalar>(r: T) -> T {
    (sin(5.0, r) * -9.0 + sin(3.0, r) * 13.0 + sin(1.0, r) * 6.0) / (r.powi(3) * 16.0)
}

/// Δ⁰_1 = Δ⁰_4 = (−9 cos 5ρ + 7 cos 3ρ + 2 cos ρ)/(16ρ²).
pub fn delta0_1<T: Scalar>(r: T) -> T {
    (cos(5.0, r) * -9.0 + cos(3.0, r) * 7.0 + cos(1.0, r) * 2.0) / (r.powi(2) * 16.0)
}

/// a⁰_{ij}, rows i = 1..3, columns j = 1..4.
pub fn a0<T: Scalar>(r: T) -> [[T; 4]; 3] {
    let (s1, c1) = (r.sin(), r.cos());
    let (s2, c2) = (sin(2.0, r), cos(2.0, r));
    let a11 = sin(3.0, r) / r;
    let a12 = s2 * s1 / (r * r);
    let a14 = s1.powi(3) / r.powi(3);
    let a21 = cos(3.0, r);
    let a22 = s2 * c1 / r;
    let a23 = c2 * s1 / r;
    let a24 = c1 * s1 * s1 / (r * r);
    [[a11, a12, a12, a14], [a21, a22, a23, a24], [a21, a23, a22, a24]]
}

/// b⁰_{ij}, rows i = 1..2.
pub fn b0<T: Scalar>(r: T) -> [[T; 4]; 2] {
    let b11 = (sin(6.0, r) * -3.0 - sin(4.0, r) * 2.0 + sin(2.0, r) * 13.0) / (r.powi(3) * 16.0);
    let b12 = (cos(6.0, r) * -3.0 + cos(4.0, r) * 6.0 + cos(2.0, r) * 3.0 - 6.0) / (r.powi(4) * 16.0);
    let b13 = (cos(6.0, r) * 3.0 - cos(4.0, r) * 10.0 + cos(2.0, r) * 13.0 - 6.0) / (r.powi(4) * 32.0);
    let b14 = (sin(6.0, r) * -3.0 + sin(4.0, r) * 12.0 - sin(2.0, r) * 15.0) / (r.powi(5) * 32.0);
    [[b11, b12, b13, b14], [b11, b13, b12, b14]]
}

pub fn a_coef<T: Scalar>(r: T) -> T {
    (sin(12.0, r) * -27.0 + sin(10.0, r) * 174.0 - sin(8.0, r) * 420.0 + sin(6.0, r) * 378.0 + sin(4.0, r) * 153.0
        - sin(2.0, r) * 468.0)
        / (r.powi(9) * 2048.0)
}

pub fn b_coef<T: Scalar>(r: T) -> T {
    (cos(12.0, r) * -27.0 + cos(10.0, r) * 84.0 + cos(8.0, r) * 106.0 - cos(6.0, r) * 764.0 + cos(4.0, r) * 1099.0
        - cos(2.0, r) * 344.0
        - 154.0)
        / (r.powi(8) * 2048.0)
}

pub fn c_coef<T: Scalar>(r: T) -> T {
    (sin(12.0, r) * -27.0 + sin(10.0, r) * 48.0 + sin(8.0, r) * 140.0 - sin(6.0, r) * 336.0 - sin(4.0, r) * 71.0
        + sin(2.0, r) * 512.0)
        / (r.powi(7) * 1024.0)
}

/// Discriminant D₀ in its expanded closed form (a degree-24 cosine polynomial over 8388608ρ¹⁶).
pub fn d_coef<T: Scalar>(r: T) -> T {
    const K: [(f64, f64); 13] = [
        (24.0, 6561.0),
        (22.0, -52488.0),
        (20.0, 128628.0),
        (18.0, 83592.0),
        (16.0, -987134.0),
        (14.0, 1543976.0),
        (12.0, 702372.0),
        (10.0, -4646312.0),
        (8.0, 3755087.0),
        (6.0, 3053616.0),
        (4.0, -4805144.0),
        (2.0, -4176688.0),
        (0.0, 5393934.0),
    ];
    let num = K.iter().fold(T::zero(), |acc, &(k, c)| acc + cos(k, r) * c);
    num / (r.powi(16) * 8388608.0)
}

/// Reference asymptotic forms of the two roots: (ρ cos ρ / sin ρ,
/// −(1 + 6cos²ρ)/(3 sin ρ cos ρ)).
pub fn closed_form_roots(r: C64) -> (C64, C64) {
    let (s, c) = (r.sin(), r.cos());
    (r * c / s, -(c * c * 6.0 + 1.0) / (s * c * 3.0))
}

/// Exact roots of the reference quadratic: ρ cos ρ / sin ρ and
/// −ρ(1 + 6cos²ρ)/(3 sin ρ cos ρ).
pub fn exact_roots(r: C64) -> (C64, C64) {
    let (m1, m2) = closed_form_roots(r);
    (m1, m2 * r)
}

/// Grid points with |sin ρ| or |cos ρ| below this are excluded from the
/// golden comparison: several reference coefficients vanish there to high
/// order and relative errors are meaningless.
pub const TRIG_FLOOR: f64 = 1e-2;

/// Quantities compared by [`compare_reference`], in report order.
pub const GOLDEN_NAMES: [&str; 8] = ["delta0_0", "delta0_1", "a0", "b0", "A0", "B0", "C0", "D0"];

/// Relative errors of the computed q ≡ 0 quantities against the reference
/// forms at one ρ; `None` when the point is excluded by [`TRIG_FLOOR`].
#[derive(Clone, Debug, PartialEq)]
pub struct GoldenPoint {
    pub rho: f64,
    pub errors: Option<[f64; 8]>,
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// The five-edge unit tree with its known edge v3v6.
pub fn reference_environment() -> Result<Environment> {
    Environment::new(MetricTree::five_edge([1.0; 5]), EdgeId(2))
}

/// Compute Δ⁰_0, Δ⁰_1, a⁰, b⁰, A₀, B₀, C₀, D₀ through the coefficient
/// pipeline and compare them with the reference forms, evaluated in
/// double-double, at real ρ.
pub fn compare_reference(rhos: &[f64], exec: Exec) -> Result<Vec<GoldenPoint>> {
    let src = CoefficientSource::reference(Arc::new(reference_environment()?))?;
    collect_indexed(exec.map(rhos, |&x| {
        let r = C64::new(x, 0.0);
        if r.sin().norm() < TRIG_FLOOR || r.cos().norm() < TRIG_FLOOR {
            return Ok(GoldenPoint { rho: x, errors: None });
        }
        let row = src.row(r * r)?;
        let t = TwoFloat::from(x);
        let re = |v: TwoFloat| C64::new(f64::from(v), 0.0);
        let (a, b) = (a0(t).map(|row| row.map(re)), b0(t).map(|row| row.map(re)));
        let worst = |xs: &mut dyn Iterator<Item = f64>| xs.fold(0.0, f64::max);
        let d1 = re(delta0_1(t));
        let errors = [
            rel(row.deltas[0], re(delta0_0(t))),
            rel(row.deltas[1], d1).max(rel(row.deltas[2], d1)),
            worst(&mut (0..12).map(|k| rel(row.a[k / 4][k % 4], a[k / 4][k % 4]))),
            worst(&mut (0..8).map(|k| rel(row.b[k / 4][k % 4], b[k / 4][k % 4]))),
            rel(row.abc[0], re(a_coef(t))),
            rel(row.abc[1], re(b_coef(t))),
            rel(row.abc[2], re(c_coef(t))),
            rel(row.d, re(discriminant(t))),
        ];
        Ok(GoldenPoint {
            rho: x,
            errors: Some(errors),
        })
    }))
}

/// B² − 4AC from the reference A, B, C. The expanded D polynomial cancels by
/// up to seventeen digits near ρ = π, past what double-double trig resolves.
pub fn discriminant<T: Scalar>(r: T) -> T {
    let (a, b, c) = (a_coef(r), b_coef(r), c_coef(r));
    b * b - a * c * 4.0
}

/// Pipeline roots of the reference quadratic at one ρ, divided by the
/// reference asymptotic forms. The root nearest the first reference form is
/// paired with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootRatio {
    pub rho: f64,
    pub first: C64,
    pub second: C64,
}

pub fn root_ratios(rhos: &[f64], exec: Exec) -> Result<Vec<RootRatio>> {
    let src = CoefficientSource::reference(Arc::new(reference_environment()?))?;
    collect_indexed(exec.map(rhos, |&x| {
        let r = C64::new(x, 0.0);
        let (m1, m2) = src.row(r * r)?.roots();
        let (p1, p2) = closed_form_roots(r);
        let (first, second) = if (m1 - p1).norm() <= (m2 - p1).norm() {
            (m1, m2)
        } else {
            (m2, m1)
        };
        Ok(RootRatio {
            rho: x,
            first: first / p1,
            second: second / p2,
        })
    }))
}

/// Largest error per quantity over the non-excluded points.
pub fn max_errors(points: &[GoldenPoint]) -> [f64; 8] {
    let mut out = [0.0f64; 8];
    for e in points.iter().filter_map(|p| p.errors) {
        for i in 0..8 {
            out[i] = out[i].max(e[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_comparison_on_a_uniform_grid() {
        let rhos: Vec<f64> = (0..50).map(|i| 0.3 + 5.7 * i as f64 / 49.0).collect();
        let pts = compare_reference(&rhos, Exec::default()).unwrap();
        let m = max_errors(&pts);
        for (n, e) in GOLDEN_NAMES.iter().zip(m) {
            assert!(e <= 1e-8, "{n}: {e:e}");
        }
        let half_pi = compare_reference(&[std::f64::consts::FRAC_PI_2], Exec::Sequential).unwrap();
        assert_eq!(half_pi[0].errors, None);
    }

    #[test]
    fn closed_form_d_matches_discriminant_away_from_pi() {
        for x in [0.4, 1.1, 2.5, 4.0, 5.5] {
            let t = TwoFloat::from(x);
            let (d, e) = (f64::from(d_coef(t)), f64::from(discriminant(t)));
            assert!((d - e).abs() <= 1e-10 * e.abs(), "{x}: {d:e} vs {e:e}");
        }
    }

    #[test]
    fn exact_roots_solve_reference_quadratic() {
        for x in [0.7, 1.3, 2.9, 10.3] {
            let r = C64::new(x, 0.0);
            let (a, b, c) = (a_coef(r), b_coef(r), c_coef(r));
            let (m1, m2) = exact_roots(r);
            for m in [m1, m2] {
                let res = (a * m * m + b * m + c).norm() / (a * m * m).norm().max(c.norm());
                assert!(res < 1e-10, "{x}: {res}");
            }
            let d = b * b - a * c * 4.0;
            // the expanded D loses ~6 digits to cancellation near its zeros
            assert!((d - d_coef(r)).norm() < 1e-8 * d.norm(), "{x}: {d} vs {}", d_coef(r));
        }
    }
}
