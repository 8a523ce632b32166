//! Scalar root finding and winding numbers.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// Brent's method on a sign-changing bracket.
pub fn brent(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Certification {
            lo: a.min(b),
            hi: a.max(b),
            reason: "no sign change in bracket".into(),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Phase increment of `f` along the segment z0 → z1, refined until every
/// sub-step turns by less than π/4.
fn side_phase(f: &dyn Fn(C64) -> Result<C64>, z0: C64, f0: C64, z1: C64, f1: C64, depth: u32) -> Result<f64> {
    let d = (f1 / f0).arg();
    let ratio = f1.norm() / f0.norm();
    if d.abs() < PI / 4.0 && (0.25..4.0).contains(&ratio) {
        return Ok(d);
    }
    if depth > 48 {
        return Err(Error::Certification {
            lo: z0.re.min(z1.re),
            hi: z0.re.max(z1.re),
            reason: "contour passes too close to a zero".into(),
        });
    }
    let zm = (z0 + z1) * 0.5;
    let fm = f(zm)?;
    if !(fm.norm() > 0.0) || !fm.norm().is_finite() {
        return Err(Error::Certification {
            lo: z0.re.min(z1.re),
            hi: z0.re.max(z1.re),
            reason: "zero or non-finite value on contour".into(),
        });
    }
    Ok(side_phase(f, z0, f0, zm, fm, depth + 1)? + side_phase(f, zm, fm, z1, f1, depth + 1)?)
}

/// Number of zeros of `f` inside the rectangle [re_lo, re_hi] × [−h, h] + i·center_im.
pub fn box_count(f: &dyn Fn(C64) -> Result<C64>, re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<usize> {
    let corners = [
        C64::new(re_lo, im_lo),
        C64::new(re_hi, im_lo),
        C64::new(re_hi, im_hi),
        C64::new(re_lo, im_hi),
    ];
    let per_side = 8;
    let mut pts = Vec::with_capacity(4 * per_side + 1);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..per_side {
            pts.push(a + (b - a) * (i as f64 / per_side as f64));
        }
    }
    pts.push(corners[0]);
    let vals = pts.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
    if vals.iter().any(|v| !(v.norm() > 0.0) || !v.norm().is_finite()) {
        return Err(Error::Certification {
            lo: re_lo,
            hi: re_hi,
            reason: "zero or non-finite value on contour".into(),
        });
    }
    let mut total = 0.0;
    for i in 0..pts.len() - 1 {
        total += side_phase(f, pts[i], vals[i], pts[i + 1], vals[i + 1], 0)?;
    }
    let w = total / (2.0 * PI);
    let n = w.round();
    if (w - n).abs() > 0.05 || n < 0.0 {
        return Err(Error::Certification {
            lo: re_lo,
            hi: re_hi,
            reason: format!("non-integer winding {w}"),
        });
    }
    Ok(n as usize)
}
