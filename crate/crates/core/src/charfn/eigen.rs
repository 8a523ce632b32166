//! Real zeros of characteristic functions with certified multiplicities.
//!
//! The window is scanned in t = sign(λ)·√|λ| (uniform in ρ for λ > 0) with
//! a step tied to the zero density length/π. Each chunk of the scan gets an
//! argument-principle count; candidates inside it (sign changes and local
//! minima of |Δ|) get their own counts, and the two must agree.

use crate::par::Exec;
use crate::rootfind::{box_count, brent};
use crate::{Error, Result, C64};

use super::CharFn;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub lambda: f64,
    pub multiplicity: usize,
    /// |Δ(λ)| relative to the local scale of |Δ| on the certifying box.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSet {
    pub tag: String,
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: (f64, f64),
}

impl SpectrumSet {
    pub fn from_values(tag: impl Into<String>, window: (f64, f64), values: &[(f64, usize)]) -> Self {
        let mut eigenvalues: Vec<Eigenvalue> = values
            .iter()
            .map(|&(lambda, multiplicity)| Eigenvalue {
                lambda,
                multiplicity,
                residual: 0.0,
            })
            .collect();
        eigenvalues.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        SpectrumSet {
            tag: tag.into(),
            eigenvalues,
            window,
        }
    }

    /// Eigenvalues with multiplicities expanded into repeats.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect()
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Expected count (e.g. from the q ≡ 0 problem); the result must lie
    /// within `hint_slack` of it.
    pub count_hint: Option<usize>,
    pub hint_slack: usize,
    /// Scan cells per expected zero spacing.
    pub cells_per_zero: usize,
    /// Scan cells per certified chunk.
    pub chunk: usize,
    pub exec: Exec,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            count_hint: None,
            hint_slack: 2,
            cells_per_zero: 12,
            chunk: 24,
            exec: Exec::default(),
        }
    }
}

fn to_t(l: f64) -> f64 {
    l.signum() * l.abs().sqrt()
}

fn to_lambda(t: f64) -> f64 {
    t * t.abs()
}

/// All zeros in [λ_min, λ_max] with multiplicity.
pub fn find_eigenvalues(cf: &CharFn, window: (f64, f64), count_hint: Option<usize>) -> Result<SpectrumSet> {
    find_eigenvalues_with(
        cf,
        window,
        &EigenOptions {
            count_hint,
            ..EigenOptions::default()
        },
    )
}

pub fn find_eigenvalues_with(cf: &CharFn, window: (f64, f64), opts: &EigenOptions) -> Result<SpectrumSet> {
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Invalid(format!("bad window [{lo}, {hi}]")));
    }
    let length = cf.length().max(1e-3);
    let step = std::f64::consts::PI / (opts.cells_per_zero as f64 * length);
    let found = scan(cf, lo, hi, step, opts, 0)?;
    let mut eigenvalues = merge_close(found);
    eigenvalues.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let set = SpectrumSet {
        tag: cf.tag().to_string(),
        eigenvalues,
        window,
    };
    if let Some(hint) = opts.count_hint {
        let n = set.count();
        if n.abs_diff(hint) > opts.hint_slack {
            return Err(Error::Certification {
                lo,
                hi,
                reason: format!("found {n} zeros, expected {hint} ± {}", opts.hint_slack),
            });
        }
    }
    Ok(set)
}

fn merge_close(mut v: Vec<Eigenvalue>) -> Vec<Eigenvalue> {
    v.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut out: Vec<Eigenvalue> = Vec::new();
    for e in v {
        if let Some(last) = out.last_mut() {
            if (e.lambda - last.lambda).abs() <= 1e-12 * (1.0 + e.lambda.abs()) {
                last.multiplicity += e.multiplicity;
                continue;
            }
        }
        out.push(e);
    }
    out
}

fn scan(cf: &CharFn, lo: f64, hi: f64, step: f64, opts: &EigenOptions, level: u32) -> Result<Vec<Eigenvalue>> {
    let (t_lo, t_hi) = (to_t(lo), to_t(hi));
    let n = (((t_hi - t_lo) / step).ceil() as usize).max(4);
    let ts: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                t_hi
            } else {
                t_lo + (t_hi - t_lo) * i as f64 / n as f64
            }
        })
        .collect();
    let ls: Vec<f64> = ts.iter().map(|&t| to_lambda(t)).collect();
    let ls = {
        let mut l = ls;
        l[0] = lo;
        l[n] = hi;
        l
    };
    let vals = crate::par::collect_indexed(opts.exec.map(&ls, |&l| cf.eval_real(l).map(|v| v.re)))?;
    let mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    for &i in &[0, n] {
        let near = if i == 0 { mags[1] } else { mags[n - 1] };
        if mags[i] <= 1e-12 * near || mags[i] == 0.0 {
            return Err(Error::Certification {
                lo,
                hi,
                reason: format!("zero at the window boundary {}", ls[i]),
            });
        }
    }

    // chunk boundaries at local maxima of |Δ| near nominal positions
    let mut bounds = vec![0usize];
    let mut k = opts.chunk;
    while k + opts.chunk / 2 < n {
        let r = (opts.chunk / 4).max(1);
        let lo_k = k.saturating_sub(r).max(bounds.last().unwrap() + 2);
        let hi_k = (k + r).min(n - 2);
        if lo_k <= hi_k {
            let best = (lo_k..=hi_k).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
            bounds.push(best);
        }
        k += opts.chunk;
    }
    bounds.push(n);

    let chunks: Vec<(usize, usize)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    let f = |z: C64| cf.eval(z);
    let results = opts.exec.map(&chunks, |&(i0, i1)| -> Result<Vec<Eigenvalue>> {
        let (a, b) = (ls[i0], ls[i1]);
        let half = 0.5 * (b - a);
        let total = box_count(&f, a, b, -half, half)?;
        if total == 0 {
            return Ok(Vec::new());
        }
        let cands = candidates(&vals, &mags, i0, i1);
        let mut counted = Vec::new();
        let mut sum = 0;
        for &(c0, c1) in &cands {
            let (ca, cb) = (ls[c0], ls[c1]);
            let h = 0.5 * (cb - ca);
            let m = box_count(&f, ca, cb, -h, h)?;
            sum += m;
            if m > 0 {
                counted.push((c0, c1, m));
            }
        }
        if sum != total {
            if level < 3 {
                let sub = EigenOptions {
                    exec: Exec::Sequential,
                    ..opts.clone()
                };
                return scan(cf, a, b, step / 4.0, &sub, level + 1);
            }
            return Err(Error::Certification {
                lo: a,
                hi: b,
                reason: format!("box count {total} but candidates account for {sum}"),
            });
        }
        let mut out = Vec::new();
        for (c0, c1, m) in counted {
            out.extend(resolve(cf, ls[c0], ls[c1], vals[c0], vals[c1], m)?);
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(all)
}

/// Index intervals that may hold zeros: sign changes and local minima of |Δ|.
fn candidates(vals: &[f64], mags: &[f64], i0: usize, i1: usize) -> Vec<(usize, usize)> {
    let mut raw = Vec::new();
    for k in i0..i1 {
        if vals[k].signum() != vals[k + 1].signum() || vals[k] == 0.0 || vals[k + 1] == 0.0 {
            raw.push((k, k + 1));
        }
    }
    for k in (i0 + 1)..i1 {
        if mags[k] <= mags[k - 1] && mags[k] <= mags[k + 1] {
            raw.push((k - 1, k + 1));
        }
    }
    raw.sort();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in raw {
        if let Some(last) = merged.last_mut() {
            if a <= last.1 {
                last.1 = last.1.max(b);
                continue;
            }
        }
        merged.push((a, b));
    }
    // keep box edges off points where |Δ| is tiny
    for iv in merged.iter_mut() {
        if iv.0 > i0 && mags[iv.0] < 1e-3 * mags[iv.0 - 1] {
            iv.0 -= 1;
        }
        if iv.1 < i1 && mags[iv.1] < 1e-3 * mags[iv.1 + 1] {
            iv.1 += 1;
        }
    }
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (a, b) in merged {
        if let Some(last) = out.last_mut() {
            if a < last.1 {
                last.1 = last.1.max(b);
                continue;
            }
        }
        out.push((a, b));
    }
    out
}

fn real_fn(cf: &CharFn) -> impl Fn(f64) -> Result<f64> + '_ {
    move |l| cf.eval_real(l).map(|v| v.re)
}

fn deriv_fn(cf: &CharFn) -> impl Fn(f64) -> Result<f64> + '_ {
    move |l| cf.derivative(C64::new(l, 0.0)).map(|v| v.re)
}

/// Locate `count` zeros (with multiplicity) inside (a, b).
fn resolve(cf: &CharFn, a: f64, b: f64, fa: f64, fb: f64, count: usize) -> Result<Vec<Eigenvalue>> {
    let f = real_fn(cf);
    let xtol = 1e-15 * (1.0 + a.abs().max(b.abs()));
    let scale = fa.abs().max(fb.abs());
    if count == 1 && fa.signum() != fb.signum() {
        let z = brent(&f, a, b, fa, fb, xtol)?;
        let r = f(z)?.abs() / scale;
        return Ok(vec![Eigenvalue {
            lambda: z,
            multiplicity: 1,
            residual: r,
        }]);
    }
    let df = deriv_fn(cf);
    let mut samples = 32;
    loop {
        let xs: Vec<f64> = (0..=samples).map(|i| a + (b - a) * i as f64 / samples as f64).collect();
        let fs = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        let ds = xs.iter().map(|&x| df(x)).collect::<Result<Vec<_>>>()?;
        let local = fs.iter().fold(scale, |m, v| m.max(v.abs()));
        let mut zeros: Vec<f64> = Vec::new();
        for i in 0..samples {
            if fs[i] == 0.0 {
                zeros.push(xs[i]);
                continue;
            }
            if fs[i].signum() != fs[i + 1].signum() && fs[i + 1] != 0.0 {
                zeros.push(brent(&f, xs[i], xs[i + 1], fs[i], fs[i + 1], xtol)?);
            }
        }
        for i in 0..samples {
            if ds[i].signum() != ds[i + 1].signum() && ds[i] != 0.0 && ds[i + 1] != 0.0 {
                let c = brent(&df, xs[i], xs[i + 1], ds[i], ds[i + 1], xtol)?;
                let fc = f(c)?;
                if fc.abs() <= 1e-9 * local {
                    zeros.push(c);
                } else if fc.signum() != fs[i].signum() && fs[i].signum() == fs[i + 1].signum() {
                    zeros.push(brent(&f, xs[i], c, fs[i], fc, xtol)?);
                    zeros.push(brent(&f, c, xs[i + 1], fc, fs[i + 1], xtol)?);
                }
            }
        }
        zeros.sort_by(f64::total_cmp);
        zeros.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * (1.0 + y.abs()));
        let g = |z: C64| cf.eval(z);
        let mut out = Vec::new();
        let mut total = 0;
        for (i, &z) in zeros.iter().enumerate() {
            let mut r = (b - a) / 8.0;
            if i > 0 {
                r = r.min((z - zeros[i - 1]) / 3.0);
            }
            if i + 1 < zeros.len() {
                r = r.min((zeros[i + 1] - z) / 3.0);
            }
            r = r.min(z - a).min(b - z).max(1e-9 * (1.0 + z.abs()));
            let m = box_count(&g, z - r, z + r, -r, r)?;
            total += m;
            if m > 0 {
                out.push(Eigenvalue {
                    lambda: z,
                    multiplicity: m,
                    residual: f(z)?.abs() / local,
                });
            }
        }
        if total == count {
            return Ok(out);
        }
        if samples >= 512 {
            return Err(Error::Certification {
                lo: a,
                hi: b,
                reason: format!("located {total} of {count} zeros"),
            });
        }
        samples *= 4;
    }
}
