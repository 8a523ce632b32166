//! Characteristic functions rebuilt from finite spectra in ratio form
//! Δ(λ) ≈ Δ⁰(λ) ∏_{n≤N} (λ_n − λ)/(λ⁰_n − λ), with Δ⁰ the q ≡ 0 function of
//! the same problem.

use crate::charfn::{find_eigenvalues, CharFn, SpectrumSet};
use crate::par::{collect_indexed, Exec};
use crate::{Error, Result, C64};

/// Smallest truncation the pipeline accepts.
pub const MIN_TRUNCATION: usize = 8;

#[derive(Clone, Debug)]
pub struct TruncatedProduct {
    reference: CharFn,
    /// (λ_n, λ⁰_n), both ascending.
    pairs: Vec<(f64, f64)>,
}

impl TruncatedProduct {
    pub fn new(reference: CharFn, zeros: &[f64], reference_zeros: &[f64]) -> Result<Self> {
        if zeros.len() != reference_zeros.len() {
            return Err(Error::Invalid(format!(
                "{} zeros paired with {} reference zeros",
                zeros.len(),
                reference_zeros.len()
            )));
        }
        let mut a = zeros.to_vec();
        let mut b = reference_zeros.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        Ok(TruncatedProduct {
            reference,
            pairs: a.into_iter().zip(b).collect(),
        })
    }

    pub fn truncation(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    fn near_reference_zero(&self, lambda: C64) -> Option<f64> {
        self.pairs
            .iter()
            .map(|p| p.1)
            .find(|&z| (lambda - z).norm() <= 1e-10 * (1.0 + z.abs()))
    }

    fn raw(&self, lambda: C64) -> Result<C64> {
        let mut v = self.reference.eval(lambda)?;
        for &(l, l0) in &self.pairs {
            if l != l0 {
                v *= (C64::new(l, 0.0) - lambda) / (C64::new(l0, 0.0) - lambda);
            }
        }
        Ok(v)
    }

    pub fn eval(&self, lambda: C64) -> Result<C64> {
        match self.near_reference_zero(lambda) {
            None => self.raw(lambda),
            Some(z) => {
                // removable singularity: mean value over a small circle
                let r = 1e-4 * (1.0 + z.abs().sqrt());
                let k = 8;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..k {
                    let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / k as f64;
                    acc += self.raw(lambda + C64::from_polar(r, t))?;
                }
                Ok(acc / k as f64)
            }
        }
    }
}

/// Δ from the first N eigenvalues of `spectrum`, paired by order with the
/// zeros of `reference` in the same window.
pub fn reconstruct_char_fn(spectrum: &SpectrumSet, reference: &CharFn, n: usize) -> Result<CharFn> {
    let ref_zeros = find_eigenvalues(reference, spectrum.window, None)?.expanded();
    reconstruct_with_reference_zeros(spectrum, reference, &ref_zeros, n)
}

/// As [`reconstruct_char_fn`] with the reference zeros supplied.
pub fn reconstruct_with_reference_zeros(
    spectrum: &SpectrumSet,
    reference: &CharFn,
    reference_zeros: &[f64],
    n: usize,
) -> Result<CharFn> {
    let zeros = spectrum.expanded();
    let (lo, hi) = spectrum.window;
    if zeros.len() < n {
        return Err(Error::InsufficientSpectra {
            problem: spectrum.tag.clone(),
            reason: format!("{} eigenvalues given, truncation {n} requested", zeros.len()),
        });
    }
    if reference_zeros.len() < n {
        return Err(Error::Pairing {
            lo,
            hi,
            reason: format!("only {} reference zeros for truncation {n}", reference_zeros.len()),
        });
    }
    let mut r = reference_zeros.to_vec();
    r.sort_by(f64::total_cmp);
    let mut z = zeros;
    z.sort_by(f64::total_cmp);
    let product = TruncatedProduct::new(reference.clone(), &z[..n], &r[..n])?;
    Ok(CharFn::from_product(
        format!("{} (N={n})", spectrum.tag),
        product,
        reference.length(),
    ))
}

/// Largest relative change between the N and ⌊N/2⌋ reconstructions on `grid`.
pub fn truncation_change(
    spectrum: &SpectrumSet,
    reference: &CharFn,
    reference_zeros: &[f64],
    n: usize,
    grid: &[C64],
) -> Result<f64> {
    let full = reconstruct_with_reference_zeros(spectrum, reference, reference_zeros, n)?;
    let half = reconstruct_with_reference_zeros(spectrum, reference, reference_zeros, n / 2)?;
    let a = full.eval_grid_with(Exec::default(), grid)?;
    let b = collect_indexed(Exec::default().map(grid, |&l| half.eval(l)))?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm() / x.norm().max(1e-300))
        .fold(0.0, f64::max))
}

/// Check the truncation: N ≥ [`MIN_TRUNCATION`] and the N vs N/2 change on
/// `grid` at most `max_change`.
pub fn check_truncation(
    spectrum: &SpectrumSet,
    reference: &CharFn,
    reference_zeros: &[f64],
    n: usize,
    grid: &[C64],
    max_change: f64,
) -> Result<f64> {
    if n < MIN_TRUNCATION {
        return Err(Error::InsufficientSpectra {
            problem: spectrum.tag.clone(),
            reason: format!("truncation {n} is below the minimum {MIN_TRUNCATION}"),
        });
    }
    let change = truncation_change(spectrum, reference, reference_zeros, n, grid)?;
    if !(change <= max_change) {
        return Err(Error::InsufficientSpectra {
            problem: spectrum.tag.clone(),
            reason: format!("N vs N/2 reconstructions differ by {change:.3e} (limit {max_change:.1e})"),
        });
    }
    Ok(change)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{assemble_char_fn, ProblemSpec};
    use crate::graph::MetricTree;
    use crate::potential::{Potential, PotentialSet};

    #[test]
    fn identical_spectra_reproduce_reference() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let cf = assemble_char_fn(&spec);
        let s = find_eigenvalues(&cf, (1.0, 4000.0), None).unwrap();
        let rec = reconstruct_char_fn(&s, &cf, 15).unwrap();
        for l in [2.0, 7.5, 30.0] {
            let z = C64::new(l, 0.0);
            assert_eq!(rec.eval(z).unwrap(), cf.eval(z).unwrap());
        }
    }

    #[test]
    fn reference_zero_is_removable() {
        let q1 = ProblemSpec::dirichlet(
            MetricTree::single_edge(1.0),
            PotentialSet(vec![Potential::constant(1.0)]),
        )
        .unwrap();
        let cf = assemble_char_fn(&q1);
        let r = assemble_char_fn(&q1.zero_potential());
        let s = find_eigenvalues(&cf, (1.0, 2000.0), None).unwrap();
        let rec = reconstruct_char_fn(&s, &r, 10).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let at = rec.eval(C64::new(pi2, 0.0)).unwrap();
        let near = rec.eval(C64::new(pi2 + 1e-6, 0.0)).unwrap();
        assert!((at - near).norm() < 1e-4 * near.norm());
        let exact = cf.eval(C64::new(pi2, 0.0)).unwrap();
        assert!((at - exact).norm() < 2e-2 * exact.norm());
    }

    #[test]
    fn short_spectrum_rejected() {
        let spec = ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap();
        let cf = assemble_char_fn(&spec);
        let s = find_eigenvalues(&cf, (1.0, 100.0), None).unwrap();
        assert!(matches!(
            reconstruct_char_fn(&s, &cf, 5),
            Err(Error::InsufficientSpectra { .. })
        ));
    }
}
