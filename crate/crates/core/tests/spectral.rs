//! Ratio-form reconstruction on a unit edge with q ≡ 1, where the spectrum
//! is (nπ)² + 1 and Δ(λ) = sin √(λ−1) / √(λ−1) in closed form.

use std::f64::consts::PI;

use treespec::spectral::{check_truncation, MIN_TRUNCATION};
use treespec::{assemble_char_fn, reconstruct_char_fn, Error, MetricTree, PotentialSet, ProblemSpec, SpectrumSet, C64};

fn exact(lambda: C64) -> C64 {
    let z = (lambda - 1.0).sqrt();
    if z.norm() < 1e-8 {
        return C64::new(1.0, 0.0);
    }
    z.sin() / z
}

fn spectrum(n: usize) -> SpectrumSet {
    let values: Vec<(f64, usize)> = (1..=n).map(|k| ((k as f64 * PI).powi(2) + 1.0, 1)).collect();
    SpectrumSet::from_values("L0", (0.0, (n as f64 * PI + 1.0).powi(2)), &values)
}

fn reference() -> treespec::CharFn {
    assemble_char_fn(&ProblemSpec::dirichlet(MetricTree::single_edge(1.0), PotentialSet::zero(1)).unwrap())
}

fn grid() -> Vec<C64> {
    (0..25)
        .map(|i| C64::new((1.0 + 0.16 * i as f64).powi(2), 0.0))
        .collect()
}

#[test]
fn error_shrinks_as_truncation_doubles() {
    let reference = reference();
    let mut last = f64::INFINITY;
    for n in [8, 16, 32, 64] {
        let cf = reconstruct_char_fn(&spectrum(n), &reference, n).unwrap();
        let err = grid()
            .iter()
            .map(|&l| (cf.eval(l).unwrap() - exact(l)).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1.1 * last, "N={n}: {err:e} after {last:e}");
        last = err;
    }
    assert!(last < 5e-3, "{last:e}");
}

#[test]
fn real_spectrum_gives_real_values() {
    let cf = reconstruct_char_fn(&spectrum(20), &reference(), 20).unwrap();
    for l in grid() {
        let v = cf.eval(l).unwrap();
        assert!(v.im.abs() <= 1e-14 * v.norm().max(1.0), "{v}");
    }
}

#[test]
fn truncation_check_accepts_and_rejects() {
    let reference = reference();
    let zeros: Vec<f64> = (1..=40).map(|k| (k as f64 * PI).powi(2)).collect();
    let change = check_truncation(&spectrum(40), &reference, &zeros, 40, &grid(), 5e-2).unwrap();
    assert!(change > 0.0 && change <= 5e-2);
    let short = check_truncation(&spectrum(40), &reference, &zeros, MIN_TRUNCATION - 1, &grid(), 5e-2);
    assert!(matches!(short, Err(Error::InsufficientSpectra { .. })));
    let strict = check_truncation(&spectrum(40), &reference, &zeros, 40, &grid(), 1e-9);
    assert!(matches!(strict, Err(Error::InsufficientSpectra { .. })));
}
