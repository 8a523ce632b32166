//! Edge potentials q_j on [0, T_j].
//!
//! Closed forms (zero, constant, polynomial) are evaluated directly. Grid
//! potentials are uniform samples over the whole edge, linearly
//! interpolated. `Pwc` is piecewise constant on uniform cells; it is the
//! basis used by the inverse solvers and is propagated exactly.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Potential {
    #[default]
    Zero,
    Const {
        value: f64,
    },
    /// q(x) = Σ c_k x^k.
    Poly {
        coefficients: Vec<f64>,
    },
    /// Uniform samples at x_i = i T / (n - 1).
    Grid {
        samples: Vec<f64>,
        #[serde(default = "linear")]
        order: u8,
    },
    /// Constant `values[i]` on the i-th of n equal cells.
    Pwc {
        values: Vec<f64>,
    },
}

fn linear() -> u8 {
    1
}

impl Potential {
    pub fn constant(value: f64) -> Self {
        Potential::Const { value }
    }

    pub fn grid(samples: Vec<f64>) -> Self {
        Potential::Grid { samples, order: 1 }
    }

    pub fn pwc(values: Vec<f64>) -> Self {
        Potential::Pwc { values }
    }

    /// Sample a function on a uniform grid of `n` points over [0, length].
    pub fn sampled(length: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..n).map(|i| f(length * i as f64 / (n - 1) as f64)).collect();
        Potential::grid(samples)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Potential::Zero => Ok(()),
            Potential::Const { value } if value.is_finite() => Ok(()),
            Potential::Poly { coefficients } if finite(coefficients) => Ok(()),
            Potential::Grid { samples, order } => {
                if *order != 1 {
                    Err(Error::Invalid(format!(
                        "grid interpolation order {order} unsupported (only 1)"
                    )))
                } else if samples.len() < 2 {
                    Err(Error::Invalid("grid potential needs at least 2 samples".into()))
                } else if !finite(samples) {
                    Err(Error::Invalid("non-finite grid sample".into()))
                } else {
                    Ok(())
                }
            }
            Potential::Pwc { values } if !values.is_empty() && finite(values) => Ok(()),
            _ => Err(Error::Invalid(format!("malformed potential {self:?}"))),
        }
    }

    /// Constant value when the potential is constant (including zero).
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Potential::Zero => Some(0.0),
            Potential::Const { value } => Some(*value),
            Potential::Poly { coefficients } if coefficients.iter().skip(1).all(|c| *c == 0.0) => {
                Some(coefficients.first().copied().unwrap_or(0.0))
            }
            Potential::Pwc { values } if values.iter().all(|v| *v == values[0]) => Some(values[0]),
            _ => None,
        }
    }

    pub fn value(&self, x: f64, length: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Const { value } => *value,
            Potential::Poly { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Potential::Grid { samples, .. } => {
                let n = samples.len() - 1;
                let t = (x / length * n as f64).clamp(0.0, n as f64);
                let i = (t.floor() as usize).min(n - 1);
                let f = t - i as f64;
                samples[i] * (1.0 - f) + samples[i + 1] * f
            }
            Potential::Pwc { values } => {
                let n = values.len();
                let i = ((x / length * n as f64).floor() as usize).min(n - 1);
                values[i]
            }
        }
    }

    /// Points in (0, length) where the representation is not smooth.
    pub fn breakpoints(&self, length: f64) -> Vec<f64> {
        let interior = |cells: usize| (1..cells).map(|i| length * i as f64 / cells as f64).collect();
        match self {
            Potential::Grid { samples, .. } => interior(samples.len() - 1),
            Potential::Pwc { values } => interior(values.len()),
            _ => Vec::new(),
        }
    }

    /// The potential seen from the other end: x ↦ q(T − x).
    pub fn reflect(&self, length: f64) -> Potential {
        match self {
            Potential::Zero | Potential::Const { .. } => self.clone(),
            Potential::Poly { coefficients } => {
                // p(T - x) expanded by Horner on the shifted, negated variable.
                let n = coefficients.len();
                let mut out = vec![0.0; n];
                for (k, &c) in coefficients.iter().enumerate() {
                    // c (T - x)^k = c Σ_j binom(k, j) T^{k-j} (-x)^j
                    let mut binom = 1.0;
                    for j in 0..=k {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        out[j] += c * binom * length.powi((k - j) as i32) * sign;
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                }
                Potential::Poly { coefficients: out }
            }
            Potential::Grid { samples, order } => Potential::Grid {
                samples: samples.iter().rev().copied().collect(),
                order: *order,
            },
            Potential::Pwc { values } => Potential::Pwc {
                values: values.iter().rev().copied().collect(),
            },
        }
    }

    /// Restriction to [a, b] ⊂ [0, length], reparametrized to [0, b − a].
    /// Grid and piecewise-constant potentials must be cut at a node.
    pub fn restrict(&self, a: f64, b: f64, length: f64) -> Result<Potential> {
        if !(0.0 <= a && a < b && b <= length) {
            return Err(Error::Invalid(format!("bad restriction [{a}, {b}] of [0, {length}]")));
        }
        let node = |cells: usize, x: f64| -> Result<usize> {
            let t = x / length * cells as f64;
            let i = t.round();
            if (t - i).abs() > 1e-9 {
                Err(Error::Invalid(format!("cut point {x} is not a grid node")))
            } else {
                Ok(i as usize)
            }
        };
        Ok(match self {
            Potential::Zero | Potential::Const { .. } => self.clone(),
            Potential::Poly { coefficients } => {
                // p(x + a)
                let n = coefficients.len();
                let mut out = vec![0.0; n];
                for (k, &c) in coefficients.iter().enumerate() {
                    let mut binom = 1.0;
                    for j in 0..=k {
                        out[j] += c * binom * a.powi((k - j) as i32);
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                }
                Potential::Poly { coefficients: out }
            }
            Potential::Grid { samples, order } => {
                let cells = samples.len() - 1;
                let (i, j) = (node(cells, a)?, node(cells, b)?);
                Potential::Grid {
                    samples: samples[i..=j].to_vec(),
                    order: *order,
                }
            }
            Potential::Pwc { values } => {
                let cells = values.len();
                let (i, j) = (node(cells, a)?, node(cells, b)?);
                Potential::Pwc {
                    values: values[i..j].to_vec(),
                }
            }
        })
    }

    /// Max |q| over the representation (sampled for polynomials).
    pub fn sup_norm(&self, length: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Const { value } => value.abs(),
            Potential::Grid { samples: v, .. } | Potential::Pwc { values: v } => {
                v.iter().fold(0.0, |m, x| m.max(x.abs()))
            }
            Potential::Poly { .. } => (0..=256)
                .map(|i| self.value(length * i as f64 / 256.0, length).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Potentials indexed by edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct PotentialSet(pub Vec<Potential>);

impl PotentialSet {
    pub fn zero(edges: usize) -> Self {
        PotentialSet(vec![Potential::Zero; edges])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, edge: usize) -> &Potential {
        &self.0[edge]
    }

    pub fn set(&mut self, edge: usize, q: Potential) {
        self.0[edge] = q;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Potential> {
        self.0.iter()
    }

    pub fn all_zero(&self) -> bool {
        self.0.iter().all(|q| q.as_constant() == Some(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_interpolates_linearly() {
        let q = Potential::grid(vec![0.0, 2.0, 1.0]);
        assert_eq!(q.value(0.5, 2.0), 1.0);
        assert_eq!(q.value(1.5, 2.0), 1.5);
        assert_eq!(q.value(2.0, 2.0), 1.0);
        assert_eq!(q.breakpoints(2.0), vec![1.0]);
    }

    #[test]
    fn reflection_of_polynomial() {
        let q = Potential::Poly {
            coefficients: vec![1.0, -2.0, 0.5, 3.0],
        };
        let r = q.reflect(1.7);
        for &x in &[0.0, 0.3, 1.1, 1.7] {
            assert!((r.value(x, 1.7) - q.value(1.7 - x, 1.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_matches_values() {
        let q = Potential::Poly {
            coefficients: vec![0.3, 1.0, -0.7],
        };
        let r = q.restrict(0.4, 1.0, 1.0).unwrap();
        for &x in &[0.0, 0.25, 0.6] {
            assert!((r.value(x, 0.6) - q.value(x + 0.4, 1.0)).abs() < 1e-14);
        }
        let g = Potential::grid(vec![0.0, 1.0, 4.0, 9.0, 16.0]);
        let gr = g.restrict(0.5, 1.0, 1.0).unwrap();
        assert_eq!(gr, Potential::grid(vec![4.0, 9.0, 16.0]));
        assert!(g.restrict(0.3, 1.0, 1.0).is_err());
    }

    #[test]
    fn serde_schema() {
        let q: Potential = serde_json::from_str(r#"{"kind":"grid","samples":[1,2]}"#).unwrap();
        assert_eq!(q, Potential::grid(vec![1.0, 2.0]));
        let z: Potential = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert_eq!(z, Potential::Zero);
        let c: Potential = serde_json::from_str(r#"{"kind":"const","value":-0.5}"#).unwrap();
        assert_eq!(c.as_constant(), Some(-0.5));
    }

    #[test]
    fn validation() {
        assert!(Potential::grid(vec![1.0]).validate().is_err());
        assert!(Potential::Grid {
            samples: vec![1.0, 2.0],
            order: 3
        }
        .validate()
        .is_err());
        assert!(Potential::constant(f64::NAN).validate().is_err());
        assert!(Potential::pwc(vec![1.0, 2.0]).validate().is_ok());
    }
}
