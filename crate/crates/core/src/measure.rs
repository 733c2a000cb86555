//! Finite signed combinations of Dirac masses on the parameter space.
//!
//! A measure `μ = Σ c_ℓ δ_{θ_ℓ}` represents the function
//! `f_μ(x) = Σ c_ℓ K(x, θ_ℓ)`; its total variation is `Σ |c_ℓ|` as long as the
//! atoms are distinct, which [`prune`] enforces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_eval, WeightFn};
use crate::network::{param_dim, NetworkSpec};

pub const DEFAULT_COEFF_TOL: f64 = 1e-8;
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub theta: Vec<f64>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    spec: NetworkSpec,
    weight: WeightFn,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn new(spec: NetworkSpec, weight: WeightFn, atoms: Vec<Atom>) -> Result<Self> {
        let dim = param_dim(&spec);
        for (i, a) in atoms.iter().enumerate() {
            if a.theta.len() != dim {
                return Err(Error::Shape(format!(
                    "atom {i} has {} parameters, architecture needs {dim}",
                    a.theta.len()
                )));
            }
            if !a.coeff.is_finite() || a.theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("atom {i}")));
            }
        }
        Ok(DiscreteMeasure {
            spec,
            weight,
            atoms,
        })
    }

    pub fn empty(spec: NetworkSpec, weight: WeightFn) -> Self {
        DiscreteMeasure {
            spec,
            weight,
            atoms: Vec::new(),
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weight(&self) -> &WeightFn {
        &self.weight
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            spec: self.spec.clone(),
            weight: self.weight,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    theta: a.theta.clone(),
                    coeff: a.coeff * factor,
                })
                .collect(),
        }
    }

    pub fn tv_norm(&self) -> f64 {
        tv_norm(self)
    }
}

pub fn tv_norm(mu: &DiscreteMeasure) -> f64 {
    mu.atoms.iter().map(|a| a.coeff.abs()).sum()
}

/// `f_μ(x) = Σ_ℓ c_ℓ K(x, θ_ℓ)`.
pub fn f_mu_eval(mu: &DiscreteMeasure, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != mu.spec.input_dim {
        return Err(Error::Shape(format!(
            "input has length {}, measure lives on inputs of length {}",
            x.len(),
            mu.spec.input_dim
        )));
    }
    let mut out = vec![0.0; mu.spec.output_dim];
    for a in &mu.atoms {
        let k = kernel_eval(&mu.spec, &mu.weight, x, &a.theta)?;
        for (o, v) in out.iter_mut().zip(k) {
            *o += a.coeff * v;
        }
    }
    Ok(out)
}

/// Merges atoms within `merge_tol` of each other in the sup norm (summing
/// coefficients into the first one seen), then drops atoms with
/// `|c| <= coeff_tol`. Atom order follows first appearance.
pub fn prune(mu: &DiscreteMeasure, coeff_tol: f64, merge_tol: f64) -> DiscreteMeasure {
    let mut kept: Vec<Atom> = Vec::with_capacity(mu.atoms.len());
    for a in &mu.atoms {
        let close = kept.iter_mut().find(|k| {
            k.theta
                .iter()
                .zip(&a.theta)
                .all(|(u, v)| (u - v).abs() <= merge_tol)
        });
        match close {
            Some(k) => k.coeff += a.coeff,
            None => kept.push(a.clone()),
        }
    }
    kept.retain(|a| a.coeff.abs() > coeff_tol);
    DiscreteMeasure {
        spec: mu.spec.clone(),
        weight: mu.weight,
        atoms: kept,
    }
}
