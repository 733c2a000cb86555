//! Gradient descent on the expansion `Σ_ℓ β_ℓ N(·, θ_ℓ)`.
//!
//! The loss is `Σ_j ‖Σ_ℓ β_ℓ N(x_j, θ_ℓ) - y_j‖²`. With
//! [`TrainConfig::weight`] set, each term becomes `β_ℓ K(·, θ_ℓ)` instead, so
//! predictions can be compared with solver output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::BoxSpec;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{rho, WeightFn};
use crate::network::{forward_flat, param_dim, vjp_flat, NetworkSpec};
use crate::par::{map_indexed, Exec};

/// Halvings tried before a step is declared impossible.
const MAX_HALVINGS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Expansion length `L`; `None` means `t·m`.
    pub atoms: Option<usize>,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Box for the initial θ; `None` means `[-1, 1]` in every coordinate.
    pub init_box: Option<BoxSpec>,
    /// Train `β_ℓ K(·, θ_ℓ)` instead of `β_ℓ N(·, θ_ℓ)`.
    pub weight: Option<WeightFn>,
    /// Step for the closing gradient check; skipped when `None` or for ReLU.
    pub grad_check_step: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            atoms: None,
            learning_rate: 0.1,
            max_iters: 1000,
            seed: 0,
            init_box: None,
            weight: None,
            grad_check_step: Some(1e-5),
        }
    }
}

impl TrainConfig {
    fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if self.atoms == Some(0) {
            return Err(Error::Config("atom count must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if let Some(b) = &self.init_box {
            if b.dim() != spec.param_dim() {
                return Err(Error::Config(format!(
                    "initialization box has dimension {}, parameters have {}",
                    b.dim(),
                    spec.param_dim()
                )));
            }
        }
        if let Some(w) = &self.weight {
            w.validate()?;
        }
        if let Some(h) = self.grad_check_step {
            check_step(h)?;
        }
        Ok(())
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Config(format!(
            "finite-difference step {h} outside [1e-7, 1e-3]"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub spec: NetworkSpec,
    pub weight: Option<WeightFn>,
    pub beta: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

impl Expansion {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.spec.output_dim];
        for (b, th) in self.beta.iter().zip(&self.thetas) {
            let n = forward_flat(&self.spec, th, x)?;
            let scale = match &self.weight {
                Some(w) => b * rho(w, th)?,
                None => *b,
            };
            for (o, v) in out.iter_mut().zip(n) {
                *o += scale * v;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Loss at the start and after every accepted step; non-increasing.
    pub losses: Vec<f64>,
    pub beta: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub grad_check_max_rel_err: Option<f64>,
    /// ReLU was used, with `σ'(0) = 0`.
    pub nonsmooth: bool,
    pub halvings: usize,
    /// No halved step decreased the loss, or the loss reached zero.
    pub stalled: bool,
}

/// Loss and its gradient with respect to `[β, θ_1, ..., θ_L]`.
struct Objective<'a> {
    spec: &'a NetworkSpec,
    data: &'a Dataset,
    weight: Option<WeightFn>,
    dim: usize,
    atoms: usize,
    exec: Exec,
}

impl<'a> Objective<'a> {
    fn split<'p>(&self, params: &'p [f64]) -> (&'p [f64], impl Iterator<Item = &'p [f64]>) {
        let (beta, rest) = params.split_at(self.atoms);
        (beta, rest.chunks(self.dim))
    }

    /// Per-atom `(N(x, θ), scale)` so that the atom contributes `β·scale·N`.
    fn atom_terms(&self, params: &[f64], x: &[f64]) -> Result<Vec<(Vec<f64>, f64)>> {
        let (_, thetas) = self.split(params);
        thetas
            .map(|th| {
                let n = forward_flat(self.spec, th, x)?;
                let s = match &self.weight {
                    Some(w) => rho(w, th)?,
                    None => 1.0,
                };
                Ok((n, s))
            })
            .collect()
    }

    fn residual(&self, beta: &[f64], terms: &[(Vec<f64>, f64)], y: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
        for (b, (n, s)) in beta.iter().zip(terms) {
            for (ri, ni) in r.iter_mut().zip(n) {
                *ri += b * s * ni;
            }
        }
        r
    }

    fn loss(&self, params: &[f64]) -> Result<f64> {
        let beta = &params[..self.atoms];
        let parts = map_indexed(self.exec, self.data.len(), |j| -> Result<f64> {
            let terms = self.atom_terms(params, &self.data.inputs()[j])?;
            let r = self.residual(beta, &terms, &self.data.targets()[j]);
            Ok(r.iter().map(|v| v * v).sum())
        });
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        Ok(total)
    }

    fn gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let beta = &params[..self.atoms];
        let parts = map_indexed(self.exec, self.data.len(), |j| -> Result<(f64, Vec<f64>)> {
            let x = &self.data.inputs()[j];
            let terms = self.atom_terms(params, x)?;
            let r = self.residual(beta, &terms, &self.data.targets()[j]);
            let mut g = vec![0.0; params.len()];
            let (_, thetas) = self.split(params);
            for (l, th) in thetas.enumerate() {
                let (n, s) = &terms[l];
                let nr: f64 = n.iter().zip(&r).map(|(a, b)| a * b).sum();
                g[l] = 2.0 * s * nr;
                if beta[l] == 0.0 {
                    continue;
                }
                let v = vjp_flat(self.spec, th, x, &r)?;
                let off = self.atoms + l * self.dim;
                let c = 2.0 * beta[l] * s;
                for (gi, vi) in g[off..off + self.dim].iter_mut().zip(&v) {
                    *gi += c * vi;
                }
                if let Some(w) = &self.weight {
                    // ∂ρ/∂θ = -2αρθ
                    let c = -4.0 * beta[l] * w.alpha * s * nr;
                    for (gi, ti) in g[off..off + self.dim].iter_mut().zip(th) {
                        *gi += c * ti;
                    }
                }
            }
            Ok((r.iter().map(|v| v * v).sum(), g))
        });
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for p in parts {
            let (l, g) = p?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((loss, grad))
    }
}

fn pack(beta: &[f64], thetas: &[Vec<f64>]) -> Vec<f64> {
    let mut p = beta.to_vec();
    for th in thetas {
        p.extend_from_slice(th);
    }
    p
}

fn unpack(params: &[f64], atoms: usize, dim: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (beta, rest) = params.split_at(atoms);
    (
        beta.to_vec(),
        rest.chunks(dim).map(<[f64]>::to_vec).collect(),
    )
}

fn objective<'a>(
    spec: &'a NetworkSpec,
    data: &'a Dataset,
    weight: Option<WeightFn>,
    beta: &[f64],
    thetas: &[Vec<f64>],
    exec: Exec,
) -> Result<Objective<'a>> {
    spec.validate()?;
    if data.input_dim() != spec.input_dim || data.output_dim() != spec.output_dim {
        return Err(Error::Shape(
            "dataset dimensions do not match the architecture".into(),
        ));
    }
    let dim = param_dim(spec);
    if beta.len() != thetas.len() {
        return Err(Error::Shape(format!(
            "{} coefficients for {} parameter vectors",
            beta.len(),
            thetas.len()
        )));
    }
    if thetas.iter().any(|t| t.len() != dim) {
        return Err(Error::Shape(format!(
            "every parameter vector needs length {dim}"
        )));
    }
    Ok(Objective {
        spec,
        data,
        weight,
        dim,
        atoms: beta.len(),
        exec,
    })
}

pub fn train_expansion(
    spec: &NetworkSpec,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Expansion, TrainTrace)> {
    train_expansion_with(spec, data, cfg, Exec::default())
}

pub fn train_expansion_with(
    spec: &NetworkSpec,
    data: &Dataset,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<(Expansion, TrainTrace)> {
    spec.validate()?;
    cfg.validate(spec)?;
    let dim = param_dim(spec);
    let atoms = cfg.atoms.unwrap_or(spec.output_dim * data.len());
    let bounds = match &cfg.init_box {
        Some(b) => b.clone(),
        None => BoxSpec::symmetric(dim, 1.0)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let thetas: Vec<Vec<f64>> = (0..atoms)
        .map(|_| {
            (0..dim)
                .map(|i| {
                    let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
                    if lo == hi {
                        lo
                    } else {
                        rng.random_range(lo..hi)
                    }
                })
                .collect()
        })
        .collect();
    let beta = vec![0.0; atoms];
    let obj = objective(spec, data, cfg.weight, &beta, &thetas, exec)?;

    let mut params = pack(&beta, &thetas);
    let mut losses = Vec::with_capacity(cfg.max_iters + 1);
    let mut halvings = 0;
    let mut stalled = false;
    let (mut loss, mut grad) = obj.gradient(&params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("initial training loss".into()));
    }
    losses.push(loss);

    for _ in 0..cfg.max_iters {
        if loss == 0.0 || grad.iter().all(|g| *g == 0.0) {
            stalled = true;
            break;
        }
        let mut step = cfg.learning_rate;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect();
            let l = obj.loss(&trial)?;
            if l.is_finite() && l <= loss {
                accepted = Some((trial, l));
                break;
            }
            step *= 0.5;
            halvings += 1;
        }
        let Some((trial, l)) = accepted else {
            stalled = true;
            break;
        };
        if !l.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss after {} steps",
                losses.len()
            )));
        }
        params = trial;
        let (l2, g2) = obj.gradient(&params)?;
        loss = l2;
        grad = g2;
        losses.push(loss);
    }

    let (beta, thetas) = unpack(&params, atoms, dim);
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trained parameters".into()));
    }
    let nonsmooth = !spec.activation.is_smooth();
    let grad_check_max_rel_err = match cfg.grad_check_step {
        Some(h) if !nonsmooth => Some(check_objective(&obj, &params, None, h)?),
        _ => None,
    };
    let expansion = Expansion {
        spec: spec.clone(),
        weight: cfg.weight,
        beta: beta.clone(),
        thetas: thetas.clone(),
    };
    Ok((
        expansion,
        TrainTrace {
            losses,
            beta,
            thetas,
            grad_check_max_rel_err,
            nonsmooth,
            halvings,
            stalled,
        },
    ))
}

/// Loss of the unweighted expansion.
pub fn expansion_loss(
    spec: &NetworkSpec,
    data: &Dataset,
    beta: &[f64],
    thetas: &[Vec<f64>],
) -> Result<f64> {
    let obj = objective(spec, data, None, beta, thetas, Exec::default())?;
    obj.loss(&pack(beta, thetas))
}

/// Analytic gradient of the unweighted loss, `[∂β, ∂θ_1, ..., ∂θ_L]`.
pub fn loss_gradient(
    spec: &NetworkSpec,
    data: &Dataset,
    beta: &[f64],
    thetas: &[Vec<f64>],
) -> Result<Vec<f64>> {
    loss_gradient_with(spec, data, beta, thetas, Exec::default())
}

pub fn loss_gradient_with(
    spec: &NetworkSpec,
    data: &Dataset,
    beta: &[f64],
    thetas: &[Vec<f64>],
    exec: Exec,
) -> Result<Vec<f64>> {
    let obj = objective(spec, data, None, beta, thetas, exec)?;
    Ok(obj.gradient(&pack(beta, thetas))?.1)
}

/// Largest `|a - f| / max(1, |a|, |f|)` between the analytic gradient and
/// central differences with step `h`.
pub fn grad_check(
    spec: &NetworkSpec,
    data: &Dataset,
    beta: &[f64],
    thetas: &[Vec<f64>],
    h: f64,
) -> Result<f64> {
    check_step(h)?;
    let obj = objective(spec, data, None, beta, thetas, Exec::default())?;
    check_objective(&obj, &pack(beta, thetas), None, h)
}

/// As [`grad_check`], comparing a caller-supplied gradient instead.
pub fn grad_check_against(
    spec: &NetworkSpec,
    data: &Dataset,
    beta: &[f64],
    thetas: &[Vec<f64>],
    analytic: &[f64],
    h: f64,
) -> Result<f64> {
    check_step(h)?;
    let obj = objective(spec, data, None, beta, thetas, Exec::default())?;
    let params = pack(beta, thetas);
    if analytic.len() != params.len() {
        return Err(Error::Shape(format!(
            "gradient has length {}, expected {}",
            analytic.len(),
            params.len()
        )));
    }
    check_objective(&obj, &params, Some(analytic), h)
}

fn check_objective(
    obj: &Objective,
    params: &[f64],
    analytic: Option<&[f64]>,
    h: f64,
) -> Result<f64> {
    let own;
    let analytic = match analytic {
        Some(a) => a,
        None => {
            own = obj.gradient(params)?.1;
            &own
        }
    };
    let mut worst = 0.0f64;
    let mut p = params.to_vec();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = obj.loss(&p)?;
        p[i] = orig - h;
        let down = obj.loss(&p)?;
        p[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let a = analytic[i];
        worst = worst.max((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()));
    }
    Ok(worst)
}
