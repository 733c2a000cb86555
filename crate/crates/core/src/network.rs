//! Fully connected networks viewed as functions of an input and a parameter.
//!
//! Parameters always travel as a flat vector in the canonical layout: for each
//! layer `j = 1..=D`, the row-major weight matrix `W_j` (shape `m_j x m_{j-1}`)
//! followed by the bias `b_j`. The activation is applied to hidden layers only;
//! the output layer is affine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative; ReLU uses `σ'(0) = 0`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, Activation::Sigmoid)
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Architecture of a network: input dimension, hidden widths, output dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        hidden: Vec<usize>,
        activation: Activation,
    ) -> Result<Self> {
        let spec = NetworkSpec {
            input_dim,
            output_dim,
            hidden,
            activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Input(
                "input and output dimensions must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Input("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Number of affine layers `D`.
    pub fn depth(&self) -> usize {
        self.hidden.len() + 1
    }

    /// `[m_0, m_1, ..., m_D]` with `m_0 = s` and `m_D = t`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn param_dim(&self) -> usize {
        param_dim(self)
    }

    /// `(rows, cols, offset)` of every layer inside the flat vector.
    fn layout(&self) -> Vec<LayerLayout> {
        let widths = self.widths();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let l = LayerLayout {
                    rows: w[1],
                    cols: w[0],
                    offset,
                };
                offset += l.len();
                l
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct LayerLayout {
    rows: usize,
    cols: usize,
    offset: usize,
}

impl LayerLayout {
    fn len(&self) -> usize {
        self.rows * (self.cols + 1)
    }

    fn weights<'a>(&self, flat: &'a [f64]) -> &'a [f64] {
        &flat[self.offset..self.offset + self.rows * self.cols]
    }

    fn bias<'a>(&self, flat: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.rows * self.cols;
        &flat[start..start + self.rows]
    }
}

/// Dimension of the flat parameter vector, `Σ_j m_j (m_{j-1} + 1)`.
pub fn param_dim(spec: &NetworkSpec) -> usize {
    spec.widths().windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

/// Weights and biases of a network, stored in the canonical flat layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    flat: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkParams {
            flat: vec![0.0; param_dim(spec)],
        }
    }

    pub fn from_flat(spec: &NetworkSpec, flat: Vec<f64>) -> Result<Self> {
        let expected = param_dim(spec);
        if flat.len() != expected {
            return Err(Error::Shape(format!(
                "flat parameter vector has length {}, architecture needs {expected}",
                flat.len()
            )));
        }
        Ok(NetworkParams { flat })
    }

    /// Builds parameters from `(W_j row-major, b_j)` pairs.
    pub fn from_layers(spec: &NetworkSpec, layers: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let layout = spec.layout();
        if layers.len() != layout.len() {
            return Err(Error::Shape(format!(
                "got {} layers, architecture has depth {}",
                layers.len(),
                layout.len()
            )));
        }
        let mut flat = Vec::with_capacity(param_dim(spec));
        for (j, ((w, b), l)) in layers.iter().zip(&layout).enumerate() {
            if w.len() != l.rows * l.cols || b.len() != l.rows {
                return Err(Error::Shape(format!(
                    "layer {}: expected W {}x{} and b of length {}",
                    j + 1,
                    l.rows,
                    l.cols,
                    l.rows
                )));
            }
            flat.extend_from_slice(w);
            flat.extend_from_slice(b);
        }
        Ok(NetworkParams { flat })
    }

    /// `(W_j row-major, b_j)` pairs, layer by layer.
    pub fn layers(&self, spec: &NetworkSpec) -> Vec<(Vec<f64>, Vec<f64>)> {
        spec.layout()
            .iter()
            .map(|l| (l.weights(&self.flat).to_vec(), l.bias(&self.flat).to_vec()))
            .collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }
}

fn check_theta(spec: &NetworkSpec, theta: &[f64]) -> Result<()> {
    let expected = param_dim(spec);
    if theta.len() != expected {
        return Err(Error::Shape(format!(
            "parameter vector has length {}, architecture needs {expected}",
            theta.len()
        )));
    }
    Ok(())
}

fn check_input(spec: &NetworkSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.input_dim {
        return Err(Error::Shape(format!(
            "input has length {}, network expects {}",
            x.len(),
            spec.input_dim
        )));
    }
    Ok(())
}

#[inline]
fn affine(l: &LayerLayout, theta: &[f64], input: &[f64], out: &mut Vec<f64>) {
    let w = l.weights(theta);
    let b = l.bias(theta);
    out.clear();
    out.extend((0..l.rows).map(|r| {
        let row = &w[r * l.cols..(r + 1) * l.cols];
        row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>() + b[r]
    }));
}

/// Evaluates `N(x, θ)` with θ given in the flat layout.
pub fn forward_flat(spec: &NetworkSpec, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_theta(spec, theta)?;
    check_input(spec, x)?;
    let layout = spec.layout();
    let mut input = x.to_vec();
    let mut out = Vec::new();
    for (j, l) in layout.iter().enumerate() {
        affine(l, theta, &input, &mut out);
        if j + 1 < layout.len() {
            input.clear();
            input.extend(out.iter().map(|&z| spec.activation.apply(z)));
        }
    }
    Ok(out)
}

pub fn forward(spec: &NetworkSpec, params: &NetworkParams, x: &[f64]) -> Result<Vec<f64>> {
    forward_flat(spec, params.as_flat(), x)
}

/// Block construction realizing `Σ_l c_l N(·, θ_l)` as one network whose hidden
/// widths are `n * m_j`.
///
/// For a network without hidden layers the combination is again affine, so the
/// weights and biases are summed and the architecture is unchanged.
pub fn merge(
    spec: &NetworkSpec,
    coefficients: &[f64],
    params: &[NetworkParams],
) -> Result<(NetworkSpec, NetworkParams)> {
    if params.is_empty() {
        return Err(Error::Input("merge needs at least one network".into()));
    }
    if coefficients.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} coefficients for {} networks",
            coefficients.len(),
            params.len()
        )));
    }
    for p in params {
        check_theta(spec, p.as_flat())?;
    }
    let n = params.len();
    let layout = spec.layout();
    let depth = layout.len();

    if depth == 1 {
        let l = layout[0];
        let mut flat = vec![0.0; l.len()];
        for (c, p) in coefficients.iter().zip(params) {
            for (acc, v) in flat.iter_mut().zip(p.as_flat()) {
                *acc += c * v;
            }
        }
        return Ok((spec.clone(), NetworkParams { flat }));
    }

    let merged_spec = NetworkSpec {
        input_dim: spec.input_dim,
        output_dim: spec.output_dim,
        hidden: spec.hidden.iter().map(|&w| w * n).collect(),
        activation: spec.activation,
    };
    let mut flat = Vec::with_capacity(param_dim(&merged_spec));

    for (j, l) in layout.iter().enumerate() {
        let first = j == 0;
        let last = j + 1 == depth;
        if first {
            // stacked W_1, stacked b_1
            for p in params {
                flat.extend_from_slice(l.weights(p.as_flat()));
            }
            for p in params {
                flat.extend_from_slice(l.bias(p.as_flat()));
            }
        } else if last {
            // [c_1 W_D^1 ... c_n W_D^n], Σ c_l b_D^l
            for r in 0..l.rows {
                for (c, p) in coefficients.iter().zip(params) {
                    let w = l.weights(p.as_flat());
                    flat.extend(w[r * l.cols..(r + 1) * l.cols].iter().map(|v| c * v));
                }
            }
            for r in 0..l.rows {
                flat.push(
                    coefficients
                        .iter()
                        .zip(params)
                        .map(|(c, p)| c * l.bias(p.as_flat())[r])
                        .sum(),
                );
            }
        } else {
            // block diagonal
            let cols = n * l.cols;
            for (block, p) in params.iter().enumerate() {
                let w = l.weights(p.as_flat());
                for r in 0..l.rows {
                    let mut row = vec![0.0; cols];
                    row[block * l.cols..(block + 1) * l.cols]
                        .copy_from_slice(&w[r * l.cols..(r + 1) * l.cols]);
                    flat.extend(row);
                }
            }
            for p in params {
                flat.extend_from_slice(l.bias(p.as_flat()));
            }
        }
    }
    debug_assert_eq!(flat.len(), param_dim(&merged_spec));
    Ok((merged_spec, NetworkParams { flat }))
}

/// Gradient of `<cotangent, N(x, θ)>` with respect to θ, in the flat layout.
pub fn vjp_flat(
    spec: &NetworkSpec,
    theta: &[f64],
    x: &[f64],
    cotangent: &[f64],
) -> Result<Vec<f64>> {
    check_theta(spec, theta)?;
    check_input(spec, x)?;
    if cotangent.len() != spec.output_dim {
        return Err(Error::Shape(format!(
            "cotangent has length {}, network has {} outputs",
            cotangent.len(),
            spec.output_dim
        )));
    }
    let layout = spec.layout();
    let depth = layout.len();

    // inputs[j] feeds layer j; pre[j] is its affine output
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(depth);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(depth);
    inputs.push(x.to_vec());
    for (j, l) in layout.iter().enumerate() {
        let mut z = Vec::new();
        affine(l, theta, &inputs[j], &mut z);
        if j + 1 < depth {
            inputs.push(z.iter().map(|&v| spec.activation.apply(v)).collect());
        }
        pre.push(z);
    }

    let mut grad = vec![0.0; theta.len()];
    let mut delta = cotangent.to_vec();
    for j in (0..depth).rev() {
        let l = layout[j];
        let input = &inputs[j];
        let w_off = l.offset;
        let b_off = l.offset + l.rows * l.cols;
        for r in 0..l.rows {
            let d = delta[r];
            let row = &mut grad[w_off + r * l.cols..w_off + (r + 1) * l.cols];
            for (g, v) in row.iter_mut().zip(input) {
                *g = d * v;
            }
            grad[b_off + r] = d;
        }
        if j > 0 {
            let w = l.weights(theta);
            let z_prev = &pre[j - 1];
            delta = (0..l.cols)
                .map(|c| {
                    let back: f64 = (0..l.rows).map(|r| w[r * l.cols + c] * delta[r]).sum();
                    back * spec.activation.derivative(z_prev[c])
                })
                .collect();
        }
    }
    Ok(grad)
}

/// `∂N_k(x, θ)/∂θ` in the flat layout.
pub fn grad_params(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    if k >= spec.output_dim {
        return Err(Error::Shape(format!(
            "output index {k} out of range for {} outputs",
            spec.output_dim
        )));
    }
    let mut e = vec![0.0; spec.output_dim];
    e[k] = 1.0;
    vjp_flat(spec, params.as_flat(), x, &e)
}
