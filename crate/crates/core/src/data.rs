//! Training pairs `(x_j, y_j)` and the target matrix `Y`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Dataset {
    /// Rejects ragged rows, non-finite values and repeated inputs.
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let s = inputs[0].len();
        let t = targets[0].len();
        if s == 0 || t == 0 {
            return Err(Error::Shape("inputs and targets must be non-empty".into()));
        }
        for (j, (x, y)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != s || y.len() != t {
                return Err(Error::Shape(format!("row {j} has inconsistent length")));
            }
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("row {j}")));
            }
        }
        for a in 0..inputs.len() {
            for b in a + 1..inputs.len() {
                if inputs[a] == inputs[b] {
                    return Err(Error::Input(format!(
                        "inputs {a} and {b} coincide; data points must be distinct"
                    )));
                }
            }
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn target_matrix(&self) -> TargetMatrix {
        let (t, m) = (self.output_dim(), self.len());
        let mut values = vec![0.0; t * m];
        for (j, y) in self.targets.iter().enumerate() {
            for (k, &v) in y.iter().enumerate() {
                values[k * m + j] = v;
            }
        }
        TargetMatrix {
            outputs: t,
            points: m,
            values,
        }
    }
}

/// `Y ∈ R^{t×m}` stored as `vec(Y)` with entry `(k, j)` at `k·m + j`,
/// the same order as the rows of a feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetMatrix {
    outputs: usize,
    points: usize,
    values: Vec<f64>,
}

impl TargetMatrix {
    pub fn new(outputs: usize, points: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != outputs * points {
            return Err(Error::Shape(format!(
                "target vector of length {} for a {outputs}x{points} matrix",
                values.len()
            )));
        }
        Ok(TargetMatrix {
            outputs,
            points,
            values,
        })
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn as_vec(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.points + j]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> TargetMatrix {
        TargetMatrix {
            outputs: self.outputs,
            points: self.points,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}
