//! The weighted network kernel `K(x, θ) = N(x, θ) ρ(θ)` and the feature
//! matrix linking data points to candidate parameters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::candidates::CandidateSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{forward_flat, param_dim, NetworkSpec};
use crate::par::{map_indexed, Exec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `ρ(θ) = exp(-α ‖θ‖²)`. Other weights decaying fast enough to keep
    /// `N_k(x, ·) ρ(·)` vanishing at infinity could be added here.
    #[default]
    GaussianOfNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFn {
    #[serde(default)]
    pub kind: WeightKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    1.0
}

impl Default for WeightFn {
    fn default() -> Self {
        WeightFn {
            kind: WeightKind::GaussianOfNorm,
            alpha: 1.0,
        }
    }
}

impl WeightFn {
    pub fn gaussian(alpha: f64) -> Result<Self> {
        let w = WeightFn {
            kind: WeightKind::GaussianOfNorm,
            alpha,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Input(format!(
                "weight scale {} must be positive",
                self.alpha
            )));
        }
        Ok(())
    }
}

pub fn rho(w: &WeightFn, theta: &[f64]) -> Result<f64> {
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("parameter vector".into()));
    }
    let sq: f64 = theta.iter().map(|v| v * v).sum();
    Ok(match w.kind {
        WeightKind::GaussianOfNorm => (-w.alpha * sq).exp(),
    })
}

/// `K(x, θ)`, a vector with one entry per network output.
pub fn kernel_eval(spec: &NetworkSpec, w: &WeightFn, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let r = rho(w, theta)?;
    let mut out = forward_flat(spec, theta, x)?;
    for v in &mut out {
        *v *= r;
    }
    Ok(out)
}

/// Dense `(t·m) x P` matrix with entry `[(k, j), p] = K_k(x_j, θ_p)`; row
/// `(k, j)` is stored at index `k·m + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    spec: NetworkSpec,
    weight: WeightFn,
    outputs: usize,
    points: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps raw row-major entries. Used for synthetic instances and tests.
    pub fn from_rows(
        spec: NetworkSpec,
        weight: WeightFn,
        outputs: usize,
        points: usize,
        cols: usize,
        entries: Vec<f64>,
    ) -> Result<Self> {
        if entries.len() != outputs * points * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {}x{cols} matrix",
                entries.len(),
                outputs * points
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix entry".into()));
        }
        Ok(FeatureMatrix {
            spec,
            weight,
            outputs,
            points,
            cols,
            entries,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weight(&self) -> &WeightFn {
        &self.weight
    }

    pub fn rows(&self) -> usize {
        self.outputs * self.points
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `A c`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|r| self.row(r).iter().zip(c).map(|(a, v)| a * v).sum())
            .collect()
    }

    /// `Aᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += vr * a;
            }
        }
        out
    }

    /// Same matrix restricted to a subset of columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut entries = Vec::with_capacity(self.rows() * cols.len());
        for r in 0..self.rows() {
            entries.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        FeatureMatrix {
            spec: self.spec.clone(),
            weight: self.weight,
            outputs: self.outputs,
            points: self.points,
            cols: cols.len(),
            entries,
        }
    }
}

pub fn feature_matrix(
    spec: &NetworkSpec,
    w: &WeightFn,
    data: &Dataset,
    cands: &CandidateSet,
) -> Result<FeatureMatrix> {
    feature_matrix_with(spec, w, data, cands, Exec::default())
}

/// Builds the feature matrix, one candidate column per task.
pub fn feature_matrix_with(
    spec: &NetworkSpec,
    w: &WeightFn,
    data: &Dataset,
    cands: &CandidateSet,
    exec: Exec,
) -> Result<FeatureMatrix> {
    spec.validate()?;
    w.validate()?;
    if data.input_dim() != spec.input_dim || data.output_dim() != spec.output_dim {
        return Err(Error::Shape(format!(
            "dataset is {}->{}, network is {}->{}",
            data.input_dim(),
            data.output_dim(),
            spec.input_dim,
            spec.output_dim
        )));
    }
    if cands.is_empty() {
        return Err(Error::Input("candidate set is empty".into()));
    }
    let dim = param_dim(spec);
    if let Some(p) = cands.points.iter().find(|p| p.len() != dim) {
        return Err(Error::Shape(format!(
            "candidate of length {}, parameter dimension is {dim}",
            p.len()
        )));
    }

    let (t, m, cols) = (spec.output_dim, data.len(), cands.len());
    let columns: Vec<Result<Vec<f64>>> = map_indexed(exec, cols, |p| {
        let theta = &cands.points[p];
        let mut col = vec![0.0; t * m];
        for (j, x) in data.inputs().iter().enumerate() {
            let k_val = kernel_eval(spec, w, x, theta)?;
            for (k, v) in k_val.into_iter().enumerate() {
                col[k * m + j] = v;
            }
        }
        Ok(col)
    });

    let mut entries = vec![0.0; t * m * cols];
    for (p, col) in columns.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            entries[r * cols + p] = v;
        }
    }
    FeatureMatrix::from_rows(spec.clone(), *w, t, m, cols, entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    /// Set when `rank < t·m`, i.e. the kernel sections at the data points are
    /// numerically dependent on this discretization.
    pub deficient: bool,
}

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Numerical rank from a column-pivoted QR of `Aᵀ`. Diagonal entries of `R`
/// below `tol · |R_00|` count as zero.
pub fn rank_check(a: &FeatureMatrix, tol: f64) -> RankReport {
    let rows = a.rows();
    let at = DMatrix::from_fn(a.cols(), rows, |i, j| a.get(j, i));
    let qr = at.col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .collect();
    let lead = diag.iter().cloned().fold(0.0, f64::max);
    let rank = if lead == 0.0 {
        0
    } else {
        diag.iter().filter(|&&d| d > tol * lead).count()
    };
    RankReport {
        rank,
        deficient: rank < rows,
    }
}
