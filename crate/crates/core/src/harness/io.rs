use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::WeightFn;
use crate::measure::{f_mu_eval, Atom, DiscreteMeasure};
use crate::network::{forward_flat, NetworkSpec};
use crate::trainer::Expansion;

pub const FORMAT_VERSION: u32 = 1;

/// Reads a CSV with header `x0,...,x{s-1},y0,...,y{t-1}`.
pub fn read_dataset(path: &Path, input_dim: usize, output_dim: usize) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let expected: Vec<String> = (0..input_dim)
        .map(|i| format!("x{i}"))
        .chain((0..output_dim).map(|k| format!("y{k}")))
        .collect();
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != expected {
        return Err(Error::Input(format!(
            "dataset header {:?} does not match expected {:?}",
            header, expected
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Input(format!("row {}: cannot parse {v:?}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != input_dim + output_dim {
            return Err(Error::Input(format!(
                "row {} has {} fields",
                line + 1,
                values.len()
            )));
        }
        xs.push(values[..input_dim].to_vec());
        ys.push(values[input_dim..].to_vec());
    }
    Dataset::new(xs, ys)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (0..data.input_dim())
        .map(|i| format!("x{i}"))
        .chain((0..data.output_dim()).map(|k| format!("y{k}")))
        .collect();
    w.write_record(&header)?;
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        w.write_record(x.iter().chain(y).map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `Σ c_ℓ K(·, θ_ℓ)`.
    KernelExpansion,
    /// `Σ β_ℓ N(·, θ_ℓ)`.
    NetworkExpansion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub network: NetworkSpec,
    pub weight: WeightFn,
    pub atoms: Vec<Atom>,
}

impl ModelFile {
    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            kind: ModelKind::KernelExpansion,
            network: mu.spec().clone(),
            weight: *mu.weight(),
            atoms: mu.atoms().to_vec(),
        }
    }

    pub fn from_expansion(e: &Expansion) -> Self {
        let atoms = e
            .beta
            .iter()
            .zip(&e.thetas)
            .map(|(&coeff, theta)| Atom {
                theta: theta.clone(),
                coeff,
            })
            .collect();
        ModelFile {
            format_version: FORMAT_VERSION,
            kind: match e.weight {
                Some(_) => ModelKind::KernelExpansion,
                None => ModelKind::NetworkExpansion,
            },
            network: e.spec.clone(),
            weight: e.weight.unwrap_or_default(),
            atoms,
        }
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        if self.kind != ModelKind::KernelExpansion {
            return Err(Error::Input(
                "model is a network expansion, not a measure".into(),
            ));
        }
        DiscreteMeasure::new(self.network.clone(), self.weight, self.atoms.clone())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            ModelKind::KernelExpansion => f_mu_eval(&self.measure()?, x),
            ModelKind::NetworkExpansion => {
                let mut out = vec![0.0; self.network.output_dim];
                for a in &self.atoms {
                    let n = forward_flat(&self.network, &a.theta, x)?;
                    for (o, v) in out.iter_mut().zip(n) {
                        *o += a.coeff * v;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `prediction - target` at every data point, in `k·m + j` order.
    pub fn residuals(&self, data: &Dataset) -> Result<Vec<f64>> {
        let m = data.len();
        let t = data.output_dim();
        let mut out = vec![0.0; t * m];
        for (j, (x, y)) in data.inputs().iter().zip(data.targets()).enumerate() {
            let p = self.predict(x)?;
            for k in 0..t {
                out[k * m + j] = p[k] - y[k];
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.network.validate()?;
        self.weight.validate()?;
        // reuse the measure checks for shapes and finiteness
        DiscreteMeasure::new(self.network.clone(), self.weight, self.atoms.clone())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateFile {
    pub format_version: u32,
    pub candidates: CandidateSet,
}

impl CandidateFile {
    pub fn new(candidates: CandidateSet) -> Self {
        CandidateFile {
            format_version: FORMAT_VERSION,
            candidates,
        }
    }

    pub fn load(path: &Path) -> Result<CandidateSet> {
        let f: CandidateFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported candidate format version {}",
                f.format_version
            )));
        }
        Ok(f.candidates)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_csv<R, I, S>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
