//! Finite discretizations of the parameter space.
//!
//! A candidate set is a deterministic list of flat parameter vectors inside a
//! box. Sampling and refinement draw from a ChaCha stream seeded explicitly, so
//! the same arguments always give the same points in the same order.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::WeightFn;
use crate::network::{param_dim, NetworkSpec};

/// Largest parameter dimension for which a full tensor grid is built.
pub const MAX_GRID_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Shape("box bounds differ in length".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box bounds".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::Input("box lower bound exceeds upper bound".into()));
        }
        Ok(BoxSpec { lower, upper })
    }

    /// `[-bound, bound]^dim`.
    pub fn symmetric(dim: usize, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::Input(format!(
                "box bound {bound} must be finite and >= 0"
            )));
        }
        BoxSpec::new(vec![-bound; dim], vec![bound; dim])
    }

    /// `[-B, B]^{param_dim}` with `B = 3/sqrt(α)`.
    pub fn default_for(spec: &NetworkSpec, weight: &WeightFn) -> Result<Self> {
        BoxSpec::symmetric(param_dim(spec), default_bound(weight))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}

pub fn default_bound(weight: &WeightFn) -> f64 {
    3.0 / weight.alpha.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Grid,
    Random,
    Refined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// `count` independent uniform draws.
    Random(usize),
    /// Full tensor grid with this many points per coordinate.
    Grid(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub points: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub seed: u64,
    pub bounds: BoxSpec,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point bit-identical to `theta`, if any.
    pub fn position(&self, theta: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == theta)
    }

    /// Maps every point to its index; lookups are bit-exact.
    pub fn index(&self) -> std::collections::HashMap<Vec<u64>, usize> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (bits(p), i))
            .collect()
    }
}

pub(crate) fn bits(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

pub fn sample(bounds: &BoxSpec, mode: SampleMode, seed: u64) -> Result<CandidateSet> {
    let dim = bounds.dim();
    match mode {
        SampleMode::Random(count) => {
            if count == 0 {
                return Err(Error::Input(
                    "random sampling needs at least one point".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = HashSet::with_capacity(count);
            let mut points = Vec::with_capacity(count);
            for _ in 0..count {
                let p = uniform_in(&mut rng, &bounds.lower, &bounds.upper);
                if seen.insert(bits(&p)) {
                    points.push(p);
                }
            }
            Ok(CandidateSet {
                points,
                provenance: Provenance::Random,
                seed,
                bounds: bounds.clone(),
            })
        }
        SampleMode::Grid(k) => {
            if k == 0 {
                return Err(Error::Input(
                    "grid needs at least one point per coordinate".into(),
                ));
            }
            if dim > MAX_GRID_DIM {
                return Err(Error::Refused(format!(
                    "tensor grid over {dim} coordinates exceeds the limit of {MAX_GRID_DIM}"
                )));
            }
            let axes: Vec<Vec<f64>> = (0..dim)
                .map(|i| axis(bounds.lower[i], bounds.upper[i], k))
                .collect();
            let total = k.pow(dim as u32);
            let mut seen = HashSet::with_capacity(total);
            let mut points = Vec::with_capacity(total);
            let mut idx = vec![0usize; dim];
            for _ in 0..total {
                let p: Vec<f64> = idx.iter().enumerate().map(|(i, &a)| axes[i][a]).collect();
                if seen.insert(bits(&p)) {
                    points.push(p);
                }
                // last coordinate varies fastest
                for i in (0..dim).rev() {
                    idx[i] += 1;
                    if idx[i] < k {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            Ok(CandidateSet {
                points,
                provenance: Provenance::Grid,
                seed,
                bounds: bounds.clone(),
            })
        }
    }
}

fn axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k)
        .map(|i| {
            if i == k - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / ((k - 1) as f64)
            }
        })
        .collect()
}

fn uniform_in(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| {
            let v = l + (u - l) * rng.random::<f64>();
            v.clamp(l, u)
        })
        .collect()
}

/// Appends `count_per_center` uniform draws from the sup-norm ball of
/// `radius` around each center, clipped to the box. Existing points keep
/// their order; exact duplicates are skipped.
pub fn refine(
    cands: &CandidateSet,
    centers: &[Vec<f64>],
    radius: f64,
    count_per_center: usize,
    seed: u64,
) -> Result<CandidateSet> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Input(format!(
            "refinement radius {radius} must be positive"
        )));
    }
    let dim = cands.bounds.dim();
    if let Some(c) = centers.iter().find(|c| c.len() != dim) {
        return Err(Error::Shape(format!(
            "refinement center has length {}, parameter dimension is {dim}",
            c.len()
        )));
    }
    let mut out = cands.clone();
    if count_per_center == 0 || centers.is_empty() {
        return Ok(out);
    }
    let mut seen: HashSet<Vec<u64>> = out.points.iter().map(|p| bits(p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for center in centers {
        let lo: Vec<f64> = center
            .iter()
            .zip(&cands.bounds.lower)
            .map(|(c, l)| (c - radius).max(*l))
            .collect();
        let hi: Vec<f64> = center
            .iter()
            .zip(&cands.bounds.upper)
            .map(|(c, u)| (c + radius).min(*u))
            .collect();
        for _ in 0..count_per_center {
            let p = uniform_in(&mut rng, &lo, &hi);
            if seen.insert(bits(&p)) {
                out.points.push(p);
            }
        }
    }
    out.provenance = Provenance::Refined;
    Ok(out)
}
