use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::candidates::{default_bound, BoxSpec, SampleMode, MAX_GRID_DIM};
use crate::error::{Error, Result};
use crate::kernel::{WeightFn, DEFAULT_RANK_TOL};
use crate::lp::DEFAULT_LP_TOL;
use crate::measure::{DEFAULT_COEFF_TOL, DEFAULT_MERGE_TOL};
use crate::mni::MniOptions;
use crate::network::NetworkSpec;
use crate::reg::{Loss, RegOptions};
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    /// Half-width of the parameter box; defaults to `3/√α`.
    #[serde(default)]
    pub bound: Option<f64>,
    /// Number of random draws, or points per axis when `grid` is set.
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub grid: bool,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_radius")]
    pub refine_radius: f64,
    #[serde(default = "default_refine_count")]
    pub refine_count: usize,
}

fn default_count() -> usize {
    200
}
fn default_rounds() -> usize {
    2
}
fn default_radius() -> f64 {
    0.25
}
fn default_refine_count() -> usize {
    20
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            bound: None,
            count: default_count(),
            grid: false,
            rounds: default_rounds(),
            refine_radius: default_radius(),
            refine_count: default_refine_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_argmax_tol")]
    pub argmax_tol: f64,
    #[serde(default = "default_coeff_tol")]
    pub coeff_tol: f64,
    #[serde(default = "default_merge_tol")]
    pub merge_tol: f64,
    #[serde(default = "default_lp_tol")]
    pub lp_tol: f64,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    /// Proceed with a rank-deficient feature matrix.
    #[serde(default)]
    pub force: bool,
    #[serde(default = "default_cd_tol")]
    pub cd_tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_argmax_tol() -> f64 {
    1e-6
}
fn default_coeff_tol() -> f64 {
    DEFAULT_COEFF_TOL
}
fn default_merge_tol() -> f64 {
    DEFAULT_MERGE_TOL
}
fn default_lp_tol() -> f64 {
    DEFAULT_LP_TOL
}
fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}
fn default_cd_tol() -> f64 {
    1e-10
}
fn default_max_sweeps() -> usize {
    100_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            argmax_tol: default_argmax_tol(),
            coeff_tol: default_coeff_tol(),
            merge_tol: default_merge_tol(),
            lp_tol: default_lp_tol(),
            rank_tol: default_rank_tol(),
            force: false,
            cd_tol: default_cd_tol(),
            max_sweeps: default_max_sweeps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_loss")]
    pub loss: Loss,
    /// Explicit path values, strictly descending.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Otherwise `path_points` geometric values from `‖Aᵀy‖_∞` down to
    /// `path_min_ratio` times that.
    #[serde(default = "default_path_points")]
    pub path_points: usize,
    #[serde(default = "default_path_min_ratio")]
    pub path_min_ratio: f64,
}

fn default_lambda() -> f64 {
    1e-3
}
fn default_loss() -> Loss {
    Loss::Square
}
fn default_path_points() -> usize {
    10
}
fn default_path_min_ratio() -> f64 {
    1e-3
}

impl Default for RegConfig {
    fn default() -> Self {
        RegConfig {
            lambda: default_lambda(),
            loss: default_loss(),
            lambdas: None,
            path_points: default_path_points(),
            path_min_ratio: default_path_min_ratio(),
        }
    }
}

/// A run description as read from TOML. Relative paths are resolved against
/// the directory containing the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub network: NetworkSpec,
    #[serde(default)]
    pub weight: WeightFn,
    #[serde(default)]
    pub candidates: CandidateConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reg: RegConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        if cfg.dataset.is_relative() {
            cfg.dataset = base.join(&cfg.dataset);
        }
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                cfg.out = Some(base.join(out));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        self.network
            .validate()
            .map_err(|e| Error::Config(format!("network: {e}")))?;
        self.weight
            .validate()
            .map_err(|e| Error::Config(format!("weight: {e}")))?;
        if !self.dataset.is_file() {
            return Err(Error::Config(format!(
                "dataset {} does not exist",
                self.dataset.display()
            )));
        }
        let c = &self.candidates;
        if let Some(b) = c.bound {
            positive("candidates.bound", b)?;
        }
        if c.count == 0 {
            return Err(Error::Config("candidates.count must be at least 1".into()));
        }
        if c.grid && self.network.param_dim() > MAX_GRID_DIM {
            return Err(Error::Config(format!(
                "grid sampling needs at most {MAX_GRID_DIM} parameters, network has {}",
                self.network.param_dim()
            )));
        }
        if c.rounds > 20 {
            return Err(Error::Config("candidates.rounds must be at most 20".into()));
        }
        positive("candidates.refine_radius", c.refine_radius)?;
        let s = &self.solver;
        for (name, v) in [
            ("solver.argmax_tol", s.argmax_tol),
            ("solver.coeff_tol", s.coeff_tol),
            ("solver.merge_tol", s.merge_tol),
            ("solver.lp_tol", s.lp_tol),
            ("solver.rank_tol", s.rank_tol),
            ("solver.cd_tol", s.cd_tol),
        ] {
            positive(name, v)?;
        }
        if s.argmax_tol >= 1.0 {
            return Err(Error::Config("solver.argmax_tol must be below 1".into()));
        }
        positive("reg.lambda", self.reg.lambda)?;
        if let Some(ls) = &self.reg.lambdas {
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::Config(
                    "reg.lambdas must be positive and non-empty".into(),
                ));
            }
            if ls.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config(
                    "reg.lambdas must be strictly descending".into(),
                ));
            }
        }
        if self.reg.path_points == 0 {
            return Err(Error::Config("reg.path_points must be at least 1".into()));
        }
        if !(self.reg.path_min_ratio > 0.0 && self.reg.path_min_ratio < 1.0) {
            return Err(Error::Config(
                "reg.path_min_ratio must lie in (0, 1)".into(),
            ));
        }
        positive("train.learning_rate", self.train.learning_rate)?;
        if self.train.atoms == Some(0) {
            return Err(Error::Config("train.atoms must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Result<BoxSpec> {
        let b = self
            .candidates
            .bound
            .unwrap_or_else(|| default_bound(&self.weight));
        BoxSpec::symmetric(self.network.param_dim(), b)
    }

    pub fn sample_mode(&self) -> SampleMode {
        if self.candidates.grid {
            SampleMode::Grid(self.candidates.count)
        } else {
            SampleMode::Random(self.candidates.count)
        }
    }

    pub fn mni_options(&self) -> MniOptions {
        let s = &self.solver;
        MniOptions {
            lp_tol: s.lp_tol,
            argmax_tol: s.argmax_tol,
            coeff_tol: s.coeff_tol,
            merge_tol: s.merge_tol,
            rank_tol: s.rank_tol,
            force: s.force,
            ..MniOptions::default()
        }
    }

    pub fn reg_options(&self) -> RegOptions {
        let s = &self.solver;
        RegOptions {
            tol: s.cd_tol,
            max_sweeps: s.max_sweeps,
            coeff_tol: s.coeff_tol,
            merge_tol: s.merge_tol,
            lp_tol: s.lp_tol,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> (tempfile::TempDir, String) {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("d.csv"), "x0,y0\n0.5,1\n").unwrap();
        let text = r#"
dataset = "d.csv"
seed = 4

[network]
input_dim = 1
output_dim = 1
hidden = [2]
activation = "sigmoid"
"#
        .to_string();
        (dir, text)
    }

    #[test]
    fn defaults_and_relative_paths() {
        let (dir, text) = base();
        let cfg = RunConfig::from_toml_str(&text, dir.path()).unwrap();
        assert_eq!(cfg.dataset, dir.path().join("d.csv"));
        assert_eq!(cfg.candidates.rounds, 2);
        assert_eq!(cfg.weight, WeightFn::default());
        assert_eq!(cfg.bounds().unwrap().upper[0], 3.0);
        assert_eq!(cfg.train_config().seed, 4);
    }

    #[test]
    fn rejects_bad_values() {
        let (dir, text) = base();
        for extra in [
            "[weight]\nalpha = -1.0\n",
            "[candidates]\ncount = 0\n",
            "[candidates]\nrefine_radius = 0.0\n",
            "[reg]\nlambdas = [0.1, 0.2]\n",
            "[solver]\nargmax_tol = 2.0\n",
            "[train]\nlearning_rate = 0.0\nmax_iters = 3\n",
            "unknown = 1\n",
        ] {
            let t = if extra.starts_with('[') {
                format!("{text}{extra}")
            } else {
                format!("{extra}{text}")
            };
            assert!(RunConfig::from_toml_str(&t, dir.path()).is_err(), "{extra}");
        }
        let missing = text.replace("d.csv", "nope.csv");
        assert!(matches!(
            RunConfig::from_toml_str(&missing, dir.path()),
            Err(Error::Config(_))
        ));
    }
}
