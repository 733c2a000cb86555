use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::io::{
    read_dataset, write_csv, write_json, CandidateFile, ModelFile, ModelKind, FORMAT_VERSION,
};
use crate::candidates::{bits, refine, sample, CandidateSet};
use crate::data::{Dataset, TargetMatrix};
use crate::error::{Error, Result};
use crate::kernel::{feature_matrix, rank_check, FeatureMatrix, RankReport};
use crate::measure::DiscreteMeasure;
use crate::mni::{
    argmax_set, solve_dual_with_tol, solve_mni, verify_representer, DualCertificate, MniReport,
};
use crate::reg::{
    lambda_max, lambda_path, mni_consistency, solve_regularized, Loss, PathRow, RegProblem,
    RegReport,
};
use crate::trainer::{train_expansion, TrainTrace};

/// Slack allowed when checking that `C*` does not grow across refinement rounds.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance on the square-loss optimality residual, scaled by `max(1, λ)`.
pub const KKT_TOL: f64 = 1e-6;
/// Tolerance on `|tv - C*(Z)|`, scaled by `max(1, tv)`.
pub const CONSISTENCY_TOL: f64 = 1e-6;
/// Slack on monotonicity of the total variation along a λ path.
pub const PATH_TV_TOL: f64 = 1e-9;
pub const GRAD_CHECK_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Mni,
    Reg,
    Path,
    Train,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Mni => "mni",
            Command::Reg => "reg",
            Command::Path => "path",
            Command::Train => "train",
            Command::Verify => "verify",
        }
    }
}

/// Result of a completed run. Errors before this point are reported through
/// [`Error`] instead.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub failed_checks: Vec<String>,
    pub trivial: bool,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failed_checks.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// 2 for problems with the configuration or input files, 1 for everything the
/// numerical pipeline itself rejects.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Input(_)
        | Error::Shape(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Toml(_) => 2,
        _ => 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub candidates: usize,
    pub cstar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub candidate_count: usize,
    pub param_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MniRunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub points: usize,
    pub outputs: usize,
    pub candidate_count: usize,
    pub rank: Option<RankReport>,
    pub cstar_trace: Vec<TraceRow>,
    pub cstar_trace_monotone: bool,
    pub primal_value: f64,
    #[serde(flatten)]
    pub mni: MniReport,
    pub residuals: Vec<f64>,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegRunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub candidate_count: usize,
    pub lambda_max: f64,
    pub atom_count: usize,
    #[serde(flatten)]
    pub reg: RegReport,
    pub residuals: Vec<f64>,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub loss: Loss,
    pub candidate_count: usize,
    pub lambda_max: f64,
    pub rows: Vec<PathRow>,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRunReport {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub final_loss: f64,
    #[serde(flatten)]
    pub trace: TrainTrace,
    pub residuals: Vec<f64>,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRunReport {
    pub format_version: u32,
    pub command: String,
    pub candidate_count: usize,
    #[serde(flatten)]
    pub mni: MniReport,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| {
        Error::Config(format!(
            "cannot create output directory {}: {e}",
            out.display()
        ))
    })?;
    let probe = out.join(".write-check");
    std::fs::write(&probe, b"")
        .and_then(|_| std::fs::remove_file(&probe))
        .map_err(|e| {
            Error::Config(format!(
                "output directory {} is not writable: {e}",
                out.display()
            ))
        })?;
    match command {
        Command::Sample => run_sample(cfg, out),
        Command::Mni => run_mni(cfg, out),
        Command::Reg => run_reg(cfg, out),
        Command::Path => run_path(cfg, out),
        Command::Train => run_train(cfg, out),
        Command::Verify => run_verify(cfg, out),
    }
}

fn load_data(cfg: &RunConfig) -> Result<Dataset> {
    read_dataset(&cfg.dataset, cfg.network.input_dim, cfg.network.output_dim)
}

fn initial_candidates(cfg: &RunConfig) -> Result<CandidateSet> {
    sample(&cfg.bounds()?, cfg.sample_mode(), cfg.seed)
}

fn assemble(cfg: &RunConfig, data: &Dataset, cands: &CandidateSet) -> Result<FeatureMatrix> {
    feature_matrix(&cfg.network, &cfg.weight, data, cands)
}

fn run_sample(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let cands = initial_candidates(cfg)?;
    write_json(
        &out.join("candidates.json"),
        &CandidateFile::new(cands.clone()),
    )?;
    write_json(
        &out.join("report.json"),
        &SampleRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Sample.name().into(),
            seed: cfg.seed,
            candidate_count: cands.len(),
            param_dim: cfg.network.param_dim(),
        },
    )?;
    Ok(Outcome::default())
}

/// Alternates dual solves with refinement around the argmax set, then solves
/// the interpolation problem on the final candidates.
fn run_mni(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let data = load_data(cfg)?;
    let y = data.target_matrix();
    let opts = cfg.mni_options();
    let mut cands = initial_candidates(cfg)?;
    let mut a = assemble(cfg, &data, &cands)?;
    let mut trace = Vec::new();

    if !y.is_zero() {
        for round in 0..cfg.candidates.rounds {
            let cert = dual_or_rank_error(&a, &y, opts.lp_tol, opts.rank_tol)?;
            trace.push(TraceRow {
                round,
                candidates: cands.len(),
                cstar: cert.cstar,
            });
            let centers: Vec<Vec<f64>> = argmax_set(&cert, opts.argmax_tol)?
                .into_iter()
                .map(|p| cands.points[p].clone())
                .collect();
            cands = refine(
                &cands,
                &centers,
                cfg.candidates.refine_radius,
                cfg.candidates.refine_count,
                cfg.seed.wrapping_add(round as u64 + 1),
            )?;
            a = assemble(cfg, &data, &cands)?;
        }
    }

    let rank = (!y.is_zero()).then(|| rank_check(&a, opts.rank_tol));
    let sol = solve_mni(&a, &y, &cands, &opts)?;
    if !y.is_zero() {
        trace.push(TraceRow {
            round: cfg.candidates.rounds,
            candidates: cands.len(),
            cstar: sol.certificate.cstar,
        });
    }
    let monotone = trace
        .windows(2)
        .all(|w| w[1].cstar <= w[0].cstar + TRACE_TOL);

    let model = ModelFile::from_measure(&sol.measure);
    let residuals = model.residuals(&data)?;
    let mut failed: Vec<String> = sol
        .report
        .failed_checks()
        .iter()
        .map(|s| s.to_string())
        .collect();
    if !monotone {
        failed.push("cstar_trace".into());
    }

    write_json(&out.join("model.json"), &model)?;
    write_json(
        &out.join("candidates.json"),
        &CandidateFile::new(cands.clone()),
    )?;
    write_csv(
        &out.join("cstar_trace.csv"),
        &["round", "candidates", "cstar"],
        trace.iter().map(|r| {
            [
                r.round.to_string(),
                r.candidates.to_string(),
                r.cstar.to_string(),
            ]
        }),
    )?;
    write_ghat_table(
        out,
        &sol.certificate,
        &selected_flags(&sol.measure, &cands),
        opts.argmax_tol,
    )?;
    write_json(
        &out.join("report.json"),
        &MniRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Mni.name().into(),
            seed: cfg.seed,
            points: data.len(),
            outputs: data.output_dim(),
            candidate_count: cands.len(),
            rank,
            cstar_trace: trace,
            cstar_trace_monotone: monotone,
            primal_value: sol.primal_value,
            mni: sol.report.clone(),
            residuals,
            passed: failed.is_empty(),
            failed_checks: failed.clone(),
        },
    )?;
    Ok(Outcome {
        failed_checks: failed,
        trivial: sol.report.trivial,
    })
}

fn dual_or_rank_error(
    a: &FeatureMatrix,
    y: &TargetMatrix,
    lp_tol: f64,
    rank_tol: f64,
) -> Result<DualCertificate> {
    solve_dual_with_tol(a, y, lp_tol).map_err(|e| match e {
        Error::RankDeficient => {
            let r = rank_check(a, rank_tol);
            Error::Solver(format!(
                "dual problem unbounded: feature matrix has numerical rank {} of {} rows",
                r.rank,
                a.rows()
            ))
        }
        other => other,
    })
}

fn selected_flags(mu: &DiscreteMeasure, cands: &CandidateSet) -> Vec<bool> {
    let mut selected = vec![false; cands.len()];
    let index = cands.index();
    for atom in mu.atoms() {
        if let Some(&p) = index.get(&bits(&atom.theta)) {
            selected[p] = true;
        }
    }
    selected
}

fn write_ghat_table(
    out: &Path,
    cert: &DualCertificate,
    selected: &[bool],
    argmax_tol: f64,
) -> Result<()> {
    let in_argmax = {
        let mut v = vec![false; selected.len()];
        if cert.ghat_norm > 0.0 {
            for p in argmax_set(cert, argmax_tol)? {
                v[p] = true;
            }
        }
        v
    };
    write_csv(
        &out.join("ghat.csv"),
        &["index", "ghat", "in_argmax", "selected"],
        cert.ghat_values.iter().enumerate().map(|(p, g)| {
            [
                p.to_string(),
                g.to_string(),
                (in_argmax[p] as u8).to_string(),
                (selected[p] as u8).to_string(),
            ]
        }),
    )
}

fn run_reg(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let data = load_data(cfg)?;
    let y = data.target_matrix();
    let cands = initial_candidates(cfg)?;
    let a = assemble(cfg, &data, &cands)?;
    let problem = RegProblem {
        a: &a,
        y: &y,
        lambda: cfg.reg.lambda,
        loss: cfg.reg.loss,
    };
    let mut sol = solve_regularized(&problem, &cands, &cfg.reg_options())?;
    let cons = mni_consistency(&sol.measure, &a, &cands, &cfg.mni_options())?;
    sol.report.mni_consistency_gap = Some(cons.gap);

    let r = &sol.report;
    let mut failed = Vec::new();
    let kkt_scale = match r.loss {
        Loss::Square => r.lambda.max(1.0),
        Loss::Absolute => r.objective.max(1.0),
    };
    if r.kkt_max_violation > KKT_TOL * kkt_scale {
        failed.push("kkt".to_string());
    }
    if !r.converged {
        failed.push("converged".to_string());
    }
    if cons.gap > CONSISTENCY_TOL * r.tv.max(1.0) {
        failed.push("mni_consistency".to_string());
    }

    let model = ModelFile::from_measure(&sol.measure);
    let residuals = model.residuals(&data)?;
    write_json(&out.join("model.json"), &model)?;
    write_json(
        &out.join("candidates.json"),
        &CandidateFile::new(cands.clone()),
    )?;
    write_json(
        &out.join("report.json"),
        &RegRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Reg.name().into(),
            seed: cfg.seed,
            candidate_count: cands.len(),
            lambda_max: lambda_max(&a, &y),
            atom_count: sol.measure.len(),
            reg: sol.report.clone(),
            residuals,
            passed: failed.is_empty(),
            failed_checks: failed.clone(),
        },
    )?;
    Ok(Outcome {
        failed_checks: failed,
        trivial: sol.report.zero_predictions,
    })
}

fn run_path(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let data = load_data(cfg)?;
    let y = data.target_matrix();
    let cands = initial_candidates(cfg)?;
    let a = assemble(cfg, &data, &cands)?;
    let lmax = lambda_max(&a, &y);
    let lambdas = match &cfg.reg.lambdas {
        Some(ls) => ls.clone(),
        None => {
            if lmax == 0.0 {
                return Err(Error::Input(
                    "targets are zero; every lambda gives the zero solution".into(),
                ));
            }
            let n = cfg.reg.path_points;
            (0..n)
                .map(|i| {
                    let f = if n == 1 {
                        0.0
                    } else {
                        i as f64 / (n - 1) as f64
                    };
                    lmax * cfg.reg.path_min_ratio.powf(f)
                })
                .collect()
        }
    };
    let rows = lambda_path(&a, &y, cfg.reg.loss, &lambdas, &cands, &cfg.reg_options())?;

    let mut failed = Vec::new();
    if rows.windows(2).any(|w| w[1].tv < w[0].tv - PATH_TV_TOL) {
        failed.push("tv_monotone".to_string());
    }
    if cfg.reg.loss == Loss::Square
        && rows
            .iter()
            .any(|r| r.kkt_max_violation > KKT_TOL * r.lambda.max(1.0) || !r.converged)
    {
        failed.push("kkt".to_string());
    }

    write_csv(
        &out.join("path.csv"),
        &["lambda", "loss", "tv", "kkt", "converged"],
        rows.iter().map(|r| {
            [
                r.lambda.to_string(),
                r.loss_value.to_string(),
                r.tv.to_string(),
                r.kkt_max_violation.to_string(),
                r.converged.to_string(),
            ]
        }),
    )?;
    write_json(
        &out.join("report.json"),
        &PathRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Path.name().into(),
            seed: cfg.seed,
            loss: cfg.reg.loss,
            candidate_count: cands.len(),
            lambda_max: lmax,
            rows,
            passed: failed.is_empty(),
            failed_checks: failed.clone(),
        },
    )?;
    Ok(Outcome {
        failed_checks: failed,
        trivial: false,
    })
}

fn run_train(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let data = load_data(cfg)?;
    let (expansion, trace) = train_expansion(&cfg.network, &data, &cfg.train_config())?;
    let mut failed = Vec::new();
    if trace.losses.windows(2).any(|w| w[1] > w[0]) {
        failed.push("loss_monotone".to_string());
    }
    if let Some(e) = trace.grad_check_max_rel_err {
        if e > GRAD_CHECK_TOL {
            failed.push("grad_check".to_string());
        }
    }
    let model = ModelFile::from_expansion(&expansion);
    let residuals = model.residuals(&data)?;
    write_json(&out.join("model.json"), &model)?;
    write_csv(
        &out.join("losses.csv"),
        &["step", "loss"],
        trace
            .losses
            .iter()
            .enumerate()
            .map(|(i, l)| [i.to_string(), l.to_string()]),
    )?;
    write_json(
        &out.join("report.json"),
        &TrainRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Train.name().into(),
            seed: cfg.seed,
            final_loss: *trace.losses.last().expect("loss list is never empty"),
            trace,
            residuals,
            passed: failed.is_empty(),
            failed_checks: failed.clone(),
        },
    )?;
    Ok(Outcome {
        failed_checks: failed,
        trivial: false,
    })
}

/// Re-checks a stored kernel-expansion model against a fresh dual solve on
/// the stored candidate set.
fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let data = load_data(cfg)?;
    let y = data.target_matrix();
    let model = ModelFile::load(&out.join("model.json"))?;
    if model.kind != ModelKind::KernelExpansion {
        return Err(Error::Input("verify needs a kernel expansion model".into()));
    }
    if model.network != cfg.network || model.weight != cfg.weight {
        return Err(Error::Input(
            "model architecture or weight differs from the config".into(),
        ));
    }
    let cands = CandidateFile::load(&out.join("candidates.json"))?;
    let a = assemble(cfg, &data, &cands)?;
    let opts = cfg.mni_options();
    let mu = model.measure()?;
    let cert = if y.is_zero() {
        DualCertificate::zero(a.rows(), a.cols())
    } else {
        dual_or_rank_error(&a, &y, opts.lp_tol, opts.rank_tol)?
    };
    let mut report = verify_representer(&mu, &cert, &a, &y, &cands, &opts)?;
    report.trivial = y.is_zero();
    let failed: Vec<String> = report
        .failed_checks()
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_json(
        &out.join("verify.json"),
        &VerifyRunReport {
            format_version: FORMAT_VERSION,
            command: Command::Verify.name().into(),
            candidate_count: cands.len(),
            mni: report.clone(),
            passed: failed.is_empty(),
            failed_checks: failed.clone(),
        },
    )?;
    Ok(Outcome {
        failed_checks: failed,
        trivial: report.trivial,
    })
}
