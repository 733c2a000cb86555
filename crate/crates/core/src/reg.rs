//! Loss plus `λ·TV` over measures supported on the candidate set.
//!
//! Square loss, `½‖A c - vec(Y)‖² + λ‖c‖₁`, is minimized by cyclic coordinate
//! descent with soft-thresholding in a fixed sweep order. Absolute loss,
//! `‖A c - vec(Y)‖₁ + λ‖c‖₁`, is a linear program.

use serde::{Deserialize, Serialize};

use crate::candidates::{bits, CandidateSet};
use crate::data::TargetMatrix;
use crate::error::{Error, Result};
use crate::kernel::FeatureMatrix;
use crate::lp::{solve_lp, LinearProgram, LpStatus, DEFAULT_LP_TOL};
use crate::measure::{prune, Atom, DiscreteMeasure, DEFAULT_COEFF_TOL, DEFAULT_MERGE_TOL};
use crate::mni::{solve_mni, MniOptions, MniSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Square,
    Absolute,
}

#[derive(Clone, Copy, Debug)]
pub struct RegProblem<'a> {
    pub a: &'a FeatureMatrix,
    pub y: &'a TargetMatrix,
    pub lambda: f64,
    pub loss: Loss,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegOptions {
    /// Stop when the largest coordinate change in a sweep is at most this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub coeff_tol: f64,
    pub merge_tol: f64,
    pub lp_tol: f64,
}

impl Default for RegOptions {
    fn default() -> Self {
        RegOptions {
            tol: 1e-10,
            max_sweeps: 100_000,
            coeff_tol: DEFAULT_COEFF_TOL,
            merge_tol: DEFAULT_MERGE_TOL,
            lp_tol: DEFAULT_LP_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegReport {
    pub lambda: f64,
    pub loss: Loss,
    pub loss_value: f64,
    pub tv: f64,
    pub objective: f64,
    /// Square loss: [`kkt_check`]. Absolute loss: gap between the primal and
    /// dual objectives of the linear program.
    pub kkt_max_violation: f64,
    pub mni_consistency_gap: Option<f64>,
    /// Predictions of the solution at the data points vanish.
    pub zero_predictions: bool,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegSolution {
    /// One coefficient per candidate, before pruning.
    pub coefficients: Vec<f64>,
    pub measure: DiscreteMeasure,
    pub report: RegReport,
}

fn check(problem: &RegProblem) -> Result<()> {
    if !(problem.lambda > 0.0 && problem.lambda.is_finite()) {
        return Err(Error::Input(format!(
            "regularization parameter {} must be positive",
            problem.lambda
        )));
    }
    if problem.y.outputs() != problem.a.outputs() || problem.y.points() != problem.a.points() {
        return Err(Error::Shape(
            "targets do not match the feature matrix rows".into(),
        ));
    }
    Ok(())
}

/// `‖Aᵀ vec(Y)‖_∞`: for square loss the solution is zero iff `λ` reaches it.
pub fn lambda_max(a: &FeatureMatrix, y: &TargetMatrix) -> f64 {
    a.apply_transpose(y.as_vec())
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn solve_regularized(
    problem: &RegProblem,
    cands: &CandidateSet,
    opts: &RegOptions,
) -> Result<RegSolution> {
    solve_regularized_from(problem, cands, opts, None)
}

/// As [`solve_regularized`], with an optional warm start for coordinate descent.
pub fn solve_regularized_from(
    problem: &RegProblem,
    cands: &CandidateSet,
    opts: &RegOptions,
    warm: Option<&[f64]>,
) -> Result<RegSolution> {
    check(problem)?;
    if cands.len() != problem.a.cols() {
        return Err(Error::Shape(
            "candidate count differs from matrix columns".into(),
        ));
    }
    let (coefficients, kkt, sweeps, converged) = match problem.loss {
        Loss::Square => {
            let cd = coordinate_descent(problem, opts, warm)?;
            let kkt = kkt_check(&cd.coefficients, problem.a, problem.y, problem.lambda);
            (cd.coefficients, kkt, cd.sweeps, cd.converged)
        }
        Loss::Absolute => {
            let (c, gap) = absolute_loss_lp(problem, opts.lp_tol)?;
            (c, gap, 0, true)
        }
    };

    let residual: Vec<f64> = problem
        .a
        .apply(&coefficients)
        .iter()
        .zip(problem.y.as_vec())
        .map(|(p, t)| p - t)
        .collect();
    let loss_value = match problem.loss {
        Loss::Square => 0.5 * residual.iter().map(|r| r * r).sum::<f64>(),
        Loss::Absolute => residual.iter().map(|r| r.abs()).sum(),
    };
    let tv: f64 = coefficients.iter().map(|c| c.abs()).sum();
    let predictions = problem.a.apply(&coefficients);

    let atoms = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(p, &c)| Atom {
            theta: cands.points[p].clone(),
            coeff: c,
        })
        .collect();
    let raw = DiscreteMeasure::new(problem.a.spec().clone(), *problem.a.weight(), atoms)?;
    let measure = prune(&raw, opts.coeff_tol, opts.merge_tol);

    Ok(RegSolution {
        coefficients,
        measure,
        report: RegReport {
            lambda: problem.lambda,
            loss: problem.loss,
            loss_value,
            tv,
            objective: loss_value + problem.lambda * tv,
            kkt_max_violation: kkt,
            mni_consistency_gap: None,
            zero_predictions: predictions.iter().all(|&v| v == 0.0),
            sweeps,
            converged,
        },
    })
}

struct CdResult {
    coefficients: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn square_objective(r: &[f64], c: &[f64], lambda: f64) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>() + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent on columns `0..P` in order. The residual is kept
/// incrementally and recomputed from scratch periodically. The objective is
/// checked after every sweep and must not increase beyond round-off.
///
/// Whenever a sweep leaves the support and signs unchanged, the stationarity
/// system restricted to that support is solved directly (see [`polish`]); the
/// result replaces the iterate only if it keeps the signs and does not raise
/// the objective. If the sweeps have not settled after `HOMOTOPY_AFTER`, the
/// piecewise-linear solution path is followed once from `λ_max` down to `λ`
/// (see [`homotopy`]) and accepted under the same objective rule.
fn coordinate_descent(
    problem: &RegProblem,
    opts: &RegOptions,
    warm: Option<&[f64]>,
) -> Result<CdResult> {
    let a = problem.a;
    let cols = a.cols();
    let lambda = problem.lambda;
    // column-major copy for cache-friendly column access
    let columns: Vec<Vec<f64>> = (0..cols).map(|p| a.column(p)).collect();
    let sq_norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();

    let mut c = match warm {
        Some(w) if w.len() == cols => w.to_vec(),
        Some(_) => return Err(Error::Shape("warm start has the wrong length".into())),
        None => vec![0.0; cols],
    };
    let recompute = |c: &[f64]| -> Vec<f64> {
        a.apply(c)
            .iter()
            .zip(problem.y.as_vec())
            .map(|(p, t)| t - p)
            .collect()
    };
    let mut r = recompute(&c);
    let mut objective = square_objective(&r, &c, lambda);
    let signs = |c: &[f64]| -> Vec<i8> {
        c.iter()
            .map(|v| {
                if *v > 0.0 {
                    1
                } else if *v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    };
    let mut pattern = signs(&c);

    for sweep in 1..=opts.max_sweeps {
        let mut max_change = 0.0f64;
        for p in 0..cols {
            let norm = sq_norms[p];
            if norm == 0.0 {
                if c[p] != 0.0 {
                    max_change = max_change.max(c[p].abs());
                    c[p] = 0.0;
                }
                continue;
            }
            let col = &columns[p];
            let rho: f64 = col.iter().zip(&r).map(|(a, v)| a * v).sum::<f64>() + norm * c[p];
            let new = soft_threshold(rho, lambda) / norm;
            let delta = new - c[p];
            if delta != 0.0 {
                for (ri, ai) in r.iter_mut().zip(col) {
                    *ri -= ai * delta;
                }
                c[p] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if sweep % 64 == 0 {
            r = recompute(&c);
        }
        let next = square_objective(&r, &c, lambda);
        if next > objective + 1e-12 * objective.abs().max(1e-300) + 1e-300 {
            return Err(Error::Solver(format!(
                "coordinate descent objective increased in sweep {sweep}: {objective:e} -> {next:e}"
            )));
        }
        objective = next;
        if max_change <= opts.tol {
            return Ok(CdResult {
                coefficients: c,
                sweeps: sweep,
                converged: true,
            });
        }
        if sweep == HOMOTOPY_AFTER {
            if let Some(exact) = homotopy(problem, &columns) {
                let er = recompute(&exact);
                let eo = square_objective(&er, &exact, lambda);
                if eo <= objective {
                    c = exact;
                    r = er;
                    objective = eo;
                }
            }
        }
        let now = signs(&c);
        if now == pattern {
            if let Some(polished) = polish(problem, &columns, &c) {
                let pr = recompute(&polished);
                let po = square_objective(&pr, &polished, lambda);
                if po <= objective {
                    c = polished;
                    r = pr;
                    objective = po;
                }
            }
        }
        pattern = now;
    }
    Ok(CdResult {
        coefficients: c,
        sweeps: opts.max_sweeps,
        converged: false,
    })
}

/// Solves `A_Sᵀ A_S c_S = A_Sᵀ y - λ s_S` on the current support `S` with its
/// signs `s_S`. Returns `None` if the system is singular or the solution
/// changes a sign.
fn polish(problem: &RegProblem, columns: &[Vec<f64>], c: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..c.len()).filter(|&p| c[p] != 0.0).collect();
    let k = support.len();
    if k == 0 || k > problem.a.rows() {
        return None;
    }
    let y = problem.y.as_vec();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        columns[support[i]]
            .iter()
            .zip(&columns[support[j]])
            .map(|(u, v)| u * v)
            .sum::<f64>()
    });
    let rhs = nalgebra::DVector::from_fn(k, |i, _| {
        let p = support[i];
        columns[p].iter().zip(y).map(|(u, v)| u * v).sum::<f64>() - problem.lambda * c[p].signum()
    });
    let sol = gram.lu().solve(&rhs)?;
    let mut out = vec![0.0; c.len()];
    for (i, &p) in support.iter().enumerate() {
        let v = sol[i];
        if !v.is_finite() || v.signum() != c[p].signum() || v == 0.0 {
            return None;
        }
        out[p] = v;
    }
    Some(out)
}

const HOMOTOPY_AFTER: usize = 200;

/// Follows the square-loss solution path from `c = 0` at `λ_max` down to
/// `problem.lambda`. Between breakpoints the active coefficients move along
/// `(A_Sᵀ A_S)⁻¹ s_S`; a breakpoint is a column reaching the correlation
/// level or an active coefficient reaching zero. Returns `None` when the
/// active set becomes rank deficient or the breakpoint budget runs out.
fn homotopy(problem: &RegProblem, columns: &[Vec<f64>]) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};

    let n = problem.a.rows();
    let cols = columns.len();
    let y = problem.y.as_vec();
    let target = problem.lambda;
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();

    let corr: Vec<f64> = columns.iter().map(|col| dot(col, y)).collect();
    let (first, level) = corr
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    let mut c = vec![0.0; cols];
    if level <= target {
        return Some(c);
    }
    let mut level = level;
    let mut active = vec![first];
    let mut sign = vec![corr[first].signum()];
    let mut last_left: Option<usize> = None;

    for _ in 0..(50 * cols).max(100) {
        let k = active.len();
        if k > n {
            return None;
        }
        let a_s = DMatrix::from_fn(n, k, |i, j| columns[active[j]][i]);
        let qr = a_s.clone().qr();
        let rmat = qr.r();
        if (0..k).any(|i| rmat[(i, i)] == 0.0 || !rmat[(i, i)].is_finite()) {
            return None;
        }
        let s = DVector::from_column_slice(&sign);
        let z = rmat.tr_solve_upper_triangular(&s)?;
        let d = rmat.solve_upper_triangular(&z)?;
        let u: Vec<f64> = (&a_s * &d).iter().copied().collect();

        let mut resid = y.to_vec();
        for &p in &active {
            for (ri, ai) in resid.iter_mut().zip(&columns[p]) {
                *ri -= ai * c[p];
            }
        }

        let mut step = level - target;
        let mut event: Option<(usize, bool)> = None;
        for p in 0..cols {
            if active.contains(&p) || Some(p) == last_left {
                continue;
            }
            let cp = dot(&columns[p], &resid);
            let vp = dot(&columns[p], &u);
            for (num, den) in [(level - cp, 1.0 - vp), (level + cp, 1.0 + vp)] {
                if den > 0.0 {
                    let g = num.max(0.0) / den;
                    if g < step {
                        step = g;
                        event = Some((p, true));
                    }
                }
            }
        }
        for (j, &p) in active.iter().enumerate() {
            if d[j] != 0.0 {
                let g = -c[p] / d[j];
                if g > 0.0 && g < step {
                    step = g;
                    event = Some((j, false));
                }
            }
        }

        for (j, &p) in active.iter().enumerate() {
            c[p] += step * d[j];
        }
        level -= step;
        match event {
            None => return Some(c),
            Some((p, true)) => {
                let cp = dot(&columns[p], &resid) - step * dot(&columns[p], &u);
                active.push(p);
                sign.push(if cp >= 0.0 { 1.0 } else { -1.0 });
                last_left = None;
            }
            Some((j, false)) => {
                let p = active.remove(j);
                sign.remove(j);
                c[p] = 0.0;
                last_left = Some(p);
            }
        }
    }
    None
}

/// Variables `[c⁺, c⁻, r⁺, r⁻] >= 0` with `A(c⁺ - c⁻) + r⁺ - r⁻ = vec(Y)`.
fn absolute_loss_lp(problem: &RegProblem, tol: f64) -> Result<(Vec<f64>, f64)> {
    let a = problem.a;
    let (rows, cols) = (a.rows(), a.cols());
    let n = 2 * cols + 2 * rows;
    let mut a_eq = vec![0.0; rows * n];
    for r in 0..rows {
        let row = a.row(r);
        for p in 0..cols {
            a_eq[r * n + p] = row[p];
            a_eq[r * n + cols + p] = -row[p];
        }
        a_eq[r * n + 2 * cols + r] = 1.0;
        a_eq[r * n + 2 * cols + rows + r] = -1.0;
    }
    let mut objective = vec![problem.lambda; 2 * cols];
    objective.extend(std::iter::repeat_n(1.0, 2 * rows));
    let lp = LinearProgram {
        objective,
        a_eq,
        b_eq: problem.y.as_vec().to_vec(),
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
    };
    let sol = solve_lp(&lp, tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!(
            "absolute-loss program ended {:?}",
            sol.status
        )));
    }
    let gap = (sol.objective - sol.dual_objective(&lp)).abs();
    Ok(((0..cols).map(|p| sol.x[p] - sol.x[cols + p]).collect(), gap))
}

/// Optimality residual of `½‖A c - y‖² + λ‖c‖₁` at `c`. With `r = y - A c`:
/// `max(0, max_p |(Aᵀr)_p| - λ, max_{c_p ≠ 0} |(Aᵀr)_p - λ sign(c_p)|)`.
pub fn kkt_check(c: &[f64], a: &FeatureMatrix, y: &TargetMatrix, lambda: f64) -> f64 {
    let pred = a.apply(c);
    let r: Vec<f64> = y.as_vec().iter().zip(&pred).map(|(t, p)| t - p).collect();
    let corr = a.apply_transpose(&r);
    let mut worst = 0.0f64;
    for (p, &g) in corr.iter().enumerate() {
        worst = worst.max(g.abs() - lambda);
        if c[p] != 0.0 {
            worst = worst.max((g - lambda * c[p].signum()).abs());
        }
    }
    worst.max(0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Consistency {
    pub gap: f64,
    /// The measure predicts zero at every data point; the gap is 0 by definition.
    pub trivial: bool,
    pub mni: Option<MniSolution>,
}

/// Re-solves minimum norm interpolation with targets replaced by the
/// predictions of `mu` at the data points and returns `|tv(μ) - C*(Z)|`.
pub fn mni_consistency(
    mu: &DiscreteMeasure,
    a: &FeatureMatrix,
    cands: &CandidateSet,
    opts: &MniOptions,
) -> Result<Consistency> {
    let index = cands.index();
    let mut coeffs = vec![0.0; a.cols()];
    for (i, atom) in mu.atoms().iter().enumerate() {
        let p = *index.get(&bits(&atom.theta)).ok_or_else(|| {
            Error::Structural(format!("atom {i} is not one of the candidate parameters"))
        })?;
        coeffs[p] += atom.coeff;
    }
    let z = TargetMatrix::new(a.outputs(), a.points(), a.apply(&coeffs))?;
    if mu.is_empty() || z.is_zero() {
        return Ok(Consistency {
            gap: 0.0,
            trivial: true,
            mni: None,
        });
    }
    let sol = solve_mni(a, &z, cands, opts)?;
    Ok(Consistency {
        gap: (mu.tv_norm() - sol.certificate.cstar).abs(),
        trivial: false,
        mni: Some(sol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub lambda: f64,
    pub loss_value: f64,
    pub tv: f64,
    pub kkt_max_violation: f64,
    pub converged: bool,
}

/// Solves along a strictly descending list of `λ`, warm-starting each square
/// loss solve from the previous solution.
pub fn lambda_path(
    a: &FeatureMatrix,
    y: &TargetMatrix,
    loss: Loss,
    lambdas: &[f64],
    cands: &CandidateSet,
    opts: &RegOptions,
) -> Result<Vec<PathRow>> {
    if lambdas.is_empty() {
        return Err(Error::Input("empty lambda list".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Input("every lambda must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("lambdas must be strictly descending".into()));
    }
    let mut warm: Option<Vec<f64>> = None;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let problem = RegProblem { a, y, lambda, loss };
        let sol = solve_regularized_from(&problem, cands, opts, warm.as_deref())?;
        rows.push(PathRow {
            lambda,
            loss_value: sol.report.loss_value,
            tv: sol.report.tv,
            kkt_max_violation: sol.report.kkt_max_violation,
            converged: sol.report.converged,
        });
        if loss == Loss::Square {
            warm = Some(sol.coefficients);
        }
    }
    Ok(rows)
}
