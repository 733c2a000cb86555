//! Minimum norm interpolation on a candidate set.
//!
//! Two linear programs are solved independently:
//!
//! * the dual, `max Σ c_kj y_j^k` subject to `|Σ c_kj K_k(x_j, θ_p)| <= 1` for
//!   every candidate `p`, which yields the coefficients `ĉ`, the value `C*` and
//!   the certificate `ĝ(θ) = C* Σ ĉ_kj K_k(x_j, θ)`;
//! * the primal, `min Σ |c_p|` subject to `A c = vec(Y)`, whose basic optimal
//!   solution is the sparse measure `Σ c_p δ_{θ_p}`.
//!
//! The dual constraint is an inequality here; with `Y ≠ 0` the optimum sits on
//! the boundary, so nothing is lost. [`verify_representer`] then checks the
//! structure linking the two: equal optimal values, atoms only where `|ĝ|`
//! attains its maximum and with the sign of `ĝ`, `Σ|c| = ‖ĝ‖_∞`, at most `t·m`
//! atoms, and exact interpolation.

use serde::{Deserialize, Serialize};

use crate::candidates::{bits, CandidateSet};
use crate::data::TargetMatrix;
use crate::error::{Error, Result};
use crate::kernel::{rank_check, FeatureMatrix, DEFAULT_RANK_TOL};
use crate::lp::{solve_lp, LinearProgram, LpStatus, DEFAULT_LP_TOL};
use crate::measure::{prune, Atom, DiscreteMeasure, DEFAULT_COEFF_TOL, DEFAULT_MERGE_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MniOptions {
    pub lp_tol: f64,
    pub argmax_tol: f64,
    pub coeff_tol: f64,
    pub merge_tol: f64,
    /// Relative tolerance on `|tv - C*|` and `|Σ|c| - ‖ĝ‖_∞|`, scaled by `max(1, C*)`.
    pub gap_tol: f64,
    /// Tolerance on `‖A c - vec(Y)‖_∞`, scaled by `max(1, ‖Y‖_∞)`.
    pub interp_tol: f64,
    pub rank_tol: f64,
    /// Solve even when the feature matrix is numerically rank deficient.
    pub force: bool,
}

impl Default for MniOptions {
    fn default() -> Self {
        MniOptions {
            lp_tol: DEFAULT_LP_TOL,
            argmax_tol: 1e-6,
            coeff_tol: DEFAULT_COEFF_TOL,
            merge_tol: DEFAULT_MERGE_TOL,
            gap_tol: 1e-8,
            interp_tol: 1e-8,
            rank_tol: DEFAULT_RANK_TOL,
            force: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// `ĉ` as `vec`, entry `(k, j)` at `k·m + j`.
    pub chat: Vec<f64>,
    pub cstar: f64,
    /// `ĝ(θ_p)` for every candidate.
    pub ghat_values: Vec<f64>,
    pub ghat_norm: f64,
}

impl DualCertificate {
    pub fn zero(rows: usize, cols: usize) -> Self {
        DualCertificate {
            chat: vec![0.0; rows],
            cstar: 0.0,
            ghat_values: vec![0.0; cols],
            ghat_norm: 0.0,
        }
    }

    /// `max_p |Σ ĉ_kj A[(k,j), p]|`; at most `1` up to solver tolerance.
    pub fn constraint_max(&self, a: &FeatureMatrix) -> f64 {
        a.apply_transpose(&self.chat)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_shapes(a: &FeatureMatrix, y: &TargetMatrix) -> Result<()> {
    if y.outputs() != a.outputs() || y.points() != a.points() {
        return Err(Error::Shape(format!(
            "targets are {}x{}, feature matrix rows are {}x{}",
            y.outputs(),
            y.points(),
            a.outputs(),
            a.points()
        )));
    }
    Ok(())
}

pub fn solve_dual(a: &FeatureMatrix, y: &TargetMatrix) -> Result<DualCertificate> {
    solve_dual_with_tol(a, y, DEFAULT_LP_TOL)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Variables `[c (free), w (in [-1, 1])]`, one row `Aᵀc - w = 0` per candidate.
/// The program is posed on `A / max|A|` and `y / max|y|` so the solver
/// tolerances act relative to the data; `ĉ` is mapped back afterwards.
pub fn solve_dual_with_tol(
    a: &FeatureMatrix,
    y: &TargetMatrix,
    tol: f64,
) -> Result<DualCertificate> {
    check_shapes(a, y)?;
    if y.is_zero() {
        return Err(Error::ZeroTargets);
    }
    let (rows, cols) = (a.rows(), a.cols());
    let sa = max_abs(a.entries());
    let sy = max_abs(y.as_vec());
    if sa == 0.0 {
        return Err(Error::RankDeficient);
    }
    let n = rows + cols;
    let mut a_eq = vec![0.0; cols * n];
    for p in 0..cols {
        for r in 0..rows {
            a_eq[p * n + r] = a.get(r, p) / sa;
        }
        a_eq[p * n + rows + p] = -1.0;
    }
    let mut objective: Vec<f64> = y.as_vec().iter().map(|v| -v / sy).collect();
    objective.extend(std::iter::repeat_n(0.0, cols));
    let mut lower = vec![f64::NEG_INFINITY; rows];
    lower.extend(std::iter::repeat_n(-1.0, cols));
    let mut upper = vec![f64::INFINITY; rows];
    upper.extend(std::iter::repeat_n(1.0, cols));
    let lp = LinearProgram {
        objective,
        a_eq,
        b_eq: vec![0.0; cols],
        lower,
        upper,
    };
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return Err(Error::RankDeficient),
        LpStatus::Infeasible => {
            return Err(Error::Solver("dual problem reported infeasible".into()))
        }
    }
    let mut chat: Vec<f64> = sol.x[..rows].iter().map(|v| v / sa).collect();
    // pull round-off back inside |Aᵀĉ| <= 1
    let reach = max_abs(&a.apply_transpose(&chat));
    if reach > 1.0 {
        chat.iter_mut().for_each(|v| *v /= reach);
    }
    let cstar: f64 = chat.iter().zip(y.as_vec()).map(|(c, v)| c * v).sum();
    let ghat_values: Vec<f64> = a.apply_transpose(&chat).iter().map(|v| cstar * v).collect();
    let ghat_norm = ghat_values.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
    Ok(DualCertificate {
        chat,
        cstar,
        ghat_values,
        ghat_norm,
    })
}

/// Indices `p` with `|ĝ(θ_p)| >= ‖ĝ‖_∞ (1 - rel_tol)`, ascending. Ties are kept.
pub fn argmax_set(cert: &DualCertificate, rel_tol: f64) -> Result<Vec<usize>> {
    if !(cert.ghat_norm > 0.0) {
        return Err(Error::ZeroCertificate);
    }
    let threshold = cert.ghat_norm * (1.0 - rel_tol);
    Ok(cert
        .ghat_values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= threshold)
        .map(|(p, _)| p)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MniReport {
    pub cstar: f64,
    pub ghat_norm: f64,
    pub tv: f64,
    pub duality_gap: f64,
    /// `|Σ_ℓ |c_ℓ| - ‖ĝ‖_∞|`.
    pub coefficient_sum_gap: f64,
    pub max_interp_residual: f64,
    pub support_in_argmax: bool,
    pub sign_aligned: bool,
    pub atom_count: usize,
    pub atom_bound: usize,
    pub argmax_tol: f64,
    pub duality_ok: bool,
    pub coefficient_sum_ok: bool,
    pub interpolation_ok: bool,
    pub atom_bound_ok: bool,
    /// `Y = 0`: the zero function interpolates and no certificate exists.
    pub trivial: bool,
}

impl MniReport {
    pub fn passed(&self) -> bool {
        self.failed_checks().is_empty()
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        [
            ("duality_gap", self.duality_ok),
            ("coefficient_sum", self.coefficient_sum_ok),
            ("interpolation", self.interpolation_ok),
            ("support_in_argmax", self.support_in_argmax),
            ("sign_aligned", self.sign_aligned),
            ("atom_count", self.atom_bound_ok),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MniSolution {
    pub measure: DiscreteMeasure,
    pub certificate: DualCertificate,
    pub report: MniReport,
    /// Optimal value of the primal L1 program before pruning.
    pub primal_value: f64,
}

pub fn solve_mni(
    a: &FeatureMatrix,
    y: &TargetMatrix,
    cands: &CandidateSet,
    opts: &MniOptions,
) -> Result<MniSolution> {
    check_shapes(a, y)?;
    if a.cols() != cands.len() {
        return Err(Error::Shape(format!(
            "feature matrix has {} columns for {} candidates",
            a.cols(),
            cands.len()
        )));
    }
    if y.is_zero() {
        let measure = DiscreteMeasure::empty(a.spec().clone(), *a.weight());
        let certificate = DualCertificate::zero(a.rows(), a.cols());
        let mut report = verify_representer(&measure, &certificate, a, y, cands, opts)?;
        report.trivial = true;
        return Ok(MniSolution {
            measure,
            certificate,
            report,
            primal_value: 0.0,
        });
    }
    if !opts.force && rank_check(a, opts.rank_tol).deficient {
        return Err(Error::RankDeficient);
    }

    let certificate = solve_dual_with_tol(a, y, opts.lp_tol)?;
    let (coeffs, primal_value) = solve_l1_interpolation(a, y, opts.lp_tol)?;

    let atoms = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(p, &c)| Atom {
            theta: cands.points[p].clone(),
            coeff: c,
        })
        .collect();
    let raw = DiscreteMeasure::new(a.spec().clone(), *a.weight(), atoms)?;
    let measure = prune(&raw, opts.coeff_tol, opts.merge_tol);
    let report = verify_representer(&measure, &certificate, a, y, cands, opts)?;
    Ok(MniSolution {
        measure,
        certificate,
        report,
        primal_value,
    })
}

/// `min Σ|c_p|` subject to `A c = vec(Y)` with `c = c⁺ - c⁻`. Returns the
/// coefficient per candidate and the optimal value. Scaled like
/// [`solve_dual_with_tol`].
pub fn solve_l1_interpolation(
    a: &FeatureMatrix,
    y: &TargetMatrix,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    check_shapes(a, y)?;
    let (rows, cols) = (a.rows(), a.cols());
    if y.is_zero() {
        return Ok((vec![0.0; cols], 0.0));
    }
    let sa = max_abs(a.entries());
    let sy = max_abs(y.as_vec());
    if sa == 0.0 {
        return Err(Error::Solver(
            "targets cannot be interpolated on this candidate set".into(),
        ));
    }
    let n = 2 * cols;
    let mut a_eq = Vec::with_capacity(rows * n);
    for r in 0..rows {
        let row = a.row(r);
        a_eq.extend(row.iter().map(|v| v / sa));
        a_eq.extend(row.iter().map(|v| -v / sa));
    }
    let lp = LinearProgram {
        objective: vec![1.0; n],
        a_eq,
        b_eq: y.as_vec().iter().map(|v| v / sy).collect(),
        lower: vec![0.0; n],
        upper: vec![f64::INFINITY; n],
    };
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Solver(
                "targets cannot be interpolated on this candidate set".into(),
            ))
        }
        LpStatus::Unbounded => return Err(Error::Solver("L1 program reported unbounded".into())),
    }
    let scale = sy / sa;
    let coeffs = (0..cols)
        .map(|p| (sol.x[p] - sol.x[cols + p]) * scale)
        .collect();
    Ok((coeffs, sol.objective * scale))
}

/// Recomputes every report field for `mu` against `cert`. Each atom must be
/// bit-identical to one of the candidates.
pub fn verify_representer(
    mu: &DiscreteMeasure,
    cert: &DualCertificate,
    a: &FeatureMatrix,
    y: &TargetMatrix,
    cands: &CandidateSet,
    opts: &MniOptions,
) -> Result<MniReport> {
    check_shapes(a, y)?;
    if cert.ghat_values.len() != cands.len() || a.cols() != cands.len() {
        return Err(Error::Shape(
            "certificate, matrix and candidates disagree in size".into(),
        ));
    }
    let index = cands.index();
    let mut located = Vec::with_capacity(mu.len());
    for (i, atom) in mu.atoms().iter().enumerate() {
        let p = *index.get(&bits(&atom.theta)).ok_or_else(|| {
            Error::Structural(format!("atom {i} is not one of the candidate parameters"))
        })?;
        located.push((p, atom.coeff));
    }

    let mut coeffs = vec![0.0; a.cols()];
    for &(p, c) in &located {
        coeffs[p] += c;
    }
    let predicted = a.apply(&coeffs);
    let max_interp_residual = predicted
        .iter()
        .zip(y.as_vec())
        .fold(0.0f64, |m, (p, t)| m.max((p - t).abs()));

    let tv: f64 = located.iter().map(|(_, c)| c.abs()).sum();
    let significant: Vec<(usize, f64)> = located
        .iter()
        .copied()
        .filter(|(_, c)| c.abs() > opts.coeff_tol)
        .collect();
    let atom_bound = a.rows();

    let (support_in_argmax, sign_aligned) = if cert.ghat_norm > 0.0 {
        let argmax = argmax_set(cert, opts.argmax_tol)?;
        (
            significant
                .iter()
                .all(|(p, _)| argmax.binary_search(p).is_ok()),
            significant.iter().all(|&(p, c)| {
                c.signum() == cert.ghat_values[p].signum() && cert.ghat_values[p] != 0.0
            }),
        )
    } else {
        (significant.is_empty(), significant.is_empty())
    };

    let scale = cert.cstar.abs().max(1.0);
    let duality_gap = (tv - cert.cstar).abs();
    let coefficient_sum_gap = (tv - cert.ghat_norm).abs();
    Ok(MniReport {
        cstar: cert.cstar,
        ghat_norm: cert.ghat_norm,
        tv,
        duality_gap,
        coefficient_sum_gap,
        max_interp_residual,
        support_in_argmax,
        sign_aligned,
        atom_count: significant.len(),
        atom_bound,
        argmax_tol: opts.argmax_tol,
        duality_ok: duality_gap <= opts.gap_tol * scale,
        coefficient_sum_ok: coefficient_sum_gap <= opts.gap_tol * scale,
        interpolation_ok: max_interp_residual <= opts.interp_tol * y.max_abs().max(1.0),
        atom_bound_ok: significant.len() <= atom_bound,
        trivial: y.is_zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{sample, BoxSpec, SampleMode};
    use crate::data::Dataset;
    use crate::kernel::{feature_matrix, WeightFn};
    use crate::network::{Activation, NetworkSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Instance {
        a: FeatureMatrix,
        y: TargetMatrix,
        cands: CandidateSet,
    }

    fn instance(s: usize, t: usize, m: usize, p: usize, seed: u64) -> Instance {
        let spec = NetworkSpec::new(s, t, vec![2], Activation::Sigmoid).unwrap();
        let w = WeightFn::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = (0..m)
            .map(|_| (0..s).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ys = (0..m)
            .map(|_| (0..t).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let data = Dataset::new(xs, ys).unwrap();
        let b = BoxSpec::default_for(&spec, &w).unwrap();
        let cands = sample(&b, SampleMode::Random(p), seed.wrapping_mul(31)).unwrap();
        let a = feature_matrix(&spec, &w, &data, &cands).unwrap();
        Instance {
            a,
            y: data.target_matrix(),
            cands,
        }
    }

    #[test]
    fn tiny_kernel_values_are_not_rank_deficient() {
        // 17 parameters over the default box: |A| entries far below the LP tolerance
        let spec = NetworkSpec::new(1, 1, vec![3, 2], Activation::Sigmoid).unwrap();
        let w = WeightFn::default();
        let data = Dataset::new(vec![vec![0.4]], vec![vec![-0.7]]).unwrap();
        let b = BoxSpec::default_for(&spec, &w).unwrap();
        let cands = sample(&b, SampleMode::Random(100), 5).unwrap();
        let a = feature_matrix(&spec, &w, &data, &cands).unwrap();
        let amax = a.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(amax < 1e-9);
        let sol = solve_mni(&a, &data.target_matrix(), &cands, &MniOptions::default()).unwrap();
        let expected = 0.7 / amax;
        assert!((sol.certificate.cstar - expected).abs() <= 1e-10 * expected);
        assert!(sol.report.passed());
    }

    #[test]
    fn single_point_closed_form() {
        let inst = instance(1, 1, 1, 60, 4);
        let cert = solve_dual(&inst.a, &inst.y).unwrap();
        let row = inst.a.row(0);
        let (pstar, amax) = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bp, bv), (p, v)| {
                if v.abs() > bv {
                    (p, v.abs())
                } else {
                    (bp, bv)
                }
            });
        let y1 = inst.y.as_vec()[0];
        assert!((cert.cstar - y1.abs() / amax).abs() <= 1e-10 * cert.cstar.max(1.0));
        assert!((cert.chat[0] - y1.signum() / amax).abs() <= 1e-10 * cert.chat[0].abs().max(1.0));

        let sol = solve_mni(&inst.a, &inst.y, &inst.cands, &MniOptions::default()).unwrap();
        assert_eq!(sol.measure.len(), 1);
        let atom = &sol.measure.atoms()[0];
        assert_eq!(atom.theta, inst.cands.points[pstar]);
        // brute force over single-atom interpolants: |c| = |y|/|A[0,p]| is
        // smallest at the column of largest magnitude
        let brute = row
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| (y1 / v).abs())
            .fold(f64::INFINITY, f64::min);
        assert!((atom.coeff.abs() - brute).abs() <= 1e-10 * brute.max(1.0));
        assert!((atom.coeff - y1 / row[pstar]).abs() <= 1e-10 * brute.max(1.0));
    }

    #[test]
    fn scaling_targets_scales_value() {
        let inst = instance(2, 1, 3, 120, 9);
        let c1 = solve_dual(&inst.a, &inst.y).unwrap();
        let c2 = solve_dual(&inst.a, &inst.y.scaled(2.0)).unwrap();
        assert!((c2.cstar - 2.0 * c1.cstar).abs() <= 1e-9 * c1.cstar.max(1.0));
        for (u, v) in c1.chat.iter().zip(&c2.chat) {
            assert!((u - v).abs() <= 1e-9 * u.abs().max(1.0));
        }
    }

    #[test]
    fn dual_value_equals_primal_l1_value() {
        let inst = instance(2, 1, 3, 200, 13);
        let cert = solve_dual(&inst.a, &inst.y).unwrap();
        let (_, primal) = solve_l1_interpolation(&inst.a, &inst.y, DEFAULT_LP_TOL).unwrap();
        assert!((cert.cstar - primal).abs() <= 1e-8 * cert.cstar.max(1.0));
        assert!(cert.constraint_max(&inst.a) <= 1.0 + 1e-8);
        assert!(cert.ghat_norm <= cert.cstar * (1.0 + 1e-8));
    }

    #[test]
    fn zero_targets() {
        let inst = instance(1, 1, 2, 30, 2);
        let zero = inst.y.scaled(0.0);
        assert!(matches!(
            solve_dual(&inst.a, &zero),
            Err(Error::ZeroTargets)
        ));
        let sol = solve_mni(&inst.a, &zero, &inst.cands, &MniOptions::default()).unwrap();
        assert!(sol.measure.is_empty());
        assert_eq!(sol.report.tv, 0.0);
        assert!(sol.report.trivial);
        assert!(sol.report.passed());
        assert!(matches!(
            argmax_set(&sol.certificate, 1e-6),
            Err(Error::ZeroCertificate)
        ));
    }

    #[test]
    fn argmax_examples() {
        let cert = |v: Vec<f64>| DualCertificate {
            chat: vec![],
            cstar: 1.0,
            ghat_norm: v.iter().fold(0.0, |m, x: &f64| m.max(x.abs())),
            ghat_values: v,
        };
        assert_eq!(
            argmax_set(&cert(vec![0.5, 1.0, 0.9999999, -1.0]), 1e-6).unwrap(),
            vec![1, 2, 3]
        );
        assert_eq!(
            argmax_set(&cert(vec![0.3; 4]), 1e-6).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            argmax_set(&cert(vec![0.1, -0.7, 0.5, 0.7]), 0.0).unwrap(),
            vec![1, 3]
        );
    }

    #[test]
    fn seeded_instance_passes_every_check() {
        let inst = instance(2, 1, 3, 300, 21);
        let sol = solve_mni(&inst.a, &inst.y, &inst.cands, &MniOptions::default()).unwrap();
        let r = &sol.report;
        assert!(r.duality_gap <= 1e-8 * r.cstar.max(1.0), "{r:?}");
        assert!(r.support_in_argmax && r.sign_aligned, "{r:?}");
        assert!(r.atom_count <= 3);
        assert!(r.passed(), "{:?}", r.failed_checks());

        // independent re-solve with permuted columns reaches the same value
        let mut order: Vec<usize> = (0..inst.cands.len()).collect();
        order.reverse();
        let permuted = inst.a.select_columns(&order);
        let (_, value) = solve_l1_interpolation(&permuted, &inst.y, DEFAULT_LP_TOL).unwrap();
        assert!((value - r.tv).abs() <= 1e-10 * r.tv.max(1.0));
    }

    #[test]
    fn constructed_violations_are_caught() {
        let inst = instance(2, 2, 2, 200, 5);
        let opts = MniOptions::default();
        let sol = solve_mni(&inst.a, &inst.y, &inst.cands, &opts).unwrap();
        assert!(sol.report.passed());

        let mut atoms = sol.measure.atoms().to_vec();
        atoms[0].coeff = -atoms[0].coeff;
        let flipped =
            DiscreteMeasure::new(sol.measure.spec().clone(), *sol.measure.weight(), atoms).unwrap();
        let r = verify_representer(
            &flipped,
            &sol.certificate,
            &inst.a,
            &inst.y,
            &inst.cands,
            &opts,
        )
        .unwrap();
        assert!(!r.sign_aligned);

        let doubled = sol.measure.scaled(2.0);
        let r = verify_representer(
            &doubled,
            &sol.certificate,
            &inst.a,
            &inst.y,
            &inst.cands,
            &opts,
        )
        .unwrap();
        assert!(!r.duality_ok);
        assert!(
            (r.duality_gap - sol.certificate.cstar).abs() <= 1e-8 * sol.certificate.cstar.max(1.0)
        );

        let stray = DiscreteMeasure::new(
            sol.measure.spec().clone(),
            *sol.measure.weight(),
            vec![Atom {
                theta: vec![0.123; inst.cands.bounds.dim()],
                coeff: 1.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            verify_representer(
                &stray,
                &sol.certificate,
                &inst.a,
                &inst.y,
                &inst.cands,
                &opts
            ),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn rank_deficiency_is_rejected_unless_forced() {
        let inst = instance(1, 1, 2, 40, 3);
        // duplicate the first row: the second data point now mirrors the first
        let rows = inst.a.rows();
        let mut entries = inst.a.entries().to_vec();
        let first = inst.a.row(0).to_vec();
        entries[inst.a.cols()..2 * inst.a.cols()].copy_from_slice(&first);
        let a = FeatureMatrix::from_rows(
            inst.a.spec().clone(),
            *inst.a.weight(),
            1,
            rows,
            inst.a.cols(),
            entries,
        )
        .unwrap();
        let y = TargetMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            solve_mni(&a, &y, &inst.cands, &MniOptions::default()),
            Err(Error::RankDeficient)
        ));
        let forced = MniOptions {
            force: true,
            ..MniOptions::default()
        };
        assert!(solve_mni(&a, &y, &inst.cands, &forced).is_ok());
    }
}
