//! Dense two-phase primal simplex for
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  l <= x <= u
//! ```
//!
//! with bounds that may be infinite. Bounded variables are handled directly
//! (nonbasic at a bound, bound flips in the ratio test); free nonbasic
//! variables sit at zero. Entering and leaving choices follow Bland's rule, so
//! the pivot sequence is deterministic and cannot cycle. The basis inverse is
//! kept explicitly and rebuilt from the original columns every
//! [`REFACTOR_EVERY`] pivots and before optimality is declared.
//!
//! Optimal solutions are basic: at most `rows` variables lie strictly between
//! their bounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_LP_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Row-major `rows x objective.len()`.
    pub a_eq: Vec<f64>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b_eq.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.a_eq.len() != m * n {
            return Err(Error::Shape(format!(
                "constraint matrix has {} entries, expected {m}x{n}",
                self.a_eq.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Shape(
                "bound vectors must match the objective".into(),
            ));
        }
        if self
            .objective
            .iter()
            .chain(&self.a_eq)
            .chain(&self.b_eq)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("linear program data".into()));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::Input(format!(
                    "variable {j} has invalid bounds [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// `‖A x - b‖_∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let n = self.num_vars();
        (0..self.num_rows())
            .map(|i| {
                let ax: f64 = self.a_eq[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a * v)
                    .sum();
                (ax - self.b_eq[i]).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Structural variables in the final basis, one per row (rows whose basic
    /// variable is an artificial of a redundant equation are omitted).
    pub basis: Vec<usize>,
    /// Equality multipliers `y` with `d = c - Aᵀy`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            basis: Vec::new(),
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            iterations,
        }
    }

    /// Dual objective of the bounded problem built from `duals` and the
    /// positive/negative parts of the reduced costs.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let by: f64 = lp.b_eq.iter().zip(&self.duals).map(|(b, y)| b * y).sum();
        let bound_terms: f64 = self
            .reduced_costs
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                if d > 0.0 && lp.lower[j].is_finite() {
                    d * lp.lower[j]
                } else if d < 0.0 && lp.upper[j].is_finite() {
                    d * lp.upper[j]
                } else {
                    0.0
                }
            })
            .sum();
        by + bound_terms
    }

    /// Number of variables strictly inside their bounds (beyond `tol`).
    pub fn interior_count(&self, lp: &LinearProgram, tol: f64) -> usize {
        self.x
            .iter()
            .enumerate()
            .filter(|(j, &v)| v > lp.lower[*j] + tol && v < lp.upper[*j] - tol)
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

struct Tableau<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n: usize,
    /// `n` structural columns followed by one artificial per row.
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    tol: f64,
    max_iterations: usize,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved,
}

impl<'a> Tableau<'a> {
    fn col(&self, j: usize, i: usize) -> f64 {
        if j < self.n {
            self.lp.a_eq[i * self.n + j]
        } else if j - self.n == i {
            self.art_sign[i]
        } else {
            0.0
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.col(j, i)).collect()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n
    }

    fn new(lp: &'a LinearProgram, tol: f64) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_vars());
        let total = n + m;
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        lower.extend(std::iter::repeat_n(0.0, m));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));

        let mut x = vec![0.0; total];
        let mut state = vec![VarState::Zero; total];
        for j in 0..n {
            if lower[j].is_finite() {
                x[j] = lower[j];
                state[j] = VarState::AtLower;
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                state[j] = VarState::AtUpper;
            }
        }

        // residual of the nonbasic starting point
        let mut resid = lp.b_eq.clone();
        for (i, r) in resid.iter_mut().enumerate() {
            for j in 0..n {
                *r -= lp.a_eq[i * n + j] * x[j];
            }
        }

        // Crash: a structural column that is a multiple of e_i and can absorb
        // the residual of row i within its bounds replaces the artificial.
        let mut basis = vec![usize::MAX; m];
        let mut art_sign = vec![1.0; m];
        for j in 0..n {
            if lower[j] == upper[j] {
                continue;
            }
            let mut row = None;
            let mut single = true;
            for i in 0..m {
                if lp.a_eq[i * n + j] != 0.0 {
                    if row.is_some() {
                        single = false;
                        break;
                    }
                    row = Some(i);
                }
            }
            let Some(i) = row else { continue };
            if !single || basis[i] != usize::MAX {
                continue;
            }
            let a = lp.a_eq[i * n + j];
            let value = x[j] + resid[i] / a;
            if value >= lower[j] - tol && value <= upper[j] + tol {
                basis[i] = j;
                x[j] = value.clamp(lower[j], upper[j]);
                resid[i] = 0.0;
                state[j] = VarState::Basic(i);
            }
        }
        for i in 0..m {
            let a = n + i;
            if basis[i] == usize::MAX {
                art_sign[i] = if resid[i] < 0.0 { -1.0 } else { 1.0 };
                basis[i] = a;
                x[a] = resid[i].abs();
                state[a] = VarState::Basic(i);
            } else {
                // unused artificial: fixed at zero
                upper[a] = 0.0;
                state[a] = VarState::AtLower;
            }
        }

        let mut t = Tableau {
            lp,
            m,
            n,
            lower,
            upper,
            cost: vec![0.0; total],
            art_sign,
            x,
            state,
            basis,
            binv: Vec::new(),
            pivots_since_refactor: 0,
            iterations: 0,
            tol,
            max_iterations: 50_000 + 50 * (m + n),
        };
        t.binv = vec![0.0; m * m];
        t
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let bmat = DMatrix::from_fn(m, m, |i, r| self.col(self.basis[r], i));
        let lu = bmat.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Solver("basis matrix became singular".into()))?;
        for r in 0..m {
            for i in 0..m {
                self.binv[r * m + i] = inv[(r, i)];
            }
        }
        // x_B = B⁻¹ (b - N x_N)
        let mut rhs = self.lp.b_eq.clone();
        for j in 0..self.n + m {
            if matches!(self.state[j], VarState::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= self.col(j, i) * self.x[j];
            }
        }
        let rhs = DVector::from_vec(rhs);
        let mut xb = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solver("basis matrix became singular".into()))?;
        // one step of iterative refinement
        if let Some(fix) = lu.solve(&(&rhs - &bmat * &xb)) {
            xb += fix;
        }
        for r in 0..m {
            self.x[self.basis[r]] = xb[r];
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += cb * self.binv[r * m + i];
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        if j < self.n {
            for (i, yi) in y.iter().enumerate() {
                d -= yi * self.lp.a_eq[i * self.n + j];
            }
        } else {
            d -= y[j - self.n] * self.art_sign[j - self.n];
        }
        d
    }

    /// Bland: the lowest-index nonbasic variable whose reduced cost improves.
    fn entering(&self, y: &[f64], allow_artificial: bool) -> Option<(usize, f64)> {
        let total = self.n + self.m;
        for j in 0..total {
            if self.is_artificial(j) && !allow_artificial {
                break;
            }
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                state => {
                    let d = self.reduced_cost(j, y);
                    let thresh = self.tol * self.cost[j].abs().max(1.0);
                    match state {
                        VarState::AtLower if d < -thresh => 1.0,
                        VarState::AtUpper if d > thresh => -1.0,
                        VarState::Zero if d < -thresh => 1.0,
                        VarState::Zero if d > thresh => -1.0,
                        _ => continue,
                    }
                }
            };
            return Some((j, dir));
        }
        None
    }

    fn step(&mut self, allow_artificial: bool) -> Result<StepOutcome> {
        let y = self.duals();
        let Some((q, dir)) = self.entering(&y, allow_artificial) else {
            return Ok(StepOutcome::Optimal);
        };
        let m = self.m;
        let aq = self.column(q);
        let alpha: Vec<f64> = (0..m)
            .map(|r| (0..m).map(|i| self.binv[r * m + i] * aq[i]).sum())
            .collect();

        // ratio test; ties resolved toward the lowest variable index
        let mut step = self.upper[q] - self.lower[q]; // bound flip, inf if unboxed
        let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
        for r in 0..m {
            if alpha[r].abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let rate = -dir * alpha[r];
            let (limit, to_upper) = if rate < 0.0 && self.lower[var].is_finite() {
                ((self.x[var] - self.lower[var]) / -rate, false)
            } else if rate > 0.0 && self.upper[var].is_finite() {
                ((self.upper[var] - self.x[var]) / rate, true)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let better = if !step.is_finite() {
                true
            } else {
                let tie = 1e-12 * step.max(1.0);
                if limit < step - tie {
                    true
                } else if (limit - step).abs() <= tie {
                    match leave {
                        Some((lr, _)) => var < self.basis[lr],
                        None => var < q,
                    }
                } else {
                    false
                }
            };
            if better {
                step = limit;
                leave = Some((r, to_upper));
            }
        }
        if step == f64::INFINITY {
            return Ok(StepOutcome::Unbounded);
        }

        self.x[q] += dir * step;
        for r in 0..m {
            let var = self.basis[r];
            self.x[var] -= dir * step * alpha[r];
        }
        self.iterations += 1;

        match leave {
            None => {
                // bound flip
                let to_upper = dir > 0.0;
                self.x[q] = if to_upper {
                    self.upper[q]
                } else {
                    self.lower[q]
                };
                self.state[q] = if to_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some((r, to_upper)) => {
                let out = self.basis[r];
                self.x[out] = if to_upper {
                    self.upper[out]
                } else {
                    self.lower[out]
                };
                self.state[out] = if to_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                self.basis[r] = q;
                self.state[q] = VarState::Basic(r);
                self.pivot_update(r, &alpha);
                if self.pivots_since_refactor >= REFACTOR_EVERY {
                    self.refactor()?;
                }
            }
        }
        Ok(StepOutcome::Moved)
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for i in 0..m {
            self.binv[r * m + i] /= piv;
        }
        for k in 0..m {
            if k == r || alpha[k] == 0.0 {
                continue;
            }
            let f = alpha[k];
            for i in 0..m {
                self.binv[k * m + i] -= f * self.binv[r * m + i];
            }
        }
        self.pivots_since_refactor += 1;
    }

    /// Iterates until no improving column remains after a fresh refactor.
    fn run(&mut self, allow_artificial: bool) -> Result<StepOutcome> {
        loop {
            if self.iterations > self.max_iterations {
                return Err(Error::Solver(format!(
                    "iteration limit {} exceeded",
                    self.max_iterations
                )));
            }
            match self.step(allow_artificial)? {
                StepOutcome::Moved => continue,
                StepOutcome::Unbounded => return Ok(StepOutcome::Unbounded),
                StepOutcome::Optimal => {
                    if self.pivots_since_refactor == 0 {
                        return Ok(StepOutcome::Optimal);
                    }
                    self.refactor()?;
                    if self.entering(&self.duals(), allow_artificial).is_none() {
                        return Ok(StepOutcome::Optimal);
                    }
                }
            }
        }
    }

    /// Pivots basic artificials (all at zero after phase one) out of the
    /// basis where some structural column has a usable entry in their row.
    fn expel_artificials(&mut self) -> Result<()> {
        let m = self.m;
        for r in 0..m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut chosen = None;
            for j in 0..self.n {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let v: f64 = (0..m).map(|i| row[i] * self.lp.a_eq[i * self.n + j]).sum();
                if v.abs() > 1e-9 {
                    chosen = Some(j);
                    break;
                }
            }
            if let Some(q) = chosen {
                let aq = self.column(q);
                let alpha: Vec<f64> = (0..m)
                    .map(|k| (0..m).map(|i| self.binv[k * m + i] * aq[i]).sum())
                    .collect();
                let out = self.basis[r];
                self.x[out] = 0.0;
                self.state[out] = VarState::AtLower;
                self.basis[r] = q;
                self.state[q] = VarState::Basic(r);
                self.pivot_update(r, &alpha);
                self.iterations += 1;
            }
        }
        self.refactor()
    }
}

/// Solves the program. Infeasibility and unboundedness are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input and
/// numerical breakdown.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    lp.validate()?;
    let (m, n) = (lp.num_rows(), lp.num_vars());
    let mut t = Tableau::new(lp, tol);
    t.refactor()?;

    let needs_phase_one = (0..m).any(|i| t.basis[i] >= n);
    if needs_phase_one {
        for j in 0..n + m {
            t.cost[j] = if j >= n { 1.0 } else { 0.0 };
        }
        if let StepOutcome::Unbounded = t.run(true)? {
            return Err(Error::Solver("phase one reported unbounded".into()));
        }
        let infeas: f64 = (n..n + m).map(|j| t.x[j].abs()).sum();
        let scale = lp.b_eq.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if infeas > tol * scale * (m as f64).max(1.0) {
            return Ok(LpSolution::failed(LpStatus::Infeasible, n, m, t.iterations));
        }
        t.expel_artificials()?;
    }
    for j in n..n + m {
        // artificials never re-enter
        t.upper[j] = 0.0;
        if !matches!(t.state[j], VarState::Basic(_)) {
            t.x[j] = 0.0;
            t.state[j] = VarState::AtLower;
        }
    }
    for j in 0..n + m {
        t.cost[j] = if j < n { lp.objective[j] } else { 0.0 };
    }
    if let StepOutcome::Unbounded = t.run(false)? {
        return Ok(LpSolution::failed(LpStatus::Unbounded, n, m, t.iterations));
    }

    let y = t.duals();
    let reduced: Vec<f64> = (0..n).map(|j| t.reduced_cost(j, &y)).collect();
    let mut x = t.x[..n].to_vec();
    for j in 0..n {
        if !matches!(t.state[j], VarState::Basic(_)) {
            continue;
        }
        // snap round-off below tolerance back onto the bounds
        if x[j] < lp.lower[j] && x[j] >= lp.lower[j] - tol {
            x[j] = lp.lower[j];
        } else if x[j] > lp.upper[j] && x[j] <= lp.upper[j] + tol {
            x[j] = lp.upper[j];
        }
    }
    // round-off in a row grows with the magnitude of its terms
    let scale = (0..m)
        .map(|i| {
            let row = &lp.a_eq[i * n..(i + 1) * n];
            let mass: f64 = row.iter().zip(&x).map(|(a, v)| (a * v).abs()).sum();
            mass.max(lp.b_eq[i].abs())
        })
        .fold(1.0f64, f64::max);
    let resid = lp.residual(&x);
    if resid > tol * scale * 10.0 {
        return Err(Error::Solver(format!(
            "final primal residual {resid:.3e} exceeds tolerance"
        )));
    }
    let bound_violation = x
        .iter()
        .enumerate()
        .map(|(j, &v)| (lp.lower[j] - v).max(v - lp.upper[j]).max(0.0))
        .fold(0.0, f64::max);
    let b_scale = lp.b_eq.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if bound_violation > tol * b_scale * 10.0 {
        return Err(Error::Solver(format!(
            "final bound violation {bound_violation:.3e} exceeds tolerance"
        )));
    }
    let basis = t.basis.iter().copied().filter(|&j| j < n).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        basis,
        duals: y,
        reduced_costs: reduced,
        iterations: t.iterations,
    })
}
