//! Dense linear-programming engine returning vertex (basic) optimal solutions.
//!
//! Two-phase tableau simplex with Bland's rule, so termination is guaranteed
//! under degeneracy and identical inputs always produce identical solutions.
//! A lazy-constraint driver ([`solve_with_separation`]) grows a base LP with
//! rows produced by a separation oracle until the oracle is satisfied.

use thiserror::Error;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// Solver status of an LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Numerical tolerances and caps, kept configurable because the algorithms
/// that sit on top of this engine are exact in theory and only meet floating
/// point here.
#[derive(Debug, Clone)]
pub struct LpConfig {
    /// Constraint satisfaction tolerance.
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub cost_tol: f64,
    /// Distance from an integer below which a value is treated as integral.
    pub int_tol: f64,
    /// Maximum rounds of the separation loop before giving up.
    pub max_separation_rounds: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feas_tol: 1e-7,
            cost_tol: 1e-9,
            int_tol: 1e-6,
            max_separation_rounds: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
struct VarDef {
    name: String,
    lo: f64,
    hi: f64,
    obj: f64,
}

/// A named linear constraint over the LP's variables.
#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    /// Sparse coefficients as (variable index, value) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Row { name: name.into(), coeffs, sense, rhs }
    }

    /// Signed violation of this row at `values` (positive means violated).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().map(|&(i, c)| c * values[i]).sum();
        match self.sense {
            RowSense::Le => lhs - self.rhs,
            RowSense::Ge => self.rhs - lhs,
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A dense LP with box-bounded variables and named rows.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    sense: Sense,
    vars: Vec<VarDef>,
    rows: Vec<Row>,
}

/// Result of a solve. `values` are in the original variable space.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Rows satisfied with equality at the solution (within `feas_tol`).
    pub tight_rows: Vec<bool>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("separation loop exceeded {0} rounds")]
    IterationLimitExceeded(usize),
    #[error("separation oracle returned a row violated by only {0:.3e}")]
    StalledOracle(f64),
    #[error("malformed LP: {0}")]
    BadProgram(String),
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram { sense, vars: Vec::new(), rows: Vec::new() }
    }

    /// Adds a variable with bounds `[lo, hi]` and objective coefficient `obj`.
    /// All LPs in this crate use finite bounds (typically `[0, 1]`).
    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, obj: f64) -> usize {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "variable bounds must be finite");
        self.vars.push(VarDef { name: name.into(), lo, hi, obj });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, row: Row) {
        for &(i, _) in &row.coeffs {
            assert!(i < self.vars.len(), "row references unknown variable");
        }
        self.rows.push(row);
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_bounds(&self, i: usize) -> (f64, f64) {
        (self.vars[i].lo, self.vars[i].hi)
    }

    pub fn objective_coefficient(&self, i: usize) -> f64 {
        self.vars[i].obj
    }

    /// Dumps the program in CPLEX LP text format for external cross-checking.
    pub fn to_lp_format(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        for v in &self.vars {
            if v.obj != 0.0 {
                let _ = write!(
                    out,
                    " {}{} {}",
                    if v.obj >= 0.0 { "+" } else { "-" },
                    v.obj.abs(),
                    sanitize(&v.name)
                );
            }
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{}_{}:", r, sanitize(&row.name));
            for &(i, c) in &row.coeffs {
                let _ = write!(
                    out,
                    " {}{} {}",
                    if c >= 0.0 { "+" } else { "-" },
                    c.abs(),
                    sanitize(&self.vars[i].name)
                );
            }
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, " {} {}", op, row.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, " {} <= {} <= {}", v.lo, sanitize(&v.name), v.hi);
        }
        out.push_str("End\n");
        out
    }

    /// Solves to a basic (vertex) optimum with Bland's rule.
    pub fn solve(&self, cfg: &LpConfig) -> LpSolution {
        let tab = Tableau::build(self);
        let (status, shifted) = tab.run(cfg);
        let values: Vec<f64> = match &shifted {
            Some(x) => self.vars.iter().enumerate().map(|(i, v)| v.lo + x[i]).collect(),
            None => vec![f64::NAN; self.vars.len()],
        };
        let objective = if status == LpStatus::Optimal {
            self.vars.iter().enumerate().map(|(i, v)| v.obj * values[i]).sum()
        } else {
            f64::NAN
        };
        let tight_rows = if status == LpStatus::Optimal {
            self.rows.iter().map(|r| r.violation(&values).abs() <= cfg.feas_tol || matches!(r.sense, RowSense::Eq)).collect()
        } else {
            vec![false; self.rows.len()]
        };
        LpSolution { status, values, objective, tight_rows }
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Repeatedly solves `base`, asking `oracle` for a violated row at each
/// optimum and re-solving with the row added, until the oracle returns
/// `None`. The oracle must only return rows violated by more than
/// `cfg.feas_tol` at the queried point.
pub fn solve_with_separation<F>(
    base: &LinearProgram,
    cfg: &LpConfig,
    mut oracle: F,
) -> Result<LpSolution, LpError>
where
    F: FnMut(&[f64]) -> Option<Row>,
{
    let mut lp = base.clone();
    for _ in 0..cfg.max_separation_rounds {
        let sol = lp.solve(cfg);
        if sol.status != LpStatus::Optimal {
            return Ok(sol);
        }
        match oracle(&sol.values) {
            None => return Ok(sol),
            Some(row) => {
                let v = row.violation(&sol.values);
                if v <= cfg.feas_tol {
                    return Err(LpError::StalledOracle(v));
                }
                lp.add_row(row);
            }
        }
    }
    Err(LpError::IterationLimitExceeded(cfg.max_separation_rounds))
}

/// Checks that `values` is a vertex of the constraint polytope: the tight
/// constraints (rows and variable bounds) must span the full variable space.
pub fn is_vertex(lp: &LinearProgram, values: &[f64], tol: f64) -> bool {
    let n = lp.num_vars();
    let mut tight: Vec<Vec<f64>> = Vec::new();
    for row in &lp.rows {
        let lhs: f64 = row.coeffs.iter().map(|&(i, c)| c * values[i]).sum();
        let is_tight = match row.sense {
            RowSense::Eq => true,
            _ => (lhs - row.rhs).abs() <= tol,
        };
        if is_tight {
            let mut dense = vec![0.0; n];
            for &(i, c) in &row.coeffs {
                dense[i] += c;
            }
            tight.push(dense);
        }
    }
    for (i, v) in lp.vars.iter().enumerate() {
        if (values[i] - v.lo).abs() <= tol || (values[i] - v.hi).abs() <= tol {
            let mut dense = vec![0.0; n];
            dense[i] = 1.0;
            tight.push(dense);
        }
    }
    matrix_rank(&mut tight, 1e-9) >= n
}

/// Row rank by Gaussian elimination with partial pivoting.
fn matrix_rank(rows: &mut [Vec<f64>], pivot_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        // pick the largest pivot in this column
        let mut best = rank;
        let mut best_abs = 0.0;
        for r in rank..rows.len() {
            let a = rows[r][col].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if best_abs <= pivot_tol {
            continue;
        }
        rows.swap(rank, best);
        let piv = rows[rank][col];
        for r in 0..rows.len() {
            if r != rank && rows[r][col].abs() > 0.0 {
                let f = rows[r][col] / piv;
                for c in col..ncols {
                    let delta = f * rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Two-phase dense tableau simplex over the shifted problem (all variables
/// x' = x - lo >= 0, upper bounds materialized as rows).
struct Tableau {
    /// rows x cols coefficient matrix, rhs in the last column.
    a: Vec<Vec<f64>>,
    /// objective coefficients (phase 2), length = total columns - 1.
    cost: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    n_total: usize,
    n_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.vars.len();
        // shifted rows: structural rows, then upper-bound rows
        struct Std {
            coeffs: Vec<(usize, f64)>,
            sense: RowSense,
            rhs: f64,
        }
        let mut std_rows: Vec<Std> = Vec::with_capacity(lp.rows.len() + n);
        for row in &lp.rows {
            let shift: f64 = row.coeffs.iter().map(|&(i, c)| c * lp.vars[i].lo).sum();
            std_rows.push(Std { coeffs: row.coeffs.clone(), sense: row.sense, rhs: row.rhs - shift });
        }
        for (i, v) in lp.vars.iter().enumerate() {
            let span = v.hi - v.lo;
            std_rows.push(Std { coeffs: vec![(i, 1.0)], sense: RowSense::Le, rhs: span });
        }

        let m = std_rows.len();
        // determine the effective sense of each row after flipping negative rhs
        let mut eff = Vec::with_capacity(m);
        for row in &std_rows {
            let flip = row.rhs < 0.0;
            let sense = match (row.sense, flip) {
                (RowSense::Eq, _) => RowSense::Eq,
                (RowSense::Le, false) | (RowSense::Ge, true) => RowSense::Le,
                (RowSense::Le, true) | (RowSense::Ge, false) => RowSense::Ge,
            };
            eff.push((flip, sense));
        }
        let n_slack = eff.iter().filter(|&&(_, s)| s != RowSense::Eq).count();
        let n_art = eff.iter().filter(|&&(_, s)| s != RowSense::Le).count();
        let n_total = n + n_slack + n_art;

        // columns: structural | slack/surplus | artificials | rhs
        let mut a = vec![vec![0.0; n_total + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut slack_idx = 0;
        let mut art_idx = 0;
        for (r, row) in std_rows.iter().enumerate() {
            let (flip, sense) = eff[r];
            let sign = if flip { -1.0 } else { 1.0 };
            for &(i, c) in &row.coeffs {
                a[r][i] += sign * c;
            }
            a[r][n_total] = sign * row.rhs;
            match sense {
                RowSense::Le => {
                    a[r][n + slack_idx] = 1.0;
                    basis[r] = n + slack_idx;
                    slack_idx += 1;
                }
                RowSense::Ge => {
                    a[r][n + slack_idx] = -1.0;
                    slack_idx += 1;
                    a[r][n + n_slack + art_idx] = 1.0;
                    basis[r] = n + n_slack + art_idx;
                    art_idx += 1;
                }
                RowSense::Eq => {
                    a[r][n + n_slack + art_idx] = 1.0;
                    basis[r] = n + n_slack + art_idx;
                    art_idx += 1;
                }
            }
        }

        let negate_objective = lp.sense == Sense::Maximize;
        let mut cost = vec![0.0; n_total];
        for (i, v) in lp.vars.iter().enumerate() {
            cost[i] = if negate_objective { -v.obj } else { v.obj };
        }
        Tableau { a, cost, basis, n_struct: n, n_total, n_artificial: n_art }
    }

    /// Runs both phases. Returns the status plus shifted variable values.
    fn run(mut self, cfg: &LpConfig) -> (LpStatus, Option<Vec<f64>>) {
        let m = self.a.len();
        if self.n_artificial > 0 {
            // phase 1: minimize sum of artificials
            let mut phase_cost = vec![0.0; self.n_total];
            for c in (self.n_total - self.n_artificial)..self.n_total {
                phase_cost[c] = 1.0;
            }
            if !self.pivot_loop(&phase_cost, cfg) {
                return (LpStatus::Unbounded, None); // cannot happen: phase 1 is bounded
            }
            let phase1_obj = self.basic_objective(&phase_cost);
            if phase1_obj > cfg.feas_tol {
                return (LpStatus::Infeasible, None);
            }
            // drive remaining artificials out of the basis
            let art_start = self.n_total - self.n_artificial;
            for r in 0..m {
                if self.basis[r] >= art_start {
                    let mut pivoted = false;
                    for j in 0..art_start {
                        if self.a[r][j].abs() > 1e-9 {
                            self.pivot(r, j);
                            pivoted = true;
                            break;
                        }
                    }
                    if !pivoted {
                        // redundant row: freeze the artificial at zero
                        continue;
                    }
                }
            }
            // forbid artificials from re-entering
            for c in art_start..self.n_total {
                for row in self.a.iter_mut() {
                    row[c] = 0.0;
                }
            }
        }
        // phase 2
        let cost = self.cost.clone();
        if !self.pivot_loop(&cost, cfg) {
            return (LpStatus::Unbounded, None);
        }
        let mut x = vec![0.0; self.n_struct];
        let rhs_col = self.a[0].len() - 1;
        for r in 0..m {
            let b = self.basis[r];
            if b < self.n_struct {
                x[b] = self.a[r][rhs_col].max(0.0);
            }
        }
        (LpStatus::Optimal, Some(x))
    }

    fn basic_objective(&self, cost: &[f64]) -> f64 {
        let rhs_col = self.a[0].len() - 1;
        self.basis.iter().enumerate().map(|(r, &b)| cost[b] * self.a[r][rhs_col]).sum()
    }

    /// Bland's rule pivoting until optimal (true) or unbounded (false).
    fn pivot_loop(&mut self, cost: &[f64], cfg: &LpConfig) -> bool {
        let m = self.a.len();
        let rhs_col = self.a[0].len() - 1;
        let mut in_basis = vec![false; self.n_total];
        for &b in &self.basis {
            in_basis[b] = true;
        }
        loop {
            // reduced costs: c_j - c_B B^-1 A_j, computed from the current tableau
            let mut entering = None;
            for j in 0..self.n_total {
                if in_basis[j] {
                    continue;
                }
                let mut red = cost[j];
                for r in 0..m {
                    let cb = cost[self.basis[r]];
                    if cb != 0.0 {
                        red -= cb * self.a[r][j];
                    }
                }
                if red < -cfg.cost_tol {
                    entering = Some(j); // Bland: lowest index
                    break;
                }
            }
            let Some(j) = entering else { return true };
            // ratio test, Bland tie-break by lowest basis index
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let a_rj = self.a[r][j];
                if a_rj > 1e-11 {
                    let ratio = self.a[r][rhs_col] / a_rj;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || ((ratio - lratio).abs() <= 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            in_basis[self.basis[r]] = false;
            in_basis[j] = true;
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.a[0].len();
        let piv = self.a[r][j];
        for c in 0..cols {
            self.a[r][c] /= piv;
        }
        self.a[r][j] = 1.0;
        for rr in 0..self.a.len() {
            if rr != r {
                let f = self.a[rr][j];
                if f != 0.0 {
                    for c in 0..cols {
                        let delta = f * self.a[r][c];
                        self.a[rr][c] -= delta;
                    }
                    self.a[rr][j] = 0.0;
                }
            }
        }
        self.basis[r] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> LpConfig {
        LpConfig::default()
    }

    #[test]
    fn min_with_lower_row() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row(Row::new("lb", vec![(x, 1.0)], RowSense::Ge, 0.3));
        let sol = lp.solve(&cfg());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[x] - 0.3).abs() < 1e-9);
        assert!((sol.objective - 0.3).abs() < 1e-9);
    }

    #[test]
    fn max_on_simplex_hits_vertex() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        let y = lp.add_var("y", 0.0, 1.0, 1.0);
        lp.add_row(Row::new("cap", vec![(x, 1.0), (y, 1.0)], RowSense::Le, 1.0));
        let sol = lp.solve(&cfg());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(is_vertex(&lp, &sol.values, 1e-7));
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 3.0, 0.0);
        lp.add_row(Row::new("ge", vec![(x, 1.0)], RowSense::Ge, 2.0));
        lp.add_row(Row::new("le", vec![(x, 1.0)], RowSense::Le, 1.0));
        let sol = lp.solve(&cfg());
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn equality_row() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 2.0, 1.0);
        let y = lp.add_var("y", 0.0, 2.0, 2.0);
        lp.add_row(Row::new("eq", vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 1.5));
        let sol = lp.solve(&cfg());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[x] - 1.5).abs() < 1e-9, "{:?}", sol.values);
        assert!((sol.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn shifted_lower_bounds() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 2.0, 5.0, 1.0);
        let sol = lp.solve(&cfg());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[x] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn separation_never_fires_matches_plain_solve() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row(Row::new("lb", vec![(x, 1.0)], RowSense::Ge, 0.25));
        let plain = lp.solve(&cfg());
        let lazy = solve_with_separation(&lp, &cfg(), |_| None).unwrap();
        assert_eq!(lazy.status, LpStatus::Optimal);
        assert!((lazy.objective - plain.objective).abs() < 1e-9);
    }

    #[test]
    fn separation_adds_cut() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 0.0);
        let mut fired = false;
        let sol = solve_with_separation(&lp, &cfg(), |v| {
            if v[x] < 0.5 - 1e-7 && !fired {
                fired = true;
                Some(Row::new("cut", vec![(x, 1.0)], RowSense::Ge, 0.5))
            } else {
                None
            }
        })
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.values[x] >= 0.5 - 1e-7);
        let _ = lp.add_var("pad", 0.0, 1.0, 0.0);
    }

    #[test]
    fn separation_iteration_cap_is_an_error() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 0.0);
        let mut cap_cfg = cfg();
        cap_cfg.max_separation_rounds = 5;
        let mut bound = 0.0;
        let result = solve_with_separation(&lp, &cap_cfg, |v| {
            // always one more violated row: x >= bound + 0.01
            if v[x] < 1.0 {
                bound = (v[x] + 0.01).min(0.99);
                Some(Row::new("more", vec![(x, 1.0)], RowSense::Ge, bound))
            } else {
                None
            }
        });
        assert!(matches!(result, Err(LpError::IterationLimitExceeded(5))));
    }

    #[test]
    fn lp_format_dump_contains_rows() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row(Row::new("lb", vec![(x, 1.0)], RowSense::Ge, 0.3));
        let text = lp.to_lp_format();
        assert!(text.contains("Minimize"));
        assert!(text.contains(">= 0.3"));
    }
}
