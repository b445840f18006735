//! Deterministic single-stage robust weighted supplier solvers: a
//! solve-or-cut loop for homogeneous instances under matroid or
//! multi-knapsack constraints (factor 3), and iterative LP rounding for
//! inhomogeneous matroid instances (factor 9).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{greedy_cluster, greedy_cluster_neg_radius};
use crate::lp::{LinearProgram, LpConfig, LpStatus, Row, RowSense, Sense};
use crate::matroid::{
    minimize_psi_knapsack, minimize_psi_matroid, psi_value, IntersectionMethod, Matroid,
    MatroidError, PsiCluster,
};
use crate::model::{
    dist_le, Ball, ClientId, FacilityId, Instance, InstanceFile, ModelError, StageOneConstraint,
    DIST_TOL,
};

/// Default cap on the knapsack DP table.
pub const DEFAULT_LAMBDA_CAP: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum RwError {
    #[error("solve-or-cut exceeded {0} cuts")]
    IterationLimitExceeded(usize),
    #[error("no client with integral ball mass found (closest residual {0:.3e})")]
    NoIntegralClientFound(f64),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("lp error: {0}")]
    Lp(#[from] crate::lp::LpError),
    #[error("matroid error: {0}")]
    Matroid(#[from] MatroidError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Unsupported(String),
}

/// Feasible-or-INFEASIBLE outcome shared by every solver in this crate.
#[derive(Debug, Clone)]
pub enum SolveOutcome<T> {
    Feasible(T),
    Infeasible,
}

impl<T> SolveOutcome<T> {
    pub fn feasible(self) -> Option<T> {
        match self {
            SolveOutcome::Feasible(t) => Some(t),
            SolveOutcome::Infeasible => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, SolveOutcome::Infeasible)
    }
}

/// A robust weighted supplier instance: open facilities under a structural
/// constraint, paying facility weights plus the penalties of clients left
/// uncovered, all within budget V.
#[derive(Debug, Clone)]
pub struct RwInstance {
    pub client_names: Vec<String>,
    pub facility_names: Vec<String>,
    /// dist[j][i]: client j to facility i.
    pub dist_cf: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    /// Outlier penalty v_j per client.
    pub penalties: Vec<f64>,
    /// Opening weight w_i per facility.
    pub weights: Vec<f64>,
    pub constraint: StageOneConstraint,
    /// Budget V.
    pub budget: f64,
}

impl RwInstance {
    pub fn num_clients(&self) -> usize {
        self.client_names.len()
    }

    pub fn num_facilities(&self) -> usize {
        self.facility_names.len()
    }

    pub fn dist(&self, j: ClientId, i: FacilityId) -> f64 {
        self.dist_cf[j][i]
    }

    pub fn dist_to_set(&self, j: ClientId, set: &[FacilityId]) -> f64 {
        set.iter().map(|&i| self.dist_cf[j][i]).fold(f64::INFINITY, f64::min)
    }

    pub fn ball(&self, j: ClientId, radius_override: Option<f64>) -> Ball {
        let r = radius_override.unwrap_or(self.radii[j]);
        let facilities =
            (0..self.num_facilities()).filter(|&i| dist_le(self.dist_cf[j][i], r)).collect();
        Ball { client: j, facilities }
    }

    pub fn balls(&self, radius_override: Option<f64>) -> Vec<Ball> {
        (0..self.num_clients()).map(|j| self.ball(j, radius_override)).collect()
    }

    /// Facility weight plus rho-relaxed outlier penalties of `open`.
    pub fn objective(&self, open: &[FacilityId], rho: f64) -> f64 {
        let w: f64 = open.iter().map(|&i| self.weights[i]).sum();
        let pen: f64 = (0..self.num_clients())
            .filter(|&j| !dist_le(self.dist_to_set(j, open), rho * self.radii[j]))
            .map(|j| self.penalties[j])
            .sum();
        w + pen
    }

    /// Builds an RW instance on top of a two-stage instance's geometry.
    pub fn from_instance(
        instance: &Instance,
        radii: Vec<f64>,
        penalties: Vec<f64>,
        weights: Vec<f64>,
        budget: f64,
    ) -> RwInstance {
        RwInstance {
            client_names: instance.client_names.clone(),
            facility_names: instance.facility_names.clone(),
            dist_cf: (0..instance.num_clients())
                .map(|j| (0..instance.num_facilities()).map(|i| instance.dist(j, i)).collect())
                .collect(),
            radii,
            penalties,
            weights,
            constraint: instance.constraint.clone(),
            budget,
        }
    }
}

/// Result of re-scoring a candidate set at relaxation factor rho.
#[derive(Debug, Clone)]
pub struct RwCheck {
    pub budget_used: f64,
    pub outliers: BTreeSet<ClientId>,
    pub ok: bool,
}

/// Recomputes the rho-relaxed objective of `open` and compares it to V.
/// This is the checker every test trusts, so it goes straight from the
/// definition: a client is an outlier iff d(j, S) > rho * R_j (closed
/// comparison convention).
pub fn check_rw_solution(rw: &RwInstance, open: &BTreeSet<FacilityId>, rho: f64) -> RwCheck {
    let open_vec: Vec<FacilityId> = open.iter().copied().collect();
    let outliers: BTreeSet<ClientId> = (0..rw.num_clients())
        .filter(|&j| !dist_le(rw.dist_to_set(j, &open_vec), rho * rw.radii[j]))
        .collect();
    let budget_used = open_vec.iter().map(|&i| rw.weights[i]).sum::<f64>()
        + outliers.iter().map(|&j| rw.penalties[j]).sum::<f64>();
    RwCheck { budget_used, outliers, ok: budget_used <= rw.budget + 1e-7 }
}

/// Output of the solve-or-cut homogeneous solver.
#[derive(Debug, Clone)]
pub struct RwHomOutput {
    pub open: BTreeSet<FacilityId>,
    /// Psi value of the returned set.
    pub psi: f64,
    pub cuts: usize,
}

/// Solve-or-cut 3-approximation for homogeneous RW instances under a
/// matroid or multi-knapsack constraint.
///
/// Maintains the explicit budget row of the relaxation while treating the
/// convex-hull rows as implicit. Each round clusters the fractional outlier
/// mass, minimizes the surrogate Psi over the constraint structure, and
/// either returns the minimizer (Psi <= V) or re-solves with the induced
/// violated hyperplane added.
pub fn solve_rw_homogeneous(
    rw: &RwInstance,
    radius: f64,
    lp_cfg: &LpConfig,
) -> Result<SolveOutcome<RwHomOutput>, RwError> {
    for &r in &rw.radii {
        if (r - radius).abs() > DIST_TOL {
            return Err(RwError::Unsupported(format!(
                "homogeneous solver called with radius {radius} but instance has radius {r}"
            )));
        }
    }
    let n = rw.num_clients();
    let m = rw.num_facilities();
    let balls = rw.balls(Some(radius));
    let all_clients: Vec<ClientId> = (0..n).collect();

    let mut lp = LinearProgram::new(Sense::Minimize);
    let y0 = 0;
    for i in 0..m {
        lp.add_var(format!("y{i}"), 0.0, 1.0, rw.weights[i]);
    }
    let x0 = m;
    for j in 0..n {
        lp.add_var(format!("x{j}"), 0.0, 1.0, rw.penalties[j]);
    }
    let mut budget_coeffs: Vec<(usize, f64)> = Vec::with_capacity(n + m);
    for i in 0..m {
        budget_coeffs.push((y0 + i, rw.weights[i]));
    }
    for j in 0..n {
        budget_coeffs.push((x0 + j, rw.penalties[j]));
    }
    lp.add_row(Row::new("budget", budget_coeffs, RowSense::Le, rw.budget));

    let max_cuts = 10 * (n + m);
    for cut in 0..=max_cuts {
        let sol = lp.solve(lp_cfg);
        match sol.status {
            LpStatus::Infeasible => return Ok(SolveOutcome::Infeasible),
            LpStatus::Unbounded => {
                return Err(RwError::Unsupported("relaxation unbounded".into()))
            }
            LpStatus::Optimal => {}
        }
        let x_star: Vec<f64> = (0..n).map(|j| sol.values[x0 + j]).collect();
        // representatives must carry the minimal outlier mass of their
        // cluster, otherwise the induced hyperplane fails to separate the
        // current point
        let clustering = greedy_cluster(&all_clients, &balls, |j| -x_star[j]);
        let clusters: Vec<PsiCluster> = clustering
            .reps
            .iter()
            .map(|&rep| PsiCluster {
                ball: balls[rep].facilities.clone(),
                penalty: clustering
                    .assign
                    .iter()
                    .filter(|&(_, &r)| r == rep)
                    .map(|(&j, _)| rw.penalties[j])
                    .sum(),
            })
            .collect();
        let (open, psi) = match &rw.constraint {
            StageOneConstraint::MultiKnapsack(ks) => {
                minimize_psi_knapsack(ks, &clusters, &rw.weights, DEFAULT_LAMBDA_CAP)?
            }
            other => {
                let matroid = other.as_matroid(m).expect("matroid or unconstrained");
                minimize_psi_matroid(&matroid, &clusters, &rw.weights, IntersectionMethod::Auto)
            }
        };
        debug_assert!(
            (psi - psi_value(&clusters, &rw.weights, &open)).abs() <= 1e-9,
            "minimizer must agree with the definitional Psi"
        );
        if psi <= rw.budget + 1e-7 {
            return Ok(SolveOutcome::Feasible(RwHomOutput {
                open: open.into_iter().collect(),
                psi,
                cuts: cut,
            }));
        }
        // every convex combination of feasible sets has hyperplane value
        // >= min Psi, while the current point sits at <= V < Psi
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (cl, &rep) in clusters.iter().zip(&clustering.reps) {
            for &i in &cl.ball {
                coeffs.push((y0 + i, rw.weights[i]));
            }
            coeffs.push((x0 + rep, cl.penalty));
        }
        let row = Row::new(format!("cut{cut}"), coeffs, RowSense::Ge, psi);
        let violation = row.violation(&sol.values);
        if violation <= lp_cfg.feas_tol {
            return Err(RwError::InvariantViolated(format!(
                "cut not violated by the separated point (violation {violation:.3e})"
            )));
        }
        lp.add_row(row);
    }
    Err(RwError::IterationLimitExceeded(max_cuts))
}

/// Which set a client was moved to in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IterMove {
    Outlier,
    Committed,
}

/// Snapshot of one iterative-rounding step, for invariant auditing.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub objective: f64,
    pub chosen: ClientId,
    pub moved_to: IterMove,
    pub evicted: Vec<ClientId>,
    pub c0: BTreeSet<ClientId>,
    pub c1: BTreeSet<ClientId>,
    pub cs: BTreeSet<ClientId>,
}

/// Output of the inhomogeneous iterative-rounding solver.
#[derive(Debug, Clone)]
pub struct RwIterOutput {
    pub open: BTreeSet<FacilityId>,
    pub final_objective: f64,
    pub outliers: BTreeSet<ClientId>,
    /// Clients that were ever committed (entered C_1 at some iteration).
    pub ever_committed: BTreeSet<ClientId>,
    pub trace: Vec<IterRecord>,
}

struct MainLp<'a> {
    rw: &'a RwInstance,
    balls: &'a [Ball],
    rank_rows: Vec<(Vec<usize>, usize)>,
}

impl MainLp<'_> {
    /// Builds and solves the Main LP for the current partition; returns the
    /// z vector and the objective value including its constant part.
    fn solve(
        &self,
        c0: &BTreeSet<ClientId>,
        c1: &BTreeSet<ClientId>,
        cs: &BTreeSet<ClientId>,
        lp_cfg: &LpConfig,
    ) -> Result<SolveOutcome<(Vec<f64>, f64)>, RwError> {
        let rw = self.rw;
        let m = rw.num_facilities();
        let mut lp = LinearProgram::new(Sense::Minimize);
        // z(G_j) = 0 for outliers is folded into the upper bounds
        let mut ub = vec![1.0; m];
        for &j in c0 {
            for &i in &self.balls[j].facilities {
                ub[i] = 0.0;
            }
        }
        let constant: f64 = c0.iter().chain(cs.iter()).map(|&j| rw.penalties[j]).sum();
        let mut obj = rw.weights.clone();
        for &j in cs {
            for &i in &self.balls[j].facilities {
                obj[i] -= rw.penalties[j];
            }
        }
        for i in 0..m {
            lp.add_var(format!("z{i}"), 0.0, ub[i], obj[i]);
        }
        for &j in c1 {
            let coeffs: Vec<(usize, f64)> =
                self.balls[j].facilities.iter().map(|&i| (i, 1.0)).collect();
            lp.add_row(Row::new(format!("cover{j}"), coeffs, RowSense::Ge, 1.0));
        }
        for &j in cs {
            let coeffs: Vec<(usize, f64)> =
                self.balls[j].facilities.iter().map(|&i| (i, 1.0)).collect();
            lp.add_row(Row::new(format!("cap{j}"), coeffs, RowSense::Le, 1.0));
        }
        for (k, (set, r)) in self.rank_rows.iter().enumerate() {
            let coeffs: Vec<(usize, f64)> = set.iter().map(|&i| (i, 1.0)).collect();
            lp.add_row(Row::new(format!("rank{k}"), coeffs, RowSense::Le, *r as f64));
        }
        let sol = lp.solve(lp_cfg);
        match sol.status {
            LpStatus::Infeasible => Ok(SolveOutcome::Infeasible),
            LpStatus::Unbounded => Err(RwError::Unsupported("main LP unbounded".into())),
            LpStatus::Optimal => Ok(SolveOutcome::Feasible((sol.values, sol.objective + constant))),
        }
    }
}

/// Iterative rounding for inhomogeneous RW instances under a matroid
/// constraint; 9-approximation on the coverage radii.
///
/// Clients move from the undecided pool to committed or outlier status, one
/// per iteration, driven by a vertex solution of the Main LP; committed
/// clients keep pairwise disjoint balls, and the final LP is integral.
pub fn solve_rw_matsup_inhomogeneous(
    rw: &RwInstance,
    lp_cfg: &LpConfig,
) -> Result<SolveOutcome<RwIterOutput>, RwError> {
    let matroid = match &rw.constraint {
        StageOneConstraint::Matroid(mat) => mat.clone(),
        StageOneConstraint::Unconstrained => {
            Matroid::Uniform { ground: rw.num_facilities(), k: rw.num_facilities() }
        }
        StageOneConstraint::MultiKnapsack(_) => {
            return Err(RwError::Unsupported(
                "iterative rounding requires a matroid constraint".into(),
            ))
        }
    };
    let n = rw.num_clients();
    let m = rw.num_facilities();
    let balls = rw.balls(None);
    let rank_rows = matroid.rank_rows()?;

    // initial relaxation: x_j + y(G_j) >= 1, budget, rank rows
    let mut lp = LinearProgram::new(Sense::Minimize);
    for i in 0..m {
        lp.add_var(format!("y{i}"), 0.0, 1.0, rw.weights[i]);
    }
    let x0 = m;
    for j in 0..n {
        lp.add_var(format!("x{j}"), 0.0, 1.0, rw.penalties[j]);
    }
    for j in 0..n {
        let mut coeffs: Vec<(usize, f64)> =
            balls[j].facilities.iter().map(|&i| (i, 1.0)).collect();
        coeffs.push((x0 + j, 1.0));
        lp.add_row(Row::new(format!("cover{j}"), coeffs, RowSense::Ge, 1.0));
    }
    let mut budget_coeffs: Vec<(usize, f64)> = Vec::new();
    for i in 0..m {
        budget_coeffs.push((i, rw.weights[i]));
    }
    for j in 0..n {
        budget_coeffs.push((x0 + j, rw.penalties[j]));
    }
    lp.add_row(Row::new("budget", budget_coeffs, RowSense::Le, rw.budget));
    for (k, (set, r)) in rank_rows.iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = set.iter().map(|&i| (i, 1.0)).collect();
        lp.add_row(Row::new(format!("rank{k}"), coeffs, RowSense::Le, *r as f64));
    }
    let initial = lp.solve(lp_cfg);
    match initial.status {
        LpStatus::Infeasible => return Ok(SolveOutcome::Infeasible),
        LpStatus::Unbounded => return Err(RwError::Unsupported("relaxation unbounded".into())),
        LpStatus::Optimal => {}
    }
    let y: Vec<f64> = initial.values[..m].to_vec();
    let ball_mass = |j: ClientId, z: &[f64]| -> f64 {
        balls[j].facilities.iter().map(|&i| z[i]).sum()
    };

    // initial partition
    let heavy: Vec<ClientId> = (0..n).filter(|&j| ball_mass(j, &y) > 1.0).collect();
    let c1_cluster = greedy_cluster_neg_radius(&heavy, &balls, &rw.radii);
    let mut c1: BTreeSet<ClientId> = c1_cluster.reps.iter().copied().collect();
    let mut c0: BTreeSet<ClientId> = BTreeSet::new();
    let mut cs: BTreeSet<ClientId> = (0..n)
        .filter(|&j| {
            ball_mass(j, &y) <= 1.0
                && c1.iter().all(|&j1| {
                    !balls[j].intersects(&balls[j1]) || rw.radii[j] < rw.radii[j1] / 2.0
                })
        })
        .collect();

    let main = MainLp { rw, balls: &balls, rank_rows };
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut ever_committed = c1.clone();
    let mut prev_objective = f64::INFINITY;

    for _iter in 0..=n {
        let (z, objective) = match main.solve(&c0, &c1, &cs, lp_cfg)? {
            SolveOutcome::Feasible(v) => v,
            // once the initial relaxation is feasible, the Main LP stays
            // feasible through every move
            SolveOutcome::Infeasible => {
                return Err(RwError::InvariantViolated("main LP became infeasible".into()))
            }
        };
        if objective > rw.budget + 1e-7 {
            return Err(RwError::InvariantViolated(format!(
                "main LP objective {objective} exceeds budget {}",
                rw.budget
            )));
        }
        if objective > prev_objective + 1e-7 {
            return Err(RwError::InvariantViolated(format!(
                "main LP objective increased from {prev_objective} to {objective}"
            )));
        }
        prev_objective = objective;

        if cs.is_empty() {
            // final solve must be integral
            let mut open = BTreeSet::new();
            for (i, &zi) in z.iter().enumerate() {
                if (zi - 1.0).abs() <= lp_cfg.int_tol {
                    open.insert(i);
                } else if zi.abs() > lp_cfg.int_tol {
                    return Err(RwError::NoIntegralClientFound(zi));
                }
            }
            let open_vec: Vec<FacilityId> = open.iter().copied().collect();
            if !matroid.is_independent(&open_vec) {
                return Err(RwError::InvariantViolated(
                    "returned set is not independent".into(),
                ));
            }
            return Ok(SolveOutcome::Feasible(RwIterOutput {
                open,
                final_objective: objective,
                outliers: c0,
                ever_committed,
                trace,
            }));
        }

        // find an undecided client whose ball mass is integral at the vertex
        let mut chosen: Option<(ClientId, bool)> = None;
        let mut closest = f64::INFINITY;
        for &j in &cs {
            let mass = ball_mass(j, &z);
            if mass.abs() <= lp_cfg.int_tol {
                chosen = Some((j, false));
                break;
            }
            if (mass - 1.0).abs() <= lp_cfg.int_tol {
                chosen = Some((j, true));
                break;
            }
            closest = closest.min(mass.min((mass - 1.0).abs()));
        }
        let Some((j, committed)) = chosen else {
            return Err(RwError::NoIntegralClientFound(closest));
        };
        cs.remove(&j);
        let mut evicted = Vec::new();
        if committed {
            c1.insert(j);
            ever_committed.insert(j);
            // evict conflicting clients with comparable or larger radii
            let conflict: Vec<ClientId> = cs
                .iter()
                .chain(c1.iter())
                .copied()
                .filter(|&j2| {
                    j2 != j && balls[j].intersects(&balls[j2]) && rw.radii[j2] >= rw.radii[j] / 2.0
                })
                .collect();
            for j2 in conflict {
                cs.remove(&j2);
                c1.remove(&j2);
                evicted.push(j2);
            }
        } else {
            c0.insert(j);
        }

        // live invariant checks
        let c1_vec: Vec<ClientId> = c1.iter().copied().collect();
        for (a, &ja) in c1_vec.iter().enumerate() {
            for &jb in &c1_vec[a + 1..] {
                if balls[ja].intersects(&balls[jb]) {
                    return Err(RwError::InvariantViolated(format!(
                        "committed clients {ja} and {jb} have intersecting balls"
                    )));
                }
            }
        }
        if c0.intersection(&c1).next().is_some()
            || c0.intersection(&cs).next().is_some()
            || c1.intersection(&cs).next().is_some()
        {
            return Err(RwError::InvariantViolated("partition sets overlap".into()));
        }

        trace.push(IterRecord {
            objective,
            chosen: j,
            moved_to: if committed { IterMove::Committed } else { IterMove::Outlier },
            evicted,
            c0: c0.clone(),
            c1: c1.clone(),
            cs: cs.clone(),
        });
    }
    Err(RwError::InvariantViolated("loop failed to drain the undecided set".into()))
}

// ---------------------------------------------------------------------------
// JSON schema: instance plus penalties/weights/V
// ---------------------------------------------------------------------------

/// On-disk RW instance: the base instance schema extended with penalties,
/// facility weights, and the budget V.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RwInstanceFile {
    #[serde(flatten)]
    pub base: InstanceFile,
    pub penalties: BTreeMap<String, f64>,
    pub weights: BTreeMap<String, f64>,
    #[serde(rename = "V")]
    pub v: f64,
}

impl RwInstanceFile {
    pub fn parse(text: &str) -> Result<RwInstanceFile, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn build(&self) -> Result<RwInstance, ModelError> {
        let instance = self.base.build()?;
        let mut penalties = Vec::with_capacity(instance.num_clients());
        for name in &instance.client_names {
            let v = self
                .penalties
                .get(name)
                .ok_or_else(|| ModelError::Validation(format!("no penalty for client {name}")))?;
            if *v < 0.0 {
                return Err(ModelError::Validation(format!("negative penalty for {name}")));
            }
            penalties.push(*v);
        }
        let mut weights = Vec::with_capacity(instance.num_facilities());
        for name in &instance.facility_names {
            let w = self
                .weights
                .get(name)
                .ok_or_else(|| ModelError::Validation(format!("no weight for facility {name}")))?;
            if *w < 0.0 {
                return Err(ModelError::Validation(format!("negative weight for {name}")));
            }
            weights.push(*w);
        }
        if self.v < 0.0 {
            return Err(ModelError::Validation("V must be >= 0".into()));
        }
        Ok(RwInstance::from_instance(&instance, instance.radii.clone(), penalties, weights, self.v))
    }

    pub fn from_rw(rw: &RwInstance, base: InstanceFile) -> RwInstanceFile {
        RwInstanceFile {
            base,
            penalties: rw
                .client_names
                .iter()
                .zip(&rw.penalties)
                .map(|(n, &v)| (n.clone(), v))
                .collect(),
            weights: rw
                .facility_names
                .iter()
                .zip(&rw.weights)
                .map(|(n, &w)| (n.clone(), w))
                .collect(),
            v: rw.budget,
        }
    }
}
