//! Correlated LP rounding for the homogeneous two-stage supplier problem
//! with explicit scenarios (coverage factor 3), plus the extension rule that
//! generalizes a solved instance to unseen scenarios.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{greedy_cluster, Clustering};
use crate::lp::{LinearProgram, LpConfig, LpStatus, Row, RowSense, Sense};
use crate::model::{
    cheapest_in_ball, Ball, ClientId, ExplicitDistribution, FacilityId, Instance, ModelError,
    Scenario, Strategy, BUDGET_TOL,
};
use crate::robust_outlier::SolveOutcome;

#[derive(Debug, Error)]
pub enum SupError {
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Unsupported(String),
}

/// Stage-I artifacts that determine every stage-II decision: the open set,
/// the stage-I assignment, and the fractional ball mass per client. This is
/// all an extension needs, so it is what gets serialized with a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SupCertificate {
    pub stage1_open: BTreeSet<FacilityId>,
    /// pi1[j]: stage-I representative of client j.
    pub pi1: Vec<ClientId>,
    /// g1[j]: stage-I LP ball mass y^I(G_j).
    pub g1: Vec<f64>,
    pub radius: f64,
}

/// Solver output: the explicit strategy on the training scenarios plus the
/// extension certificate.
#[derive(Debug, Clone)]
pub struct SupPolyOutput {
    pub strategy: Strategy,
    pub certificate: SupCertificate,
    /// Index into the sorted representative list at which the sweep stopped
    /// (number of representatives + 1 means nothing was opened in stage I).
    pub threshold_index: usize,
    pub lp_objective: f64,
}

/// Solves the relaxation (budget row plus per-scenario coverage rows) to a
/// vertex, clusters stage-I mass, and sweeps the threshold over the sorted
/// representatives, returning the first ensemble within budget.
///
/// Coverage guarantee: every active client of every training scenario ends
/// within 3R of an open facility. For feasible instances the sweep always
/// finds an ensemble within budget.
pub fn solve_sup_poly(
    instance: &Instance,
    dist: &ExplicitDistribution,
    radius: f64,
    budget: f64,
    lp_cfg: &LpConfig,
) -> Result<SolveOutcome<SupPolyOutput>, SupError> {
    if !instance.is_homogeneous() {
        return Err(SupError::Unsupported("correlated rounding needs homogeneous radii".into()));
    }
    let n = instance.num_clients();
    let m = instance.num_facilities();
    let balls = instance.balls(Some(radius));
    // an active client with an empty ball yields an uncoverable row; the
    // relaxation below then certifies INFEASIBLE on its own

    // variables: y^I per facility, then y^A per scenario per facility
    let mut lp = LinearProgram::new(Sense::Minimize);
    for i in 0..m {
        lp.add_var(format!("yI{i}"), 0.0, 1.0, instance.stage1_costs[i]);
    }
    let ya0 = |a: usize| m * (a + 1);
    for (a, scenario) in dist.scenarios.iter().enumerate() {
        for i in 0..m {
            lp.add_var(
                format!("yA{a}_{i}"),
                0.0,
                1.0,
                scenario.probability * scenario.stage2_costs[i],
            );
        }
    }
    let mut budget_coeffs: Vec<(usize, f64)> = Vec::new();
    for i in 0..m {
        budget_coeffs.push((i, instance.stage1_costs[i]));
    }
    for (a, scenario) in dist.scenarios.iter().enumerate() {
        for i in 0..m {
            budget_coeffs.push((ya0(a) + i, scenario.probability * scenario.stage2_costs[i]));
        }
    }
    lp.add_row(Row::new("budget", budget_coeffs, RowSense::Le, budget));
    for (a, scenario) in dist.scenarios.iter().enumerate() {
        for &j in &scenario.active {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for &i in &balls[j].facilities {
                coeffs.push((i, 1.0));
                coeffs.push((ya0(a) + i, 1.0));
            }
            lp.add_row(Row::new(format!("cover{a}_{j}"), coeffs, RowSense::Ge, 1.0));
        }
    }
    let sol = lp.solve(lp_cfg);
    match sol.status {
        LpStatus::Infeasible => return Ok(SolveOutcome::Infeasible),
        LpStatus::Unbounded => {
            return Err(SupError::Unsupported("relaxation unbounded".into()));
        }
        LpStatus::Optimal => {}
    }
    let y1 = &sol.values[..m];
    let g1: Vec<f64> = (0..n).map(|j| balls[j].facilities.iter().map(|&i| y1[i]).sum()).collect();

    // stage-I clustering by decreasing ball mass
    let all: Vec<ClientId> = (0..n).collect();
    let stage1_clustering = greedy_cluster(&all, &balls, |j| g1[j]);
    let pi1: Vec<ClientId> = (0..n).map(|j| stage1_clustering.rep_of(j)).collect();

    // per-scenario clustering with g = -y^I(G_{pi1 j})
    let scenario_clusterings: Vec<Clustering> = dist
        .scenarios
        .iter()
        .map(|s| greedy_cluster(&s.active, &balls, |j| -g1[pi1[j]]))
        .collect();

    // sweep thresholds over representatives sorted by ascending ball mass
    let mut order: Vec<ClientId> = stage1_clustering.reps.clone();
    order.sort_by(|&a, &b| g1[a].partial_cmp(&g1[b]).unwrap().then(a.cmp(&b)));
    let candidates = sweep_stage1_sets(&order, &g1, &balls, &instance.stage1_costs);
    let stage1_cost_of = |open: &BTreeSet<FacilityId>| -> f64 {
        open.iter().map(|&i| instance.stage1_costs[i]).sum()
    };
    for (level, stage1_open) in candidates.into_iter().enumerate() {
        let mut total = stage1_cost_of(&stage1_open);
        let mut stage2_open: BTreeMap<String, BTreeSet<FacilityId>> = BTreeMap::new();
        for (scenario, clustering) in dist.scenarios.iter().zip(&scenario_clusterings) {
            let set = stage2_for(&stage1_open, clustering, &balls, &pi1, scenario);
            total += scenario.probability
                * set.iter().map(|&i| scenario.stage2_costs[i]).sum::<f64>();
            stage2_open.insert(scenario.name.clone(), set);
        }
        if total <= budget + BUDGET_TOL {
            let strategy = Strategy { stage1_open: stage1_open.clone(), stage2_open };
            let certificate = SupCertificate { stage1_open, pi1, g1, radius };
            return Ok(SolveOutcome::Feasible(SupPolyOutput {
                strategy,
                certificate,
                threshold_index: level,
                lp_objective: sol.objective,
            }));
        }
    }
    Ok(SolveOutcome::Infeasible)
}

/// The stage-I candidate sets of the threshold sweep, one per level plus
/// the final dummy level that opens nothing. Level l opens the cheapest
/// ball facility of every representative whose mass reaches the l-th
/// smallest, so the sets shrink as the level rises.
fn sweep_stage1_sets(
    order: &[ClientId],
    g1: &[f64],
    balls: &[Ball],
    stage1_costs: &[f64],
) -> Vec<BTreeSet<FacilityId>> {
    let mut sets = Vec::with_capacity(order.len() + 1);
    for level in 0..order.len() {
        let bar = g1[order[level]];
        sets.push(
            order
                .iter()
                .filter(|&&j| g1[j] >= bar && !balls[j].is_empty())
                .map(|&j| cheapest_in_ball(&balls[j], stage1_costs).expect("nonempty"))
                .collect(),
        );
    }
    sets.push(BTreeSet::new());
    sets
}

/// Stage-II openings for one scenario: the cheapest ball facility of every
/// representative whose stage-I representative got no stage-I opening.
fn stage2_for(
    stage1_open: &BTreeSet<FacilityId>,
    clustering: &Clustering,
    balls: &[Ball],
    pi1: &[ClientId],
    scenario: &Scenario,
) -> BTreeSet<FacilityId> {
    clustering
        .reps
        .iter()
        .filter(|&&j| !balls[pi1[j]].facilities.iter().any(|i| stage1_open.contains(i)))
        .filter_map(|&j| cheapest_in_ball(&balls[j], &scenario.stage2_costs).ok())
        .collect()
}

/// Extends a solved instance to an unseen scenario. Mirrors the stage-II
/// step of the solver exactly, so it reproduces the training outputs on
/// training scenarios and keeps the 3R coverage bound on new ones.
pub fn extend_sup(
    instance: &Instance,
    certificate: &SupCertificate,
    scenario: &Scenario,
) -> BTreeSet<FacilityId> {
    let balls = instance.balls(Some(certificate.radius));
    let clustering =
        greedy_cluster(&scenario.active, &balls, |j| -certificate.g1[certificate.pi1[j]]);
    stage2_for(&certificate.stage1_open, &clustering, &balls, &certificate.pi1, scenario)
}

/// Number of distinct strategies the extension process can produce: the
/// sorted order of the stage-I ball masses (n! many) times the threshold
/// position (n + 1 values), i.e. (n+1)!.
pub fn strategy_class_bound(n: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for k in 2..=(n + 1) {
        acc *= BigUint::from(k);
    }
    acc
}

/// ln((n+1)!), for sample-size formulas that only need the logarithm.
pub fn strategy_class_log(n: usize) -> f64 {
    (2..=(n + 1)).map(|k| (k as f64).ln()).sum()
}

// ---------------------------------------------------------------------------
// Certificate JSON
// ---------------------------------------------------------------------------

/// On-disk extension certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupCertificateFile {
    #[serde(rename = "F_I")]
    pub stage1_open: Vec<String>,
    #[serde(rename = "pi_I")]
    pub pi_i: BTreeMap<String, String>,
    #[serde(rename = "gI")]
    pub g1: BTreeMap<String, f64>,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl SupCertificateFile {
    pub fn from_certificate(instance: &Instance, cert: &SupCertificate) -> SupCertificateFile {
        SupCertificateFile {
            stage1_open: cert
                .stage1_open
                .iter()
                .map(|&i| instance.facility_names[i].clone())
                .collect(),
            pi_i: cert
                .pi1
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    (instance.client_names[j].clone(), instance.client_names[r].clone())
                })
                .collect(),
            g1: cert
                .g1
                .iter()
                .enumerate()
                .map(|(j, &v)| (instance.client_names[j].clone(), v))
                .collect(),
            radius: cert.radius,
        }
    }

    pub fn to_certificate(&self, instance: &Instance) -> Result<SupCertificate, ModelError> {
        let cidx: BTreeMap<&str, usize> =
            instance.client_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let fidx: BTreeMap<&str, usize> =
            instance.facility_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut stage1_open = BTreeSet::new();
        for name in &self.stage1_open {
            let &i = fidx
                .get(name.as_str())
                .ok_or_else(|| ModelError::Validation(format!("unknown facility {name}")))?;
            stage1_open.insert(i);
        }
        let mut pi1 = vec![usize::MAX; instance.num_clients()];
        for (c, r) in &self.pi_i {
            let &j = cidx
                .get(c.as_str())
                .ok_or_else(|| ModelError::Validation(format!("unknown client {c}")))?;
            let &rep = cidx
                .get(r.as_str())
                .ok_or_else(|| ModelError::Validation(format!("unknown client {r}")))?;
            pi1[j] = rep;
        }
        let mut g1 = vec![f64::NAN; instance.num_clients()];
        for (c, &v) in &self.g1 {
            let &j = cidx
                .get(c.as_str())
                .ok_or_else(|| ModelError::Validation(format!("unknown client {c}")))?;
            g1[j] = v;
        }
        if pi1.iter().any(|&r| r == usize::MAX) || g1.iter().any(|v| v.is_nan()) {
            return Err(ModelError::Validation("certificate misses clients".into()));
        }
        Ok(SupCertificate { stage1_open, pi1, g1, radius: self.radius })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn parse(text: &str) -> Result<SupCertificateFile, ModelError> {
        Ok(serde_json::from_str(text)?)
    }
}
