//! Generic reduction from a two-stage polynomial-scenarios problem to a
//! single robust weighted supplier instance: cluster every scenario with
//! the largest-radius-first ordering, charge each representative's cheapest
//! stage-II facility to its penalty, and hand the stage-I decision to an
//! RW solver. A rho-approximate RW solution yields a (rho+2)-approximate
//! two-stage strategy whose stage-II rule depends only on the stage-I set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::greedy_cluster_neg_radius;
use crate::lp::LpConfig;
use crate::model::{
    cheapest_in_ball, dist_le, ClientId, ExplicitDistribution, FacilityId, Instance, ModelError,
    Scenario, Strategy,
};
use crate::robust_outlier::{
    solve_rw_homogeneous, solve_rw_matsup_inhomogeneous, RwError, RwInstance, SolveOutcome,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("rw solver error: {0}")]
    Rw(#[from] RwError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

/// How client penalties are accumulated from scenario representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyWeighting {
    /// v_j = sum over scenarios with j representative of p_A * c^A at the
    /// representative's cheapest ball facility.
    #[default]
    ProbabilityWeighted,
    /// The unweighted sum, as in the construction's literal listing; kept
    /// for comparison.
    Literal,
}

/// An inner solver for the reduced RW instance, with its coverage factor.
pub trait RwSolver {
    fn name(&self) -> &'static str;
    fn rho(&self) -> f64;
    fn solve(&self, rw: &RwInstance) -> Result<SolveOutcome<BTreeSet<FacilityId>>, RwError>;
}

/// Solve-or-cut solver: factor 3, homogeneous radii, matroid or knapsack.
pub struct HomogeneousRwSolver {
    pub radius: f64,
    pub lp_cfg: LpConfig,
}

impl RwSolver for HomogeneousRwSolver {
    fn name(&self) -> &'static str {
        "rw3"
    }

    fn rho(&self) -> f64 {
        3.0
    }

    fn solve(&self, rw: &RwInstance) -> Result<SolveOutcome<BTreeSet<FacilityId>>, RwError> {
        Ok(match solve_rw_homogeneous(rw, self.radius, &self.lp_cfg)? {
            SolveOutcome::Feasible(out) => SolveOutcome::Feasible(out.open),
            SolveOutcome::Infeasible => SolveOutcome::Infeasible,
        })
    }
}

/// Iterative-rounding solver: factor 9, inhomogeneous radii, matroid only.
pub struct IterativeRoundingSolver {
    pub lp_cfg: LpConfig,
}

impl RwSolver for IterativeRoundingSolver {
    fn name(&self) -> &'static str {
        "rw9"
    }

    fn rho(&self) -> f64 {
        9.0
    }

    fn solve(&self, rw: &RwInstance) -> Result<SolveOutcome<BTreeSet<FacilityId>>, RwError> {
        Ok(match solve_rw_matsup_inhomogeneous(rw, &self.lp_cfg)? {
            SolveOutcome::Feasible(out) => SolveOutcome::Feasible(out.open),
            SolveOutcome::Infeasible => SolveOutcome::Infeasible,
        })
    }
}

/// Everything an extension needs: the stage-I set and the inner factor.
/// Clusterings for unseen scenarios are recomputed on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCertificate {
    pub stage1_open: BTreeSet<FacilityId>,
    pub rho: f64,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReductionOutput {
    pub strategy: Strategy,
    pub certificate: ReductionCertificate,
    /// The reduced instance, kept for auditing.
    pub rw_instance: RwInstance,
}

/// Builds the RW instance induced by the scenario clusterings and runs the
/// inner solver; on success opens, per scenario, the cheapest ball facility
/// of every representative farther than rho * R_j from the stage-I set.
pub fn reduce_and_solve(
    instance: &Instance,
    dist: &ExplicitDistribution,
    radii: &[f64],
    solver: &dyn RwSolver,
    weighting: PenaltyWeighting,
    budget: f64,
) -> Result<SolveOutcome<ReductionOutput>, ReductionError> {
    let n = instance.num_clients();
    let mut penalties = vec![0.0; n];
    let mut reps_per_scenario: Vec<Vec<ClientId>> = Vec::with_capacity(dist.scenarios.len());
    let balls: Vec<crate::model::Ball> =
        (0..n).map(|j| instance.ball(j, Some(radii[j]))).collect();
    for scenario in &dist.scenarios {
        let clustering = greedy_cluster_neg_radius(&scenario.active, &balls, radii);
        for &rep in &clustering.reps {
            if let Ok(i) = cheapest_in_ball(&balls[rep], &scenario.stage2_costs) {
                let weight = match weighting {
                    PenaltyWeighting::ProbabilityWeighted => scenario.probability,
                    PenaltyWeighting::Literal => 1.0,
                };
                penalties[rep] += weight * scenario.stage2_costs[i];
            }
        }
        reps_per_scenario.push(clustering.reps);
    }
    let rw = RwInstance::from_instance(
        instance,
        radii.to_vec(),
        penalties,
        instance.stage1_costs.clone(),
        budget,
    );
    let stage1_open = match solver.solve(&rw)? {
        SolveOutcome::Feasible(open) => open,
        SolveOutcome::Infeasible => return Ok(SolveOutcome::Infeasible),
    };
    let rho = solver.rho();
    let mut stage2_open: BTreeMap<String, BTreeSet<FacilityId>> = BTreeMap::new();
    for (scenario, reps) in dist.scenarios.iter().zip(&reps_per_scenario) {
        stage2_open
            .insert(scenario.name.clone(), open_for(instance, &balls, &stage1_open, rho, radii, reps, scenario));
    }
    let certificate = ReductionCertificate { stage1_open: stage1_open.clone(), rho, radii: radii.to_vec() };
    Ok(SolveOutcome::Feasible(ReductionOutput {
        strategy: Strategy { stage1_open, stage2_open },
        certificate,
        rw_instance: rw,
    }))
}

fn open_for(
    instance: &Instance,
    balls: &[crate::model::Ball],
    stage1_open: &BTreeSet<FacilityId>,
    rho: f64,
    radii: &[f64],
    reps: &[ClientId],
    scenario: &Scenario,
) -> BTreeSet<FacilityId> {
    reps.iter()
        .filter(|&&j| !dist_le(instance.dist_to_set(j, stage1_open.iter()), rho * radii[j]))
        .filter_map(|&j| cheapest_in_ball(&balls[j], &scenario.stage2_costs).ok())
        .collect()
}

/// Extends a reduction-based solution to an unseen scenario: recluster with
/// largest radii first and open the cheapest ball facility of every
/// representative the stage-I set leaves uncovered beyond rho * R_j.
/// Depends only on the certificate, so two runs sharing a stage-I set give
/// identical extensions everywhere.
pub fn extend_reduction(
    instance: &Instance,
    certificate: &ReductionCertificate,
    scenario: &Scenario,
) -> BTreeSet<FacilityId> {
    let balls: Vec<crate::model::Ball> = (0..instance.num_clients())
        .map(|j| instance.ball(j, Some(certificate.radii[j])))
        .collect();
    let clustering = greedy_cluster_neg_radius(&scenario.active, &balls, &certificate.radii);
    open_for(
        instance,
        &balls,
        &certificate.stage1_open,
        certificate.rho,
        &certificate.radii,
        &clustering.reps,
        scenario,
    )
}
