//! Domain types for instances, scenarios, and strategies, plus the cost and
//! coverage functionals every solver consumes.
//!
//! Clients and facilities are addressed by dense indices in file order;
//! their string names are kept for serialization only. Distances live in an
//! explicit client-by-facility matrix; client-client distances are either
//! read from a full pairwise matrix or derived as the shortest alternating
//! path through facilities.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matroid::{KnapsackSystem, Matroid, MatroidError};

pub type ClientId = usize;
pub type FacilityId = usize;

/// Absolute tolerance for distance equality; boundary placements in
/// synthetic instances land exactly on radii.
pub const DIST_TOL: f64 = 1e-9;
/// Absolute slack for budget comparisons.
pub const BUDGET_TOL: f64 = 1e-9;

/// Closed ball membership / coverage convention: d <= r up to [`DIST_TOL`].
#[inline]
pub fn dist_le(d: f64, r: f64) -> bool {
    d <= r + DIST_TOL
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("ball of client {0} is empty")]
    EmptyBall(ClientId),
    #[error("strategy has no stage-II set for scenario {0}")]
    MissingScenario(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("matroid error: {0}")]
    Matroid(#[from] MatroidError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Structural constraint on the stage-I facility set.
#[derive(Debug, Clone)]
pub enum StageOneConstraint {
    Unconstrained,
    Matroid(Matroid),
    MultiKnapsack(KnapsackSystem),
}

impl StageOneConstraint {
    pub fn is_feasible(&self, set: &[FacilityId]) -> bool {
        match self {
            StageOneConstraint::Unconstrained => true,
            StageOneConstraint::Matroid(m) => m.is_independent(set),
            StageOneConstraint::MultiKnapsack(ks) => ks.is_feasible(set),
        }
    }

    /// A matroid view where an inner solver needs one; the unconstrained
    /// case is the free (full uniform) matroid.
    pub fn as_matroid(&self, ground: usize) -> Option<Matroid> {
        match self {
            StageOneConstraint::Unconstrained => Some(Matroid::Uniform { ground, k: ground }),
            StageOneConstraint::Matroid(m) => Some(m.clone()),
            StageOneConstraint::MultiKnapsack(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub client_names: Vec<String>,
    pub facility_names: Vec<String>,
    /// Stage-I opening cost per facility.
    pub stage1_costs: Vec<f64>,
    /// dist_cf[j][i]: distance from client j to facility i.
    dist_cf: Vec<Vec<f64>>,
    /// dist_cc[j][j']: client-client distances.
    dist_cc: Vec<Vec<f64>>,
    /// Radius demand per client.
    pub radii: Vec<f64>,
    pub constraint: StageOneConstraint,
    pub budget: f64,
}

/// A realized scenario: active clients and that scenario's facility costs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub active: Vec<ClientId>,
    pub stage2_costs: Vec<f64>,
    pub probability: f64,
}

/// Explicitly listed distribution for the polynomial-scenarios model.
#[derive(Debug, Clone)]
pub struct ExplicitDistribution {
    pub scenarios: Vec<Scenario>,
}

/// The facilities within a client's radius demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub client: ClientId,
    /// Sorted member facilities.
    pub facilities: Vec<FacilityId>,
}

impl Ball {
    pub fn is_empty(&self) -> bool {
        self.facilities.is_empty()
    }

    pub fn intersects(&self, other: &Ball) -> bool {
        let (mut a, mut b) = (self.facilities.iter().peekable(), other.facilities.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn contains(&self, facility: FacilityId) -> bool {
        self.facilities.binary_search(&facility).is_ok()
    }
}

/// A stage-I facility set plus explicit stage-II sets keyed by scenario name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Strategy {
    pub stage1_open: BTreeSet<FacilityId>,
    pub stage2_open: BTreeMap<String, BTreeSet<FacilityId>>,
}

impl Instance {
    pub fn num_clients(&self) -> usize {
        self.client_names.len()
    }

    pub fn num_facilities(&self) -> usize {
        self.facility_names.len()
    }

    #[inline]
    pub fn dist(&self, j: ClientId, i: FacilityId) -> f64 {
        self.dist_cf[j][i]
    }

    #[inline]
    pub fn dist_clients(&self, j: ClientId, j2: ClientId) -> f64 {
        self.dist_cc[j][j2]
    }

    /// Distance from client `j` to the nearest facility in `set`; infinite
    /// when `set` is empty.
    pub fn dist_to_set<'a>(&self, j: ClientId, set: impl IntoIterator<Item = &'a FacilityId>) -> f64 {
        set.into_iter().map(|&i| self.dist_cf[j][i]).fold(f64::INFINITY, f64::min)
    }

    /// All radii equal (within [`DIST_TOL`]).
    pub fn is_homogeneous(&self) -> bool {
        self.radii.windows(2).all(|w| (w[0] - w[1]).abs() <= DIST_TOL)
    }

    pub fn homogeneous_radius(&self) -> Option<f64> {
        if self.is_homogeneous() {
            self.radii.first().copied()
        } else {
            None
        }
    }

    /// The ball G_j at the client's radius demand, or at `radius_override`.
    pub fn ball(&self, j: ClientId, radius_override: Option<f64>) -> Ball {
        let r = radius_override.unwrap_or(self.radii[j]);
        debug_assert!(r >= 0.0);
        let facilities =
            (0..self.num_facilities()).filter(|&i| dist_le(self.dist_cf[j][i], r)).collect();
        Ball { client: j, facilities }
    }

    /// Balls for every client, all at `radius_override` when given.
    pub fn balls(&self, radius_override: Option<f64>) -> Vec<Ball> {
        (0..self.num_clients()).map(|j| self.ball(j, radius_override)).collect()
    }

    /// Sorted distinct client-facility distances: the candidate radii.
    pub fn candidate_radii(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.dist_cf.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup_by(|a, b| (*a - *b).abs() <= DIST_TOL);
        all
    }

    /// Standing assumption: every client reaches some facility within R_j.
    pub fn validate(&self) -> Result<(), ModelError> {
        for j in 0..self.num_clients() {
            if self.radii[j] < 0.0 {
                return Err(ModelError::Validation(format!("negative radius for client {j}")));
            }
            if self.ball(j, None).is_empty() {
                return Err(ModelError::Validation(format!(
                    "client {} has no facility within its radius {}",
                    self.client_names[j], self.radii[j]
                )));
            }
        }
        if self.stage1_costs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(ModelError::Validation("stage-I costs must be finite and >= 0".into()));
        }
        if self.budget < 0.0 {
            return Err(ModelError::Validation("budget must be >= 0".into()));
        }
        Ok(())
    }
}

/// Cheapest facility in the ball under `costs`; ties break to the smallest
/// facility index.
pub fn cheapest_in_ball(ball: &Ball, costs: &[f64]) -> Result<FacilityId, ModelError> {
    ball.facilities
        .iter()
        .copied()
        .min_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap().then(a.cmp(&b)))
        .ok_or(ModelError::EmptyBall(ball.client))
}

/// C(s, A) = stage-I cost + that scenario's stage-II cost.
pub fn strategy_cost(
    instance: &Instance,
    scenario: &Scenario,
    strategy: &Strategy,
) -> Result<f64, ModelError> {
    let stage2 = strategy
        .stage2_open
        .get(&scenario.name)
        .ok_or_else(|| ModelError::MissingScenario(scenario.name.clone()))?;
    let c1: f64 = strategy.stage1_open.iter().map(|&i| instance.stage1_costs[i]).sum();
    let c2: f64 = stage2.iter().map(|&i| scenario.stage2_costs[i]).sum();
    Ok(c1 + c2)
}

/// max_{j in A} d(j, F_I u F_A) / R_j; 0 for an empty active set, infinite
/// when no facility is open but clients are active (discarded scenarios).
pub fn maxdist(instance: &Instance, scenario: &Scenario, strategy: &Strategy) -> f64 {
    static EMPTY: BTreeSet<FacilityId> = BTreeSet::new();
    let stage2 = strategy.stage2_open.get(&scenario.name).unwrap_or(&EMPTY);
    maxdist_sets(instance, scenario, &strategy.stage1_open, stage2)
}

/// Same as [`maxdist`] but over explicit facility sets.
pub fn maxdist_sets(
    instance: &Instance,
    scenario: &Scenario,
    stage1: &BTreeSet<FacilityId>,
    stage2: &BTreeSet<FacilityId>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for &j in &scenario.active {
        let d = instance.dist_to_set(j, stage1.iter()).min(instance.dist_to_set(j, stage2.iter()));
        let r = instance.radii[j];
        let ratio = if r > 0.0 {
            d / r
        } else if dist_le(d, 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    worst
}

/// Expected cost of a strategy over an explicit distribution.
pub fn expected_cost(
    instance: &Instance,
    dist: &ExplicitDistribution,
    strategy: &Strategy,
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for scenario in &dist.scenarios {
        total += scenario.probability * strategy_cost(instance, scenario, strategy)?;
    }
    Ok(total)
}

impl ExplicitDistribution {
    pub fn validate(&self, instance: &Instance) -> Result<(), ModelError> {
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::Validation(format!(
                "scenario probabilities sum to {total}, expected 1"
            )));
        }
        for s in &self.scenarios {
            if s.probability < 0.0 {
                return Err(ModelError::Validation(format!("negative probability in {}", s.name)));
            }
            if s.stage2_costs.len() != instance.num_facilities() {
                return Err(ModelError::Validation(format!(
                    "scenario {} has {} stage-II costs, expected {}",
                    s.name,
                    s.stage2_costs.len(),
                    instance.num_facilities()
                )));
            }
            if s.stage2_costs.iter().any(|&c| c < 0.0 || !c.is_finite()) {
                return Err(ModelError::Validation(format!(
                    "scenario {} has negative or non-finite stage-II costs",
                    s.name
                )));
            }
            if s.active.iter().any(|&j| j >= instance.num_clients()) {
                return Err(ModelError::Validation(format!(
                    "scenario {} activates an unknown client",
                    s.name
                )));
            }
        }
        Ok(())
    }

    /// Uniform empirical distribution over drawn samples.
    pub fn uniform(scenarios: Vec<Scenario>) -> ExplicitDistribution {
        let n = scenarios.len().max(1) as f64;
        let scenarios = scenarios
            .into_iter()
            .map(|mut s| {
                s.probability = 1.0 / n;
                s
            })
            .collect();
        ExplicitDistribution { scenarios }
    }
}

// ---------------------------------------------------------------------------
// JSON schemas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientFile {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FacilityFile {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub c1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knapsack_weights: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintFile {
    None,
    Uniform { k: usize },
    Partition { blocks: Vec<Vec<String>>, caps: Vec<usize> },
    Explicit { bases: Vec<Vec<String>> },
    Multiknapsack { budgets: Vec<u64> },
}

/// On-disk instance schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub metric: String,
    pub clients: Vec<ClientFile>,
    pub facilities: Vec<FacilityFile>,
    pub radii: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub constraint: ConstraintFile,
    pub budget: f64,
}

pub fn default_schema_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEntryFile {
    pub id: String,
    pub clients: Vec<String>,
    /// Facility id -> stage-II cost; omitted facilities cost 0.
    pub c2: BTreeMap<String, f64>,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioListFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioEntryFile>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<InstanceFile, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Builds and validates the in-memory instance.
    pub fn build(&self) -> Result<Instance, ModelError> {
        let n = self.clients.len();
        let m = self.facilities.len();
        if n == 0 || m == 0 {
            return Err(ModelError::Validation("need at least one client and facility".into()));
        }
        let client_names: Vec<String> = self.clients.iter().map(|c| c.id.clone()).collect();
        let facility_names: Vec<String> = self.facilities.iter().map(|f| f.id.clone()).collect();
        for names in [&client_names, &facility_names] {
            let mut seen = BTreeSet::new();
            for name in names.iter() {
                if !seen.insert(name) {
                    return Err(ModelError::Validation(format!("duplicate id {name}")));
                }
            }
        }

        let (dist_cf, dist_cc) = match self.metric.as_str() {
            "euclidean" => {
                let cpts: Vec<&Vec<f64>> = self
                    .clients
                    .iter()
                    .map(|c| {
                        c.point.as_ref().ok_or_else(|| {
                            ModelError::Validation(format!("client {} lacks a point", c.id))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let fpts: Vec<&Vec<f64>> = self
                    .facilities
                    .iter()
                    .map(|f| {
                        f.point.as_ref().ok_or_else(|| {
                            ModelError::Validation(format!("facility {} lacks a point", f.id))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                let cf =
                    cpts.iter().map(|c| fpts.iter().map(|f| euclidean(c, f)).collect()).collect();
                let cc =
                    cpts.iter().map(|a| cpts.iter().map(|b| euclidean(a, b)).collect()).collect();
                (cf, cc)
            }
            "matrix" => {
                let matrix = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| ModelError::Validation("matrix metric needs a matrix".into()))?;
                build_matrix_metric(matrix, &self.clients, n, m)?
            }
            other => {
                return Err(ModelError::Validation(format!("unknown metric {other:?}")));
            }
        };

        let mut radii = Vec::with_capacity(n);
        for c in &self.clients {
            let r = self.radii.get(&c.id).ok_or_else(|| {
                ModelError::Validation(format!("no radius given for client {}", c.id))
            })?;
            radii.push(*r);
        }

        let fac_index: BTreeMap<&str, usize> =
            facility_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let resolve = |ids: &[String]| -> Result<Vec<usize>, ModelError> {
            ids.iter()
                .map(|s| {
                    fac_index
                        .get(s.as_str())
                        .copied()
                        .ok_or_else(|| ModelError::Validation(format!("unknown facility id {s}")))
                })
                .collect()
        };
        let constraint = match &self.constraint {
            ConstraintFile::None => StageOneConstraint::Unconstrained,
            ConstraintFile::Uniform { k } => {
                StageOneConstraint::Matroid(Matroid::Uniform { ground: m, k: *k })
            }
            ConstraintFile::Partition { blocks, caps } => {
                if blocks.len() != caps.len() {
                    return Err(ModelError::Validation("one cap per block required".into()));
                }
                let blocks: Vec<Vec<usize>> =
                    blocks.iter().map(|b| resolve(b)).collect::<Result<_, _>>()?;
                let mut seen = vec![false; m];
                for b in blocks.iter().flatten() {
                    if seen[*b] {
                        return Err(ModelError::Validation("blocks must be disjoint".into()));
                    }
                    seen[*b] = true;
                }
                StageOneConstraint::Matroid(Matroid::Partition {
                    ground: m,
                    blocks,
                    caps: caps.clone(),
                })
            }
            ConstraintFile::Explicit { bases } => {
                let bases: Vec<Vec<usize>> =
                    bases.iter().map(|b| resolve(b)).collect::<Result<_, _>>()?;
                StageOneConstraint::Matroid(Matroid::from_bases(m, &bases)?)
            }
            ConstraintFile::Multiknapsack { budgets } => {
                let mut weights = vec![vec![0u64; m]; budgets.len()];
                for (i, f) in self.facilities.iter().enumerate() {
                    let w = f.knapsack_weights.as_ref().ok_or_else(|| {
                        ModelError::Validation(format!("facility {} lacks knapsack weights", f.id))
                    })?;
                    if w.len() != budgets.len() {
                        return Err(ModelError::Validation(format!(
                            "facility {} has {} knapsack weights, expected {}",
                            f.id,
                            w.len(),
                            budgets.len()
                        )));
                    }
                    for (l, &wl) in w.iter().enumerate() {
                        weights[l][i] = wl;
                    }
                }
                StageOneConstraint::MultiKnapsack(KnapsackSystem::new(weights, budgets.clone())?)
            }
        };

        let instance = Instance {
            client_names,
            facility_names,
            stage1_costs: self.facilities.iter().map(|f| f.c1).collect(),
            dist_cf,
            dist_cc,
            radii,
            constraint,
            budget: self.budget,
        };
        instance.validate()?;
        Ok(instance)
    }
}

/// Accepts either an n x m client-facility matrix or an (n+m) x (n+m)
/// pairwise matrix (clients first). Validates symmetry and the triangle
/// inequality by checking that no shortest path beats a direct entry.
fn build_matrix_metric(
    matrix: &[Vec<f64>],
    clients: &[ClientFile],
    n: usize,
    m: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ModelError> {
    let rows = matrix.len();
    let full = n + m;
    let mut pair = vec![vec![f64::INFINITY; full]; full];
    if rows == full && matrix.iter().all(|r| r.len() == full) {
        for (a, row) in matrix.iter().enumerate() {
            for (b, &d) in row.iter().enumerate() {
                if d < 0.0 || !d.is_finite() {
                    return Err(ModelError::Validation("distances must be finite and >= 0".into()));
                }
                if (d - matrix[b][a]).abs() > DIST_TOL {
                    return Err(ModelError::Validation(format!("matrix not symmetric at ({a},{b})")));
                }
                pair[a][b] = d;
            }
            if pair[a][a].abs() > DIST_TOL {
                return Err(ModelError::Validation(format!("nonzero self-distance at {a}")));
            }
        }
    } else if rows == n && matrix.iter().all(|r| r.len() == m) {
        // bipartite distances; row indices may be remapped per client
        for (jpos, c) in clients.iter().enumerate() {
            let r = c.row.unwrap_or(jpos);
            if r >= n {
                return Err(ModelError::Validation(format!("client {} row out of range", c.id)));
            }
            for i in 0..m {
                let d = matrix[r][i];
                if d < 0.0 || !d.is_finite() {
                    return Err(ModelError::Validation("distances must be finite and >= 0".into()));
                }
                pair[jpos][n + i] = d;
                pair[n + i][jpos] = d;
            }
        }
        for v in 0..full {
            pair[v][v] = 0.0;
        }
    } else {
        return Err(ModelError::Validation(format!(
            "matrix must be {n}x{m} or {full}x{full}, got {rows} rows"
        )));
    }

    // shortest-path closure; given entries must not admit shortcuts
    let mut sp = pair.clone();
    for v in 0..full {
        sp[v][v] = 0.0;
    }
    for k in 0..full {
        for a in 0..full {
            if sp[a][k].is_finite() {
                for b in 0..full {
                    let via = sp[a][k] + sp[k][b];
                    if via < sp[a][b] {
                        sp[a][b] = via;
                    }
                }
            }
        }
    }
    for a in 0..full {
        for b in 0..full {
            if pair[a][b].is_finite() && sp[a][b] < pair[a][b] - DIST_TOL {
                return Err(ModelError::Validation(format!(
                    "triangle inequality violated between nodes {a} and {b}"
                )));
            }
        }
    }
    let dist_cf = (0..n).map(|j| (0..m).map(|i| sp[j][n + i]).collect()).collect();
    let dist_cc = (0..n).map(|j| (0..n).map(|j2| sp[j][j2]).collect()).collect();
    Ok((dist_cf, dist_cc))
}

impl ScenarioListFile {
    pub fn parse(text: &str) -> Result<ScenarioListFile, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn build(&self, instance: &Instance) -> Result<ExplicitDistribution, ModelError> {
        let cidx: BTreeMap<&str, usize> =
            instance.client_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let fidx: BTreeMap<&str, usize> =
            instance.facility_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for entry in &self.scenarios {
            let mut active = Vec::with_capacity(entry.clients.len());
            for cid in &entry.clients {
                let &j = cidx
                    .get(cid.as_str())
                    .ok_or_else(|| ModelError::Validation(format!("unknown client id {cid}")))?;
                active.push(j);
            }
            active.sort_unstable();
            active.dedup();
            let mut stage2_costs = vec![0.0; instance.num_facilities()];
            for (fid, &cost) in &entry.c2 {
                let &i = fidx
                    .get(fid.as_str())
                    .ok_or_else(|| ModelError::Validation(format!("unknown facility id {fid}")))?;
                stage2_costs[i] = cost;
            }
            scenarios.push(Scenario {
                name: entry.id.clone(),
                active,
                stage2_costs,
                probability: entry.p,
            });
        }
        let dist = ExplicitDistribution { scenarios };
        dist.validate(instance)?;
        Ok(dist)
    }

    pub fn from_distribution(instance: &Instance, dist: &ExplicitDistribution) -> ScenarioListFile {
        let scenarios = dist
            .scenarios
            .iter()
            .map(|s| ScenarioEntryFile {
                id: s.name.clone(),
                clients: s.active.iter().map(|&j| instance.client_names[j].clone()).collect(),
                c2: s
                    .stage2_costs
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c != 0.0)
                    .map(|(i, &c)| (instance.facility_names[i].clone(), c))
                    .collect(),
                p: s.probability,
            })
            .collect();
        ScenarioListFile { schema_version: 1, scenarios }
    }
}

/// Strategy JSON: facility names per scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub stage1_open: Vec<String>,
    pub stage2_open: BTreeMap<String, Vec<String>>,
}

impl StrategyFile {
    pub fn from_strategy(instance: &Instance, strategy: &Strategy) -> StrategyFile {
        StrategyFile {
            schema_version: 1,
            stage1_open: strategy
                .stage1_open
                .iter()
                .map(|&i| instance.facility_names[i].clone())
                .collect(),
            stage2_open: strategy
                .stage2_open
                .iter()
                .map(|(name, set)| {
                    (name.clone(), set.iter().map(|&i| instance.facility_names[i].clone()).collect())
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[cfg(test)]
pub(crate) fn line_instance(
    facility_xs: &[f64],
    client_xs: &[f64],
    radius: f64,
    c1: &[f64],
    budget: f64,
) -> Instance {
    let file = InstanceFile {
        schema_version: 1,
        metric: "euclidean".into(),
        clients: client_xs
            .iter()
            .enumerate()
            .map(|(k, &x)| ClientFile { id: format!("c{}", k + 1), point: Some(vec![x]), row: None })
            .collect(),
        facilities: facility_xs
            .iter()
            .enumerate()
            .map(|(k, &x)| FacilityFile {
                id: format!("f{}", k + 1),
                point: Some(vec![x]),
                c1: c1[k],
                knapsack_weights: None,
            })
            .collect(),
        radii: client_xs.iter().enumerate().map(|(k, _)| (format!("c{}", k + 1), radius)).collect(),
        matrix: None,
        constraint: ConstraintFile::None,
        budget,
    };
    file.build().expect("valid instance")
}
