//! Exact exponential-time baselines. These are the ground truth that every
//! approximation guarantee is tested against at desk scale, so they favor
//! obvious enumeration over cleverness.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{dist_le, ExplicitDistribution, FacilityId, Instance, Strategy};
use crate::robust_outlier::RwInstance;

/// Enumeration caps; exceeding one is a hard error, never a silent
/// approximation. `STOCHSUP_CAPS=<facilities>,<scenarios>` overrides the
/// facility and scenario caps.
#[derive(Debug, Clone)]
pub struct Caps {
    pub max_facilities: usize,
    pub max_scenarios: usize,
    pub max_rw_facilities: usize,
    /// Stage-II cover enumeration is capped at 2^this many candidates.
    pub max_cover_candidates: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_facilities: 12, max_scenarios: 8, max_rw_facilities: 15, max_cover_candidates: 12 }
    }
}

impl Caps {
    /// Applies the `STOCHSUP_CAPS` environment override when present.
    pub fn from_env() -> Caps {
        let mut caps = Caps::default();
        if let Ok(text) = std::env::var("STOCHSUP_CAPS") {
            let parts: Vec<&str> = text.split(',').collect();
            if let Some(v) = parts.first().and_then(|s| s.trim().parse().ok()) {
                caps.max_facilities = v;
                caps.max_rw_facilities = v;
            }
            if let Some(v) = parts.get(1).and_then(|s| s.trim().parse().ok()) {
                caps.max_scenarios = v;
            }
        }
        caps
    }
}

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
}

/// Exact optimum with a witness; the witness always re-evaluates to `value`.
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub value: f64,
    pub strategy: Strategy,
    pub enumerated: u64,
    /// Whether `value` fits the instance budget.
    pub within_budget: bool,
}

/// Exact RW optimum with its witness set.
#[derive(Debug, Clone)]
pub struct ExactRwResult {
    pub value: f64,
    pub open: BTreeSet<FacilityId>,
    pub enumerated: u64,
    pub within_budget: bool,
}

fn feasible_stage1_sets(
    instance: &Instance,
    cap: usize,
) -> Result<Vec<Vec<FacilityId>>, BruteForceError> {
    let m = instance.num_facilities();
    if m > cap {
        return Err(BruteForceError::CapExceeded(format!("{m} facilities > cap {cap}")));
    }
    let mut sets = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let set: Vec<FacilityId> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        if instance.constraint.is_feasible(&set) {
            sets.push(set);
        }
    }
    Ok(sets)
}

/// Minimum-cost stage-II cover of the uncovered clients by subset
/// enumeration over the union of their balls.
fn min_stage2_cover(
    instance: &Instance,
    radii: &[f64],
    active: &[usize],
    stage1: &[FacilityId],
    stage2_costs: &[f64],
    caps: &Caps,
) -> Result<Option<(f64, BTreeSet<FacilityId>)>, BruteForceError> {
    let uncovered: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&j| !stage1.iter().any(|&i| dist_le(instance.dist(j, i), radii[j])))
        .collect();
    if uncovered.is_empty() {
        return Ok(Some((0.0, BTreeSet::new())));
    }
    let mut candidates: BTreeSet<FacilityId> = BTreeSet::new();
    for &j in &uncovered {
        for i in 0..instance.num_facilities() {
            if dist_le(instance.dist(j, i), radii[j]) {
                candidates.insert(i);
            }
        }
    }
    let candidates: Vec<FacilityId> = candidates.into_iter().collect();
    if candidates.len() > caps.max_cover_candidates {
        return Err(BruteForceError::CapExceeded(format!(
            "{} stage-II cover candidates > cap {}",
            candidates.len(),
            caps.max_cover_candidates
        )));
    }
    let mut best: Option<(f64, BTreeSet<FacilityId>)> = None;
    'subset: for mask in 0u32..(1u32 << candidates.len()) {
        let mut cost = 0.0;
        for (pos, &i) in candidates.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                cost += stage2_costs[i];
            }
        }
        if let Some((bc, _)) = &best {
            if cost >= *bc {
                continue;
            }
        }
        for &j in &uncovered {
            let covered = candidates.iter().enumerate().any(|(pos, &i)| {
                mask & (1 << pos) != 0 && dist_le(instance.dist(j, i), radii[j])
            });
            if !covered {
                continue 'subset;
            }
        }
        let set: BTreeSet<FacilityId> = candidates
            .iter()
            .enumerate()
            .filter(|(pos, _)| mask & (1 << pos) != 0)
            .map(|(_, &i)| i)
            .collect();
        best = Some((cost, set));
    }
    Ok(best)
}

/// Enumerates every stage-I-feasible set and, per scenario, the exact
/// min-cost stage-II cover at the given radii. Returns the minimal expected
/// cost or `None` when no strategy covers every scenario.
pub fn exact_two_stage(
    instance: &Instance,
    dist: &ExplicitDistribution,
    radii: &[f64],
    caps: &Caps,
) -> Result<Option<ExactResult>, BruteForceError> {
    if dist.scenarios.len() > caps.max_scenarios {
        return Err(BruteForceError::CapExceeded(format!(
            "{} scenarios > cap {}",
            dist.scenarios.len(),
            caps.max_scenarios
        )));
    }
    let stage1_sets = feasible_stage1_sets(instance, caps.max_facilities)?;
    let mut best: Option<ExactResult> = None;
    let mut enumerated = 0u64;
    for stage1 in &stage1_sets {
        enumerated += 1;
        let c1: f64 = stage1.iter().map(|&i| instance.stage1_costs[i]).sum();
        let mut expected = c1;
        let mut stage2_map: BTreeMap<String, BTreeSet<FacilityId>> = BTreeMap::new();
        let mut coverable = true;
        for scenario in &dist.scenarios {
            match min_stage2_cover(
                instance,
                radii,
                &scenario.active,
                stage1,
                &scenario.stage2_costs,
                caps,
            )? {
                Some((c2, set)) => {
                    expected += scenario.probability * c2;
                    stage2_map.insert(scenario.name.clone(), set);
                }
                None => {
                    coverable = false;
                    break;
                }
            }
        }
        if !coverable {
            continue;
        }
        let better = best.as_ref().map_or(true, |b| expected < b.value);
        if better {
            best = Some(ExactResult {
                value: expected,
                strategy: Strategy {
                    stage1_open: stage1.iter().copied().collect(),
                    stage2_open: stage2_map,
                },
                enumerated: 0,
                within_budget: expected <= instance.budget + crate::model::BUDGET_TOL,
            });
        }
    }
    Ok(best.map(|mut b| {
        b.enumerated = enumerated;
        b
    }))
}

/// Enumerates every constraint-feasible set for a robust-weighted instance
/// and scores facility weight plus uncovered-client penalties.
pub fn exact_rw(rw: &RwInstance, caps: &Caps) -> Result<ExactRwResult, BruteForceError> {
    let m = rw.num_facilities();
    if m > caps.max_rw_facilities {
        return Err(BruteForceError::CapExceeded(format!(
            "{m} facilities > cap {}",
            caps.max_rw_facilities
        )));
    }
    let mut best: Option<(f64, BTreeSet<FacilityId>)> = None;
    let mut enumerated = 0u64;
    for mask in 0u32..(1u32 << m) {
        let set: Vec<FacilityId> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        if !rw.constraint.is_feasible(&set) {
            continue;
        }
        enumerated += 1;
        let value = rw.objective(&set, 1.0);
        let better = best.as_ref().map_or(true, |(bv, _)| value < *bv);
        if better {
            best = Some((value, set.into_iter().collect()));
        }
    }
    let (value, open) = best.expect("empty set is always feasible");
    Ok(ExactRwResult {
        value,
        open,
        enumerated,
        within_budget: value <= rw.budget + crate::model::BUDGET_TOL,
    })
}

/// Smallest homogeneous radius at which [`exact_two_stage`] stays within the
/// instance budget; scans the sorted candidate distances by bisection
/// (feasible cost is non-increasing in the radius).
pub fn exact_optimal_radius(
    instance: &Instance,
    dist: &ExplicitDistribution,
    caps: &Caps,
) -> Result<Option<f64>, BruteForceError> {
    let candidates = instance.candidate_radii();
    let feasible_at = |r: f64| -> Result<bool, BruteForceError> {
        let radii = vec![r; instance.num_clients()];
        Ok(exact_two_stage(instance, dist, &radii, caps)?.map_or(false, |res| res.within_budget))
    };
    let mut lo = 0usize;
    let mut hi = candidates.len();
    if hi == 0 || !feasible_at(candidates[hi - 1])? {
        return Ok(None);
    }
    // invariant: candidates[hi-1] feasible; bisect the boundary
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if feasible_at(candidates[mid - 1])? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if feasible_at(candidates[lo])? {
        Ok(Some(candidates[lo]))
    } else {
        Ok(Some(candidates[hi - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::line_instance;
    use crate::model::Scenario;

    /// The two-facility line fixture used across the crate's tests.
    fn e1() -> (Instance, ExplicitDistribution) {
        let inst = line_instance(&[0.0, 10.0], &[1.0, 9.0], 2.0, &[5.0, 5.0], 9.0);
        let dist = ExplicitDistribution {
            scenarios: vec![
                Scenario {
                    name: "A1".into(),
                    active: vec![0],
                    stage2_costs: vec![2.0, 2.0],
                    probability: 0.5,
                },
                Scenario {
                    name: "A2".into(),
                    active: vec![0, 1],
                    stage2_costs: vec![2.0, 8.0],
                    probability: 0.5,
                },
            ],
        };
        (inst, dist)
    }

    #[test]
    fn e1_optimum_is_six() {
        let (inst, dist) = e1();
        let res = exact_two_stage(&inst, &dist, &inst.radii, &Caps::default()).unwrap().unwrap();
        // all-stage-II strategy: 0.5*2 + 0.5*(2+8) = 6
        assert!((res.value - 6.0).abs() < 1e-12);
        assert!(res.within_budget);
        assert!(res.strategy.stage1_open.is_empty());
        // witness re-evaluates to the reported value
        let cost = crate::model::expected_cost(&inst, &dist, &res.strategy).unwrap();
        assert!((cost - res.value).abs() < 1e-12);
    }

    #[test]
    fn uncoverable_scenario_returns_none() {
        let (inst, _) = e1();
        let dist = ExplicitDistribution {
            scenarios: vec![Scenario {
                name: "far".into(),
                active: vec![0],
                stage2_costs: vec![1.0, 1.0],
                probability: 1.0,
            }],
        };
        // radius too small for any facility to reach the client at x=1
        let res = exact_two_stage(&inst, &dist, &[0.5, 0.5], &Caps::default()).unwrap();
        assert!(res.is_none());
    }

    #[test]
    fn zero_cost_facilities_cost_zero() {
        let inst = line_instance(&[0.0, 10.0], &[1.0, 9.0], 2.0, &[0.0, 0.0], 9.0);
        let dist = ExplicitDistribution {
            scenarios: vec![Scenario {
                name: "a".into(),
                active: vec![0, 1],
                stage2_costs: vec![0.0, 0.0],
                probability: 1.0,
            }],
        };
        let res = exact_two_stage(&inst, &dist, &inst.radii, &Caps::default()).unwrap().unwrap();
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn optimal_radius_with_huge_budget_is_covering_radius() {
        let (mut inst, dist) = e1();
        inst.budget = 1e9;
        let r = exact_optimal_radius(&inst, &dist, &Caps::default()).unwrap().unwrap();
        // clients at 1 and 9 each have a facility at distance 1
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_radius_single_pair_is_their_distance() {
        let inst = line_instance(&[4.0], &[0.0], 4.0, &[1.0], 10.0);
        let dist = ExplicitDistribution {
            scenarios: vec![Scenario {
                name: "a".into(),
                active: vec![0],
                stage2_costs: vec![1.0],
                probability: 1.0,
            }],
        };
        let r = exact_optimal_radius(&inst, &dist, &Caps::default()).unwrap().unwrap();
        assert_eq!(r, 4.0);
    }

    #[test]
    fn e1_optimal_radius_at_budget_nine() {
        let (inst, dist) = e1();
        let r = exact_optimal_radius(&inst, &dist, &Caps::default()).unwrap().unwrap();
        // at R=1 the all-stage-II strategy already costs 6 <= B=9
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_cost_non_increasing_in_radius() {
        let (inst, dist) = e1();
        let mut prev = f64::INFINITY;
        for r in [1.0, 2.0, 5.0, 9.0, 11.0] {
            let radii = vec![r; inst.num_clients()];
            if let Some(res) = exact_two_stage(&inst, &dist, &radii, &Caps::default()).unwrap() {
                assert!(res.value <= prev + 1e-12, "cost rose at radius {r}");
                prev = res.value;
            }
        }
        assert!(prev.is_finite());
    }

    #[test]
    fn caps_are_hard_errors() {
        let (inst, dist) = e1();
        let caps = Caps { max_facilities: 1, ..Caps::default() };
        assert!(matches!(
            exact_two_stage(&inst, &dist, &inst.radii, &caps),
            Err(BruteForceError::CapExceeded(_))
        ));
    }
}
