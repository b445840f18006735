//! Shared random-instance builders for the integration suites. Everything
//! is line geometry with clients placed near facilities, so the standing
//! reachability assumption holds by construction.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use stochsup::matroid::{KnapsackSystem, Matroid};
use stochsup::model::{
    ClientFile, ConstraintFile, ExplicitDistribution, FacilityFile, Instance, InstanceFile,
    Scenario, StageOneConstraint,
};
use stochsup::robust_outlier::RwInstance;

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    None,
    Uniform,
    Partition,
    Knapsack,
    ExplicitSmall,
}

pub struct TwoStageParams {
    pub n_max: usize,
    pub m_max: usize,
    pub q_max: usize,
    pub radius: f64,
    pub constraint: ConstraintKind,
}

impl Default for TwoStageParams {
    fn default() -> Self {
        TwoStageParams { n_max: 8, m_max: 6, q_max: 5, radius: 2.5, constraint: ConstraintKind::None }
    }
}

fn random_constraint(rng: &mut ChaCha8Rng, kind: ConstraintKind, m: usize) -> StageOneConstraint {
    match kind {
        ConstraintKind::None => StageOneConstraint::Unconstrained,
        ConstraintKind::Uniform => {
            StageOneConstraint::Matroid(Matroid::Uniform { ground: m, k: rng.gen_range(1..=m) })
        }
        ConstraintKind::Partition => {
            let mut blocks = vec![Vec::new(), Vec::new()];
            for i in 0..m {
                blocks[rng.gen_range(0..2usize)].push(i);
            }
            blocks.retain(|b| !b.is_empty());
            let caps = blocks.iter().map(|_| rng.gen_range(1..=2usize)).collect();
            StageOneConstraint::Matroid(Matroid::Partition { ground: m, blocks, caps })
        }
        ConstraintKind::Knapsack => {
            let l = rng.gen_range(1..=2usize);
            let weights: Vec<Vec<u64>> =
                (0..l).map(|_| (0..m).map(|_| rng.gen_range(0..=2u64)).collect()).collect();
            let budgets: Vec<u64> = (0..l).map(|_| rng.gen_range(1..=4u64)).collect();
            StageOneConstraint::MultiKnapsack(KnapsackSystem::new(weights, budgets).unwrap())
        }
        ConstraintKind::ExplicitSmall => StageOneConstraint::Matroid(random_binary_matroid(rng, m)),
    }
}

/// A random linear matroid over GF(2): each element is a random nonzero
/// 3-bit column, independence is linear independence. Always a matroid, so
/// no validation pass is needed.
pub fn random_binary_matroid(rng: &mut ChaCha8Rng, m: usize) -> Matroid {
    assert!(m <= 12);
    let cols: Vec<u8> = (0..m).map(|_| rng.gen_range(1..8u8)).collect();
    let mut independent = vec![false; 1 << m];
    'subset: for mask in 0usize..(1 << m) {
        // GF(2) Gaussian elimination, one pivot slot per bit position
        let mut slots = [0u8; 8];
        for (i, &c) in cols.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let mut v = c;
            loop {
                if v == 0 {
                    continue 'subset; // linearly dependent
                }
                let top = 7 - v.leading_zeros() as usize;
                if slots[top] == 0 {
                    slots[top] = v;
                    break;
                }
                v ^= slots[top];
            }
        }
        independent[mask] = true;
    }
    Matroid::ExplicitSmall { ground: m, independent }
}

fn line_instance_file(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    radius: f64,
    budget: f64,
) -> InstanceFile {
    let fxs: Vec<f64> = (0..m).map(|_| round3(rng.gen_range(0.0..20.0))).collect();
    let cxs: Vec<f64> = (0..n)
        .map(|_| {
            let base = fxs[rng.gen_range(0..m)];
            round3(base + rng.gen_range(-0.9 * radius..0.9 * radius))
        })
        .collect();
    InstanceFile {
        schema_version: 1,
        metric: "euclidean".into(),
        clients: cxs
            .iter()
            .enumerate()
            .map(|(j, &x)| ClientFile { id: format!("c{j}"), point: Some(vec![x]), row: None })
            .collect(),
        facilities: fxs
            .iter()
            .enumerate()
            .map(|(i, &x)| FacilityFile {
                id: format!("f{i}"),
                point: Some(vec![x]),
                c1: round3(rng.gen_range(1.0..10.0)),
                knapsack_weights: None,
            })
            .collect(),
        radii: (0..n).map(|j| (format!("c{j}"), radius)).collect(),
        matrix: None,
        constraint: ConstraintFile::None,
        budget,
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Random two-stage instance plus explicit distribution; the budget starts
/// huge and is meant to be re-pinned by the caller (usually to the exact
/// optimum).
pub fn random_two_stage(
    rng: &mut ChaCha8Rng,
    params: &TwoStageParams,
) -> (Instance, ExplicitDistribution) {
    let n = rng.gen_range(1..=params.n_max);
    let m = rng.gen_range(2..=params.m_max);
    let q = rng.gen_range(1..=params.q_max);
    let file = line_instance_file(rng, n, m, params.radius, 1e12);
    let mut inst = file.build().expect("valid random instance");
    inst.constraint = random_constraint(rng, params.constraint, m);
    let dist = random_distribution(rng, &inst, q);
    (inst, dist)
}

/// Random explicit distribution over `q` scenarios with exact unit mass.
pub fn random_distribution(
    rng: &mut ChaCha8Rng,
    instance: &Instance,
    q: usize,
) -> ExplicitDistribution {
    let n = instance.num_clients();
    let m = instance.num_facilities();
    let raw: Vec<f64> = (0..q).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let scenarios = (0..q)
        .map(|k| {
            let mut active: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < 0.5).collect();
            if active.is_empty() {
                active.push(rng.gen_range(0..n));
            }
            Scenario {
                name: format!("s{k}"),
                active,
                stage2_costs: (0..m).map(|_| round3(rng.gen_range(1.0..10.0))).collect(),
                probability: raw[k] / total,
            }
        })
        .collect();
    ExplicitDistribution { scenarios }
}

/// A random held-out scenario for extension tests.
pub fn random_scenario(rng: &mut ChaCha8Rng, instance: &Instance, name: &str) -> Scenario {
    let n = instance.num_clients();
    let m = instance.num_facilities();
    let active: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < 0.5).collect();
    Scenario {
        name: name.to_string(),
        active,
        stage2_costs: (0..m).map(|_| round3(rng.gen_range(1.0..10.0))).collect(),
        probability: 0.0,
    }
}

pub struct RwParams {
    pub n_max: usize,
    pub m_max: usize,
    pub radii_choices: &'static [f64],
    pub constraint: ConstraintKind,
}

/// Random robust-weighted instance; V starts at zero and is re-pinned by
/// the caller.
pub fn random_rw(rng: &mut ChaCha8Rng, params: &RwParams) -> RwInstance {
    let n = rng.gen_range(1..=params.n_max);
    let m = rng.gen_range(2..=params.m_max);
    let max_radius = params.radii_choices.iter().cloned().fold(0.0, f64::max);
    let file = line_instance_file(rng, n, m, max_radius, 0.0);
    let inst = file.build().expect("valid random instance");
    let radii: Vec<f64> =
        (0..n).map(|_| params.radii_choices[rng.gen_range(0..params.radii_choices.len())]).collect();
    let penalties: Vec<f64> = (0..n).map(|_| round3(rng.gen_range(0.0..6.0))).collect();
    let weights: Vec<f64> = (0..m).map(|_| round3(rng.gen_range(0.0..6.0))).collect();
    let mut rw = RwInstance::from_instance(&inst, radii, penalties, weights, 0.0);
    rw.constraint = random_constraint(rng, params.constraint, m);
    rw
}
