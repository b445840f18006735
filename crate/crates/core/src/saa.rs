//! Black-box sample average approximation with scenario discarding: draw
//! samples, solve the empirical instance at an inflated budget with an
//! efficiently generalizable inner algorithm, pick the discarding threshold
//! from the training costs, and extend to unseen scenarios on demand.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpConfig;
use crate::model::{
    dist_le, ExplicitDistribution, FacilityId, Instance, ModelError, Scenario,
};
use crate::reduction::{
    extend_reduction, reduce_and_solve, HomogeneousRwSolver, IterativeRoundingSolver,
    PenaltyWeighting, ReductionCertificate, ReductionError, RwSolver,
};
use crate::robust_outlier::{RwError, SolveOutcome};
use crate::sup_rounding::{
    extend_sup, solve_sup_poly, strategy_class_log, SupCertificate, SupError,
};

#[derive(Debug, Error)]
pub enum SaaError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("sup solver error: {0}")]
    Sup(#[from] SupError),
    #[error("reduction error: {0}")]
    Reduction(#[from] ReductionError),
    #[error("rw solver error: {0}")]
    Rw(#[from] RwError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

/// Parameters of the SAA scheme. `samples` overrides the formula-derived
/// count; the formula constants are engineering estimates surfaced here
/// because the asymptotic bounds hide them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaaConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub seed: u64,
    /// Multiplier in the discarding-run sample formula.
    #[serde(default = "default_n_constant")]
    pub n_constant: f64,
    /// Multiplier in the bounded-range sample formula.
    #[serde(default = "default_delta_constant")]
    pub delta_constant: f64,
}

fn default_n_constant() -> f64 {
    4.0
}

fn default_delta_constant() -> f64 {
    3.0
}

impl SaaConfig {
    pub fn new(epsilon: f64, alpha: f64, gamma: f64, seed: u64) -> SaaConfig {
        SaaConfig {
            epsilon,
            alpha,
            gamma,
            samples: None,
            seed,
            n_constant: default_n_constant(),
            delta_constant: default_delta_constant(),
        }
    }

    pub fn validate(&self) -> Result<(), SaaError> {
        for (name, v) in [("epsilon", self.epsilon), ("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(0.0..1.0).contains(&v) || v == 0.0 {
                return Err(SaaError::InvalidConfig(format!("{name} must be in (0,1), got {v}")));
            }
        }
        Ok(())
    }

    /// Outer repetitions: ceil(log_{13/12}(1/gamma)), at least one.
    pub fn repetitions(&self, gamma: f64) -> usize {
        ((1.0 / gamma).ln() / (13.0f64 / 12.0).ln()).ceil().max(1.0) as usize
    }

    /// Formula sample count for the discarding scheme:
    /// ceil(c / (eps*alpha) * ln(n*m*psi / gamma)), floored at 1/eps.
    pub fn formula_samples(&self, n: usize, m: usize, log_psi: f64, gamma: f64) -> usize {
        let log_term = ((n * m) as f64 / gamma).ln() + log_psi;
        let formula = self.n_constant / (self.epsilon * self.alpha) * log_term;
        formula.max(1.0 / self.epsilon).ceil() as usize
    }

    /// Formula sample count under a stage-II cost bound of `delta`:
    /// ceil(c * (delta/B) / eps^2 * ln(psi/gamma)), floored at 1/eps.
    /// The bound enters relative to the budget because the guarantee is
    /// invariant under cost rescaling.
    pub fn delta_samples(&self, delta: f64, budget: f64, log_psi: f64) -> usize {
        let rel = if budget > 0.0 { delta / budget } else { delta };
        let formula =
            self.delta_constant * rel / (self.epsilon * self.epsilon) * (log_psi + (1.0 / self.gamma).ln());
        formula.max(1.0 / self.epsilon).ceil() as usize
    }

    fn rng_for_repetition(&self, repetition: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(repetition as u64 + 1)))
    }
}

// ---------------------------------------------------------------------------
// Black-box oracles
// ---------------------------------------------------------------------------

/// Seeded scenario generators for the black-box model. The generator kind
/// and the seed are recorded in run manifests, so draws replay exactly.
#[derive(Debug, Clone)]
pub enum BlackBoxOracle {
    /// Finite distribution sampled by inverse CDF.
    Explicit { dist: ExplicitDistribution },
    /// Independent per-client activation; one cost multiplier per scenario
    /// drawn from a discrete set, applied to a base cost vector.
    Bernoulli {
        activation: Vec<f64>,
        base_costs: Vec<f64>,
        multipliers: Vec<f64>,
        multiplier_probs: Vec<f64>,
    },
}

impl BlackBoxOracle {
    pub fn kind(&self) -> &'static str {
        match self {
            BlackBoxOracle::Explicit { .. } => "explicit",
            BlackBoxOracle::Bernoulli { .. } => "bernoulli",
        }
    }

    /// Draws one scenario; `tag` becomes part of its name so samples stay
    /// distinct inside an empirical distribution.
    pub fn draw(&self, rng: &mut ChaCha8Rng, tag: &str) -> Scenario {
        match self {
            BlackBoxOracle::Explicit { dist } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = dist.scenarios.len() - 1;
                for (k, s) in dist.scenarios.iter().enumerate() {
                    acc += s.probability;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                let src = &dist.scenarios[pick];
                Scenario {
                    name: format!("{tag}:{}", src.name),
                    active: src.active.clone(),
                    stage2_costs: src.stage2_costs.clone(),
                    probability: 0.0,
                }
            }
            BlackBoxOracle::Bernoulli { activation, base_costs, multipliers, multiplier_probs } => {
                let active: Vec<usize> = activation
                    .iter()
                    .enumerate()
                    .filter(|&(_, &p)| rng.gen::<f64>() < p)
                    .map(|(j, _)| j)
                    .collect();
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = multipliers.len() - 1;
                for (k, &p) in multiplier_probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                Scenario {
                    name: tag.to_string(),
                    active,
                    stage2_costs: base_costs.iter().map(|&c| c * multipliers[pick]).collect(),
                    probability: 0.0,
                }
            }
        }
    }

    pub fn draw_batch(&self, rng: &mut ChaCha8Rng, count: usize, prefix: &str) -> Vec<Scenario> {
        (0..count).map(|v| self.draw(rng, &format!("{prefix}v{v}"))).collect()
    }
}

// ---------------------------------------------------------------------------
// Efficiently generalizable inner algorithms
// ---------------------------------------------------------------------------

/// Extension certificate of whichever inner algorithm produced a strategy.
#[derive(Debug, Clone)]
pub enum GenCertificate {
    Sup(SupCertificate),
    Reduction(ReductionCertificate),
}

/// A solved empirical instance: explicit strategy on the training samples
/// plus the certificate that extends it.
#[derive(Debug, Clone)]
pub struct GenSolution {
    pub strategy: crate::model::Strategy,
    pub certificate: GenCertificate,
}

/// The polynomial-scenarios inner algorithms the SAA driver can call:
/// solve on an explicit distribution, extend to unseen scenarios, and
/// report the coverage factor and the log of the strategy-class size.
pub trait GeneralizableAlgorithm {
    fn name(&self) -> &'static str;
    fn eta(&self) -> f64;
    fn log_psi(&self, instance: &Instance) -> f64;
    fn solve(
        &self,
        instance: &Instance,
        dist: &ExplicitDistribution,
        radii: &[f64],
        budget: f64,
    ) -> Result<SolveOutcome<GenSolution>, SaaError>;
    fn extend(
        &self,
        instance: &Instance,
        certificate: &GenCertificate,
        scenario: &Scenario,
    ) -> BTreeSet<FacilityId>;
}

/// Correlated LP rounding (factor 3, psi = (n+1)!).
pub struct Sup3Algorithm {
    pub lp_cfg: LpConfig,
}

impl GeneralizableAlgorithm for Sup3Algorithm {
    fn name(&self) -> &'static str {
        "sup3"
    }

    fn eta(&self) -> f64 {
        3.0
    }

    fn log_psi(&self, instance: &Instance) -> f64 {
        strategy_class_log(instance.num_clients())
    }

    fn solve(
        &self,
        instance: &Instance,
        dist: &ExplicitDistribution,
        radii: &[f64],
        budget: f64,
    ) -> Result<SolveOutcome<GenSolution>, SaaError> {
        let radius = radii[0];
        Ok(match solve_sup_poly(instance, dist, radius, budget, &self.lp_cfg)? {
            SolveOutcome::Feasible(out) => SolveOutcome::Feasible(GenSolution {
                strategy: out.strategy,
                certificate: GenCertificate::Sup(out.certificate),
            }),
            SolveOutcome::Infeasible => SolveOutcome::Infeasible,
        })
    }

    fn extend(
        &self,
        instance: &Instance,
        certificate: &GenCertificate,
        scenario: &Scenario,
    ) -> BTreeSet<FacilityId> {
        match certificate {
            GenCertificate::Sup(c) => extend_sup(instance, c, scenario),
            GenCertificate::Reduction(_) => unreachable!("certificate kind mismatch"),
        }
    }
}

/// Which RW solver backs a reduction-based inner algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    /// Solve-or-cut, homogeneous (overall factor 5).
    Homogeneous,
    /// Iterative rounding, inhomogeneous matroids (overall factor 11).
    IterativeRounding,
}

/// Reduction to robust weighted supplier (psi = 2^m).
pub struct ReductionAlgorithm {
    pub kind: ReductionKind,
    pub lp_cfg: LpConfig,
    pub weighting: PenaltyWeighting,
}

impl GeneralizableAlgorithm for ReductionAlgorithm {
    fn name(&self) -> &'static str {
        match self.kind {
            ReductionKind::Homogeneous => "reduction-rw3",
            ReductionKind::IterativeRounding => "reduction-rw9",
        }
    }

    fn eta(&self) -> f64 {
        match self.kind {
            ReductionKind::Homogeneous => 5.0,
            ReductionKind::IterativeRounding => 11.0,
        }
    }

    fn log_psi(&self, instance: &Instance) -> f64 {
        instance.num_facilities() as f64 * 2.0f64.ln()
    }

    fn solve(
        &self,
        instance: &Instance,
        dist: &ExplicitDistribution,
        radii: &[f64],
        budget: f64,
    ) -> Result<SolveOutcome<GenSolution>, SaaError> {
        let solver: Box<dyn RwSolver> = match self.kind {
            ReductionKind::Homogeneous => Box::new(HomogeneousRwSolver {
                radius: radii[0],
                lp_cfg: self.lp_cfg.clone(),
            }),
            ReductionKind::IterativeRounding => {
                Box::new(IterativeRoundingSolver { lp_cfg: self.lp_cfg.clone() })
            }
        };
        Ok(match reduce_and_solve(instance, dist, radii, solver.as_ref(), self.weighting, budget)? {
            SolveOutcome::Feasible(out) => SolveOutcome::Feasible(GenSolution {
                strategy: out.strategy,
                certificate: GenCertificate::Reduction(out.certificate),
            }),
            SolveOutcome::Infeasible => SolveOutcome::Infeasible,
        })
    }

    fn extend(
        &self,
        instance: &Instance,
        certificate: &GenCertificate,
        scenario: &Scenario,
    ) -> BTreeSet<FacilityId> {
        match certificate {
            GenCertificate::Reduction(c) => extend_reduction(instance, c, scenario),
            GenCertificate::Sup(_) => unreachable!("certificate kind mismatch"),
        }
    }
}

// ---------------------------------------------------------------------------
// Discarding strategy and the SAA loop
// ---------------------------------------------------------------------------

/// The black-box strategy: a certificate, the coverage factor of the inner
/// algorithm, and the discarding threshold. A scenario whose extended
/// stage-II cost exceeds the threshold gets no stage-II openings.
#[derive(Debug, Clone)]
pub struct DiscardingStrategy {
    pub certificate: GenCertificate,
    pub eta: f64,
    /// Stage-II cost threshold T; infinite disables discarding.
    pub threshold: f64,
}

impl DiscardingStrategy {
    pub fn stage1_open(&self) -> &BTreeSet<FacilityId> {
        match &self.certificate {
            GenCertificate::Sup(c) => &c.stage1_open,
            GenCertificate::Reduction(c) => &c.stage1_open,
        }
    }
}

/// Threshold selection: the ceil(alpha*N)-th largest training cost under
/// the deterministic tie-break order (cost, then sample index, larger
/// meaning costlier). This stands in for the continuous-CDF assumption, so
/// reruns are reproducible.
pub fn pick_threshold(sample_costs: &[f64], alpha: f64) -> f64 {
    assert!(!sample_costs.is_empty());
    let mut order: Vec<usize> = (0..sample_costs.len()).collect();
    order.sort_by(|&a, &b| {
        sample_costs[b].partial_cmp(&sample_costs[a]).unwrap().then(b.cmp(&a))
    });
    let k = (alpha * sample_costs.len() as f64).ceil() as usize;
    let k = k.clamp(1, sample_costs.len());
    sample_costs[order[k - 1]]
}

/// Per-repetition record for the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub status: String,
}

/// Everything an SAA run reports besides the strategy itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaaRunReport {
    pub samples_used: usize,
    pub samples_formula: usize,
    pub repetitions_allowed: usize,
    pub repetitions: Vec<RepetitionRecord>,
    pub threshold: f64,
    pub inner: String,
}

/// One SAA run at fixed radii: up to H sampling repetitions, each solving
/// the empirical distribution at budget (1+eps)B; on the first success the
/// discarding threshold is picked from the training stage-II costs.
pub fn saa_run(
    instance: &Instance,
    oracle: &BlackBoxOracle,
    algo: &dyn GeneralizableAlgorithm,
    radii: &[f64],
    config: &SaaConfig,
) -> Result<SolveOutcome<(DiscardingStrategy, SaaRunReport)>, SaaError> {
    config.validate()?;
    saa_run_with(instance, oracle, algo, radii, config, config.gamma, None)
}

/// Shared-pool variant: `pools` (one batch per repetition) take the place
/// of fresh oracle draws, which is how the radius search reuses one sample
/// pool across all candidate radii.
fn saa_run_with(
    instance: &Instance,
    oracle: &BlackBoxOracle,
    algo: &dyn GeneralizableAlgorithm,
    radii: &[f64],
    config: &SaaConfig,
    gamma: f64,
    pools: Option<&[Vec<Scenario>]>,
) -> Result<SolveOutcome<(DiscardingStrategy, SaaRunReport)>, SaaError> {
    let n_formula = config.formula_samples(
        instance.num_clients(),
        instance.num_facilities(),
        algo.log_psi(instance),
        gamma,
    );
    let n_samples = config.samples.unwrap_or(n_formula);
    if n_samples == 0 {
        return Err(SaaError::InvalidConfig("sample count must be positive".into()));
    }
    let reps = config.repetitions(gamma);
    let inflated = (1.0 + config.epsilon) * instance.budget;
    let mut records = Vec::new();
    for h in 0..reps {
        let batch: Vec<Scenario> = match pools {
            Some(p) => p[h].clone(),
            None => {
                let mut rng = config.rng_for_repetition(h);
                oracle.draw_batch(&mut rng, n_samples, &format!("h{h}"))
            }
        };
        let empirical = ExplicitDistribution::uniform(batch);
        match algo.solve(instance, &empirical, radii, inflated)? {
            SolveOutcome::Feasible(solution) => {
                records.push(RepetitionRecord { repetition: h, status: "feasible".into() });
                let costs: Vec<f64> = empirical
                    .scenarios
                    .iter()
                    .map(|s| {
                        solution.strategy.stage2_open[&s.name]
                            .iter()
                            .map(|&i| s.stage2_costs[i])
                            .sum()
                    })
                    .collect();
                let threshold = pick_threshold(&costs, config.alpha);
                let report = SaaRunReport {
                    samples_used: n_samples,
                    samples_formula: n_formula,
                    repetitions_allowed: reps,
                    repetitions: records,
                    threshold,
                    inner: algo.name().into(),
                };
                let strategy = DiscardingStrategy {
                    certificate: solution.certificate,
                    eta: algo.eta(),
                    threshold,
                };
                return Ok(SolveOutcome::Feasible((strategy, report)));
            }
            SolveOutcome::Infeasible => {
                records.push(RepetitionRecord { repetition: h, status: "infeasible".into() });
            }
        }
    }
    Ok(SolveOutcome::Infeasible)
}

/// Result of one radius guess inside the radius search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadiusTrial {
    pub radius: f64,
    pub status: String,
}

/// Homogeneous radius optimization: tries every candidate radius (sorted
/// distinct client-facility distances) against one upfront sample pool,
/// with the per-candidate error budget gamma/(n*m), and returns the
/// smallest radius that yields a strategy.
pub fn radius_search(
    instance: &Instance,
    oracle: &BlackBoxOracle,
    algo: &dyn GeneralizableAlgorithm,
    config: &SaaConfig,
) -> Result<SolveOutcome<(f64, DiscardingStrategy, SaaRunReport, Vec<RadiusTrial>)>, SaaError> {
    config.validate()?;
    let n = instance.num_clients();
    let m = instance.num_facilities();
    let gamma_per = config.gamma / ((n * m) as f64);
    let n_samples = config
        .samples
        .unwrap_or_else(|| config.formula_samples(n, m, algo.log_psi(instance), gamma_per));
    let reps = config.repetitions(gamma_per);
    // one pool for all radius guesses
    let pools: Vec<Vec<Scenario>> = (0..reps)
        .map(|h| {
            let mut rng = config.rng_for_repetition(h);
            oracle.draw_batch(&mut rng, n_samples, &format!("h{h}"))
        })
        .collect();
    let mut config_fixed = config.clone();
    config_fixed.samples = Some(n_samples);
    let mut trials = Vec::new();
    for radius in instance.candidate_radii() {
        let radii = vec![radius; n];
        match saa_run_with(instance, oracle, algo, &radii, &config_fixed, gamma_per, Some(&pools))? {
            SolveOutcome::Feasible((strategy, report)) => {
                trials.push(RadiusTrial { radius, status: "feasible".into() });
                return Ok(SolveOutcome::Feasible((radius, strategy, report, trials)));
            }
            SolveOutcome::Infeasible => {
                trials.push(RadiusTrial { radius, status: "infeasible".into() });
            }
        }
    }
    Ok(SolveOutcome::Infeasible)
}

/// Single-round SAA under a trusted stage-II cost bound: no repetition
/// loop, no discarding; the inner algorithm runs at budget (1+eps/3)B on a
/// batch sized by the bounded-range formula.
pub fn saa_bounded_delta(
    instance: &Instance,
    oracle: &BlackBoxOracle,
    algo: &dyn GeneralizableAlgorithm,
    radii: &[f64],
    delta: f64,
    config: &SaaConfig,
) -> Result<SolveOutcome<(DiscardingStrategy, SaaRunReport)>, SaaError> {
    config.validate()?;
    if delta < 0.0 {
        return Err(SaaError::InvalidConfig("delta must be >= 0".into()));
    }
    let n_formula = config.delta_samples(delta, instance.budget, algo.log_psi(instance));
    let n_samples = config.samples.unwrap_or(n_formula);
    let mut rng = config.rng_for_repetition(0);
    let batch = oracle.draw_batch(&mut rng, n_samples, "h0");
    let empirical = ExplicitDistribution::uniform(batch);
    let inflated = (1.0 + config.epsilon / 3.0) * instance.budget;
    match algo.solve(instance, &empirical, radii, inflated)? {
        SolveOutcome::Feasible(solution) => {
            let report = SaaRunReport {
                samples_used: n_samples,
                samples_formula: n_formula,
                repetitions_allowed: 1,
                repetitions: vec![RepetitionRecord { repetition: 0, status: "feasible".into() }],
                threshold: f64::INFINITY,
                inner: algo.name().into(),
            };
            let strategy = DiscardingStrategy {
                certificate: solution.certificate,
                eta: algo.eta(),
                threshold: f64::INFINITY,
            };
            Ok(SolveOutcome::Feasible((strategy, report)))
        }
        SolveOutcome::Infeasible => Ok(SolveOutcome::Infeasible),
    }
}

/// Exact evaluation of a discarding strategy against a known distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub expected_cost: f64,
    /// Probability mass of scenarios with a client beyond eta * R_j after
    /// discarding.
    pub violation_prob: f64,
    /// Largest finite coverage ratio observed.
    pub max_eta: f64,
}

/// Extends the strategy to every scenario of the truth distribution,
/// applies the discarding rule, and computes the exact expected cost and
/// the exact probability of coverage violations.
pub fn evaluate(
    instance: &Instance,
    truth: &ExplicitDistribution,
    algo: &dyn GeneralizableAlgorithm,
    strategy: &DiscardingStrategy,
) -> EvalReport {
    let stage1 = strategy.stage1_open();
    let c1: f64 = stage1.iter().map(|&i| instance.stage1_costs[i]).sum();
    let mut expected = 0.0;
    let mut violation = 0.0;
    let mut max_eta: f64 = 0.0;
    for scenario in &truth.scenarios {
        let opened = algo.extend(instance, &strategy.certificate, scenario);
        let cost2: f64 = opened.iter().map(|&i| scenario.stage2_costs[i]).sum();
        let final_open = if cost2 > strategy.threshold { BTreeSet::new() } else { opened };
        let final_cost2: f64 = final_open.iter().map(|&i| scenario.stage2_costs[i]).sum();
        expected += scenario.probability * (c1 + final_cost2);
        let mut violated = false;
        for &j in &scenario.active {
            let d = instance
                .dist_to_set(j, stage1.iter())
                .min(instance.dist_to_set(j, final_open.iter()));
            let r = instance.radii[j];
            if !dist_le(d, strategy.eta * r) {
                violated = true;
            }
            if d.is_finite() && r > 0.0 {
                max_eta = max_eta.max(d / r);
            }
        }
        if violated {
            violation += scenario.probability;
        }
    }
    EvalReport { expected_cost: expected, violation_prob: violation, max_eta }
}
