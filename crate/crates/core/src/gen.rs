//! Deterministic instance and scenario generators, shared by the CLI and
//! the test harnesses. Everything is driven by a ChaCha stream so a seed
//! pins the output bytes.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ClientFile, ConstraintFile, FacilityFile, Instance, InstanceFile, ModelError,
    ScenarioEntryFile, ScenarioListFile,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

/// Geometry of generated instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Uniform points in a square of the given side.
    PointsSquare { side: f64 },
    /// Uniform points on a segment of the given length.
    Line { length: f64 },
    /// Literal coordinates (one dimension per inner vector length).
    Explicit { client_points: Vec<Vec<f64>>, facility_points: Vec<Vec<f64>> },
}

/// Scenario sampling model for generated distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub count: usize,
    /// Each client is active independently with this probability.
    pub activation: f64,
    /// Stage-II costs drawn uniformly from this range.
    pub c2_range: (f64, f64),
    /// Explicit scenarios override the sampling model entirely.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<ScenarioEntryFile>>,
}

/// Generator spec; serializable so runs can be replayed byte-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    pub geometry: Geometry,
    /// Homogeneous radius; when absent the covering radius is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub c1_range: (f64, f64),
    pub scenario_model: ScenarioModel,
    #[serde(default)]
    pub constraint: Option<ConstraintFile>,
    pub budget: f64,
}

impl GeneratorSpec {
    pub fn parse(text: &str) -> Result<GeneratorSpec, GenError> {
        serde_json::from_str(text).map_err(|e| GenError::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Generates the instance and scenario files for a spec, deterministically
/// under `seed`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<(InstanceFile, ScenarioListFile), GenError> {
    if spec.n == 0 || spec.m == 0 {
        return Err(GenError::InvalidSpec("n and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (client_points, facility_points): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match &spec.geometry {
        Geometry::PointsSquare { side } => {
            if *side <= 0.0 {
                return Err(GenError::InvalidSpec("side must be positive".into()));
            }
            let f: Vec<Vec<f64>> = (0..spec.m)
                .map(|_| vec![rng.gen_range(0.0..*side), rng.gen_range(0.0..*side)])
                .collect();
            // keep the standing assumption: sample clients near facilities
            let c: Vec<Vec<f64>> = (0..spec.n)
                .map(|_| {
                    let base = &f[rng.gen_range(0..spec.m)];
                    let r = spec.radius.unwrap_or(side / 4.0);
                    vec![
                        base[0] + rng.gen_range(-r..r) * 0.7,
                        base[1] + rng.gen_range(-r..r) * 0.7,
                    ]
                })
                .collect();
            (c, f)
        }
        Geometry::Line { length } => {
            if *length <= 0.0 {
                return Err(GenError::InvalidSpec("length must be positive".into()));
            }
            let f: Vec<Vec<f64>> = (0..spec.m).map(|_| vec![rng.gen_range(0.0..*length)]).collect();
            let c: Vec<Vec<f64>> = (0..spec.n)
                .map(|_| {
                    let base = f[rng.gen_range(0..spec.m)][0];
                    let r = spec.radius.unwrap_or(length / 4.0);
                    vec![base + rng.gen_range(-r..r) * 0.7]
                })
                .collect();
            (c, f)
        }
        Geometry::Explicit { client_points, facility_points } => {
            if client_points.len() != spec.n || facility_points.len() != spec.m {
                return Err(GenError::InvalidSpec("point counts must match n and m".into()));
            }
            (client_points.clone(), facility_points.clone())
        }
    };

    let clients: Vec<ClientFile> = client_points
        .iter()
        .enumerate()
        .map(|(j, p)| ClientFile { id: format!("c{}", j + 1), point: Some(p.clone()), row: None })
        .collect();
    let facilities: Vec<FacilityFile> = facility_points
        .iter()
        .enumerate()
        .map(|(i, p)| FacilityFile {
            id: format!("f{}", i + 1),
            point: Some(p.clone()),
            c1: round3(rng.gen_range(spec.c1_range.0..spec.c1_range.1)),
            knapsack_weights: None,
        })
        .collect();

    // radius: given, or the covering radius of the geometry
    let radius = spec.radius.unwrap_or_else(|| {
        client_points
            .iter()
            .map(|c| {
                facility_points
                    .iter()
                    .map(|f| euclid(c, f))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    });
    let radii: BTreeMap<String, f64> = clients.iter().map(|c| (c.id.clone(), radius)).collect();

    let instance_file = InstanceFile {
        schema_version: 1,
        metric: "euclidean".into(),
        clients: clients.clone(),
        facilities,
        radii,
        matrix: None,
        constraint: spec.constraint.clone().unwrap_or(ConstraintFile::None),
        budget: spec.budget,
    };

    let scenarios = match &spec.scenario_model.explicit {
        Some(entries) => entries.clone(),
        None => {
            let sm = &spec.scenario_model;
            if sm.count == 0 {
                return Err(GenError::InvalidSpec("scenario count must be positive".into()));
            }
            let p = 1.0 / sm.count as f64;
            (0..sm.count)
                .map(|k| {
                    let mut active: Vec<String> = clients
                        .iter()
                        .filter(|_| rng.gen::<f64>() < sm.activation)
                        .map(|c| c.id.clone())
                        .collect();
                    if active.is_empty() {
                        // keep scenarios non-degenerate
                        active.push(clients[rng.gen_range(0..clients.len())].id.clone());
                    }
                    let c2 = instance_file
                        .facilities
                        .iter()
                        .map(|f| {
                            (f.id.clone(), round3(rng.gen_range(sm.c2_range.0..sm.c2_range.1)))
                        })
                        .collect();
                    ScenarioEntryFile { id: format!("s{}", k + 1), clients: active, c2, p }
                })
                .collect()
        }
    };
    let scenario_file = ScenarioListFile { schema_version: 1, scenarios };
    // fail early if the pair does not validate
    let instance = instance_file.build()?;
    scenario_file.build(&instance)?;
    Ok((instance_file, scenario_file))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Random tiny instance + distribution straight to memory, for test
/// harnesses that do not need files.
pub struct RandomInstanceParams {
    pub n: usize,
    pub m: usize,
    pub radius: f64,
    pub scenarios: usize,
    pub activation: f64,
    pub c1_range: (f64, f64),
    pub c2_range: (f64, f64),
    pub constraint: Option<ConstraintFile>,
    pub budget: f64,
}

pub fn random_instance(
    params: &RandomInstanceParams,
    seed: u64,
) -> Result<(Instance, crate::model::ExplicitDistribution), GenError> {
    let spec = GeneratorSpec {
        n: params.n,
        m: params.m,
        geometry: Geometry::Line { length: 10.0 },
        radius: Some(params.radius),
        c1_range: params.c1_range,
        scenario_model: ScenarioModel {
            count: params.scenarios,
            activation: params.activation,
            c2_range: params.c2_range,
            explicit: None,
        },
        constraint: params.constraint.clone(),
        budget: params.budget,
    };
    let (inst_file, scen_file) = generate(&spec, seed)?;
    let instance = inst_file.build()?;
    let dist = scen_file.build(&instance)?;
    Ok((instance, dist))
}
