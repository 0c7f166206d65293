//! Experiment configuration: JSON schema, validation, canonical output.
//!
//! A config file has top-level sections `graph`, `workload`, `solver`,
//! `sim`, and `sweep`; only `graph` (with `n` and `f`) and `workload`
//! (with `lambda` or `tps`) are required. Unknown keys are rejected and
//! every error names the offending field, so a config that loads once
//! loads the same way everywhere. Loading then serializing then loading
//! again yields an identical configuration.

use std::path::Path;

use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};

use crate::model::{Category, GraphSpec, SolverConfig, Topology, WorkloadSpec};
use crate::sim::SimConfig;
use crate::{Error, Result};

/// Default geometric read parameter.
pub const DEFAULT_R: f64 = 0.4;
/// Default mean distributed-write delay, seconds.
pub const DEFAULT_DELTA: f64 = 0.005;
/// Default seed when a config names none.
pub const DEFAULT_SEED: u64 = 42;

/// Which knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Lambda,
    Delta,
    F,
    Gamma,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::Lambda => "lambda",
            SweepParameter::Delta => "delta",
            SweepParameter::F => "f",
            SweepParameter::Gamma => "gamma",
        }
    }
}

/// Grid spacing of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScale {
    Linear,
    Log,
}

/// A validated parameter sweep: `steps` points from `from` to `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: u32,
    pub scale: SweepScale,
}

impl SweepSpec {
    /// The inclusive grid; endpoints are exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps as usize;
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let v = match self.scale {
                SweepScale::Linear => self.from + (self.to - self.from) * t,
                SweepScale::Log => (self.from.ln() + (self.to.ln() - self.from.ln()) * t).exp(),
            };
            points.push(v);
        }
        points[0] = self.from;
        points[n - 1] = self.to;
        points
    }
}

/// A fully resolved experiment: every derived default filled in, every
/// field validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub workload: WorkloadSpec,
    pub solver: SolverConfig,
    /// Simulator settings for seed `seeds[0]`; replicates reuse it with
    /// the other seeds.
    pub sim: SimConfig,
    /// Replicate seeds, in run order. Always non-empty.
    pub seeds: Vec<u64>,
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    /// A copy with one swept knob replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> ExperimentConfig {
        let mut c = self.clone();
        match parameter {
            SweepParameter::Lambda => c.workload.lambda = value,
            SweepParameter::Delta => c.workload.delta = value,
            SweepParameter::F => c.graph.f = value,
            SweepParameter::Gamma => {
                c.solver.gamma = value;
                c.sim.gamma = value;
            }
        }
        c
    }

    /// Canonical JSON form; reloading it reproduces `self` exactly.
    pub fn to_value(&self) -> Value {
        let topology = match &self.graph.topology {
            Topology::Complete => json!({ "kind": "complete" }),
            Topology::ScaleFree { categories } => json!({
                "kind": "scale-free",
                "categories": categories
                    .iter()
                    .map(|c| json!({ "edges": c.edges, "access_probability": c.access_probability }))
                    .collect::<Vec<_>>(),
            }),
        };
        let mut sim = serde_json::Map::new();
        if self.seeds.len() == 1 {
            sim.insert("seed".into(), json!(self.seeds[0]));
        } else {
            sim.insert("seeds".into(), json!(self.seeds));
        }
        sim.insert("horizon".into(), json!(self.sim.horizon));
        sim.insert("sample_interval".into(), json!(self.sim.sample_interval));
        let mut root = json!({
            "graph": { "n": self.graph.n, "f": self.graph.f, "topology": topology },
            "workload": {
                "lambda": self.workload.lambda,
                "r": self.workload.r,
                "delta": self.workload.delta,
            },
            "solver": {
                "gamma": self.solver.gamma,
                "fp_tolerance": self.solver.fp_tolerance,
                "max_iterations": self.solver.max_iterations,
                "damping": self.solver.damping,
                "seed_state2": self.solver.seed_state2,
            },
            "sim": sim,
        });
        if let Some(sw) = &self.sweep {
            root["sweep"] = json!({
                "parameter": sw.parameter.as_str(),
                "from": sw.from,
                "to": sw.to,
                "steps": sw.steps,
                "scale": match sw.scale { SweepScale::Linear => "linear", SweepScale::Log => "log" },
            });
        }
        root
    }

    /// Canonical pretty-printed JSON.
    pub fn serialize_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("static shape");
        s.push('\n');
        s
    }
}

/// Accepts integers written as floats (`1e10`) wherever a count is expected.
fn number_to_u64<E: serde::de::Error>(v: &serde_json::Number) -> std::result::Result<u64, E> {
    if let Some(u) = v.as_u64() {
        return Ok(u);
    }
    if let Some(fl) = v.as_f64() {
        if fl.is_finite() && fl >= 0.0 && fl.fract() == 0.0 && fl < u64::MAX as f64 {
            return Ok(fl as u64);
        }
    }
    Err(E::custom(format!(
        "expected a non-negative integer, got {v}"
    )))
}

fn de_u64_flex<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    let v = serde_json::Number::deserialize(d)?;
    number_to_u64(&v)
}

fn de_opt_u64_flex<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    let v = Option::<serde_json::Number>::deserialize(d)?;
    v.map(|n| number_to_u64(&n)).transpose()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCategory {
    #[serde(deserialize_with = "de_u64_flex")]
    edges: u64,
    access_probability: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    kind: RawTopologyKind,
    categories: Option<Vec<RawCategory>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawTopologyKind {
    Complete,
    ScaleFree,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    #[serde(deserialize_with = "de_u64_flex")]
    n: u64,
    f: f64,
    topology: Option<RawTopology>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    lambda: Option<f64>,
    tps: Option<f64>,
    r: Option<f64>,
    delta: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    gamma: Option<f64>,
    fp_tolerance: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_u64_flex")]
    max_iterations: Option<u64>,
    damping: Option<f64>,
    seed_state2: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSeeds {
    List(Vec<u64>),
    BaseCount { base: u64, count: u64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    #[serde(default, deserialize_with = "de_opt_u64_flex")]
    seed: Option<u64>,
    seeds: Option<RawSeeds>,
    horizon: Option<f64>,
    sample_interval: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: SweepParameter,
    from: f64,
    to: f64,
    #[serde(deserialize_with = "de_u64_flex")]
    steps: u64,
    scale: Option<SweepScale>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: RawGraph,
    workload: RawWorkload,
    solver: Option<RawSolver>,
    sim: Option<RawSim>,
    sweep: Option<RawSweep>,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let topology = match raw.graph.topology {
        None => Topology::Complete,
        Some(t) => match (t.kind, t.categories) {
            (RawTopologyKind::Complete, None) => Topology::Complete,
            (RawTopologyKind::Complete, Some(_)) => {
                return Err(invalid(
                    "graph.topology.categories",
                    "the complete topology takes no categories",
                ));
            }
            (RawTopologyKind::ScaleFree, None) => Topology::default_scale_free(),
            (RawTopologyKind::ScaleFree, Some(cats)) => Topology::ScaleFree {
                categories: cats
                    .into_iter()
                    .map(|c| Category {
                        edges: c.edges,
                        access_probability: c.access_probability,
                    })
                    .collect(),
            },
        },
    };
    let graph = GraphSpec {
        n: raw.graph.n,
        f: raw.graph.f,
        topology,
    };
    graph.validate()?;

    let lambda = match (raw.workload.lambda, raw.workload.tps) {
        (Some(l), None) => l,
        (None, Some(tps)) => {
            if tps <= 0.0 || !tps.is_finite() {
                return Err(invalid(
                    "workload.tps",
                    format!("transaction rate must be positive, got {tps}"),
                ));
            }
            WorkloadSpec::from_tps(tps, DEFAULT_R, DEFAULT_DELTA).lambda
        }
        (Some(_), Some(_)) => {
            return Err(invalid(
                "workload.lambda",
                "give either lambda or tps, not both",
            ));
        }
        (None, None) => {
            return Err(invalid(
                "workload.lambda",
                "either lambda or tps is required",
            ));
        }
    };
    let workload = WorkloadSpec {
        lambda,
        r: raw.workload.r.unwrap_or(DEFAULT_R),
        delta: raw.workload.delta.unwrap_or(DEFAULT_DELTA),
    };
    workload.validate()?;

    let defaults = SolverConfig::default();
    let rs = raw.solver.unwrap_or(RawSolver {
        gamma: None,
        fp_tolerance: None,
        max_iterations: None,
        damping: None,
        seed_state2: None,
    });
    if let Some(mi) = rs.max_iterations {
        if mi > u32::MAX as u64 {
            return Err(invalid(
                "solver.max_iterations",
                format!("must fit in 32 bits, got {mi}"),
            ));
        }
    }
    let solver = SolverConfig {
        gamma: rs.gamma.unwrap_or(defaults.gamma),
        fp_tolerance: rs.fp_tolerance.unwrap_or(defaults.fp_tolerance),
        max_iterations: rs
            .max_iterations
            .map(|m| m as u32)
            .unwrap_or(defaults.max_iterations),
        damping: rs.damping.unwrap_or(defaults.damping),
        seed_state2: rs.seed_state2.unwrap_or(defaults.seed_state2),
    };
    solver.validate()?;

    let rsim = raw.sim.unwrap_or(RawSim {
        seed: None,
        seeds: None,
        horizon: None,
        sample_interval: None,
    });
    let seeds = match (rsim.seed, rsim.seeds) {
        (Some(_), Some(_)) => {
            return Err(invalid("sim.seed", "give either seed or seeds, not both"));
        }
        (Some(s), None) => vec![s],
        (None, Some(RawSeeds::List(list))) => {
            if list.is_empty() {
                return Err(invalid("sim.seeds", "seed list must not be empty"));
            }
            list
        }
        (None, Some(RawSeeds::BaseCount { base, count })) => {
            if count == 0 {
                return Err(invalid("sim.seeds.count", "seed count must be at least 1"));
            }
            (base..base.saturating_add(count)).collect()
        }
        (None, None) => vec![DEFAULT_SEED],
    };
    let sim_defaults = SimConfig::default();
    let sim = SimConfig {
        seed: seeds[0],
        horizon: rsim.horizon.unwrap_or(sim_defaults.horizon),
        sample_interval: rsim.sample_interval.unwrap_or(sim_defaults.sample_interval),
        gamma: solver.gamma,
        force_clean_reads: false,
    };
    sim.validate()?;

    let sweep = match raw.sweep {
        None => None,
        Some(sw) => {
            if sw.steps < 2 {
                return Err(invalid(
                    "sweep.steps",
                    format!("a sweep needs at least 2 points, got {}", sw.steps),
                ));
            }
            if sw.steps > 1_000_000 {
                return Err(invalid(
                    "sweep.steps",
                    format!("at most 1000000 points supported, got {}", sw.steps),
                ));
            }
            if sw.from <= 0.0 || !sw.from.is_finite() {
                return Err(invalid(
                    "sweep.from",
                    format!("bounds must be positive, got {}", sw.from),
                ));
            }
            if sw.to <= sw.from || !sw.to.is_finite() {
                return Err(invalid(
                    "sweep.to",
                    format!(
                        "bounds must be ordered with from < to, got from = {} and to = {}",
                        sw.from, sw.to
                    ),
                ));
            }
            let upper_ok = match sw.parameter {
                SweepParameter::F => sw.to <= 1.0,
                SweepParameter::Gamma => sw.to < 1.0,
                _ => true,
            };
            if !upper_ok {
                return Err(invalid(
                    "sweep.to",
                    format!(
                        "{} cannot sweep up to {}; it must stay within its valid range",
                        sw.parameter.as_str(),
                        sw.to
                    ),
                ));
            }
            Some(SweepSpec {
                parameter: sw.parameter,
                from: sw.from,
                to: sw.to,
                steps: sw.steps as u32,
                scale: sw.scale.unwrap_or(SweepScale::Linear),
            })
        }
    };

    Ok(ExperimentConfig {
        graph,
        workload,
        solver,
        sim,
        seeds,
        sweep,
    })
}

fn path_error(err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let reason = err.into_inner().to_string();
    if path.is_empty() || path == "." {
        Error::InvalidConfig {
            field: "(top level)".into(),
            reason,
        }
    } else {
        Error::InvalidConfig {
            field: path,
            reason,
        }
    }
}

/// Parses and fully validates a config from JSON text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(&mut de).map_err(path_error)?;
    resolve(raw)
}

/// Parses and fully validates a config from an in-memory JSON tree.
pub fn config_from_value(value: Value) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_path_to_error::deserialize(value).map_err(path_error)?;
    resolve(raw)
}

/// Loads, parses, and fully validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_json() -> &'static str {
        r#"{
            "graph": { "n": 10000, "f": 0.3 },
            "workload": { "lambda": 500 }
        }"#
    }

    #[test]
    fn minimal_config_gets_all_defaults() {
        let c = parse_config(desk_json()).unwrap();
        assert_eq!(c.graph.n, 10_000);
        assert_eq!(c.graph.f, 0.3);
        assert_eq!(c.graph.topology, Topology::Complete);
        assert_eq!(c.workload.lambda, 500.0);
        assert_eq!(c.workload.r, 0.4);
        assert_eq!(c.workload.delta, 0.005);
        assert_eq!(c.solver.gamma, 0.1);
        assert_eq!(c.seeds, vec![42]);
        assert_eq!(c.sim.seed, 42);
        assert_eq!(c.sim.gamma, 0.1);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_field_name() {
        let bad = r#"{
            "graph": { "n": 100, "f": 0.3, "fraction": 0.5 },
            "workload": { "lambda": 10 }
        }"#;
        let err = parse_config(bad).unwrap_err().to_string();
        assert!(err.contains("graph"), "{err}");
        assert!(err.contains("fraction"), "{err}");
    }

    #[test]
    fn type_errors_name_the_field_path() {
        let bad = r#"{
            "graph": { "n": 100, "f": "lots" },
            "workload": { "lambda": 10 }
        }"#;
        let err = parse_config(bad).unwrap_err().to_string();
        assert!(err.contains("graph.f"), "{err}");
    }

    #[test]
    fn out_of_range_f_names_the_field() {
        let bad = r#"{
            "graph": { "n": 100, "f": 1.5 },
            "workload": { "lambda": 10 }
        }"#;
        match parse_config(bad).unwrap_err() {
            Error::InvalidConfig { field, .. } => assert_eq!(field, "graph.f"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn tps_converts_to_lambda() {
        let c = parse_config(
            r#"{
                "graph": { "n": 100, "f": 0.3 },
                "workload": { "tps": 5000 }
            }"#,
        )
        .unwrap();
        assert!((c.workload.lambda - 500.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_and_tps_together_rejected() {
        let bad = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10, "tps": 100 }
        }"#;
        assert!(parse_config(bad).is_err());
        let none = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "r": 0.4 }
        }"#;
        assert!(parse_config(none).is_err());
    }

    #[test]
    fn scientific_notation_edge_counts_accepted() {
        let c = parse_config(
            r#"{
                "graph": { "n": 1e10, "f": 0.3 },
                "workload": { "lambda": 2000 }
            }"#,
        )
        .unwrap();
        assert_eq!(c.graph.n, 10_000_000_000);
    }

    #[test]
    fn scale_free_defaults_and_custom_categories() {
        let c = parse_config(
            r#"{
                "graph": { "n": 11111110000, "f": 0.3, "topology": { "kind": "scale-free" } },
                "workload": { "lambda": 2000 }
            }"#,
        )
        .unwrap();
        match &c.graph.topology {
            Topology::ScaleFree { categories } => assert_eq!(categories.len(), 7),
            other => panic!("unexpected topology {other:?}"),
        }

        let c = parse_config(
            r#"{
                "graph": { "n": 110, "f": 0.3, "topology": { "kind": "scale-free",
                    "categories": [
                        { "edges": 10, "access_probability": 0.7 },
                        { "edges": 100, "access_probability": 0.3 }
                    ] } },
                "workload": { "lambda": 2000 }
            }"#,
        )
        .unwrap();
        match &c.graph.topology {
            Topology::ScaleFree { categories } => {
                assert_eq!(categories[0].edges, 10);
                assert_eq!(categories[1].access_probability, 0.3);
            }
            other => panic!("unexpected topology {other:?}"),
        }
    }

    #[test]
    fn bad_topology_kind_rejected() {
        let bad = r#"{
            "graph": { "n": 100, "f": 0.3, "topology": { "kind": "ring" } },
            "workload": { "lambda": 10 }
        }"#;
        let err = parse_config(bad).unwrap_err().to_string();
        assert!(err.contains("kind"), "{err}");
    }

    #[test]
    fn seed_forms() {
        let single = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10 },
            "sim": { "seed": 7 }
        }"#;
        assert_eq!(parse_config(single).unwrap().seeds, vec![7]);

        let list = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10 },
            "sim": { "seeds": [3, 1, 4] }
        }"#;
        assert_eq!(parse_config(list).unwrap().seeds, vec![3, 1, 4]);

        let base_count = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10 },
            "sim": { "seeds": { "base": 42, "count": 3 } }
        }"#;
        assert_eq!(parse_config(base_count).unwrap().seeds, vec![42, 43, 44]);

        let both = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10 },
            "sim": { "seed": 1, "seeds": [2] }
        }"#;
        assert!(parse_config(both).is_err());

        let empty = r#"{
            "graph": { "n": 100, "f": 0.3 },
            "workload": { "lambda": 10 },
            "sim": { "seeds": [] }
        }"#;
        assert!(parse_config(empty).is_err());
    }

    #[test]
    fn sweep_validation() {
        let base = |sweep: &str| {
            format!(
                r#"{{
                    "graph": {{ "n": 100, "f": 0.3 }},
                    "workload": {{ "lambda": 10 }},
                    "sweep": {sweep}
                }}"#
            )
        };
        let ok = parse_config(&base(
            r#"{ "parameter": "lambda", "from": 100, "to": 1000, "steps": 10, "scale": "log" }"#,
        ))
        .unwrap();
        let sw = ok.sweep.unwrap();
        assert_eq!(sw.steps, 10);
        assert_eq!(sw.scale, SweepScale::Log);
        let g = sw.grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 100.0);
        assert_eq!(g[9], 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));

        for bad in [
            r#"{ "parameter": "lambda", "from": 100, "to": 100, "steps": 5 }"#,
            r#"{ "parameter": "lambda", "from": 200, "to": 100, "steps": 5 }"#,
            r#"{ "parameter": "lambda", "from": 100, "to": 200, "steps": 1 }"#,
            r#"{ "parameter": "lambda", "from": 0, "to": 200, "steps": 5 }"#,
            r#"{ "parameter": "f", "from": 0.1, "to": 1.5, "steps": 5 }"#,
            r#"{ "parameter": "gamma", "from": 0.1, "to": 1.0, "steps": 5 }"#,
            r#"{ "parameter": "tps", "from": 1, "to": 2, "steps": 5 }"#,
        ] {
            assert!(parse_config(&base(bad)).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn linear_grid_is_evenly_spaced() {
        let sw = SweepSpec {
            parameter: SweepParameter::Delta,
            from: 0.001,
            to: 0.005,
            steps: 5,
            scale: SweepScale::Linear,
        };
        let g = sw.grid();
        assert_eq!(g.len(), 5);
        for (i, v) in g.iter().enumerate() {
            assert!((v - (0.001 + 0.001 * i as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [
            desk_json(),
            r#"{
                "graph": { "n": 110, "f": 0.25, "topology": { "kind": "scale-free",
                    "categories": [
                        { "edges": 10, "access_probability": 0.7 },
                        { "edges": 100, "access_probability": 0.3 }
                    ] } },
                "workload": { "tps": 20000, "r": 0.5, "delta": 0.002 },
                "solver": { "gamma": 0.2, "fp_tolerance": 1e-9 },
                "sim": { "seeds": { "base": 7, "count": 4 }, "horizon": 500.0 },
                "sweep": { "parameter": "gamma", "from": 0.05, "to": 0.3, "steps": 4 }
            }"#,
        ] {
            let first = parse_config(text).unwrap();
            let second = parse_config(&first.serialize_pretty()).unwrap();
            assert_eq!(first, second);
            assert_eq!(first.serialize_pretty(), second.serialize_pretty());
        }
    }

    #[test]
    fn gamma_propagates_to_sim() {
        let c = parse_config(
            r#"{
                "graph": { "n": 100, "f": 0.3 },
                "workload": { "lambda": 10 },
                "solver": { "gamma": 0.25 }
            }"#,
        )
        .unwrap();
        assert_eq!(c.sim.gamma, 0.25);
    }

    #[test]
    fn with_parameter_replaces_one_knob() {
        let c = parse_config(desk_json()).unwrap();
        assert_eq!(
            c.with_parameter(SweepParameter::Lambda, 750.0)
                .workload
                .lambda,
            750.0
        );
        assert_eq!(
            c.with_parameter(SweepParameter::Delta, 0.01).workload.delta,
            0.01
        );
        assert_eq!(c.with_parameter(SweepParameter::F, 0.5).graph.f, 0.5);
        let g = c.with_parameter(SweepParameter::Gamma, 0.2);
        assert_eq!(g.solver.gamma, 0.2);
        assert_eq!(g.sim.gamma, 0.2);
    }

    #[test]
    fn load_config_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("desk.json");
        std::fs::write(&path, desk_json()).unwrap();
        let c = load_config(&path).unwrap();
        assert_eq!(c.graph.n, 10_000);
        assert!(load_config(dir.path().join("missing.json")).is_err());
    }
}
