//! Experiment drivers: replicate batches, sweeps, cross-validation, and
//! topology comparison, plus the stable CSV/JSON artifact writers.
//!
//! Simulation replicates run data-parallel when the `parallel` feature is
//! on (the default); `CORRODE_WORKERS` caps the worker threads. Results
//! are always aggregated in seed order, so parallel and sequential runs
//! produce identical artifacts.

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, SweepParameter};
use crate::model::{GraphSpec, Topology, WorkloadSpec};
use crate::sim::{run_simulation, SimConfig, SimOutcome, SimResult};
use crate::solver::{fixed_point_solve, SolveResult, UGamma};
use crate::{Error, Result, SECONDS_PER_MONTH};

/// Default relative-error tolerance for validation verdicts.
pub const DEFAULT_TOLERANCE: f64 = 0.10;

/// Worker cap from the environment, if set to a positive integer.
#[cfg(feature = "parallel")]
fn configured_workers() -> Option<usize> {
    std::env::var("CORRODE_WORKERS")
        .ok()?
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&w| w >= 1)
}

/// Runs one simulation per config, sequentially, in order.
pub fn run_batch_sequential(
    graph: &GraphSpec,
    workload: &WorkloadSpec,
    sims: &[SimConfig],
) -> Result<Vec<SimResult>> {
    sims.iter()
        .map(|s| run_simulation(graph, workload, s))
        .collect()
}

/// Runs one simulation per config in parallel, honoring `CORRODE_WORKERS`;
/// results come back in input order.
#[cfg(feature = "parallel")]
pub fn run_batch(
    graph: &GraphSpec,
    workload: &WorkloadSpec,
    sims: &[SimConfig],
) -> Result<Vec<SimResult>> {
    use rayon::prelude::*;
    let run = || {
        sims.par_iter()
            .map(|s| run_simulation(graph, workload, s))
            .collect::<Result<Vec<_>>>()
    };
    match configured_workers() {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Sequential stand-in with the identical contract.
#[cfg(not(feature = "parallel"))]
pub fn run_batch(
    graph: &GraphSpec,
    workload: &WorkloadSpec,
    sims: &[SimConfig],
) -> Result<Vec<SimResult>> {
    run_batch_sequential(graph, workload, sims)
}

/// One simulation with the config's primary seed.
pub fn run_simulation_for(config: &ExperimentConfig) -> Result<SimResult> {
    run_simulation(&config.graph, &config.workload, &config.sim)
}

/// Simulations for every seed of a config, in seed order.
fn run_replicates(config: &ExperimentConfig) -> Result<Vec<SimResult>> {
    let sims: Vec<SimConfig> = config
        .seeds
        .iter()
        .map(|&seed| SimConfig {
            seed,
            ..config.sim.clone()
        })
        .collect();
    run_batch(&config.graph, &config.workload, &sims)
}

/// Sample statistics of the completed passage times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation; needs at least two values.
    pub std_dev: Option<f64>,
    /// Two-sided 95% confidence interval for the mean (Student-t).
    pub ci95: Option<(f64, f64)>,
    pub count: usize,
}

/// Mean, sample deviation, and Student-t 95% interval of `values`.
pub fn summary_stats(values: &[f64]) -> Option<SummaryStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(SummaryStats {
            mean,
            std_dev: None,
            ci95: None,
            count: n,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let ci95 = {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid dof")
            .inverse_cdf(0.975);
        let half = t * sd / (n as f64).sqrt();
        Some((mean - half, mean + half))
    };
    Some(SummaryStats {
        mean,
        std_dev: Some(sd),
        ci95,
        count: n,
    })
}

/// One simulated replicate, reduced to its outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub outcome: SimOutcome,
}

fn seed_outcome_json(s: &SeedOutcome) -> Value {
    match s.outcome {
        SimOutcome::ReachedThreshold { u_gamma } => json!({
            "seed": s.seed,
            "status": "reached-threshold",
            "u_seconds": u_gamma,
        }),
        SimOutcome::HorizonExceeded => json!({
            "seed": s.seed,
            "status": "horizon-exceeded",
        }),
    }
}

fn completed_times(outcomes: &[SeedOutcome]) -> Vec<f64> {
    outcomes
        .iter()
        .filter_map(|s| s.outcome.u_gamma())
        .collect()
}

// ---------------------------------------------------------------------------
// Sweeps

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub u_gamma: UGamma,
    /// False when the analytic solver hit its iteration cap at this point.
    pub converged: bool,
    pub sim_mean: Option<f64>,
    /// Half-width of the replicate 95% confidence interval.
    pub sim_ci95_half: Option<f64>,
}

/// A completed sweep, one row per grid point in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    /// True when the rows carry simulator statistics.
    pub with_sim: bool,
}

impl SweepTable {
    /// Fixed-format CSV; byte-identical across runs of the same config.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,value,u_gamma_seconds,u_gamma_months");
        if self.with_sim {
            out.push_str(",sim_mean,sim_ci95");
        }
        out.push('\n');
        for row in &self.rows {
            let (secs, months) = match row.u_gamma {
                UGamma::Finite(u) => (u, u / SECONDS_PER_MONTH),
                UGamma::Infinite => (f64::INFINITY, f64::INFINITY),
            };
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6}",
                self.parameter.as_str(),
                row.value,
                secs,
                months
            ));
            if self.with_sim {
                out.push_str(&format!(
                    ",{:.6},{:.6}",
                    row.sim_mean.unwrap_or(f64::NAN),
                    row.sim_ci95_half.unwrap_or(f64::NAN)
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Solves every grid point of the config's sweep, adding simulator
/// replicates when the config lists two or more seeds. A non-converged
/// point flags its row; it never aborts the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let sweep = config.sweep.as_ref().ok_or_else(|| Error::InvalidConfig {
        field: "sweep".into(),
        reason: "this operation needs a sweep section".into(),
    })?;
    let with_sim = config.seeds.len() >= 2;
    let mut rows = Vec::with_capacity(sweep.steps as usize);
    for value in sweep.grid() {
        let point = config.with_parameter(sweep.parameter, value);
        let solved = fixed_point_solve(&point.graph, &point.workload, &point.solver)?;
        let (sim_mean, sim_ci95_half) = if with_sim {
            let outcomes: Vec<SeedOutcome> = run_replicates(&point)?
                .iter()
                .map(|r| SeedOutcome {
                    seed: r.seed,
                    outcome: r.outcome,
                })
                .collect();
            match summary_stats(&completed_times(&outcomes)) {
                Some(st) => (Some(st.mean), st.ci95.map(|(lo, hi)| (hi - lo) / 2.0)),
                None => (None, None),
            }
        } else {
            (None, None)
        };
        rows.push(SweepRow {
            value,
            u_gamma: solved.u_gamma,
            converged: solved.converged,
            sim_mean,
            sim_ci95_half,
        });
    }
    Ok(SweepTable {
        parameter: sweep.parameter,
        rows,
        with_sim,
    })
}

// ---------------------------------------------------------------------------
// Validation

/// Outcome class of a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Analytic and simulated estimates agree within tolerance.
    Pass,
    /// They disagree.
    Fail,
    /// Most replicates hit the horizon; no defensible simulated mean.
    Inconclusive,
    /// Both engines agree corruption never happens (no distributed writes).
    ConsistentDegenerate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::ConsistentDegenerate => "consistent-degenerate",
        }
    }
}

/// Cross-validation of the analytic solver against simulation replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub analytic: SolveResult,
    pub per_seed: Vec<SeedOutcome>,
    pub sim_stats: Option<SummaryStats>,
    pub horizon_exceeded: usize,
    /// `|analytic - sim mean| / sim mean`, when both estimates exist.
    pub relative_error: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

impl ValidationReport {
    pub fn to_json(&self) -> Value {
        let mut root = serde_json::Map::new();
        root.insert("analytic".into(), solve_result_json(&self.analytic));
        root.insert(
            "per_seed".into(),
            Value::Array(self.per_seed.iter().map(seed_outcome_json).collect()),
        );
        let sim = match &self.sim_stats {
            Some(st) => json!({
                "mean": st.mean,
                "std_dev": st.std_dev,
                "ci95": st.ci95.map(|(lo, hi)| vec![lo, hi]),
                "completed": st.count,
                "horizon_exceeded": self.horizon_exceeded,
            }),
            None => json!({
                "completed": 0,
                "horizon_exceeded": self.horizon_exceeded,
            }),
        };
        root.insert("sim".into(), sim);
        root.insert("relative_error".into(), json!(self.relative_error));
        root.insert("tolerance".into(), json!(self.tolerance));
        root.insert("verdict".into(), json!(self.verdict.as_str()));
        root.insert("note".into(), json!(self.note));
        Value::Object(root)
    }
}

/// Solves once, simulates every seed, and compares the estimates at the
/// given relative tolerance. The analytic side never depends on the seeds.
pub fn run_validation(config: &ExperimentConfig, tolerance: f64) -> Result<ValidationReport> {
    if tolerance <= 0.0 || !tolerance.is_finite() {
        return Err(Error::InvalidInput(format!(
            "validation tolerance must be positive, got {tolerance}"
        )));
    }
    let analytic = fixed_point_solve(&config.graph, &config.workload, &config.solver)?;
    let per_seed: Vec<SeedOutcome> = run_replicates(config)?
        .iter()
        .map(|r| SeedOutcome {
            seed: r.seed,
            outcome: r.outcome,
        })
        .collect();
    let horizon_exceeded = per_seed
        .iter()
        .filter(|s| s.outcome == SimOutcome::HorizonExceeded)
        .count();
    let times = completed_times(&per_seed);
    let sim_stats = summary_stats(&times);

    let mut note = None;
    let mut relative_error = None;
    let verdict = match analytic.u_gamma {
        UGamma::Infinite => {
            if times.is_empty() {
                note = Some(
                    "corruption is unreachable without distributed writes; both engines agree"
                        .into(),
                );
                Verdict::ConsistentDegenerate
            } else {
                note = Some(
                    "the analytic passage time is infinite but some replicates corrupted".into(),
                );
                Verdict::Fail
            }
        }
        UGamma::Finite(u) => {
            if 2 * horizon_exceeded > per_seed.len() {
                note = Some(format!(
                    "{} of {} replicates hit the horizon ({:.1}s); raise sim.horizon well \
                     above the analytic estimate of {:.1}s and rerun",
                    horizon_exceeded,
                    per_seed.len(),
                    config.sim.horizon,
                    u
                ));
                Verdict::Inconclusive
            } else {
                let mean = sim_stats.as_ref().expect("completed runs exist").mean;
                let rel = (u - mean).abs() / mean;
                relative_error = Some(rel);
                if !analytic.converged {
                    note = Some(
                        "the analytic solver did not converge; its best estimate is used".into(),
                    );
                }
                if rel <= tolerance {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
        }
    };

    Ok(ValidationReport {
        analytic,
        per_seed,
        sim_stats,
        horizon_exceeded,
        relative_error,
        tolerance,
        verdict,
        note,
    })
}

// ---------------------------------------------------------------------------
// Topology comparison

/// Onset summary for one access category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetStat {
    /// Replicates in which the category reached the threshold.
    pub reached: usize,
    /// Mean onset time over those replicates.
    pub mean_time: Option<f64>,
}

/// One topology's side of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySide {
    pub per_seed: Vec<SeedOutcome>,
    pub stats: Option<SummaryStats>,
    pub horizon_exceeded: usize,
    /// Per category, in declaration order; a single entry for Complete.
    pub category_onsets: Vec<OnsetStat>,
}

fn topology_side(results: &[SimResult]) -> TopologySide {
    let per_seed: Vec<SeedOutcome> = results
        .iter()
        .map(|r| SeedOutcome {
            seed: r.seed,
            outcome: r.outcome,
        })
        .collect();
    let horizon_exceeded = per_seed
        .iter()
        .filter(|s| s.outcome == SimOutcome::HorizonExceeded)
        .count();
    let stats = summary_stats(&completed_times(&per_seed));
    let n_cats = results.first().map_or(0, |r| r.category_onsets.len());
    let category_onsets = (0..n_cats)
        .map(|j| {
            let onsets: Vec<f64> = results
                .iter()
                .filter_map(|r| r.category_onsets[j])
                .collect();
            OnsetStat {
                reached: onsets.len(),
                mean_time: if onsets.is_empty() {
                    None
                } else {
                    Some(onsets.iter().sum::<f64>() / onsets.len() as f64)
                },
            }
        })
        .collect();
    TopologySide {
        per_seed,
        stats,
        horizon_exceeded,
        category_onsets,
    }
}

fn topology_side_json(side: &TopologySide) -> Value {
    json!({
        "per_seed": side.per_seed.iter().map(seed_outcome_json).collect::<Vec<_>>(),
        "mean": side.stats.as_ref().map(|s| s.mean),
        "std_dev": side.stats.as_ref().and_then(|s| s.std_dev),
        "ci95": side.stats.as_ref().and_then(|s| s.ci95).map(|(lo, hi)| vec![lo, hi]),
        "completed": side.stats.as_ref().map_or(0, |s| s.count),
        "horizon_exceeded": side.horizon_exceeded,
        "category_onsets": side.category_onsets.iter().map(|o| json!({
            "reached": o.reached,
            "mean_time": o.mean_time,
        })).collect::<Vec<_>>(),
    })
}

/// Scale-free versus Complete passage times at matched size and workload.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyComparison {
    pub scale_free: TopologySide,
    pub complete: TopologySide,
    /// Mean passage-time ratio, scale-free over Complete.
    pub ratio: Option<f64>,
}

impl TopologyComparison {
    pub fn to_json(&self) -> Value {
        json!({
            "scale_free": topology_side_json(&self.scale_free),
            "complete": topology_side_json(&self.complete),
            "ratio": self.ratio,
        })
    }
}

/// Simulates the config's scale-free graph and a Complete graph of the
/// same size, distributed fraction, and workload, over the same seeds.
pub fn compare_topologies(config: &ExperimentConfig) -> Result<TopologyComparison> {
    match config.graph.topology {
        Topology::ScaleFree { .. } => {}
        Topology::Complete => {
            return Err(Error::InvalidInput(
                "topology comparison needs a scale-free graph in the config; \
                 the Complete counterpart is derived automatically"
                    .into(),
            ));
        }
    }
    let sf_results = run_replicates(config)?;

    let mut complete_cfg = config.clone();
    complete_cfg.graph = GraphSpec {
        n: config.graph.n,
        f: config.graph.f,
        topology: Topology::Complete,
    };
    let complete_results = run_replicates(&complete_cfg)?;

    let scale_free = topology_side(&sf_results);
    let complete = topology_side(&complete_results);
    let ratio = match (&scale_free.stats, &complete.stats) {
        (Some(a), Some(b)) if b.mean > 0.0 => Some(a.mean / b.mean),
        _ => None,
    };
    Ok(TopologyComparison {
        scale_free,
        complete,
        ratio,
    })
}

// ---------------------------------------------------------------------------
// Artifact writers

/// `t,n0,n1,n2,n3` rows of a simulated trajectory, fixed formatting.
pub fn trajectory_csv(result: &SimResult) -> String {
    let mut out = String::from("t,n0,n1,n2,n3\n");
    for row in &result.trajectory {
        out.push_str(&format!(
            "{:.6},{},{},{},{}\n",
            row.t, row.counts[0], row.counts[1], row.counts[2], row.counts[3]
        ));
    }
    out
}

fn ugamma_json(u: &UGamma) -> Value {
    match u {
        UGamma::Finite(v) => json!(v),
        UGamma::Infinite => json!("infinite"),
    }
}

/// Full JSON form of an analytic solution.
pub fn solve_result_json(result: &SolveResult) -> Value {
    json!({
        "u_gamma_seconds": ugamma_json(&result.u_gamma),
        "u_gamma_months": match result.u_gamma {
            UGamma::Finite(u) => json!(u / SECONDS_PER_MONTH),
            UGamma::Infinite => json!("infinite"),
        },
        "alpha": result.alpha,
        "beta": result.beta,
        "q": result.q,
        "averaged": {
            "nbar0": result.averaged.nbar0,
            "nbar1": result.averaged.nbar1,
            "nbar2": result.averaged.nbar2,
        },
        "iterations": result.iterations,
        "converged": result.converged,
        "conservation_drift": result.conservation_drift,
        "residual": result.residual,
        "refinement_segments": result.refinement_segments,
        "iteration_log": result.iteration_log.iter().map(|e| json!({
            "nbar0": e.nbar0,
            "nbar1": e.nbar1,
            "nbar2": e.nbar2,
            "u": e.u,
        })).collect::<Vec<_>>(),
        "note": result.note,
    })
}

/// Full JSON form of one simulation run (without the trajectory, which
/// goes to its own CSV).
pub fn sim_result_json(result: &SimResult) -> Value {
    let outcome = match result.outcome {
        SimOutcome::ReachedThreshold { u_gamma } => json!({
            "status": "reached-threshold",
            "u_seconds": u_gamma,
            "u_months": u_gamma / SECONDS_PER_MONTH,
        }),
        SimOutcome::HorizonExceeded => json!({ "status": "horizon-exceeded" }),
    };
    json!({
        "outcome": outcome,
        "seed": result.seed,
        "final_time": result.final_time,
        "final_counts": result.final_counts,
        "events": {
            "queries": result.events.queries,
            "reads": result.events.reads,
            "dirty_queries": result.events.dirty_queries,
            "local_writes": result.events.local_writes,
            "distributed_writes": result.events.distributed_writes,
            "conflicts": result.events.conflicts,
            "corrections": result.events.corrections,
            "corruptions_from": result.events.corruptions_from,
        },
        "category_onsets": result.category_onsets,
        "trajectory_rows": result.trajectory.len(),
    })
}
