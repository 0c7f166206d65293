//! `corrode`: analytic and simulated corruption lifetimes for
//! eventually-consistent graph stores.
//!
//! Every subcommand builds one experiment configuration from an optional
//! JSON config file plus command-line overrides, re-validated through the
//! library's single config path, then writes machine-readable artifacts to
//! the output directory and a human summary to standard output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use corrode_core::config::{config_from_value, ExperimentConfig, DEFAULT_SEED};
use corrode_core::harness::{
    compare_topologies, run_simulation_for, run_sweep, run_validation, sim_result_json,
    solve_result_json, trajectory_csv, SummaryStats, Verdict, DEFAULT_TOLERANCE,
};
use corrode_core::solver::{fixed_point_solve, UGamma};
use corrode_core::{Error, SECONDS_PER_MONTH};

const EXIT_VERDICT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "corrode",
    version,
    about = "Corruption lifetimes in eventually-consistent graph databases",
    after_help = "Months are 30-day months: u_months = u_seconds / (30 * 86400)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the analytic passage time U_gamma (complete topology)
    Solve(CommonArgs),
    /// Run one discrete-event simulation and record its trajectory
    Simulate(CommonArgs),
    /// Tabulate U_gamma over a parameter sweep
    Sweep(CommonArgs),
    /// Cross-validate the analytic solver against simulation replicates
    Validate(CommonArgs),
    /// Compare scale-free and complete topologies at matched size
    CompareTopologies(CommonArgs),
}

/// Flags shared by every subcommand. Each domain flag mirrors one config
/// key and is also accepted under its dotted config path.
#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags below override its fields
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for result.json / sweep.csv / trajectory.csv
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Print progress detail to standard error
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Total edge count N (accepts scientific notation, e.g. 1e10)
    #[arg(long, alias = "graph.n", value_name = "EDGES")]
    n: Option<String>,

    /// Fraction of edges spanning two servers, in [0, 1]
    #[arg(long, alias = "graph.f", value_name = "FRACTION")]
    f: Option<String>,

    /// Access topology: complete or scale-free
    #[arg(long, alias = "graph.topology.kind", value_name = "KIND")]
    topology: Option<String>,

    /// Updating-query arrival rate, per second
    #[arg(long, alias = "workload.lambda", value_name = "PER_SEC")]
    lambda: Option<String>,

    /// Raw transaction rate, per second (10% are updating queries)
    #[arg(long, alias = "workload.tps", value_name = "PER_SEC")]
    tps: Option<String>,

    /// Geometric read-count parameter, in (0, 1]
    #[arg(long, alias = "workload.r", value_name = "PROB")]
    r: Option<String>,

    /// Mean distributed-write delay, seconds
    #[arg(long, alias = "workload.delta", value_name = "SECONDS")]
    delta: Option<String>,

    /// Corruption threshold fraction, in (0, 1)
    #[arg(long, alias = "solver.gamma", value_name = "FRACTION")]
    gamma: Option<String>,

    /// Fixed-point relative convergence tolerance
    #[arg(long, alias = "solver.fp_tolerance", value_name = "TOL")]
    fp_tolerance: Option<String>,

    /// Fixed-point iteration cap
    #[arg(long, alias = "solver.max_iterations", value_name = "COUNT")]
    max_iterations: Option<String>,

    /// Fixed-point mixing weight, in (0, 1]
    #[arg(long, alias = "solver.damping", value_name = "WEIGHT")]
    damping: Option<String>,

    /// Bootstrap state-2 count for the first iteration, edges
    #[arg(long, alias = "solver.seed_state2", value_name = "EDGES")]
    seed_state2: Option<String>,

    /// Single simulator RNG seed
    #[arg(long, alias = "sim.seed", value_name = "SEED")]
    seed: Option<String>,

    /// Replicate count: seeds base, base+1, ... (base from --seed or 42)
    #[arg(long, alias = "sim.seeds", value_name = "COUNT")]
    seeds: Option<String>,

    /// Simulator horizon, seconds
    #[arg(long, alias = "sim.horizon", value_name = "SECONDS")]
    horizon: Option<String>,

    /// Trajectory sampling interval, seconds
    #[arg(long, alias = "sim.sample_interval", value_name = "SECONDS")]
    sample_interval: Option<String>,

    /// Swept knob: lambda, delta, f, or gamma
    #[arg(long, alias = "sweep.parameter", value_name = "NAME")]
    sweep_parameter: Option<String>,

    /// Sweep lower bound
    #[arg(long, alias = "sweep.from", value_name = "VALUE")]
    sweep_from: Option<String>,

    /// Sweep upper bound
    #[arg(long, alias = "sweep.to", value_name = "VALUE")]
    sweep_to: Option<String>,

    /// Sweep grid size (at least 2)
    #[arg(long, alias = "sweep.steps", value_name = "COUNT")]
    sweep_steps: Option<String>,

    /// Sweep spacing: linear or log
    #[arg(long, alias = "sweep.scale", value_name = "SCALE")]
    sweep_scale: Option<String>,
}

/// A failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::config(e.to_string())
    }
}

fn parse_f64(flag: &str, text: &str) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Failure::config(format!("--{flag}: expected a finite number, got `{text}`")))
}

fn parse_count(flag: &str, text: &str) -> Result<u64, Failure> {
    let v = parse_f64(flag, text)?;
    if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(Failure::config(format!(
            "--{flag}: expected a non-negative integer, got `{text}`"
        )))
    }
}

/// Sets `root[path[0]][path[1]]... = value`, creating objects on the way.
fn set_path(root: &mut Value, path: &[&str], value: Value) {
    let mut cur = root;
    for key in &path[..path.len() - 1] {
        let obj = cur.as_object_mut().expect("parents are objects");
        if !obj.get(*key).is_some_and(Value::is_object) {
            obj.insert((*key).into(), json!({}));
        }
        cur = obj.get_mut(*key).unwrap();
    }
    cur.as_object_mut()
        .expect("parents are objects")
        .insert((*path.last().unwrap()).into(), value);
}

/// File config (or empty object) with every given flag written over it,
/// then validated exactly as a loaded file would be.
fn build_config(args: &CommonArgs) -> Result<ExperimentConfig, Failure> {
    let mut root = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Failure::config(format!("config {}: {e}", path.display())))?
        }
        None => json!({}),
    };
    if !root.is_object() {
        return Err(Failure::config("config root must be a JSON object"));
    }

    let number_overrides: [(&str, &[&str], &Option<String>); 15] = [
        ("f", &["graph", "f"], &args.f),
        ("lambda", &["workload", "lambda"], &args.lambda),
        ("tps", &["workload", "tps"], &args.tps),
        ("r", &["workload", "r"], &args.r),
        ("delta", &["workload", "delta"], &args.delta),
        ("gamma", &["solver", "gamma"], &args.gamma),
        (
            "fp-tolerance",
            &["solver", "fp_tolerance"],
            &args.fp_tolerance,
        ),
        ("damping", &["solver", "damping"], &args.damping),
        ("seed-state2", &["solver", "seed_state2"], &args.seed_state2),
        ("horizon", &["sim", "horizon"], &args.horizon),
        (
            "sample-interval",
            &["sim", "sample_interval"],
            &args.sample_interval,
        ),
        ("sweep-from", &["sweep", "from"], &args.sweep_from),
        ("sweep-to", &["sweep", "to"], &args.sweep_to),
        ("n", &["graph", "n"], &args.n),
        (
            "max-iterations",
            &["solver", "max_iterations"],
            &args.max_iterations,
        ),
    ];
    for (flag, path, given) in number_overrides {
        if let Some(text) = given {
            let value = match flag {
                "n" | "max-iterations" => json!(parse_count(flag, text)?),
                _ => json!(parse_f64(flag, text)?),
            };
            set_path(&mut root, path, value);
        }
    }

    let string_overrides: [(&[&str], &Option<String>); 3] = [
        (&["graph", "topology", "kind"], &args.topology),
        (&["sweep", "parameter"], &args.sweep_parameter),
        (&["sweep", "scale"], &args.sweep_scale),
    ];
    for (path, given) in string_overrides {
        if let Some(text) = given {
            set_path(&mut root, path, json!(text.trim()));
        }
    }
    if let Some(text) = &args.sweep_steps {
        set_path(
            &mut root,
            &["sweep", "steps"],
            json!(parse_count("sweep-steps", text)?),
        );
    }

    if let Some(text) = &args.seed {
        let seed = parse_count("seed", text)?;
        set_path(&mut root, &["sim", "seed"], json!(seed));
        if let Some(sim) = root.get_mut("sim").and_then(Value::as_object_mut) {
            sim.remove("seeds");
        }
    }
    if let Some(text) = &args.seeds {
        let count = parse_count("seeds", text)?;
        let base = root
            .pointer("/sim/seed")
            .and_then(Value::as_u64)
            .unwrap_or(DEFAULT_SEED);
        if let Some(sim) = root.get_mut("sim").and_then(Value::as_object_mut) {
            sim.remove("seed");
        }
        set_path(
            &mut root,
            &["sim", "seeds"],
            json!({ "base": base, "count": count }),
        );
    }

    Ok(config_from_value(root)?)
}

fn write_artifact(out: &PathBuf, name: &str, bytes: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join(name);
    std::fs::write(&path, bytes)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn fmt_stats(stats: &Option<SummaryStats>, horizon_exceeded: usize) -> String {
    match stats {
        Some(st) => {
            let mut s = format!("{:.6} s", st.mean);
            if let Some(sd) = st.std_dev {
                s.push_str(&format!("  (sd {sd:.6}"));
                if let Some((lo, hi)) = st.ci95 {
                    s.push_str(&format!(", ci95 [{lo:.6}, {hi:.6}]"));
                }
                s.push(')');
            }
            s.push_str(&format!(
                "  [{} completed, {} horizon-exceeded]",
                st.count, horizon_exceeded
            ));
            s
        }
        None => format!("no completed replicates  [{horizon_exceeded} horizon-exceeded]"),
    }
}

fn cmd_solve(args: &CommonArgs) -> Result<u8, Failure> {
    let cfg = build_config(args)?;
    if args.verbose > 0 {
        eprintln!("resolved config:\n{}", cfg.serialize_pretty());
    }
    let result = fixed_point_solve(&cfg.graph, &cfg.workload, &cfg.solver)?;
    write_artifact(
        &args.out,
        "result.json",
        &pretty(&solve_result_json(&result)),
    )?;
    match result.u_gamma {
        UGamma::Finite(u) => {
            println!(
                "U_gamma: {:.6} s  =  {:.6} days  =  {:.6} months",
                u,
                u / 86_400.0,
                u / SECONDS_PER_MONTH
            );
            println!(
                "alpha = {:.9}   beta = {:.9}   q = {:.6e}",
                result.alpha, result.beta, result.q
            );
            println!(
                "fixed-point iterations: {}   refinement segments: {}   converged: {}",
                result.iterations, result.refinement_segments, result.converged
            );
        }
        UGamma::Infinite => {
            let reason = if cfg.graph.f == 0.0 {
                "no distributed edges"
            } else if cfg.workload.delta == 0.0 {
                "instant writes never conflict"
            } else {
                result
                    .note
                    .as_deref()
                    .unwrap_or("corruption is unreachable")
            };
            println!("U_gamma: infinite ({reason})");
        }
    }
    println!("wrote result.json");
    if !result.converged {
        eprintln!("error: the fixed-point iteration did not converge; see result.json");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn cmd_simulate(args: &CommonArgs) -> Result<u8, Failure> {
    let cfg = build_config(args)?;
    if args.verbose > 0 {
        eprintln!("simulating seed {} ...", cfg.sim.seed);
    }
    let result = run_simulation_for(&cfg)?;
    write_artifact(&args.out, "result.json", &pretty(&sim_result_json(&result)))?;
    write_artifact(&args.out, "trajectory.csv", &trajectory_csv(&result))?;
    match result.outcome.u_gamma() {
        Some(u) => println!(
            "outcome: reached threshold at t = {:.6} s  =  {:.6} months",
            u,
            u / SECONDS_PER_MONTH
        ),
        None => println!(
            "outcome: horizon exceeded at t = {:.6} s (raise sim.horizon for an estimate)",
            result.final_time
        ),
    }
    let c = result.final_counts;
    println!(
        "final counts: n0={} n1={} n2={} n3={}",
        c[0], c[1], c[2], c[3]
    );
    let e = &result.events;
    println!(
        "events: queries={} dirty={} conflicts={} corrections={} corruptions={:?}",
        e.queries, e.dirty_queries, e.conflicts, e.corrections, e.corruptions_from
    );
    println!("wrote result.json, trajectory.csv");
    Ok(0)
}

fn cmd_sweep(args: &CommonArgs) -> Result<u8, Failure> {
    let cfg = build_config(args)?;
    let table = run_sweep(&cfg)?;
    write_artifact(&args.out, "sweep.csv", &table.to_csv())?;
    let sweep = cfg.sweep.as_ref().expect("run_sweep validated this");
    println!(
        "swept {}: {} points in [{}, {}]",
        table.parameter.as_str(),
        table.rows.len(),
        sweep.from,
        sweep.to
    );
    for row in &table.rows {
        if !row.converged {
            eprintln!(
                "warning: {} = {} did not converge; its row is a best estimate",
                table.parameter.as_str(),
                row.value
            );
        }
    }
    println!("wrote sweep.csv");
    Ok(0)
}

fn cmd_validate(args: &CommonArgs) -> Result<u8, Failure> {
    let cfg = build_config(args)?;
    if args.verbose > 0 {
        eprintln!("validating over {} seed(s) ...", cfg.seeds.len());
    }
    let report = run_validation(&cfg, DEFAULT_TOLERANCE)?;
    write_artifact(&args.out, "result.json", &pretty(&report.to_json()))?;
    match report.analytic.u_gamma {
        UGamma::Finite(u) => println!(
            "analytic U: {u:.6} s  =  {:.6} months",
            u / SECONDS_PER_MONTH
        ),
        UGamma::Infinite => println!("analytic U: infinite"),
    }
    println!(
        "simulated U: {}",
        fmt_stats(&report.sim_stats, report.horizon_exceeded)
    );
    match report.relative_error {
        Some(rel) => println!(
            "relative error: {:.6}  (tolerance {:.3})",
            rel, report.tolerance
        ),
        None => println!("relative error: n/a"),
    }
    if let Some(note) = &report.note {
        println!("note: {note}");
    }
    println!("verdict: {}", report.verdict.as_str());
    println!("wrote result.json");
    Ok(match report.verdict {
        Verdict::Pass | Verdict::ConsistentDegenerate => 0,
        Verdict::Fail | Verdict::Inconclusive => EXIT_VERDICT,
    })
}

fn cmd_compare(args: &CommonArgs) -> Result<u8, Failure> {
    let cfg = build_config(args)?;
    if args.verbose > 0 {
        eprintln!(
            "comparing topologies over {} seed(s) at N = {} ...",
            cfg.seeds.len(),
            cfg.graph.n
        );
    }
    let cmp = compare_topologies(&cfg)?;
    write_artifact(&args.out, "result.json", &pretty(&cmp.to_json()))?;
    println!(
        "scale-free U: {}",
        fmt_stats(&cmp.scale_free.stats, cmp.scale_free.horizon_exceeded)
    );
    println!(
        "complete   U: {}",
        fmt_stats(&cmp.complete.stats, cmp.complete.horizon_exceeded)
    );
    match cmp.ratio {
        Some(r) => println!("ratio (scale-free / complete): {r:.6}"),
        None => println!("ratio (scale-free / complete): n/a"),
    }
    let onsets: Vec<String> = cmp
        .scale_free
        .category_onsets
        .iter()
        .map(|o| match o.mean_time {
            Some(t) => format!("{t:.3}"),
            None => "never".into(),
        })
        .collect();
    println!(
        "scale-free category onsets (mean s): [{}]",
        onsets.join(", ")
    );
    println!("wrote result.json");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
        Command::CompareTopologies(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
