//! Discrete-event simulator of the stochastic corruption process.
//!
//! Queries arrive in a Poisson stream. Each query performs a geometric
//! number of instantaneous reads (a corrupt or coin-flip-inconsistent read
//! dirties the query), then writes one independently sampled edge. Local
//! writes apply instantly; distributed writes stay in flight for an
//! exponential latency, during which a newcomer starting at the in-flight
//! write's remote end conflicts with it. Completed writes commit the state
//! transition; state 3 is absorbing. The run stops when the corrupt count
//! reaches `gamma N` or at the horizon.
//!
//! Everything is sampled by inversion from one deterministic ChaCha stream,
//! so identical seeds reproduce identical event sequences bit for bit.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{EdgeState, GraphSpec, Topology, WorkloadSpec};
use crate::{Error, Result};

/// Largest simulable graph; one byte of state per edge.
const MAX_SIM_EDGES: u64 = 1_000_000_000;

/// Run parameters of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// RNG seed; the full event stream is a deterministic function of it.
    pub seed: u64,
    /// Maximum simulated seconds before giving up.
    pub horizon: f64,
    /// Seconds between trajectory snapshots.
    pub sample_interval: f64,
    /// Stop once corrupt edges reach this fraction of all edges.
    pub gamma: f64,
    /// Diagnostic mode: reads never dirty the writer, pinning the system to
    /// the clean-read regime so conflict and correction rates can be
    /// measured in isolation. Not reachable from config files.
    pub force_clean_reads: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 42,
            horizon: 10_000.0,
            sample_interval: 1.0,
            gamma: 0.1,
            force_clean_reads: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon <= 0.0 || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig {
                field: "sim.horizon".into(),
                reason: format!("must be positive and finite, got {}", self.horizon),
            });
        }
        if self.sample_interval <= 0.0 || !self.sample_interval.is_finite() {
            return Err(Error::InvalidConfig {
                field: "sim.sample_interval".into(),
                reason: format!("must be positive and finite, got {}", self.sample_interval),
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig {
                field: "solver.gamma".into(),
                reason: format!("must be in (0, 1), got {}", self.gamma),
            });
        }
        Ok(())
    }
}

/// One distributed write window.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteInFlight {
    pub start_time: f64,
    pub completion_time: f64,
    /// End the write still has to reach: 0 = A, 1 = B.
    pub remote_end: u8,
    /// The writing query read at least one corrupt record.
    pub writer_dirty: bool,
    pub conflicted: bool,
    /// A conflicting partner write was dirty.
    pub partner_dirty: bool,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimOutcome {
    /// Corrupt edges reached `gamma N` at this simulated time.
    ReachedThreshold { u_gamma: f64 },
    /// The horizon passed first.
    HorizonExceeded,
}

impl SimOutcome {
    /// The passage-time estimate, if the run produced one.
    pub fn u_gamma(&self) -> Option<f64> {
        match self {
            SimOutcome::ReachedThreshold { u_gamma } => Some(*u_gamma),
            SimOutcome::HorizonExceeded => None,
        }
    }
}

/// A sampled snapshot of the four state counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub counts: [u64; 4],
}

/// Tallies of the interesting event classes in one run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EventCounts {
    pub queries: u64,
    pub reads: u64,
    /// Queries whose dirty flag was set by their reads.
    pub dirty_queries: u64,
    pub local_writes: u64,
    pub distributed_writes: u64,
    /// Conflicted write pairs detected at write start.
    pub conflicts: u64,
    /// Committed 2 -> 1 corrections.
    pub corrections: u64,
    /// Committed corruptions by source state: [0 -> 3, 1 -> 3, 2 -> 3].
    pub corruptions_from: [u64; 3],
}

/// Everything one simulation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub outcome: SimOutcome,
    /// Simulated seconds at which the run stopped.
    pub final_time: f64,
    pub final_counts: [u64; 4],
    /// Snapshots every `sample_interval`, starting at `t = 0`, ending with
    /// the stop time.
    pub trajectory: Vec<TrajectoryRow>,
    pub events: EventCounts,
    /// Per category: first time its internal corrupt fraction reached
    /// `gamma`, if it did. One entry for the Complete topology.
    pub category_onsets: Vec<Option<f64>>,
    /// Seed echo.
    pub seed: u64,
}

/// Geometric read count: `P(K=k) = r (1-r)^(k-2)`, `k >= 2`, by inversion.
pub fn sample_read_count<R: Rng>(rng: &mut R, r: f64) -> u64 {
    debug_assert!(r > 0.0 && r <= 1.0);
    if r >= 1.0 {
        return 2;
    }
    let u = 1.0 - rng.random::<f64>();
    2 + (u.ln() / (1.0 - r).ln()).floor() as u64
}

/// Exponential draw with the given mean, by inversion; strictly positive.
fn sample_exponential<R: Rng>(rng: &mut R, mean: f64) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    -u.ln().max(f64::MIN_POSITIVE.ln()) * mean
}

/// Precomputed category layout: edges are numbered category-major, and
/// within each category the first `round(f N_j)` indices are distributed.
struct Layout {
    /// Exclusive cumulative edge counts; `starts[j]..starts[j+1]` is
    /// category `j`.
    starts: Vec<u64>,
    /// Distributed edges at the front of each category.
    distributed: Vec<u64>,
    /// Cumulative access probabilities for the categorical stage.
    cumulative_p: Vec<f64>,
}

impl Layout {
    fn new(graph: &GraphSpec) -> Layout {
        let cats: Vec<(u64, f64)> = match &graph.topology {
            Topology::Complete => vec![(graph.n, 1.0)],
            Topology::ScaleFree { categories } => categories
                .iter()
                .map(|c| (c.edges, c.access_probability))
                .collect(),
        };
        let mut starts = Vec::with_capacity(cats.len() + 1);
        let mut distributed = Vec::with_capacity(cats.len());
        let mut cumulative_p = Vec::with_capacity(cats.len());
        let mut acc = 0u64;
        let mut p_acc = 0.0;
        for &(edges, p) in &cats {
            starts.push(acc);
            acc += edges;
            distributed.push((graph.f * edges as f64).round() as u64);
            p_acc += p;
            cumulative_p.push(p_acc);
        }
        starts.push(acc);
        Layout {
            starts,
            distributed,
            cumulative_p,
        }
    }

    fn category_count(&self) -> usize {
        self.distributed.len()
    }

    fn category_edges(&self, j: usize) -> u64 {
        self.starts[j + 1] - self.starts[j]
    }

    fn category_of(&self, edge: u64) -> usize {
        // At most a handful of categories; linear scan beats binary search.
        for j in 0..self.category_count() {
            if edge < self.starts[j + 1] {
                return j;
            }
        }
        unreachable!("edge {edge} beyond layout")
    }

    fn is_distributed(&self, edge: u64) -> bool {
        let j = self.category_of(edge);
        edge - self.starts[j] < self.distributed[j]
    }

    /// Uniform edge for Complete (or a single category), otherwise the
    /// two-stage categorical-then-uniform draw.
    fn sample_edge<R: Rng>(&self, rng: &mut R) -> u64 {
        if self.category_count() == 1 {
            return rng.random_range(0..self.starts[1]);
        }
        let u = rng.random::<f64>();
        let mut j = self.category_count() - 1;
        for (k, &cp) in self.cumulative_p.iter().enumerate() {
            if u < cp {
                j = k;
                break;
            }
        }
        self.starts[j] + rng.random_range(0..self.category_edges(j))
    }
}

/// A read observes the committed state: clean from states 0/1, a coin flip
/// from state 2, corrupt from state 3. Returns true when corrupt.
fn read_is_corrupt<R: Rng>(rng: &mut R, state: u8) -> bool {
    match state {
        0 | 1 => false,
        2 => rng.random::<f64>() < 0.5,
        3 => true,
        _ => unreachable!("invalid state {state}"),
    }
}

/// Committed outcome of a write: (1) a dirty writer, or a conflict with a
/// dirty partner, corrupts; (2) a conflicted clean pair leaves reciprocal
/// inconsistency; (3) a clean conflict-free write restores a distributed
/// edge (and leaves a local edge untouched). State 3 never changes.
fn write_outcome(state: u8, distributed: bool, w: &WriteInFlight) -> u8 {
    if state == 3 {
        return 3;
    }
    if w.writer_dirty || (w.conflicted && w.partner_dirty) {
        3
    } else if w.conflicted {
        2
    } else if distributed {
        1
    } else {
        state
    }
}

/// Pending completion, ordered by time then schedule order.
struct Completion {
    time: f64,
    seq: u64,
    write_id: u64,
}

impl PartialEq for Completion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Completion {}
impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Completion {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we pop the earliest event.
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Engine<'a> {
    layout: Layout,
    states: Vec<u8>,
    counts: [u64; 4],
    writes: HashMap<u64, (u64, WriteInFlight)>,
    latest_in_flight: HashMap<u64, u64>,
    heap: BinaryHeap<Completion>,
    rng: ChaCha8Rng,
    events: EventCounts,
    cat_corrupt: Vec<u64>,
    cat_threshold: Vec<u64>,
    onsets: Vec<Option<f64>>,
    workload: &'a WorkloadSpec,
    next_write_id: u64,
    next_seq: u64,
    force_clean_reads: bool,
}

impl Engine<'_> {
    fn commit(&mut self, edge: u64, new_state: u8, now: f64) {
        let old = self.states[edge as usize];
        debug_assert!(
            EdgeState::is_legal_transition(
                EdgeState::from_index(old as usize).unwrap(),
                EdgeState::from_index(new_state as usize).unwrap(),
            ),
            "illegal transition {old} -> {new_state} on edge {edge} at t={now}"
        );
        if old == new_state {
            return;
        }
        self.states[edge as usize] = new_state;
        self.counts[old as usize] -= 1;
        self.counts[new_state as usize] += 1;
        if old == 2 && new_state == 1 {
            self.events.corrections += 1;
        }
        if new_state == 3 {
            self.events.corruptions_from[old as usize] += 1;
            let j = self.layout.category_of(edge);
            self.cat_corrupt[j] += 1;
            if self.onsets[j].is_none() && self.cat_corrupt[j] >= self.cat_threshold[j] {
                self.onsets[j] = Some(now);
            }
        }
        debug_assert_eq!(
            self.counts.iter().sum::<u64>(),
            self.states.len() as u64,
            "count conservation broken at t={now}"
        );
    }

    /// Read phase plus write start for one arriving query.
    fn process_query(&mut self, now: f64) {
        self.events.queries += 1;
        let k = sample_read_count(&mut self.rng, self.workload.r);
        self.events.reads += k;
        let mut dirty = false;
        for _ in 0..k {
            let edge = self.layout.sample_edge(&mut self.rng);
            let corrupt = read_is_corrupt(&mut self.rng, self.states[edge as usize]);
            dirty |= corrupt;
        }
        if self.force_clean_reads {
            dirty = false;
        }
        if dirty {
            self.events.dirty_queries += 1;
        }

        let target = self.layout.sample_edge(&mut self.rng);
        if !self.layout.is_distributed(target) {
            self.events.local_writes += 1;
            let w = WriteInFlight {
                start_time: now,
                completion_time: now,
                remote_end: 0,
                writer_dirty: dirty,
                conflicted: false,
                partner_dirty: false,
            };
            let new_state = write_outcome(self.states[target as usize], false, &w);
            self.commit(target, new_state, now);
            return;
        }

        self.events.distributed_writes += 1;
        let d = sample_exponential(&mut self.rng, self.workload.delta);
        let remote_end = if self.rng.random::<f64>() < 0.5 {
            0u8
        } else {
            1u8
        };
        let mut w = WriteInFlight {
            start_time: now,
            completion_time: now + d,
            remote_end,
            writer_dirty: dirty,
            conflicted: false,
            partner_dirty: false,
        };
        // The newcomer starts at the end opposite its remote end; it
        // conflicts with the most recent still-in-flight write on this edge
        // when that start end is the end the incumbent has yet to reach.
        if let Some(&incumbent_id) = self.latest_in_flight.get(&target) {
            let (_, incumbent) = self
                .writes
                .get_mut(&incumbent_id)
                .expect("stale in-flight id");
            if 1 - remote_end == incumbent.remote_end {
                w.conflicted = true;
                w.partner_dirty |= incumbent.writer_dirty;
                incumbent.conflicted = true;
                incumbent.partner_dirty |= dirty;
                self.events.conflicts += 1;
            }
        }
        let id = self.next_write_id;
        self.next_write_id += 1;
        self.writes.insert(id, (target, w));
        self.latest_in_flight.insert(target, id);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Completion {
            time: now + d,
            seq,
            write_id: id,
        });
    }

    fn process_completion(&mut self, c: Completion) {
        let (edge, w) = self.writes.remove(&c.write_id).expect("unknown write id");
        if self.latest_in_flight.get(&edge) == Some(&c.write_id) {
            self.latest_in_flight.remove(&edge);
        }
        let new_state = write_outcome(self.states[edge as usize], true, &w);
        self.commit(edge, new_state, c.time);
    }
}

/// Runs one full simulation. Deterministic given the seed; exact integer
/// conservation of the state counts throughout.
pub fn run_simulation(
    graph: &GraphSpec,
    workload: &WorkloadSpec,
    sim: &SimConfig,
) -> Result<SimResult> {
    graph.validate()?;
    workload.validate()?;
    sim.validate()?;
    if graph.n > MAX_SIM_EDGES {
        return Err(Error::InvalidInput(format!(
            "graph has {} edges; the simulator supports at most {MAX_SIM_EDGES} \
             (use the analytic solver for larger graphs)",
            graph.n
        )));
    }

    let layout = Layout::new(graph);
    let n_cats = layout.category_count();
    let mut states = vec![0u8; graph.n as usize];
    let mut counts = [0u64; 4];
    for j in 0..n_cats {
        let (start, dist) = (layout.starts[j], layout.distributed[j]);
        for e in start..start + dist {
            states[e as usize] = 1;
        }
        counts[1] += dist;
    }
    counts[0] = graph.n - counts[1];

    let cat_threshold: Vec<u64> = (0..n_cats)
        .map(|j| {
            (sim.gamma * layout.category_edges(j) as f64)
                .ceil()
                .max(1.0) as u64
        })
        .collect();
    let threshold = (sim.gamma * graph.n as f64).ceil().max(1.0) as u64;

    let mut engine = Engine {
        layout,
        states,
        counts,
        writes: HashMap::new(),
        latest_in_flight: HashMap::new(),
        heap: BinaryHeap::new(),
        rng: ChaCha8Rng::seed_from_u64(sim.seed),
        events: EventCounts::default(),
        cat_corrupt: vec![0; n_cats],
        cat_threshold,
        onsets: vec![None; n_cats],
        workload,
        next_write_id: 0,
        next_seq: 0,
        force_clean_reads: sim.force_clean_reads,
    };

    let mut trajectory = vec![TrajectoryRow {
        t: 0.0,
        counts: engine.counts,
    }];
    let mut next_sample = sim.sample_interval;

    let mean_gap = 1.0 / workload.lambda;
    let mut next_arrival = sample_exponential(&mut engine.rng, mean_gap);
    let mut arrival_seq = engine.next_seq;
    engine.next_seq += 1;

    let outcome;
    let final_time;
    loop {
        let (ev_time, ev_seq, is_arrival) = match engine.heap.peek() {
            Some(c) if (c.time, c.seq) < (next_arrival, arrival_seq) => (c.time, c.seq, false),
            _ => (next_arrival, arrival_seq, true),
        };
        let _ = ev_seq;

        if ev_time > sim.horizon {
            while next_sample <= sim.horizon {
                trajectory.push(TrajectoryRow {
                    t: next_sample,
                    counts: engine.counts,
                });
                next_sample += sim.sample_interval;
            }
            outcome = SimOutcome::HorizonExceeded;
            final_time = sim.horizon;
            break;
        }

        while next_sample <= ev_time {
            trajectory.push(TrajectoryRow {
                t: next_sample,
                counts: engine.counts,
            });
            next_sample += sim.sample_interval;
        }

        if is_arrival {
            engine.process_query(ev_time);
            next_arrival = ev_time + sample_exponential(&mut engine.rng, mean_gap);
            arrival_seq = engine.next_seq;
            engine.next_seq += 1;
        } else {
            let c = engine.heap.pop().unwrap();
            engine.process_completion(c);
        }

        if engine.counts[3] >= threshold {
            outcome = SimOutcome::ReachedThreshold { u_gamma: ev_time };
            final_time = ev_time;
            break;
        }
    }

    if trajectory.last().map(|r| r.t) != Some(final_time) {
        trajectory.push(TrajectoryRow {
            t: final_time,
            counts: engine.counts,
        });
    }

    Ok(SimResult {
        outcome,
        final_time,
        final_counts: engine.counts,
        trajectory,
        events: engine.events,
        category_onsets: engine.onsets,
        seed: sim.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{conflict_probability, Category};

    fn desk_graph() -> GraphSpec {
        GraphSpec {
            n: 10_000,
            f: 0.3,
            topology: Topology::Complete,
        }
    }

    fn desk_workload() -> WorkloadSpec {
        WorkloadSpec {
            lambda: 500.0,
            r: 0.4,
            delta: 0.005,
        }
    }

    #[test]
    fn read_count_is_two_when_r_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_read_count(&mut rng, 1.0), 2);
        }
    }

    #[test]
    fn read_count_mean_matches_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_read_count(&mut rng, 0.4)).sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 3.5).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn read_count_mass_at_two_matches_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let twos = (0..n)
            .filter(|_| sample_read_count(&mut rng, 0.5) == 2)
            .count();
        let frac = twos as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "P(K=2) = {frac}");
    }

    #[test]
    fn complete_edge_sampling_is_uniform() {
        let graph = GraphSpec {
            n: 10,
            f: 0.0,
            topology: Topology::Complete,
        };
        let layout = Layout::new(&graph);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hits = [0u64; 10];
        let n = 1_000_000;
        for _ in 0..n {
            hits[layout.sample_edge(&mut rng) as usize] += 1;
        }
        for (e, &h) in hits.iter().enumerate() {
            let freq = h as f64 / n as f64;
            assert!((freq - 0.1).abs() < 0.003, "edge {e}: {freq}");
        }
    }

    #[test]
    fn scale_free_category_zero_frequency() {
        let graph = GraphSpec {
            n: 11_111_110_000,
            f: 0.0,
            topology: Topology::default_scale_free(),
        };
        let layout = Layout::new(&graph);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut cat0 = 0u64;
        for _ in 0..n {
            if layout.sample_edge(&mut rng) < layout.starts[1] {
                cat0 += 1;
            }
        }
        let freq = cat0 as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "category-0 frequency {freq}");
    }

    #[test]
    fn read_outcomes_by_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(!read_is_corrupt(&mut rng, 0));
        assert!(!read_is_corrupt(&mut rng, 1));
        assert!(read_is_corrupt(&mut rng, 3));
        let n = 1_000_000;
        let corrupt = (0..n).filter(|_| read_is_corrupt(&mut rng, 2)).count();
        let frac = corrupt as f64 / n as f64;
        assert!(
            (frac - 0.5).abs() < 0.0015,
            "state-2 corrupt fraction {frac}"
        );
    }

    fn mk_write(dirty: bool, conflicted: bool, partner_dirty: bool) -> WriteInFlight {
        WriteInFlight {
            start_time: 0.0,
            completion_time: 1.0,
            remote_end: 0,
            writer_dirty: dirty,
            conflicted,
            partner_dirty,
        }
    }

    #[test]
    fn write_outcome_precedence() {
        // Clean conflict-free writes restore distributed edges, leave local
        // edges unchanged.
        assert_eq!(write_outcome(2, true, &mk_write(false, false, false)), 1);
        assert_eq!(write_outcome(1, true, &mk_write(false, false, false)), 1);
        assert_eq!(write_outcome(0, false, &mk_write(false, false, false)), 0);
        // Clean conflicted pairs land in state 2.
        assert_eq!(write_outcome(1, true, &mk_write(false, true, false)), 2);
        assert_eq!(write_outcome(2, true, &mk_write(false, true, false)), 2);
        // A dirty writer, or a dirty partner, corrupts.
        assert_eq!(write_outcome(0, false, &mk_write(true, false, false)), 3);
        assert_eq!(write_outcome(1, true, &mk_write(true, false, false)), 3);
        assert_eq!(write_outcome(2, true, &mk_write(false, true, true)), 3);
        // State 3 is absorbing.
        assert_eq!(write_outcome(3, true, &mk_write(false, false, false)), 3);
    }

    #[test]
    fn simulation_is_deterministic() {
        let sim = SimConfig {
            horizon: 400.0,
            ..SimConfig::default()
        };
        let a = run_simulation(&desk_graph(), &desk_workload(), &sim).unwrap();
        let b = run_simulation(&desk_graph(), &desk_workload(), &sim).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_conserves_counts_and_n3_monotone() {
        let sim = SimConfig {
            horizon: 400.0,
            ..SimConfig::default()
        };
        let r = run_simulation(&desk_graph(), &desk_workload(), &sim).unwrap();
        let mut prev_n3 = 0;
        for row in &r.trajectory {
            assert_eq!(row.counts.iter().sum::<u64>(), 10_000, "at t={}", row.t);
            assert!(row.counts[3] >= prev_n3, "n3 decreased at t={}", row.t);
            prev_n3 = row.counts[3];
        }
        assert_eq!(r.trajectory.first().unwrap().t, 0.0);
        assert_eq!(r.trajectory.last().unwrap().t, r.final_time);
    }

    #[test]
    fn desk_run_reaches_threshold() {
        let sim = SimConfig {
            horizon: 5_000.0,
            ..SimConfig::default()
        };
        let r = run_simulation(&desk_graph(), &desk_workload(), &sim).unwrap();
        let u = r
            .outcome
            .u_gamma()
            .expect("threshold expected before horizon");
        assert!(u > 0.0 && u < 5_000.0);
        assert!(r.final_counts[3] >= 1000);
        // The crossing is the first event at or past the threshold.
        assert!(r.final_counts[3] < 1010, "overshoot {}", r.final_counts[3]);
    }

    #[test]
    fn f_zero_stays_clean_to_horizon() {
        let graph = GraphSpec {
            n: 200,
            f: 0.0,
            topology: Topology::Complete,
        };
        let w = WorkloadSpec {
            lambda: 100.0,
            r: 0.4,
            delta: 0.005,
        };
        let sim = SimConfig {
            horizon: 20.0,
            ..SimConfig::default()
        };
        let r = run_simulation(&graph, &w, &sim).unwrap();
        assert_eq!(r.outcome, SimOutcome::HorizonExceeded);
        for row in &r.trajectory {
            assert_eq!(row.counts[2], 0);
            assert_eq!(row.counts[3], 0);
        }
        assert_eq!(r.events.distributed_writes, 0);
        assert!(r.events.local_writes > 0);
    }

    #[test]
    fn conflict_frequency_matches_conflict_probability() {
        // All edges distributed and reads forced clean: the conflict count
        // per distributed write estimates q directly.
        let n = 200_000u64;
        let graph = GraphSpec {
            n,
            f: 1.0,
            topology: Topology::Complete,
        };
        let w = WorkloadSpec {
            lambda: 10_000.0,
            r: 0.4,
            delta: 0.005,
        };
        let sim = SimConfig {
            horizon: 40.0,
            sample_interval: 10.0,
            force_clean_reads: true,
            ..SimConfig::default()
        };
        let r = run_simulation(&graph, &w, &sim).unwrap();
        let writes = r.events.distributed_writes as f64;
        assert!(writes > 100_000.0, "writes = {writes}");
        let q = conflict_probability(w.lambda, w.delta, n as f64);
        let observed = r.events.conflicts as f64 / writes;
        let se = (q * (1.0 - q) / writes).sqrt();
        assert!(
            (observed - q).abs() <= 3.0 * se,
            "observed {observed} vs q {q} (3 se = {})",
            3.0 * se
        );
    }

    #[test]
    fn forced_clean_reads_keep_state_two_bounded() {
        let sim = SimConfig {
            horizon: 300.0,
            force_clean_reads: true,
            ..SimConfig::default()
        };
        let r = run_simulation(&desk_graph(), &desk_workload(), &sim).unwrap();
        assert_eq!(r.outcome, SimOutcome::HorizonExceeded);
        let max_n2 = r.trajectory.iter().map(|row| row.counts[2]).max().unwrap();
        assert!(max_n2 <= 100, "state-2 population grew to {max_n2}");
        assert_eq!(r.final_counts[3], 0);
        assert!(r.events.conflicts > 0);
        assert!(r.events.corrections > 0);
    }

    #[test]
    fn single_category_scale_free_equals_complete() {
        let complete = GraphSpec {
            n: 1_000,
            f: 0.3,
            topology: Topology::Complete,
        };
        let degenerate = GraphSpec {
            n: 1_000,
            f: 0.3,
            topology: Topology::ScaleFree {
                categories: vec![Category {
                    edges: 1_000,
                    access_probability: 1.0,
                }],
            },
        };
        let w = WorkloadSpec {
            lambda: 300.0,
            r: 0.4,
            delta: 0.005,
        };
        let sim = SimConfig {
            horizon: 200.0,
            ..SimConfig::default()
        };
        let a = run_simulation(&complete, &w, &sim).unwrap();
        let b = run_simulation(&degenerate, &w, &sim).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hot_category_corrupts_before_cold() {
        let graph = GraphSpec {
            n: 10_100,
            f: 0.3,
            topology: Topology::ScaleFree {
                categories: vec![
                    Category {
                        edges: 100,
                        access_probability: 0.9,
                    },
                    Category {
                        edges: 10_000,
                        access_probability: 0.1,
                    },
                ],
            },
        };
        let w = WorkloadSpec {
            lambda: 2_000.0,
            r: 0.4,
            delta: 0.005,
        };
        let sim = SimConfig {
            horizon: 2_000.0,
            ..SimConfig::default()
        };
        let r = run_simulation(&graph, &w, &sim).unwrap();
        let hot = r.category_onsets[0].expect("hot category should corrupt");
        if let Some(cold) = r.category_onsets[1] {
            assert!(hot < cold, "hot {hot} vs cold {cold}");
        }
    }

    #[test]
    fn oversized_graph_rejected() {
        let graph = GraphSpec {
            n: MAX_SIM_EDGES + 1,
            f: 0.3,
            topology: Topology::Complete,
        };
        assert!(run_simulation(&graph, &desk_workload(), &SimConfig::default()).is_err());
    }
}
