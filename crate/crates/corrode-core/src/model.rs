//! Shared domain types: the edge-state machine, graph/workload descriptions,
//! and the closed-form probability formulas used by both engines.

use crate::{Error, Result};

/// Corruption state of a single edge record.
///
/// States 0 and 1 are clean; state 2 is mechanical corruption (the two end
/// records of a distributed edge disagree, one side still correct); state 3 is
/// semantic corruption (a value computed from corrupt reads) and is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EdgeState {
    /// State 0: clean edge stored wholly on one server.
    CleanLocal = 0,
    /// State 1: clean edge with end records on two servers.
    CleanDistributed = 1,
    /// State 2: distributed edge whose two end records disagree.
    ReciprocallyInconsistent = 2,
    /// State 3: edge value derived from corrupt input; no repair exists.
    SemanticallyCorrupt = 3,
}

impl EdgeState {
    /// All states, in numeric order.
    pub const ALL: [EdgeState; 4] = [
        EdgeState::CleanLocal,
        EdgeState::CleanDistributed,
        EdgeState::ReciprocallyInconsistent,
        EdgeState::SemanticallyCorrupt,
    ];

    /// Numeric index of the state (0..=3).
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Reconstructs a state from its numeric index.
    pub fn from_index(i: usize) -> Option<EdgeState> {
        EdgeState::ALL.get(i).copied()
    }

    /// Whether `from -> to` is a constructible state change.
    ///
    /// Legal arcs: 1→2, 2→1, 0→3, 1→3, 2→3. State 3 is absorbing, local
    /// edges never become distributed (no 0↔1), and mechanical corruption
    /// requires a distributed edge (no 0→2). Self-loops (writes that leave
    /// the state unchanged) are always permitted.
    #[inline]
    pub fn is_legal_transition(from: EdgeState, to: EdgeState) -> bool {
        use EdgeState::*;
        matches!(
            (from, to),
            (CleanDistributed, ReciprocallyInconsistent)
                | (ReciprocallyInconsistent, CleanDistributed)
                | (CleanLocal, SemanticallyCorrupt)
                | (CleanDistributed, SemanticallyCorrupt)
                | (ReciprocallyInconsistent, SemanticallyCorrupt)
        ) || from == to
    }
}

/// Real-valued edge counts per state; the fluid state of the database.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    /// Counts `[n0, n1, n2, n3]` indexed by [`EdgeState::index`].
    pub n: [f64; 4],
    /// Total edge count `N`.
    pub total: f64,
}

impl StateVector {
    /// Builds a validated state vector: components non-negative and summing
    /// to `total` within relative tolerance 1e-9.
    pub fn new(n: [f64; 4], total: f64) -> Result<StateVector> {
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidInput(format!(
                "state vector total must be positive and finite, got {total}"
            )));
        }
        if n.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "state vector components must be non-negative and finite, got {n:?}"
            )));
        }
        let sum: f64 = n.iter().sum();
        if (sum - total).abs() > 1e-9 * total {
            return Err(Error::InvalidInput(format!(
                "state vector components sum to {sum}, expected {total}"
            )));
        }
        Ok(StateVector { n, total })
    }

    /// Sum of all components (equals `total` up to rounding).
    pub fn sum(&self) -> f64 {
        self.n.iter().sum()
    }
}

/// One popularity class of a scale-free access distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Category {
    /// Number of edges in this category.
    pub edges: u64,
    /// Probability that a uniformly chosen access lands in this category.
    pub access_probability: f64,
}

/// Edge access distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Every edge equally likely to be accessed.
    Complete,
    /// Categorical access: pick a category by probability, then an edge
    /// uniformly within it. Few popular edges, many unpopular ones.
    ScaleFree {
        /// Popularity classes, most popular first.
        categories: Vec<Category>,
    },
}

impl Topology {
    /// The seven-category scale-free distribution used throughout: category
    /// `j` has `10^(4+j)` edges and access probability `1/2^(j+1)` rounded to
    /// two decimals, so probabilities sum to exactly 1.00.
    pub fn default_scale_free() -> Topology {
        let probs = [0.50, 0.25, 0.13, 0.06, 0.03, 0.02, 0.01];
        Topology::ScaleFree {
            categories: probs
                .iter()
                .enumerate()
                .map(|(j, &p)| Category {
                    edges: 10u64.pow(4 + j as u32),
                    access_probability: p,
                })
                .collect(),
        }
    }

    /// Validates the topology against the graph's total edge count.
    pub fn validate(&self, total_edges: u64) -> Result<()> {
        match self {
            Topology::Complete => Ok(()),
            Topology::ScaleFree { categories } => {
                if categories.is_empty() {
                    return Err(Error::InvalidConfig {
                        field: "graph.topology.categories".into(),
                        reason: "scale-free topology needs at least one category".into(),
                    });
                }
                let mut psum = 0.0;
                let mut esum: u64 = 0;
                for (j, c) in categories.iter().enumerate() {
                    if c.access_probability <= 0.0 || !c.access_probability.is_finite() {
                        return Err(Error::InvalidConfig {
                            field: format!("graph.topology.categories[{j}].access_probability"),
                            reason: format!("must be positive, got {}", c.access_probability),
                        });
                    }
                    if c.edges == 0 {
                        return Err(Error::InvalidConfig {
                            field: format!("graph.topology.categories[{j}].edges"),
                            reason: "category must contain at least one edge".into(),
                        });
                    }
                    psum += c.access_probability;
                    esum += c.edges;
                }
                if (psum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig {
                        field: "graph.topology.categories".into(),
                        reason: format!("access probabilities sum to {psum}, expected 1.0"),
                    });
                }
                if esum != total_edges {
                    return Err(Error::InvalidConfig {
                        field: "graph.topology.categories".into(),
                        reason: format!(
                            "category edge counts sum to {esum}, expected graph.n = {total_edges}"
                        ),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Size and partitioning of the edge population.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    /// Total number of edges `N`.
    pub n: u64,
    /// Fraction of edges whose end records live on different servers.
    pub f: f64,
    /// Access distribution over edges.
    pub topology: Topology,
}

impl GraphSpec {
    /// Validates all fields and the topology's consistency with `n`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig {
                field: "graph.n".into(),
                reason: "edge count must be at least 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.f) || !self.f.is_finite() {
            return Err(Error::InvalidConfig {
                field: "graph.f".into(),
                reason: format!("distributed fraction must lie in [0, 1], got {}", self.f),
            });
        }
        self.topology.validate(self.n)
    }

    /// The clean initial fluid state `[(1-f)N, fN, 0, 0]`.
    pub fn initial_state(&self) -> StateVector {
        let n = self.n as f64;
        StateVector {
            n: [(1.0 - self.f) * n, self.f * n, 0.0, 0.0],
            total: n,
        }
    }
}

/// Query workload parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    /// Arrival rate of updating queries, per second.
    pub lambda: f64,
    /// Geometric parameter of the per-query read count (`K >= 2`).
    pub r: f64,
    /// Mean duration of a distributed write, seconds.
    pub delta: f64,
}

impl WorkloadSpec {
    /// Builds a workload from a raw transaction rate: 10% of transactions
    /// are updating queries, so `lambda = 0.10 * tps`.
    pub fn from_tps(tps: f64, r: f64, delta: f64) -> WorkloadSpec {
        WorkloadSpec {
            lambda: 0.10 * tps,
            r,
            delta,
        }
    }

    /// Validates all fields.
    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig {
                field: "workload.lambda".into(),
                reason: format!("arrival rate must be positive, got {}", self.lambda),
            });
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidConfig {
                field: "workload.r".into(),
                reason: format!("read-count parameter must lie in (0, 1], got {}", self.r),
            });
        }
        if self.delta < 0.0 || !self.delta.is_finite() {
            return Err(Error::InvalidConfig {
                field: "workload.delta".into(),
                reason: format!("write delay must be non-negative, got {}", self.delta),
            });
        }
        Ok(())
    }

    /// Mean number of reads per query, `2 + (1-r)/r`.
    pub fn mean_reads(&self) -> f64 {
        2.0 + (1.0 - self.r) / self.r
    }
}

/// Per-edge transition rates and the probabilities they derive from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCoefficients {
    /// Rate of any state's flow into semantic corruption (states 0, 1, and 2
    /// share one coefficient).
    pub g_star3: f64,
    /// Rate of mechanical corruption (1 → 2) per state-1 edge.
    pub g_12: f64,
    /// Rate of correction (2 → 1) per state-2 edge.
    pub g_21: f64,
    /// Probability a single read lands on a clean record.
    pub alpha: f64,
    /// Probability all of a query's reads are clean.
    pub beta: f64,
    /// Probability a distributed write is conflicted.
    pub q: f64,
}

/// Solver tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Corruption threshold: solve for the time when `n3` reaches `gamma * N`.
    pub gamma: f64,
    /// Relative convergence tolerance of the fixed-point iteration.
    pub fp_tolerance: f64,
    /// Iteration cap before reporting non-convergence.
    pub max_iterations: u32,
    /// Mixing weight in (0, 1] for iterate updates; 1.0 is plain iteration.
    pub damping: f64,
    /// Bootstrap value for the averaged state-2 count at iteration 0; any
    /// positive value breaks the degenerate all-clean fixed point.
    pub seed_state2: f64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            gamma: 0.1,
            fp_tolerance: 1e-8,
            max_iterations: 10_000,
            damping: 1.0,
            seed_state2: 1.0,
        }
    }
}

impl SolverConfig {
    /// Validates all fields.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig {
                field: "solver.gamma".into(),
                reason: format!("threshold must lie in (0, 1), got {}", self.gamma),
            });
        }
        if !(self.fp_tolerance > 0.0 && self.fp_tolerance.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "solver.fp_tolerance".into(),
                reason: format!("tolerance must be positive, got {}", self.fp_tolerance),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig {
                field: "solver.max_iterations".into(),
                reason: "iteration cap must be at least 1".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig {
                field: "solver.damping".into(),
                reason: format!("damping must lie in (0, 1], got {}", self.damping),
            });
        }
        if !(self.seed_state2 > 0.0 && self.seed_state2.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "solver.seed_state2".into(),
                reason: format!("bootstrap seed must be positive, got {}", self.seed_state2),
            });
        }
        Ok(())
    }
}

/// Probability that a single uniformly placed read returns a clean record:
/// `alpha = (n0 + n1 + n2/2) / N`. A state-2 edge serves its correct side
/// with probability 1/2; state-3 records are always corrupt.
pub fn clean_read_probability(n: &StateVector) -> Result<f64> {
    if n.total <= 0.0 {
        return Err(Error::InvalidInput(
            "clean-read probability undefined for an empty graph".into(),
        ));
    }
    let a = (n.n[0] + n.n[1] + 0.5 * n.n[2]) / n.total;
    Ok(a.clamp(0.0, 1.0))
}

/// Probability that all reads of one query are clean:
/// `beta = alpha^2 r / (1 - alpha (1 - r))`.
///
/// Equals `E[alpha^K]` for the read count `K` with `P(K=k) = r (1-r)^(k-2)`,
/// `k >= 2`: a query makes at least two reads, then continues with
/// probability `1-r` per read.
pub fn all_reads_clean_probability(alpha: f64, r: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha), "alpha out of range: {alpha}");
    debug_assert!(r > 0.0 && r <= 1.0, "r out of range: {r}");
    alpha * alpha * r / (1.0 - alpha * (1.0 - r))
}

/// Complement `1 - beta` computed from the complement `eps = 1 - alpha`
/// without cancellation: `eps ((1+r) - r eps) / (r + eps (1-r))`.
///
/// Algebraically identical to `1 - all_reads_clean_probability(1-eps, r)`,
/// but stays fully accurate when `eps` is many orders below 1 (large graphs
/// early in the corruption ramp), where the direct form loses all precision
/// to the subtraction. Its slope at `eps = 0` is the mean read count
/// `(1+r)/r`.
pub fn all_reads_clean_complement(alpha_complement: f64, r: f64) -> f64 {
    let e = alpha_complement;
    debug_assert!((0.0..=1.0).contains(&e), "complement out of range: {e}");
    debug_assert!(r > 0.0 && r <= 1.0, "r out of range: {r}");
    e * ((1.0 + r) - r * e) / (r + e * (1.0 - r))
}

/// Probability that a distributed write is conflicted — that another query
/// begins an update at the write's remote end before it completes there:
/// `q = lambda delta / (2N + lambda delta)`.
///
/// The race is between write completion (rate `1/delta`) and a conflicting
/// arrival at that end (rate `lambda / 2N`); `q` is the arrival-first
/// probability.
pub fn conflict_probability(lambda: f64, delta: f64, total_edges: f64) -> f64 {
    debug_assert!(lambda >= 0.0 && delta >= 0.0 && total_edges >= 1.0);
    let ld = lambda * delta;
    ld / (2.0 * total_edges + ld)
}

/// Per-edge transition rates from the workload and the current probabilities:
/// `g_*3 = lambda (1-beta) / N` (a dirty query's write corrupts its target),
/// `g_12 = lambda beta^2 q / N` (conflicted write, both writers clean),
/// `g_21 = lambda beta (1-q) / N` (clean conflict-free overwrite corrects).
pub fn transition_coefficients(
    lambda: f64,
    total_edges: f64,
    beta: f64,
    q: f64,
) -> TransitionCoefficients {
    transition_coefficients_from_complement(lambda, total_edges, 1.0 - beta, q)
}

/// Same rates built from `1 - beta` directly, preserving the precision of a
/// tiny corruption flux (see [`all_reads_clean_complement`]).
pub fn transition_coefficients_from_complement(
    lambda: f64,
    total_edges: f64,
    beta_complement: f64,
    q: f64,
) -> TransitionCoefficients {
    let per_edge = lambda / total_edges;
    let beta = 1.0 - beta_complement;
    TransitionCoefficients {
        g_star3: per_edge * beta_complement,
        g_12: per_edge * beta * beta * q,
        g_21: per_edge * beta * (1.0 - q),
        alpha: f64::NAN,
        beta,
        q,
    }
}

/// Raw right-hand sides of the fluid equations:
/// `n0' = -g_*3 n0`, `n1' = g_21 n2 - (g_*3 + g_12) n1`,
/// `n2' = g_12 n1 - (g_*3 + g_21) n2`, `n3' = g_*3 (n0 + n1 + n2)`.
/// The four components always sum to zero.
pub fn fluid_derivatives(n: &StateVector, g: &TransitionCoefficients) -> [f64; 4] {
    let [n0, n1, n2, _] = n.n;
    [
        -g.g_star3 * n0,
        g.g_21 * n2 - (g.g_star3 + g.g_12) * n1,
        g.g_12 * n1 - (g.g_star3 + g.g_21) * n2,
        g.g_star3 * (n0 + n1 + n2),
    ]
}

/// Fluid right-hand sides with the cross-coupling terms replaced by fixed
/// averages `nbar1`, `nbar2` — the decoupled form the averaged closed-form
/// trajectories solve exactly.
pub fn fluid_derivatives_averaged(
    n: &[f64; 4],
    g: &TransitionCoefficients,
    nbar1: f64,
    nbar2: f64,
) -> [f64; 4] {
    let [n0, n1, n2, _] = *n;
    [
        -g.g_star3 * n0,
        g.g_21 * nbar2 - (g.g_star3 + g.g_12) * n1,
        g.g_12 * nbar1 - (g.g_star3 + g.g_21) * n2,
        g.g_star3 * (n0 + n1 + n2),
    ]
}
