//! The synchronous round engine.
//!
//! Each round every node independently goes active with probability
//! `1 - epsilon`. Active nodes pick one neighbor uniformly; two nodes that
//! picked each other form a matched pair. Every matched pair draws one rule
//! from the grammar's rule set and the followers it needs from its picker
//! sets, then all decided instances are committed together. Matched pairs
//! are disjoint and followers are pickers, so no two instances touch the
//! same edge and the commit order is immaterial.
//!
//! # Randomness schedule
//!
//! Reproducibility and the scripted-draw tests rely on a fixed draw order.
//! Per round, on a single [`DrawSource`]:
//!
//! 1. one unit draw per node in id order; the node is active iff the draw
//!    is `>= epsilon`;
//! 2. one index draw per active node in id order, picking a neighbor from
//!    its sorted adjacency list;
//! 3. per matched pair, in ascending order of the smaller endpoint:
//!    * one index draw into the variant's rule slice (also for singleton
//!      rule sets),
//!    * the `h` index draw into `R_i \ {j}` if the rule guard passed,
//!    * the `f` index draw into `R_j \ {i}` for `r2`,
//!    * the unit draw for the add-versus-rewire branch, only under
//!      `PhiStar` `r1` with `(j, h)` absent; the add branch is taken when
//!      the draw is `< beta`.
//!
//! A guard failure consumes no further draws for that pair. Under `PhiR`
//! and `PhiRR` the branch draw never happens: `r1` always rewires.
//!
//! The pair is oriented so `d_i >= d_j`, with the larger id becoming `i` on
//! ties. Followers are pickers and pickers are active, so an inactive node
//! is never a participant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{self, Effect, GrammarVariant, RuleApplication, RuleKind};
use crate::graph::{LabeledGraph, NodeId};
use crate::metrics::{self, MetricsSample, DEFAULT_TOL};

/// Source of the engine's random draws.
///
/// Any [`rand::Rng`] qualifies through the blanket impl. The indirection
/// exists so tests can script exact draw sequences.
pub trait DrawSource {
    /// Uniform draw from `[0, 1)`.
    fn unit(&mut self) -> f64;

    /// Uniform draw from `0..len`; `len >= 1`.
    fn index(&mut self, len: usize) -> usize;
}

impl<R: Rng> DrawSource for R {
    fn unit(&mut self) -> f64 {
        self.random::<f64>()
    }

    fn index(&mut self, len: usize) -> usize {
        self.random_range(0..len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub grammar: GrammarVariant,
    /// Per-node inactivity probability, in `(0, 1)`.
    pub epsilon: f64,
    /// Edge-addition probability inside `r1`, in `(0, 1)`. Ignored unless
    /// the grammar is `PhiStar`.
    pub beta: f64,
    pub seed: u64,
    pub max_steps: u64,
    /// Metrics row cadence.
    pub metrics_every: u64,
    /// Alpha cadence on sampled rows; `None` restricts alpha to the
    /// absorption and final rows.
    pub alpha_every: Option<u64>,
    /// Snapshot cadence for [`Engine::run_with_observer`]; `None` disables
    /// snapshots.
    pub snapshot_every: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(n: usize, grammar: GrammarVariant, epsilon: f64, beta: f64, seed: u64) -> Self {
        ExperimentConfig {
            n,
            grammar,
            epsilon,
            beta,
            seed,
            max_steps: 100_000,
            metrics_every: 100,
            alpha_every: Some(100),
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n == 0 {
            return Err(EngineError::InvalidConfig("n must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(EngineError::InvalidConfig(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(EngineError::InvalidConfig(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.max_steps == 0 {
            return Err(EngineError::InvalidConfig(
                "max_steps must be positive".into(),
            ));
        }
        if self.metrics_every == 0 {
            return Err(EngineError::InvalidConfig(
                "metrics_every must be positive".into(),
            ));
        }
        if self.alpha_every == Some(0) {
            return Err(EngineError::InvalidConfig(
                "alpha_every must be positive when set".into(),
            ));
        }
        if self.snapshot_every == Some(0) {
            return Err(EngineError::InvalidConfig(
                "snapshot_every must be positive when set".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("initial graph is disconnected")]
    Disconnected,
    #[error("config says n={config_n} but graph has {graph_n} nodes")]
    NodeCountMismatch { config_n: usize, graph_n: usize },
}

/// Everything one round did: who picked whom and which rule instances ran.
/// Matched pairs with failed guards still appear, as `NoOp` applications.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub step: u64,
    /// `picks[i]` is the neighbor node `i` picked, `None` if inactive.
    pub picks: Vec<Option<NodeId>>,
    pub applications: Vec<RuleApplication>,
}

/// First step at which the graph was regular, and its degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Absorption {
    pub step: u64,
    pub m: usize,
}

/// Sampled metrics plus the absorption record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: ExperimentConfig,
    pub samples: Vec<MetricsSample>,
    pub absorption: Option<Absorption>,
}

impl Trace {
    pub fn final_alpha(&self) -> Option<f64> {
        self.samples.last().and_then(|s| s.alpha)
    }

    /// CSV rows `step,f,dbar,edges,wsum,alpha`; the alpha column is empty
    /// on rows where it was not sampled.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,f,dbar,edges,wsum,alpha")?;
        for s in &self.samples {
            match s.alpha {
                Some(a) => writeln!(
                    out,
                    "{},{},{},{},{},{:.6}",
                    s.step, s.degree_range, s.average_degree, s.edges, s.flag_sum, a
                )?,
                None => writeln!(
                    out,
                    "{},{},{},{},{},",
                    s.step, s.degree_range, s.average_degree, s.edges, s.flag_sum
                )?,
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Runs one synchronous round in place, following the randomness schedule
/// in the module docs. `step` is only recorded in the log.
pub fn run_round<D: DrawSource + ?Sized>(
    graph: &mut LabeledGraph,
    config: &ExperimentConfig,
    step: u64,
    draws: &mut D,
) -> RoundLog {
    let n = graph.node_count();

    let mut active = Vec::with_capacity(n);
    for _ in 0..n {
        active.push(draws.unit() >= config.epsilon);
    }

    let mut picks: Vec<Option<NodeId>> = Vec::with_capacity(n);
    for (i, &is_active) in active.iter().enumerate() {
        let nbrs = graph.neighbors(NodeId(i as u32));
        if is_active && !nbrs.is_empty() {
            picks.push(Some(nbrs[draws.index(nbrs.len())]));
        } else {
            picks.push(None);
        }
    }

    // Picker sets, ascending by construction.
    let mut picked_by: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (i, pick) in picks.iter().enumerate() {
        if let Some(j) = pick {
            picked_by[j.index()].push(NodeId(i as u32));
        }
    }

    let mut applications = Vec::new();
    for a in 0..n {
        let Some(b) = picks[a] else { continue };
        if b.index() <= a || picks[b.index()] != Some(NodeId(a as u32)) {
            continue;
        }
        let (i, j) = orient(graph, NodeId(a as u32), b);
        let rules = config.grammar.rules();
        let rule = rules[draws.index(rules.len())];
        applications.push(decide(graph, config, rule, i, j, &picked_by, draws));
    }

    // Disjointness of matched pairs and followers makes the commit
    // order-independent; the apply functions re-check every precondition
    // against the graph as a hard assert.
    for app in &applications {
        commit(graph, app);
    }

    RoundLog {
        step,
        picks,
        applications,
    }
}

/// Orientation rule: higher degree becomes `i`; the larger id wins ties.
fn orient(graph: &LabeledGraph, a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    let (da, db) = (graph.degree(a), graph.degree(b));
    if da > db || (da == db && a > b) {
        (a, b)
    } else {
        (b, a)
    }
}

fn noop(
    rule: RuleKind,
    i: NodeId,
    j: NodeId,
    h: Option<NodeId>,
    f: Option<NodeId>,
) -> RuleApplication {
    RuleApplication {
        rule,
        i,
        j,
        h,
        f,
        effect: Effect::NoOp,
    }
}

fn draw_follower<D: DrawSource + ?Sized>(
    pickers: &[NodeId],
    exclude: NodeId,
    draws: &mut D,
) -> NodeId {
    let candidates: Vec<NodeId> = pickers.iter().copied().filter(|&x| x != exclude).collect();
    candidates[draws.index(candidates.len())]
}

fn decide<D: DrawSource + ?Sized>(
    graph: &LabeledGraph,
    config: &ExperimentConfig,
    rule: RuleKind,
    i: NodeId,
    j: NodeId,
    picked_by: &[Vec<NodeId>],
    draws: &mut D,
) -> RuleApplication {
    let r_i = &picked_by[i.index()];
    let r_j = &picked_by[j.index()];
    match rule {
        RuleKind::R1 => {
            if graph.degree(i) <= graph.degree(j) || r_i.len() < 2 {
                return noop(rule, i, j, None, None);
            }
            let h = draw_follower(r_i, j, draws);
            if graph.has_edge(j, h) {
                return noop(rule, i, j, Some(h), None);
            }
            let effect = match config.grammar {
                GrammarVariant::PhiR | GrammarVariant::PhiRR => Effect::Rewire,
                GrammarVariant::PhiStar => {
                    if draws.unit() >= config.beta {
                        Effect::Rewire
                    } else if graph.flag(i) == 0 {
                        Effect::AddEdge
                    } else {
                        Effect::NoOp
                    }
                }
            };
            RuleApplication {
                rule,
                i,
                j,
                h: Some(h),
                f: None,
                effect,
            }
        }
        RuleKind::R2 => {
            if r_i.len() < 2 || r_j.len() < 2 {
                return noop(rule, i, j, None, None);
            }
            let h = draw_follower(r_i, j, draws);
            let f = draw_follower(r_j, i, draws);
            if graph.has_edge(i, f) || graph.has_edge(j, h) {
                return noop(rule, i, j, Some(h), Some(f));
            }
            RuleApplication {
                rule,
                i,
                j,
                h: Some(h),
                f: Some(f),
                effect: Effect::SwapNeighbors,
            }
        }
        RuleKind::R3 => {
            if graph.degree(i) <= graph.degree(j) || r_i.len() < 2 || graph.flag(i) != 1 {
                return noop(rule, i, j, None, None);
            }
            let h = draw_follower(r_i, j, draws);
            if !graph.has_edge(j, h) {
                return noop(rule, i, j, Some(h), None);
            }
            RuleApplication {
                rule,
                i,
                j,
                h: Some(h),
                f: None,
                effect: Effect::RemoveEdge,
            }
        }
        RuleKind::R4 => RuleApplication {
            rule,
            i,
            j,
            h: None,
            f: None,
            effect: Effect::SwapFlags,
        },
    }
}

fn commit(graph: &mut LabeledGraph, app: &RuleApplication) {
    let conflict = "disjoint instances cannot conflict";
    match app.effect {
        Effect::NoOp => {}
        Effect::Rewire => {
            grammar::apply_r1_rewire(graph, app.i, app.j, app.h.expect("r1 has h"))
                .expect(conflict);
        }
        Effect::AddEdge => {
            grammar::apply_r1_add(graph, app.i, app.j, app.h.expect("r1 has h")).expect(conflict);
        }
        Effect::SwapNeighbors => {
            grammar::apply_r2(
                graph,
                app.i,
                app.j,
                app.h.expect("r2 has h"),
                app.f.expect("r2 has f"),
            )
            .expect(conflict);
        }
        Effect::RemoveEdge => {
            grammar::apply_r3(graph, app.i, app.j, app.h.expect("r3 has h")).expect(conflict);
        }
        Effect::SwapFlags => {
            grammar::apply_r4(graph, app.i, app.j).expect(conflict);
        }
    }
}

/// Degrees `m` a run starting from `e0` edges on `n` nodes can absorb at:
/// `2 e0 <= m n <= 2 e0 + 2 n` with `m n` even. Pure integer arithmetic.
pub fn feasible_m_set(n: usize, e0: usize) -> Vec<usize> {
    assert!(n > 0);
    let lo = 2 * e0;
    let hi = 2 * e0 + 2 * n;
    let m_lo = lo.div_ceil(n);
    let m_hi = hi / n;
    (m_lo..=m_hi)
        .filter(|m| (m * n).is_multiple_of(2))
        .collect()
}

/// Owns a graph, a config and a seeded generator; steps rounds and records
/// the trace. Invariants checked every step: the edge/flag ledger
/// `|E(t)| - |E(0)| = sum w(t) - sum w(0)` as a hard assert, connectivity
/// as a debug assert.
pub struct Engine {
    graph: LabeledGraph,
    config: ExperimentConfig,
    rng: ChaCha8Rng,
    step: u64,
    initial_edges: usize,
    initial_flag_sum: usize,
    absorption: Option<Absorption>,
}

impl Engine {
    pub fn new(graph: LabeledGraph, config: ExperimentConfig) -> Result<Engine, EngineError> {
        config.validate()?;
        if graph.node_count() != config.n {
            return Err(EngineError::NodeCountMismatch {
                config_n: config.n,
                graph_n: graph.node_count(),
            });
        }
        if !graph.is_connected() {
            return Err(EngineError::Disconnected);
        }
        let absorption = (graph.degree_range() == 0).then(|| Absorption {
            step: 0,
            m: graph
                .average_degree()
                .as_integer()
                .expect("regular graph has integer average degree"),
        });
        Ok(Engine {
            initial_edges: graph.edge_count(),
            initial_flag_sum: graph.flag_sum(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            graph,
            config,
            step: 0,
            absorption,
        })
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn absorption(&self) -> Option<Absorption> {
        self.absorption
    }

    pub fn into_graph(self) -> LabeledGraph {
        self.graph
    }

    /// Advances one round.
    pub fn advance(&mut self) -> RoundLog {
        self.step += 1;
        let log = run_round(&mut self.graph, &self.config, self.step, &mut self.rng);
        assert_eq!(
            self.graph.edge_count() as i64 - self.initial_edges as i64,
            self.graph.flag_sum() as i64 - self.initial_flag_sum as i64,
            "edge/flag ledger violated at step {}",
            self.step
        );
        debug_assert!(
            self.graph.is_connected(),
            "connectivity lost at step {}",
            self.step
        );
        if self.absorption.is_none() && self.graph.degree_range() == 0 {
            self.absorption = Some(Absorption {
                step: self.step,
                m: self
                    .graph
                    .average_degree()
                    .as_integer()
                    .expect("regular graph has integer average degree"),
            });
        }
        log
    }

    fn sample(&self, with_alpha: bool) -> MetricsSample {
        let alpha = (with_alpha && self.graph.node_count() >= 2).then(|| {
            metrics::algebraic_connectivity(&self.graph, DEFAULT_TOL)
                .expect("n >= 2 and default tolerance")
        });
        MetricsSample {
            step: self.step,
            degree_range: self.graph.degree_range(),
            average_degree: self.graph.average_degree(),
            edges: self.graph.edge_count(),
            flag_sum: self.graph.flag_sum(),
            alpha,
        }
    }

    fn alpha_due(&self) -> bool {
        self.config
            .alpha_every
            .is_some_and(|every| self.step.is_multiple_of(every))
    }

    /// Runs to `max_steps`, recording metrics rows at the configured
    /// cadence plus forced rows (with alpha) at absorption and at the final
    /// step. Step 0 is always recorded.
    pub fn run(mut self) -> Trace {
        self.run_with_observer(|_, _| {})
    }

    /// Like [`Engine::run`], additionally handing the graph to `observer`
    /// at step 0, every `snapshot_every` steps, and at the final step
    /// (only when `snapshot_every` is set). Borrows the engine so the final
    /// graph stays inspectable afterwards.
    pub fn run_with_observer<F>(&mut self, mut observer: F) -> Trace
    where
        F: FnMut(u64, &LabeledGraph),
    {
        let absorbed_at_start = self.absorption.is_some();
        let mut samples = vec![self.sample(self.alpha_due() || absorbed_at_start)];
        if self.config.snapshot_every.is_some() {
            observer(0, &self.graph);
        }
        while self.step < self.config.max_steps {
            let was_absorbed = self.absorption.is_some();
            self.advance();
            let just_absorbed = !was_absorbed && self.absorption.is_some();
            let last = self.step == self.config.max_steps;
            let metrics_due = self.step.is_multiple_of(self.config.metrics_every);
            if metrics_due || just_absorbed || last {
                samples.push(self.sample(self.alpha_due() || just_absorbed || last));
            }
            if let Some(every) = self.config.snapshot_every {
                if self.step.is_multiple_of(every) || last {
                    observer(self.step, &self.graph);
                }
            }
        }
        Trace {
            config: self.config,
            samples,
            absorption: self.absorption,
        }
    }
}
