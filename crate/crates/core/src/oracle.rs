//! Ground-truth machinery for the statistical verification suites.
//!
//! Everything here is deliberately independent of how the engine evolves
//! graphs: regular graphs are enumerated by brute-force completion,
//! canonical forms by minimizing over all relabelings, and one-step
//! reachability by searching for an explicit set of disjoint rule
//! instances. The suites compare engine behavior against these references.
//!
//! Limits: enumeration is guarded at `n <= 10` and canonical forms at
//! `n <= 8`; both are factorial-flavored by design, favoring obviousness
//! over reach.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::engine::{run_round, DrawSource, ExperimentConfig};
use crate::grammar::{r2_applicable, Effect, RuleApplication, RuleKind};
use crate::graph::{Edge, LabeledGraph, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hard cap for [`enumerate_labeled_regular`].
pub const ENUM_NODE_LIMIT: usize = 10;
/// Hard cap for [`canonical_form`].
pub const CANON_NODE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("n={n} exceeds the guard {limit}")]
    TooManyNodes { n: usize, limit: usize },
    #[error("stride must be positive")]
    ZeroStride,
    #[error("no snapshots selected (len {len}, burn_in {burn_in}, stride {stride})")]
    NoSamples {
        len: usize,
        burn_in: usize,
        stride: usize,
    },
    #[error("snapshot {index} is not regular (degree range {range})")]
    NotRegular { index: usize, range: usize },
    #[error("snapshot {index} has {edges} edges, previous snapshots had {expected}")]
    MixedEdgeCounts {
        index: usize,
        edges: usize,
        expected: usize,
    },
    #[error("bucket list is empty")]
    NoBuckets,
    #[error("observed a state outside the expected bucket list")]
    UnexpectedState,
    #[error("chi-square needs at least {required} samples for {buckets} buckets, got {total}")]
    InsufficientSamples {
        total: u64,
        required: u64,
        buckets: usize,
    },
    #[error("endpoint graphs unusable: {0}")]
    BadEndpoints(String),
    #[error("states are not one round apart under disjoint r2/r4 instances")]
    NotOneStepReachable,
}

/// Sorted edge list of a graph after the lexicographically minimizing
/// relabeling; equal iff the graphs are isomorphic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm(pub Vec<Edge>);

/// Bucket identity for empirical distributions. Both variants ignore the
/// flag vector; the uniformity claims concern the structure marginal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateKey {
    Labeled(Vec<Edge>),
    Canonical(CanonicalForm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Labeled,
    Canonical,
}

pub fn state_key(g: &LabeledGraph, kind: KeyKind) -> Result<StateKey, OracleError> {
    match kind {
        KeyKind::Labeled => Ok(StateKey::Labeled(g.edges().collect())),
        KeyKind::Canonical => Ok(StateKey::Canonical(canonical_form(g)?)),
    }
}

/// All labeled `m`-regular graphs on `n` nodes, each exactly once, as
/// sorted edge lists.
///
/// Completion order makes uniqueness structural: the smallest unsaturated
/// node receives its entire remaining neighbor set (all larger, by
/// induction) in one step, so every graph is produced by exactly one
/// choice sequence. Odd `m * n` yields the empty set by parity.
pub fn enumerate_labeled_regular(
    n: usize,
    m: usize,
    connected_only: bool,
) -> Result<Vec<Vec<Edge>>, OracleError> {
    if n == 0 || n > ENUM_NODE_LIMIT {
        return Err(OracleError::TooManyNodes {
            n,
            limit: ENUM_NODE_LIMIT,
        });
    }
    if m >= n || (n * m) % 2 == 1 {
        return Ok(Vec::new());
    }
    let mut state = Enumerator {
        n,
        residual: vec![m; n],
        edges: Vec::with_capacity(n * m / 2),
        connected_only,
        out: Vec::new(),
    };
    state.extend();
    Ok(state.out)
}

struct Enumerator {
    n: usize,
    residual: Vec<usize>,
    edges: Vec<Edge>,
    connected_only: bool,
    out: Vec<Vec<Edge>>,
}

impl Enumerator {
    fn extend(&mut self) {
        let Some(u) = self.residual.iter().position(|&r| r > 0) else {
            if !self.connected_only || edges_connected(self.n, &self.edges) {
                let mut edges = self.edges.clone();
                edges.sort();
                self.out.push(edges);
            }
            return;
        };
        let candidates: Vec<usize> = ((u + 1)..self.n)
            .filter(|&v| self.residual[v] > 0)
            .collect();
        let need = self.residual[u];
        if candidates.len() < need {
            return;
        }
        let mut picked = Vec::with_capacity(need);
        self.complete(u, need, &candidates, 0, &mut picked);
    }

    fn complete(
        &mut self,
        u: usize,
        need: usize,
        candidates: &[usize],
        start: usize,
        picked: &mut Vec<usize>,
    ) {
        if picked.len() == need {
            for &v in picked.iter() {
                self.residual[v] -= 1;
                self.edges
                    .push(Edge::new(NodeId(u as u32), NodeId(v as u32)));
            }
            self.residual[u] = 0;
            self.extend();
            self.residual[u] = need;
            for &v in picked.iter() {
                self.residual[v] += 1;
                self.edges.pop();
            }
            return;
        }
        for idx in start..candidates.len() {
            if candidates.len() - idx < need - picked.len() {
                break;
            }
            picked.push(candidates[idx]);
            self.complete(u, need, candidates, idx + 1, picked);
            picked.pop();
        }
    }
}

/// Union-find connectivity over a raw edge list.
fn edges_connected(n: usize, edges: &[Edge]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for e in edges {
        let (a, b) = (
            find(&mut parent, e.a().index()),
            find(&mut parent, e.b().index()),
        );
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Lexicographically minimal sorted edge list over all `n!` relabelings.
pub fn canonical_form(g: &LabeledGraph) -> Result<CanonicalForm, OracleError> {
    let n = g.node_count();
    if n > CANON_NODE_LIMIT {
        return Err(OracleError::TooManyNodes {
            n,
            limit: CANON_NODE_LIMIT,
        });
    }
    let edges: Vec<(usize, usize)> = g.edges().map(|e| (e.a().index(), e.b().index())).collect();
    let mut best: Option<Vec<(u32, u32)>> = None;
    let mut consider = |perm: &[u32]| {
        let mut relabeled: Vec<(u32, u32)> = edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        relabeled.sort_unstable();
        if best.as_ref().is_none_or(|b| relabeled < *b) {
            best = Some(relabeled);
        }
    };

    // Heap's algorithm over the identity permutation.
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut c = vec![0usize; n];
    consider(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            consider(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let best = best.expect("at least the identity permutation was considered");
    Ok(CanonicalForm(
        best.into_iter()
            .map(|(a, b)| Edge::new(NodeId(a), NodeId(b)))
            .collect(),
    ))
}

/// Counted state occurrences.
#[derive(Debug, Clone, Default)]
pub struct Histogram {
    buckets: BTreeMap<StateKey, u64>,
    total: u64,
}

impl Histogram {
    pub fn record(&mut self, key: StateKey) {
        *self.buckets.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, key: &StateKey) -> u64 {
        self.buckets.get(key).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct states observed.
    pub fn support(&self) -> usize {
        self.buckets.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, u64)> {
        self.buckets.iter().map(|(k, &v)| (k, v))
    }
}

/// Buckets the post-absorption snapshots `snapshots[burn_in..]`, thinned by
/// `stride`, under the chosen key. Rejects non-regular snapshots and mixed
/// edge counts: the uniformity claims only concern a fixed regular class.
pub fn empirical_distribution(
    snapshots: &[LabeledGraph],
    burn_in: usize,
    stride: usize,
    kind: KeyKind,
) -> Result<Histogram, OracleError> {
    if stride == 0 {
        return Err(OracleError::ZeroStride);
    }
    if burn_in >= snapshots.len() {
        return Err(OracleError::NoSamples {
            len: snapshots.len(),
            burn_in,
            stride,
        });
    }
    let mut hist = Histogram::default();
    let mut expected_edges = None;
    for (offset, g) in snapshots[burn_in..].iter().step_by(stride).enumerate() {
        let index = burn_in + offset * stride;
        let range = g.degree_range();
        if range != 0 {
            return Err(OracleError::NotRegular { index, range });
        }
        let expected = *expected_edges.get_or_insert(g.edge_count());
        if g.edge_count() != expected {
            return Err(OracleError::MixedEdgeCounts {
                index,
                edges: g.edge_count(),
                expected,
            });
        }
        hist.record(state_key(g, kind)?);
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
}

/// Pearson statistic of `hist` against the uniform distribution over
/// `expected`. Requires at least 10 samples per bucket on average and that
/// every observed state is an expected one.
pub fn chi_square_uniform(
    hist: &Histogram,
    expected: &[StateKey],
) -> Result<ChiSquareTest, OracleError> {
    if expected.is_empty() {
        return Err(OracleError::NoBuckets);
    }
    let buckets = expected.len();
    let required = 10 * buckets as u64;
    if hist.total() < required {
        return Err(OracleError::InsufficientSamples {
            total: hist.total(),
            required,
            buckets,
        });
    }
    let expected_set: BTreeSet<&StateKey> = expected.iter().collect();
    if hist.iter().any(|(k, _)| !expected_set.contains(k)) {
        return Err(OracleError::UnexpectedState);
    }
    let mean = hist.total() as f64 / buckets as f64;
    let statistic = expected
        .iter()
        .map(|k| {
            let diff = hist.count(k) as f64 - mean;
            diff * diff / mean
        })
        .sum();
    Ok(ChiSquareTest {
        statistic,
        dof: buckets - 1,
    })
}

/// Upper `p` quantile of the chi-square distribution with `dof` degrees of
/// freedom.
pub fn chi_square_quantile(dof: usize, p: f64) -> f64 {
    assert!(dof >= 1);
    assert!(p > 0.0 && p < 1.0);
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(p)
}

/// Replays a fixed sequence of draws; panics when the script runs dry or an
/// index draw is out of range. Deliberately does not implement `rand::Rng`,
/// so it cannot be confused with a real generator.
#[derive(Debug, Clone, Default)]
pub struct ScriptedDraws {
    units: VecDeque<f64>,
    indices: VecDeque<usize>,
}

impl ScriptedDraws {
    pub fn new(
        units: impl IntoIterator<Item = f64>,
        indices: impl IntoIterator<Item = usize>,
    ) -> ScriptedDraws {
        ScriptedDraws {
            units: units.into_iter().collect(),
            indices: indices.into_iter().collect(),
        }
    }

    pub fn exhausted(&self) -> bool {
        self.units.is_empty() && self.indices.is_empty()
    }
}

impl DrawSource for ScriptedDraws {
    fn unit(&mut self) -> f64 {
        self.units
            .pop_front()
            .expect("script ran out of unit draws")
    }

    fn index(&mut self, len: usize) -> usize {
        let v = self
            .indices
            .pop_front()
            .expect("script ran out of index draws");
        assert!(v < len, "scripted index {v} out of range for len {len}");
        v
    }
}

/// Builds the draw script that makes [`run_round`] execute exactly the
/// given instance: participants are active and pick each other, everyone
/// else is inactive. Works for any `epsilon`, `beta` in `(0, 1)`.
///
/// For `r2`/`r4` the pair roles are flipped automatically when the engine's
/// orientation disagrees with the instance; for `r1`/`r3` the strict degree
/// guard fixes the orientation, so the instance must already comply.
pub fn script_single_instance(
    g: &LabeledGraph,
    config: &ExperimentConfig,
    instance: &RuleApplication,
) -> ScriptedDraws {
    let n = g.node_count();
    let mut inst = *instance;
    let (di, dj) = (g.degree(inst.i), g.degree(inst.j));
    let engine_oriented = di > dj || (di == dj && inst.i > inst.j);
    if !engine_oriented {
        assert!(
            matches!(inst.rule, RuleKind::R2 | RuleKind::R4),
            "r1/r3 instances must satisfy the strict degree orientation"
        );
        std::mem::swap(&mut inst.i, &mut inst.j);
        std::mem::swap(&mut inst.h, &mut inst.f);
    }

    let mut target = vec![None; n];
    target[inst.i.index()] = Some(inst.j);
    target[inst.j.index()] = Some(inst.i);
    if let Some(h) = inst.h {
        target[h.index()] = Some(inst.i);
    }
    if let Some(f) = inst.f {
        target[f.index()] = Some(inst.j);
    }

    let mut units = Vec::new();
    for t in &target {
        units.push(if t.is_some() {
            (1.0 + config.epsilon) / 2.0
        } else {
            config.epsilon / 2.0
        });
    }

    let mut indices = Vec::new();
    for (node, t) in target.iter().enumerate() {
        if let Some(pick) = t {
            let pos = g
                .neighbors(NodeId(node as u32))
                .iter()
                .position(|v| v == pick)
                .expect("scripted pick must be a neighbor");
            indices.push(pos);
        }
    }

    let rules = config.grammar.rules();
    indices.push(
        rules
            .iter()
            .position(|r| *r == inst.rule)
            .expect("rule must belong to the grammar variant"),
    );
    // R_i \ {j} and R_j \ {i} are singletons by construction.
    if inst.h.is_some() {
        indices.push(0);
    }
    if inst.f.is_some() {
        indices.push(0);
    }
    if config.grammar.edge_count_can_change()
        && inst.rule == RuleKind::R1
        && !g.has_edge(inst.j, inst.h.expect("r1 has h"))
    {
        units.push(match inst.effect {
            Effect::Rewire => (1.0 + config.beta) / 2.0,
            _ => config.beta / 2.0,
        });
    }
    ScriptedDraws::new(units, indices)
}

/// Empirical one-round transition probabilities in both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryEstimate {
    pub trials: u64,
    pub hits_forward: u64,
    pub hits_backward: u64,
    pub p_forward: f64,
    pub p_backward: f64,
    pub stderr_forward: f64,
    pub stderr_backward: f64,
}

impl SymmetryEstimate {
    /// True when the two estimates agree within `k` combined standard
    /// errors.
    pub fn symmetric_within(&self, k: f64) -> bool {
        (self.p_forward - self.p_backward).abs() <= k * (self.stderr_forward + self.stderr_backward)
    }
}

/// Monte Carlo estimate of `P(g -> g')` and `P(g' -> g)` in one round.
///
/// Endpoints must be regular with equal degree on the same node set and one
/// round apart (witnessed by [`one_step_decomposition`]); trial `t` runs on
/// stream `t + 1` of a generator seeded with `config.seed`, independent of
/// the trial count.
pub fn estimate_transition_symmetry(
    from: &LabeledGraph,
    to: &LabeledGraph,
    trials: u64,
    config: &ExperimentConfig,
) -> Result<SymmetryEstimate, OracleError> {
    if from.node_count() != to.node_count() {
        return Err(OracleError::BadEndpoints(format!(
            "node counts differ: {} vs {}",
            from.node_count(),
            to.node_count()
        )));
    }
    for (name, g) in [("from", from), ("to", to)] {
        if g.degree_range() != 0 {
            return Err(OracleError::BadEndpoints(format!("{name} is not regular")));
        }
        if !g.is_connected() {
            return Err(OracleError::BadEndpoints(format!("{name} is disconnected")));
        }
    }
    if from.edge_count() != to.edge_count() {
        return Err(OracleError::BadEndpoints(
            "edge counts differ, not the same regular class".into(),
        ));
    }
    if trials == 0 {
        return Err(OracleError::BadEndpoints("trials must be positive".into()));
    }
    if one_step_decomposition(from, to).is_none() {
        return Err(OracleError::NotOneStepReachable);
    }

    let count_hits = |start: &LabeledGraph, end: &LabeledGraph| -> u64 {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(t + 1);
                let mut g = start.clone();
                run_round(&mut g, config, 0, &mut rng);
                u64::from(g == *end)
            })
            .sum()
    };
    let hits_forward = count_hits(from, to);
    let hits_backward = count_hits(to, from);
    let p = |hits: u64| hits as f64 / trials as f64;
    let stderr = |hits: u64| {
        let p = p(hits);
        (p * (1.0 - p) / trials as f64).sqrt()
    };
    Ok(SymmetryEstimate {
        trials,
        hits_forward,
        hits_backward,
        p_forward: p(hits_forward),
        p_backward: p(hits_backward),
        stderr_forward: stderr(hits_forward),
        stderr_backward: stderr(hits_backward),
    })
}

/// Searches for disjoint `r2`/`r4` instances turning `from` into `to` in
/// one round; `Some(vec![])` when the states are equal. Only the
/// degree-preserving rules are considered, which is exactly the move set
/// available between two regular states.
pub fn one_step_decomposition(
    from: &LabeledGraph,
    to: &LabeledGraph,
) -> Option<Vec<RuleApplication>> {
    if from.node_count() != to.node_count() {
        return None;
    }
    let from_edges: BTreeSet<Edge> = from.edges().collect();
    let to_edges: BTreeSet<Edge> = to.edges().collect();
    let removed: Vec<Edge> = from_edges.difference(&to_edges).copied().collect();
    let added: Vec<Edge> = to_edges.difference(&from_edges).copied().collect();
    if removed.len() != added.len() {
        return None;
    }
    let flag_diff: Vec<NodeId> = from
        .nodes()
        .filter(|&i| from.flag(i) != to.flag(i))
        .collect();
    let mut used = BTreeSet::new();
    search_decomposition(from, to, &removed, &added, &flag_diff, &mut used)
}

fn search_decomposition(
    from: &LabeledGraph,
    to: &LabeledGraph,
    removed: &[Edge],
    added: &[Edge],
    flag_diff: &[NodeId],
    used: &mut BTreeSet<NodeId>,
) -> Option<Vec<RuleApplication>> {
    if let Some(&e0) = removed.first() {
        // e0 must be the (i, h) side of some r2; its partner edge supplies
        // (j, f). Roles within r2 are symmetric, so fixing e0 as the i-side
        // loses nothing.
        for (i, h) in [(e0.a(), e0.b()), (e0.b(), e0.a())] {
            for e1 in &removed[1..] {
                for (j, f) in [(e1.a(), e1.b()), (e1.b(), e1.a())] {
                    let participants = [i, j, h, f];
                    if participants.iter().any(|x| used.contains(x)) {
                        continue;
                    }
                    if !from.has_edge(i, j) || !to.has_edge(i, j) {
                        continue;
                    }
                    if !r2_applicable(from, i, j, h, f) {
                        continue;
                    }
                    let gained = [Edge::new(i, f), Edge::new(j, h)];
                    if !gained.iter().all(|e| added.contains(e)) {
                        continue;
                    }
                    if participants.iter().any(|&x| from.flag(x) != to.flag(x)) {
                        continue;
                    }
                    let removed_rest: Vec<Edge> =
                        removed[1..].iter().copied().filter(|e| *e != *e1).collect();
                    let added_rest: Vec<Edge> = added
                        .iter()
                        .copied()
                        .filter(|e| !gained.contains(e))
                        .collect();
                    for x in participants {
                        used.insert(x);
                    }
                    if let Some(mut rest) =
                        search_decomposition(from, to, &removed_rest, &added_rest, flag_diff, used)
                    {
                        rest.insert(
                            0,
                            RuleApplication {
                                rule: RuleKind::R2,
                                i,
                                j,
                                h: Some(h),
                                f: Some(f),
                                effect: Effect::SwapNeighbors,
                            },
                        );
                        return Some(rest);
                    }
                    for x in participants {
                        used.remove(&x);
                    }
                }
            }
        }
        return None;
    }
    let next = flag_diff.iter().find(|x| !used.contains(x));
    if let Some(&x) = next {
        for &y in from.neighbors(x) {
            if used.contains(&y) {
                continue;
            }
            if from.flag(x) == from.flag(y) {
                continue;
            }
            if to.flag(x) != from.flag(y) || to.flag(y) != from.flag(x) {
                continue;
            }
            used.insert(x);
            used.insert(y);
            if let Some(mut rest) = search_decomposition(from, to, removed, added, flag_diff, used)
            {
                rest.insert(
                    0,
                    RuleApplication {
                        rule: RuleKind::R4,
                        i: x.max(y),
                        j: x.min(y),
                        h: None,
                        f: None,
                        effect: Effect::SwapFlags,
                    },
                );
                return Some(rest);
            }
            used.remove(&x);
            used.remove(&y);
        }
        return None;
    }
    Some(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{apply_r2, apply_r4, GrammarVariant};
    use crate::topology;

    fn nid(i: usize) -> NodeId {
        NodeId(i as u32)
    }

    fn count_regular_by_mask(n: usize, m: usize, connected_only: bool) -> usize {
        let pairs = n * (n - 1) / 2;
        let mut count = 0;
        for mask in 0u32..(1 << pairs) {
            let mut g = LabeledGraph::new(n);
            let mut bit = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if mask & (1 << bit) != 0 {
                        g.add_edge(nid(i), nid(j)).unwrap();
                    }
                    bit += 1;
                }
            }
            if g.nodes().all(|i| g.degree(i) == m) && (!connected_only || g.is_connected()) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn enumeration_counts() {
        // Labeled C4s.
        assert_eq!(enumerate_labeled_regular(4, 2, true).unwrap().len(), 3);
        // K4 is the only labeled cubic graph on 4 nodes.
        assert_eq!(enumerate_labeled_regular(4, 3, true).unwrap().len(), 1);
        // Odd n * m: parity kills everything.
        assert_eq!(enumerate_labeled_regular(5, 3, false).unwrap().len(), 0);
        // Labeled C5s.
        assert_eq!(enumerate_labeled_regular(5, 2, true).unwrap().len(), 12);
        // 2-regular on 6 nodes: 60 hexagons plus 10 triangle pairs.
        assert_eq!(enumerate_labeled_regular(6, 2, false).unwrap().len(), 70);
        assert_eq!(enumerate_labeled_regular(6, 2, true).unwrap().len(), 60);
        // Cubic on 6 nodes: 70 graphs, all connected.
        let cubic = enumerate_labeled_regular(6, 3, true).unwrap();
        assert_eq!(cubic.len(), 70);
        assert_eq!(enumerate_labeled_regular(6, 3, false).unwrap().len(), 70);
        // Guard.
        assert!(enumerate_labeled_regular(11, 2, true).is_err());
    }

    #[test]
    fn enumeration_matches_mask_filter() {
        for (n, m) in [(4, 2), (5, 2), (6, 2), (6, 3), (6, 4)] {
            for connected_only in [false, true] {
                assert_eq!(
                    enumerate_labeled_regular(n, m, connected_only)
                        .unwrap()
                        .len(),
                    count_regular_by_mask(n, m, connected_only),
                    "n={n} m={m} connected_only={connected_only}"
                );
            }
        }
    }

    #[test]
    fn enumerated_graphs_are_distinct_regular_and_sorted() {
        let all = enumerate_labeled_regular(6, 3, true).unwrap();
        let distinct: BTreeSet<&Vec<Edge>> = all.iter().collect();
        assert_eq!(distinct.len(), all.len());
        for edges in &all {
            assert!(edges.windows(2).all(|w| w[0] < w[1]));
            let pairs: Vec<(usize, usize)> = edges
                .iter()
                .map(|e| (e.a().index(), e.b().index()))
                .collect();
            let g = LabeledGraph::from_edges(6, &pairs).unwrap();
            assert_eq!(g.degree_range(), 0);
            assert_eq!(g.degree(nid(0)), 3);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn canonical_form_identifies_isomorphs() {
        let c4a = LabeledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let c4b = LabeledGraph::from_edges(4, &[(0, 2), (2, 1), (1, 3), (0, 3)]).unwrap();
        assert_eq!(canonical_form(&c4a).unwrap(), canonical_form(&c4b).unwrap());

        let prism = topology::prism();
        let k33 = topology::complete_bipartite_3_3();
        assert_ne!(
            canonical_form(&prism).unwrap(),
            canonical_form(&k33).unwrap()
        );

        let too_big = topology::cycle(9);
        assert!(canonical_form(&too_big).is_err());
    }

    #[test]
    fn cubic_six_node_graphs_fall_into_two_classes() {
        let mut class_sizes: BTreeMap<CanonicalForm, usize> = BTreeMap::new();
        for edges in enumerate_labeled_regular(6, 3, true).unwrap() {
            let pairs: Vec<(usize, usize)> = edges
                .iter()
                .map(|e| (e.a().index(), e.b().index()))
                .collect();
            let g = LabeledGraph::from_edges(6, &pairs).unwrap();
            *class_sizes.entry(canonical_form(&g).unwrap()).or_insert(0) += 1;
        }
        let mut sizes: Vec<usize> = class_sizes.values().copied().collect();
        sizes.sort();
        // 10 labelings of K_{3,3} and 60 of the prism.
        assert_eq!(sizes, vec![10, 60]);
        assert_eq!(
            class_sizes
                .get(&canonical_form(&topology::prism()).unwrap())
                .copied(),
            Some(60)
        );
    }

    #[test]
    fn labeled_key_ignores_flags() {
        let mut a = topology::prism();
        let b = a.clone();
        a.set_flag(nid(2), 1).unwrap();
        assert_eq!(
            state_key(&a, KeyKind::Labeled).unwrap(),
            state_key(&b, KeyKind::Labeled).unwrap()
        );
    }

    #[test]
    fn empirical_distribution_slicing_and_validation() {
        let prism = topology::prism();
        let k33 = topology::complete_bipartite_3_3();
        let snaps = vec![prism.clone(), k33.clone(), prism.clone(), k33.clone()];
        let hist = empirical_distribution(&snaps, 0, 1, KeyKind::Labeled).unwrap();
        assert_eq!(hist.total(), 4);
        assert_eq!(hist.support(), 2);
        // burn_in 1, stride 2 selects indices 1 and 3.
        let hist = empirical_distribution(&snaps, 1, 2, KeyKind::Labeled).unwrap();
        assert_eq!(hist.total(), 2);
        assert_eq!(hist.support(), 1);
        assert_eq!(hist.count(&state_key(&k33, KeyKind::Labeled).unwrap()), 2);

        // Degenerate single snapshot.
        let hist = empirical_distribution(&snaps[..1], 0, 1, KeyKind::Labeled).unwrap();
        assert_eq!(hist.total(), 1);

        assert!(matches!(
            empirical_distribution(&snaps, 4, 1, KeyKind::Labeled),
            Err(OracleError::NoSamples { .. })
        ));
        assert!(matches!(
            empirical_distribution(&snaps, 0, 0, KeyKind::Labeled),
            Err(OracleError::ZeroStride)
        ));
        let irregular = vec![topology::star(4)];
        assert!(matches!(
            empirical_distribution(&irregular, 0, 1, KeyKind::Labeled),
            Err(OracleError::NotRegular { .. })
        ));
        let mixed = vec![topology::cycle(6), prism];
        assert!(matches!(
            empirical_distribution(&mixed, 0, 1, KeyKind::Labeled),
            Err(OracleError::MixedEdgeCounts { .. })
        ));
    }

    #[test]
    fn chi_square_identities() {
        let keys: Vec<StateKey> = enumerate_labeled_regular(4, 2, true)
            .unwrap()
            .into_iter()
            .map(StateKey::Labeled)
            .collect();
        assert_eq!(keys.len(), 3);

        // Perfectly uniform counts give statistic zero.
        let mut hist = Histogram::default();
        for key in &keys {
            for _ in 0..10 {
                hist.record(key.clone());
            }
        }
        let t = chi_square_uniform(&hist, &keys).unwrap();
        assert_eq!(t.dof, 2);
        assert!(t.statistic.abs() < 1e-12);

        // Total mass in one bucket gives total * (B - 1).
        let mut hist = Histogram::default();
        for _ in 0..30 {
            hist.record(keys[0].clone());
        }
        let t = chi_square_uniform(&hist, &keys).unwrap();
        assert!((t.statistic - 60.0).abs() < 1e-9);

        // Guards.
        let mut small = Histogram::default();
        small.record(keys[0].clone());
        assert!(matches!(
            chi_square_uniform(&small, &keys),
            Err(OracleError::InsufficientSamples { .. })
        ));
        let mut alien = Histogram::default();
        let prism_key = state_key(&topology::prism(), KeyKind::Labeled).unwrap();
        for _ in 0..40 {
            alien.record(prism_key.clone());
        }
        assert!(matches!(
            chi_square_uniform(&alien, &keys),
            Err(OracleError::UnexpectedState)
        ));
        assert!(matches!(
            chi_square_uniform(&hist, &[]),
            Err(OracleError::NoBuckets)
        ));
    }

    #[test]
    fn chi_square_quantiles_are_sane() {
        assert!((chi_square_quantile(1, 0.95) - 3.841458820694124).abs() < 1e-6);
        // Wilson-Hilferty puts the 0.999 quantile at 69 dof near 111.
        let q = chi_square_quantile(69, 0.999);
        assert!((110.0..112.5).contains(&q), "q = {q}");
        assert!(chi_square_quantile(69, 0.99) < q);
        assert!(chi_square_quantile(120, 0.999) > q);
    }

    #[test]
    fn scripted_draws_replay_and_guard() {
        let mut s = ScriptedDraws::new([0.25, 0.75], [2, 0]);
        assert_eq!(s.unit(), 0.25);
        assert_eq!(s.index(3), 2);
        assert_eq!(s.unit(), 0.75);
        assert_eq!(s.index(1), 0);
        assert!(s.exhausted());
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn scripted_index_out_of_range_panics() {
        let mut s = ScriptedDraws::new([], [5]);
        s.index(3);
    }

    #[test]
    fn decomposition_finds_r2_and_r4_witnesses() {
        let prism = topology::prism();

        // Same state: empty decomposition.
        assert_eq!(one_step_decomposition(&prism, &prism), Some(vec![]));

        // One r2 apart.
        let mut swapped = prism.clone();
        apply_r2(&mut swapped, nid(0), nid(1), nid(3), nid(4)).unwrap();
        let witness = one_step_decomposition(&prism, &swapped).unwrap();
        assert_eq!(witness.len(), 1);
        assert_eq!(witness[0].rule, RuleKind::R2);
        // And back.
        assert!(one_step_decomposition(&swapped, &prism).is_some());

        // One r4 apart.
        let mut flagged = prism.clone();
        flagged.set_flag(nid(0), 1).unwrap();
        let mut other = flagged.clone();
        apply_r4(&mut other, nid(0), nid(1)).unwrap();
        let witness = one_step_decomposition(&flagged, &other).unwrap();
        assert_eq!(witness.len(), 1);
        assert_eq!(witness[0].rule, RuleKind::R4);

        // Flag moved between non-adjacent nodes: no witness.
        let mut teleported = flagged.clone();
        teleported.set_flag(nid(0), 0).unwrap();
        teleported.set_flag(nid(4), 1).unwrap();
        assert!(one_step_decomposition(&flagged, &teleported).is_none());

        // Prism and K33 are not one swap apart.
        assert!(one_step_decomposition(&prism, &topology::complete_bipartite_3_3()).is_none());
    }

    #[test]
    fn decomposition_handles_two_disjoint_swaps() {
        // Two r2 instances on disjoint participants in an 8-cycle.
        let mut g = topology::cycle(8);
        g.add_edge(nid(0), nid(4)).unwrap();
        let mut target = g.clone();
        apply_r2(&mut target, nid(0), nid(1), nid(7), nid(2)).unwrap();
        apply_r2(&mut target, nid(4), nid(5), nid(3), nid(6)).unwrap();
        let witness = one_step_decomposition(&g, &target).unwrap();
        assert_eq!(witness.len(), 2);
        assert!(witness.iter().all(|a| a.rule == RuleKind::R2));
    }

    #[test]
    fn symmetry_estimator_smoke() {
        let mut from = topology::prism();
        from.set_flag(nid(0), 1).unwrap();
        let mut to = from.clone();
        apply_r4(&mut to, nid(0), nid(1)).unwrap();
        let config = ExperimentConfig::new(6, GrammarVariant::PhiStar, 0.2, 0.1, 11);
        let est = estimate_transition_symmetry(&from, &to, 40_000, &config).unwrap();
        assert!(est.hits_forward > 0, "r4 flips should occur in 40k trials");
        assert!(est.hits_backward > 0);
        assert!(est.symmetric_within(6.0), "gross asymmetry: {est:?}");

        // Non-regular endpoints are rejected.
        let star = topology::star(6);
        assert!(matches!(
            estimate_transition_symmetry(&star, &star, 10, &config),
            Err(OracleError::BadEndpoints(_))
        ));
        // Two swaps apart is rejected.
        assert!(matches!(
            estimate_transition_symmetry(
                &topology::prism(),
                &topology::complete_bipartite_3_3(),
                10,
                &config
            ),
            Err(OracleError::NotOneStepReachable)
        ));
    }
}
