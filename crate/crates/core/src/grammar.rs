//! The local rewrite rules and the grammar variants built from them.
//!
//! All rules act on a matched pair `(i, j)` of adjacent nodes oriented so
//! that `d_i >= d_j`, plus up to two follower nodes `h` and `f` drawn from
//! the pickers of `i` and `j`. Each rule touches only edges incident to its
//! participants, so disjoint instances commute and a whole round can be
//! committed against the pre-round snapshot.
//!
//! * `r1` moves or creates an edge toward the lower-degree endpoint: either
//!   rewire `(i, h)` to `(j, h)`, or keep `(i, h)` and add `(j, h)` while
//!   raising the flag of `i`.
//! * `r2` swaps followers across the pair: `(i, h), (j, f)` become
//!   `(i, f), (j, h)`. Degrees are untouched.
//! * `r3` deletes `(i, h)` when `(i, j, h)` forms a triangle and the flag of
//!   `i` is set, paying back one previously added edge.
//! * `r4` swaps the flags of `i` and `j`.
//!
//! Applicability predicates are pure and total: they return `false` on
//! degenerate input (repeated participants) and panic only on out-of-range
//! nodes, like every other graph query. The `apply_*` functions re-validate
//! and return [`GrammarError`] when a precondition fails, leaving the graph
//! untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{LabeledGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    R1,
    R2,
    R3,
    R4,
}

/// Which rule set a run draws from.
///
/// `PhiR` rebalances degrees only, `PhiRR` adds the degree-preserving swap
/// `r2`, and `PhiStar` adds the edge-count moves `r1`-add / `r3` plus the
/// flag swap `r4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrammarVariant {
    #[serde(rename = "phi-r")]
    PhiR,
    #[serde(rename = "phi-rr")]
    PhiRR,
    #[serde(rename = "phi-star")]
    PhiStar,
}

impl GrammarVariant {
    /// The rules a matched pair draws from, in fixed order. The draw index
    /// into this slice is part of the documented randomness schedule.
    pub fn rules(self) -> &'static [RuleKind] {
        match self {
            GrammarVariant::PhiR => &[RuleKind::R1],
            GrammarVariant::PhiRR => &[RuleKind::R1, RuleKind::R2],
            GrammarVariant::PhiStar => &[RuleKind::R1, RuleKind::R2, RuleKind::R3, RuleKind::R4],
        }
    }

    /// Only `PhiStar` can change the edge count (and with it the flags).
    pub fn edge_count_can_change(self) -> bool {
        self == GrammarVariant::PhiStar
    }
}

impl std::fmt::Display for GrammarVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GrammarVariant::PhiR => "phi-r",
            GrammarVariant::PhiRR => "phi-rr",
            GrammarVariant::PhiStar => "phi-star",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for GrammarVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<GrammarVariant, String> {
        match s {
            "phi-r" => Ok(GrammarVariant::PhiR),
            "phi-rr" => Ok(GrammarVariant::PhiRR),
            "phi-star" => Ok(GrammarVariant::PhiStar),
            other => Err(format!(
                "unknown grammar {other:?}, expected phi-r, phi-rr or phi-star"
            )),
        }
    }
}

/// What a decided rule instance does to the graph when committed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    /// `r1`: replace `(i, h)` with `(j, h)`.
    Rewire,
    /// `r1`: add `(j, h)`, keep `(i, h)`, set the flag of `i`.
    AddEdge,
    /// `r2`: replace `(i, h), (j, f)` with `(i, f), (j, h)`.
    SwapNeighbors,
    /// `r3`: remove `(i, h)`, clear the flag of `i`.
    RemoveEdge,
    /// `r4`: exchange the flags of `i` and `j`.
    SwapFlags,
    /// Guard or inner condition failed; the graph is untouched.
    NoOp,
}

/// One decided rule instance for a matched pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: RuleKind,
    pub i: NodeId,
    pub j: NodeId,
    pub h: Option<NodeId>,
    pub f: Option<NodeId>,
    pub effect: Effect,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{rule:?} not applicable at i={i} j={j}: {reason}")]
    NotApplicable {
        rule: RuleKind,
        i: NodeId,
        j: NodeId,
        reason: &'static str,
    },
}

fn distinct(nodes: &[NodeId]) -> bool {
    nodes
        .iter()
        .enumerate()
        .all(|(k, a)| nodes[k + 1..].iter().all(|b| a != b))
}

/// `r1` precondition: `i, j, h` distinct, `(i, j)` and `(i, h)` edges, and
/// `d_i > d_j` strictly.
pub fn r1_applicable(g: &LabeledGraph, i: NodeId, j: NodeId, h: NodeId) -> bool {
    distinct(&[i, j, h]) && g.has_edge(i, j) && g.has_edge(i, h) && g.degree(i) > g.degree(j)
}

/// Moves the follower edge: `(i, h)` becomes `(j, h)`. Additionally requires
/// `(j, h)` absent, otherwise the move would create a parallel edge.
pub fn apply_r1_rewire(
    g: &mut LabeledGraph,
    i: NodeId,
    j: NodeId,
    h: NodeId,
) -> Result<(), GrammarError> {
    let fail = |reason| GrammarError::NotApplicable {
        rule: RuleKind::R1,
        i,
        j,
        reason,
    };
    if !r1_applicable(g, i, j, h) {
        return Err(fail(
            "pair/follower structure missing or degrees not d_i > d_j",
        ));
    }
    if g.has_edge(j, h) {
        return Err(fail("(j, h) already present"));
    }
    g.remove_edge(i, h).expect("checked edge");
    g.add_edge(j, h).expect("checked non-edge");
    Ok(())
}

/// Adds `(j, h)` while keeping `(i, h)`, and sets the flag of `i` to record
/// the extra edge. Requires the flag of `i` to be clear.
pub fn apply_r1_add(
    g: &mut LabeledGraph,
    i: NodeId,
    j: NodeId,
    h: NodeId,
) -> Result<(), GrammarError> {
    let fail = |reason| GrammarError::NotApplicable {
        rule: RuleKind::R1,
        i,
        j,
        reason,
    };
    if !r1_applicable(g, i, j, h) {
        return Err(fail(
            "pair/follower structure missing or degrees not d_i > d_j",
        ));
    }
    if g.has_edge(j, h) {
        return Err(fail("(j, h) already present"));
    }
    if g.flag(i) != 0 {
        return Err(fail("flag of i already set"));
    }
    g.add_edge(j, h).expect("checked non-edge");
    g.set_flag(i, 1).expect("checked flag");
    Ok(())
}

/// `r2` precondition: `i, j, h, f` distinct, `(i, j), (i, h), (j, f)` edges,
/// `(j, h)` and `(i, f)` non-edges.
pub fn r2_applicable(g: &LabeledGraph, i: NodeId, j: NodeId, h: NodeId, f: NodeId) -> bool {
    distinct(&[i, j, h, f])
        && g.has_edge(i, j)
        && g.has_edge(i, h)
        && g.has_edge(j, f)
        && !g.has_edge(j, h)
        && !g.has_edge(i, f)
}

/// Swaps the followers: `(i, h), (j, f)` become `(i, f), (j, h)`.
pub fn apply_r2(
    g: &mut LabeledGraph,
    i: NodeId,
    j: NodeId,
    h: NodeId,
    f: NodeId,
) -> Result<(), GrammarError> {
    if !r2_applicable(g, i, j, h, f) {
        return Err(GrammarError::NotApplicable {
            rule: RuleKind::R2,
            i,
            j,
            reason: "swap structure missing",
        });
    }
    g.remove_edge(i, h).expect("checked edge");
    g.remove_edge(j, f).expect("checked edge");
    g.add_edge(i, f).expect("checked non-edge");
    g.add_edge(j, h).expect("checked non-edge");
    Ok(())
}

/// `r3` precondition: `i, j, h` distinct, triangle `(i, j), (i, h), (j, h)`
/// present, `d_i > d_j`, and the flag of `i` set.
pub fn r3_applicable(g: &LabeledGraph, i: NodeId, j: NodeId, h: NodeId) -> bool {
    distinct(&[i, j, h])
        && g.has_edge(i, j)
        && g.has_edge(i, h)
        && g.has_edge(j, h)
        && g.degree(i) > g.degree(j)
        && g.flag(i) == 1
}

/// Removes the triangle edge `(i, h)` and clears the flag of `i`.
pub fn apply_r3(g: &mut LabeledGraph, i: NodeId, j: NodeId, h: NodeId) -> Result<(), GrammarError> {
    if !r3_applicable(g, i, j, h) {
        return Err(GrammarError::NotApplicable {
            rule: RuleKind::R3,
            i,
            j,
            reason: "triangle/degree/flag structure missing",
        });
    }
    g.remove_edge(i, h).expect("checked edge");
    g.set_flag(i, 0).expect("checked flag");
    Ok(())
}

/// Exchanges the flags of the adjacent pair `(i, j)`.
pub fn apply_r4(g: &mut LabeledGraph, i: NodeId, j: NodeId) -> Result<(), GrammarError> {
    if !g.has_edge(i, j) {
        return Err(GrammarError::NotApplicable {
            rule: RuleKind::R4,
            i,
            j,
            reason: "pair not adjacent",
        });
    }
    g.swap_flags(i, j);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology;
    use proptest::prelude::*;

    fn nid(i: usize) -> NodeId {
        NodeId(i as u32)
    }

    /// Star K_{1,3}: center 0 with leaves 1, 2, 3.
    fn star4() -> LabeledGraph {
        LabeledGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    /// Length of a shortest cycle, or None on forests. Test-local helper.
    fn girth(g: &LabeledGraph) -> Option<usize> {
        let n = g.node_count();
        let mut best: Option<usize> = None;
        for start in g.nodes() {
            // BFS recording parents; a non-tree edge closes a cycle.
            let mut dist = vec![usize::MAX; n];
            let mut parent = vec![NodeId(u32::MAX); n];
            dist[start.index()] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if dist[v.index()] == usize::MAX {
                        dist[v.index()] = dist[u.index()] + 1;
                        parent[v.index()] = u;
                        queue.push_back(v);
                    } else if parent[u.index()] != v {
                        let len = dist[u.index()] + dist[v.index()] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn variant_names_agree_across_serde_display_and_parse() {
        for v in [
            GrammarVariant::PhiR,
            GrammarVariant::PhiRR,
            GrammarVariant::PhiStar,
        ] {
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{v}\""));
            assert_eq!(v.to_string().parse::<GrammarVariant>().unwrap(), v);
        }
    }

    #[test]
    fn rule_sets_per_variant() {
        assert_eq!(GrammarVariant::PhiR.rules(), &[RuleKind::R1]);
        assert_eq!(GrammarVariant::PhiRR.rules(), &[RuleKind::R1, RuleKind::R2]);
        assert_eq!(GrammarVariant::PhiStar.rules().len(), 4);
        assert!(GrammarVariant::PhiStar.edge_count_can_change());
        assert!(!GrammarVariant::PhiRR.edge_count_can_change());
    }

    #[test]
    fn r1_rewire_on_star() {
        // Rewiring (0, 2) to (1, 2) on K_{1,3} balances degrees.
        let mut g = star4();
        assert!(r1_applicable(&g, nid(0), nid(1), nid(2)));
        apply_r1_rewire(&mut g, nid(0), nid(1), nid(2)).unwrap();
        assert!(!g.has_edge(nid(0), nid(2)));
        assert!(g.has_edge(nid(1), nid(2)));
        assert_eq!(g.degree(nid(0)), 2);
        assert_eq!(g.degree(nid(1)), 2);
        assert_eq!(g.degree(nid(2)), 1, "follower degree unchanged");
        assert!(g.is_connected());
    }

    #[test]
    fn r1_degree_guard_is_strict() {
        // On C4 all degrees tie, so r1 never fires.
        let g = LabeledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for h in 0..4 {
                    assert!(!r1_applicable(&g, nid(i), nid(j), nid(h)));
                }
            }
        }
    }

    #[test]
    fn r1_add_sets_flag_and_keeps_edge() {
        let mut g = star4();
        apply_r1_add(&mut g, nid(0), nid(1), nid(2)).unwrap();
        assert!(g.has_edge(nid(0), nid(2)), "original follower edge kept");
        assert!(g.has_edge(nid(1), nid(2)));
        assert_eq!(g.flag(nid(0)), 1);
        assert_eq!(g.flag_sum(), 1);
        assert_eq!(g.degree(nid(1)), 2);
        assert_eq!(g.degree(nid(2)), 2);
        assert_eq!(g.degree(nid(0)), 3, "degree of i unchanged by the add");

        // Second add through the same i is blocked by the flag.
        let err = apply_r1_add(&mut g, nid(0), nid(3), nid(1)).unwrap_err();
        assert!(matches!(err, GrammarError::NotApplicable { .. }));
    }

    #[test]
    fn r1_rejects_parallel_edge() {
        // 0 is adjacent to both 1 and 2, and (1, 2) already exists.
        let mut g = LabeledGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        assert!(r1_applicable(&g, nid(0), nid(1), nid(2)));
        assert!(apply_r1_rewire(&mut g, nid(0), nid(1), nid(2)).is_err());
        assert!(apply_r1_add(&mut g, nid(0), nid(1), nid(2)).is_err());
        assert_eq!(g.edge_count(), 4, "failed application left graph untouched");
    }

    #[test]
    fn r2_swap_and_inverse() {
        let mut g = topology::prism();
        let before = g.clone();
        assert!(r2_applicable(&g, nid(0), nid(1), nid(3), nid(4)));
        apply_r2(&mut g, nid(0), nid(1), nid(3), nid(4)).unwrap();
        assert!(g.has_edge(nid(0), nid(4)));
        assert!(g.has_edge(nid(1), nid(3)));
        assert!(!g.has_edge(nid(0), nid(3)));
        assert!(!g.has_edge(nid(1), nid(4)));
        assert_eq!(g.degree_range(), 0, "r2 preserves all degrees");
        assert!(g.is_connected());

        // Reapplying with follower roles exchanged undoes the swap.
        apply_r2(&mut g, nid(0), nid(1), nid(4), nid(3)).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn r2_blocked_by_existing_edges() {
        let g = topology::prism();
        // (1, 2) is an edge, so h = 2 cannot move to j = 1.
        assert!(!r2_applicable(&g, nid(0), nid(1), nid(2), nid(4)));
    }

    #[test]
    fn r3_removes_triangle_edge_and_shrinks_shortest_cycle() {
        // C6 plus chord (0, 2): triangle (0, 1, 2) on top of girth 3.
        let mut g =
            LabeledGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (0, 2)])
                .unwrap();
        g.set_flag(nid(0), 1).unwrap();
        assert_eq!(girth(&g), Some(3));
        assert!(r3_applicable(&g, nid(0), nid(1), nid(2)));
        apply_r3(&mut g, nid(0), nid(1), nid(2)).unwrap();
        assert!(!g.has_edge(nid(0), nid(2)));
        assert!(g.has_edge(nid(0), nid(1)), "pair edge intact");
        assert!(g.has_edge(nid(1), nid(2)), "third triangle side intact");
        assert_eq!(g.flag(nid(0)), 0);
        assert!(
            g.is_connected(),
            "removal inside a triangle cannot disconnect"
        );
        assert_eq!(girth(&g), Some(6));
    }

    #[test]
    fn r3_requires_triangle_flag_and_degree() {
        let mut g =
            LabeledGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (0, 2)])
                .unwrap();
        // No flag.
        assert!(!r3_applicable(&g, nid(0), nid(1), nid(2)));
        g.set_flag(nid(0), 1).unwrap();
        // No triangle side (3, 5).
        assert!(!r3_applicable(&g, nid(0), nid(3), nid(5)));
        // Degrees tie between 1 and 2.
        g.set_flag(nid(1), 1).unwrap();
        assert!(!r3_applicable(&g, nid(1), nid(2), nid(0)));
    }

    #[test]
    fn r4_swaps_flags_of_adjacent_pair() {
        let mut g = LabeledGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        g.set_flag(nid(0), 1).unwrap();
        apply_r4(&mut g, nid(0), nid(1)).unwrap();
        assert_eq!(g.flags(), &[0, 1, 0]);
        assert_eq!(g.flag_sum(), 1);
        assert!(
            apply_r4(&mut g, nid(0), nid(2)).is_err(),
            "0 and 2 not adjacent"
        );
    }

    #[test]
    fn rules_never_fire_on_regular_graphs() {
        // With all degrees equal the strict guard blocks r1 and r3 at every
        // triple, regardless of flags.
        for mut g in [topology::prism(), topology::complete_bipartite_3_3()] {
            for i in g.nodes() {
                g.set_flag(i, 1).unwrap();
            }
            for i in 0..6 {
                for j in 0..6 {
                    for h in 0..6 {
                        assert!(!r1_applicable(&g, nid(i), nid(j), nid(h)));
                        assert!(!r3_applicable(&g, nid(i), nid(j), nid(h)));
                    }
                }
            }
        }
    }

    /// Exhaustive check over every connected graph on up to 5 nodes: any
    /// applicable rule instance preserves connectivity and simplicity.
    #[test]
    fn every_application_preserves_connectivity_exhaustive() {
        for n in 2usize..=5 {
            let pairs = n * (n - 1) / 2;
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
                if !g.is_connected() {
                    continue;
                }
                for i in 0..n {
                    g.set_flag(nid(i), (i % 2) as u8).unwrap();
                }
                check_all_instances(&g);
            }
        }
    }

    fn check_all_instances(g: &LabeledGraph) {
        let n = g.node_count();
        let ids: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
        for &i in &ids {
            for &j in &ids {
                for &h in &ids {
                    if r1_applicable(g, i, j, h) && !g.has_edge(j, h) {
                        let mut t = g.clone();
                        apply_r1_rewire(&mut t, i, j, h).unwrap();
                        assert!(t.is_connected(), "r1 rewire disconnected {g:?}");
                        assert_eq!(t.edge_count(), g.edge_count());

                        if g.flag(i) == 0 {
                            let mut t = g.clone();
                            apply_r1_add(&mut t, i, j, h).unwrap();
                            assert!(t.is_connected());
                            assert_eq!(t.edge_count(), g.edge_count() + 1);
                            assert_eq!(t.flag_sum(), g.flag_sum() + 1);
                        }
                    }
                    if r3_applicable(g, i, j, h) {
                        let mut t = g.clone();
                        apply_r3(&mut t, i, j, h).unwrap();
                        assert!(t.is_connected(), "r3 disconnected {g:?}");
                        assert_eq!(t.edge_count(), g.edge_count() - 1);
                        assert_eq!(t.flag_sum(), g.flag_sum() - 1);
                    }
                    for &f in &ids {
                        if r2_applicable(g, i, j, h, f) {
                            let mut t = g.clone();
                            apply_r2(&mut t, i, j, h, f).unwrap();
                            assert!(t.is_connected(), "r2 disconnected {g:?}");
                            assert_eq!(t.edge_count(), g.edge_count());
                            for &x in &ids {
                                assert_eq!(t.degree(x), g.degree(x), "r2 changed a degree");
                            }
                        }
                    }
                }
                if g.has_edge(i, j) {
                    let mut t = g.clone();
                    apply_r4(&mut t, i, j).unwrap();
                    assert_eq!(t.flag_sum(), g.flag_sum());
                    assert_eq!(t.edge_count(), g.edge_count());
                }
            }
        }
    }

    proptest! {
        /// Random connected graphs: every applicable instance keeps the
        /// graph connected and simple.
        #[test]
        fn applications_preserve_connectivity(
            n in 4usize..=9,
            extra in 0usize..=8,
            seed in 0u64..1000,
            flags in 0u16..256,
        ) {
            let max_e = n * (n - 1) / 2;
            let e = (n - 1 + extra).min(max_e);
            let mut g = topology::random_connected(n, e, seed).unwrap();
            for i in 0..n {
                g.set_flag(nid(i), ((flags >> (i % 16)) & 1) as u8).unwrap();
            }
            check_all_instances(&g);
        }
    }
}
