//! Seeded generators for starting topologies and the fixed fixtures used
//! throughout the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{LabeledGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    RandomConnected,
    Path,
    Cycle,
    Star,
    Prism,
    CompleteBipartite33,
    Barbell,
}

impl std::str::FromStr for GenKind {
    type Err = String;

    fn from_str(s: &str) -> Result<GenKind, String> {
        match s {
            "random" | "random-connected" => Ok(GenKind::RandomConnected),
            "path" => Ok(GenKind::Path),
            "cycle" => Ok(GenKind::Cycle),
            "star" => Ok(GenKind::Star),
            "prism" => Ok(GenKind::Prism),
            "k33" | "complete-bipartite-33" => Ok(GenKind::CompleteBipartite33),
            "barbell" => Ok(GenKind::Barbell),
            other => Err(format!("unknown topology kind {other:?}")),
        }
    }
}

/// Everything needed to regenerate a starting graph deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    /// Edge count; only meaningful (and required) for `RandomConnected`.
    pub e: Option<usize>,
    /// Generator seed; only consumed by `RandomConnected`.
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("edge count {e} outside [{min}, {max}] for n={n}")]
    EdgeCountOutOfRange {
        n: usize,
        e: usize,
        min: usize,
        max: usize,
    },
    #[error("{kind:?} requires n={want}, got {got}")]
    FixedSize {
        kind: GenKind,
        want: usize,
        got: usize,
    },
    #[error("{kind:?} requires n >= {min}, got {got}")]
    TooSmall {
        kind: GenKind,
        min: usize,
        got: usize,
    },
    #[error("random-connected requires an edge count")]
    MissingEdgeCount,
}

/// Uniform-spanning-tree based generator: an Aldous-Broder random walk on
/// the complete graph lays down a uniformly random spanning tree, then the
/// remaining `e - (n - 1)` edges are drawn uniformly without replacement
/// from the complement. Same `(n, e, seed)` always yields the same graph.
pub fn random_connected(n: usize, e: usize, seed: u64) -> Result<LabeledGraph, TopologyError> {
    assert!(n > 0);
    let max_e = n * (n - 1) / 2;
    if e + 1 < n || e > max_e {
        return Err(TopologyError::EdgeCountOutOfRange {
            n,
            e,
            min: n.saturating_sub(1),
            max: max_e,
        });
    }
    let mut g = LabeledGraph::new(n);
    if n == 1 {
        return Ok(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut visited = vec![false; n];
    let mut current = rng.random_range(0..n);
    visited[current] = true;
    let mut remaining = n - 1;
    while remaining > 0 {
        // Uniform neighbor on K_n: any node other than the current one.
        let r = rng.random_range(0..n - 1);
        let next = r + usize::from(r >= current);
        if !visited[next] {
            visited[next] = true;
            remaining -= 1;
            g.add_edge(NodeId(current as u32), NodeId(next as u32))
                .expect("tree edge is fresh");
        }
        current = next;
    }

    let extra = e - (n - 1);
    if extra > 0 {
        let mut candidates: Vec<(u32, u32)> = Vec::with_capacity(max_e - (n - 1));
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                if !g.has_edge(NodeId(i), NodeId(j)) {
                    candidates.push((i, j));
                }
            }
        }
        // Partial Fisher-Yates: the first `extra` slots become a uniform
        // sample without replacement.
        for k in 0..extra {
            let pick = k + rng.random_range(0..candidates.len() - k);
            candidates.swap(k, pick);
            let (i, j) = candidates[k];
            g.add_edge(NodeId(i), NodeId(j))
                .expect("candidate is a non-edge");
        }
    }
    debug_assert!(g.is_connected());
    Ok(g)
}

pub fn path(n: usize) -> LabeledGraph {
    let mut g = LabeledGraph::new(n);
    for i in 0..n.saturating_sub(1) {
        g.add_edge(NodeId(i as u32), NodeId(i as u32 + 1)).unwrap();
    }
    g
}

pub fn cycle(n: usize) -> LabeledGraph {
    assert!(n >= 3, "cycle needs n >= 3");
    let mut g = path(n);
    g.add_edge(NodeId(0), NodeId(n as u32 - 1)).unwrap();
    g
}

pub fn star(n: usize) -> LabeledGraph {
    assert!(n >= 2, "star needs n >= 2");
    let mut g = LabeledGraph::new(n);
    for i in 1..n {
        g.add_edge(NodeId(0), NodeId(i as u32)).unwrap();
    }
    g
}

/// Triangular prism: two triangles `{0,1,2}`, `{3,4,5}` joined by rungs
/// `(0,3), (1,4), (2,5)`. Cubic on 6 nodes.
pub fn prism() -> LabeledGraph {
    LabeledGraph::from_edges(
        6,
        &[
            (0, 1),
            (1, 2),
            (0, 2),
            (3, 4),
            (4, 5),
            (3, 5),
            (0, 3),
            (1, 4),
            (2, 5),
        ],
    )
    .unwrap()
}

/// K_{3,3} with parts `{0,1,2}` and `{3,4,5}`. Cubic on 6 nodes.
pub fn complete_bipartite_3_3() -> LabeledGraph {
    let mut g = LabeledGraph::new(6);
    for i in 0..3u32 {
        for j in 3..6u32 {
            g.add_edge(NodeId(i), NodeId(j)).unwrap();
        }
    }
    g
}

/// Cubic barbell on 10 nodes: two dense lobes joined by the single bridge
/// `(4, 9)`. The bottleneck makes it the low-alpha fixture.
pub fn barbell() -> LabeledGraph {
    LabeledGraph::from_edges(
        10,
        &[
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (1, 3),
            (2, 4),
            (3, 4),
            (5, 6),
            (5, 7),
            (5, 8),
            (6, 7),
            (6, 8),
            (7, 9),
            (8, 9),
            (4, 9),
        ],
    )
    .unwrap()
}

/// Fixed fixture lookup. `RandomConnected` is not a fixture; use
/// [`random_connected`] or [`generate`].
pub fn fixture(kind: GenKind, n: usize) -> Result<LabeledGraph, TopologyError> {
    match kind {
        GenKind::RandomConnected => Err(TopologyError::MissingEdgeCount),
        GenKind::Path => {
            if n < 1 {
                return Err(TopologyError::TooSmall {
                    kind,
                    min: 1,
                    got: n,
                });
            }
            Ok(path(n))
        }
        GenKind::Cycle => {
            if n < 3 {
                return Err(TopologyError::TooSmall {
                    kind,
                    min: 3,
                    got: n,
                });
            }
            Ok(cycle(n))
        }
        GenKind::Star => {
            if n < 2 {
                return Err(TopologyError::TooSmall {
                    kind,
                    min: 2,
                    got: n,
                });
            }
            Ok(star(n))
        }
        GenKind::Prism => {
            if n != 6 {
                return Err(TopologyError::FixedSize {
                    kind,
                    want: 6,
                    got: n,
                });
            }
            Ok(prism())
        }
        GenKind::CompleteBipartite33 => {
            if n != 6 {
                return Err(TopologyError::FixedSize {
                    kind,
                    want: 6,
                    got: n,
                });
            }
            Ok(complete_bipartite_3_3())
        }
        GenKind::Barbell => {
            if n != 10 {
                return Err(TopologyError::FixedSize {
                    kind,
                    want: 10,
                    got: n,
                });
            }
            Ok(barbell())
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<LabeledGraph, TopologyError> {
    match spec.kind {
        GenKind::RandomConnected => {
            let e = spec.e.ok_or(TopologyError::MissingEdgeCount)?;
            random_connected(spec.n, e, spec.seed)
        }
        kind => fixture(kind, spec.n),
    }
}
