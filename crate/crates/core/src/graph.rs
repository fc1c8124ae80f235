//! Flagged undirected simple graphs and their plain-text exchange format.
//!
//! A [`LabeledGraph`] is a simple undirected graph on nodes `0..n` together
//! with one binary flag per node. The flag vector is bookkeeping state for
//! the edge-adding grammar rules; structural queries ignore it. Adjacency
//! lists are kept sorted ascending, which gives every traversal and every
//! serialization a single canonical order.
//!
//! # Edge-list format
//!
//! ```text
//! n m
//! i j        (m lines, i < j, ASCII decimal)
//! w
//! w_0 w_1 ... w_{n-1}
//! ```
//!
//! Every line is newline-terminated. The `w` sentinel line and the flag line
//! may be omitted, in which case all flags default to zero. Writers emit
//! edges in ascending `(i, j)` order, so equal graphs serialize to equal
//! bytes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected edge with endpoints stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    /// Builds the edge `{i, j}`. Panics if `i == j`; self-loops are never
    /// representable.
    pub fn new(i: NodeId, j: NodeId) -> Edge {
        assert!(i != j, "self-loop {i}");
        if i < j {
            Edge { a: i, b: j }
        } else {
            Edge { a: j, b: i }
        }
    }

    /// The smaller endpoint.
    pub const fn a(self) -> NodeId {
        self.a
    }

    /// The larger endpoint.
    pub const fn b(self) -> NodeId {
        self.b
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Exact average degree `2|E| / n`, kept as an integer pair so regularity
/// checks never touch floating point.
#[derive(Debug, Clone, Copy)]
pub struct AverageDegree {
    twice_edges: usize,
    nodes: usize,
}

impl AverageDegree {
    pub fn new(twice_edges: usize, nodes: usize) -> AverageDegree {
        assert!(nodes > 0);
        AverageDegree { twice_edges, nodes }
    }

    pub fn to_f64(self) -> f64 {
        self.twice_edges as f64 / self.nodes as f64
    }

    pub fn is_integer(self) -> bool {
        self.twice_edges.is_multiple_of(self.nodes)
    }

    /// `Some(k)` iff the average degree is exactly the integer `k`.
    pub fn as_integer(self) -> Option<usize> {
        self.is_integer().then(|| self.twice_edges / self.nodes)
    }
}

impl PartialEq for AverageDegree {
    fn eq(&self, other: &AverageDegree) -> bool {
        // Cross-multiplied so 27/10 == 270/100.
        self.twice_edges as u128 * other.nodes as u128
            == other.twice_edges as u128 * self.nodes as u128
    }
}

impl Eq for AverageDegree {}

impl fmt::Display for AverageDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {id} out of range for graph on {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("self-loop at node {id} rejected")]
    SelfLoop { id: usize },
    #[error("edge ({i}, {j}) already present")]
    DuplicateEdge { i: usize, j: usize },
    #[error("edge ({i}, {j}) not present")]
    MissingEdge { i: usize, j: usize },
    #[error("flag value {value} for node {id} not in {{0, 1}}")]
    BadFlag { id: usize, value: u8 },
}

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Simple undirected graph with a binary flag per node.
///
/// Mutations keep three invariants: adjacency lists stay sorted ascending,
/// edges are stored symmetrically, and no self-loops or parallel edges ever
/// exist. Query methods panic on out-of-range nodes; mutators return
/// [`GraphError`] instead so rule engines can surface violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    adj: Vec<Vec<NodeId>>,
    flags: Vec<u8>,
    edge_count: usize,
    flag_sum: usize,
}

impl LabeledGraph {
    /// Edgeless graph on `n` nodes with all flags zero.
    pub fn new(n: usize) -> LabeledGraph {
        assert!(n > 0, "graph needs at least one node");
        assert!(n <= u32::MAX as usize);
        LabeledGraph {
            adj: vec![Vec::new(); n],
            flags: vec![0; n],
            edge_count: 0,
            flag_sum: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<LabeledGraph, GraphError> {
        let mut g = LabeledGraph::new(n);
        for &(i, j) in edges {
            g.add_edge_ix(i, j)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.adj.len() as u32).map(NodeId)
    }

    /// Neighbors of `i`, sorted ascending.
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.adj[i.index()]
    }

    pub fn degree(&self, i: NodeId) -> usize {
        self.adj[i.index()].len()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        i != j && self.adj[i.index()].binary_search(&j).is_ok()
    }

    pub fn add_edge(&mut self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        self.add_edge_ix(i.index(), j.index())
    }

    fn add_edge_ix(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        let n = self.node_count();
        for id in [i, j] {
            if id >= n {
                return Err(GraphError::NodeOutOfRange { id, n });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop { id: i });
        }
        let (i, j) = (NodeId(i as u32), NodeId(j as u32));
        match self.adj[i.index()].binary_search(&j) {
            Ok(_) => Err(GraphError::DuplicateEdge {
                i: i.index().min(j.index()),
                j: i.index().max(j.index()),
            }),
            Err(pos) => {
                self.adj[i.index()].insert(pos, j);
                let pos = self.adj[j.index()].binary_search(&i).unwrap_err();
                self.adj[j.index()].insert(pos, i);
                self.edge_count += 1;
                Ok(())
            }
        }
    }

    pub fn remove_edge(&mut self, i: NodeId, j: NodeId) -> Result<(), GraphError> {
        let n = self.node_count();
        for id in [i.index(), j.index()] {
            if id >= n {
                return Err(GraphError::NodeOutOfRange { id, n });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop { id: i.index() });
        }
        match self.adj[i.index()].binary_search(&j) {
            Err(_) => Err(GraphError::MissingEdge {
                i: i.index().min(j.index()),
                j: i.index().max(j.index()),
            }),
            Ok(pos) => {
                self.adj[i.index()].remove(pos);
                let pos = self.adj[j.index()].binary_search(&i).unwrap();
                self.adj[j.index()].remove(pos);
                self.edge_count -= 1;
                Ok(())
            }
        }
    }

    /// Edges in ascending `(a, b)` order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, nbrs)| {
            let i = NodeId(i as u32);
            nbrs.iter()
                .filter(move |&&j| j > i)
                .map(move |&j| Edge::new(i, j))
        })
    }

    pub fn flag(&self, i: NodeId) -> u8 {
        self.flags[i.index()]
    }

    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    pub fn set_flag(&mut self, i: NodeId, value: u8) -> Result<(), GraphError> {
        if i.index() >= self.node_count() {
            return Err(GraphError::NodeOutOfRange {
                id: i.index(),
                n: self.node_count(),
            });
        }
        if value > 1 {
            return Err(GraphError::BadFlag {
                id: i.index(),
                value,
            });
        }
        let old = self.flags[i.index()];
        self.flag_sum = self.flag_sum - old as usize + value as usize;
        self.flags[i.index()] = value;
        Ok(())
    }

    pub fn swap_flags(&mut self, i: NodeId, j: NodeId) {
        self.flags.swap(i.index(), j.index());
    }

    pub fn flag_sum(&self) -> usize {
        self.flag_sum
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::with_capacity(n);
        seen[0] = true;
        queue.push_back(NodeId(0));
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap()
    }

    /// `f(G) = max degree - min degree`; zero exactly on regular graphs.
    pub fn degree_range(&self) -> usize {
        self.max_degree() - self.min_degree()
    }

    /// Exact `2|E| / n`.
    pub fn average_degree(&self) -> AverageDegree {
        AverageDegree::new(2 * self.edge_count, self.node_count())
    }

    /// Serializes to the edge-list format described in the module docs.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.node_count(), self.edge_count));
        for e in self.edges() {
            out.push_str(&format!("{} {}\n", e.a(), e.b()));
        }
        out.push_str("w\n");
        let flags: Vec<String> = self.flags.iter().map(u8::to_string).collect();
        out.push_str(&flags.join(" "));
        out.push('\n');
        out
    }

    /// Parses the edge-list format. The flag section is optional.
    pub fn parse_edge_list(text: &str) -> Result<LabeledGraph, EdgeListError> {
        fn malformed(line: usize, msg: impl Into<String>) -> EdgeListError {
            EdgeListError::Malformed {
                line,
                msg: msg.into(),
            }
        }
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| malformed(1, "empty input, expected \"n m\" header"))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed(1, "expected node count"))?;
        let m: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed(1, "expected edge count"))?;
        if parts.next().is_some() {
            return Err(malformed(1, "trailing tokens after \"n m\" header"));
        }
        if n == 0 {
            return Err(malformed(1, "graph needs at least one node"));
        }
        let mut g = LabeledGraph::new(n);
        for _ in 0..m {
            let (ix, line) = lines
                .next()
                .ok_or_else(|| malformed(m + 1, format!("expected {m} edge lines")))?;
            let mut parts = line.split_whitespace();
            let i: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(ix + 1, "expected edge endpoint"))?;
            let j: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(ix + 1, "expected edge endpoint"))?;
            if parts.next().is_some() {
                return Err(malformed(ix + 1, "trailing tokens after edge"));
            }
            if i >= j {
                return Err(malformed(ix + 1, format!("expected i < j, got {i} {j}")));
            }
            g.add_edge_ix(i, j)?;
        }
        match lines.next() {
            None => Ok(g),
            Some((ix, sentinel)) => {
                if sentinel.trim() != "w" {
                    return Err(malformed(ix + 1, "expected \"w\" sentinel line"));
                }
                let (ix, line) = lines
                    .next()
                    .ok_or_else(|| malformed(ix + 2, "expected flag line after sentinel"))?;
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.len() != n {
                    return Err(malformed(
                        ix + 1,
                        format!("expected {n} flags, got {}", tokens.len()),
                    ));
                }
                for (node, token) in tokens.iter().enumerate() {
                    let value: u8 = token
                        .parse()
                        .map_err(|_| malformed(ix + 1, format!("bad flag {token:?}")))?;
                    g.set_flag(NodeId(node as u32), value)?;
                }
                if let Some((ix, line)) = lines.next() {
                    if !line.trim().is_empty() {
                        return Err(malformed(ix + 1, "trailing content after flag line"));
                    }
                }
                Ok(g)
            }
        }
    }

    /// Graphviz rendering; flagged nodes are filled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph g {\n");
        for i in self.nodes() {
            if self.flag(i) == 1 {
                out.push_str(&format!("  {i} [style=filled];\n"));
            } else {
                out.push_str(&format!("  {i};\n"));
            }
        }
        for e in self.edges() {
            out.push_str(&format!("  {} -- {};\n", e.a(), e.b()));
        }
        out.push_str("}\n");
        out
    }
}
