//! Undirected connectivity graphs, hop distances, and qubit placements.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const TOKYO: &str = include_str!("../data/tokyo.edges");
const RUESCHLIKON: &str = include_str!("../data/rueschlikon.edges");
const ACORN: &str = include_str!("../data/acorn.edges");

/// How to build an [`Architecture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    Grid(usize, usize),
    Tokyo,
    Rueschlikon,
    Acorn,
    EdgeList(std::path::PathBuf),
}

impl FromStr for TopologySpec {
    type Err = Error;

    /// Accepts `grid:MxN`, `grid(M,N)`, `tokyo`, `rueschlikon`, `acorn`, and
    /// `file:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(TopologySpec::EdgeList(path.into()));
        }
        let dims = s
            .strip_prefix("grid:")
            .map(|d| d.split_once('x'))
            .or_else(|| s.strip_prefix("grid(").and_then(|d| d.strip_suffix(')')).map(|d| d.split_once(',')));
        if let Some(dims) = dims {
            let (m, n) = dims.ok_or_else(|| Error::input(format!("bad grid spec '{s}'")))?;
            let parse =
                |v: &str| v.trim().parse::<usize>().map_err(|_| Error::input(format!("bad grid spec '{s}'")));
            return Ok(TopologySpec::Grid(parse(m)?, parse(n)?));
        }
        match s.to_ascii_lowercase().as_str() {
            "tokyo" => Ok(TopologySpec::Tokyo),
            "rueschlikon" | "ruschlikon" => Ok(TopologySpec::Rueschlikon),
            "acorn" => Ok(TopologySpec::Acorn),
            _ => Err(Error::input(format!("unknown topology '{s}'"))),
        }
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Grid(m, n) => write!(f, "grid:{m}x{n}"),
            TopologySpec::Tokyo => f.write_str("tokyo"),
            TopologySpec::Rueschlikon => f.write_str("rueschlikon"),
            TopologySpec::Acorn => f.write_str("acorn"),
            TopologySpec::EdgeList(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// A connected undirected coupling graph with precomputed hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    id: String,
    n_nodes: usize,
    /// Sorted, each with `a < b`. The position in this list is the edge id.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    /// Row-major `n_nodes * n_nodes` hop distances.
    dist: Vec<u32>,
    diameter: usize,
    max_degree: usize,
}

impl Architecture {
    /// Builds and validates a graph; fails if it is disconnected.
    pub fn new(id: impl Into<String>, n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::input("an architecture needs at least two nodes"));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::input(format!("edge ({a},{b}) out of range for {n_nodes} nodes")));
            }
            if a == b {
                return Err(Error::input(format!("self-loop on node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n_nodes];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let (dist, diameter) = all_pairs_distances(n_nodes, &edges)?;
        let max_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            id: id.into(),
            n_nodes,
            edges,
            neighbors,
            dist: dist.into_iter().flatten().collect(),
            diameter,
            max_degree,
        })
    }

    pub fn build(spec: &TopologySpec) -> Result<Self> {
        match spec {
            TopologySpec::Grid(m, n) => Self::grid(*m, *n),
            TopologySpec::Tokyo => Self::from_edge_list(&spec.to_string(), TOKYO),
            TopologySpec::Rueschlikon => Self::from_edge_list(&spec.to_string(), RUESCHLIKON),
            TopologySpec::Acorn => Self::from_edge_list(&spec.to_string(), ACORN),
            TopologySpec::EdgeList(path) => Self::from_file(path),
        }
    }

    /// An `m x n` lattice with 4-neighbour links; node `r * n + c`.
    pub fn grid(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 || m * n < 2 {
            return Err(Error::input(format!("grid {m}x{n} needs at least two nodes")));
        }
        let mut edges = Vec::new();
        for r in 0..m {
            for c in 0..n {
                let v = r * n + c;
                if c + 1 < n {
                    edges.push((v, v + 1));
                }
                if r + 1 < m {
                    edges.push((v, v + n));
                }
            }
        }
        Self::new(format!("grid:{m}x{n}"), m * n, &edges)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list(&format!("file:{}", path.display()), &text)
    }

    /// Parses the edge-list format: `nodes N` header, then `i j` per line.
    pub fn from_edge_list(id: &str, text: &str) -> Result<Self> {
        let mut n_nodes = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let num = |w: &str| {
                w.parse::<usize>().map_err(|e| Error::parse(line_no, format!("bad number '{w}': {e}")))
            };
            match words[..] {
                ["nodes", n] if n_nodes.is_none() => n_nodes = Some(num(n)?),
                [a, b] if n_nodes.is_some() => edges.push((num(a)?, num(b)?)),
                _ => return Err(Error::parse(line_no, "expected 'nodes N' then 'i j' lines")),
            }
        }
        let n = n_nodes.ok_or_else(|| Error::parse(0, "missing 'nodes N' header"))?;
        Self::new(id, n, &edges)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> usize {
        self.dist[a * self.n_nodes + b] as usize
    }

    #[inline]
    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.dist(a, b) == 1
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Length of a single state's feature vector on this graph.
    pub fn state_feature_len(&self) -> usize {
        self.diameter + self.max_degree + 1
    }

    /// Uniformly random bijection; nodes beyond `n_qubits` hold idle padding
    /// qubits with ids `n_qubits..n_nodes`.
    pub fn random_placement<R: Rng + ?Sized>(&self, n_qubits: usize, rng: &mut R) -> Result<Placement> {
        if n_qubits > self.n_nodes {
            return Err(Error::Capacity { qubits: n_qubits, nodes: self.n_nodes });
        }
        let mut node_to_qubit: Vec<usize> = (0..self.n_nodes).collect();
        node_to_qubit.shuffle(rng);
        Placement::from_node_to_qubit(node_to_qubit)
    }
}

/// Breadth-first hop distances from every node. Returns the matrix and the
/// diameter, or an error naming an unreachable pair.
pub fn all_pairs_distances(n_nodes: usize, edges: &[(usize, usize)]) -> Result<(Vec<Vec<u32>>, usize)> {
    let mut adj = vec![Vec::new(); n_nodes];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![vec![u32::MAX; n_nodes]; n_nodes];
    let mut queue = VecDeque::new();
    for (src, row) in dist.iter_mut().enumerate() {
        row[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if row[w] == u32::MAX {
                    row[w] = row[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if let Some(unreached) = row.iter().position(|&d| d == u32::MAX) {
            return Err(Error::input(format!(
                "graph is disconnected: node {unreached} unreachable from node {src}"
            )));
        }
    }
    let diameter = dist.iter().flatten().copied().max().unwrap_or(0) as usize;
    Ok((dist, diameter))
}

/// A total bijection between nodes and qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    node_to_qubit: Vec<usize>,
    qubit_to_node: Vec<usize>,
}

impl Placement {
    pub fn identity(n: usize) -> Self {
        Self { node_to_qubit: (0..n).collect(), qubit_to_node: (0..n).collect() }
    }

    pub fn from_node_to_qubit(node_to_qubit: Vec<usize>) -> Result<Self> {
        let n = node_to_qubit.len();
        let mut qubit_to_node = vec![usize::MAX; n];
        for (node, &q) in node_to_qubit.iter().enumerate() {
            if q >= n || qubit_to_node[q] != usize::MAX {
                return Err(Error::input(format!(
                    "placement is not a bijection over {n} entries (qubit {q})"
                )));
            }
            qubit_to_node[q] = node;
        }
        Ok(Self { node_to_qubit, qubit_to_node })
    }

    /// Places the given `(qubit, node)` pairs and fills the remaining nodes
    /// with the remaining qubit ids in ascending order.
    pub fn from_assignments(n_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut node_to_qubit = vec![usize::MAX; n_nodes];
        let mut used = vec![false; n_nodes];
        for &(q, node) in pairs {
            if q >= n_nodes || node >= n_nodes {
                return Err(Error::input(format!(
                    "assignment q{q} -> n{node} out of range for {n_nodes} nodes"
                )));
            }
            if used[q] || node_to_qubit[node] != usize::MAX {
                return Err(Error::input(format!("assignment q{q} -> n{node} conflicts")));
            }
            used[q] = true;
            node_to_qubit[node] = q;
        }
        let mut free = (0..n_nodes).filter(|&q| !used[q]);
        for slot in node_to_qubit.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = free.next().expect("counts match");
        }
        Self::from_node_to_qubit(node_to_qubit)
    }

    pub fn len(&self) -> usize {
        self.node_to_qubit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_to_qubit.is_empty()
    }

    #[inline]
    pub fn node_of(&self, qubit: usize) -> usize {
        self.qubit_to_node[qubit]
    }

    #[inline]
    pub fn qubit_at(&self, node: usize) -> usize {
        self.node_to_qubit[node]
    }

    pub fn node_to_qubit(&self) -> &[usize] {
        &self.node_to_qubit
    }

    pub fn qubit_to_node(&self) -> &[usize] {
        &self.qubit_to_node
    }

    /// Exchanges the qubits held by two nodes.
    #[inline]
    pub fn swap_nodes(&mut self, a: usize, b: usize) {
        let (qa, qb) = (self.node_to_qubit[a], self.node_to_qubit[b]);
        self.node_to_qubit.swap(a, b);
        self.qubit_to_node[qa] = b;
        self.qubit_to_node[qb] = a;
    }
}
