//! Social graph construction.
//!
//! A [`SocialGraph`] stores, for every agent, the sorted list of agents whose
//! consumption it observes. Undirected graphs are symmetric; in directed
//! graphs the list holds out-neighbors only.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::AgentId;
use crate::rng::RandomStream;

/// Which graph to build, with its coordination number where applicable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[non_exhaustive]
pub enum TopologySpec {
    /// Ring lattice, each agent linked to its `k/2` nearest agents on each side.
    RingLattice { k: usize },
    /// Every pair of agents linked.
    Complete,
    /// Erdős–Rényi G(n, p) with p = k/(n−1).
    RandomUndirected { k: usize },
    /// Each agent observes exactly `k` distinct agents chosen uniformly.
    RandomDirected { k: usize },
}

impl TopologySpec {
    pub fn name(&self) -> &'static str {
        match self {
            TopologySpec::RingLattice { .. } => "ring",
            TopologySpec::Complete => "complete",
            TopologySpec::RandomUndirected { .. } => "random",
            TopologySpec::RandomDirected { .. } => "random-directed",
        }
    }

    /// Coordination number, or `None` for the complete graph.
    pub fn coordination(&self) -> Option<usize> {
        match *self {
            TopologySpec::RingLattice { k }
            | TopologySpec::RandomUndirected { k }
            | TopologySpec::RandomDirected { k } => Some(k),
            TopologySpec::Complete => None,
        }
    }

    /// Generative model label written into output metadata.
    pub fn model_label(&self) -> &'static str {
        match self {
            TopologySpec::RingLattice { .. } => "ring-lattice",
            TopologySpec::Complete => "complete",
            TopologySpec::RandomUndirected { .. } => "gnp-mean-degree-k",
            TopologySpec::RandomDirected { .. } => "k-out-uniform",
        }
    }

    /// Whether construction consumes random draws.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            TopologySpec::RandomUndirected { .. } | TopologySpec::RandomDirected { .. }
        )
    }

    /// Builds a topology from its CLI name and coordination number.
    pub fn from_parts(name: &str, k: usize) -> Result<Self> {
        match name {
            "ring" | "ring-lattice" => Ok(TopologySpec::RingLattice { k }),
            "complete" => Ok(TopologySpec::Complete),
            "random" | "random-undirected" => Ok(TopologySpec::RandomUndirected { k }),
            "random-directed" => Ok(TopologySpec::RandomDirected { k }),
            other => Err(Error::InvalidSpec(format!(
                "unknown topology {other:?} (expected ring, complete, random, random-directed)"
            ))),
        }
    }

    /// Checks the spec against a population size.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            TopologySpec::RingLattice { k } => check_ring(n, k),
            TopologySpec::Complete => check_complete(n),
            TopologySpec::RandomUndirected { k } | TopologySpec::RandomDirected { k } => {
                check_random(n, k)
            }
        }
    }

    /// Builds the graph; `rng` is only drawn from by the random kinds.
    pub fn build(&self, n: usize, rng: &mut RandomStream) -> Result<SocialGraph> {
        match *self {
            TopologySpec::RingLattice { k } => build_ring(n, k),
            TopologySpec::Complete => build_complete(n),
            TopologySpec::RandomUndirected { k } => build_random(n, k, false, rng),
            TopologySpec::RandomDirected { k } => build_random(n, k, true, rng),
        }
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coordination() {
            Some(k) => write!(f, "{}(k={})", self.name(), k),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = Error;

    /// Parses `complete`, `ring:4`, `random:10`, `random-directed:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, k) = match s.split_once(':') {
            Some((name, k)) => {
                let k = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpec(format!("bad coordination number in {s:?}")))?;
                (name.trim(), k)
            }
            None => (s.trim(), 0),
        };
        if name != "complete" && !s.contains(':') {
            return Err(Error::InvalidSpec(format!(
                "topology {name:?} needs a coordination number, e.g. {name}:4"
            )));
        }
        TopologySpec::from_parts(name, k)
    }
}

fn check_ring(n: usize, k: usize) -> Result<()> {
    if !k.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!(
            "ring lattice needs an even coordination number, got k={k}"
        )));
    }
    if k < 2 || k + 1 > n {
        return Err(Error::InvalidSpec(format!(
            "ring lattice needs 2 <= k <= N-1, got k={k} with N={n}"
        )));
    }
    Ok(())
}

fn check_complete(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "complete graph needs at least 2 agents, got {n}"
        )));
    }
    Ok(())
}

fn check_random(n: usize, k: usize) -> Result<()> {
    if k < 1 || k + 1 > n {
        return Err(Error::InvalidSpec(format!(
            "random graph needs 1 <= k <= N-1, got k={k} with N={n}"
        )));
    }
    Ok(())
}

/// Adjacency over `n_agents`; `adjacency[i]` lists the agents `i` observes, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: Vec<Vec<usize>>,
    directed: bool,
}

impl SocialGraph {
    /// Builds a graph from explicit neighbor lists.
    ///
    /// Lists are sorted; self-loops, duplicates, out-of-range indices and
    /// (for undirected graphs) asymmetric lists are rejected.
    pub fn from_adjacency(mut adjacency: Vec<Vec<usize>>, directed: bool) -> Result<Self> {
        let n = adjacency.len();
        for (i, row) in adjacency.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSpec(format!("duplicate edge at agent {i}")));
            }
            if let Some(&j) = row.iter().find(|&&j| j == i || j >= n) {
                return Err(Error::InvalidSpec(format!("invalid neighbor {j} of agent {i}")));
            }
        }
        if !directed {
            for (i, row) in adjacency.iter().enumerate() {
                for &j in row {
                    if adjacency[j].binary_search(&i).is_err() {
                        return Err(Error::InvalidSpec(format!(
                            "undirected edge {i}-{j} is not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(SocialGraph { adjacency, directed })
    }

    /// `n` isolated agents.
    pub fn edgeless(n: usize) -> Self {
        SocialGraph {
            adjacency: vec![Vec::new(); n],
            directed: false,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Agents whose consumption `agent` observes, ascending.
    pub fn neighbors(&self, agent: AgentId) -> &[usize] {
        &self.adjacency[agent.index()]
    }

    pub fn degree(&self, agent: AgentId) -> usize {
        self.adjacency[agent.index()].len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adjacency[from].binary_search(&to).is_ok()
    }

    /// Edge count: unordered pairs if undirected, arcs if directed.
    pub fn edge_count(&self) -> usize {
        let arcs: usize = self.adjacency.iter().map(Vec::len).sum();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }

    /// Ascending `(i, j)` pairs; undirected graphs list each pair once with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let directed = self.directed;
        self.adjacency.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .copied()
                .filter(move |&j| directed || i < j)
                .map(move |j| (i, j))
        })
    }

    /// For every agent `j`, the agents that observe `j` (reverse adjacency).
    pub fn observers(&self) -> Vec<Vec<usize>> {
        if !self.directed {
            return self.adjacency.clone();
        }
        let mut rev = vec![Vec::new(); self.n_agents()];
        for (i, row) in self.adjacency.iter().enumerate() {
            for &j in row {
                rev[j].push(i);
            }
        }
        rev
    }

    /// Writes one `i j` line per edge, ascending.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Ring lattice: agent `i` linked to `i±1, …, i±k/2` (mod n).
pub fn build_ring(n: usize, k: usize) -> Result<SocialGraph> {
    check_ring(n, k)?;
    let half = k / 2;
    let adjacency = (0..n)
        .map(|i| {
            let mut row: Vec<usize> = (1..=half)
                .flat_map(|d| [(i + d) % n, (i + n - d) % n])
                .collect();
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();
    Ok(SocialGraph {
        adjacency,
        directed: false,
    })
}

pub fn build_complete(n: usize) -> Result<SocialGraph> {
    check_complete(n)?;
    let adjacency = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    Ok(SocialGraph {
        adjacency,
        directed: false,
    })
}

/// Random graph with mean degree `k`.
///
/// Directed: every agent gets exactly `k` distinct out-neighbors sampled
/// uniformly without replacement, agents visited in ascending order.
/// Undirected: each pair `i < j` (row-major) is linked with probability k/(n−1).
pub fn build_random(n: usize, k: usize, directed: bool, rng: &mut RandomStream) -> Result<SocialGraph> {
    check_random(n, k)?;
    let adjacency = if directed {
        (0..n)
            .map(|i| {
                let mut row: Vec<usize> = index::sample(rng, n - 1, k)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect();
                row.sort_unstable();
                row
            })
            .collect()
    } else {
        let p = k as f64 / (n - 1) as f64;
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        adjacency
    };
    Ok(SocialGraph { adjacency, directed })
}
