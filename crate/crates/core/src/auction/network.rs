use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AuctionError;
use crate::rng::stream_rng;

/// Named communication graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Complete,
    Ring,
    Line,
    /// Random spanning tree plus extra edges, seeded.
    Random(u64),
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Complete => write!(f, "complete"),
            Topology::Ring => write!(f, "ring"),
            Topology::Line => write!(f, "line"),
            Topology::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "complete" => Ok(Topology::Complete),
            "ring" => Ok(Topology::Ring),
            "line" => Ok(Topology::Line),
            other => match other.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(Topology::Random)
                    .map_err(|_| format!("bad random topology seed in {other:?}")),
                None if other == "random" => Ok(Topology::Random(0)),
                None => Err(format!("unknown topology {other:?}")),
            },
        }
    }
}

/// Undirected, connected, synchronous communication graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkModel {
    neighbors: Vec<Vec<usize>>,
    diameter: usize,
}

impl NetworkModel {
    pub fn build(topology: Topology, agents: usize) -> Self {
        match topology {
            Topology::Complete => Self::complete(agents),
            Topology::Ring => Self::ring(agents),
            Topology::Line => Self::line(agents),
            Topology::Random(seed) => Self::random_connected(agents, 0.3, seed),
        }
    }

    pub fn complete(agents: usize) -> Self {
        let edges = (0..agents).flat_map(|a| (a + 1..agents).map(move |b| (a, b)));
        Self::from_edges(agents, edges).expect("complete graph is connected")
    }

    pub fn ring(agents: usize) -> Self {
        let edges = (0..agents).filter(|_| agents > 1).map(|a| (a, (a + 1) % agents));
        Self::from_edges(agents, edges).expect("ring is connected")
    }

    pub fn line(agents: usize) -> Self {
        let edges = (1..agents).map(|a| (a - 1, a));
        Self::from_edges(agents, edges).expect("line is connected")
    }

    /// Random spanning tree, then each remaining pair joined with `extra_edge_prob`.
    pub fn random_connected(agents: usize, extra_edge_prob: f64, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0x6e65_7477);
        let mut order: Vec<usize> = (0..agents).collect();
        order.shuffle(&mut rng);
        let mut edges = Vec::new();
        for i in 1..agents {
            let parent = order[rng.gen_range(0..i)];
            edges.push((parent, order[i]));
        }
        for a in 0..agents {
            for b in a + 1..agents {
                if rng.gen_bool(extra_edge_prob) {
                    edges.push((a, b));
                }
            }
        }
        Self::from_edges(agents, edges).expect("spanning tree is connected")
    }

    pub fn from_edges(agents: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, AuctionError> {
        let mut neighbors = vec![Vec::new(); agents];
        for (a, b) in edges {
            if a >= agents || b >= agents {
                return Err(AuctionError::Network(format!("edge ({a}, {b}) out of range")));
            }
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let diameter = diameter(&neighbors).ok_or_else(|| AuctionError::Network("graph is not connected".into()))?;
        Ok(NetworkModel { neighbors, diameter })
    }

    pub fn agents(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbors of `agent`, ascending.
    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }
}

/// Longest shortest path, or `None` if disconnected.
fn diameter(neighbors: &[Vec<usize>]) -> Option<usize> {
    let n = neighbors.len();
    let mut worst = 0;
    for source in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        worst = worst.max(*dist.iter().max()?);
        if dist.contains(&usize::MAX) {
            return None;
        }
    }
    Some(worst)
}
