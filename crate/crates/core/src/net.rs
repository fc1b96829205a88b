//! Node deployment, geometry and the range-limited neighbour graph.

use rand::Rng;
use thiserror::Error;

use crate::config::SimConfig;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
}

impl Position {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Position { x_m, y_m }
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x_m - b.x_m).hypot(a.y_m - b.y_m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: Position,
    pub residual_j: f64,
    pub alive: bool,
}

impl Node {
    pub fn new(id: NodeId, pos: Position, energy_j: f64) -> Self {
        Node {
            id,
            pos,
            residual_j: energy_j,
            alive: true,
        }
    }

    /// Removes up to `joules` from the battery and returns the amount actually drawn.
    /// The node is not marked dead here; callers decide when death takes effect.
    pub fn draw(&mut self, joules: f64) -> f64 {
        let taken = joules.min(self.residual_j);
        self.residual_j -= taken;
        if self.residual_j <= 0.0 {
            self.residual_j = 0.0;
        }
        taken
    }

    pub fn is_depleted(&self) -> bool {
        self.residual_j <= 0.0
    }
}

/// A routing endpoint: either a sensor node or the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Node(NodeId),
    BaseStation,
}

/// Places `config.node_count` nodes uniformly over the field, ids in generation order.
pub fn deploy<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Vec<Node> {
    (0..config.node_count)
        .map(|id| {
            let x = rng.gen_range(0.0..=config.area_width_m);
            let y = rng.gen_range(0.0..=config.area_height_m);
            Node::new(id, Position::new(x, y), config.initial_energy_j)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: NodeId,
    pub distance_m: f64,
}

/// Symmetric node-to-node adjacency over alive nodes within radio range, plus
/// a link from every alive node to the base station at its true distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<Neighbor>>,
    bs_link_m: Vec<Option<f64>>,
    alive: Vec<bool>,
}

impl NeighborGraph {
    pub fn build(nodes: &[Node], config: &SimConfig) -> Self {
        let bs = Position::new(config.bs_x_m, config.bs_y_m);
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            if !nodes[u].alive {
                continue;
            }
            // Ascending v keeps every list sorted by id.
            for v in (u + 1)..n {
                if !nodes[v].alive {
                    continue;
                }
                let d = distance(nodes[u].pos, nodes[v].pos);
                if d <= config.tx_range_m {
                    adjacency[u].push(Neighbor { id: v, distance_m: d });
                    adjacency[v].push(Neighbor { id: u, distance_m: d });
                }
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|nb| nb.id);
        }
        let bs_link_m = nodes
            .iter()
            .map(|node| node.alive.then(|| distance(node.pos, bs)))
            .collect();
        let alive = nodes.iter().map(|node| node.alive).collect();
        NeighborGraph {
            adjacency,
            bs_link_m,
            alive,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.alive.get(id).copied().unwrap_or(false)
    }

    /// Neighbours of `id` in ascending id order. Empty for dead or unknown nodes.
    pub fn neighbors(&self, id: NodeId) -> &[Neighbor] {
        self.adjacency.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search_by_key(&v, |nb| nb.id).is_ok()
    }

    pub fn edge_distance(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let list = self.neighbors(u);
        list.binary_search_by_key(&v, |nb| nb.id)
            .ok()
            .map(|i| list[i].distance_m)
    }

    /// Distance of the final hop from `id` to the base station, if that link exists.
    pub fn bs_link(&self, id: NodeId) -> Option<f64> {
        self.bs_link_m.get(id).copied().flatten()
    }

    /// Whether a path of alive nodes leads from `from` to the base station.
    pub fn bs_reachable(&self, from: NodeId) -> Result<bool, NetError> {
        if from >= self.node_count() {
            return Err(NetError::UnknownNode(from));
        }
        if !self.alive[from] {
            return Ok(false);
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            if self.bs_link(u).is_some() {
                return Ok(true);
            }
            for nb in self.neighbors(u) {
                if !seen[nb.id] {
                    seen[nb.id] = true;
                    stack.push(nb.id);
                }
            }
        }
        Ok(false)
    }
}
