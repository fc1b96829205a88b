//! Route and next-hop selection: HE greedy forwarding, MECRT minimum-energy
//! routing, the min-hop baseline, and an exhaustive search used as a test oracle.
//!
//! Edge weights for route search are the energy drawn from network nodes when a
//! hop is executed: a node-to-node hop costs the full ADV/REQ/DATA exchange on
//! both ends, a hop into the base station costs the sender's side only.
//! Ties are broken by fewer hops, then by the lexicographically smallest node
//! id sequence.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::config::SimConfig;
use crate::energy::RadioModel;
use crate::net::{NeighborGraph, Node, NodeId, Vertex};

/// Largest alive population the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("no route to the base station from node {0}")]
    NoRoute(NodeId),
    #[error("exhaustive search refused: {alive} alive nodes exceeds limit {limit}")]
    TooLarge { alive: usize, limit: usize },
}

/// Read-only view of node energies at the instant of selection.
#[derive(Debug, Clone, Copy)]
pub struct EnergySnapshot<'a> {
    nodes: &'a [Node],
}

impl<'a> EnergySnapshot<'a> {
    pub fn new(nodes: &'a [Node]) -> Self {
        EnergySnapshot { nodes }
    }

    pub fn residual(&self, id: NodeId) -> f64 {
        self.nodes.get(id).map_or(0.0, |n| n.residual_j)
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes.get(id).is_some_and(|n| n.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }
}

/// A path from a source to the base station. `nodes` holds the sensor nodes in
/// order, source first; the final hop into the base station is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub nodes: Vec<NodeId>,
    pub predicted_network_j: f64,
}

impl Route {
    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn hop_count(&self) -> usize {
        self.nodes.len()
    }

    /// Full hop sequence including the trailing base station vertex.
    pub fn vertices(&self) -> Vec<Vertex> {
        self.nodes
            .iter()
            .map(|&id| Vertex::Node(id))
            .chain(std::iter::once(Vertex::BaseStation))
            .collect()
    }
}

/// Energy weights used by the route searches.
#[derive(Debug, Clone, Copy)]
pub struct EdgeWeights<'a> {
    config: &'a SimConfig,
    model: &'a RadioModel,
}

impl<'a> EdgeWeights<'a> {
    pub fn new(config: &'a SimConfig, model: &'a RadioModel) -> Self {
        EdgeWeights { config, model }
    }

    pub fn relay(&self, distance_m: f64) -> f64 {
        self.model
            .hop_transaction_cost(distance_m, self.config)
            .total()
    }

    pub fn final_hop(&self, distance_m: f64) -> f64 {
        self.model
            .hop_transaction_cost(distance_m, self.config)
            .sender_j
    }
}

/// Predicted network energy of executing `nodes` followed by a final hop to the
/// base station. Summed hop by hop from the source. `None` if a hop is missing
/// from the graph.
pub fn path_cost(graph: &NeighborGraph, nodes: &[NodeId], weights: EdgeWeights<'_>) -> Option<f64> {
    let mut cost = 0.0;
    for pair in nodes.windows(2) {
        cost += weights.relay(graph.edge_distance(pair[0], pair[1])?);
    }
    let last = *nodes.last()?;
    cost += weights.final_hop(graph.bs_link(last)?);
    Some(cost)
}

fn route_from(graph: &NeighborGraph, nodes: Vec<NodeId>, weights: EdgeWeights<'_>) -> Route {
    let predicted_network_j = path_cost(graph, &nodes, weights).expect("route follows graph edges");
    Route {
        nodes,
        predicted_network_j,
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    id: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // Reversed so the max-heap pops the cheapest label first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn trace_back(parent: &[Option<usize>], mut at: usize) -> Vec<usize> {
    let mut path = vec![at];
    while let Some(p) = parent[at] {
        path.push(p);
        at = p;
    }
    path.reverse();
    path
}

struct Labels {
    cost: Vec<f64>,
    hops: Vec<usize>,
    parent: Vec<Option<usize>>,
    settled: Vec<bool>,
    heap: BinaryHeap<HeapEntry>,
}

impl Labels {
    fn new(size: usize, source: usize) -> Self {
        let mut labels = Labels {
            cost: vec![f64::INFINITY; size],
            hops: vec![usize::MAX; size],
            parent: vec![None; size],
            settled: vec![false; size],
            heap: BinaryHeap::new(),
        };
        labels.cost[source] = 0.0;
        labels.hops[source] = 0;
        labels.heap.push(HeapEntry {
            cost: 0.0,
            hops: 0,
            id: source,
        });
        labels
    }

    fn relax(&mut self, from: usize, to: usize, weight: f64) {
        let c = self.cost[from] + weight;
        let h = self.hops[from] + 1;
        let better = match c.total_cmp(&self.cost[to]).then(h.cmp(&self.hops[to])) {
            Ordering::Less => true,
            Ordering::Greater => false,
            // Equal energy and length: keep the lexicographically smaller prefix.
            Ordering::Equal => match self.parent[to] {
                Some(current) if current != from => {
                    trace_back(&self.parent, from) < trace_back(&self.parent, current)
                }
                _ => false,
            },
        };
        if better {
            let label_changed = c != self.cost[to] || h != self.hops[to];
            self.cost[to] = c;
            self.hops[to] = h;
            self.parent[to] = Some(from);
            if label_changed {
                self.heap.push(HeapEntry { cost: c, hops: h, id: to });
            }
        }
    }

    fn pop(&mut self) -> Option<usize> {
        while let Some(entry) = self.heap.pop() {
            let u = entry.id;
            if self.settled[u] || entry.cost != self.cost[u] || entry.hops != self.hops[u] {
                continue;
            }
            self.settled[u] = true;
            return Some(u);
        }
        None
    }
}

/// Minimum-energy route from `source`, never entering a node flagged in `blocked`.
/// Used both for fresh selection and for rerouting a packet stranded mid-path.
pub(crate) fn min_energy_route(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    blocked: &[bool],
    weights: EdgeWeights<'_>,
) -> Result<Route, RouteError> {
    let n = graph.node_count();
    if source >= n || !snapshot.is_alive(source) || !graph.is_alive(source) {
        return Err(RouteError::NoRoute(source));
    }
    // The base station is the extra vertex `n`.
    let bs = n;
    let mut labels = Labels::new(n + 1, source);
    while let Some(u) = labels.pop() {
        if u == bs {
            let mut nodes = trace_back(&labels.parent, bs);
            nodes.pop();
            return Ok(route_from(graph, nodes, weights));
        }
        for nb in graph.neighbors(u) {
            let v = nb.id;
            if labels.settled[v] || blocked.get(v).copied().unwrap_or(false) || !snapshot.is_alive(v) {
                continue;
            }
            labels.relax(u, v, weights.relay(nb.distance_m));
        }
        if let Some(d) = graph.bs_link(u) {
            labels.relax(u, bs, weights.final_hop(d));
        }
    }
    Err(RouteError::NoRoute(source))
}

/// MECRT: the source-to-base-station path drawing the least energy from the network.
pub fn select_route_mecrt(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<Route, RouteError> {
    min_energy_route(graph, snapshot, source, &[], EdgeWeights::new(config, model))
}

/// HE: the alive, unvisited neighbour of `current` with the most residual energy
/// (lowest id on ties), or the base station when no such neighbour remains.
pub fn select_next_hop_he(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    current: NodeId,
    visited: &[bool],
) -> Vertex {
    let mut best: Option<(NodeId, f64)> = None;
    for nb in graph.neighbors(current) {
        if visited.get(nb.id).copied().unwrap_or(false) || !snapshot.is_alive(nb.id) {
            continue;
        }
        let e = snapshot.residual(nb.id);
        if best.is_none_or(|(_, top)| e > top) {
            best = Some((nb.id, e));
        }
    }
    best.map_or(Vertex::BaseStation, |(id, _)| Vertex::Node(id))
}

/// The route an HE walk would take if energies stayed frozen at `snapshot`.
pub fn he_walk(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<Route, RouteError> {
    if !snapshot.is_alive(source) || !graph.is_alive(source) {
        return Err(RouteError::NoRoute(source));
    }
    let mut visited = vec![false; graph.node_count()];
    let mut nodes = vec![source];
    visited[source] = true;
    let mut current = source;
    while let Vertex::Node(next) = select_next_hop_he(graph, snapshot, current, &visited) {
        visited[next] = true;
        nodes.push(next);
        current = next;
    }
    if graph.bs_link(current).is_none() {
        return Err(RouteError::NoRoute(source));
    }
    Ok(route_from(graph, nodes, EdgeWeights::new(config, model)))
}

/// Fewest hops to the base station, lexicographically smallest on ties.
pub fn select_route_minhop(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<Route, RouteError> {
    min_hop_route(graph, snapshot, source, &[], EdgeWeights::new(config, model))
}

pub(crate) fn min_hop_route(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    blocked: &[bool],
    weights: EdgeWeights<'_>,
) -> Result<Route, RouteError> {
    let n = graph.node_count();
    if source >= n || !snapshot.is_alive(source) || !graph.is_alive(source) {
        return Err(RouteError::NoRoute(source));
    }
    // Expanding in ascending id order from a lexicographically ordered FIFO keeps
    // the first discovery of every node on its lexicographically smallest shortest path.
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([source]);
    seen[source] = true;
    while let Some(u) = queue.pop_front() {
        if graph.bs_link(u).is_some() {
            return Ok(route_from(graph, trace_back(&parent, u), weights));
        }
        for nb in graph.neighbors(u) {
            let v = nb.id;
            if seen[v] || blocked.get(v).copied().unwrap_or(false) || !snapshot.is_alive(v) {
                continue;
            }
            seen[v] = true;
            parent[v] = Some(u);
            queue.push_back(v);
        }
    }
    Err(RouteError::NoRoute(source))
}

/// Exact minimum over every simple path, under the MECRT weights and tie-break.
pub fn brute_force_min_route(
    graph: &NeighborGraph,
    snapshot: EnergySnapshot<'_>,
    source: NodeId,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<Route, RouteError> {
    let alive = (0..graph.node_count())
        .filter(|&id| graph.is_alive(id) && snapshot.is_alive(id))
        .count();
    if alive > BRUTE_FORCE_LIMIT {
        return Err(RouteError::TooLarge {
            alive,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if !snapshot.is_alive(source) || !graph.is_alive(source) {
        return Err(RouteError::NoRoute(source));
    }
    let weights = EdgeWeights::new(config, model);

    struct Search<'g, 'w> {
        graph: &'g NeighborGraph,
        snapshot: EnergySnapshot<'g>,
        weights: EdgeWeights<'w>,
        on_path: Vec<bool>,
        path: Vec<NodeId>,
        best: Option<(f64, Vec<NodeId>)>,
    }

    impl Search<'_, '_> {
        fn visit(&mut self, cost_so_far: f64) {
            let u = *self.path.last().expect("nonempty path");
            if let Some(d) = self.graph.bs_link(u) {
                let total = cost_so_far + self.weights.final_hop(d);
                let better = match &self.best {
                    None => true,
                    Some((c, p)) => match total
                        .total_cmp(c)
                        .then(self.path.len().cmp(&p.len()))
                    {
                        Ordering::Less => true,
                        Ordering::Equal => self.path < *p,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    self.best = Some((total, self.path.clone()));
                }
            }
            for nb in self.graph.neighbors(u) {
                let v = nb.id;
                if self.on_path[v] || !self.snapshot.is_alive(v) {
                    continue;
                }
                self.on_path[v] = true;
                self.path.push(v);
                self.visit(cost_so_far + self.weights.relay(nb.distance_m));
                self.path.pop();
                self.on_path[v] = false;
            }
        }
    }

    let mut search = Search {
        graph,
        snapshot,
        weights,
        on_path: vec![false; graph.node_count()],
        path: vec![source],
        best: None,
    };
    search.on_path[source] = true;
    search.visit(0.0);
    let (cost, nodes) = search.best.ok_or(RouteError::NoRoute(source))?;
    Ok(Route {
        nodes,
        predicted_network_j: cost,
    })
}
