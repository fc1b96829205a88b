//! Hop-by-hop three-stage negotiation (ADV, REQ, DATA) along a chosen route or
//! greedy walk, with energy deduction, a per-node cache of held readings, and
//! handling of nodes that die while a packet is in flight.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::config::{SimConfig, Strategy};
use crate::energy::RadioModel;
use crate::net::{NeighborGraph, Node, NodeId, Vertex};
use crate::strategy::{
    min_energy_route, min_hop_route, select_next_hop_he, EdgeWeights, EnergySnapshot, Route,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NegotiationError {
    #[error("node {0} cannot send: it is dead")]
    SenderDied(NodeId),
    #[error("node {0} cannot receive: it is dead")]
    ReceiverDead(NodeId),
    #[error("nodes {0} and {1} are not neighbours")]
    NotNeighbors(NodeId, NodeId),
    #[error("node {0} has no link to the base station")]
    NoBaseStationLink(NodeId),
    #[error("no route: source {0} is dead")]
    NoRoute(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Adv,
    Req,
    Data,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Adv => "ADV",
            PacketKind::Req => "REQ",
            PacketKind::Data => "DATA",
        }
    }

    pub fn size_bits(self, config: &SimConfig) -> u64 {
        match self {
            PacketKind::Adv | PacketKind::Req => config.control_packet_bits,
            PacketKind::Data => config.data_packet_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub kind: PacketKind,
    pub size_bits: u64,
    pub data_id: u64,
    /// Nodes the reading has been handed to, in order.
    pub visited: Vec<NodeId>,
}

impl Packet {
    pub fn data(data_id: u64, source: NodeId, config: &SimConfig) -> Self {
        Packet {
            kind: PacketKind::Data,
            size_bits: config.data_packet_bits,
            data_id,
            visited: vec![source],
        }
    }
}

/// Data ids each node already holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeenCache {
    held: Vec<HashSet<u64>>,
}

impl SeenCache {
    pub fn new(node_count: usize) -> Self {
        SeenCache {
            held: vec![HashSet::new(); node_count],
        }
    }

    pub fn contains(&self, node: NodeId, data_id: u64) -> bool {
        self.held[node].contains(&data_id)
    }

    /// Returns false if the node already held it.
    pub fn insert(&mut self, node: NodeId, data_id: u64) -> bool {
        self.held[node].insert(data_id)
    }

    pub fn len(&self, node: NodeId) -> usize {
        self.held[node].len()
    }

    pub fn is_empty(&self, node: NodeId) -> bool {
        self.held[node].is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.held.iter().map(HashSet::len).collect()
    }
}

/// One message of the exchange, for the optional event trace.
#[derive(Debug, Clone, PartialEq)]
pub struct HopEvent {
    pub round: u64,
    pub hop_index: usize,
    pub kind: PacketKind,
    pub sender: Vertex,
    pub receiver: Vertex,
    /// Nominal energy the message costs the network (base station side excluded).
    pub joules: f64,
}

/// Node energies, connectivity and caches: everything a delivery mutates or reads.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub nodes: Vec<Node>,
    pub graph: NeighborGraph,
    pub cache: SeenCache,
    pub trace: Option<Vec<HopEvent>>,
}

impl NetworkState {
    pub fn new(nodes: Vec<Node>, config: &SimConfig) -> Self {
        let graph = NeighborGraph::build(&nodes, config);
        let cache = SeenCache::new(nodes.len());
        NetworkState {
            nodes,
            graph,
            cache,
            trace: None,
        }
    }

    pub fn rebuild_graph(&mut self, config: &SimConfig) {
        self.graph = NeighborGraph::build(&self.nodes, config);
    }

    pub fn snapshot(&self) -> EnergySnapshot<'_> {
        EnergySnapshot::new(&self.nodes)
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn total_residual(&self) -> f64 {
        self.nodes.iter().map(|n| n.residual_j).sum()
    }

    fn record(&mut self, event: HopEvent) {
        if let Some(trace) = &mut self.trace {
            trace.push(event);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopStatus {
    Transferred,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopOutcome {
    pub status: HopStatus,
    pub network_j: f64,
    pub deaths: Vec<NodeId>,
}

/// Runs one ADV/REQ/DATA exchange from `sender` to `receiver`.
///
/// A receiver that already holds `packet.data_id` answers the ADV with nothing,
/// so only the ADV leg is paid. Draws clamp at zero and a depleted node is
/// marked dead once the whole exchange is over.
pub fn execute_hop(
    state: &mut NetworkState,
    sender: NodeId,
    receiver: Vertex,
    packet: &mut Packet,
    hop_index: usize,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<HopOutcome, NegotiationError> {
    if !state.nodes.get(sender).is_some_and(|n| n.alive) {
        return Err(NegotiationError::SenderDied(sender));
    }
    let distance_m = match receiver {
        Vertex::Node(r) => {
            if !state.nodes.get(r).is_some_and(|n| n.alive) {
                return Err(NegotiationError::ReceiverDead(r));
            }
            state
                .graph
                .edge_distance(sender, r)
                .ok_or(NegotiationError::NotNeighbors(sender, r))?
        }
        Vertex::BaseStation => state
            .graph
            .bs_link(sender)
            .ok_or(NegotiationError::NoBaseStationLink(sender))?,
    };
    let receiver_node = match receiver {
        Vertex::Node(r) => Some(r),
        Vertex::BaseStation => None,
    };
    let duplicate = receiver_node.is_some_and(|r| state.cache.contains(r, packet.data_id));

    let control = config.control_packet_bits;
    let data = config.data_packet_bits;
    // Receive-side costs vanish when the base station is on the receiving end.
    let node_rx = |bits: u64| {
        if receiver_node.is_some() {
            model.rx_cost(bits)
        } else {
            0.0
        }
    };
    let node_tx_back = |bits: u64| {
        if receiver_node.is_some() {
            model.tx_cost(bits, distance_m)
        } else {
            0.0
        }
    };
    let round = packet.data_id;
    let event = |kind, from, to, joules| HopEvent {
        round,
        hop_index,
        kind,
        sender: from,
        receiver: to,
        joules,
    };
    let here = Vertex::Node(sender);

    let cost = if duplicate {
        model.adv_leg_cost(distance_m, config)
    } else {
        model.hop_transaction_cost(distance_m, config)
    };
    state.record(event(
        PacketKind::Adv,
        here,
        receiver,
        model.tx_cost(control, distance_m) + node_rx(control),
    ));
    if !duplicate {
        state.record(event(
            PacketKind::Req,
            receiver,
            here,
            node_tx_back(control) + model.rx_cost(control),
        ));
        state.record(event(
            PacketKind::Data,
            here,
            receiver,
            model.tx_cost(data, distance_m) + node_rx(data),
        ));
    }

    let mut network_j = state.nodes[sender].draw(cost.sender_j);
    if let Some(r) = receiver_node {
        network_j += state.nodes[r].draw(cost.receiver_j);
        if !duplicate {
            state.cache.insert(r, packet.data_id);
            packet.visited.push(r);
        }
    }

    let mut deaths = Vec::new();
    for id in std::iter::once(sender).chain(receiver_node) {
        let node = &mut state.nodes[id];
        if node.alive && node.is_depleted() {
            node.alive = false;
            deaths.push(id);
        }
    }

    Ok(HopOutcome {
        status: if duplicate {
            HopStatus::Duplicate
        } else {
            HopStatus::Transferred
        },
        network_j,
        deaths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The node holding the reading died before it could forward it.
    SenderDied,
    /// A node on a fixed route already held the reading.
    Duplicate,
    /// No way forward toward the base station.
    Stuck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryResult {
    pub delivered: bool,
    pub path_taken: Vec<Vertex>,
    pub network_j_consumed: f64,
    pub hops: usize,
    pub latency_s: f64,
    pub deaths_during: Vec<NodeId>,
    pub failure_reason: Option<FailureReason>,
}

/// Seconds to push one ADV, one REQ and one DATA across a hop.
pub fn hop_latency_s(config: &SimConfig) -> f64 {
    (2 * config.control_packet_bits + config.data_packet_bits) as f64 / config.data_rate_bps
}

struct Walk {
    packet: Packet,
    blocked: Vec<bool>,
    path: Vec<Vertex>,
    consumed: f64,
    hops: usize,
    deaths: Vec<NodeId>,
}

impl Walk {
    fn finish(self, delivered: bool, failure: Option<FailureReason>, config: &SimConfig) -> DeliveryResult {
        DeliveryResult {
            delivered,
            path_taken: self.path,
            network_j_consumed: self.consumed,
            hops: self.hops,
            latency_s: self.hops as f64 * hop_latency_s(config),
            deaths_during: self.deaths,
            failure_reason: failure,
        }
    }

    fn absorb(&mut self, outcome: HopOutcome) {
        self.consumed += outcome.network_j;
        self.deaths.extend(outcome.deaths);
    }
}

/// Carries reading `data_id` from `source` to the base station.
///
/// HE picks each next hop greedily from the nodes the reading has not visited.
/// MECRT and MINHOP follow `planned` (or a freshly computed route) and reroute
/// from the current holder if a node ahead has died.
pub fn deliver(
    state: &mut NetworkState,
    source: NodeId,
    strategy: Strategy,
    data_id: u64,
    planned: Option<Route>,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<DeliveryResult, NegotiationError> {
    if !state.nodes.get(source).is_some_and(|n| n.alive) {
        return Err(NegotiationError::NoRoute(source));
    }
    state.cache.insert(source, data_id);
    let mut blocked = vec![false; state.nodes.len()];
    blocked[source] = true;
    let mut walk = Walk {
        packet: Packet::data(data_id, source, config),
        blocked,
        path: vec![Vertex::Node(source)],
        consumed: 0.0,
        hops: 0,
        deaths: Vec::new(),
    };
    match strategy {
        Strategy::He => deliver_greedy(state, source, walk, config, model),
        Strategy::Mecrt | Strategy::MinHop => {
            let weights = EdgeWeights::new(config, model);
            let plan = |state: &NetworkState, from: NodeId, blocked: &[bool]| {
                let snapshot = state.snapshot();
                if strategy == Strategy::Mecrt {
                    min_energy_route(&state.graph, snapshot, from, blocked, weights)
                } else {
                    min_hop_route(&state.graph, snapshot, from, blocked, weights)
                }
            };
            let route = match planned.filter(|r| r.nodes.first() == Some(&source)) {
                Some(route) => route,
                None => match plan(state, source, &walk.blocked) {
                    Ok(route) => route,
                    Err(_) => return Ok(walk.finish(false, Some(FailureReason::Stuck), config)),
                },
            };
            let mut ahead: VecDeque<Vertex> = route.vertices().into_iter().skip(1).collect();
            let mut current = source;
            while let Some(next) = ahead.pop_front() {
                if let Vertex::Node(v) = next {
                    if !state.nodes[v].alive || walk.blocked[v] {
                        match plan(state, current, &walk.blocked) {
                            Ok(route) => {
                                ahead = route.vertices().into_iter().skip(1).collect();
                                continue;
                            }
                            Err(_) => {
                                return Ok(walk.finish(false, Some(FailureReason::Stuck), config))
                            }
                        }
                    }
                }
                let hop_index = walk.hops;
                let outcome = execute_hop(state, current, next, &mut walk.packet, hop_index, config, model)?;
                let status = outcome.status;
                walk.absorb(outcome);
                if status == HopStatus::Duplicate {
                    return Ok(walk.finish(false, Some(FailureReason::Duplicate), config));
                }
                walk.hops += 1;
                walk.path.push(next);
                match next {
                    Vertex::BaseStation => return Ok(walk.finish(true, None, config)),
                    Vertex::Node(v) => {
                        walk.blocked[v] = true;
                        current = v;
                        if !state.nodes[v].alive {
                            return Ok(walk.finish(false, Some(FailureReason::SenderDied), config));
                        }
                    }
                }
            }
            Ok(walk.finish(false, Some(FailureReason::Stuck), config))
        }
    }
}

fn deliver_greedy(
    state: &mut NetworkState,
    source: NodeId,
    mut walk: Walk,
    config: &SimConfig,
    model: &RadioModel,
) -> Result<DeliveryResult, NegotiationError> {
    let mut current = source;
    loop {
        let next = select_next_hop_he(&state.graph, state.snapshot(), current, &walk.blocked);
        if next == Vertex::BaseStation && state.graph.bs_link(current).is_none() {
            return Ok(walk.finish(false, Some(FailureReason::Stuck), config));
        }
        let hop_index = walk.hops;
        let outcome = execute_hop(state, current, next, &mut walk.packet, hop_index, config, model)?;
        let status = outcome.status;
        walk.absorb(outcome);
        match (status, next) {
            (_, Vertex::BaseStation) => {
                walk.hops += 1;
                walk.path.push(next);
                return Ok(walk.finish(true, None, config));
            }
            (HopStatus::Duplicate, Vertex::Node(v)) => {
                // Try the next candidate, unless the failed ADV drained the sender.
                walk.blocked[v] = true;
                if !state.nodes[current].alive {
                    return Ok(walk.finish(false, Some(FailureReason::SenderDied), config));
                }
            }
            (HopStatus::Transferred, Vertex::Node(v)) => {
                walk.hops += 1;
                walk.path.push(next);
                walk.blocked[v] = true;
                current = v;
                if !state.nodes[v].alive {
                    return Ok(walk.finish(false, Some(FailureReason::SenderDied), config));
                }
            }
        }
    }
}
