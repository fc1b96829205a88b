//! The round loop: traffic generation, strategy invocation, delivery, death
//! bookkeeping, termination and per-round metrics.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::config::{ConfigError, SimConfig, Strategy, TrafficMode};
use crate::energy::RadioModel;
use crate::negotiation::{deliver, HopEvent, NegotiationError, NetworkState};
use crate::net::{deploy, distance, Node, NodeId, Position};
use crate::rng::{seeded_rng, SimRng};
use crate::strategy::{select_route_mecrt, Route};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation already terminated ({0:?})")]
    Terminated(TerminationReason),
    #[error("delivery failed: {0}")]
    Delivery(#[from] NegotiationError),
    #[error("expected {expected} node positions, got {got}")]
    PositionCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    NoAliveNodes,
    NoSource,
    MaxRounds,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::NoAliveNodes => "no_alive_nodes",
            TerminationReason::NoSource => "no_source",
            TerminationReason::MaxRounds => "max_rounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub source: Option<NodeId>,
    pub delivered: bool,
    /// Energy drawn by the round's delivery.
    pub network_j_consumed: f64,
    /// Energy drawn by the flat per-round idle drain.
    pub idle_j_consumed: f64,
    pub total_residual_j: f64,
    pub alive_count: usize,
    pub cumulative_dead: usize,
    pub hops: usize,
    pub latency_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub initial_total_j: f64,
    pub rounds: Vec<RoundMetrics>,
    pub lifetime_first_death: Option<u64>,
    pub lifetime_termination: u64,
    pub termination_reason: TerminationReason,
}

impl SimResult {
    pub fn rounds_delivered(&self) -> usize {
        self.rounds.iter().filter(|r| r.delivered).count()
    }

    /// Delivery plus idle energy over the whole run.
    pub fn total_consumed_j(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.network_j_consumed + r.idle_j_consumed)
            .sum()
    }

    pub fn final_residual_j(&self) -> f64 {
        self.rounds
            .last()
            .map_or(self.initial_total_j, |r| r.total_residual_j)
    }

    /// First-death lifetime, censored at termination when nobody died.
    pub fn first_death_or_end(&self) -> u64 {
        self.lifetime_first_death.unwrap_or(self.lifetime_termination)
    }

    /// Residual energy after `round`; the final value persists past termination.
    pub fn residual_at(&self, round: u64) -> f64 {
        if round == 0 {
            return self.initial_total_j;
        }
        let idx = (round as usize).min(self.rounds.len());
        if idx == 0 {
            self.initial_total_j
        } else {
            self.rounds[idx - 1].total_residual_j
        }
    }

    pub fn dead_at(&self, round: u64) -> usize {
        let idx = (round as usize).min(self.rounds.len());
        if idx == 0 {
            0
        } else {
            self.rounds[idx - 1].cumulative_dead
        }
    }
}

/// Chooses the node that generates this round's reading, if any.
pub fn pick_source<R: Rng + ?Sized>(nodes: &[Node], config: &SimConfig, rng: &mut R) -> Option<NodeId> {
    match config.traffic_mode {
        TrafficMode::EventPoint => {
            let event = Position::new(
                rng.gen_range(0.0..=config.area_width_m),
                rng.gen_range(0.0..=config.area_height_m),
            );
            let mut best: Option<(NodeId, f64)> = None;
            for node in nodes.iter().filter(|n| n.alive) {
                let d = distance(node.pos, event);
                if d <= config.sense_range_m && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((node.id, d));
                }
            }
            best.map(|(id, _)| id)
        }
        TrafficMode::RandomSource => {
            let alive: Vec<NodeId> = nodes.iter().filter(|n| n.alive).map(|n| n.id).collect();
            if alive.is_empty() {
                None
            } else {
                Some(alive[rng.gen_range(0..alive.len())])
            }
        }
    }
}

/// Whether any alive node can sense some point of the field.
fn any_sensor_covers_field(nodes: &[Node], config: &SimConfig) -> bool {
    nodes.iter().filter(|n| n.alive).any(|n| {
        let cx = n.pos.x_m.clamp(0.0, config.area_width_m);
        let cy = n.pos.y_m.clamp(0.0, config.area_height_m);
        distance(n.pos, Position::new(cx, cy)) <= config.sense_range_m
    })
}

/// One simulation run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    model: RadioModel,
    net: NetworkState,
    rng: SimRng,
    round: u64,
    initial_total_j: f64,
    first_death: Option<u64>,
    dead: usize,
    routes: HashMap<NodeId, Route>,
    terminated: Option<TerminationReason>,
}

impl Simulation {
    /// Validates `config` and deploys nodes from `config.seed`.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let nodes = deploy(&config, &mut rng);
        Ok(Self::from_parts(config, nodes, rng))
    }

    /// Uses the given positions instead of a random deployment. Traffic still
    /// draws from `config.seed`.
    pub fn with_positions(config: SimConfig, positions: &[Position]) -> Result<Self, SimError> {
        config.validate()?;
        if positions.len() != config.node_count {
            return Err(SimError::PositionCount {
                expected: config.node_count,
                got: positions.len(),
            });
        }
        let nodes = positions
            .iter()
            .enumerate()
            .map(|(id, &pos)| Node::new(id, pos, config.initial_energy_j))
            .collect();
        let rng = seeded_rng(config.seed);
        Ok(Self::from_parts(config, nodes, rng))
    }

    fn from_parts(config: SimConfig, nodes: Vec<Node>, rng: SimRng) -> Self {
        let model = config.radio();
        let net = NetworkState::new(nodes, &config);
        let initial_total_j = net.total_residual();
        let mut sim = Simulation {
            config,
            model,
            net,
            rng,
            round: 0,
            initial_total_j,
            first_death: None,
            dead: 0,
            routes: HashMap::new(),
            terminated: None,
        };
        sim.terminated = sim.check_termination();
        sim
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn network(&self) -> &NetworkState {
        &self.net
    }

    pub fn nodes(&self) -> &[Node] {
        &self.net.nodes
    }

    pub fn termination(&self) -> Option<TerminationReason> {
        self.terminated
    }

    pub fn initial_total_j(&self) -> f64 {
        self.initial_total_j
    }

    pub fn first_death(&self) -> Option<u64> {
        self.first_death
    }

    /// Start recording every ADV/REQ/DATA message from now on.
    pub fn enable_trace(&mut self) {
        self.net.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<HopEvent> {
        self.net.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn check_termination(&self) -> Option<TerminationReason> {
        if self.net.alive_count() == 0 {
            Some(TerminationReason::NoAliveNodes)
        } else if self.config.traffic_mode == TrafficMode::EventPoint
            && !any_sensor_covers_field(&self.net.nodes, &self.config)
        {
            Some(TerminationReason::NoSource)
        } else if self.round >= self.config.max_rounds {
            Some(TerminationReason::MaxRounds)
        } else {
            None
        }
    }

    fn topology_changed(&mut self) {
        self.net.rebuild_graph(&self.config);
        self.routes.clear();
    }

    fn note_deaths(&mut self, count: usize) {
        if count > 0 {
            self.dead += count;
            self.first_death.get_or_insert(self.round);
        }
    }

    fn apply_mobility(&mut self) {
        let step = self.config.mobility_step_m;
        if step <= 0.0 {
            return;
        }
        for node in self.net.nodes.iter_mut().filter(|n| n.alive) {
            let dx = self.rng.gen_range(-step..=step);
            let dy = self.rng.gen_range(-step..=step);
            node.pos.x_m = (node.pos.x_m + dx).clamp(0.0, self.config.area_width_m);
            node.pos.y_m = (node.pos.y_m + dy).clamp(0.0, self.config.area_height_m);
        }
        self.topology_changed();
    }

    fn apply_idle_drain(&mut self) -> f64 {
        let drain = self.config.idle_drain_j_per_round;
        if drain <= 0.0 {
            return 0.0;
        }
        let mut taken = 0.0;
        let mut deaths = 0;
        for node in self.net.nodes.iter_mut().filter(|n| n.alive) {
            taken += node.draw(drain);
            if node.is_depleted() {
                node.alive = false;
                deaths += 1;
            }
        }
        self.note_deaths(deaths);
        if deaths > 0 {
            self.topology_changed();
        }
        taken
    }

    /// Advances one round.
    pub fn step(&mut self) -> Result<RoundMetrics, SimError> {
        if let Some(reason) = self.terminated {
            return Err(SimError::Terminated(reason));
        }
        self.round += 1;
        self.apply_mobility();
        let idle_j_consumed = self.apply_idle_drain();

        let source = pick_source(&self.net.nodes, &self.config, &mut self.rng);
        let mut metrics = RoundMetrics {
            round: self.round,
            source,
            delivered: false,
            network_j_consumed: 0.0,
            idle_j_consumed,
            total_residual_j: 0.0,
            alive_count: 0,
            cumulative_dead: 0,
            hops: 0,
            latency_s: 0.0,
        };

        if let Some(src) = source {
            let planned = if self.config.strategy == Strategy::Mecrt {
                // Edge weights depend only on geometry, so a route stays optimal
                // until the topology changes.
                match self.routes.get(&src) {
                    Some(route) => Some(route.clone()),
                    None => {
                        let route = select_route_mecrt(
                            &self.net.graph,
                            self.net.snapshot(),
                            src,
                            &self.config,
                            &self.model,
                        )
                        .ok();
                        if let Some(r) = &route {
                            self.routes.insert(src, r.clone());
                        }
                        route
                    }
                }
            } else {
                None
            };
            let outcome = deliver(
                &mut self.net,
                src,
                self.config.strategy,
                self.round,
                planned,
                &self.config,
                &self.model,
            )?;
            metrics.delivered = outcome.delivered;
            metrics.network_j_consumed = outcome.network_j_consumed;
            metrics.hops = outcome.hops;
            metrics.latency_s = outcome.latency_s;
            self.note_deaths(outcome.deaths_during.len());
            if !outcome.deaths_during.is_empty() {
                self.topology_changed();
            }
        }

        metrics.total_residual_j = self.net.total_residual();
        metrics.alive_count = self.net.alive_count();
        metrics.cumulative_dead = self.dead;
        self.terminated = self.check_termination();
        Ok(metrics)
    }
}

/// Deploys from `config.seed` and runs to termination.
pub fn run(config: &SimConfig) -> Result<SimResult, SimError> {
    let sim = Simulation::new(config.clone())?;
    run_checked(sim)
}

fn run_checked(mut sim: Simulation) -> Result<SimResult, SimError> {
    let mut rounds = Vec::new();
    while sim.terminated.is_none() {
        rounds.push(sim.step()?);
    }
    Ok(SimResult {
        initial_total_j: sim.initial_total_j,
        lifetime_first_death: sim.first_death,
        lifetime_termination: sim.round,
        termination_reason: sim.terminated.expect("loop exits on termination"),
        config: sim.config,
        rounds,
    })
}

/// Runs a simulation over explicitly placed nodes.
pub fn run_with_positions(config: &SimConfig, positions: &[Position]) -> Result<SimResult, SimError> {
    run_checked(Simulation::with_positions(config.clone(), positions)?)
}
