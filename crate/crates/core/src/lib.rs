//! Round-based simulator of a flat wireless sensor network that forwards every
//! reading to a base station with a three-stage ADV/REQ/DATA negotiation per hop.
//!
//! Next hops are chosen by one of three strategies: highest residual energy
//! neighbour (HE), minimum-energy route (MECRT), or fewest hops (MINHOP).

pub mod config;
pub mod energy;
pub mod negotiation;
pub mod net;
pub mod report;
pub mod rng;
pub mod sim;
pub mod strategy;
pub mod sweep;

pub use config::{ConfigError, SimConfig, Strategy, TrafficMode};
pub use energy::RadioModel;
pub use net::{NodeId, Position, Vertex};
pub use sim::{run, RoundMetrics, SimError, SimResult, Simulation, TerminationReason};
