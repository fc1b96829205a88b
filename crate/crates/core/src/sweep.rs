//! Parameter sweeps over node count, strategy and seed, with per-group aggregates.

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{SimConfig, Strategy};
use crate::sim::{run, SimError, SimResult, TerminationReason};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least one {0}")]
    Empty(&'static str),
    #[error("checkpoint interval must be positive")]
    ZeroCheckpoint,
    #[error("run n={n} strategy={strategy} seed={seed} failed: {source}")]
    Run {
        n: usize,
        strategy: Strategy,
        seed: u64,
        #[source]
        source: SimError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub node_counts: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// Spacing, in rounds, of the sampled residual and dead-count curves.
    pub checkpoint_every: u64,
}

/// One point of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub round: u64,
    pub residual_j: f64,
    pub dead: f64,
}

/// Outcome of one (node count, strategy, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n: usize,
    pub strategy: Strategy,
    pub seed: u64,
    /// Censored at termination when no node died.
    pub lifetime_first_death: u64,
    pub lifetime_termination: u64,
    pub termination_reason: TerminationReason,
    pub rounds_delivered: usize,
    pub total_consumed_j: f64,
    /// Sampled at multiples of the checkpoint interval, through the first
    /// checkpoint at or after termination.
    pub curve: Vec<CurvePoint>,
}

impl RunSummary {
    pub fn from_result(result: &SimResult, checkpoint_every: u64) -> Self {
        let end = result.lifetime_termination;
        let mut curve = Vec::new();
        let mut round = 0;
        loop {
            curve.push(CurvePoint {
                round,
                residual_j: result.residual_at(round),
                dead: result.dead_at(round) as f64,
            });
            if round >= end {
                break;
            }
            round += checkpoint_every;
        }
        RunSummary {
            n: result.config.node_count,
            strategy: result.config.strategy,
            seed: result.config.seed,
            lifetime_first_death: result.first_death_or_end(),
            lifetime_termination: end,
            termination_reason: result.termination_reason,
            rounds_delivered: result.rounds_delivered(),
            total_consumed_j: result.total_consumed_j(),
            curve,
        }
    }

    /// Curve value at checkpoint index `i`; the last sample persists.
    fn point(&self, i: usize) -> CurvePoint {
        self.curve[i.min(self.curve.len() - 1)]
    }
}

/// Mean and standard deviation over the seeds of one (node count, strategy) group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_life_fd: f64,
    pub sd_life_fd: f64,
    pub mean_life_term: f64,
    pub sd_life_term: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<AggregateRow>,
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(group: &[RunSummary], checkpoint_every: u64) -> AggregateRow {
    let fd: Vec<f64> = group.iter().map(|r| r.lifetime_first_death as f64).collect();
    let term: Vec<f64> = group.iter().map(|r| r.lifetime_termination as f64).collect();
    let (mean_life_fd, sd_life_fd) = mean_sd(&fd);
    let (mean_life_term, sd_life_term) = mean_sd(&term);
    let points = group.iter().map(|r| r.curve.len()).max().unwrap_or(0);
    let k = group.len() as f64;
    let curve = (0..points)
        .map(|i| CurvePoint {
            round: i as u64 * checkpoint_every,
            residual_j: group.iter().map(|r| r.point(i).residual_j).sum::<f64>() / k,
            dead: group.iter().map(|r| r.point(i).dead).sum::<f64>() / k,
        })
        .collect();
    AggregateRow {
        n: group[0].n,
        strategy: group[0].strategy,
        runs: group.len(),
        mean_life_fd,
        sd_life_fd,
        mean_life_term,
        sd_life_term,
        curve,
    }
}

/// Runs every (node count, strategy, seed) combination. Runs execute in
/// parallel; results keep the nesting order of the input lists.
pub fn sweep(base: &SimConfig, spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    if spec.node_counts.is_empty() {
        return Err(SweepError::Empty("node count"));
    }
    if spec.strategies.is_empty() {
        return Err(SweepError::Empty("strategy"));
    }
    if spec.seeds.is_empty() {
        return Err(SweepError::Empty("seed"));
    }
    if spec.checkpoint_every == 0 {
        return Err(SweepError::ZeroCheckpoint);
    }
    let mut combos = Vec::new();
    for &n in &spec.node_counts {
        for &strategy in &spec.strategies {
            for &seed in &spec.seeds {
                combos.push(SimConfig {
                    node_count: n,
                    strategy,
                    seed,
                    ..base.clone()
                });
            }
        }
    }
    let runs = combos
        .par_iter()
        .map(|config| {
            run(config)
                .map(|result| RunSummary::from_result(&result, spec.checkpoint_every))
                .map_err(|source| SweepError::Run {
                    n: config.node_count,
                    strategy: config.strategy,
                    seed: config.seed,
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let aggregates = runs
        .chunks(spec.seeds.len())
        .map(|group| aggregate(group, spec.checkpoint_every))
        .collect();
    Ok(SweepTable { runs, aggregates })
}
