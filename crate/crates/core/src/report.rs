//! CSV outputs and the joins that turn run and sweep outputs into plot-ready series.
//!
//! Every file starts with `#` comment lines carrying the effective config, so
//! any output can be traced back to the run that produced it. Floating point
//! values are written with 17 significant digits in scientific notation.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{SimConfig, Strategy};
use crate::negotiation::HopEvent;
use crate::net::{Node, Vertex};
use crate::sim::SimResult;
use crate::sweep::SweepTable;

pub const ROUNDS_HEADER: &str =
    "round,source,delivered,consumed_j,total_residual_j,alive,dead_cum,hops,latency_s";
pub const SWEEP_HEADER: &str =
    "n,strategy,seed,lifetime_first_death,lifetime_termination,rounds_delivered,total_consumed_j";
pub const AGGREGATE_HEADER: &str =
    "n,strategy,mean_life_fd,sd_life_fd,mean_life_term,sd_life_term";
pub const CURVES_HEADER: &str = "n,strategy,round,mean_residual_j,mean_dead";
pub const TRACE_HEADER: &str = "round,hop_index,kind,sender,receiver,joules";
pub const DEPLOYMENT_HEADER: &str = "id,x,y";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("inputs disagree: {0}")]
    Mismatch(String),
    #[error("nothing to compare: {0}")]
    NoInput(String),
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `#` comment block naming the output kind, the effective config and any extra fields.
pub fn provenance(kind: &str, config: &SimConfig, extra: &[(&str, String)]) -> String {
    let mut out = format!("# wsnsim {kind}\n");
    for line in config.emit().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for (key, value) in extra {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out
}

fn vertex_str(v: Vertex) -> String {
    match v {
        Vertex::Node(id) => id.to_string(),
        Vertex::BaseStation => "bs".into(),
    }
}

pub fn write_rounds_csv<W: Write>(mut w: W, result: &SimResult) -> io::Result<()> {
    let seeds = result.config.seed.to_string();
    w.write_all(provenance("rounds", &result.config, &[("seeds", seeds)]).as_bytes())?;
    writeln!(w, "{ROUNDS_HEADER}")?;
    for m in &result.rounds {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            m.round,
            m.source.map(|s| s.to_string()).unwrap_or_default(),
            u8::from(m.delivered),
            fmt_f64(m.network_j_consumed),
            fmt_f64(m.total_residual_j),
            m.alive_count,
            m.cumulative_dead,
            m.hops,
            fmt_f64(m.latency_s),
        )?;
    }
    Ok(())
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn sweep_provenance(kind: &str, base: &SimConfig, nodes: &[usize], strategies: &[Strategy], seeds: &[u64]) -> String {
    provenance(
        kind,
        base,
        &[
            ("nodes", join(nodes)),
            ("strategies", join(strategies)),
            ("seeds", join(seeds)),
        ],
    )
}

/// Writes sweep.csv, one row per run.
pub fn write_sweep_csv<W: Write>(
    mut w: W,
    base: &SimConfig,
    nodes: &[usize],
    strategies: &[Strategy],
    seeds: &[u64],
    table: &SweepTable,
) -> io::Result<()> {
    w.write_all(sweep_provenance("sweep", base, nodes, strategies, seeds).as_bytes())?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &table.runs {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n,
            r.strategy,
            r.seed,
            r.lifetime_first_death,
            r.lifetime_termination,
            r.rounds_delivered,
            fmt_f64(r.total_consumed_j),
        )?;
    }
    Ok(())
}

/// Writes aggregate.csv, one row per (node count, strategy).
pub fn write_aggregate_csv<W: Write>(
    mut w: W,
    base: &SimConfig,
    nodes: &[usize],
    strategies: &[Strategy],
    seeds: &[u64],
    table: &SweepTable,
) -> io::Result<()> {
    w.write_all(sweep_provenance("aggregate", base, nodes, strategies, seeds).as_bytes())?;
    writeln!(w, "{AGGREGATE_HEADER}")?;
    for a in &table.aggregates {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            a.n,
            a.strategy,
            fmt_f64(a.mean_life_fd),
            fmt_f64(a.sd_life_fd),
            fmt_f64(a.mean_life_term),
            fmt_f64(a.sd_life_term),
        )?;
    }
    Ok(())
}

/// Writes curves.csv: mean residual energy and dead count at each checkpoint.
pub fn write_curves_csv<W: Write>(
    mut w: W,
    base: &SimConfig,
    nodes: &[usize],
    strategies: &[Strategy],
    seeds: &[u64],
    table: &SweepTable,
) -> io::Result<()> {
    w.write_all(sweep_provenance("curves", base, nodes, strategies, seeds).as_bytes())?;
    writeln!(w, "{CURVES_HEADER}")?;
    for a in &table.aggregates {
        for p in &a.curve {
            writeln!(
                w,
                "{},{},{},{},{}",
                a.n,
                a.strategy,
                p.round,
                fmt_f64(p.residual_j),
                fmt_f64(p.dead)
            )?;
        }
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(mut w: W, config: &SimConfig, events: &[HopEvent]) -> io::Result<()> {
    w.write_all(provenance("trace", config, &[("seeds", config.seed.to_string())]).as_bytes())?;
    writeln!(w, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.round,
            e.hop_index,
            e.kind.as_str(),
            vertex_str(e.sender),
            vertex_str(e.receiver),
            fmt_f64(e.joules)
        )?;
    }
    Ok(())
}

pub fn write_deployment_csv<W: Write>(mut w: W, config: &SimConfig, nodes: &[Node]) -> io::Result<()> {
    w.write_all(provenance("deployment", config, &[("seeds", config.seed.to_string())]).as_bytes())?;
    writeln!(w, "{DEPLOYMENT_HEADER}")?;
    for n in nodes {
        writeln!(w, "{},{},{}", n.id, fmt_f64(n.pos.x_m), fmt_f64(n.pos.y_m))?;
    }
    Ok(())
}

/// Header metadata recovered from an output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kind: String,
    pub config: SimConfig,
    pub extra: BTreeMap<String, String>,
}

fn malformed(path: &str, message: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses the leading `#` block of an output file.
pub fn parse_provenance(path: &str, text: &str) -> Result<Provenance, ReportError> {
    let mut lines = text.lines().take_while(|l| l.starts_with('#'));
    let kind = lines
        .next()
        .and_then(|l| l.strip_prefix("# wsnsim "))
        .ok_or_else(|| malformed(path, "missing `# wsnsim` provenance header"))?
        .trim()
        .to_string();
    let mut config = SimConfig::default();
    let mut extra = BTreeMap::new();
    for line in lines {
        let body = line.trim_start_matches('#').trim();
        let Some((key, value)) = body.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if config.get(key).is_some() {
            config
                .set(key, value)
                .map_err(|e| malformed(path, format!("provenance: {e}")))?;
        } else {
            extra.insert(key.to_string(), value.to_string());
        }
    }
    Ok(Provenance { kind, config, extra })
}

fn read_file(path: &Path) -> Result<String, ReportError> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(text)
}

fn csv_rows(path: &str, text: &str, expected_header: &str) -> Result<Vec<csv::StringRecord>, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != expected_header {
        return Err(malformed(path, format!("unexpected header `{header}`")));
    }
    reader
        .records()
        .map(|r| r.map_err(|e| malformed(path, e.to_string())))
        .collect()
}

fn field<T: std::str::FromStr>(path: &str, record: &csv::StringRecord, idx: usize) -> Result<T, ReportError> {
    record
        .get(idx)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(path, format!("bad field {idx} in row {:?}", record)))
}

/// A parsed rounds.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundsFile {
    pub provenance: Provenance,
    /// (round, total residual J, cumulative dead)
    pub rows: Vec<(u64, f64, usize)>,
}

impl RoundsFile {
    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let name = path.display().to_string();
        Self::parse(&name, &read_file(path)?)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, ReportError> {
        let provenance = parse_provenance(name, text)?;
        if provenance.kind != "rounds" {
            return Err(malformed(name, format!("expected a rounds file, found `{}`", provenance.kind)));
        }
        let rows = csv_rows(name, text, ROUNDS_HEADER)?
            .iter()
            .map(|r| Ok((field(name, r, 0)?, field(name, r, 4)?, field(name, r, 6)?)))
            .collect::<Result<_, ReportError>>()?;
        Ok(RoundsFile { provenance, rows })
    }

    pub fn strategy(&self) -> Strategy {
        self.provenance.config.strategy
    }

    fn residual_at(&self, round: u64) -> f64 {
        let c = &self.provenance.config;
        let initial = c.initial_energy_j * c.node_count as f64;
        value_at(&self.rows, round, initial, |r| r.1)
    }

    fn dead_at(&self, round: u64) -> usize {
        value_at(&self.rows, round, 0, |r| r.2)
    }
}

fn value_at<T: Copy>(rows: &[(u64, f64, usize)], round: u64, initial: T, pick: impl Fn(&(u64, f64, usize)) -> T) -> T {
    if round == 0 || rows.is_empty() {
        return initial;
    }
    let idx = (round as usize).min(rows.len()) - 1;
    pick(&rows[idx])
}

/// A parsed aggregate.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateFile {
    pub provenance: Provenance,
    /// (n, strategy, mean first-death lifetime, mean termination lifetime)
    pub rows: Vec<(usize, Strategy, f64, f64)>,
}

impl AggregateFile {
    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let name = path.display().to_string();
        Self::parse(&name, &read_file(path)?)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, ReportError> {
        let provenance = parse_provenance(name, text)?;
        if provenance.kind != "aggregate" {
            return Err(malformed(name, format!("expected an aggregate file, found `{}`", provenance.kind)));
        }
        let rows = csv_rows(name, text, AGGREGATE_HEADER)?
            .iter()
            .map(|r| {
                let strategy: String = field(name, r, 1)?;
                let strategy = strategy
                    .parse::<Strategy>()
                    .map_err(|e| malformed(name, e.to_string()))?;
                Ok((field(name, r, 0)?, strategy, field(name, r, 2)?, field(name, r, 4)?))
            })
            .collect::<Result<_, ReportError>>()?;
        Ok(AggregateFile { provenance, rows })
    }
}

/// A plot-ready table: one key column and one value column per strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl Series {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for (key, values) in &self.rows {
            let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{},{}", key, cells.join(","))?;
        }
        Ok(())
    }
}

/// Output of `compare`: the series to write plus one verdict line per trend.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub series: Vec<Series>,
    pub verdicts: Vec<String>,
}

fn config_key(config: &SimConfig, ignore: &[&str]) -> String {
    config
        .emit()
        .lines()
        .filter(|l| !ignore.iter().any(|k| l.starts_with(&format!("{k} = "))))
        .collect::<Vec<_>>()
        .join("\n")
}

fn ensure_same(configs: &[(&str, &SimConfig)], ignore: &[&str]) -> Result<(), ReportError> {
    let Some((first_name, first)) = configs.first() else {
        return Ok(());
    };
    let reference = config_key(first, ignore);
    for (name, c) in &configs[1..] {
        let key = config_key(c, ignore);
        if key != reference {
            let diff: Vec<&str> = key
                .lines()
                .zip(reference.lines())
                .filter(|(a, b)| a != b)
                .map(|(a, _)| a)
                .collect();
            return Err(ReportError::Mismatch(format!(
                "{name} differs from {first_name} in: {}",
                diff.join("; ")
            )));
        }
    }
    Ok(())
}

/// Mean of each column; the verdict names the column with the best mean.
fn verdict(label: &str, series: &Series, higher_is_better: bool, what: &str) -> String {
    let columns = series.header.len() - 1;
    let count = series.rows.len().max(1) as f64;
    let means: Vec<f64> = (0..columns)
        .map(|c| series.rows.iter().map(|(_, v)| v[c]).sum::<f64>() / count)
        .collect();
    let names: Vec<&str> = series.header[1..]
        .iter()
        .map(|h| h.rsplit('_').next().unwrap_or(h))
        .collect();
    let mut best = 0;
    for c in 1..columns {
        let better = if higher_is_better { means[c] > means[best] } else { means[c] < means[best] };
        if better {
            best = c;
        }
    }
    let detail: Vec<String> = names
        .iter()
        .zip(&means)
        .map(|(n, m)| format!("{n}={m:.6}"))
        .collect();
    format!(
        "verdict {label}: {} dominated ({what}; mean over {} rows: {})",
        names[best],
        series.rows.len(),
        detail.join(", ")
    )
}

/// Joins run outputs (and optionally a sweep aggregate) into figure series.
pub fn compare(runs: &[(String, RoundsFile)], aggregate: Option<&(String, AggregateFile)>) -> Result<Comparison, ReportError> {
    if runs.is_empty() && aggregate.is_none() {
        return Err(ReportError::NoInput("give at least one run or a sweep".into()));
    }
    let configs: Vec<(&str, &SimConfig)> = runs
        .iter()
        .map(|(name, f)| (name.as_str(), &f.provenance.config))
        .collect();
    ensure_same(&configs, &["strategy"])?;
    if let (Some((agg_name, agg)), Some((run_name, run))) = (aggregate, runs.first()) {
        ensure_same(
            &[(run_name.as_str(), &run.provenance.config), (agg_name.as_str(), &agg.provenance.config)],
            &["strategy", "seed", "node_count"],
        )?;
    }
    let mut by_strategy: BTreeMap<Strategy, &RoundsFile> = BTreeMap::new();
    for (name, f) in runs {
        if by_strategy.insert(f.strategy(), f).is_some() {
            return Err(ReportError::Mismatch(format!(
                "{name} repeats strategy {}",
                f.strategy()
            )));
        }
    }

    let mut out = Comparison {
        series: Vec::new(),
        verdicts: Vec::new(),
    };
    if !by_strategy.is_empty() {
        let horizon = by_strategy.values().map(|f| f.rows.len()).max().unwrap_or(0) as u64;
        let residual = |files: &[&RoundsFile], name: &str| Series {
            name: name.into(),
            header: std::iter::once("round".to_string())
                .chain(files.iter().map(|f| format!("residual_{}", f.strategy())))
                .collect(),
            rows: (0..=horizon)
                .map(|r| (r, files.iter().map(|f| f.residual_at(r)).collect()))
                .collect(),
        };
        let all: Vec<&RoundsFile> = by_strategy.values().copied().collect();
        let fig3 = residual(&all, "fig3_energy");
        out.verdicts.push(verdict("fig3_energy", &fig3, true, "residual energy vs round"));
        out.series.push(fig3);

        let fig4 = Series {
            name: "fig4_dead".into(),
            header: std::iter::once("round".to_string())
                .chain(all.iter().map(|f| format!("dead_{}", f.strategy())))
                .collect(),
            rows: (0..=horizon)
                .map(|r| (r, all.iter().map(|f| f.dead_at(r) as f64).collect()))
                .collect(),
        };
        out.verdicts.push(verdict("fig4_dead", &fig4, false, "dead nodes vs round"));
        out.series.push(fig4);

        if let (Some(minhop), Some(mecrt)) = (by_strategy.get(&Strategy::MinHop), by_strategy.get(&Strategy::Mecrt)) {
            let fig2 = residual(&[minhop, mecrt], "fig2_energy");
            out.verdicts.push(verdict(
                "fig2_energy",
                &fig2,
                true,
                "residual energy with vs without energy-aware routing",
            ));
            out.series.push(fig2);
        }
    }

    if let Some((_, agg)) = aggregate {
        let strategies: Vec<Strategy> = {
            let mut s: Vec<Strategy> = agg.rows.iter().map(|r| r.1).collect();
            s.sort();
            s.dedup();
            s
        };
        let mut grid: BTreeMap<usize, BTreeMap<Strategy, f64>> = BTreeMap::new();
        for &(n, s, _, term) in &agg.rows {
            grid.entry(n).or_default().insert(s, term);
        }
        let fig5 = Series {
            name: "fig5_lifetime".into(),
            header: std::iter::once("n".to_string())
                .chain(strategies.iter().map(|s| format!("life_{s}")))
                .collect(),
            rows: grid
                .iter()
                .map(|(&n, row)| {
                    (n as u64, strategies.iter().map(|s| row.get(s).copied().unwrap_or(f64::NAN)).collect())
                })
                .collect(),
        };
        out.verdicts.push(verdict("fig5_lifetime", &fig5, true, "mean termination lifetime vs node count"));
        out.series.push(fig5);
    }
    Ok(out)
}
