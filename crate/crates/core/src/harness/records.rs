use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub run_id: usize,
    pub episode: usize,
    pub instant_regret: f64,
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpiRecord {
    pub run_id: usize,
    /// Episode at which the stopping rule fired; `stop_episode - 1`
    /// trajectories were sampled.
    pub stop_episode: usize,
    pub policy: Policy,
    pub gap: f64,
    pub success: bool,
}

#[derive(Serialize, Deserialize)]
struct BpiRow {
    run_id: usize,
    stop_episode: usize,
    gap: f64,
    success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub episode: usize,
    pub mean_cum_regret: f64,
    pub ci95_half_width: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub rows: Vec<AggregateRow>,
    /// Set when some episode had a single run, so its half-width is a
    /// placeholder 0.
    pub single_run: bool,
}

/// Per-episode mean cumulative regret with a normal 95% half-width
/// `1.96 * sd / sqrt(runs)`, `sd` the sample standard deviation.
pub fn aggregate(records: &[RegretRecord]) -> Aggregate {
    let mut by_episode: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_episode
            .entry(r.episode)
            .or_default()
            .push(r.cumulative_regret);
    }
    let mut single_run = false;
    let rows = by_episode
        .into_iter()
        .map(|(episode, values)| {
            let runs = values.len();
            let mean = values.iter().sum::<f64>() / runs as f64;
            let half = if runs < 2 {
                single_run = true;
                0.0
            } else {
                let var =
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
                1.96 * var.sqrt() / (runs as f64).sqrt()
            };
            AggregateRow {
                episode,
                mean_cum_regret: mean,
                ci95_half_width: half,
                runs,
            }
        })
        .collect();
    Aggregate { rows, single_run }
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub const REGRET_HEADER: &str = "run_id,episode,instant_regret,cumulative_regret";
pub const BPI_HEADER: &str = "run_id,stop_episode,gap,success";
pub const AGGREGATE_HEADER: &str = "episode,mean_cum_regret,ci95_half_width,runs";

fn write_header_only(header: &str, mut out: impl Write) -> Result<()> {
    writeln!(out, "{header}")?;
    Ok(())
}

pub fn write_regret_csv(records: &[RegretRecord], out: impl Write) -> Result<()> {
    if records.is_empty() {
        return write_header_only(REGRET_HEADER, out);
    }
    write_rows(records, out)
}

pub fn read_regret_csv(input: impl Read) -> Result<Vec<RegretRecord>> {
    read_rows(input)
}

pub fn write_bpi_csv(records: &[BpiRecord], out: impl Write) -> Result<()> {
    if records.is_empty() {
        return write_header_only(BPI_HEADER, out);
    }
    let rows = records.iter().map(|r| BpiRow {
        run_id: r.run_id,
        stop_episode: r.stop_episode,
        gap: r.gap,
        success: r.success,
    });
    write_rows(rows, out)
}

/// Reads `(run_id, stop_episode, gap, success)` rows; policies are not stored.
pub fn read_bpi_csv(input: impl Read) -> Result<Vec<(usize, usize, f64, bool)>> {
    let rows: Vec<BpiRow> = read_rows(input)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.run_id, r.stop_episode, r.gap, r.success))
        .collect())
}

pub fn write_aggregate_csv(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    if rows.is_empty() {
        return write_header_only(AGGREGATE_HEADER, out);
    }
    write_rows(rows, out)
}

pub fn read_aggregate_csv(input: impl Read) -> Result<Vec<AggregateRow>> {
    read_rows(input)
}
