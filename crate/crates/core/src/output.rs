//! Tidy CSV tables.
//!
//! Every row carries the configuration it came from (γ, σ, topology, k, N,
//! M, T, master seed) so it can be re-derived in isolation. Floats use
//! [`fmt_f64`] (17 significant digits).

use std::io::Write;

use crate::engine::RunResult;
use crate::format::fmt_f64;
use crate::harness::{PairedTable, Replicated, SweepCell};
use crate::metrics::market_shares;
use crate::model::{AgentId, ModelConfig};

pub type CsvResult = csv::Result<()>;

const CONFIG_COLUMNS: [&str; 8] = ["gamma", "sigma", "topology", "k", "N", "M", "T", "seed"];

/// Coordination number as written to output; N−1 for the complete graph.
fn coordination(config: &ModelConfig) -> usize {
    config
        .topology
        .coordination()
        .unwrap_or(config.n_agents.saturating_sub(1))
}

fn config_fields(config: &ModelConfig) -> Vec<String> {
    vec![
        fmt_f64(config.social_pressure),
        fmt_f64(config.intra_item_deviation),
        config.topology.name().to_owned(),
        coordination(config).to_string(),
        config.n_agents.to_string(),
        config.n_items.to_string(),
        config.horizon.to_string(),
        config.master_seed.to_string(),
    ]
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_owned(), fmt_f64)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

pub const SUMMARY_HEADER: [&str; 18] = [
    "gamma",
    "sigma",
    "topology",
    "k",
    "N",
    "M",
    "T",
    "R",
    "I_mean",
    "I_std",
    "Q_mean",
    "Q_std",
    "slope_mean",
    "slope_std",
    "slope_pooled",
    "seed",
    "graph_model",
    "graph_sampling",
];

fn summary_row(cell: &SweepCell) -> Vec<String> {
    let c = &cell.config;
    vec![
        fmt_f64(c.social_pressure),
        fmt_f64(c.intra_item_deviation),
        c.topology.name().to_owned(),
        coordination(c).to_string(),
        c.n_agents.to_string(),
        c.n_items.to_string(),
        c.horizon.to_string(),
        cell.replications.to_string(),
        fmt_f64(cell.i_mean),
        fmt_f64(cell.i_std),
        fmt_f64(cell.q_mean),
        fmt_f64(cell.q_std),
        fmt_f64(cell.slope_mean),
        fmt_f64(cell.slope_std),
        fmt_f64(cell.slope_pooled),
        c.master_seed.to_string(),
        c.topology.model_label().to_owned(),
        if c.topology.is_random() { "per-run" } else { "fixed" }.to_owned(),
    ]
}

/// `summary.csv` / `grid.csv`: one row per cell.
pub fn write_summary<'a, W: Write>(cells: impl IntoIterator<Item = &'a SweepCell>, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for cell in cells {
        w.write_record(summary_row(cell))?;
    }
    w.flush()?;
    Ok(())
}

/// `items.csv` for a replicated run: one row per (run, item).
pub fn write_items<W: Write>(rep: &Replicated, out: W) -> CsvResult {
    let mut w = writer(out);
    let mut header = vec!["run_index", "item", "quality", "share"];
    header.extend(CONFIG_COLUMNS);
    header.push("run_seed");
    w.write_record(&header)?;
    let meta = config_fields(&rep.cell.config);
    for run in &rep.runs {
        let r = &run.report;
        for (item, (q, d)) in r.qualities.iter().zip(&r.shares).enumerate() {
            let mut row = vec![
                run.run_index.to_string(),
                item.to_string(),
                fmt_f64(*q),
                fmt_f64(*d),
            ];
            row.extend(meta.iter().cloned());
            row.push(run.run_seed.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `items.csv` in paired mode: one `share@γ` column per γ.
pub fn write_paired_items<W: Write>(table: &PairedTable, config: &ModelConfig, out: W) -> CsvResult {
    let mut w = writer(out);
    let mut header: Vec<String> = ["run_index", "item", "quality"].map(String::from).to_vec();
    header.extend(table.gammas.iter().map(|g| format!("share@{g}")));
    header.extend(CONFIG_COLUMNS[1..].iter().map(|s| s.to_string()));
    header.push("run_seed".into());
    w.write_record(&header)?;
    let meta = &config_fields(config)[1..];
    for run in &table.runs {
        for (item, q) in run.qualities.iter().enumerate() {
            let mut row = vec![run.run_index.to_string(), item.to_string(), fmt_f64(*q)];
            row.extend(run.reports.iter().map(|r| fmt_f64(r.shares[item])));
            row.extend(meta.iter().cloned());
            row.push(run.run_seed.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `runs.csv`: per-run scalar metrics.
pub fn write_runs<W: Write>(rep: &Replicated, out: W) -> CsvResult {
    let mut w = writer(out);
    let mut header = vec!["run_index", "run_seed", "I", "Q", "slope", "intercept"];
    header.extend(CONFIG_COLUMNS);
    w.write_record(&header)?;
    let meta = config_fields(&rep.cell.config);
    for run in &rep.runs {
        let r = &run.report;
        let mut row = vec![
            run.run_index.to_string(),
            run.run_seed.to_string(),
            fmt_f64(r.inequality),
            opt(r.quartile_diff),
            opt(r.slope),
            opt(r.intercept),
        ];
        row.extend(meta.iter().cloned());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `trajectory.csv`: share of every item after every step.
pub fn write_trajectories<'a, W: Write>(results: impl IntoIterator<Item = &'a RunResult>, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["run_index", "step", "item", "share"])?;
    for result in results {
        let Some(rows) = &result.share_trajectory else {
            continue;
        };
        for (t, shares) in rows.iter().enumerate() {
            for (item, d) in shares.iter().enumerate() {
                w.write_record([
                    result.run_index.to_string(),
                    (t + 1).to_string(),
                    item.to_string(),
                    fmt_f64(*d),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `consumption.csv`: one `(run_index, agent, item)` row per consumed pair.
pub fn write_consumption<'a, W: Write>(results: impl IntoIterator<Item = &'a RunResult>, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["run_index", "agent", "item"])?;
    for result in results {
        let state = &result.final_state;
        for i in 0..state.n_agents() {
            for (item, _) in state
                .consumed_row(AgentId::new(i))
                .iter()
                .enumerate()
                .filter(|(_, &c)| c)
            {
                w.write_record([result.run_index.to_string(), i.to_string(), item.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-item summary of a single run: `item, quality, share`.
pub fn write_run_items<W: Write>(result: &RunResult, out: W) -> CsvResult {
    let mut w = writer(out);
    w.write_record(["item", "quality", "share"])?;
    let shares = market_shares(&result.final_state);
    for (item, (q, d)) in result.qualities.0.iter().zip(&shares).enumerate() {
        w.write_record([item.to_string(), fmt_f64(*q), fmt_f64(*d)])?;
    }
    w.flush()?;
    Ok(())
}
