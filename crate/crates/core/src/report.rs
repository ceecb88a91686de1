//! CSV output for sweeps and rate tables.
//!
//! Probabilities and rates are written as `{:.6e}`, or `NA` when undefined
//! (no accepted trials). Parameter columns use the shortest round-trip form,
//! so the same inputs always produce the same bytes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::experiment::SweepRecord;
use crate::rates::{bandwidth, post_distillation, required_duration, DistillationSpec, HardwareParams};
use crate::Result;

pub const SWEEP_HEADER: [&str; 14] = [
    "p_gen",
    "L",
    "e_init",
    "e_swap",
    "w_thr",
    "d",
    "N_d",
    "N_acc",
    "N_err",
    "p_log",
    "e_log",
    "ci_low",
    "ci_high",
    "median_total_swaps",
];

pub const RATES_HEADER: [&str; 11] = [
    "e_swap", "w_thr", "d", "e_log", "p_log", "e_post", "p_post", "N_trial", "tau", "bandwidth", "meets_target",
];

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn sci_or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), sci)
}

/// One line per `(e_swap, w_thr, d)`. `ci_low`/`ci_high` bound `e_log`.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for rec in records {
        let p = rec.params;
        for row in &rec.rows {
            let ci = row.e_log_ci;
            w.write_record([
                p.p_gen.to_string(),
                p.grid_size.to_string(),
                p.e_init.to_string(),
                p.e_swap.to_string(),
                p.w_thr.to_string(),
                row.d.to_string(),
                row.n_d.to_string(),
                row.n_acc.to_string(),
                row.n_err.to_string(),
                sci(row.p_log),
                sci_or_na(row.e_log),
                sci_or_na(ci.map(|c| c.low)),
                sci_or_na(ci.map(|c| c.high)),
                row.median_total_swaps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesRow {
    /// Sweep coordinates; `None` for a directly supplied operating point.
    pub e_swap: Option<f64>,
    pub w_thr: Option<usize>,
    pub d: Option<usize>,
    pub e_log: f64,
    pub p_log: f64,
    pub e_post: f64,
    pub p_post: f64,
    pub n_trial: f64,
    /// Entanglement-generation window.
    pub tau: f64,
    /// Distilled pairs per second.
    pub bandwidth: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatesSettings {
    pub hardware: HardwareParams,
    pub distillation: DistillationSpec,
    pub target_p_gen: f64,
    pub target_e_post: f64,
}

pub fn rates_at(settings: &RatesSettings, e_log: f64, p_log: f64) -> Result<RatesRow> {
    settings.hardware.validate()?;
    let tau = required_duration(&settings.hardware, settings.target_p_gen)?;
    let post = post_distillation(settings.distillation, e_log, p_log)?;
    Ok(RatesRow {
        e_swap: None,
        w_thr: None,
        d: None,
        e_log,
        p_log,
        e_post: post.e_post,
        p_post: post.p_post,
        n_trial: post.n_trial,
        tau,
        bandwidth: bandwidth(post.n_trial, tau, settings.hardware.tau_arr, settings.hardware.tau_meas),
        meets_target: post.e_post <= settings.target_e_post,
    })
}

/// Rates for the dominant-distance row of every record. Records whose
/// dominant row accepted nothing are skipped.
pub fn rates_from_sweep(settings: &RatesSettings, records: &[SweepRecord]) -> Result<Vec<RatesRow>> {
    let mut out = Vec::new();
    for rec in records {
        let Some(row) = rec.dominant_row() else { continue };
        let Some(e_log) = row.e_log else { continue };
        if e_log >= 1.0 {
            continue;
        }
        out.push(RatesRow {
            e_swap: Some(rec.params.e_swap),
            w_thr: Some(rec.params.w_thr),
            d: Some(row.d),
            ..rates_at(settings, e_log, row.p_log)?
        });
    }
    Ok(out)
}

/// Highest-bandwidth row among those meeting the fidelity target.
pub fn best_operating_point(rows: &[RatesRow]) -> Option<&RatesRow> {
    rows.iter()
        .filter(|r| r.meets_target)
        .max_by(|a, b| a.bandwidth.total_cmp(&b.bandwidth))
}

pub fn write_rates_csv<W: Write>(rows: &[RatesRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATES_HEADER)?;
    for r in rows {
        w.write_record([
            r.e_swap.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            r.w_thr.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            r.d.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            sci(r.e_log),
            sci(r.p_log),
            sci(r.e_post),
            sci(r.p_post),
            sci(r.n_trial),
            sci(r.tau),
            sci(r.bandwidth),
            r.meets_target.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
