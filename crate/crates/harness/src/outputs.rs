//! Result emission: the row-level CSV, a median/IQR summary table and the
//! per-figure-family SVG plots.

use crate::config::{ExperimentConfig, ObjectiveKind, SweepAxis};
use crate::csvio::{median_iqr, write_csv};
use crate::runner::ResultRow;
use crate::svgplot::render_plot;
use polarsense_core::{Error, Result};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

/// Aggregate the primary metric per (baseline, sweep value).
fn summary_rows(rows: &[ResultRow], y_of: impl Fn(&ResultRow) -> f64) -> Vec<String> {
    let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    let mut order: Vec<(String, u64, f64)> = Vec::new();
    for r in rows {
        if !r.feasible {
            continue;
        }
        let key = (r.baseline.clone(), r.sweep_value.to_bits());
        if !groups.contains_key(&key) {
            order.push((r.baseline.clone(), r.sweep_value.to_bits(), r.sweep_value));
        }
        groups.entry(key).or_default().push(y_of(r));
    }
    order.sort_by(|a, b| (a.0.as_str(), a.2).partial_cmp(&(b.0.as_str(), b.2)).unwrap());
    let mut out = vec!["baseline,sweep_value,n,median,q1,q3".to_string()];
    for (name, bits, value) in order {
        let vals = &groups[&(name.clone(), bits)];
        if let Some((m, q1, q3)) = median_iqr(vals) {
            out.push(format!("{name},{value:.6},{},{m:.6},{q1:.6},{q3:.6}", vals.len()));
        }
    }
    out
}

/// The figure families the sweep can reproduce, with file names.
fn plot_jobs(cfg: &ExperimentConfig) -> Vec<(&'static str, &'static str, &'static str)> {
    // (file stem, x label, y label); y selection follows the objective
    match (cfg.objective, cfg.sweep_axis) {
        (ObjectiveKind::Mse, SweepAxis::GammaThDb) => {
            vec![("nmse_vs_threshold", "user SINR threshold (dB)", "NMSE (dB)")]
        }
        (ObjectiveKind::Mse, SweepAxis::ChiAnt) => {
            vec![("nmse_vs_xpd", "antenna XPD", "NMSE (dB)")]
        }
        (ObjectiveKind::Mse, SweepAxis::TxSnrDb) => {
            vec![("nmse_vs_snr", "transmit SNR (dB)", "NMSE (dB)")]
        }
        (ObjectiveKind::Mse, SweepAxis::NAntennas) => {
            vec![("nmse_vs_antennas", "antennas per array", "NMSE (dB)")]
        }
        (ObjectiveKind::Mse, SweepAxis::TargetAngleDeg) => {
            vec![("nmse_vs_angle", "target angle (deg)", "NMSE (dB)")]
        }
        (ObjectiveKind::Sinr, SweepAxis::GammaThDb) => vec![
            ("sinr_vs_threshold", "user SINR threshold (dB)", "target SINR (dB)"),
            ("sinr_vs_sum_rate", "sum rate (bps/Hz)", "target SINR (dB)"),
        ],
        (ObjectiveKind::Sinr, SweepAxis::TargetAngleDeg) => {
            vec![("sinr_vs_angle", "target angle (deg)", "target SINR (dB)")]
        }
        (ObjectiveKind::Sinr, _) => {
            vec![("sinr_vs_sweep", "sweep value", "target SINR (dB)")]
        }
    }
}

/// Collapse each (baseline, sweep value) group to its medians so the Pareto
/// plot has one point per sweep value.
fn pareto_rows(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut groups: BTreeMap<(String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.feasible) {
        groups.entry((r.baseline.clone(), r.sweep_value.to_bits())).or_default().push(r);
    }
    groups
        .into_values()
        .filter_map(|g| {
            let rates: Vec<f64> = g.iter().map(|r| r.sum_rate).collect();
            let sinrs: Vec<f64> = g.iter().map(|r| r.target_sinr_db).collect();
            let (rate_m, _, _) = median_iqr(&rates)?;
            let (sinr_m, _, _) = median_iqr(&sinrs)?;
            let mut row = g[0].clone();
            row.sum_rate = rate_m;
            row.target_sinr_db = sinr_m;
            Some(row)
        })
        .collect()
}

/// Write every artifact of one experiment into `out_dir`; returns the
/// written paths.
pub fn emit_outputs(
    rows: &[ResultRow],
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if rows.is_empty() {
        return Err(Error::Config("no result rows to emit".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut written = Vec::new();

    let csv_path = out_dir.join(format!("{}_results.csv", cfg.name));
    let mut f = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    write_csv(&mut f, rows).map_err(|e| io_err(&csv_path, e))?;
    written.push(csv_path);

    let y_of: fn(&ResultRow) -> f64 = match cfg.objective {
        ObjectiveKind::Mse => |r| r.nmse_db,
        ObjectiveKind::Sinr => |r| r.target_sinr_db,
    };

    let summary_path = out_dir.join(format!("{}_summary.csv", cfg.name));
    let mut f = fs::File::create(&summary_path).map_err(|e| io_err(&summary_path, e))?;
    for line in summary_rows(rows, y_of) {
        writeln!(f, "{line}").map_err(|e| io_err(&summary_path, e))?;
    }
    written.push(summary_path);

    let replay_path = out_dir.join(format!("{}_config.json", cfg.name));
    fs::write(&replay_path, cfg.to_json()).map_err(|e| io_err(&replay_path, e))?;
    written.push(replay_path);

    for (stem, x_label, y_label) in plot_jobs(cfg) {
        let svg = if stem == "sinr_vs_sum_rate" {
            let collapsed = pareto_rows(rows);
            render_plot(
                &collapsed,
                &format!("{} ({})", stem, cfg.name),
                x_label,
                y_label,
                |r| r.sum_rate,
                y_of,
            )
        } else {
            render_plot(
                rows,
                &format!("{} ({})", stem, cfg.name),
                x_label,
                y_label,
                |r| r.sweep_value,
                y_of,
            )
        };
        let path = out_dir.join(format!("{}_{}.svg", cfg.name, stem));
        fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
