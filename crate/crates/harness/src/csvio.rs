//! CSV emission and parsing of the result table.
//!
//! The header is fixed and the float formatting deterministic, so identical
//! configs and seeds reproduce identical files (wall-clock column aside).

use crate::runner::ResultRow;
use polarsense_core::{Error, Result};
use std::io::{BufRead, Write};

pub const CSV_HEADER: &str =
    "baseline,sweep_axis,sweep_value,seed,nmse_db,target_sinr_db,min_user_sinr_db,sum_rate,outer_iters,wall_s,feasible";

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn write_csv<W: Write>(w: &mut W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.baseline,
            r.sweep_axis,
            fmt(r.sweep_value),
            r.seed,
            fmt(r.nmse_db),
            fmt(r.target_sinr_db),
            fmt(r.min_user_sinr_db),
            fmt(r.sum_rate),
            r.outer_iters,
            fmt(r.wall_s),
            r.feasible
        )?;
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    if s == "nan" {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::Config(format!("line {line}: bad float '{s}'")))
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        if i == 0 {
            if line != CSV_HEADER {
                return Err(Error::Config("unexpected CSV header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::Config(format!("line {}: expected 11 fields", i + 1)));
        }
        rows.push(ResultRow {
            baseline: f[0].to_string(),
            sweep_axis: f[1].to_string(),
            sweep_value: parse_f64(f[2], i + 1)?,
            seed: f[3]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad seed", i + 1)))?,
            nmse_db: parse_f64(f[4], i + 1)?,
            target_sinr_db: parse_f64(f[5], i + 1)?,
            min_user_sinr_db: parse_f64(f[6], i + 1)?,
            sum_rate: parse_f64(f[7], i + 1)?,
            outer_iters: f[8]
                .parse()
                .map_err(|_| Error::Config(format!("line {}: bad iteration count", i + 1)))?,
            wall_s: parse_f64(f[9], i + 1)?,
            feasible: f[10] == "true",
        });
    }
    Ok(rows)
}

/// Median and interquartile range of a sample (NaNs dropped).
pub fn median_iqr(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| -> f64 {
        let idx = p * (v.len() - 1) as f64;
        let lo = idx.floor() as usize;
        let hi = idx.ceil() as usize;
        if lo == hi {
            v[lo]
        } else {
            v[lo] + (idx - lo as f64) * (v[hi] - v[lo])
        }
    };
    Some((q(0.5), q(0.25), q(0.75)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            baseline: "tx_rx".into(),
            sweep_axis: "gamma_th_db".into(),
            sweep_value: 10.0,
            seed: 3,
            nmse_db: -7.25,
            target_sinr_db: 12.5,
            min_user_sinr_db: 10.0,
            sum_rate: 6.2,
            outer_iters: 4,
            wall_s: 0.37,
            feasible: true,
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let rows = vec![
            sample_row(),
            ResultRow {
                baseline: "static".into(),
                nmse_db: f64::NAN,
                feasible: false,
                ..sample_row()
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back = read_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], rows[0]);
        assert!(back[1].nmse_db.is_nan());
        assert!(!back[1].feasible);

        // writing again reproduces the bytes
        let mut buf2 = Vec::new();
        write_csv(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn median_and_quartiles() {
        let (m, q1, q3) = median_iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m, 3.0);
        assert_eq!(q1, 2.0);
        assert_eq!(q3, 4.0);
        assert!(median_iqr(&[f64::NAN]).is_none());
    }
}
