//! Minimal static SVG line plots: one curve per baseline with the median
//! across seeds and a shaded interquartile band.

use crate::csvio::median_iqr;
use crate::runner::ResultRow;
use std::collections::BTreeMap;
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const COLORS: &[&str] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    .as_slice();

struct Series {
    name: String,
    /// `(x, median, q1, q3)` sorted by `x`.
    points: Vec<(f64, f64, f64, f64)>,
}

fn aggregate(
    rows: &[ResultRow],
    x_of: impl Fn(&ResultRow) -> f64,
    y_of: impl Fn(&ResultRow) -> f64,
) -> Vec<Series> {
    let mut by_baseline: BTreeMap<String, BTreeMap<u64, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in rows {
        if !r.feasible {
            continue;
        }
        let x = x_of(r);
        let y = y_of(r);
        if !x.is_finite() {
            continue;
        }
        by_baseline
            .entry(r.baseline.clone())
            .or_default()
            .entry(x.to_bits())
            .or_default()
            .push((x, y));
    }
    by_baseline
        .into_iter()
        .map(|(name, groups)| {
            let mut points: Vec<(f64, f64, f64, f64)> = groups
                .into_values()
                .filter_map(|g| {
                    let x = g[0].0;
                    let ys: Vec<f64> = g.iter().map(|(_, y)| *y).collect();
                    median_iqr(&ys).map(|(m, q1, q3)| (x, m, q1, q3))
                })
                .collect();
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series { name, points }
        })
        .collect()
}

fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if (hi - lo).abs() < 1e-300 {
        return 0.5 * (out_lo + out_hi);
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Render one figure family into an SVG document.
pub fn render_plot(
    rows: &[ResultRow],
    title: &str,
    x_label: &str,
    y_label: &str,
    x_of: impl Fn(&ResultRow) -> f64,
    y_of: impl Fn(&ResultRow) -> f64,
) -> String {
    let series = aggregate(rows, x_of, y_of);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in &series {
        for (x, m, q1, q3) in &s.points {
            xs.push(*x);
            ys.extend_from_slice(&[*m, *q1, *q3]);
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = pad(bounds(&ys));

    let px = |x: f64| scale(x, x_lo, x_hi, MARGIN_L, WIDTH - MARGIN_R);
    let py = |y: f64| scale(y, y_lo, y_hi, HEIGHT - MARGIN_B, MARGIN_T);

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        0.5 * (MARGIN_L + WIDTH - MARGIN_R)
    );

    // axes
    let _ = write!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B,
        HEIGHT - MARGIN_B
    );
    // tick labels
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{fx:.1}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{fy:.1}</text>\n",
            px(fx),
            HEIGHT - MARGIN_B + 18.0,
            MARGIN_L - 6.0,
            py(fy) + 4.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        0.5 * (MARGIN_L + WIDTH - MARGIN_R),
        HEIGHT - 14.0,
        0.5 * (MARGIN_T + HEIGHT - MARGIN_B),
        0.5 * (MARGIN_T + HEIGHT - MARGIN_B)
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if s.points.len() > 1 {
            // IQR band
            let mut band = String::new();
            for (x, _, q1, _) in &s.points {
                let _ = write!(band, "{:.1},{:.1} ", px(*x), py(*q1));
            }
            for (x, _, _, q3) in s.points.iter().rev() {
                let _ = write!(band, "{:.1},{:.1} ", px(*x), py(*q3));
            }
            let _ = write!(
                svg,
                "<polygon points=\"{}\" fill=\"{color}\" opacity=\"0.15\"/>\n",
                band.trim_end()
            );
        }
        // median line + markers
        let mut line = String::new();
        for (x, m, _, _) in &s.points {
            let _ = write!(line, "{:.1},{:.1} ", px(*x), py(*m));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            line.trim_end()
        );
        for (x, m, _, _) in &s.points {
            let _ = write!(
                svg,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                px(*x),
                py(*m)
            );
        }
        // legend
        let ly = MARGIN_T + 16.0 * i as f64 + 10.0;
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0,
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0,
            s.name
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        return (0.0, 1.0);
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    let d = (hi - lo).max(1e-6);
    (lo - 0.05 * d, hi + 0.05 * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(baseline: &str, x: f64, seed: u64, y: f64) -> ResultRow {
        ResultRow {
            baseline: baseline.into(),
            sweep_axis: "gamma_th_db".into(),
            sweep_value: x,
            seed,
            nmse_db: y,
            target_sinr_db: y + 1.0,
            min_user_sinr_db: 0.0,
            sum_rate: 1.0,
            outer_iters: 1,
            wall_s: 0.0,
            feasible: true,
        }
    }

    #[test]
    fn renders_series_and_legend() {
        let rows = vec![
            row("static", 4.0, 0, -3.0),
            row("static", 4.0, 1, -3.5),
            row("static", 8.0, 0, -2.0),
            row("static", 8.0, 1, -2.5),
            row("tx_rx", 4.0, 0, -6.0),
            row("tx_rx", 4.0, 1, -6.5),
            row("tx_rx", 8.0, 0, -5.0),
            row("tx_rx", 8.0, 1, -5.2),
        ];
        let svg = render_plot(
            &rows,
            "test",
            "threshold (dB)",
            "NMSE (dB)",
            |r| r.sweep_value,
            |r| r.nmse_db,
        );
        assert!(svg.contains("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("polygon")); // IQR band
        assert!(svg.contains("static"));
        assert!(svg.contains("tx_rx"));
    }

    #[test]
    fn infeasible_rows_are_dropped() {
        let mut bad = row("static", 4.0, 0, f64::NAN);
        bad.feasible = false;
        let svg = render_plot(
            &[bad],
            "t",
            "x",
            "y",
            |r| r.sweep_value,
            |r| r.nmse_db,
        );
        assert!(!svg.contains("polyline points=\"\" "));
    }
}
