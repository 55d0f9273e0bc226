//! CSV and SVG artifact writers.
//!
//! Every writer is a pure function from results to text, so artifacts are
//! byte-stable for identical inputs: floats print through Rust's shortest
//! round-trip formatter ('.' decimal, no locale), NaN cells print as
//! "nan", and chart geometry derives only from the data.

use duplex_core::duplex::SweepRow;
use duplex_core::feasibility::RegionBoundary;

/// Shortest-round-trip float formatting; NaN spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

pub const SWEEP_CSV_HEADER: &str = "paradigm,sinr_db,trials,ms_ssim_mean,ms_ssim_stderr,\
ms_ssim_db_mean,ber_mean,failure_rate,suppression_db_mean";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.paradigm.label(),
            fmt_f64(r.sinr_db),
            r.trials,
            fmt_f64(r.ms_ssim_mean),
            fmt_f64(r.ms_ssim_stderr),
            fmt_f64(r.ms_ssim_db_mean),
            fmt_f64(r.ber_mean),
            fmt_f64(r.failure_rate),
            fmt_f64(r.suppression_db_mean),
        ));
    }
    out
}

pub fn region_csv(boundaries: &[RegionBoundary]) -> String {
    let mut out = String::from("paradigm,f_ab,f_ba\n");
    for b in boundaries {
        for v in &b.vertices {
            out.push_str(&format!(
                "{},{},{}\n",
                b.paradigm.label(),
                fmt_f64(v.f_ab),
                fmt_f64(v.f_ba)
            ));
        }
    }
    out
}

pub fn loss_csv(losses: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i, fmt_f64(*l)));
    }
    out
}

/// One chart series: a label and its polyline points.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Sweep chart: mean MS-SSIM against pre-digital SINR, one series per
/// paradigm, in CSV row order.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let label = r.paradigm.label();
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((r.sinr_db, r.ms_ssim_mean)),
            None => series.push(Series {
                label: label.into(),
                points: vec![(r.sinr_db, r.ms_ssim_mean)],
            }),
        }
    }
    line_chart(
        "Reconstruction quality across the interference sweep",
        "pre-digital SINR (dB)",
        "mean MS-SSIM",
        &series,
    )
}

/// Region chart: the Feasible-Region frontier of each paradigm.
pub fn region_svg(boundaries: &[RegionBoundary]) -> String {
    let series: Vec<Series> = boundaries
        .iter()
        .map(|b| Series {
            label: b.paradigm.label().into(),
            points: b.vertices.iter().map(|v| (v.f_ab, v.f_ba)).collect(),
        })
        .collect();
    line_chart("Feasible Regions", "F (A to B)", "F (B to A)", &series)
}

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 4] = ["#1761a0", "#c2401f", "#1f8a3b", "#6b3fa0"];

/// Self-contained SVG 1.1 line chart. Pure: geometry depends only on the
/// series values; coordinates are written with fixed precision.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (x0, x1) = padded_range(finite.iter().map(|p| p.0));
    let (y0, y1) = padded_range(finite.iter().map(|p| p.1));
    let sx = move |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (CHART_W - MARGIN_L - MARGIN_R);
    let sy = move |y: f64| CHART_H - MARGIN_B - (y - y0) / (y1 - y0) * (CHART_H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{CHART_W}\" height=\"{CHART_H}\" viewBox=\"0 0 {CHART_W} {CHART_H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">{}</text>\n",
        CHART_W / 2.0,
        esc(title)
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        CHART_H - MARGIN_B,
        CHART_W - MARGIN_R,
        CHART_H - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        CHART_H - MARGIN_B
    ));

    // ticks and grid
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let px = sx(fx);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#cccccc\"/>\n",
            MARGIN_T,
            CHART_H - MARGIN_B
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{}</text>\n",
            CHART_H - MARGIN_B + 16.0,
            tick(fx)
        ));
        let fy = y0 + (y1 - y0) * f64::from(i) / 4.0;
        let py = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#cccccc\"/>\n",
            CHART_W - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{py:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>\n",
            MARGIN_L - 6.0,
            tick(fy)
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + (CHART_W - MARGIN_L - MARGIN_R) / 2.0,
        CHART_H - 12.0,
        esc(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MARGIN_T + (CHART_H - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (CHART_H - MARGIN_T - MARGIN_B) / 2.0,
        esc(y_label)
    ));

    // series
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                pts.join(" ")
            ));
        }
        for p in &pts {
            let (px, py) = p.split_once(',').expect("point format");
            svg.push_str(&format!(
                "<circle cx=\"{px}\" cy=\"{py}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        // legend swatch
        let ly = MARGIN_T + 8.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            CHART_W - MARGIN_R - 110.0,
            ly - 10.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            CHART_W - MARGIN_R - 94.0,
            esc(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Data range with 5% padding; degenerate or empty input pads around the
/// midpoint so the scale transform stays finite.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
