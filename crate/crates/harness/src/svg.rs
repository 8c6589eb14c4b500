//! Minimal native SVG plots. Plots are conveniences; the CSV files are the
//! data of record.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, desc: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<desc>{}</desc>", escape(desc));
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(title));
    s
}

fn axis_labels(s: &mut String, xlabel: &str, ylabel: &str) {
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", LEFT + (W - LEFT - RIGHT) / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>",
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(ylabel)
    );
}

/// Grey-scale heatmap of `values[row][col]` in `[0, 1]` (white = 1); rows are
/// drawn bottom-up.
pub fn heatmap(title: &str, desc: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>], xlabel: &str, ylabel: &str) -> String {
    let mut s = open(title, desc);
    let (rows, cols) = (row_labels.len().max(1), col_labels.len().max(1));
    let cw = (W - LEFT - RIGHT) / cols as f64;
    let ch = (H - TOP - BOTTOM) / rows as f64;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let level = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            let x = LEFT + j as f64 * cw;
            let y = H - BOTTOM - (i + 1) as f64 * ch;
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cw:.1}\" height=\"{ch:.1}\" fill=\"rgb({level},{level},{level})\" stroke=\"#888\"><title>{v:.3}</title></rect>"
            );
        }
    }
    for (j, label) in col_labels.iter().enumerate() {
        let x = LEFT + (j as f64 + 0.5) * cw;
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>", H - BOTTOM + 16.0, escape(label));
    }
    for (i, label) in row_labels.iter().enumerate() {
        let y = H - BOTTOM - (i as f64 + 0.5) * ch + 4.0;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}</text>", LEFT - 6.0, escape(label));
    }
    axis_labels(&mut s, xlabel, ylabel);
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Line plot with a logarithmic y axis. Non-positive y values are dropped.
pub fn log_line_plot(title: &str, desc: &str, series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> String {
    let mut s = open(title, desc);
    let pts = || series.iter().flat_map(|(_, p)| p.iter().filter(|(_, y)| *y > 0.0 && y.is_finite()));
    let (x0, x1) = bounds(pts().map(|p| p.0));
    let (y0, y1) = bounds(pts().map(|p| p.1.log10()));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y.log10() - y0) / (y1 - y0) * (H - TOP - BOTTOM);
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for decade in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = py(10f64.powi(decade));
        let _ = writeln!(s, "<line x1=\"{LEFT}\" x2=\"{:.1}\" y1=\"{y:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>", W - RIGHT);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{decade}</text>", LEFT - 6.0, y + 4.0);
    }
    let mut xs: Vec<f64> = pts().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x}</text>", px(x), H - BOTTOM + 16.0);
    }
    for (idx, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|(_, y)| *y > 0.0 && y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", path.join(" "));
        for p in &path {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{color}\"/>");
        }
        let ly = TOP + 16.0 + 16.0 * idx as f64;
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{ly:.1}\" fill=\"{color}\" text-anchor=\"end\">{}</text>", W - RIGHT - 8.0, escape(label));
    }
    axis_labels(&mut s, xlabel, ylabel);
    s.push_str("</svg>\n");
    s
}

/// True (circles) versus estimated (crosses) points on the unit square.
pub fn scatter(title: &str, desc: &str, truth: &[(f64, f64)], estimates: &[(f64, f64)], xlabel: &str, ylabel: &str) -> String {
    let mut s = open(title, desc);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |x: f64| LEFT + x.rem_euclid(1.0) * pw;
    let py = |y: f64| H - BOTTOM - y.rem_euclid(1.0) * ph;
    let _ = writeln!(s, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>");
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{tick}</text>", LEFT + tick * pw, H - BOTTOM + 16.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{tick}</text>", LEFT - 6.0, H - BOTTOM - tick * ph + 4.0);
    }
    for &(x, y) in truth {
        let _ = writeln!(s, "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"6\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>", px(x), py(y), PALETTE[0]);
    }
    for &(x, y) in estimates {
        let (cx, cy) = (px(x), py(y));
        let _ = writeln!(
            s,
            "<path d=\"M{:.1},{:.1}L{:.1},{:.1}M{:.1},{:.1}L{:.1},{:.1}\" stroke=\"{}\" stroke-width=\"2\"/>",
            cx - 4.0,
            cy - 4.0,
            cx + 4.0,
            cy + 4.0,
            cx - 4.0,
            cy + 4.0,
            cx + 4.0,
            cy - 4.0,
            PALETTE[1]
        );
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{}\" text-anchor=\"end\">o true</text>", W - RIGHT - 8.0, TOP + 16.0, PALETTE[0]);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{}\" text-anchor=\"end\">x estimate</text>", W - RIGHT - 8.0, TOP + 32.0, PALETTE[1]);
    axis_labels(&mut s, xlabel, ylabel);
    s.push_str("</svg>\n");
    s
}
