//! Self-contained SVG renderers for heatmaps, weekly series, and yearly box
//! plots. Writing the markup directly keeps outputs byte-deterministic and
//! diffable in tests.

use crate::hedonometer::{SentimentRecord, YearStats};
use crate::similarity::{Metric, SimilarityMatrix};

const CELL: f64 = 52.0;
const LABEL_SPACE: f64 = 110.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\">\n\
         <rect x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" fill=\"white\"/>\n"
    )
}

/// White-to-steel-blue ramp over a normalized value.
fn heat_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 - t * 185.0).round() as u8;
    let g = (255.0 - t * 125.0).round() as u8;
    let b = (255.0 - t * 75.0).round() as u8;
    format!("rgb({r},{g},{b})")
}

fn cell_text(metric: Metric, v: f64) -> String {
    match metric {
        Metric::Mse => format!("{v:.0}"),
        Metric::Ssim | Metric::Dtw => format!("{v:.2}"),
    }
}

/// Heatmap fragment at the given origin; returns (markup, width, height).
fn heatmap_fragment(m: &SimilarityMatrix, ox: f64, oy: f64, title: &str) -> (String, f64, f64) {
    let n = m.n();
    let lo = m
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = m
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let grid_x = ox + LABEL_SPACE;
    let grid_y = oy + 40.0;
    let mut out = format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        ox + 4.0,
        oy + 20.0,
        esc(title)
    );
    for (j, label) in m.labels.iter().enumerate() {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{}</text>\n",
            grid_x + (j as f64 + 0.5) * CELL,
            grid_y - 6.0,
            esc(label)
        ));
    }
    for i in 0..n {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
            grid_x - 6.0,
            grid_y + (i as f64 + 0.6) * CELL,
            esc(&m.labels[i])
        ));
        for j in 0..n {
            let v = m.get(i, j);
            let t = (v - lo) / span;
            out.push_str(&format!(
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{CELL:.1}\" height=\"{CELL:.1}\" \
                 fill=\"{}\" stroke=\"#888\" stroke-width=\"0.5\"/>\n",
                grid_x + j as f64 * CELL,
                grid_y + i as f64 * CELL,
                heat_color(t)
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                grid_x + (j as f64 + 0.5) * CELL,
                grid_y + (i as f64 + 0.6) * CELL,
                cell_text(m.metric, v)
            ));
        }
    }
    let w = LABEL_SPACE + n as f64 * CELL + 20.0;
    let h = 40.0 + n as f64 * CELL + 16.0;
    (out, w, h)
}

/// Annotated similarity heatmap, one cell per snippet pair.
pub fn heatmap_svg(m: &SimilarityMatrix, title: &str) -> String {
    let (body, w, h) = heatmap_fragment(m, 0.0, 0.0, title);
    format!("{}{}</svg>\n", svg_open(w, h), body)
}

/// Weekly series fragment; gaps in the scores break the polyline.
fn series_fragment(
    series: &[SentimentRecord],
    ox: f64,
    oy: f64,
    w: f64,
    h: f64,
    title: &str,
) -> String {
    let plot_x = ox + 50.0;
    let plot_y = oy + 40.0;
    let plot_w = w - 70.0;
    let plot_h = h - 90.0;
    let n = series.len().max(1);
    let x_at = |i: usize| plot_x + plot_w * (i as f64 + 0.5) / n as f64;
    let y_at = |score: f64| plot_y + plot_h * (9.0 - score) / 8.0;

    let mut out = format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        ox + 4.0,
        oy + 20.0,
        esc(title)
    );
    out.push_str(&format!(
        "<rect x=\"{plot_x:.1}\" y=\"{plot_y:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" \
         fill=\"none\" stroke=\"#333\"/>\n"
    ));
    for grade in 1..=9u32 {
        let y = y_at(grade as f64);
        out.push_str(&format!(
            "<line x1=\"{plot_x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\" stroke-width=\"0.5\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"end\">{grade}</text>\n",
            plot_x + plot_w,
            plot_x - 5.0,
            y + 3.0
        ));
    }
    // Polyline segments between consecutive scored weeks; absent scores
    // leave visible gaps.
    let mut segment: Vec<String> = Vec::new();
    let mut segments: Vec<Vec<String>> = Vec::new();
    for (i, r) in series.iter().enumerate() {
        match r.score {
            Some(s) => segment.push(format!("{:.1},{:.1}", x_at(i), y_at(s))),
            None => {
                if segment.len() > 1 {
                    segments.push(std::mem::take(&mut segment));
                } else {
                    segment.clear();
                }
            }
        }
    }
    if segment.len() > 1 {
        segments.push(segment);
    }
    for seg in &segments {
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#47a3ff\" stroke-width=\"1.5\"/>\n",
            seg.join(" ")
        ));
    }
    for (i, r) in series.iter().enumerate() {
        if let Some(s) = r.score {
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"#1f6fb8\"/>\n",
                x_at(i),
                y_at(s)
            ));
        }
        let label_every = (n / 16).max(1);
        if i % label_every == 0 {
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"8\" text-anchor=\"middle\">{} w{}</text>\n",
                x_at(i),
                plot_y + plot_h + 14.0,
                r.year,
                r.week_no
            ));
        }
    }
    out
}

/// Weekly sentiment line chart on the 1..9 happiness scale.
pub fn line_chart_svg(series: &[SentimentRecord], title: &str) -> String {
    let w = 900.0;
    let h = 320.0;
    let body = series_fragment(series, 0.0, 0.0, w, h, title);
    format!("{}{}</svg>\n", svg_open(w, h), body)
}

/// Yearly box plot with optional per-entry scatter overlay and top/bottom
/// word tables.
pub fn box_plot_svg(
    stats: &[YearStats],
    scatter: &[SentimentRecord],
    tables: Option<(&[(String, f64)], &[(String, f64)])>,
    title: &str,
) -> String {
    let table_w = if tables.is_some() { 260.0 } else { 0.0 };
    let w = 140.0 + stats.len() as f64 * 110.0 + table_w;
    let h = 360.0;
    let plot_x = 60.0;
    let plot_y = 50.0;
    let plot_h = h - 110.0;
    let y_at = |score: f64| plot_y + plot_h * (9.0 - score) / 8.0;

    let mut out = svg_open(w, h);
    out.push_str(&format!(
        "<text x=\"4\" y=\"24\" font-size=\"15\" font-weight=\"bold\">{}</text>\n",
        esc(title)
    ));
    for grade in 1..=9u32 {
        let y = y_at(grade as f64);
        out.push_str(&format!(
            "<line x1=\"{plot_x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#eee\" stroke-width=\"0.5\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"end\">{grade}</text>\n",
            plot_x + stats.len() as f64 * 110.0,
            plot_x - 6.0,
            y + 3.0
        ));
    }
    for (k, s) in stats.iter().enumerate() {
        let cx = plot_x + (k as f64 + 0.5) * 110.0;
        let box_w = 46.0;
        out.push_str(&format!(
            "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            y_at(s.max),
            y_at(s.min)
        ));
        for v in [s.min, s.max] {
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
                cx - box_w / 4.0,
                y_at(v),
                cx + box_w / 4.0,
                y_at(v)
            ));
        }
        out.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{box_w:.1}\" height=\"{:.1}\" \
             fill=\"#cfe5f7\" stroke=\"#333\"/>\n",
            cx - box_w / 2.0,
            y_at(s.q3),
            (y_at(s.q1) - y_at(s.q3)).max(0.5)
        ));
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"#1f4f78\" stroke-width=\"2\"/>\n",
            cx - box_w / 2.0,
            y_at(s.median),
            cx + box_w / 2.0,
            y_at(s.median)
        ));
        out.push_str(&format!(
            "<text x=\"{cx:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            plot_y + plot_h + 20.0,
            s.year
        ));
    }
    for r in scatter {
        let Some(score) = r.score else { continue };
        let Some(k) = stats.iter().position(|s| s.year == r.year) else {
            continue;
        };
        let frac = (r.week_no % 50) as f64 / 50.0;
        let cx = plot_x + k as f64 * 110.0 + 20.0 + frac * 70.0;
        out.push_str(&format!(
            "<circle cx=\"{cx:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#e07a30\" stroke=\"#7a3a10\"/>\n",
            y_at(score)
        ));
    }
    if let Some((top, bottom)) = tables {
        let tx = w - table_w + 10.0;
        let mut ty = 60.0;
        out.push_str(&format!(
            "<text x=\"{tx:.1}\" y=\"{:.1}\" font-size=\"12\" font-weight=\"bold\">top words</text>\n",
            ty - 16.0
        ));
        for (word, score) in top {
            out.push_str(&format!(
                "<text x=\"{tx:.1}\" y=\"{ty:.1}\" font-size=\"11\">{} {score:.2}</text>\n",
                esc(word)
            ));
            ty += 16.0;
        }
        ty += 24.0;
        out.push_str(&format!(
            "<text x=\"{tx:.1}\" y=\"{:.1}\" font-size=\"12\" font-weight=\"bold\">bottom words</text>\n",
            ty - 16.0
        ));
        for (word, score) in bottom {
            out.push_str(&format!(
                "<text x=\"{tx:.1}\" y=\"{ty:.1}\" font-size=\"11\">{} {score:.2}</text>\n",
                esc(word)
            ));
            ty += 16.0;
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Combined report: per-period sentiment series panel beside the canonical
/// similarity heatmap.
pub fn report_svg(series: &[SentimentRecord], heatmap: &SimilarityMatrix, title: &str) -> String {
    let series_w = 520.0;
    let (heat_body, heat_w, heat_h) = heatmap_fragment(
        heatmap,
        series_w + 10.0,
        30.0,
        &format!("canonical similarity ({})", heatmap.metric.name()),
    );
    let h = (heat_h + 40.0).max(320.0);
    let w = series_w + heat_w + 20.0;
    let mut out = svg_open(w, h);
    out.push_str(&format!(
        "<text x=\"4\" y=\"20\" font-size=\"16\" font-weight=\"bold\">{}</text>\n",
        esc(title)
    ));
    out.push_str(&series_fragment(
        series,
        0.0,
        30.0,
        series_w,
        h - 40.0,
        "weekly sentiment",
    ));
    out.push_str(&heat_body);
    out.push_str("</svg>\n");
    out
}
