//! Minimal self-contained SVG line charts for forecast tracks.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// (x, y) points; x is shared across series (week ordinals).
    pub points: &'a [(f64, f64)],
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 340.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 14.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 34.0;

/// Render a line chart. `x_labels` annotates the left and right edge of
/// the x axis (typically the first and last week's start date).
pub fn line_chart(title: &str, x_labels: (&str, &str), series: &[Series]) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if all.is_empty() || x_min == x_max {
        // Degenerate input still yields a valid, if empty, document.
        x_min = 0.0;
        x_max = 1.0;
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = (y_max - y_min) * 0.05;
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = write!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{MARGIN_LEFT}\" y=\"20\" font-size=\"14\">{}</text>\n",
        escape(title)
    );

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = write!(
        out,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"#444\"/>\n\
         <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"#444\"/>\n"
    );
    let _ = write!(
        out,
        "<text x=\"{x0:.2}\" y=\"{:.2}\">{}</text>\n\
         <text x=\"{x1:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        y0 + 16.0,
        escape(x_labels.0),
        y0 + 16.0,
        escape(x_labels.1),
    );
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        x0 - 6.0,
        y0 + 4.0,
        trim_number(y_min + pad),
        x0 - 6.0,
        y1 + 4.0,
        trim_number(y_max - pad),
    );

    // Legend, top right.
    let mut legend_x = x1;
    for s in series.iter().rev() {
        let _ = writeln!(
            out,
            "<text x=\"{legend_x:.2}\" y=\"20\" text-anchor=\"end\" fill=\"{}\">{}</text>",
            s.color,
            escape(s.label)
        );
        legend_x -= 12.0 * (s.label.len() as f64).max(4.0);
    }

    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            s.color,
            coords.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn trim_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}
