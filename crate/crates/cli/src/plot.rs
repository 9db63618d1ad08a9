//! Static SVG plots: landmark scatter (top view) with optional association
//! lines, and a bar chart of evaluation RMSE.

use std::fmt::Write as _;

use segloc::localization::{EvaluationRow, EvaluationStatus};
use segloc::Point3;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub struct Layer<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// `(position, size_m)`
    pub points: Vec<(Point3, f64)>,
}

/// Equal-aspect x/y scatter. Circle radius follows landmark size; `links`
/// are drawn as gray segments between positions.
pub fn scatter(title: &str, layers: &[Layer], links: &[(Point3, Point3)]) -> String {
    let all = layers.iter().flat_map(|l| l.points.iter().map(|(p, _)| p)).chain(links.iter().flat_map(|(a, b)| [a, b]));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        lo = [lo[0].min(p.x), lo[1].min(p.y)];
        hi = [hi[0].max(p.x), hi[1].max(p.y)];
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([-1.0, -1.0], [1.0, 1.0]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (WIDTH - 2.0 * MARGIN) / span;
    let to_px = |p: &Point3| (MARGIN + (p.x - lo[0]) * scale, HEIGHT - MARGIN - (p.y - lo[1]) * scale);

    let mut svg = header(title);
    for (a, b) in links {
        let ((x1, y1), (x2, y2)) = (to_px(a), to_px(b));
        let _ = writeln!(svg, r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#888" stroke-width="1"/>"##);
    }
    for (k, layer) in layers.iter().enumerate() {
        let _ = writeln!(svg, r#"<g fill="{}" fill-opacity="0.6">"#, layer.color);
        for (p, size) in &layer.points {
            let (x, y) = to_px(p);
            let r = (0.5 * size * scale).clamp(1.5, 20.0);
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}"/>"#);
        }
        let _ = writeln!(svg, "</g>");
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            WIDTH - 150.0,
            ly - 9.0,
            layer.color,
            WIDTH - 135.0,
            ly,
            escape(layer.label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-size="11">x span {:.2} m</text>"#,
        HEIGHT - 12.0,
        span
    );
    svg.push_str("</svg>\n");
    svg
}

/// One bar per row; rows without an RMSE are drawn as a labelled gap.
pub fn rmse_bars(rows: &[EvaluationRow]) -> String {
    let mut svg = header("Translation RMSE per traverse pair [cm]");
    let max = rows.iter().filter_map(|r| r.rmse_cm).fold(0.0f64, f64::max).max(1e-9);
    let slot = (WIDTH - 2.0 * MARGIN) / rows.len().max(1) as f64;
    let base = HEIGHT - MARGIN;
    for (k, row) in rows.iter().enumerate() {
        let x = MARGIN + slot * k as f64;
        let label = format!("{}-{}", row.path_a, row.path_b);
        match (row.status, row.rmse_cm) {
            (EvaluationStatus::Ok, Some(v)) => {
                let h = (base - 2.0 * MARGIN) * v / max;
                let _ = writeln!(
                    svg,
                    r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#3a6ea5"/><text x="{:.2}" y="{:.2}" font-size="11">{v:.2}</text>"##,
                    x + 0.1 * slot,
                    base - h,
                    0.8 * slot,
                    x + 0.1 * slot,
                    base - h - 4.0
                );
            }
            _ => {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                    x + 0.1 * slot,
                    base - 4.0,
                    row.status.as_str()
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            x + 0.1 * slot,
            base + 16.0,
            escape(&label)
        );
    }
    let _ = writeln!(svg, r##"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="#000"/>"##, WIDTH - MARGIN);
    svg.push_str("</svg>\n");
    svg
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{MARGIN}\" y=\"24\" font-size=\"14\">{}</text>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
