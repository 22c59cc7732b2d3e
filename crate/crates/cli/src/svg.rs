//! Self-contained log-log line charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Polyline of `(x, count)` on log-log axes, with an optional dashed line of
/// slope `reference` through the first plotted point. Points with `count = 0`
/// cannot be placed on a log axis and are left out.
pub fn loglog_chart(title: &str, points: &[(f64, u64)], reference: Option<f64>) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, c)| x > 0.0 && c > 0)
        .map(|&(x, c)| (x.log10(), (c as f64).log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
        pts.iter().map(pick).fold(init, f)
    };
    let (mut x_lo, mut x_hi) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.0),
    );
    let (mut y_lo, mut y_hi) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.1),
    );
    if x_hi - x_lo < 1e-9 {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        coords.join(" ")
    );
    for &(x, y) in &pts {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(x),
            sy(y)
        );
    }
    if let Some(slope) = reference {
        let (x0, y0) = pts[0];
        let y1 = y0 + slope * (x_hi - x0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            sx(x0),
            sy(y0),
            sx(x_hi),
            sy(y1.clamp(y_lo, y_hi))
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="firebrick">reference slope {slope:.4}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0
        );
    }
    let label = |v: f64| format!("1e{v:.2}");
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
        HEIGHT - MARGIN + 16.0,
        label(x_lo)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        label(x_hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        HEIGHT - MARGIN,
        label(y_lo)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 10.0,
        label(y_hi)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">x (log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    svg.push_str("</svg>\n");
    svg
}
