//! A bare line chart for one curve.

use std::fmt::Write as _;

pub fn line_chart(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (640.0, 400.0, 56.0);
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    y0 = y0.min(0.0);
    y1 = y1.max(0.0);
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{z:.2}" x2="{x2}" y2="{z:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        z = sy(0.0),
        x2 = w - m
    );
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
    let path: Vec<String> = finite.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, path.join(" "));
    for &(x, y) in &finite {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{y_label}</text>"#, h / 2.0, h / 2.0);
    let _ = writeln!(s, r#"<text x="{m}" y="{}" text-anchor="start">{x0:.3}</text>"#, h - m + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#, w - m, h - m + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, m - 4.0, m + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.4}</text>"#, m - 4.0, h - m);
    s.push_str("</svg>\n");
    s
}
