//! Minimal SVG 1.1 log-log plot.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 4] = ["#1f5fa8", "#b8461b", "#2e7d32", "#6a1b9a"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// A least-squares line `log y = slope log x + intercept`, drawn dashed.
pub struct FitLine {
    pub slope: f64,
    pub intercept: f64,
}

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a, b + 1.0)
    } else {
        (a, b)
    }
}

/// Renders the series on logarithmic axes. Non-positive points are dropped.
pub fn loglog_svg(title: &str, x_label: &str, series: &[Series], fit: Option<&FitLine>) -> String {
    let pts = |s: &Series| -> Vec<(f64, f64)> {
        s.x.iter().zip(s.y).filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite()).map(|(x, y)| (*x, *y)).collect()
    };
    let all: Vec<(f64, f64)> = series.iter().flat_map(pts).collect();
    let (xmin, xmax, ymin, ymax) = if all.is_empty() {
        (0.1, 1.0, 0.1, 1.0)
    } else {
        all.iter().fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |(a, b, c, d), (x, y)| {
            (a.min(*x), b.max(*x), c.min(*y), d.max(*y))
        })
    };
    let (x0, x1) = decades(xmin, xmax);
    let (y0, y1) = decades(ymin, ymax);
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - MARGIN);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">1e{d}</text>"#,
            H - MARGIN + 18.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - MARGIN);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">1e{d}</text>"#,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 25.0,
        escape(x_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let p = pts(ser);
        let poly: Vec<String> = p.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, poly.join(" "));
        for (x, y) in &p {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{c}"/>"#, px(*x), py(*y));
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{c}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 18.0 + 16.0 * i as f64,
            escape(ser.label)
        );
    }
    if let Some(f) = fit {
        let (a, b) = (10f64.powf(x0), 10f64.powf(x1));
        let ya = 10f64.powf(f.slope * a.log10() + f.intercept);
        let yb = 10f64.powf(f.slope * b.log10() + f.intercept);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="6,4"/>"##,
            px(a),
            py(ya),
            px(b),
            py(yb)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="#555">fit slope {:.3}</text>"##,
            MARGIN + 10.0,
            MARGIN + 18.0 + 16.0 * series.len() as f64,
            f.slope
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_and_fit() {
        let x = [0.1, 0.05, 0.025];
        let y = [0.3, 0.21, 0.15];
        let svg = loglog_svg("err <L2>", "epsilon", &[Series { label: "error", x: &x, y: &y }], Some(&FitLine { slope: 0.5, intercept: 0.0 }));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("fit slope 0.500"));
        assert!(svg.contains("err &lt;L2&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
