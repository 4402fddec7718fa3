//! Static SVG of a per-time effect series with its interval band.

use std::fmt::Write;

use crate::output::EffectRow;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 40.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    // flat series still get a visible band
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5f64.max(0.1 * lo.abs()) };
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn effects_svg(title: &str, rows: &[EffectRow]) -> String {
    let k_lo = rows.iter().map(|r| r.k).min().unwrap_or(0) as f64;
    let k_hi = rows.iter().map(|r| r.k).max().unwrap_or(1) as f64;
    let k_span = if k_hi > k_lo { k_hi - k_lo } else { 1.0 };
    let (y_lo, y_hi) = range(rows.iter().flat_map(|r| [Some(r.point), r.ci_low, r.ci_high, r.oracle]).flatten());
    let x = |k: usize| LEFT + (k as f64 - k_lo) / k_span * (W - LEFT - RIGHT);
    let y = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#, escape(title));
    if rows.iter().all(|r| r.ci_low.is_some() && r.ci_high.is_some()) {
        let mut pts: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", x(r.k), y(r.ci_high.unwrap_or(r.point)))).collect();
        pts.extend(rows.iter().rev().map(|r| format!("{:.2},{:.2}", x(r.k), y(r.ci_low.unwrap_or(r.point)))));
        let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##, pts.join(" "));
    }
    if y_lo < 0.0 && y_hi > 0.0 {
        let _ = writeln!(s, r#"<line x1="{LEFT}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#, W - RIGHT, y(0.0), y(0.0));
    }
    let line = |get: &dyn Fn(&EffectRow) -> Option<f64>| -> String {
        rows.iter().filter_map(|r| get(r).map(|v| format!("{:.2},{:.2}", x(r.k), y(v)))).collect::<Vec<_>>().join(" ")
    };
    if rows.iter().any(|r| r.oracle.is_some()) {
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-dasharray="6 3"/>"##, line(&|r| r.oracle));
    }
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##, line(&|r| Some(r.point)));
    // axes with end ticks
    let (bx, by) = (H - BOTTOM, W - RIGHT);
    let _ = writeln!(s, r#"<line x1="{LEFT}" x2="{by}" y1="{bx}" y2="{bx}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" x2="{LEFT}" y1="{TOP}" y2="{bx}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="{}" text-anchor="middle">{k_lo}</text>"#, bx + 16.0);
    let _ = writeln!(s, r#"<text x="{by}" y="{}" text-anchor="end">{k_hi}</text>"#, bx + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#, (LEFT + by) / 2.0, bx + 32.0);
    for v in [y_lo, y_hi] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, y(v) + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, v: f64) -> EffectRow {
        EffectRow { k, point: v, se: None, ci_low: Some(v - 0.1), ci_high: Some(v + 0.1), oracle: None }
    }

    #[test]
    fn constant_series_draws_a_flat_band() {
        let svg = effects_svg("flat", &[row(2, 0.3), row(3, 0.3), row(4, 0.3)]);
        assert!(svg.contains("<polygon") && svg.contains("<polyline"));
        // all three points share one y coordinate
        let line = svg.lines().find(|l| l.contains("stroke-width=\"1.5\"")).unwrap();
        let ys: Vec<&str> = line.split('"').nth(1).unwrap().split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn title_is_escaped() {
        assert!(effects_svg("a<b", &[row(1, 0.0)]).contains("a&lt;b"));
    }
}
