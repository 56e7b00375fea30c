//! Minimal SVG line plot of the two boundaries.

use std::fmt::Write;

use crate::boundary::BoundaryCurves;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Both curves against `t` on linear axes labelled `t` and `y`, lower curve
/// (investment) in blue and upper curve (disinvestment) in red.
pub fn boundaries_svg(curves: &BoundaryCurves) -> String {
    let t_max = curves.horizon();
    let y_top = curves
        .y_minus()
        .iter()
        .chain(curves.y_plus())
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let step = nice_step(y_top.max(1e-12));
    let y_max = (y_top / step).ceil() * step;
    let px = |t: f64| MARGIN + (t / t_max) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y / y_max) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(0.0), px(t_max), py(0.0), py(y_max));
    let _ = writeln!(s, r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let t = t_max * i as f64 / 5.0;
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, fmt_tick(t));
    }
    let n_y = (y_max / step).round() as usize;
    for i in 0..=n_y {
        let v = step * i as f64;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(s, r#"<text id="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, (x0 + x1) / 2.0, HEIGHT - 14.0);
    let _ = writeln!(s, r#"<text id="y-label" x="16" y="{:.2}" text-anchor="middle">y</text>"#, (y0 + y1) / 2.0);
    for (id, color, values) in [("y_minus", "#c0392b", curves.y_minus()), ("y_plus", "#2c5aa0", curves.y_plus())] {
        let points: Vec<String> = curves
            .t_grid()
            .iter()
            .zip(values)
            .map(|(&t, &v)| format!("{:.3},{:.3}", px(t), py(v)))
            .collect();
        let _ = writeln!(s, r#"<polyline id="{id}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, points.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    format!("{r}")
}
