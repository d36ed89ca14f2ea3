//! Static SVG 1.1 plots of the shape point cloud.

use std::fmt::Write;

use orthant::stats::ShapeSample;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Plane coordinates of a point of `x·1 = 1`: the point itself for `d = 2`,
/// barycentric placement in an equilateral triangle for `d = 3`.
fn project(c: &[f64]) -> (f64, f64) {
    match c.len() {
        2 => (c[0], c[1]),
        _ => (c[1] + 0.5 * c[2], 3f64.sqrt() / 2.0 * c[2]),
    }
}

fn reference(d: usize) -> Vec<(f64, f64)> {
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            project(&e)
        })
        .collect()
}

pub fn render(shape: &ShapeSample, d: usize, title: &str) -> String {
    let corners = reference(d);
    let points: Vec<((f64, f64), String)> = shape
        .directions
        .iter()
        .filter_map(|s| {
            let p = s.point.as_ref()?;
            Some((project(&p.coords), format!("u = {}, chi = ({})", s.u, p.exact.join(", "))))
        })
        .collect();
    let all = corners.iter().chain(points.iter().map(|(p, _)| p));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |(x, y): (f64, f64)| (MARGIN + (x - x0) * scale, SIZE - MARGIN - (y - y0) * scale);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    let outline: Vec<String> = corners
        .iter()
        .map(|&c| {
            let (x, y) = map(c);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(s, r##"<polygon points="{}" fill="none" stroke="#999999" stroke-width="1"/>"##, outline.join(" "));
    for (i, &c) in corners.iter().enumerate() {
        let (x, y) = map(c);
        let _ = writeln!(s, r##"<text x="{:.3}" y="{:.3}" font-size="12" fill="#555555">e{}</text>"##, x + 4.0, y - 4.0, i + 1);
    }
    for (p, label) in &points {
        let (x, y) = map(*p);
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="#1f5fa8"><title>{}</title></circle>"##, escape(label));
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
    fn triangle_projection() {
        assert_eq!(project(&[1.0, 0.0, 0.0]), (0.0, 0.0));
        assert_eq!(project(&[0.0, 1.0, 0.0]), (1.0, 0.0));
        let (x, y) = project(&[0.0, 0.0, 1.0]);
        assert!((x - 0.5).abs() < 1e-12 && (y - 0.75f64.sqrt()).abs() < 1e-12);
        assert_eq!(project(&[0.25, 0.75]), (0.25, 0.75));
    }
}
