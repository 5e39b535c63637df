//! Plain-text and CSV artifact formats.

use std::fmt::Write as _;

use crate::invariant::Certification;

/// Shortest-form scientific notation with 17 significant digits, enough to
/// round-trip any `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per point, comma separated, no header.
pub fn points_csv<P: AsRef<[f64]>>(points: &[P]) -> String {
    let mut s = String::new();
    for p in points {
        let row: Vec<String> = p.as_ref().iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Header `x1,…,xn,slack`, then one row per vertex.
pub fn certification_csv(cert: &Certification) -> String {
    let n = cert.vertices.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.push("slack".into());
    let mut s = header.join(",") + "\n";
    for (v, slack) in cert.vertices.iter().zip(&cert.slack) {
        let mut row: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
        row.push(fmt_f64(*slack));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub struct SvgLayer<'a> {
    pub polygon: &'a [[f64; 2]],
    pub stroke: &'a str,
    pub fill: &'a str,
}

/// Scatter plus polygon overlays. The viewBox is the rectangle `lo..hi`
/// (usually X's bounding box) with the y axis pointing up.
pub fn svg(lo: [f64; 2], hi: [f64; 2], points: &[[f64; 2]], layers: &[SvgLayer<'_>]) -> String {
    let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
    let r = 0.004 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="600" height="{:.0}">"#,
        lo[0],
        -hi[1],
        w,
        h,
        600.0 * h / w
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-width="{:.6}">"#, 2.0 * r);
    let _ = writeln!(s, r#"<rect x="{:.6}" y="{:.6}" width="{w:.6}" height="{h:.6}" fill="none" stroke="black"/>"#, lo[0], lo[1]);
    for l in layers {
        let pts: Vec<String> = l.polygon.iter().map(|p| format!("{:.6},{:.6}", p[0], p[1])).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.5" stroke="{}"/>"#,
            pts.join(" "),
            l.fill,
            l.stroke
        );
    }
    for p in points {
        let _ = writeln!(s, r#"<circle cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="blue"/>"#, p[0], p[1]);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_digits() {
        for v in [0.1, -2.0 / 3.0, 1e-300, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn svg_has_polygon_and_points() {
        let sq = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let s = svg(
            [-1.0, -1.0],
            [1.0, 1.0],
            &[[0.0, 0.5]],
            &[SvgLayer {
                polygon: &sq,
                stroke: "black",
                fill: "yellow",
            }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains(r#"viewBox="-1.000000 -1.000000 2.000000 2.000000""#));
        assert_eq!(s.matches("<polygon").count(), 1);
        assert_eq!(s.matches("<circle").count(), 1);
    }
}
