use std::collections::BTreeSet;
use std::fmt::Write;

use crate::geometry::Point2;
use crate::mesh::EdgeTag;

use super::Solution;

/// Drawing options for [`render_svg`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgStyle {
    /// Viewport edge length in pixels.
    pub size: f64,
    /// Displacement magnification.
    pub scale: f64,
    pub margin: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            size: 1000.0,
            scale: 1.0,
            margin: 20.0,
        }
    }
}

/// Undeformed mesh in gray, deformed mesh in black and the deformed cell
/// boundary in blue.
pub fn render_svg(sol: &Solution, style: &SvgStyle) -> String {
    let mesh = sol.mesh();
    let (w, h) = mesh.domain_size();
    let usable = style.size - 2.0 * style.margin;
    let px = usable / w.max(h);
    let map = |p: Point2| (style.margin + p.x * px, style.size - style.margin - p.y * px);
    let deformed: Vec<Point2> = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &p)| p + sol.at(i) * style.scale)
        .collect();

    let mut edges = BTreeSet::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }

    let mut out = String::new();
    let s = style.size;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{s}" height="{s}" fill="white"/>"#).unwrap();
    let layer = |out: &mut String, color: &str, width: f64, segs: &mut dyn Iterator<Item = (Point2, Point2)>| {
        write!(out, r#"<path fill="none" stroke="{color}" stroke-width="{width}" d=""#).unwrap();
        for (a, b) in segs {
            let (ax, ay) = map(a);
            let (bx, by) = map(b);
            write!(out, "M{ax:.3} {ay:.3}L{bx:.3} {by:.3}").unwrap();
        }
        writeln!(out, r#""/>"#).unwrap();
    };
    let nodes = mesh.nodes();
    layer(&mut out, "#999999", 0.5, &mut edges.iter().map(|&(a, b)| (nodes[a], nodes[b])));
    layer(&mut out, "#000000", 0.6, &mut edges.iter().map(|&(a, b)| (deformed[a], deformed[b])));
    layer(
        &mut out,
        "#0000ff",
        2.0,
        &mut mesh
            .boundary_edges()
            .iter()
            .filter(|e| e.tag == EdgeTag::CellBoundary)
            .map(|e| (deformed[e.nodes[0]], deformed[e.nodes[1]])),
    );
    out.push_str("</svg>\n");
    out
}
