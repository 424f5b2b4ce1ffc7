//! Minimal SVG emission: embedding points as circles, projected generators
//! as polylines whose stroke color ramps with arc length.

use topodr_embed::eval::ProjectedGenerator;
use topodr_core::PointCloud;

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 40.0;

pub fn render(z: &PointCloud, generators: &[ProjectedGenerator]) -> String {
    assert_eq!(z.dim(), 2, "SVG rendering expects a planar cloud");
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in z.iter_points() {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let tx = |x: f64| MARGIN + (x - min_x) * scale;
    // SVG y grows downward.
    let ty = |y: f64| CANVAS - MARGIN - (y - min_y) * scale;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" \
         viewBox=\"0 0 {c} {c}\">\n<rect width=\"{c}\" height=\"{c}\" fill=\"white\"/>\n",
        c = CANVAS
    ));

    for gen in generators {
        let poly = &gen.smoothed;
        let m = poly.len();
        if m < 2 {
            continue;
        }
        // Arc-length parameterization drives the color ramp.
        let mut cum = vec![0.0_f64; m + 1];
        for k in 0..m {
            let a = poly[k];
            let b = poly[(k + 1) % m];
            cum[k + 1] = cum[k] + ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
        let total = cum[m].max(1e-12);
        for k in 0..m {
            let a = poly[k];
            let b = poly[(k + 1) % m];
            let t = 0.5 * (cum[k] + cum[k + 1]) / total;
            let (r, g, bl) = ramp(t);
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"rgb({r},{g},{bl})\" stroke-width=\"3\" stroke-opacity=\"0.65\" \
                 stroke-linecap=\"round\"/>\n",
                tx(a[0]),
                ty(a[1]),
                tx(b[0]),
                ty(b[1]),
            ));
        }
    }

    for p in z.iter_points() {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"#333333\"/>\n",
            tx(p[0]),
            ty(p[1])
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Cyclic hue ramp over [0, 1].
fn ramp(t: f64) -> (u8, u8, u8) {
    let h = (t.clamp(0.0, 1.0) * 360.0) % 360.0;
    let (hh, s, v) = (h / 60.0, 0.85_f64, 0.9_f64);
    let c = v * s;
    let x = c * (1.0 - ((hh % 2.0) - 1.0).abs());
    let (r, g, b) = match hh as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (((r + m) * 255.0) as u8, ((g + m) * 255.0) as u8, ((b + m) * 255.0) as u8)
}
