//! Result emission: CSV tables, JSON run manifests and static SVG line
//! charts. All output is deterministic: identical inputs produce identical
//! bytes (LF endings, UTF-8, shortest-roundtrip float formatting).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Name of the manifest file referenced from every CSV trailer.
pub const MANIFEST_NAME: &str = "manifest.json";

/// Shortest-roundtrip decimal form of a float ('.' decimal separator).
pub fn cell(v: f64) -> String {
    format!("{v}")
}

/// Empty cell for infeasible/missing values.
pub fn cell_opt(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

/// Renders a CSV document: header row, data rows, and a trailing comment
/// line pointing at the run manifest.
pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let _ = writeln!(out, "# manifest: {MANIFEST_NAME}");
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    std::fs::write(path, csv_document(header, rows))?;
    Ok(())
}

/// Writes the resolved run configuration as pretty JSON.
pub fn write_manifest(path: &Path, manifest: &serde_json::Value) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest)?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

/// One labeled polyline of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f6fb2", "#d1495b", "#3a7d44", "#e08e29", "#7f5aa2", "#4f4f4f"];

const W: f64 = 760.0;
const H: f64 = 480.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB_: f64 = 55.0;

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut v = Vec::new();
    while t <= hi + 1e-9 * step {
        // snap -0 to 0
        v.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    v
}

/// Static SVG line chart of the given series: axes, ticks, legend, one
/// polyline per series. A pure function of its arguments.
pub fn render_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad_y = 0.05 * (y1 - y0);
    y0 -= pad_y;
    y1 += pad_y;
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB_ - (y - y0) / (y1 - y0) * (H - MT - MB_);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        xml_escape(title)
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB_,
        W - MR,
        H - MB_
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB_
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB_,
            H - MB_ + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            H - MB_ + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ML}\" y2=\"{y}\" stroke=\"black\"/>",
            ML - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            ML - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        H - 12.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>",
        (MT + H - MB_) / 2.0,
        (MT + H - MB_) / 2.0,
        xml_escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for &(x, y) in &s.points {
            if !d.is_empty() {
                d.push(' ');
            }
            let _ = write!(d, "{:.2},{:.2}", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{d}\"/>"
        );
        let ly = MT + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            ML + 10.0,
            ML + 34.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            ML + 40.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg)?;
    Ok(())
}

fn fmt_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_determinism() {
        let rows = vec![
            vec![cell(1.0), cell(0.30000000000000004), cell_opt(None)],
            vec![cell(2.5), cell(-3.75), cell_opt(Some(7.0))],
        ];
        let doc = csv_document(&["k", "x", "y"], &rows);
        let expected = "k,x,y\n1,0.30000000000000004,\n2.5,-3.75,7\n# manifest: manifest.json\n";
        assert_eq!(doc, expected);
        assert_eq!(doc, csv_document(&["k", "x", "y"], &rows));
        assert!(!doc.contains('\r'));
    }

    #[test]
    fn csv_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], &[vec![cell(1.5), cell(2.0)]]).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("a,b\n1.5,2\n"));
        assert!(body.ends_with("# manifest: manifest.json\n"));
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST_NAME);
        let m = serde_json::json!({"seed": 7, "command": "air", "alpha": 0.2});
        write_manifest(&path, &m).unwrap();
        let back: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn svg_structure() {
        let series = vec![
            Series { label: "a<b".into(), points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)] },
            Series { label: "c".into(), points: vec![(0.0, 1.0), (2.0, -1.0)] },
        ];
        let svg = render_line_chart("t", "x (dB)", "y [bits]", &series);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
        // Pure function.
        assert_eq!(svg, render_line_chart("t", "x (dB)", "y [bits]", &series));
        // All plotted coordinates stay inside the canvas.
        for part in svg.split("points=\"").skip(1) {
            let coords = part.split('"').next().unwrap();
            for pair in coords.split(' ') {
                let (x, y) = pair.split_once(',').unwrap();
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                assert!(x >= 0.0 && x <= 760.0 && y >= 0.0 && y <= 480.0);
            }
        }
    }

    #[test]
    fn degenerate_chart_inputs() {
        let svg = render_line_chart("t", "x", "y", &[]);
        assert!(svg.contains("</svg>"));
        let flat = vec![Series { label: "f".into(), points: vec![(1.0, 2.0), (1.0, 2.0)] }];
        let svg = render_line_chart("t", "x", "y", &flat);
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn tick_spacing_is_nice() {
        for (lo, hi) in [(0.0, 10.0), (-3.7, 18.2), (0.81, 0.87), (6.0, 18.0)] {
            let t = ticks(lo, hi);
            assert!(t.len() >= 3 && t.len() <= 12, "{lo}..{hi}: {t:?}");
            assert!(t.iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
        }
    }
}
