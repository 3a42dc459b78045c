//! Self-rendered SVG heatmaps of sweep results.
//!
//! The renderer consumes `results.csv` (+ optional `overlays.csv`) and
//! emits plain SVG elements — rects for cells, polylines for threshold
//! curves, a gradient colorbar — with no drawing dependency.  Output is a
//! pure function of the parsed inputs, so identical inputs give identical
//! bytes.  Coordinates use fixed two-decimal formatting; data labels use
//! shortest-roundtrip formatting trimmed of trailing zeros.

use std::fmt::Write as _;
use std::path::Path;

use minority_sbm::{Error, Result};

/// Which per-cell statistic colors the heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    MeanQ,
    MeanAmi,
}

impl Field {
    fn label(self) -> &'static str {
        match self {
            Field::MeanQ => "mean detected q",
            Field::MeanAmi => "mean AMI",
        }
    }
}

/// One parsed `results.csv` row.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub method: String,
    pub rho: f64,
    pub delta: f64,
    pub valid: bool,
    pub mean_ami: Option<f64>,
    pub mean_q: Option<f64>,
}

/// One parsed `overlays.csv` row.
#[derive(Debug, Clone)]
pub struct OverlayRow {
    pub curve: String,
    pub delta: f64,
    pub rho: f64,
}

fn malformed(path: &Path, line: usize, detail: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{} line {line}: {detail}", path.display()))
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse().map_err(|e| malformed(path, line, format!("`{tok}`: {e}")))
}

fn parse_opt_f64(path: &Path, line: usize, tok: &str) -> Result<Option<f64>> {
    if tok.is_empty() {
        return Ok(None);
    }
    parse_f64(path, line, tok).map(Some)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    let header = "method,rho,delta,valid,mean_ami,std_ami,mean_q,n_ok,n_fail";
    match lines.next() {
        Some((_, h)) if h == header => {}
        other => {
            return Err(malformed(path, 1, format!("expected header `{header}`, got {other:?}")))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 9 {
            return Err(malformed(path, i + 1, format!("expected 9 fields, got {}", parts.len())));
        }
        rows.push(ResultRow {
            method: parts[0].to_string(),
            rho: parse_f64(path, i + 1, parts[1])?,
            delta: parse_f64(path, i + 1, parts[2])?,
            valid: match parts[3] {
                "true" => true,
                "false" => false,
                other => return Err(malformed(path, i + 1, format!("bad valid flag `{other}`"))),
            },
            mean_ami: parse_opt_f64(path, i + 1, parts[4])?,
            mean_q: parse_opt_f64(path, i + 1, parts[6])?,
        });
    }
    if rows.is_empty() {
        return Err(malformed(path, 1, "no data rows"));
    }
    Ok(rows)
}

pub fn read_overlays(path: &Path) -> Result<Vec<OverlayRow>> {
    let content = std::fs::read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, "curve,delta,rho")) => {}
        other => {
            return Err(malformed(path, 1, format!("expected header `curve,delta,rho`, got {other:?}")))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(malformed(path, i + 1, format!("expected 3 fields, got {}", parts.len())));
        }
        rows.push(OverlayRow {
            curve: parts[0].to_string(),
            delta: parse_f64(path, i + 1, parts[1])?,
            rho: parse_f64(path, i + 1, parts[2])?,
        });
    }
    Ok(rows)
}

/// Twenty viridis anchor colors, expanded to a 256-stop lookup at build.
const VIRIDIS_ANCHORS: [[u8; 3]; 20] = [
    [0x44, 0x01, 0x54],
    [0x48, 0x15, 0x67],
    [0x48, 0x26, 0x77],
    [0x45, 0x37, 0x81],
    [0x40, 0x47, 0x88],
    [0x39, 0x56, 0x8C],
    [0x33, 0x63, 0x8D],
    [0x2D, 0x70, 0x8E],
    [0x28, 0x7D, 0x8E],
    [0x23, 0x8A, 0x8D],
    [0x1F, 0x96, 0x8B],
    [0x20, 0xA3, 0x87],
    [0x29, 0xAF, 0x7F],
    [0x3C, 0xBB, 0x75],
    [0x55, 0xC6, 0x67],
    [0x73, 0xD0, 0x55],
    [0x95, 0xD8, 0x40],
    [0xB8, 0xDE, 0x29],
    [0xDC, 0xE3, 0x19],
    [0xFD, 0xE7, 0x25],
];

/// Linear interpolation through the anchors at `t` in [0, 1].
fn viridis(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let pos = t * (VIRIDIS_ANCHORS.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(VIRIDIS_ANCHORS.len() - 1);
    let frac = pos - lo as f64;
    let mut rgb = [0u8; 3];
    for (i, c) in rgb.iter_mut().enumerate() {
        let a = VIRIDIS_ANCHORS[lo][i] as f64;
        let b = VIRIDIS_ANCHORS[hi][i] as f64;
        *c = (a + (b - a) * frac).round() as u8;
    }
    rgb
}

fn hex(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Shortest decimal for a data label, trimmed of trailing zeros.
fn fmt_label(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn curve_color(curve: &str) -> &'static str {
    match curve {
        "snr" => "#000000",
        "lambda3" => "#e41a1c",
        "lambda4" => "#4daf4a",
        _ => "#888888",
    }
}

/// Sorted, deduplicated axis values (grid CSVs repeat exact bit patterns,
/// so equality comparison is safe here).
fn axis_values(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values.dedup();
    values
}

/// Renders the heatmap for one method.  `method = None` picks the first
/// method appearing in the rows.
pub fn render(
    rows: &[ResultRow],
    overlays: &[OverlayRow],
    field: Field,
    method: Option<&str>,
) -> Result<String> {
    let method = match method {
        Some(m) => m.to_string(),
        None => rows[0].method.clone(),
    };
    let rows: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method).collect();
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!("no rows for method `{method}`")));
    }
    let xs = axis_values(rows.iter().map(|r| r.rho).collect());
    let ys = axis_values(rows.iter().map(|r| r.delta).collect());
    let (nx, ny) = (xs.len(), ys.len());

    // Value range: AMI uses the fixed [0, 1] scale; detected q spans from
    // one to the largest observed mean (at least two so ER grids render).
    let value = |r: &ResultRow| match field {
        Field::MeanQ => r.mean_q,
        Field::MeanAmi => r.mean_ami,
    };
    let (vmin, vmax) = match field {
        Field::MeanAmi => (0.0, 1.0),
        Field::MeanQ => {
            let top = rows
                .iter()
                .filter_map(|r| value(r))
                .fold(2.0_f64, f64::max)
                .ceil();
            (1.0, top)
        }
    };

    // Layout.
    let (left, top) = (70.0, 46.0);
    let (pw, ph) = (560.0_f64, 440.0_f64);
    let (width, height) = (left + pw + 150.0, top + ph + 54.0);
    let cw = pw / nx as f64;
    let ch = ph / ny as f64;
    // Data-to-pixel maps: cell centers for curves, cell corners for rects;
    // the delta axis increases upward.
    let x_center = |rho: f64| -> Option<f64> {
        if nx == 1 {
            return Some(left + pw / 2.0);
        }
        let (lo, hi) = (xs[0], xs[nx - 1]);
        if rho < lo || rho > hi {
            return None;
        }
        Some(left + cw / 2.0 + (rho - lo) / (hi - lo) * (pw - cw))
    };
    let y_center = |delta: f64| -> Option<f64> {
        if ny == 1 {
            return Some(top + ph / 2.0);
        }
        let (lo, hi) = (ys[0], ys[ny - 1]);
        if delta < lo || delta > hi {
            return None;
        }
        Some(top + ph - ch / 2.0 - (delta - lo) / (hi - lo) * (ph - ch))
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n"
    );
    svg.push_str(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">\
         <rect width=\"6\" height=\"6\" fill=\"#d9d9d9\"/>\
         <path d=\"M0,6 l6,-6\" stroke=\"#9e9e9e\" stroke-width=\"1\"/></pattern></defs>\n",
    );
    let _ = write!(svg, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n");
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" fill=\"#111111\">{} \u{2014} {}</text>\n",
        left,
        field.label(),
        method
    );

    // Heatmap cells.
    for row in &rows {
        let xi = xs.iter().position(|&x| x == row.rho).unwrap();
        let yi = ys.iter().position(|&y| y == row.delta).unwrap();
        let x = left + xi as f64 * cw;
        let y = top + ph - (yi + 1) as f64 * ch;
        let fill = match (row.valid, value(row)) {
            (true, Some(v)) => {
                let t = if vmax > vmin { (v - vmin) / (vmax - vmin) } else { 0.5 };
                hex(viridis(t))
            }
            _ => "url(#hatch)".to_string(),
        };
        let _ = write!(
            svg,
            "<rect class=\"cell\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" \
             fill=\"{fill}\"/>\n"
        );
    }
    let _ = write!(
        svg,
        "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    );

    // Threshold curves.
    let mut curve_names: Vec<&str> = overlays.iter().map(|o| o.curve.as_str()).collect();
    curve_names.sort_unstable();
    curve_names.dedup();
    for name in &curve_names {
        let mut pts: Vec<(f64, f64)> = overlays
            .iter()
            .filter(|o| o.curve == *name)
            .filter_map(|o| Some((x_center(o.rho)?, y_center(o.delta)?)))
            .collect();
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            path.join(" "),
            curve_color(name)
        );
    }

    // Axis ticks: ends plus quarters when the grid is wide enough.
    let tick_indices = |len: usize| -> Vec<usize> {
        let mut idx: Vec<usize> = if len >= 5 {
            vec![0, len / 4, len / 2, 3 * len / 4, len - 1]
        } else {
            (0..len).collect()
        };
        idx.dedup();
        idx
    };
    for i in tick_indices(nx) {
        let x = left + cw / 2.0 + i as f64 * cw;
        let _ = write!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#111111\" \
             text-anchor=\"middle\">{}</text>\n",
            top + ph + 16.0,
            fmt_label(xs[i])
        );
    }
    for i in tick_indices(ny) {
        let y = top + ph - ch / 2.0 - i as f64 * ch;
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-size=\"11\" fill=\"#111111\" \
             text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>\n",
            left - 6.0,
            fmt_label(ys[i])
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" fill=\"#111111\" \
         text-anchor=\"middle\">rho</text>\n",
        left + pw / 2.0,
        top + ph + 40.0
    );
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"13\" fill=\"#111111\" \
         transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">delta</text>\n",
        top + ph / 2.0,
        top + ph / 2.0
    );

    // Colorbar.
    let bar_x = left + pw + 24.0;
    let bar_w = 16.0;
    let strips = 128usize;
    let strip_h = ph / strips as f64;
    for s in 0..strips {
        let t = (s as f64 + 0.5) / strips as f64;
        let y = top + ph - (s + 1) as f64 * strip_h;
        let _ = write!(
            svg,
            "<rect x=\"{bar_x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{:.2}\" \
             fill=\"{}\"/>\n",
            strip_h + 0.5,
            hex(viridis(t))
        );
    }
    let _ = write!(
        svg,
        "<rect x=\"{bar_x:.2}\" y=\"{top:.2}\" width=\"{bar_w:.2}\" height=\"{ph:.2}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#111111\">{}</text>\n",
        bar_x + bar_w + 6.0,
        top + 10.0,
        fmt_label(vmax)
    );
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#111111\">{}</text>\n",
        bar_x + bar_w + 6.0,
        top + ph,
        fmt_label(vmin)
    );

    // Legend for the curves and the invalid-cell hatch.
    let legend_x = bar_x + bar_w + 44.0;
    let mut legend_y = top + 10.0;
    for name in &curve_names {
        let _ = write!(
            svg,
            "<line x1=\"{legend_x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{}\" stroke-width=\"2\"/>\n",
            legend_y - 4.0,
            legend_x + 22.0,
            legend_y - 4.0,
            curve_color(name)
        );
        let _ = write!(
            svg,
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"11\" fill=\"#111111\">{name}</text>\n",
            legend_x + 28.0
        );
        legend_y += 18.0;
    }
    let _ = write!(
        svg,
        "<rect x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"22\" height=\"10\" fill=\"url(#hatch)\" \
         stroke=\"#333333\" stroke-width=\"0.5\"/>\n",
        legend_y - 12.0
    );
    let _ = write!(
        svg,
        "<text x=\"{:.2}\" y=\"{legend_y:.2}\" font-size=\"11\" fill=\"#111111\">invalid</text>\n",
        legend_x + 28.0
    );

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for (i, rho) in [0.1, 0.3, 0.5].iter().enumerate() {
            for (j, delta) in [0.001, 0.002].iter().enumerate() {
                let valid = !(i == 2 && j == 1);
                rows.push(ResultRow {
                    method: "bh+nec".into(),
                    rho: *rho,
                    delta: *delta,
                    valid,
                    mean_ami: valid.then_some(0.1 * (i + j) as f64),
                    mean_q: valid.then_some(1.0 + (i + j) as f64),
                });
            }
        }
        rows
    }

    #[test]
    fn render_emits_cells_curves_and_hatch() {
        let overlays = vec![
            OverlayRow { curve: "snr".into(), delta: 0.001, rho: 0.2 },
            OverlayRow { curve: "snr".into(), delta: 0.002, rho: 0.4 },
        ];
        let svg = render(&sample_rows(), &overlays, Field::MeanQ, None).unwrap();
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("class=\"cell\"").count(), 6);
        assert_eq!(svg.matches("url(#hatch)").count(), 2, "one masked cell + legend");
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("mean detected q"));
    }

    #[test]
    fn render_is_deterministic_and_method_filter_works() {
        let rows = sample_rows();
        let a = render(&rows, &[], Field::MeanAmi, Some("bh+nec")).unwrap();
        let b = render(&rows, &[], Field::MeanAmi, Some("bh+nec")).unwrap();
        assert_eq!(a, b);
        assert!(render(&rows, &[], Field::MeanAmi, Some("bp+mfe")).is_err());
    }

    #[test]
    fn labels_trim_trailing_zeros() {
        assert_eq!(fmt_label(0.25), "0.25");
        assert_eq!(fmt_label(0.0038), "0.0038");
        assert_eq!(fmt_label(5.0), "5");
        assert_eq!(fmt_label(0.0), "0");
    }

    #[test]
    fn viridis_endpoints_match_anchors() {
        assert_eq!(hex(viridis(0.0)), "#440154");
        assert_eq!(hex(viridis(1.0)), "#fde725");
    }
}
