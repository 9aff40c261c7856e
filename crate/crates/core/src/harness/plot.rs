//! A small SVG scatter of achieved TV per trial against the utility bound.

use std::fmt::Write as _;
use std::path::Path;

use super::experiment::{ResultRow, RESULT_SCHEMA_VERSION};
use super::{HarnessError, Result};

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

/// Green dots succeed, red dots miss the bound, ⊥ trials are red crosses on
/// the top edge. The dashed line is the largest bound in the file.
pub fn render_svg(rows: &[ResultRow]) -> String {
    let n = rows.len().max(1) as f64;
    let bound = rows.iter().map(|r| r.bound).fold(0.0_f64, f64::max);
    let ymax = rows.iter().filter_map(|r| r.achieved_tv).fold(bound, f64::max).clamp(1e-3, 1.0) * 1.1;
    let x = |i: usize| PAD + (W - 2.0 * PAD) * (i as f64 + 0.5) / n;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v / ymax).min(1.0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let title = rows.first().map(|r| r.experiment_id.as_str()).unwrap_or("empty");
    let _ = writeln!(s, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="8" y="{PAD}" font-family="sans-serif" font-size="11">{ymax:.3}</text><text x="8" y="{}" font-family="sans-serif" font-size="11">0</text>"#,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" x2="{}" y1="{b:.2}" y2="{b:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
        W - PAD,
        b = y(bound)
    );
    for (i, r) in rows.iter().enumerate() {
        match r.achieved_tv {
            Some(tv) => {
                let c = if r.success { "seagreen" } else { "crimson" };
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, x(i), y(tv));
            }
            None => {
                let (cx, cy) = (x(i), PAD);
                let _ = writeln!(
                    s,
                    r#"<path d="M{} {} l6 6 m0 -6 l-6 6" stroke="crimson"/>"#,
                    cx - 3.0,
                    cy - 3.0
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads an experiment CSV and writes the plot next to nothing else.
pub fn plot_results(csv_path: &Path, svg_path: &Path) -> Result<usize> {
    let mut rd = csv::Reader::from_path(csv_path)
        .map_err(|e| HarnessError::Io(format!("cannot read {}: {e}", csv_path.display())))?;
    let rows: Vec<ResultRow> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
    if let Some(r) = rows.iter().find(|r| r.schema_version != RESULT_SCHEMA_VERSION) {
        return Err(HarnessError::Config(format!(
            "schema version {} in {}, expected {RESULT_SCHEMA_VERSION}",
            r.schema_version,
            csv_path.display()
        )));
    }
    std::fs::write(svg_path, render_svg(&rows))
        .map_err(|e| HarnessError::Io(format!("cannot write {}: {e}", svg_path.display())))?;
    Ok(rows.len())
}
