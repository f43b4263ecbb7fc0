use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::{theory_rho, PhaseGrid};

#[derive(Serialize)]
struct CsvRow {
    d: usize,
    rho: f64,
    trials: usize,
    successes: usize,
    rate: Option<f64>,
}

/// One row per cell: `d, rho, trials, successes, rate`.
pub fn write_csv<W: Write>(grid: &PhaseGrid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if grid.cells.is_empty() {
        w.write_record(["d", "rho", "trials", "successes", "rate"])
            .map_err(csv_error)?;
    }
    for c in &grid.cells {
        w.serialize(CsvRow {
            d: c.d,
            rho: c.rho,
            trials: c.trials,
            successes: c.successes,
            rate: c.rate(),
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;

/// Grayscale heatmap with `d` across and `ρ` upwards: black is 0% success,
/// white 100%, cells without trials are left transparent. The theoretical
/// curves for unknown (green) and known (red) cosupport are overlaid, and
/// the `α`-scaled curve of the plan's own case is dashed.
pub fn write_svg<W: Write>(grid: &PhaseGrid, mut out: W) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let plan = &grid.plan;
    if !grid.cells.is_empty() {
        let ds = &plan.d_values;
        let mut rhos = plan.rho_values.clone();
        rhos.sort_by(f64::total_cmp);
        let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let cw = pw / ds.len() as f64;
        let ch = ph / rhos.len() as f64;
        // ρ axis runs over the bin centers padded by half a bin
        let step = if rhos.len() > 1 { (rhos[rhos.len() - 1] - rhos[0]) / (rhos.len() - 1) as f64 } else { 1.0 };
        let (rlo, rhi) = (rhos[0] - step / 2.0, rhos[rhos.len() - 1] + step / 2.0);
        let y_of = |r: f64| MARGIN + ph * (1.0 - (r - rlo) / (rhi - rlo));
        let x_of = |i: usize| MARGIN + cw * (i as f64 + 0.5);
        let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for c in &grid.cells {
            let (Some(i), Some(j)) = (ds.iter().position(|&d| d == c.d), rhos.iter().position(|&r| r == c.rho)) else {
                continue;
            };
            let Some(rate) = c.rate() else { continue };
            let g = (rate * 255.0).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({g},{g},{g})"/>"#,
                MARGIN + cw * i as f64,
                MARGIN + ph - ch * (j as f64 + 1.0),
                cw,
                ch
            );
        }
        let curve = |known: bool, scale: f64| -> String {
            ds.iter()
                .enumerate()
                .filter_map(|(i, &d)| {
                    let r = theory_rho(plan.dim, d, plan.num_dirs, known).ok()??;
                    let y = y_of(r * scale).clamp(MARGIN, MARGIN + ph);
                    Some(format!("{:.2},{:.2}", x_of(i), y))
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        for (known, color) in [(false, "green"), (true, "red")] {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, curve(known, 1.0));
        }
        if let Some(alpha) = grid.alpha {
            let color = if plan.cosupport_known { "red" } else { "green" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="6,4"/>"#,
                curve(plan.cosupport_known, alpha)
            );
        }
        for (i, d) in ds.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{d}</text>"#,
                x_of(i),
                MARGIN + ph + 16.0
            );
        }
        for r in [rhos[0], rhos[rhos.len() - 1]] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{r:.3}</text>"#,
                MARGIN - 4.0,
                y_of(r) + 4.0
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">d</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
        let _ = writeln!(s, r#"<text x="15" y="{:.2}" font-size="13">ρ</text>"#, HEIGHT / 2.0);
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Writes `<prefix>.csv` and `<prefix>.svg` and returns their paths.
pub fn emit(grid: &PhaseGrid, prefix: &Path) -> Result<Vec<PathBuf>> {
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    let csv_path = with_ext(".csv");
    let svg_path = with_ext(".svg");
    write_csv(grid, fs::File::create(&csv_path)?)?;
    write_svg(grid, fs::File::create(&svg_path)?)?;
    Ok(vec![csv_path, svg_path])
}
