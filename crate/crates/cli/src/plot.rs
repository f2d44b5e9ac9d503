use std::path::{Path, PathBuf};

use kerr_metrology::figures::{Figure, FigureOutput};
use kerr_metrology::runner::ResultRow;
use kerr_metrology::Error;
use plotters::coord::Shift;
use plotters::prelude::*;

const COLORS: [RGBColor; 3] = [BLACK, BLUE, RED];

type Getter = fn(&ResultRow) -> Option<f64>;

struct Series {
    label: String,
    color: RGBColor,
    points: Vec<(f64, f64)>,
}

fn draw_err(e: impl std::fmt::Display) -> Error {
    Error::Io(format!("plot: {e}"))
}

fn panel(
    area: &DrawingArea<SVGBackend, Shift>,
    title: &str,
    y_label: &str,
    series: &[Series],
) -> Result<(), Error> {
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (lo, hi) = ys
        .filter(|y| y.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
            (a.min(y), b.max(y))
        });
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    };
    let pad = 0.05 * (hi - lo);
    let x_max = series
        .iter()
        .flat_map(|s| s.points.last().map(|p| p.0))
        .fold(1.0, f64::max);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..x_max, (lo - pad)..(hi + pad))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("Δt")
        .y_desc(y_label)
        .draw()
        .map_err(draw_err)?;
    for s in series {
        let color = s.color;
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color))
            .map_err(draw_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperLeft)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    Ok(())
}

/// Rows grouped by scenario, in order of first appearance.
fn by_scenario(rows: &[ResultRow]) -> Vec<(String, Vec<&ResultRow>)> {
    let mut groups: Vec<(String, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(id, _)| *id == r.scenario_id) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.scenario_id.clone(), vec![r])),
        }
    }
    groups
}

fn field(id: &str, key: &str) -> String {
    id.split('_')
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap_or("?")
        .to_string()
}

fn curve(rows: &[&ResultRow], f: impl Fn(&ResultRow) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter().filter_map(|r| f(r).map(|y| (r.t, y))).collect()
}

fn log10_curve(rows: &[&ResultRow], f: impl Fn(&ResultRow) -> Option<f64>) -> Vec<(f64, f64)> {
    curve(rows, |r| f(r).filter(|v| *v > 0.0).map(f64::log10))
}

fn fig1(out: &FigureOutput, path: &Path) -> Result<(), Error> {
    let root = SVGBackend::new(path, (1500, 1200)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let cells = root.split_evenly((3, 3));
    let groups = by_scenario(&out.rows);
    let mut chis: Vec<String> = groups.iter().map(|(k, _)| field(k, "chi")).collect();
    chis.dedup();
    let columns: [(&str, Getter, bool); 3] = [
        ("F_χ", |r| r.f_chichi, true),
        ("F_γ", |r| r.f_gammagamma, true),
        ("F_χγ", |r| r.f_chigamma, false),
    ];
    for (i, chi) in chis.iter().enumerate() {
        for (j, (name, get, log)) in columns.iter().enumerate() {
            let series: Vec<Series> = groups
                .iter()
                .filter(|(k, _)| field(k, "chi") == *chi)
                .enumerate()
                .map(|(c, (k, rows))| Series {
                    label: format!("F = {}", field(k, "f")),
                    color: COLORS[c % COLORS.len()],
                    points: if *log {
                        log10_curve(rows, get)
                    } else {
                        curve(rows, get)
                    },
                })
                .collect();
            let y = if *log {
                format!("log10 {name}")
            } else {
                name.to_string()
            };
            panel(
                &cells[3 * i + j],
                &format!("{name}, χ = {chi}"),
                &y,
                &series,
            )?;
        }
    }
    root.present().map_err(draw_err)
}

fn homodyne(out: &FigureOutput, path: &Path) -> Result<(), Error> {
    let (sym, cfi, qfi, ratio): (&str, Getter, Getter, Getter) = match out.figure {
        Figure::Fig2 => ("χ", |r| r.cfi_chi, |r| r.f_chichi, |r| r.ratio_chi),
        _ => ("γ", |r| r.cfi_gamma, |r| r.f_gammagamma, |r| r.ratio_gamma),
    };
    let root = SVGBackend::new(path, (1500, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let cells = root.split_evenly((2, 3));
    for (j, (id, rows)) in by_scenario(&out.rows).iter().enumerate().take(3) {
        let f = field(id, "f");
        let info = [
            Series {
                label: format!("F_X({sym})"),
                color: BLUE,
                points: curve(rows, cfi),
            },
            Series {
                label: format!("F_{sym}"),
                color: BLACK,
                points: curve(rows, qfi),
            },
        ];
        panel(&cells[j], &format!("F = {f}"), "Fisher information", &info)?;
        let r = [Series {
            label: format!("F_X({sym}) / F_{sym}"),
            color: RED,
            points: curve(rows, ratio),
        }];
        panel(&cells[3 + j], &format!("ratio, F = {f}"), "ratio", &r)?;
    }
    root.present().map_err(draw_err)
}

/// Writes `<outdir>/<fig>.svg`.
pub fn render(out: &FigureOutput, outdir: &Path) -> Result<Vec<PathBuf>, Error> {
    let path = outdir.join(format!("{}.svg", out.figure.name()));
    match out.figure {
        Figure::Fig1 => fig1(out, &path)?,
        Figure::Fig2 | Figure::Fig3 => homodyne(out, &path)?,
    }
    Ok(vec![path])
}
