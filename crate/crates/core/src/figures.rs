//! Presets for the three figure grids (fig1, fig2, fig3).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::config::{Product, ScenarioConfig, Sweep, SweepAxis};
use crate::error::{Error, Result};
use crate::fock::ModelParams;
use crate::output::emit_csv;
use crate::parallel::{self, Execution};
use crate::runner::{run_detailed, ResultRow};

pub const FIG1_CHI: [f64; 3] = [0.1, 0.5, 1.0];
pub const FIG1_F: [f64; 3] = [0.01, 0.1, 1.0];
pub const HOMODYNE_F: [f64; 3] = [0.1, 0.15, 0.2];
pub const GAMMA: f64 = 0.01;
pub const FIG2_CHI: f64 = 0.05;
pub const FIG3_CHI: f64 = 0.1;
pub const FIG1_TIMES: usize = 201;
pub const HOMODYNE_TIMES: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    /// QFIM elements for `χ ∈ {0.1, 0.5, 1}` and `F ∈ {0.01, 0.1, 1}`.
    Fig1,
    /// Homodyne information on `χ` at `χ = 0.05`, `F ∈ {0.1, 0.15, 0.2}`.
    Fig2,
    /// Homodyne information on `γ` at `χ = 0.1`, `F ∈ {0.1, 0.15, 0.2}`.
    Fig3,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig1, Figure::Fig2, Figure::Fig3];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::Config(format!("unknown figure {s:?}; expected fig1, fig2 or fig3"))
            })
    }
}

fn drive_sweep(chi: f64, drives: &[f64], n_times: usize, outputs: &[Product]) -> ScenarioConfig {
    let params = ModelParams {
        delta: 1.0,
        chi,
        gamma: GAMMA,
        drive_f: drives[0],
        theta: 0.0,
    };
    let mut c = ScenarioConfig::new(params);
    c.set_time_grid(100.0, n_times);
    c.outputs = outputs.to_vec();
    c.sweep = Some(Sweep {
        parameter: SweepAxis::F,
        values: drives.to_vec(),
    });
    c
}

/// Scenario configs making up a figure, one per row of panels.
pub fn preset(fig: Figure) -> Vec<ScenarioConfig> {
    let homodyne = [Product::Qfim, Product::HomodyneFi];
    match fig {
        Figure::Fig1 => FIG1_CHI
            .iter()
            .map(|&chi| drive_sweep(chi, &FIG1_F, FIG1_TIMES, &[Product::Qfim, Product::Uhlmann]))
            .collect(),
        Figure::Fig2 => vec![drive_sweep(
            FIG2_CHI,
            &HOMODYNE_F,
            HOMODYNE_TIMES,
            &homodyne,
        )],
        Figure::Fig3 => vec![drive_sweep(
            FIG3_CHI,
            &HOMODYNE_F,
            HOMODYNE_TIMES,
            &homodyne,
        )],
    }
}

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub figure: Figure,
    pub csv_path: PathBuf,
    pub rows: Vec<ResultRow>,
}

/// Runs every scenario of `configs` (normally [`preset`]) and writes
/// `<outdir>/<fig>.csv`.
pub fn reproduce_with(
    fig: Figure,
    configs: &[ScenarioConfig],
    outdir: impl AsRef<Path>,
    exec: Execution,
) -> Result<FigureOutput> {
    let parts = parallel::try_map(exec, configs, |c| run_detailed(c, exec))?;
    let rows: Vec<ResultRow> = parts.into_iter().flat_map(|p| p.rows).collect();
    let csv_path = outdir.as_ref().join(format!("{}.csv", fig.name()));
    emit_csv(&rows, &csv_path)?;
    Ok(FigureOutput {
        figure: fig,
        csv_path,
        rows,
    })
}

pub fn reproduce_figure(fig: Figure, outdir: impl AsRef<Path>) -> Result<FigureOutput> {
    reproduce_with(fig, &preset(fig), outdir, Execution::default())
}
