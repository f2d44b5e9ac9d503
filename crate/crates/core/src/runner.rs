//! Scenario orchestration: propagation, estimation and homodyne statistics
//! for every sweep point, time and local-oscillator phase.

use crate::config::{Product, ScenarioConfig, ScenarioInstance};
use crate::error::{Error, Result};
use crate::estimation::{analyze, crb_report, Parameter, QfimResult, IDENTITY_WEIGHT};
use crate::homodyne::{
    classical_fi, homodyne_distribution, quadrature_wavefunctions, QuadratureGrid,
    WavefunctionTable,
};
use crate::parallel::{self, Execution};
use crate::propagator::{propagate_extended, ExtendedState};

/// One output time of one scenario at one phase. `None` marks a product
/// that was not requested or is undefined (ratios with a zero QFI).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario_id: String,
    pub t: f64,
    pub f_chichi: Option<f64>,
    pub f_gammagamma: Option<f64>,
    pub f_chigamma: Option<f64>,
    pub u_chigamma: Option<f64>,
    pub cfi_chi: Option<f64>,
    pub cfi_gamma: Option<f64>,
    pub ratio_chi: Option<f64>,
    pub ratio_gamma: Option<f64>,
    pub tail_population: f64,
}

/// Cramér-Rao bounds at one output time; empty at `t = 0`, where the
/// state does not depend on the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub scenario_id: String,
    pub t: f64,
    pub m_repetitions: usize,
    pub scalar_bound: Option<f64>,
    pub var_bound_chi: Option<f64>,
    pub var_bound_gamma: Option<f64>,
    pub cov_chigamma: Option<f64>,
}

/// One grid point of a homodyne distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRow {
    pub scenario_id: String,
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub dp_chi: f64,
    pub dp_gamma: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOutput {
    pub rows: Vec<ResultRow>,
    pub bounds: Vec<BoundRow>,
    pub distributions: Vec<DistributionRow>,
}

impl ScenarioOutput {
    fn extend(&mut self, other: ScenarioOutput) {
        self.rows.extend(other.rows);
        self.bounds.extend(other.bounds);
        self.distributions.extend(other.distributions);
    }
}

/// Result rows of every sweep point, in sweep order, then phase, then time.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    Ok(run_detailed(cfg, Execution::default())?.rows)
}

/// All requested products of every sweep point. Sweep points run
/// concurrently under [`Execution::Parallel`]; output order does not depend
/// on the schedule.
pub fn run_detailed(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    let instances = cfg.instances()?;
    let parts = parallel::try_map(exec, &instances, |inst| {
        run_instance(cfg, inst, exec).map_err(|e| Error::Scenario {
            scenario: inst.id(),
            source: Box::new(e),
        })
    })?;
    let mut out = ScenarioOutput::default();
    for part in parts {
        out.extend(part);
    }
    Ok(out)
}

struct TimePoint {
    qfim: Option<QfimResult>,
    homodyne: Vec<HomodynePoint>,
}

struct HomodynePoint {
    cfi: [f64; 2],
    distribution: Option<Vec<DistributionRow>>,
}

fn needs_qfim(cfg: &ScenarioConfig) -> bool {
    [
        Product::Qfim,
        Product::Uhlmann,
        Product::Bounds,
        Product::HomodyneFi,
    ]
    .iter()
    .any(|&p| cfg.wants(p))
}

fn needs_homodyne(cfg: &ScenarioConfig) -> bool {
    cfg.wants(Product::HomodyneFi) || cfg.wants(Product::Distributions)
}

fn analyze_time(
    cfg: &ScenarioConfig,
    inst: &ScenarioInstance,
    state: &ExtendedState,
    table: Option<&WavefunctionTable>,
) -> Result<TimePoint> {
    let qfim = if needs_qfim(cfg) {
        Some(analyze(state)?.1)
    } else {
        None
    };
    let mut homodyne = Vec::new();
    if let Some(table) = table {
        for &theta in &cfg.thetas {
            let dist = homodyne_distribution(state, theta, table)?;
            let cfi = Parameter::ALL.map(|w| classical_fi(&dist, w).value);
            let distribution = cfg.wants(Product::Distributions).then(|| {
                let id = inst.id_with_theta(theta);
                (0..dist.p.len())
                    .map(|k| DistributionRow {
                        scenario_id: id.clone(),
                        t: state.time,
                        x: dist.grid.points()[k],
                        p: dist.p[k],
                        dp_chi: dist.dp_chi[k],
                        dp_gamma: dist.dp_gamma[k],
                    })
                    .collect()
            });
            homodyne.push(HomodynePoint { cfi, distribution });
        }
    }
    Ok(TimePoint { qfim, homodyne })
}

fn ratio(cfi: f64, qfi: f64) -> Option<f64> {
    (qfi > 0.0).then(|| cfi / qfi)
}

fn bound_row(
    cfg: &ScenarioConfig,
    id: &str,
    state: &ExtendedState,
    q: &QfimResult,
) -> Result<BoundRow> {
    let mut row = BoundRow {
        scenario_id: id.to_string(),
        t: state.time,
        m_repetitions: cfg.m_repetitions,
        scalar_bound: None,
        var_bound_chi: None,
        var_bound_gamma: None,
        cov_chigamma: None,
    };
    if state.time > 0.0 {
        let r = crb_report(q, cfg.m_repetitions, IDENTITY_WEIGHT)?;
        row.scalar_bound = Some(r.scalar_bound);
        row.var_bound_chi = Some(r.var_bound_chi);
        row.var_bound_gamma = Some(r.var_bound_gamma);
        row.cov_chigamma = Some(r.covariance_bound[0][1]);
    }
    Ok(row)
}

/// Runs one sweep point. Time points are analysed concurrently under
/// [`Execution::Parallel`].
pub fn run_instance(
    cfg: &ScenarioConfig,
    inst: &ScenarioInstance,
    exec: Execution,
) -> Result<ScenarioOutput> {
    let traj = propagate_extended(&inst.params, &inst.propagation)?;
    let dim = inst.propagation.dim;
    let table = if needs_homodyne(cfg) {
        Some(quadrature_wavefunctions(
            dim,
            &QuadratureGrid::default_for(dim),
        )?)
    } else {
        None
    };
    let points = parallel::try_map(exec, &traj.states, |s| {
        analyze_time(cfg, inst, s, table.as_ref())
    })?;

    let mut out = ScenarioOutput::default();
    let base_id = inst.id();
    let want = |p| cfg.wants(p);
    for (k, &theta) in cfg.thetas.iter().enumerate() {
        let id = inst.id_with_theta(theta);
        for (state, point) in traj.states.iter().zip(&points) {
            let q = point.qfim.as_ref();
            let h = point.homodyne.get(k);
            let cfi = |w: usize| h.filter(|_| want(Product::HomodyneFi)).map(|h| h.cfi[w]);
            let qfi = |f: fn(&QfimResult) -> f64| q.map(f);
            let cfi_chi = cfi(0);
            let cfi_gamma = cfi(1);
            out.rows.push(ResultRow {
                scenario_id: id.clone(),
                t: state.time,
                f_chichi: qfi(|q| q.f_chichi).filter(|_| want(Product::Qfim)),
                f_gammagamma: qfi(|q| q.f_gammagamma).filter(|_| want(Product::Qfim)),
                f_chigamma: qfi(|q| q.f_chigamma).filter(|_| want(Product::Qfim)),
                u_chigamma: qfi(|q| q.u_chigamma).filter(|_| want(Product::Uhlmann)),
                cfi_chi,
                cfi_gamma,
                ratio_chi: cfi_chi.zip(q).and_then(|(c, q)| ratio(c, q.f_chichi)),
                ratio_gamma: cfi_gamma.zip(q).and_then(|(c, q)| ratio(c, q.f_gammagamma)),
                tail_population: state.tail_population,
            });
            if let Some(d) = h.and_then(|h| h.distribution.as_ref()) {
                out.distributions.extend(d.iter().cloned());
            }
        }
    }
    if want(Product::Bounds) {
        for (state, point) in traj.states.iter().zip(&points) {
            if let Some(q) = &point.qfim {
                out.bounds.push(bound_row(cfg, &base_id, state, q)?);
            }
        }
    }
    Ok(out)
}
