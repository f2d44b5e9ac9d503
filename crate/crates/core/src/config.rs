//! Scenario configuration files.
//!
//! A config is TOML with four flat sections. Every value is in units of the
//! detuning unless `delta` is set explicitly.
//!
//! ```toml
//! [model]
//! delta = 1.0          # optional, default 1
//! chi = 0.1
//! gamma = 0.01
//! f = 0.1
//!
//! [propagation]        # optional section
//! dim = 30             # default: 30 for f ≤ 0.2·delta, else 60
//! t_max = 100.0
//! n_times = 101        # output times, uniform from 0 to t_max
//! rel_tol = 1e-9
//! abs_tol = 1e-11
//! tail_threshold = 1e-8
//! frame = "auto"       # "lab" | "rotating" | "auto"
//!
//! [outputs]            # optional section
//! products = ["qfim", "uhlmann", "homodyne-fi"]  # also "bounds", "distributions"
//! thetas = [0.0]
//! m_repetitions = 1
//!
//! [sweep]              # optional section
//! parameter = "f"      # "delta" | "chi" | "gamma" | "f"
//! values = [0.01, 0.1, 1.0]
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fock::ModelParams;
use crate::propagator::{
    default_dim, uniform_grid, Frame, PropagationConfig, DEFAULT_ABS_TOL, DEFAULT_REL_TOL,
    DEFAULT_TAIL_THRESHOLD,
};

pub const DEFAULT_T_MAX: f64 = 100.0;
pub const DEFAULT_N_TIMES: usize = 101;

/// A quantity a run can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Product {
    Qfim,
    Uhlmann,
    Bounds,
    HomodyneFi,
    Distributions,
}

impl Product {
    pub const DEFAULT: [Product; 3] = [Product::Qfim, Product::Uhlmann, Product::HomodyneFi];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Delta,
    Chi,
    Gamma,
    F,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delta => "delta",
            SweepAxis::Chi => "chi",
            SweepAxis::Gamma => "gamma",
            SweepAxis::F => "f",
        }
    }

    pub fn apply(self, p: &mut ModelParams, value: f64) {
        match self {
            SweepAxis::Delta => p.delta = value,
            SweepAxis::Chi => p.chi = value,
            SweepAxis::Gamma => p.gamma = value,
            SweepAxis::F => p.drive_f = value,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepAxis,
    pub values: Vec<f64>,
}

/// One fully specified run, possibly expanded over a sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub propagation: PropagationConfig,
    /// Pick the truncation per sweep point with [`default_dim`] instead of
    /// using `propagation.dim`.
    pub auto_dim: bool,
    pub thetas: Vec<f64>,
    pub outputs: Vec<Product>,
    pub m_repetitions: usize,
    pub sweep: Option<Sweep>,
}

/// A single point of a (possibly swept) scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance {
    pub params: ModelParams,
    pub propagation: PropagationConfig,
}

impl ScenarioInstance {
    /// Stable identifier, e.g. `delta=1_chi=0.1_gamma=0.01_f=0.1`.
    pub fn id(&self) -> String {
        let p = &self.params;
        format!(
            "delta={}_chi={}_gamma={}_f={}",
            p.delta, p.chi, p.gamma, p.drive_f
        )
    }

    /// Identifier of the homodyne row at phase `theta`.
    pub fn id_with_theta(&self, theta: f64) -> String {
        format!("{}_theta={}", self.id(), theta)
    }
}

impl ScenarioConfig {
    /// Defaults for everything but the physics: automatic truncation,
    /// `t ∈ [0, 100]` with 101 points, `θ = 0`, and the default products.
    pub fn new(params: ModelParams) -> Self {
        let mut propagation = PropagationConfig::new(
            default_dim(&params),
            uniform_grid(DEFAULT_T_MAX, DEFAULT_N_TIMES),
        );
        propagation.frame = Frame::Auto;
        ScenarioConfig {
            params,
            propagation,
            auto_dim: true,
            thetas: vec![0.0],
            outputs: Product::DEFAULT.to_vec(),
            m_repetitions: 1,
            sweep: None,
        }
    }

    pub fn wants(&self, product: Product) -> bool {
        self.outputs.contains(&product)
    }

    pub fn t_max(&self) -> f64 {
        self.propagation.t_grid.last().copied().unwrap_or(0.0)
    }

    /// Replaces the output grid by `n` uniform times on `[0, t_max]`.
    pub fn set_time_grid(&mut self, t_max: f64, n: usize) {
        self.propagation.t_grid = uniform_grid(t_max, n);
    }

    /// Fixes the truncation for every sweep point.
    pub fn set_dim(&mut self, dim: usize) {
        self.propagation.dim = dim;
        self.auto_dim = false;
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if let Err(e) = self.params.validate() {
            return cfg(format!("[model]: {}", e.root()));
        }
        if let Err(e) = self.propagation.validate() {
            return cfg(format!("[propagation]: {}", e.root()));
        }
        if self.outputs.is_empty() {
            return cfg("[outputs].products must be nonempty".into());
        }
        if self.thetas.is_empty() {
            return cfg("[outputs].thetas must be nonempty".into());
        }
        for &theta in &self.thetas {
            let mut p = self.params;
            p.theta = theta;
            if p.validate().is_err() {
                return cfg(format!("[outputs].thetas: {theta} is outside [0, 2π)"));
            }
        }
        if self.m_repetitions == 0 {
            return cfg("[outputs].m_repetitions must be ≥ 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return cfg("[sweep].values must be nonempty".into());
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return cfg("[sweep].values must be finite".into());
            }
        }
        for inst in self.instances_unchecked() {
            if let Err(e) = inst.params.validate() {
                return cfg(format!("[sweep] point {}: {}", inst.id(), e.root()));
            }
        }
        Ok(())
    }

    /// The scenario points in sweep order, a single one without a sweep.
    pub fn instances(&self) -> Result<Vec<ScenarioInstance>> {
        self.validate()?;
        Ok(self.instances_unchecked())
    }

    fn instances_unchecked(&self) -> Vec<ScenarioInstance> {
        let points = match &self.sweep {
            None => vec![self.params],
            Some(s) => s
                .values
                .iter()
                .map(|&v| {
                    let mut p = self.params;
                    s.parameter.apply(&mut p, v);
                    p
                })
                .collect(),
        };
        points
            .into_iter()
            .map(|params| {
                let mut propagation = self.propagation.clone();
                if self.auto_dim {
                    propagation.dim = default_dim(&params);
                }
                ScenarioInstance {
                    params,
                    propagation,
                }
            })
            .collect()
    }

    /// Same run restricted to one sweep point.
    pub fn single(&self, instance: &ScenarioInstance) -> ScenarioConfig {
        ScenarioConfig {
            params: instance.params,
            propagation: instance.propagation.clone(),
            auto_dim: false,
            sweep: None,
            ..self.clone()
        }
    }
}

fn default_delta() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default = "default_delta")]
    delta: f64,
    chi: f64,
    gamma: f64,
    f: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPropagation {
    dim: Option<usize>,
    t_max: f64,
    n_times: usize,
    rel_tol: f64,
    abs_tol: f64,
    tail_threshold: f64,
    frame: Frame,
}

impl Default for RawPropagation {
    fn default() -> Self {
        RawPropagation {
            dim: None,
            t_max: DEFAULT_T_MAX,
            n_times: DEFAULT_N_TIMES,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            frame: Frame::Auto,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutputs {
    products: Vec<Product>,
    thetas: Vec<f64>,
    m_repetitions: usize,
}

impl Default for RawOutputs {
    fn default() -> Self {
        RawOutputs {
            products: Product::DEFAULT.to_vec(),
            thetas: vec![0.0],
            m_repetitions: 1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    propagation: RawPropagation,
    #[serde(default)]
    outputs: RawOutputs,
    sweep: Option<Sweep>,
}

/// Parses and validates a config given as text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let m = raw.model;
    let params = ModelParams {
        delta: m.delta,
        chi: m.chi,
        gamma: m.gamma,
        drive_f: m.f,
        theta: 0.0,
    };
    if let Err(e) = params.validate() {
        return Err(Error::Config(format!("[model]: {}", e.root())));
    }
    let pr = raw.propagation;
    if pr.n_times == 0 {
        return Err(Error::Config("[propagation].n_times must be ≥ 1".into()));
    }
    if !(pr.t_max.is_finite() && pr.t_max > 0.0) {
        return Err(Error::Config("[propagation].t_max must be > 0".into()));
    }
    let mut propagation = PropagationConfig::new(
        pr.dim.unwrap_or_else(|| default_dim(&params)),
        uniform_grid(pr.t_max, pr.n_times),
    )
    .with_tolerances(pr.rel_tol, pr.abs_tol);
    propagation.tail_threshold = pr.tail_threshold;
    propagation.frame = pr.frame;

    let mut outputs = raw.outputs.products;
    outputs.sort();
    outputs.dedup();
    let cfg = ScenarioConfig {
        params,
        propagation,
        auto_dim: pr.dim.is_none(),
        thetas: raw.outputs.thetas,
        outputs,
        m_repetitions: raw.outputs.m_repetitions,
        sweep: raw.sweep,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nchi = 0.1\ngamma = 0.01\nf = 0.1\n";

    #[test]
    fn minimal_file_gets_documented_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.propagation.dim, 30);
        assert_eq!(c.t_max(), 100.0);
        assert_eq!(c.thetas, vec![0.0]);
        assert_eq!(c.params.delta, 1.0);
        assert_eq!(c.propagation.t_grid.len(), DEFAULT_N_TIMES);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn negative_gamma_names_the_field() {
        let err = parse_config("[model]\nchi = 0.1\ngamma = -1\nf = 0.1\n").unwrap_err();
        assert!(
            matches!(&err, Error::Config(m) if m.contains("gamma must be ≥ 0")),
            "{err}"
        );
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[model]\nchi = 0.1\ngamma = = 0.01\nf = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config(&format!("{MINIMAL}[outputs]\nthetaz = [0.0]\n")).unwrap_err();
        assert!(err.to_string().contains("thetaz"), "{err}");
    }

    #[test]
    fn sweep_over_drive_gives_three_instances() {
        let text = format!("{MINIMAL}[sweep]\nparameter = \"f\"\nvalues = [0.01, 0.1, 1.0]\n");
        let c = parse_config(&text).unwrap();
        let inst = c.instances().unwrap();
        assert_eq!(inst.len(), 3);
        let fs: Vec<f64> = inst.iter().map(|i| i.params.drive_f).collect();
        assert_eq!(fs, vec![0.01, 0.1, 1.0]);
        assert_eq!(inst[2].propagation.dim, 60);
        assert_eq!(inst[0].id(), "delta=1_chi=0.1_gamma=0.01_f=0.01");
    }

    #[test]
    fn explicit_dim_applies_to_all_points() {
        let text = format!(
            "{MINIMAL}[propagation]\ndim = 20\n[sweep]\nparameter = \"f\"\nvalues = [0.1, 1.0]\n"
        );
        let c = parse_config(&text).unwrap();
        assert!(c
            .instances()
            .unwrap()
            .iter()
            .all(|i| i.propagation.dim == 20));
    }

    #[test]
    fn empty_sweep_and_products_are_rejected() {
        let e1 = parse_config(&format!(
            "{MINIMAL}[sweep]\nparameter = \"chi\"\nvalues = []\n"
        ));
        assert!(e1.unwrap_err().to_string().contains("[sweep].values"));
        let e2 = parse_config(&format!("{MINIMAL}[outputs]\nproducts = []\n"));
        assert!(e2.unwrap_err().to_string().contains("products"));
    }

    #[test]
    fn invalid_sweep_point_is_caught() {
        let text = format!("{MINIMAL}[sweep]\nparameter = \"gamma\"\nvalues = [0.01, -0.5]\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("gamma must be ≥ 0"), "{err}");
    }

    #[test]
    fn products_and_frame_parse() {
        let text = format!(
            "{MINIMAL}[propagation]\nframe = \"rotating\"\n[outputs]\nproducts = [\"bounds\", \"qfim\", \"qfim\"]\nthetas = [0.0, 1.5]\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.outputs, vec![Product::Qfim, Product::Bounds]);
        assert_eq!(c.propagation.frame, Frame::Rotating);
        assert_eq!(c.thetas, vec![0.0, 1.5]);
    }

    #[test]
    fn theta_out_of_range_is_rejected() {
        let err = parse_config(&format!("{MINIMAL}[outputs]\nthetas = [7.0]\n")).unwrap_err();
        assert!(err.to_string().contains("thetas"), "{err}");
    }
}
