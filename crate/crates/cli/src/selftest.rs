use kerr_metrology::config::ScenarioConfig;
use kerr_metrology::estimation::{analyze, Parameter};
use kerr_metrology::homodyne::{
    classical_fi, homodyne_distribution, quadrature_wavefunctions, QuadratureGrid,
};
use kerr_metrology::oracles::{bures_qfi, LinearCavity};
use kerr_metrology::output::to_csv;
use kerr_metrology::propagator::uniform_grid;
use kerr_metrology::runner::run_scenario;
use kerr_metrology::{propagate_extended, ModelParams, PropagationConfig, Result};

struct Check {
    name: &'static str,
    worst: f64,
    limit: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn linear_cavity() -> Result<Check> {
    let p = ModelParams::unit_detuning(0.0, 0.01, 0.1)?;
    let times: Vec<f64> = (0..=10).map(|k| 10.0 * k as f64).collect();
    let traj = propagate_extended(&p, &PropagationConfig::new(30, times))?;
    let table = quadrature_wavefunctions(30, &QuadratureGrid::default_for(30))?;
    let mut worst: f64 = 0.0;
    for s in &traj.states[1..] {
        let lc = LinearCavity::at(&p, s.time);
        let (_, q) = analyze(s)?;
        let dist = homodyne_distribution(s, 0.0, &table)?;
        let cfi = classical_fi(&dist, Parameter::Gamma).value;
        worst = worst
            .max(rel(q.f_gammagamma, lc.qfi_gamma()))
            .max(rel(cfi, lc.homodyne_fi_gamma(0.0)));
    }
    Ok(Check {
        name: "linear cavity QFI and homodyne FI",
        worst,
        limit: 0.01,
    })
}

fn bures() -> Result<Check> {
    let p = ModelParams::unit_detuning(0.1, 0.01, 0.1)?;
    let cfg = PropagationConfig::new(30, vec![0.0, 20.0, 60.0]);
    let traj = propagate_extended(&p, &cfg)?;
    let mut worst: f64 = 0.0;
    for which in Parameter::ALL {
        let fd = bures_qfi(&p, &cfg, which, 2e-3)?;
        for (s, b) in traj.states.iter().zip(&fd).skip(1) {
            worst = worst.max(rel(analyze(s)?.1.diagonal(which), *b));
        }
    }
    Ok(Check {
        name: "fidelity finite difference",
        worst,
        limit: 0.01,
    })
}

fn invariants() -> Result<Check> {
    let p = ModelParams::unit_detuning(0.5, 0.01, 0.1)?;
    let traj = propagate_extended(&p, &PropagationConfig::new(30, uniform_grid(50.0, 26)))?;
    let table = quadrature_wavefunctions(30, &QuadratureGrid::default_for(30))?;
    let mut worst: f64 = 0.0;
    for s in &traj.states {
        worst = worst.max(s.trace_errors.iter().cloned().fold(0.0, f64::max) / 1e-8);
        let (_, q) = analyze(s)?;
        let dist = homodyne_distribution(s, 0.0, &table)?;
        for w in Parameter::ALL {
            let f = q.diagonal(w);
            if f > 0.0 {
                worst = worst.max((classical_fi(&dist, w).value / f - 1.0) / 1e-6);
            }
        }
    }
    Ok(Check {
        name: "trace and data-processing invariants",
        worst,
        limit: 1.0,
    })
}

fn determinism_and_scaling() -> Result<Check> {
    let p = ModelParams::unit_detuning(0.2, 0.05, 0.2)?;
    let mut cfg = ScenarioConfig::new(p);
    cfg.set_dim(16);
    cfg.set_time_grid(10.0, 11);
    let a = to_csv(&run_scenario(&cfg)?);
    let b = to_csv(&run_scenario(&cfg)?);
    let mut worst = if a == b { 0.0 } else { f64::INFINITY };

    let mut scaled = cfg.clone();
    scaled.params = p.time_scaled(2.0);
    scaled.set_time_grid(5.0, 11);
    let base = run_scenario(&cfg)?;
    for (r, s) in base.iter().zip(&run_scenario(&scaled)?).skip(1) {
        let (x, y) = (r.f_chichi.unwrap_or(0.0), s.f_chichi.unwrap_or(0.0));
        worst = worst.max(rel(4.0 * y, x) / 1e-4);
    }
    Ok(Check {
        name: "determinism and time-scale invariance",
        worst,
        limit: 1.0,
    })
}

/// Prints one line per check; `true` when all pass.
pub fn run() -> bool {
    let checks: [fn() -> Result<Check>; 4] =
        [linear_cavity, bures, invariants, determinism_and_scaling];
    let mut ok = true;
    for check in checks {
        match check() {
            Ok(c) => {
                let pass = c.worst <= c.limit;
                ok &= pass;
                let tag = if pass { "PASS" } else { "FAIL" };
                println!(
                    "{tag}  {}  (worst {:.3e}, limit {:.1e})",
                    c.name, c.worst, c.limit
                );
            }
            Err(e) => {
                ok = false;
                println!("FAIL  {e}");
            }
        }
    }
    ok
}
