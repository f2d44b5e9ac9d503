//! Joint propagation of `ρ`, `∂χρ` and `∂γρ` under the block-triangular
//! generator
//!
//! ```text
//!   d/dt [ρ, ∂χρ, ∂γρ] = [[𝓛₀, 0, 0], [∂χ𝓛₀, 𝓛₀, 0], [∂γ𝓛₀, 0, 𝓛₀]] [ρ, ∂χρ, ∂γρ]
//! ```
//!
//! The Hamiltonian is tridiagonal and the dissipator is banded in the Fock
//! basis, so each generator application costs `O(N²)` and no superoperator
//! is ever built.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{vacuum_state, DensityMatrix, ModelParams, EPS_TRACE};
use crate::linalg::{hermitian_deviation, hermitize, max_abs, trace, CMatrix, C64};
use crate::ode::{DormandPrince, OdeSystem, StepStats, Tolerances};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-11;
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;

/// Fock truncation used when none is given: 30 levels up to `F = 0.2Δ`,
/// 60 above.
pub fn default_dim(p: &ModelParams) -> usize {
    if p.drive_f <= 0.2 * p.delta.abs() {
        30
    } else {
        60
    }
}

/// `n` equally spaced times from 0 to `t_max` inclusive.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Frame in which the extended system is integrated. Outputs are always
/// returned in the lab (Fock) frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Plain Fock-basis equations. Step size is bounded by the largest level
    /// spacing of the truncated space, even when those levels are empty.
    Lab,
    /// Interaction picture of the diagonal part of `H` (detuning and Kerr).
    /// Only the drive and loss remain in the generator, so the step size is
    /// set by the populated levels, at a higher cost per step.
    Rotating,
    /// `Rotating` when the diagonal energy span of the truncated space
    /// exceeds [`AUTO_FRAME_SPAN`], `Lab` otherwise.
    #[default]
    Auto,
}

/// Energy span (in units of the rates) above which `Frame::Auto` leaves the
/// lab frame.
pub const AUTO_FRAME_SPAN: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub dim: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output times; strictly increasing and starting at 0.
    pub t_grid: Vec<f64>,
    /// Largest allowed population in the two highest Fock levels.
    pub tail_threshold: f64,
    /// Initial state; the vacuum when `None`.
    pub initial: Option<DensityMatrix>,
    pub frame: Frame,
}

impl PropagationConfig {
    pub fn new(dim: usize, t_grid: Vec<f64>) -> Self {
        PropagationConfig {
            dim,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            t_grid,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            initial: None,
            frame: Frame::default(),
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("integrator tolerances must be > 0");
        }
        if !(self.tail_threshold > 0.0) {
            return bad("tail_threshold must be > 0");
        }
        match self.t_grid.first() {
            None => return bad("t_grid must be nonempty"),
            Some(&t0) if t0 != 0.0 => return bad("t_grid must start at 0"),
            _ => {}
        }
        if self
            .t_grid
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return bad("t_grid must be strictly increasing");
        }
        if let Some(init) = &self.initial {
            if init.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: init.dim(),
                });
            }
        }
        Ok(())
    }
}

/// `(ρ, ∂χρ, ∂γρ)` at one time, with integration diagnostics.
#[derive(Debug, Clone)]
pub struct ExtendedState {
    pub time: f64,
    pub rho: DensityMatrix,
    pub drho_chi: CMatrix,
    pub drho_gamma: CMatrix,
    /// Population of the highest two Fock levels.
    pub tail_population: f64,
    /// Relative anti-Hermitian part removed at this output, over all blocks.
    pub hermiticity_drift: f64,
    /// Trace errors before re-symmetrization: `Tr ρ - 1`, `Tr ∂χρ`, `Tr ∂γρ`.
    pub trace_errors: [f64; 3],
}

impl ExtendedState {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<ExtendedState>,
    pub stats: StepStats,
    /// Largest tail population seen over all accepted steps.
    pub max_tail_population: f64,
}

/// Banded representation of `𝓛₀` and its parameter derivatives.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    gamma: f64,
    /// Diagonal of `H`.
    energy: Vec<f64>,
    /// Diagonal of `∂χH = ½ n(n-1)`.
    kerr: Vec<f64>,
    /// Superdiagonal `H[n, n+1] = -iF√(n+1)`.
    upper: Vec<C64>,
    /// `√n` for the ladder couplings.
    sqrt_n: Vec<f64>,
}

impl Liouvillian {
    pub fn new(p: &ModelParams, dim: usize) -> Result<Self> {
        p.validate()?;
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let kerr: Vec<f64> = (0..dim)
            .map(|n| 0.5 * (n * n.saturating_sub(1)) as f64)
            .collect();
        let energy = (0..dim)
            .map(|n| -p.delta * n as f64 + p.chi * kerr[n])
            .collect();
        let upper = (0..dim - 1)
            .map(|n| C64::new(0.0, -p.drive_f * ((n + 1) as f64).sqrt()))
            .collect();
        let sqrt_n = (0..=dim).map(|n| (n as f64).sqrt()).collect();
        Ok(Liouvillian {
            dim,
            gamma: p.gamma,
            energy,
            kerr,
            upper,
            sqrt_n,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    // Flat buffers are column-major, matching nalgebra: entry (m, n) at m + n*N.

    /// `out += 𝓛₀ρ`, or `𝓛₀ρ + i[H_diag, ρ]` when `with_diagonal` is false.
    fn add_generator_part(&self, rho: &[C64], out: &mut [C64], with_diagonal: bool) {
        let n_dim = self.dim;
        let half_gamma = 0.5 * self.gamma;
        let minus_i = C64::new(0.0, -1.0);
        for n in 0..n_dim {
            for m in 0..n_dim {
                let idx = m + n * n_dim;
                let r = rho[idx];
                // [H, ρ]_{mn}
                let mut comm = if with_diagonal {
                    r * (self.energy[m] - self.energy[n])
                } else {
                    C64::new(0.0, 0.0)
                };
                if m + 1 < n_dim {
                    comm += self.upper[m] * rho[idx + 1];
                }
                if m >= 1 {
                    comm += self.upper[m - 1].conj() * rho[idx - 1];
                }
                if n >= 1 {
                    comm -= rho[idx - n_dim] * self.upper[n - 1];
                }
                if n + 1 < n_dim {
                    comm -= rho[idx + n_dim] * self.upper[n].conj();
                }
                let mut acc = minus_i * comm;
                if half_gamma != 0.0 {
                    acc += self.dissipator_entry(rho, m, n) * half_gamma;
                }
                out[idx] += acc;
            }
        }
    }

    fn add_generator(&self, rho: &[C64], out: &mut [C64]) {
        self.add_generator_part(rho, out, true);
    }

    /// `(𝒟[a]ρ)_{mn} = √((m+1)(n+1)) ρ_{m+1,n+1} - (m+n)/2 ρ_{mn}`.
    #[inline]
    fn dissipator_entry(&self, rho: &[C64], m: usize, n: usize) -> C64 {
        let n_dim = self.dim;
        let idx = m + n * n_dim;
        let mut d = -rho[idx] * (0.5 * (m + n) as f64);
        if m + 1 < n_dim && n + 1 < n_dim {
            d += rho[idx + 1 + n_dim] * (self.sqrt_n[m + 1] * self.sqrt_n[n + 1]);
        }
        d
    }

    /// `out += ∂χ𝓛₀ρ = -i[½a†a†aa, ρ]`.
    fn add_dchi(&self, rho: &[C64], out: &mut [C64]) {
        let n_dim = self.dim;
        for n in 0..n_dim {
            for m in 0..n_dim {
                let idx = m + n * n_dim;
                out[idx] += C64::new(0.0, -(self.kerr[m] - self.kerr[n])) * rho[idx];
            }
        }
    }

    /// `out += ∂γ𝓛₀ρ = ½𝒟[a]ρ`.
    fn add_dgamma(&self, rho: &[C64], out: &mut [C64]) {
        let n_dim = self.dim;
        for n in 0..n_dim {
            for m in 0..n_dim {
                out[m + n * n_dim] += self.dissipator_entry(rho, m, n) * 0.5;
            }
        }
    }

    fn check(&self, rho: &CMatrix) -> Result<()> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check(rho)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.add_generator(rho.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub fn apply_dchi(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check(rho)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.add_dchi(rho.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub fn apply_dgamma(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check(rho)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.add_dgamma(rho.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

/// `𝓛₀ρ = -i[H, ρ] + (γ/2)𝒟[a]ρ`.
pub fn liouvillian_apply(p: &ModelParams, rho: &CMatrix) -> Result<CMatrix> {
    Liouvillian::new(p, rho.nrows())?.apply(rho)
}

/// `∂χ𝓛₀ρ = -i[½a†a†aa, ρ]`; independent of the model parameters.
pub fn dchi_liouvillian_apply(rho: &CMatrix) -> Result<CMatrix> {
    Liouvillian::new(&neutral_params(), rho.nrows())?.apply_dchi(rho)
}

/// `∂γ𝓛₀ρ = ½𝒟[a]ρ`; independent of the model parameters.
pub fn dgamma_liouvillian_apply(rho: &CMatrix) -> Result<CMatrix> {
    Liouvillian::new(&neutral_params(), rho.nrows())?.apply_dgamma(rho)
}

fn neutral_params() -> ModelParams {
    ModelParams {
        delta: 0.0,
        chi: 0.0,
        gamma: 0.0,
        drive_f: 0.0,
        theta: 0.0,
    }
}

struct ExtendedSystem<'a> {
    gen: &'a Liouvillian,
}

impl OdeSystem for ExtendedSystem<'_> {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let block = self.gen.dim * self.gen.dim;
        dy.fill(C64::new(0.0, 0.0));
        let (rho, rest) = y.split_at(block);
        let (d_chi, d_gamma) = rest.split_at(block);
        let (out_rho, out_rest) = dy.split_at_mut(block);
        let (out_chi, out_gamma) = out_rest.split_at_mut(block);
        self.gen.add_generator(rho, out_rho);
        self.gen.add_generator(d_chi, out_chi);
        self.gen.add_dchi(rho, out_chi);
        self.gen.add_generator(d_gamma, out_gamma);
        self.gen.add_dgamma(rho, out_gamma);
    }
}

/// Extended system for `X̃_mn = e^{i(E_m - E_n)t} X_mn`, applied to all
/// three blocks. The `∂χ` and `∂γ` sources commute with this entrywise
/// phase, so the transformed sources are the lab-frame ones conjugated by it.
struct RotatingSystem<'a> {
    gen: &'a Liouvillian,
    scratch: std::cell::RefCell<Vec<C64>>,
}

impl RotatingSystem<'_> {
    fn phases(&self, t: f64) -> Vec<C64> {
        self.gen
            .energy
            .iter()
            .map(|&e| C64::from_polar(1.0, e * t))
            .collect()
    }
}

/// `X_mn <- X_mn p_m conj(p_n)` (or the inverse) in place.
fn apply_phases(x: &mut [C64], phases: &[C64], inverse: bool) {
    let dim = phases.len();
    for n in 0..dim {
        for m in 0..dim {
            let ph = phases[m] * phases[n].conj();
            x[m + n * dim] *= if inverse { ph.conj() } else { ph };
        }
    }
}

impl OdeSystem for RotatingSystem<'_> {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let block = self.gen.dim * self.gen.dim;
        let phases = self.phases(t);
        let mut lab = self.scratch.borrow_mut();
        lab.copy_from_slice(y);
        for b in lab.chunks_mut(block) {
            apply_phases(b, &phases, true);
        }
        dy.fill(C64::new(0.0, 0.0));
        let (rho, rest) = lab.split_at(block);
        let (d_chi, d_gamma) = rest.split_at(block);
        let (out_rho, out_rest) = dy.split_at_mut(block);
        let (out_chi, out_gamma) = out_rest.split_at_mut(block);
        self.gen.add_generator_part(rho, out_rho, false);
        self.gen.add_generator_part(d_chi, out_chi, false);
        self.gen.add_dchi(rho, out_chi);
        self.gen.add_generator_part(d_gamma, out_gamma, false);
        self.gen.add_dgamma(rho, out_gamma);
        for b in dy.chunks_mut(block) {
            apply_phases(b, &phases, false);
        }
    }
}

fn tail_of(rho_block: &[C64], dim: usize) -> f64 {
    let diag = |n: usize| rho_block[n + n * dim].re;
    diag(dim - 1) + diag(dim - 2)
}

/// Integrates the extended system from the initial state (vacuum by
/// default, with vanishing derivative blocks) and returns one state per
/// output time.
pub fn propagate_extended(p: &ModelParams, cfg: &PropagationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = cfg.dim;
    let gen = Liouvillian::new(p, dim)?;
    let block = dim * dim;
    let initial = match &cfg.initial {
        Some(rho) => rho.clone(),
        None => vacuum_state(dim)?,
    };
    let mut y = vec![C64::new(0.0, 0.0); 3 * block];
    y[..block].copy_from_slice(initial.matrix().as_slice());

    let mut stepper = DormandPrince::new(
        y.len(),
        Tolerances {
            rel: cfg.rel_tol,
            abs: cfg.abs_tol,
        },
    );
    let mut t = 0.0;
    let mut max_tail = tail_of(&y[..block], dim);
    let mut states = Vec::with_capacity(cfg.t_grid.len());
    let threshold = cfg.tail_threshold;
    let mut on_step = |time: f64, state: &[C64]| {
        // populations are frame independent
        let tail = tail_of(&state[..block], dim);
        max_tail = max_tail.max(tail);
        if tail >= threshold {
            return Err(Error::TruncationOverflow {
                time,
                population: tail,
                threshold,
            });
        }
        Ok(())
    };

    let frame = match cfg.frame {
        Frame::Auto => {
            let (lo, hi) = gen
                .energy
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                    (lo.min(e), hi.max(e))
                });
            if hi - lo > AUTO_FRAME_SPAN {
                Frame::Rotating
            } else {
                Frame::Lab
            }
        }
        f => f,
    };
    match frame {
        Frame::Auto => unreachable!("resolved above"),
        Frame::Lab => {
            let sys = ExtendedSystem { gen: &gen };
            for &target in &cfg.t_grid {
                stepper.advance(&sys, &mut t, &mut y, target, &mut on_step)?;
                states.push(snapshot(target, &y, dim)?);
            }
        }
        Frame::Rotating => {
            let sys = RotatingSystem {
                gen: &gen,
                scratch: std::cell::RefCell::new(vec![C64::new(0.0, 0.0); y.len()]),
            };
            let mut lab = y.clone();
            for &target in &cfg.t_grid {
                stepper.advance(&sys, &mut t, &mut y, target, &mut on_step)?;
                lab.copy_from_slice(&y);
                let phases = sys.phases(target);
                for b in lab.chunks_mut(block) {
                    apply_phases(b, &phases, true);
                }
                states.push(snapshot(target, &lab, dim)?);
            }
        }
    }
    Ok(Trajectory {
        states,
        stats: stepper.stats,
        max_tail_population: max_tail,
    })
}

fn snapshot(time: f64, y: &[C64], dim: usize) -> Result<ExtendedState> {
    let block = dim * dim;
    let mut mats: Vec<CMatrix> = (0..3)
        .map(|k| CMatrix::from_column_slice(dim, dim, &y[k * block..(k + 1) * block]))
        .collect();
    let scale = max_abs(&mats[0]).max(f64::MIN_POSITIVE);
    let mut drift = 0.0_f64;
    let mut trace_errors = [0.0; 3];
    for (k, m) in mats.iter_mut().enumerate() {
        let s = if k == 0 { scale } else { max_abs(m).max(scale) };
        drift = drift.max(hermitian_deviation(m) / s);
        let tr = trace(m);
        trace_errors[k] = if k == 0 { tr.re - 1.0 } else { tr.re };
        hermitize(m);
    }
    if trace_errors[0].abs() > EPS_TRACE || !trace_errors[0].is_finite() {
        return Err(Error::Numerical(format!(
            "trace of ρ drifted by {:.3e} at t = {time}",
            trace_errors[0]
        )));
    }
    let drho_gamma = mats.pop().expect("three blocks");
    let drho_chi = mats.pop().expect("three blocks");
    let rho = mats.pop().expect("three blocks");
    let tail_population = tail_of(rho.as_slice(), dim);
    Ok(ExtendedState {
        time,
        rho: DensityMatrix::new_unchecked(rho),
        drho_chi,
        drho_gamma,
        tail_population,
        hermiticity_drift: drift,
        trace_errors,
    })
}
