//! Symmetric logarithmic derivatives and the quantities built from them:
//! the quantum Fisher information matrix, the Uhlmann curvature and the
//! Cramér-Rao bounds for the `(χ, γ)` pair.

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, EPS_HERM};
use crate::linalg::{frobenius, hermitian_deviation, max_abs, CMatrix, Spectrum, C64};
use crate::propagator::ExtendedState;

/// Eigenvalue-sum cutoff (relative to `Tr ρ`) below which SLD components
/// are dropped.
pub const EPS_RANK: f64 = 1e-12;
/// Relative SLD residual above which a solve is flagged rank deficient.
pub const EPS_SLD: f64 = 1e-8;
/// Floor on norms used as denominators.
pub const EPS_NUM: f64 = 1e-300;
/// Allowed relative imaginary residue of the symmetrized QFIM entry.
pub const EPS_IMAG: f64 = 1e-10;

/// Estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Chi,
    Gamma,
}

impl Parameter {
    pub const ALL: [Parameter; 2] = [Parameter::Chi, Parameter::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Chi => "chi",
            Parameter::Gamma => "gamma",
        }
    }
}

/// One SLD with the diagnostics of its solve.
#[derive(Debug, Clone)]
pub struct Sld {
    pub operator: CMatrix,
    /// `‖ρL + Lρ - 2∂ρ‖_F / ‖∂ρ‖_F`.
    pub residual: f64,
    /// Set when the residual exceeds [`EPS_SLD`]: part of `∂ρ` lies outside
    /// the support of `ρ`.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct SldPair {
    pub l_chi: Sld,
    pub l_gamma: Sld,
}

impl SldPair {
    pub fn get(&self, which: Parameter) -> &Sld {
        match which {
            Parameter::Chi => &self.l_chi,
            Parameter::Gamma => &self.l_gamma,
        }
    }
}

/// Eigenbasis of a density matrix, reused for several SLD solves.
#[derive(Debug, Clone)]
pub struct SldSolver<'a> {
    rho: &'a DensityMatrix,
    spectrum: Spectrum,
    cutoff: f64,
}

impl<'a> SldSolver<'a> {
    pub fn new(rho: &'a DensityMatrix) -> Self {
        let spectrum = Spectrum::of(rho.matrix()).clamped();
        let cutoff = EPS_RANK * rho.trace().re;
        SldSolver {
            rho,
            spectrum,
            cutoff,
        }
    }

    /// Number of eigenvalues above the cutoff.
    pub fn support_rank(&self) -> usize {
        self.spectrum
            .values
            .iter()
            .filter(|&&p| p > self.cutoff)
            .count()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.values.as_slice()
    }

    /// Solves `2∂ρ = ρL + Lρ` on the support of `ρ`:
    /// `L_ij = 2⟨i|∂ρ|j⟩/(p_i + p_j)` in the eigenbasis, zero where
    /// `p_i + p_j` falls below the cutoff.
    pub fn solve(&self, drho: &CMatrix) -> Result<Sld> {
        let dim = self.rho.dim();
        if drho.nrows() != dim || drho.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: drho.nrows(),
            });
        }
        let dev = hermitian_deviation(drho);
        if dev > EPS_HERM * max_abs(drho).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let p = &self.spectrum.values;
        let d = self.spectrum.to_eigenbasis(drho);
        let l_eig = CMatrix::from_fn(dim, dim, |i, j| {
            let s = p[i] + p[j];
            if s > self.cutoff {
                d[(i, j)] * (2.0 / s)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut operator = self.spectrum.from_eigenbasis(&l_eig);
        crate::linalg::hermitize(&mut operator);

        let rho = self.rho.matrix();
        let lhs = rho * &operator + &operator * rho;
        let residual = frobenius(&(lhs - drho * C64::from(2.0))) / frobenius(drho).max(EPS_NUM);
        Ok(Sld {
            operator,
            residual,
            rank_deficient: residual > EPS_SLD,
        })
    }
}

/// SLD of a single derivative; see [`SldSolver::solve`].
pub fn solve_sld(rho: &DensityMatrix, drho: &CMatrix) -> Result<Sld> {
    SldSolver::new(rho).solve(drho)
}

/// QFIM, Uhlmann element and diagnostics at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfimResult {
    pub time: f64,
    pub f_chichi: f64,
    pub f_gammagamma: f64,
    pub f_chigamma: f64,
    /// `𝓤_χγ`; the full matrix is `[[0, u], [-u, 0]]`.
    pub u_chigamma: f64,
    pub support_rank: usize,
    /// Relative SLD residuals `[χ, γ]`.
    pub sld_residuals: [f64; 2],
}

impl QfimResult {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.f_chichi, self.f_chigamma],
            [self.f_chigamma, self.f_gammagamma],
        ]
    }

    pub fn diagonal(&self, which: Parameter) -> f64 {
        match which {
            Parameter::Chi => self.f_chichi,
            Parameter::Gamma => self.f_gammagamma,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.f_chichi * self.f_gammagamma - self.f_chigamma * self.f_chigamma
    }

    /// Eigenvalues of the 2×2 QFIM, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * (self.f_chichi + self.f_gammagamma);
        let half_diff = 0.5 * (self.f_chichi - self.f_gammagamma);
        let r = half_diff.hypot(self.f_chigamma);
        [half_tr - r, half_tr + r]
    }

    /// `|f_χγ| / √(f_χχ f_γγ)`; `None` when a diagonal entry vanishes.
    pub fn offdiag_ratio(&self) -> Option<f64> {
        self.normalized(self.f_chigamma)
    }

    /// `|𝓤_χγ| / √(f_χχ f_γγ)`; `None` when a diagonal entry vanishes.
    pub fn uhlmann_ratio(&self) -> Option<f64> {
        self.normalized(self.u_chigamma)
    }

    fn normalized(&self, x: f64) -> Option<f64> {
        let scale = (self.f_chichi * self.f_gammagamma).sqrt();
        (self.f_chichi > 0.0 && self.f_gammagamma > 0.0).then(|| x.abs() / scale)
    }
}

fn check_dims(rho: &DensityMatrix, sld: &SldPair) -> Result<()> {
    for l in [&sld.l_chi.operator, &sld.l_gamma.operator] {
        if l.nrows() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: l.nrows(),
            });
        }
    }
    Ok(())
}

/// `Tr[ρ A B]` without forming `A B`.
fn trace_triple(rho: &CMatrix, a: &CMatrix, b: &CMatrix) -> C64 {
    let ra = rho * a;
    // Tr[X B] = Σ_ij X_ij B_ji
    let n = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += ra[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `𝓕_jk = ½Tr[ρ{L_j, L_k}]`.
pub fn qfim(rho: &DensityMatrix, sld: &SldPair, time: f64) -> Result<QfimResult> {
    check_dims(rho, sld)?;
    let r = rho.matrix();
    let (lc, lg) = (&sld.l_chi.operator, &sld.l_gamma.operator);
    let f_cc = trace_triple(r, lc, lc).re;
    let f_gg = trace_triple(r, lg, lg).re;
    let cg = trace_triple(r, lc, lg);
    let gc = trace_triple(r, lg, lc);
    let sym = (cg + gc) * 0.5;
    let scale = (f_cc.abs() * f_gg.abs())
        .sqrt()
        .max(sym.re.abs())
        .max(f64::MIN_POSITIVE);
    if sym.im.abs() > EPS_IMAG * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "symmetrized QFIM entry has imaginary part {:.3e}",
            sym.im
        )));
    }
    Ok(QfimResult {
        time,
        f_chichi: f_cc,
        f_gammagamma: f_gg,
        f_chigamma: sym.re,
        u_chigamma: uhlmann_element(r, lc, lg),
        support_rank: SldSolver::new(rho).support_rank(),
        sld_residuals: [sld.l_chi.residual, sld.l_gamma.residual],
    })
}

fn uhlmann_element(rho: &CMatrix, ln: &CMatrix, lm: &CMatrix) -> f64 {
    // -(i/2) Tr[ρ[Ln, Lm]] = Im Tr[ρ Ln Lm]
    let a = trace_triple(rho, ln, lm);
    let b = trace_triple(rho, lm, ln);
    (C64::new(0.0, -0.5) * (a - b)).re
}

/// `𝓤_nm = -(i/2)Tr[ρ[L_n, L_m]]` for an arbitrary pair of SLDs.
pub fn uhlmann(rho: &DensityMatrix, l_n: &CMatrix, l_m: &CMatrix) -> Result<f64> {
    for l in [l_n, l_m] {
        if l.nrows() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: l.nrows(),
            });
        }
    }
    Ok(uhlmann_element(rho.matrix(), l_n, l_m))
}

/// Solves both SLDs of an extended state and assembles its QFIM.
pub fn analyze(state: &ExtendedState) -> Result<(SldPair, QfimResult)> {
    let solver = SldSolver::new(&state.rho);
    let pair = SldPair {
        l_chi: solver.solve(&state.drho_chi)?,
        l_gamma: solver.solve(&state.drho_gamma)?,
    };
    let mut q = qfim(&state.rho, &pair, state.time)?;
    q.support_rank = solver.support_rank();
    Ok((pair, q))
}

/// Cramér-Rao bounds for `M` repetitions and weight matrix `W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbReport {
    pub m_repetitions: usize,
    pub weight: [[f64; 2]; 2],
    /// `Tr[W 𝓕⁻¹]`, the per-repetition scalar bound.
    pub scalar_bound: f64,
    /// `1 / (M 𝓕_χχ)`.
    pub var_bound_chi: f64,
    /// `1 / (M 𝓕_γγ)`.
    pub var_bound_gamma: f64,
    /// `𝓕⁻¹ / M`, the matrix bound on the estimator covariance.
    pub covariance_bound: [[f64; 2]; 2],
}

pub const IDENTITY_WEIGHT: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

/// Relative determinant below which the QFIM counts as singular.
pub const EPS_SINGULAR: f64 = 1e-12;

pub fn crb_report(q: &QfimResult, m: usize, weight: [[f64; 2]; 2]) -> Result<CrbReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("m_repetitions must be ≥ 1".into()));
    }
    let [[w00, w01], [w10, w11]] = weight;
    if w01 != w10 || w00 < 0.0 || w11 < 0.0 || w00 * w11 < w01 * w01 {
        return Err(Error::InvalidParameter(
            "weight must be a symmetric positive semidefinite 2×2 matrix".into(),
        ));
    }
    let (a, b, d) = (q.f_chichi, q.f_chigamma, q.f_gammagamma);
    let det = q.determinant();
    let scale = (a.abs() + d.abs()).powi(2);
    if !(det > EPS_SINGULAR * scale) || scale == 0.0 {
        return Err(Error::SingularQfim { det });
    }
    let inv = [[d / det, -b / det], [-b / det, a / det]];
    let scalar_bound = w00 * inv[0][0] + w01 * inv[1][0] + w10 * inv[0][1] + w11 * inv[1][1];
    let mf = m as f64;
    Ok(CrbReport {
        m_repetitions: m,
        weight,
        scalar_bound,
        var_bound_chi: 1.0 / (mf * a),
        var_bound_gamma: 1.0 / (mf * d),
        covariance_bound: inv.map(|row| row.map(|x| x / mf)),
    })
}
