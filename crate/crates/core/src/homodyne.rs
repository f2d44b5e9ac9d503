//! Homodyne detection of the field quadrature.
//!
//! Quadrature eigenstates use the Hermite-function expansion
//! `⟨n|x⟩ = π^{-1/4} e^{-x²/2} H_n(x) / √(2ⁿ n!)`, i.e. the
//! `x = (a + a†)/√2` scaling with vacuum variance ½. The outcome density is
//! `p(x) = ⟨x|ρ|x⟩` and its parameter derivatives come from the co-propagated
//! `∂λρ`, so no finite differencing is involved.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimation::Parameter;
use crate::linalg::{CMatrix, C64};
use crate::propagator::ExtendedState;

/// Density floor for the Fisher-information integrand.
pub const EPS_DENSITY: f64 = 1e-12;
/// Tolerated negativity of `p(x)`.
pub const EPS_NEGATIVE: f64 = 1e-10;
/// Normalization tolerance on `∫p` and `∫∂p`.
pub const EPS_NORM: f64 = 1e-6;
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Smallest admissible half-width for a `dim`-level truncation.
pub fn required_half_width(dim: usize) -> f64 {
    ((2 * dim + 1) as f64).sqrt() + 4.0
}

/// Uniform grid symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<f64>,
    spacing: f64,
    x_max: f64,
}

impl QuadratureGrid {
    pub fn new(x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) || n_points < 3 {
            return Err(Error::InvalidParameter(
                "quadrature grid needs x_max > 0 and at least 3 points".into(),
            ));
        }
        let spacing = 2.0 * x_max / (n_points - 1) as f64;
        let half = (n_points - 1) as f64 / 2.0;
        let points = (0..n_points).map(|k| (k as f64 - half) * spacing).collect();
        Ok(QuadratureGrid {
            points,
            spacing,
            x_max,
        })
    }

    /// `x_max = √(2N+1) + 5` with 2001 points.
    pub fn default_for(dim: usize) -> Self {
        Self::new(required_half_width(dim) + 1.0, DEFAULT_GRID_POINTS)
            .expect("default grid parameters are valid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trapezoid rule over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let inner: f64 = values.iter().sum();
        self.spacing * (inner - 0.5 * (values[0] + values[n - 1]))
    }
}

/// Hermite functions `ψ_n(x_k)` tabulated on a grid, one row per point.
#[derive(Debug, Clone)]
pub struct WavefunctionTable {
    grid: QuadratureGrid,
    values: DMatrix<f64>,
}

impl WavefunctionTable {
    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// `ψ_n` at grid point `k`.
    pub fn value(&self, k: usize, n: usize) -> f64 {
        self.values[(k, n)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Tabulates `ψ_0..ψ_{dim-1}` with the normalized three-term recurrence
/// `ψ_{n+1} = √(2/(n+1)) x ψ_n - √(n/(n+1)) ψ_{n-1}`.
pub fn quadrature_wavefunctions(dim: usize, grid: &QuadratureGrid) -> Result<WavefunctionTable> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let required = required_half_width(dim);
    if grid.x_max < required {
        return Err(Error::GridTooNarrow {
            x_max: grid.x_max,
            required,
        });
    }
    let norm0 = std::f64::consts::PI.powf(-0.25);
    let mut values = DMatrix::zeros(grid.len(), dim);
    for (k, &x) in grid.points.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * x * x).exp();
        values[(k, 0)] = cur;
        for n in 0..dim - 1 {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
            values[(k, n + 1)] = next;
            prev = cur;
            cur = next;
        }
    }
    Ok(WavefunctionTable {
        grid: grid.clone(),
        values,
    })
}

/// `e^{-iθn̂} X e^{iθn̂}`: measuring `x_θ` on `ρ` is measuring `x_0` on the
/// rotated state.
pub fn rotate_frame(rho: &CMatrix, theta: f64) -> CMatrix {
    if theta == 0.0 {
        return rho.clone();
    }
    CMatrix::from_fn(rho.nrows(), rho.ncols(), |m, n| {
        rho[(m, n)] * C64::from_polar(1.0, -theta * (m as f64 - n as f64))
    })
}

/// Outcome density and its exact parameter derivatives on a grid.
#[derive(Debug, Clone)]
pub struct HomodyneDistribution {
    pub grid: QuadratureGrid,
    pub theta: f64,
    pub p: Vec<f64>,
    pub dp_chi: Vec<f64>,
    pub dp_gamma: Vec<f64>,
}

impl HomodyneDistribution {
    pub fn derivative(&self, which: Parameter) -> &[f64] {
        match which {
            Parameter::Chi => &self.dp_chi,
            Parameter::Gamma => &self.dp_gamma,
        }
    }

    pub fn mean(&self) -> f64 {
        let xp: Vec<f64> = self
            .grid
            .points
            .iter()
            .zip(&self.p)
            .map(|(x, p)| x * p)
            .collect();
        self.grid.integrate(&xp)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let v: Vec<f64> = self
            .grid
            .points
            .iter()
            .zip(&self.p)
            .map(|(x, p)| (x - mu).powi(2) * p)
            .collect();
        self.grid.integrate(&v)
    }
}

/// `⟨x|X|x⟩` for every grid point; only `Re X` contributes since the
/// wavefunctions are real and `X` is Hermitian.
fn diagonal_contraction(table: &WavefunctionTable, x: &CMatrix) -> Vec<f64> {
    let re = x.map(|z| z.re);
    let psi = &table.values;
    let projected = psi * &re;
    projected
        .row_iter()
        .zip(psi.row_iter())
        .map(|(a, b)| a.dot(&b))
        .collect()
}

pub fn homodyne_distribution(
    state: &ExtendedState,
    theta: f64,
    table: &WavefunctionTable,
) -> Result<HomodyneDistribution> {
    let dim = state.dim();
    if table.dim() < dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: table.dim(),
        });
    }
    if table.dim() > dim {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            found: dim,
        });
    }
    let p = diagonal_contraction(table, &rotate_frame(state.rho.matrix(), theta));
    let dp_chi = diagonal_contraction(table, &rotate_frame(&state.drho_chi, theta));
    let dp_gamma = diagonal_contraction(table, &rotate_frame(&state.drho_gamma, theta));

    let grid = &table.grid;
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -EPS_NEGATIVE {
        return Err(Error::Normalization(format!("density reaches {min:.3e}")));
    }
    let total = grid.integrate(&p);
    if (total - 1.0).abs() > EPS_NORM {
        return Err(Error::Normalization(format!(
            "∫p dx = {total} at t = {} (grid or truncation too small)",
            state.time
        )));
    }
    for (name, dp) in [("chi", &dp_chi), ("gamma", &dp_gamma)] {
        let abs: Vec<f64> = dp.iter().map(|v| v.abs()).collect();
        let scale = grid.integrate(&abs).max(1.0);
        let net = grid.integrate(dp);
        if net.abs() > EPS_NORM * scale {
            return Err(Error::Normalization(format!(
                "∫∂p dx = {net:.3e} for {name} at t = {}",
                state.time
            )));
        }
    }
    Ok(HomodyneDistribution {
        grid: grid.clone(),
        theta,
        p,
        dp_chi,
        dp_gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalFi {
    /// `∫ (∂p)²/p dx` over points with `p > ε_p`.
    pub value: f64,
    /// Probability mass on the points left out by the density floor.
    pub excluded_mass: f64,
}

pub fn classical_fi(dist: &HomodyneDistribution, which: Parameter) -> ClassicalFi {
    let dp = dist.derivative(which);
    let mut integrand = Vec::with_capacity(dist.p.len());
    let mut excluded = Vec::with_capacity(dist.p.len());
    for (&p, &d) in dist.p.iter().zip(dp) {
        if p > EPS_DENSITY {
            integrand.push(d * d / p);
            excluded.push(0.0);
        } else {
            integrand.push(0.0);
            excluded.push(p.max(0.0));
        }
    }
    ClassicalFi {
        value: dist.grid.integrate(&integrand).max(0.0),
        excluded_mass: dist.grid.integrate(&excluded),
    }
}
