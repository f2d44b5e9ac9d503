//! Truncated Fock-space operators, states and the Kerr resonator Hamiltonian.
//!
//! All rates are angular frequencies in units of the detuning; a caller
//! working in `Δ = 1` units passes `delta = 1.0`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, hermitian_deviation, max_abs, sqrt_psd, trace, unitary_from_generator, CMatrix,
    Spectrum, C64,
};

/// Relative Hermiticity tolerance (against the largest entry).
pub const EPS_HERM: f64 = 1e-10;
/// Trace tolerance.
pub const EPS_TRACE: f64 = 1e-8;
/// Allowed negativity of the smallest eigenvalue.
pub const EPS_PSD: f64 = 1e-8;

/// Physical parameters defining one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Pump-cavity detuning `ω_p - ω_c`.
    pub delta: f64,
    /// Kerr anharmonicity.
    pub chi: f64,
    /// One-photon decay rate.
    pub gamma: f64,
    /// Coherent drive strength.
    pub drive_f: f64,
    /// Local-oscillator phase, in `[0, 2π)`.
    pub theta: f64,
}

impl ModelParams {
    pub fn new(delta: f64, chi: f64, gamma: f64, drive_f: f64, theta: f64) -> Result<Self> {
        let p = ModelParams {
            delta,
            chi,
            gamma,
            drive_f,
            theta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters in units of the detuning (`Δ = 1`, `θ = 0`).
    pub fn unit_detuning(chi: f64, gamma: f64, drive_f: f64) -> Result<Self> {
        Self::new(1.0, chi, gamma, drive_f, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !self.delta.is_finite() {
            return bad("delta must be finite");
        }
        if !self.chi.is_finite() {
            return bad("chi must be finite");
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return bad("gamma must be ≥ 0");
        }
        if !self.drive_f.is_finite() || self.drive_f < 0.0 {
            return bad("f must be ≥ 0");
        }
        if !(0.0..TAU).contains(&self.theta) {
            return bad("theta must lie in [0, 2π)");
        }
        Ok(())
    }

    /// All rates multiplied by `s`; equivalent to rescaling time by `1/s`.
    pub fn time_scaled(&self, s: f64) -> Self {
        ModelParams {
            delta: self.delta * s,
            chi: self.chi * s,
            gamma: self.gamma * s,
            drive_f: self.drive_f * s,
            theta: self.theta,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        Err(Error::InvalidDimension(dim))
    } else {
        Ok(())
    }
}

/// Dense operator on the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    entries: CMatrix,
}

impl FockOperator {
    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        check_dim(entries.nrows())?;
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Numerical("operator has non-finite entries".into()));
        }
        Ok(FockOperator { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            entries: self.entries.adjoint(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        hermitian_deviation(&self.entries) <= EPS_HERM * max_abs(&self.entries).max(1.0)
    }
}

/// Truncated annihilation operator: `a[n-1, n] = √n`.
pub fn annihilation(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(FockOperator { entries: m })
}

pub fn creation(dim: usize) -> Result<FockOperator> {
    Ok(annihilation(dim)?.adjoint())
}

/// `a†a`, diagonal with entries `0..dim`.
pub fn number(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let diag = nalgebra::DVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0));
    Ok(FockOperator {
        entries: CMatrix::from_diagonal(&diag),
    })
}

/// `½ a†a†aa`, the derivative of the Hamiltonian with respect to `χ`.
pub fn kerr_operator(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let diag = nalgebra::DVector::from_fn(dim, |n, _| {
        let n = n as f64;
        C64::new(0.5 * n * (n - 1.0), 0.0)
    });
    Ok(FockOperator {
        entries: CMatrix::from_diagonal(&diag),
    })
}

/// `H = -Δ a†a + (χ/2) a†a†aa - iF(a - a†)`, assembled from dense ladder
/// operator products.
pub fn build_hamiltonian(p: &ModelParams, dim: usize) -> Result<FockOperator> {
    let a = annihilation(dim)?.into_matrix();
    let ad = a.adjoint();
    let n = &ad * &a;
    let kerr = &ad * &ad * &a * &a;
    let i = C64::i();
    let h = n * C64::from(-p.delta) + kerr * C64::from(0.5 * p.chi) - (a - ad) * (i * p.drive_f);
    FockOperator::from_matrix(h)
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    } else {
        Ok(())
    }
}

/// Density matrix satisfying Hermiticity, unit trace and positivity within
/// [`EPS_HERM`], [`EPS_TRACE`] and [`EPS_PSD`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let op = FockOperator::from_matrix(entries)?;
        let entries = op.into_matrix();
        let dev = hermitian_deviation(&entries);
        if dev > EPS_HERM * max_abs(&entries).max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = trace(&entries);
        if (tr - C64::from(1.0)).norm() > EPS_TRACE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = Spectrum::of(&entries).min();
        if min < -EPS_PSD {
            return Err(Error::InvalidState(format!(
                "smallest eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(DensityMatrix { entries })
    }

    /// Wraps a matrix whose invariants the caller has already established.
    pub(crate) fn new_unchecked(entries: CMatrix) -> Self {
        DensityMatrix { entries }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = nalgebra::DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|z| z / norm2.sqrt()),
        );
        Self::new(&psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> C64 {
        trace(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }

    pub fn population(&self, n: usize) -> f64 {
        self.entries[(n, n)].re
    }

    /// Population of the highest two Fock levels.
    pub fn tail_population(&self) -> f64 {
        let n = self.dim();
        self.population(n - 1) + self.population(n - 2)
    }

    pub fn expectation(&self, op: &FockOperator) -> Result<C64> {
        check_same_dim(self.dim(), op.dim())?;
        Ok((&self.entries * op.matrix()).trace())
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_same_dim(self.dim(), other.dim())?;
        let diff = &self.entries - &other.entries;
        Ok(0.5
            * Spectrum::of(&diff)
                .values
                .iter()
                .map(|v| v.abs())
                .sum::<f64>())
    }
}

pub fn vacuum_state(dim: usize) -> Result<DensityMatrix> {
    check_dim(dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    m[(0, 0)] = C64::from(1.0);
    Ok(DensityMatrix { entries: m })
}

/// Coherent state from its Fock amplitudes `e^{-|α|²/2} αⁿ/√n!`,
/// renormalized on the truncated space.
pub fn coherent_state(dim: usize, alpha: C64) -> Result<DensityMatrix> {
    check_dim(dim)?;
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..dim {
        amps.push(c);
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    DensityMatrix::pure(&amps)
}

/// Truncated displacement operator `exp(α a† - α* a)`, exponentiated
/// through the eigenbasis of its Hermitian generator.
pub fn displacement(dim: usize, alpha: C64) -> Result<FockOperator> {
    let a = annihilation(dim)?.into_matrix();
    let ad = a.adjoint();
    // exp(αa† - α*a) = exp(-iG) with G = i(αa† - α*a)
    let g = (ad * alpha - a * alpha.conj()) * C64::i();
    FockOperator::from_matrix(unitary_from_generator(&g))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
///
/// Evaluated as the squared trace norm of `√ρ √σ`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let prod = sqrt_psd(rho.matrix()) * sqrt_psd(sigma.matrix());
    let root_fid: f64 = prod.singular_values().iter().sum();
    Ok((root_fid * root_fid).clamp(0.0, 1.0))
}

/// Relative Frobenius distance helper used by the self-checks.
pub fn relative_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / frobenius(a).max(frobenius(b)).max(f64::MIN_POSITIVE)
}
