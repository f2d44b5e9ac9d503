#![allow(dead_code)]

use kerr_metrology::estimation::Parameter;
use kerr_metrology::linalg::{CMatrix, C64};
use kerr_metrology::{propagate_extended, ExtendedState, ModelParams, PropagationConfig};

pub const TIGHT_REL: f64 = 1e-12;
pub const TIGHT_ABS: f64 = 1e-14;

pub fn shifted(p: &ModelParams, which: Parameter, d: f64) -> ModelParams {
    let mut q = *p;
    match which {
        Parameter::Chi => q.chi += d,
        Parameter::Gamma => q.gamma += d,
    }
    q
}

pub fn tight(dim: usize, times: Vec<f64>) -> PropagationConfig {
    PropagationConfig::new(dim, times).with_tolerances(TIGHT_REL, TIGHT_ABS)
}

pub fn states(p: &ModelParams, cfg: &PropagationConfig) -> Vec<ExtendedState> {
    propagate_extended(p, cfg).unwrap().states
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Small deterministic Hermitian matrix with entries in the unit disk.
pub fn hermitian(n: usize, seed: u64) -> CMatrix {
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut next = || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(next(), 0.0);
        for j in 0..i {
            let z = C64::new(next(), next());
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}
