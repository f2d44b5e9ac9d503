//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `max |M - M†|` over all entries.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Replaces `m` with `(m + m†)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

/// Sweeps after which the Jacobi iteration gives up.
const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided cyclic Jacobi on a Hermitian matrix. Rotations are applied
/// while `|a_pq| > ε √(|a_pp a_qq|)`, which resolves small eigenvalues of
/// graded positive semidefinite matrices to high relative accuracy.
fn jacobi_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                if mag <= f64::EPSILON * (app * aqq).abs().sqrt() || mag < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on the (p, q) plane
                let cj = phase.conj();
                for k in 0..n {
                    let (xp, xq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = xp * c - xq * cj * s;
                    a[(k, q)] = xp * s + xq * cj * c;
                }
                for k in 0..n {
                    let (xp, xq) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = xp * c - xq * phase * s;
                    a[(q, k)] = xp * s + xq * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let (xp, xq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = xp * c - xq * cj * s;
                    v[(k, q)] = xp * s + xq * cj * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    ((0..n).map(|k| a[(k, k)].re).collect(), v)
}

impl Spectrum {
    pub fn of(m: &CMatrix) -> Self {
        let (vals, vecs) = jacobi_eigen(m);
        let n = m.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| vals[k]));
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &vecs.column(src));
        }
        Spectrum { values, vectors }
    }

    /// Negative eigenvalues replaced by zero.
    pub fn clamped(mut self) -> Self {
        self.values.apply(|v| *v = v.max(0.0));
        self
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }

    /// Change of basis `V† m V`.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * m * &self.vectors
    }

    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &self.vectors * m * self.vectors.adjoint()
    }
}

/// Square root of a positive semidefinite Hermitian matrix, clamping
/// negative eigenvalues at zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    Spectrum::of(m).map(|v| v.max(0.0).sqrt())
}

/// Exponential `exp(-i G)` of a Hermitian generator.
pub fn unitary_from_generator(g: &CMatrix) -> CMatrix {
    let sp = Spectrum::of(g);
    let n = g.nrows();
    let mut scaled = sp.vectors.clone();
    for k in 0..n {
        let phase = C64::from_polar(1.0, -sp.values[k]);
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * sp.vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermitian(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        hermitize(&mut m);
        m
    }

    #[test]
    fn spectrum_reconstructs_matrix() {
        for n in [1, 2, 7, 25] {
            let m = hermitian(n, n as u64);
            let sp = Spectrum::of(&m);
            assert!(max_abs(&(sp.map(|x| x) - &m)) < 1e-13);
            let gram = sp.vectors.adjoint() * &sp.vectors;
            assert!(max_abs(&(gram - CMatrix::identity(n, n))) < 1e-13);
            assert!(sp.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn spectrum_matches_known_values() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
            ],
        );
        let sp = Spectrum::of(&m);
        assert!((sp.values[0] - 3.0).abs() < 1e-15);
        assert!((sp.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn graded_matrix_keeps_relative_accuracy() {
        // S A S with A positive definite and S spanning 60 decades
        let n = 10;
        let mut a = hermitian(n, 3) * C64::from(0.2);
        for k in 0..n {
            a[(k, k)] += C64::from(1.0);
        }
        let scale: Vec<f64> = (0..n).map(|k| 10f64.powi(-3 * k as i32)).collect();
        let h = CMatrix::from_fn(n, n, |i, j| a[(i, j)] * scale[i] * scale[j]);
        let sp = Spectrum::of(&h);
        for k in 0..n {
            let guess = scale[k] * scale[k] * a[(k, k)].re;
            let ratio = sp.values[k] / guess;
            assert!(
                (0.5..2.0).contains(&ratio),
                "eigenvalue {k}: {} vs {guess}",
                sp.values[k]
            );
        }
        assert!(sp
            .vectors
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn diagonal_input_is_left_alone() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1e-200, 0.0),
            C64::new(3.0, 0.0),
            C64::new(1e-40, 0.0),
        ]));
        let sp = Spectrum::of(&m);
        assert_eq!(sp.values.as_slice(), &[3.0, 1e-40, 1e-200]);
    }
}
