//! Dormand–Prince 5(4) integrator over a flat complex state vector.

use crate::error::{Error, Result};
use crate::linalg::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Right-hand side `dy/dt = f(t, y)` written into `dy`.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Adaptive stepper holding its stage buffers. The last stage doubles as the
/// first stage of the next step (FSAL).
pub struct DormandPrince {
    tol: Tolerances,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    h: Option<f64>,
    fsal_valid: bool,
    pub stats: StepStats,
}

impl DormandPrince {
    pub fn new(len: usize, tol: Tolerances) -> Self {
        let buf = || vec![C64::new(0.0, 0.0); len];
        DormandPrince {
            tol,
            k: [buf(), buf(), buf(), buf(), buf(), buf(), buf()],
            y_stage: buf(),
            y_new: buf(),
            h: None,
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    fn eval_stage<S: OdeSystem>(&mut self, sys: &S, t: f64, idx: usize) {
        sys.rhs(t, &self.y_stage, &mut self.k[idx]);
        self.stats.rhs_evals += 1;
    }

    fn eval_at<S: OdeSystem>(&mut self, sys: &S, t: f64, idx: usize, y: &[C64]) {
        sys.rhs(t, y, &mut self.k[idx]);
        self.stats.rhs_evals += 1;
    }

    fn stage(&mut self, y: &[C64], h: f64, coeffs: &[(usize, f64)]) {
        for (i, out) in self.y_stage.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (h * a);
            }
            *out = acc;
        }
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[C64], span: f64) -> f64 {
        self.eval_at(sys, t, 0, y);
        self.fsal_valid = true;
        let sc = |yi: C64| self.tol.abs + self.tol.rel * yi.norm();
        let n = y.len() as f64;
        let d0 = (y.iter().map(|&v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(&v, f)| (f.norm() / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0.min(span.abs())
    }

    /// Advances `y` from `t` to exactly `t_end`. `on_accept` sees every
    /// accepted step and may abort the integration.
    pub fn advance<S, F>(
        &mut self,
        sys: &S,
        t: &mut f64,
        y: &mut [C64],
        t_end: f64,
        mut on_accept: F,
    ) -> Result<()>
    where
        S: OdeSystem,
        F: FnMut(f64, &[C64]) -> Result<()>,
    {
        let span = t_end - *t;
        if span <= 0.0 {
            return Ok(());
        }
        let h_min = 1e-14 * t_end.abs().max(1.0);
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(sys, *t, y, span),
        };
        if !self.fsal_valid {
            self.eval_at(sys, *t, 0, y);
            self.fsal_valid = true;
        }
        loop {
            let remaining = t_end - *t;
            if remaining <= h_min {
                *t = t_end;
                return Ok(());
            }
            let hitting_end = h >= remaining;
            let h_step = if hitting_end { remaining } else { h };

            self.stage(y, h_step, &[(0, A21)]);
            self.eval_stage(sys, *t + C2 * h_step, 1);
            self.stage(y, h_step, &[(0, A31), (1, A32)]);
            self.eval_stage(sys, *t + C3 * h_step, 2);
            self.stage(y, h_step, &[(0, A41), (1, A42), (2, A43)]);
            self.eval_stage(sys, *t + C4 * h_step, 3);
            self.stage(y, h_step, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            self.eval_stage(sys, *t + C5 * h_step, 4);
            self.stage(
                y,
                h_step,
                &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
            );
            self.eval_stage(sys, *t + h_step, 5);
            self.stage(
                y,
                h_step,
                &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)],
            );
            std::mem::swap(&mut self.y_stage, &mut self.y_new);
            sys.rhs(*t + h_step, &self.y_new, &mut self.k[6]);
            self.stats.rhs_evals += 1;

            let mut err2 = 0.0;
            for i in 0..y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h_step;
                let sc = self.tol.abs + self.tol.rel * y[i].norm().max(self.y_new[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / y.len() as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite error estimate at t = {t}"
                )));
            }

            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                *t = if hitting_end { t_end } else { *t + h_step };
                self.stats.accepted += 1;
                on_accept(*t, y)?;
                // keep the controller's step when clipping to an output point
                if !hitting_end || h_step * fac < h {
                    h = h_step * fac;
                }
                self.h = Some(h);
                if hitting_end {
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                h = h_step * fac.min(1.0);
                if h < h_min {
                    return Err(Error::StepUnderflow { time: *t, step: h });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotor {
        omega: f64,
        decay: f64,
    }

    impl OdeSystem for Rotor {
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            let rate = C64::new(-self.decay, self.omega);
            for (d, v) in dy.iter_mut().zip(y) {
                *d = rate * v;
            }
        }
    }

    struct Forced;

    impl OdeSystem for Forced {
        fn rhs(&self, t: f64, _y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(t.cos(), 0.0);
        }
    }

    #[test]
    fn damped_rotation_matches_exponential() {
        let sys = Rotor {
            omega: 2.0,
            decay: 0.1,
        };
        let tol = Tolerances {
            rel: 1e-10,
            abs: 1e-12,
        };
        let mut dp = DormandPrince::new(2, tol);
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.5)];
        let mut t = 0.0;
        for &target in &[0.5, 3.0, 10.0] {
            dp.advance(&sys, &mut t, &mut y, target, |_, _| Ok(()))
                .unwrap();
            assert_eq!(t, target);
            let exact = C64::new(-0.1 * target, 2.0 * target).exp();
            assert!(
                (y[0] - exact).norm() < 1e-8,
                "t={target}: {}",
                (y[0] - exact).norm()
            );
            assert!((y[1] - exact * C64::new(0.0, 0.5)).norm() < 1e-8);
        }
        assert!(dp.stats.accepted > 10);
    }

    #[test]
    fn time_dependent_forcing() {
        let tol = Tolerances {
            rel: 1e-10,
            abs: 1e-12,
        };
        let mut dp = DormandPrince::new(1, tol);
        let mut y = vec![C64::new(0.0, 0.0)];
        let mut t = 0.0;
        dp.advance(&Forced, &mut t, &mut y, 4.0, |_, _| Ok(()))
            .unwrap();
        assert!((y[0].re - 4f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence_with_tolerance() {
        let sys = Rotor {
            omega: 1.0,
            decay: 0.0,
        };
        let errs: Vec<f64> = [1e-6, 1e-9]
            .iter()
            .map(|&rel| {
                let mut dp = DormandPrince::new(
                    1,
                    Tolerances {
                        rel,
                        abs: rel * 1e-2,
                    },
                );
                let mut y = vec![C64::new(1.0, 0.0)];
                let mut t = 0.0;
                dp.advance(&sys, &mut t, &mut y, 20.0, |_, _| Ok(()))
                    .unwrap();
                (y[0] - C64::new(0.0, 20.0).exp()).norm()
            })
            .collect();
        assert!(errs[1] < errs[0] * 1e-2, "{errs:?}");
    }

    #[test]
    fn callback_can_abort() {
        let sys = Rotor {
            omega: 1.0,
            decay: 0.0,
        };
        let mut dp = DormandPrince::new(
            1,
            Tolerances {
                rel: 1e-8,
                abs: 1e-10,
            },
        );
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut t = 0.0;
        let r = dp.advance(&sys, &mut t, &mut y, 10.0, |t, _| {
            if t > 1.0 {
                Err(Error::Numerical("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
        assert!(t > 1.0 && t < 10.0);
    }
}
