//! Adaptive Dormand–Prince 5(4) integrator with FSAL and PI-free step control.
//!
//! Steps are clamped so that every requested output time is hit exactly; no
//! interpolation is involved in the sampled states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    /// Accepted plus rejected steps allowed in one call to `integrate`.
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

/// Below this the error estimate is dominated by roundoff and the controller
/// can stall instead of failing.
pub const MIN_REL_TOL: f64 = 1e-14;

fn default_max_steps() -> u64 {
    10_000_000
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-9,
            abs: 1e-11,
            max_steps: default_max_steps(),
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0 && self.abs > 0.0 && self.rel.is_finite() && self.abs.is_finite()) {
            return Err(Error::InvalidTolerance(format!(
                "rel and abs must be positive, got rel = {}, abs = {}",
                self.rel, self.abs
            )));
        }
        if self.rel < MIN_REL_TOL {
            return Err(Error::InvalidTolerance(format!(
                "rel = {} is below the roundoff floor {MIN_REL_TOL:e}",
                self.rel
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidTolerance("max_steps must be positive".into()));
        }
        Ok(())
    }
}

// Autonomous right-hand sides only, so the nodes c_i never appear.
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

// Fifth-order weights minus the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Default, Clone, Copy)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

pub struct Dopri5 {
    tol: Tolerances,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    pub stats: StepStats,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        Ok(Dopri5 {
            tol,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
            stats: StepStats::default(),
        })
    }

    /// Integrates `dy/dt = f(y)` from `t0` through every time in `outputs`
    /// (sorted, all `>= t0`), calling `observe(k, y)` at each one.
    pub fn integrate<F, O>(
        &mut self,
        mut f: F,
        t0: f64,
        y: &mut [f64],
        outputs: &[f64],
        mut observe: O,
    ) -> Result<()>
    where
        F: FnMut(&[f64], &mut [f64]),
        O: FnMut(usize, &[f64]),
    {
        let n = y.len();
        assert_eq!(n, self.y_new.len(), "state dimension changed");
        let mut t = t0;
        f(y, &mut self.k[0]);
        self.stats.rhs_evals += 1;
        let mut h = self.initial_step(&mut f, y, outputs.last().copied().unwrap_or(t0) - t0);
        let mut attempts = 0u64;

        for (idx, &target) in outputs.iter().enumerate() {
            if target < t {
                return Err(Error::InvalidGrid(format!(
                    "output time {target} precedes current time {t}"
                )));
            }
            while t < target {
                if attempts == self.tol.max_steps {
                    return Err(Error::StepLimit {
                        time: t,
                        steps: attempts,
                    });
                }
                attempts += 1;
                let remaining = target - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let err = self.trial_step(&mut f, y, step);
                if !err.is_finite() {
                    h = step * MIN_FACTOR;
                    self.stats.rejected += 1;
                } else if err <= 1.0 {
                    self.stats.accepted += 1;
                    t = if last { target } else { t + step };
                    y.copy_from_slice(&self.y_new);
                    self.k.swap(0, 6);
                    let factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    // A step shortened to land on an output time says nothing
                    // about the natural step size.
                    h = if last {
                        h.max(step * factor)
                    } else {
                        step * factor
                    };
                } else {
                    self.stats.rejected += 1;
                    h = step * (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { time: t, step: h });
                }
            }
            observe(idx, y);
        }
        Ok(())
    }

    /// Attempts one step of size `h` from `y` (with `k[0] = f(y)`), leaving
    /// the candidate in `y_new` and `f(y_new)` in `k[6]`. Returns the scaled
    /// max-norm error estimate.
    fn trial_step<F>(&mut self, f: &mut F, y: &[f64], h: f64) -> f64
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(ys, k5);
        for i in 0..n {
            ys[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(ys, k6);
        let yn = &mut self.y_new;
        for i in 0..n {
            yn[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(yn, k7);
        self.stats.rhs_evals += 6;

        let mut acc = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.tol.abs + self.tol.rel * y[i].abs().max(yn[i].abs());
            acc = f64::max(acc, (e / scale).abs());
        }
        acc
    }

    // Hairer, Nørsett & Wanner's starting-step heuristic.
    fn initial_step<F>(&mut self, f: &mut F, y: &[f64], span: f64) -> f64
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let n = y.len() as f64;
        let scale = |v: f64| self.tol.abs + self.tol.rel * v.abs();
        let d0 = (y.iter().map(|&v| (v / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(&v, &dv)| (dv / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        for (ys, (&v, &dv)) in self.y_stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *ys = v + h0 * dv;
        }
        f(&self.y_stage, &mut self.k[1]);
        self.stats.rhs_evals += 1;
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(&v, (&a, &b))| ((a - b) / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        let h = (100.0 * h0).min(h1);
        if span > 0.0 {
            h.min(span)
        } else {
            h
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut solver = Dopri5::new(2, Tolerances::default()).unwrap();
        let mut y = [1.0, 0.0];
        let outputs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let mut worst: f64 = 0.0;
        solver
            .integrate(
                |y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &mut y,
                &outputs,
                |k, y| {
                    let t = outputs[k];
                    worst = worst
                        .max((y[0] - t.cos()).abs())
                        .max((y[1] + t.sin()).abs());
                },
            )
            .unwrap();
        assert!(worst < 1e-7, "max error {worst}");
    }

    #[test]
    fn exponential_growth_hits_outputs() {
        let mut solver = Dopri5::new(
            1,
            Tolerances {
                rel: 1e-10,
                abs: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        let mut y = [1.0];
        let mut seen = vec![];
        solver
            .integrate(
                |y, dy| dy[0] = y[0],
                0.0,
                &mut y,
                &[0.0, 0.3, 1.0, 2.0],
                |k, y| seen.push((k, y[0])),
            )
            .unwrap();
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[0].1, 1.0);
        for (k, v) in seen {
            let t = [0.0, 0.3, 1.0, 2.0][k];
            assert!((v - f64::exp(t)).abs() < 1e-8 * f64::exp(t));
        }
    }

    #[test]
    fn rejects_bad_tolerances() {
        let ok = Tolerances::default();
        assert!(Dopri5::new(1, Tolerances { rel: 0.0, ..ok }).is_err());
        assert!(Dopri5::new(1, Tolerances { abs: -1.0, ..ok }).is_err());
        assert!(Dopri5::new(1, Tolerances { rel: 1e-30, ..ok }).is_err());
        assert!(Dopri5::new(1, Tolerances { max_steps: 0, ..ok }).is_err());
    }

    #[test]
    fn underflow_is_reported() {
        // Finite-time blow-up at t = 1.
        let mut solver = Dopri5::new(1, Tolerances::default()).unwrap();
        let mut y = [1.0];
        let res = solver.integrate(|y, dy| dy[0] = y[0] * y[0], 0.0, &mut y, &[2.0], |_, _| {});
        assert!(matches!(res, Err(Error::StepUnderflow { .. })), "{res:?}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let tol = Tolerances {
            max_steps: 5,
            ..Default::default()
        };
        let mut solver = Dopri5::new(2, tol).unwrap();
        let mut y = [1.0, 0.0];
        let res = solver.integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &mut y,
            &[100.0],
            |_, _| {},
        );
        assert!(
            matches!(res, Err(Error::StepLimit { steps: 5, .. })),
            "{res:?}"
        );
    }
}
