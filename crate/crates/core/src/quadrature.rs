//! Double-exponential quadrature (tanh-sinh on finite intervals, exp-sinh on
//! `[0, ∞)`). Both tolerate integrable endpoint singularities at the left end.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy)]
pub struct DoubleExponential {
    /// Relative tolerance on successive level estimates.
    pub tol: f64,
    pub max_level: u32,
    /// Half-width of the transformed `t` range.
    pub t_max: f64,
}

impl Default for DoubleExponential {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_level: 12,
            t_max: 6.0,
        }
    }
}

impl DoubleExponential {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// `∫_a^b f`. Abscissae near `a` are computed as `a + distance` so
    /// singularities at the left endpoint keep full relative precision.
    pub fn tanh_sinh(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let half = 0.5 * (b - a);
        // returns (distance from nearer endpoint, weight) for t >= 0
        let node = |t: f64| {
            let u = FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u).exp();
            let dist = half * 2.0 * e / (1.0 + e);
            let ch = u.cosh();
            let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
            (dist, w)
        };
        let eval = |t: f64| -> f64 {
            if t == 0.0 {
                return f(a + half) * half * FRAC_PI_2;
            }
            let (dist, w) = node(t.abs());
            if w == 0.0 || dist == 0.0 {
                return 0.0;
            }
            let x = if t < 0.0 { a + dist } else { b - dist };
            w * f(x)
        };
        self.run(eval)
    }

    /// `∫_0^∞ f` via `y = exp(π/2 · sinh t)`.
    pub fn exp_sinh(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let eval = |t: f64| -> f64 {
            let u = FRAC_PI_2 * t.sinh();
            let y = u.exp();
            if y == 0.0 || !y.is_finite() {
                return 0.0;
            }
            let w = y * FRAC_PI_2 * t.cosh();
            let v = f(y);
            if v == 0.0 {
                0.0
            } else {
                w * v
            }
        };
        self.run(eval)
    }

    /// Trapezoid in `t` with step halving until successive levels agree.
    fn run(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut h = 1.0;
        let steps = (self.t_max / h).floor() as i64;
        let mut sum = g(0.0);
        for j in 1..=steps {
            let t = j as f64 * h;
            sum += g(t) + g(-t);
        }
        let mut estimate = sum * h;
        let mut last_err = f64::INFINITY;
        for level in 1..=self.max_level {
            h *= 0.5;
            let count = (self.t_max / h).floor() as i64;
            let mut fresh = 0.0;
            let mut j = 1;
            while j <= count {
                let t = j as f64 * h;
                fresh += g(t) + g(-t);
                j += 2;
            }
            sum += fresh;
            let next = sum * h;
            if !next.is_finite() {
                return Err(Error::Quadrature {
                    estimate: next,
                    error: f64::INFINITY,
                });
            }
            last_err = (next - estimate).abs();
            estimate = next;
            if level >= 3 && last_err <= self.tol * estimate.abs().max(f64::MIN_POSITIVE) {
                return Ok(estimate);
            }
        }
        Err(Error::Quadrature {
            estimate,
            error: last_err,
        })
    }
}
