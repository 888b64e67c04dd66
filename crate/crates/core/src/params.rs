//! Physical and exponent parameters of the problem
//! `[(-Δ+m²)^s - m^{2s}]u + μu = |u|^{p-2}u` in N dimensions.

use crate::error::{Error, Result};
use std::fmt;

/// The operator `(-Δ+m²)^s` on its own, without the nonlinear problem's
/// constraints on `p` and `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOperator {
    s: f64,
    m: f64,
}

impl FractionalOperator {
    pub fn new(s: f64, m: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid("s", format!("s = {s} violates s in (0,1)")));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid("m", format!("m = {m} must be finite and >= 0")));
        }
        Ok(Self { s, m })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Fourier multiplier `(|k|² + m²)^s`.
    pub fn symbol(&self, k_sq: f64) -> f64 {
        (k_sq + self.m * self.m).powf(self.s)
    }

    /// `m^{2s}`, the value of the symbol at zero frequency.
    pub fn mass_shift(&self) -> f64 {
        self.symbol(0.0)
    }

    /// Multiplier of `(-Δ+m²)^s - m^{2s}`; vanishes at k = 0.
    pub fn shifted_symbol(&self, k_sq: f64) -> f64 {
        self.symbol(k_sq) - self.mass_shift()
    }
}

/// Admissible parameters of the nonlinear problem.
///
/// When `N = 2s` exactly (only possible for N = 1, s = 1/2) the critical
/// exponent `2N/(N-2s)` is infinite and every `p > 2` is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub s: f64,
    pub m: f64,
    pub mu: f64,
    pub p: f64,
    pub dim: usize,
}

impl ModelParams {
    pub fn new(s: f64, m: f64, mu: f64, p: f64, dim: usize) -> Result<Self> {
        let params = Self { s, m, mu, p, dim };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        FractionalOperator::new(self.s, self.m)?;
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", format!("mu = {} must be finite and > 0", self.mu)));
        }
        if self.dim == 0 {
            return Err(Error::invalid("N", "dimension must be a positive integer"));
        }
        let n = self.dim as f64;
        if n < 2.0 * self.s {
            return Err(Error::invalid(
                "N",
                format!("N = {} must satisfy N >= 2s = {}", self.dim, 2.0 * self.s),
            ));
        }
        let crit = critical_exponent(self.dim, self.s);
        if !(self.p > 2.0 && self.p < crit) {
            let bound = if crit.is_finite() {
                format!("2N/(N-2s) = {crit:.6}")
            } else {
                "infinity (N = 2s)".to_string()
            };
            return Err(Error::invalid(
                "p",
                format!("p = {} must satisfy 2 < p < {bound}", self.p),
            ));
        }
        Ok(())
    }

    pub fn operator(&self) -> FractionalOperator {
        FractionalOperator {
            s: self.s,
            m: self.m,
        }
    }

    /// Same problem with a different mass.
    pub fn with_mass(&self, m: f64) -> Result<Self> {
        Self::new(self.s, m, self.mu, self.p, self.dim)
    }

    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dim, self.s)
    }

    /// Upper end of the mass range `0 < m < (μ/2)^{1/2s}` where the uniform
    /// energy bound applies.
    pub fn mass_limit(&self) -> f64 {
        (self.mu / 2.0).powf(1.0 / (2.0 * self.s))
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s={} m={} mu={} p={} N={}",
            self.s, self.m, self.mu, self.p, self.dim
        )
    }
}

/// `2N/(N-2s)`, or `+inf` when `N <= 2s`.
pub fn critical_exponent(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let gap = n - 2.0 * s;
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * n / gap
    }
}
