//! Explicit upper bound on the ground-state level, uniform in small `m`,
//! built from the test function `w(x, y) = v₀(x)/(1+y)`, and the empirical
//! lower-bound constant measured on computed solutions.

use crate::energy::{energy, NEHARI_TOL};
use crate::error::{Error, Result};
use crate::kernel::sphere_area;
use crate::params::ModelParams;
use crate::quadrature::DoubleExponential;
use crate::solver::GroundStateResult;
use crate::special::beta;

/// Radial tent: 1 for `r ≤ 1`, `2 - r` for `1 ≤ r ≤ 2`, 0 beyond.
pub fn tent_profile(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0 - r
    } else {
        0.0
    }
}

/// `(|v₀|²₂, |∇v₀|²₂, |v₀|_p^p)` for the tent in `R^N`.
pub fn tent_norms(dim: usize, p: f64) -> Result<(f64, f64, f64)> {
    if dim == 0 {
        return Err(Error::invalid("N", "must be >= 1"));
    }
    if !(p > 2.0) {
        return Err(Error::invalid("p", format!("{p} must be > 2")));
    }
    if dim == 1 {
        return Ok((8.0 / 3.0, 2.0, 2.0 + 2.0 / (p + 1.0)));
    }
    let n = dim as f64;
    let area = sphere_area(dim);
    let quad = DoubleExponential::with_tol(1e-13);
    let shell = |q: f64| quad.tanh_sinh(|r| r.powf(n - 1.0) * (2.0 - r).powf(q), 1.0, 2.0);
    let ball = 1.0 / n;
    let l2 = area * (ball + shell(2.0)?);
    let lp = area * (ball + shell(p)?);
    let grad = area * (2f64.powf(n) - 1.0) / n;
    Ok((l2, grad, lp))
}

/// `A = B(2-2s, 2s)` and `B = B(2-2s, 2+2s)`, the weighted integrals of
/// `(1+y)^{-2}` and `(1+y)^{-4}` against `y^{1-2s}` on the half line.
pub fn weight_integrals(s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("{s} outside (0, 1)")));
    }
    Ok((beta(2.0 - 2.0 * s, 2.0 * s), beta(2.0 - 2.0 * s, 2.0 + 2.0 * s)))
}

/// The same integrals by direct quadrature.
pub fn weight_integrals_by_quadrature(s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("{s} outside (0, 1)")));
    }
    let quad = DoubleExponential::with_tol(1e-13);
    let a = quad.exp_sinh(|y| if y == 0.0 { 0.0 } else { y.powf(1.0 - 2.0 * s) / (1.0 + y).powi(2) })?;
    let b = quad.exp_sinh(|y| if y == 0.0 { 0.0 } else { y.powf(1.0 - 2.0 * s) / (1.0 + y).powi(4) })?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerWitness {
    /// `‖u‖²_e / |u|²_p` on the computed solution.
    pub c_prime_emp: f64,
    pub lp_p: f64,
    pub norm_e_sq: f64,
    /// `(½-1/p)|u|_p^p`
    pub c_m: f64,
    /// `(½-1/p) C'^{p/(p-2)}`
    pub floor: f64,
    /// `| |u|_p^p - ‖u‖²_e | / ‖u‖²_e`
    pub manifold_gap: f64,
}

impl LowerWitness {
    /// `c_m ≥ floor > 0`, with round-off slack.
    pub fn holds(&self) -> bool {
        self.floor > 0.0 && self.c_m >= self.floor * (1.0 - 1e-8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub tent_l2_sq: f64,
    pub tent_grad_l2_sq: f64,
    pub tent_lp_p: f64,
    pub lower_witness: Option<LowerWitness>,
}

impl BoundsReport {
    pub const CSV_HEADER: &'static str = "A,B,C,delta,tent_l2_sq,tent_grad_l2_sq,tent_lp_p,lower_witness";

    pub fn csv_row(&self) -> String {
        let witness = self.lower_witness.map(|w| format!("{:.16e}", w.floor)).unwrap_or_default();
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.a, self.b, self.c, self.delta, self.tent_l2_sq, self.tent_grad_l2_sq, self.tent_lp_p, witness
        )
    }

    pub fn aligned_text(&self) -> String {
        let rows = [
            ("A", self.a),
            ("B", self.b),
            ("C", self.c),
            ("delta", self.delta),
            ("tent_l2_sq", self.tent_l2_sq),
            ("tent_grad_l2_sq", self.tent_grad_l2_sq),
            ("tent_lp_p", self.tent_lp_p),
        ];
        rows.iter().map(|(k, v)| format!("{k:<16} {v:>24.16e}\n")).collect()
    }
}

/// `δ = (½-1/p)[C + μ|v₀|²₂]^{p/(p-2)} / (|v₀|_p^p)^{2/(p-2)}` with
/// `C = A(|∇v₀|²₂ + (μ/2)^{1/s}|v₀|²₂) + B|v₀|²₂`. Requires
/// `0 ≤ m < (μ/2)^{1/(2s)}`; the value itself does not depend on `m`.
pub fn upper_bound_delta(params: &ModelParams) -> Result<BoundsReport> {
    params.validate()?;
    let limit = params.mass_limit();
    if !(params.m >= 0.0 && params.m < limit) {
        return Err(Error::MassOutOfRange { m: params.m, limit });
    }
    let (a, b) = weight_integrals(params.s)?;
    let (l2, grad, lp) = tent_norms(params.dim, params.p)?;
    let mu = params.mu;
    let p = params.p;
    let c = a * (grad + (0.5 * mu).powf(1.0 / params.s) * l2) + b * l2;
    let delta = (0.5 - 1.0 / p) * (c + mu * l2).powf(p / (p - 2.0)) / lp.powf(2.0 / (p - 2.0));
    Ok(BoundsReport {
        a,
        b,
        c,
        delta,
        tent_l2_sq: l2,
        tent_grad_l2_sq: grad,
        tent_lp_p: lp,
        lower_witness: None,
    })
}

/// Empirical constant in `‖u‖²_e ≥ C'|u|²_p` on a computed ground state and
/// the level floor it implies.
pub fn lower_bound_witness(result: &GroundStateResult, params: &ModelParams) -> Result<LowerWitness> {
    let e = energy(&result.field, params);
    let lp_p = e.lp_p(params.p);
    let gap = (lp_p - e.norm_e_sq).abs() / e.norm_e_sq;
    if !(gap < NEHARI_TOL) {
        return Err(Error::NotOnManifold { residual: gap });
    }
    let p = params.p;
    let c_prime = e.norm_e_sq / lp_p.powf(2.0 / p);
    let factor = 0.5 - 1.0 / p;
    Ok(LowerWitness {
        c_prime_emp: c_prime,
        lp_p,
        norm_e_sq: e.norm_e_sq,
        c_m: factor * lp_p,
        floor: factor * c_prime.powf(p / (p - 2.0)),
        manifold_gap: gap,
    })
}
