//! Energy functional, Nehari functional and the equivalent norm
//! `‖u‖²_e = |u|²_{H^s_m} + (μ - m^{2s})|u|²₂`, all on the trace side.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::spectral::{hs_norm_sq, lp_pow, RealField, SpectralOperator};

/// Relative Nehari residual accepted as "on the manifold".
pub const NEHARI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½ |u|²_{H^s_m}`
    pub hs_term: f64,
    /// `-(m^{2s}/2) |u|²₂`
    pub mass_shift: f64,
    /// `(μ/2) |u|²₂`
    pub potential: f64,
    /// `-(1/p) |u|_p^p`
    pub nonlinear: f64,
    pub total: f64,
    pub norm_e_sq: f64,
    /// `‖u‖²_e - |u|_p^p`
    pub nehari: f64,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: &'static str = "hs_term,mass_shift,potential,nonlinear,total,norm_e_sq,nehari";

    fn from_norms(hs: f64, l2_sq: f64, lp_p: f64, params: &ModelParams) -> Self {
        let shift = params.operator().mass_shift();
        let hs_term = 0.5 * hs;
        let mass_shift = -0.5 * shift * l2_sq;
        let potential = 0.5 * params.mu * l2_sq;
        let nonlinear = -lp_p / params.p;
        let norm_e_sq = hs + (params.mu - shift) * l2_sq;
        Self {
            hs_term,
            mass_shift,
            potential,
            nonlinear,
            total: hs_term + mass_shift + potential + nonlinear,
            norm_e_sq,
            nehari: norm_e_sq - lp_p,
        }
    }

    /// `|u|_p^p` recovered from the nonlinear term.
    pub fn lp_p(&self, p: f64) -> f64 {
        -p * self.nonlinear
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.hs_term, self.mass_shift, self.potential, self.nonlinear, self.total, self.norm_e_sq, self.nehari
        )
    }
}

/// Energy terms of `u`.
pub fn energy(u: &RealField, params: &ModelParams) -> EnergyBreakdown {
    let hs = hs_norm_sq(u, &params.operator());
    EnergyBreakdown::from_norms(hs, u.l2_norm_sq(), lp_pow(u, params.p), params)
}

/// Same as [`energy`] with precomputed multiplier tables.
pub fn energy_with(u: &RealField, op: &SpectralOperator) -> EnergyBreakdown {
    let (hs, l2) = op.quadratic_terms(u);
    EnergyBreakdown::from_norms(hs, l2, lp_pow(u, op.params().p), op.params())
}

/// Scaling `t*` with `J(t* u) = 0`, i.e. `t* = (‖u‖²_e / |u|_p^p)^{1/(p-2)}`.
pub fn nehari_scaling(norm_e_sq: f64, lp_p: f64, p: f64) -> Result<f64> {
    if !(norm_e_sq > 0.0) {
        return Err(Error::ProjectionUndefined("equivalent norm is not positive"));
    }
    if !(lp_p > 0.0) {
        return Err(Error::ProjectionUndefined("L^p norm vanishes"));
    }
    Ok((norm_e_sq / lp_p).powf(1.0 / (p - 2.0)))
}

/// Projects a nonzero field radially onto the Nehari manifold.
pub fn nehari_project(u: &RealField, params: &ModelParams) -> Result<(f64, RealField)> {
    if u.is_zero() {
        return Err(Error::ProjectionUndefined("zero field"));
    }
    let e = energy(u, params);
    let t = nehari_scaling(e.norm_e_sq, e.lp_p(params.p), params.p)?;
    Ok((t, u.scaled(t)))
}

/// Ground-state level of a field on the Nehari manifold: the mean of
/// `(½-1/p)|u|_p^p` and `(½-1/p)‖u‖²_e`.
pub fn ground_energy(u: &RealField, params: &ModelParams) -> Result<f64> {
    ground_energy_from(&energy(u, params), params.p)
}

pub fn ground_energy_from(e: &EnergyBreakdown, p: f64) -> Result<f64> {
    let scale = e.norm_e_sq.abs();
    let residual = if scale > 0.0 { e.nehari.abs() / scale } else { f64::INFINITY };
    if !(residual < NEHARI_TOL) {
        return Err(Error::NotOnManifold { residual });
    }
    let factor = 0.5 - 1.0 / p;
    Ok(0.5 * factor * (e.lp_p(p) + e.norm_e_sq))
}

/// `(C1, C2)` with `C1 |u|²_{H^s_m} ≤ ‖u‖²_e ≤ C2 |u|²_{H^s_m}`.
pub fn norm_equivalence_constants(params: &ModelParams) -> Result<(f64, f64)> {
    if params.m <= 0.0 {
        return Err(Error::invalid("m", "norm equivalence constants need m > 0"));
    }
    let ratio = params.mu / params.operator().mass_shift();
    Ok((ratio.min(1.0), ratio.max(1.0)))
}
