//! Per-mode form of the weighted extension problem
//! `-div(y^{1-2s} ∇v) + m² y^{1-2s} v = 0` on the half space.
//!
//! After a Fourier transform in `x`, each mode with `ρ = √(|k|²+m²)` solves
//! `-(y^a θ')' + ρ² y^a θ = 0`, `a = 1-2s`, `θ(0) = 1`, with the bounded
//! solution `θ_s(ρy)` where `θ_s(r) = 2^{1-s}/Γ(s) r^s K_s(r)`.

use crate::error::{Error, Result};
use crate::params::FractionalOperator;
use crate::quadrature::DoubleExponential;
use crate::special::{bessel_k, gamma};
use crate::spectral::{forward_transform, RealField};
use std::collections::BTreeMap;

/// Default starting argument `ρ y₀` of the geometric sequence used for the
/// conormal-derivative limit.
pub const DN_START: f64 = 0.1;
/// Extrapolation depth for the conormal-derivative limit.
pub const DN_DEPTH: usize = 4;

fn profile_prefactor(s: f64) -> f64 {
    2f64.powf(1.0 - s) / gamma(s)
}

/// `θ_s(r) = 2^{1-s}/Γ(s) r^s K_s(r)`, continued by `θ_s(0) = 1`.
///
/// # Panics
/// If `r` is negative or NaN, or `s` is outside `(0, 1)`.
pub fn profile_theta(s: f64, r: f64) -> f64 {
    assert!(s > 0.0 && s < 1.0, "exponent s = {s} outside (0, 1)");
    assert!(r >= 0.0, "profile argument r = {r} must be >= 0");
    if r == 0.0 {
        return 1.0;
    }
    if r.is_infinite() {
        return 0.0;
    }
    let k = bessel_k(s, r).expect("r > 0 is in the domain");
    if k == 0.0 {
        return 0.0;
    }
    profile_prefactor(s) * r.powf(s) * k
}

/// `θ_s'(r) = -2^{1-s}/Γ(s) r^s K_{1-s}(r)` for `r > 0`.
///
/// # Panics
/// If `r` is not positive.
pub fn theta_derivative(s: f64, r: f64) -> f64 {
    assert!(s > 0.0 && s < 1.0, "exponent s = {s} outside (0, 1)");
    assert!(r > 0.0, "derivative argument r = {r} must be > 0");
    if r.is_infinite() {
        return 0.0;
    }
    let k = bessel_k(1.0 - s, r).expect("r > 0 is in the domain");
    if k == 0.0 {
        return 0.0;
    }
    -profile_prefactor(s) * r.powf(s) * k
}

/// Trace constant `κ_s = 2^{1-2s} Γ(1-s)/Γ(s)`.
pub fn kappa_s(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("{s} outside (0, 1)")));
    }
    Ok(2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s))
}

fn check_mode(s: f64, rho: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("{s} outside (0, 1)")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("{rho} must be finite and > 0")));
    }
    Ok(())
}

/// Leading exponents of `y^{1-2s}θ'(ρy)` near `y = 0`, smallest first:
/// the union of `2-2s+2k` and `2k` (`k ≥ 1`).
fn error_exponents(s: f64, count: usize) -> Vec<f64> {
    let mut all: Vec<f64> = (0..count)
        .flat_map(|k| [2.0 - 2.0 * s + 2.0 * k as f64, 2.0 * (k as f64 + 1.0)])
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    all.truncate(count);
    all
}

/// `-lim_{y→0} y^{1-2s} d/dy θ_s(ρy)`, by Richardson extrapolation on
/// `y_j = y₀ 2^{-j}` with the known error exponents.
pub fn dn_map_limit(s: f64, rho: f64) -> Result<f64> {
    check_mode(s, rho)?;
    let y0 = DN_START / rho;
    let conormal = |y: f64| -y.powf(1.0 - 2.0 * s) * rho * theta_derivative(s, rho * y);
    let exps = error_exponents(s, DN_DEPTH);
    let mut table: Vec<f64> = (0..=DN_DEPTH)
        .map(|j| conormal(y0 * 0.5f64.powi(j as i32)))
        .collect();
    let mut diagonal = vec![table[DN_DEPTH]];
    for &e in &exps {
        let factor = 2f64.powf(e);
        let next: Vec<f64> = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        table = next;
        diagonal.push(*table.last().expect("table shrinks by one per level"));
    }
    let value = *diagonal.last().expect("nonempty");
    let last = (diagonal[DN_DEPTH] - diagonal[DN_DEPTH - 1]).abs();
    let prev = (diagonal[DN_DEPTH - 1] - diagonal[DN_DEPTH - 2]).abs();
    if !value.is_finite() || (last > prev && last > 1e-9 * value.abs()) {
        return Err(Error::Extrapolation(format!(
            "estimates not settling for s = {s}, rho = {rho}: {diagonal:?}"
        )));
    }
    Ok(value)
}

/// Relative error of the conormal-derivative limit against `κ_s ρ^{2s}`.
pub fn dn_map_check(s: f64, rho: f64) -> Result<f64> {
    let limit = dn_map_limit(s, rho)?;
    let want = kappa_s(s)? * rho.powf(2.0 * s);
    Ok((limit - want).abs() / want)
}

/// `∫₀^∞ y^{1-2s} (|∂_y V|² + ρ² V²) dy` for `V(y) = amplitude·θ_s(ρy)`.
pub fn extension_energy_per_mode(s: f64, rho: f64, amplitude_sq: f64) -> Result<f64> {
    check_mode(s, rho)?;
    if !(amplitude_sq >= 0.0 && amplitude_sq.is_finite()) {
        return Err(Error::invalid("amplitude_sq", format!("{amplitude_sq} must be finite and >= 0")));
    }
    let quad = DoubleExponential::with_tol(1e-11);
    let integral = quad.exp_sinh(|y| {
        if y == 0.0 {
            return 0.0;
        }
        let r = rho * y;
        let d = rho * theta_derivative(s, r);
        let v = profile_theta(s, r);
        y.powf(1.0 - 2.0 * s) * (d * d + rho * rho * v * v)
    })?;
    Ok(amplitude_sq * integral)
}

/// Sum of the per-mode extension energies of a field's Fourier modes,
/// weighted as in the discrete Parseval identity. Equals `κ_s |u|²_{H^s_m}`.
pub fn extension_energy_of_field(u: &RealField, op: &FractionalOperator) -> Result<f64> {
    let spec = forward_transform(u);
    let grid = *u.grid();
    let weight = spec.parseval_weight();
    let base = 2.0 * std::f64::consts::PI / grid.box_length();
    // group by integer |j|², one quadrature per shell
    let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
    for (flat, c) in spec.coefficients().iter().enumerate() {
        let amp = c.norm_sqr();
        if amp == 0.0 {
            continue;
        }
        let key: i64 = grid
            .unflatten(flat)
            .iter()
            .map(|&i| {
                let j = grid.signed_index(i);
                j * j
            })
            .sum();
        *shells.entry(key).or_insert(0.0) += amp * weight;
    }
    let mut total = 0.0;
    for (key, amp) in shells {
        let rho = (key as f64 * base * base + op.m() * op.m()).sqrt();
        if rho == 0.0 {
            continue;
        }
        total += extension_energy_per_mode(op.s(), rho, amp)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionProfile {
    pub s: f64,
    pub rho: f64,
    pub y_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ExtensionProfile {
    /// Samples of `θ_s(ρy)` on the given grid.
    pub fn closed_form(s: f64, rho: f64, y_grid: Vec<f64>) -> Result<Self> {
        check_mode(s, rho)?;
        if y_grid.iter().any(|&y| !(y > 0.0)) {
            return Err(Error::invalid("y_grid", "all points must be > 0"));
        }
        let values = y_grid.iter().map(|&y| profile_theta(s, rho * y)).collect();
        Ok(Self {
            s,
            rho,
            y_grid,
            values,
        })
    }

    pub fn max_deviation_from_closed_form(&self) -> f64 {
        self.y_grid
            .iter()
            .zip(&self.values)
            .map(|(&y, &v)| (v - profile_theta(self.s, self.rho * y)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// Value at `y = 0` from the first two samples, linear in `y^{2s}`.
    pub fn extrapolated_origin_value(&self) -> Option<f64> {
        if self.values.len() < 2 {
            return None;
        }
        let a = self.y_grid[0].powf(2.0 * self.s);
        let b = self.y_grid[1].powf(2.0 * self.s);
        let (va, vb) = (self.values[0], self.values[1]);
        Some(va - (vb - va) * a / (b - a))
    }
}

/// Finite-volume solve of `-(y^a θ')' + ρ² y^a θ = 0`, `θ(0) = 1`,
/// `θ(y_max) = 0` on the graded mesh `y_j = y_max (j/n_y)³`.
///
/// Fluxes use the exact weighted resistance `∫ y^{-a} dy` between nodes, so
/// the `y^{2s}` boundary layer is captured without special treatment.
pub fn extension_ode_solve(s: f64, rho: f64, y_max: f64, n_y: usize) -> Result<ExtensionProfile> {
    check_mode(s, rho)?;
    if !(y_max * rho >= 20.0) {
        return Err(Error::invalid("y_max", format!("y_max·rho = {} < 20", y_max * rho)));
    }
    if n_y < 200 {
        return Err(Error::invalid("n_y", format!("{n_y} < 200")));
    }
    let n = n_y;
    let y: Vec<f64> = (0..=n)
        .map(|j| y_max * (j as f64 / n as f64).powi(3))
        .collect();
    let two_s = 2.0 * s;
    let conductance: Vec<f64> = (0..n)
        .map(|j| two_s / (y[j + 1].powf(two_s) - y[j].powf(two_s)))
        .collect();
    let weight_power = 2.0 - 2.0 * s;
    let cell_mass = |lo: f64, hi: f64| rho * rho * (hi.powf(weight_power) - lo.powf(weight_power)) / weight_power;

    // unknowns θ_1..θ_{n-1}
    let m = n - 1;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for row in 0..m {
        let j = row + 1;
        let lo = 0.5 * (y[j - 1] + y[j]);
        let hi = 0.5 * (y[j] + y[j + 1]);
        diag[row] = conductance[j - 1] + conductance[j] + cell_mass(lo, hi);
        lower[row] = -conductance[j - 1];
        upper[row] = -conductance[j];
    }
    rhs[0] = conductance[0];

    // Thomas elimination
    for row in 1..m {
        if diag[row - 1].abs() < f64::MIN_POSITIVE {
            return Err(Error::SingularSystem { row: row - 1 });
        }
        let w = lower[row] / diag[row - 1];
        diag[row] -= w * upper[row - 1];
        rhs[row] -= w * rhs[row - 1];
    }
    if diag[m - 1].abs() < f64::MIN_POSITIVE {
        return Err(Error::SingularSystem { row: m - 1 });
    }
    let mut theta = vec![0.0; m];
    theta[m - 1] = rhs[m - 1] / diag[m - 1];
    for row in (0..m - 1).rev() {
        theta[row] = (rhs[row] - upper[row] * theta[row + 1]) / diag[row];
    }
    theta.push(0.0);
    Ok(ExtensionProfile {
        s,
        rho,
        y_grid: y[1..].to_vec(),
        values: theta,
    })
}
