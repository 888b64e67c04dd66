//! Singular-integral (Bessel potential) form of `(-Δ+m²)^s`:
//!
//! `(-Δ+m²)^s u(x) = c_{N,s} m^ν P.V.∫ (u(x)-u(y)) K_ν(m|x-y|) / |x-y|^ν dy + m^{2s} u(x)`
//!
//! with `ν = (N+2s)/2`. Used to cross-check the spectral path; not meant for
//! production solves.

use crate::error::{Error, Result};
use crate::params::FractionalOperator;
use crate::quadrature::DoubleExponential;
use crate::special::{bessel_k, gamma};
use crate::spectral::{upsample, RealField};
use std::f64::consts::PI;

/// Below `m r` of this size the kernel is replaced by its leading small-argument form.
const SMALL_ARGUMENT: f64 = 1e-8;

/// Relative boundary magnitude above which the field is not considered
/// compactly supported inside the box.
pub const BOUNDARY_SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub op: FractionalOperator,
    pub quad_cutoff_radius: f64,
    /// Minimum number of quadrature nodes across the cutoff diameter, per axis.
    pub quad_points: usize,
}

impl KernelParams {
    pub fn new(op: FractionalOperator, quad_cutoff_radius: f64, quad_points: usize) -> Result<Self> {
        if op.m() <= 0.0 {
            return Err(Error::invalid("m", "the Bessel kernel needs m > 0"));
        }
        if !(quad_cutoff_radius > 0.0 && quad_cutoff_radius.is_finite()) {
            return Err(Error::invalid("quad_cutoff_radius", "must be finite and > 0"));
        }
        if quad_points < 16 {
            return Err(Error::invalid("quad_points", format!("{quad_points} < 16")));
        }
        Ok(Self {
            op,
            quad_cutoff_radius,
            quad_points,
        })
    }

    /// Cutoff `15/m` and the given resolution.
    pub fn with_default_cutoff(op: FractionalOperator, quad_points: usize) -> Result<Self> {
        Self::new(op, 15.0 / op.m(), quad_points)
    }
}

/// Order `ν = (N+2s)/2` of the Bessel function in the kernel.
pub fn kernel_order(dim: usize, s: f64) -> f64 {
    0.5 * (dim as f64 + 2.0 * s)
}

/// `c_{N,s} = 2^{1-(N+2s)/2} π^{-N/2} 2^{2s} s(1-s) / Γ(2-s)`.
pub fn kernel_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    2f64.powf(1.0 - kernel_order(dim, s)) * PI.powf(-0.5 * n) * 2f64.powf(2.0 * s) * s * (1.0 - s)
        / gamma(2.0 - s)
}

/// Kernel `c_{N,s} m^ν K_ν(m r) / r^ν`.
pub fn kernel_value(r: f64, dim: usize, op: &FractionalOperator) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("kernel_value", format!("radius r = {r} must be > 0")));
    }
    if op.m() <= 0.0 {
        return Err(Error::domain("kernel_value", "the Bessel kernel needs m > 0"));
    }
    let nu = kernel_order(dim, op.s());
    let m = op.m();
    Ok(kernel_constant(dim, op.s()) * m.powf(nu) * bessel_k(nu, m * r)? / r.powf(nu))
}

/// `r^power · kernel(r)`, using `K_ν(z) ≈ Γ(ν)/2 (z/2)^{-ν}` where the
/// direct product would overflow.
fn kernel_times_power(r: f64, power: f64, dim: usize, op: &FractionalOperator) -> Result<f64> {
    let nu = kernel_order(dim, op.s());
    if op.m() * r < SMALL_ARGUMENT {
        let lead = kernel_constant(dim, op.s()) * gamma(nu) * 2f64.powf(nu - 1.0);
        Ok(lead * r.powf(power - 2.0 * nu))
    } else {
        Ok(r.powf(power) * kernel_value(r, dim, op)?)
    }
}

/// Surface area of the unit sphere in R^N.
pub(crate) fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / gamma(0.5 * n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureValue {
    /// Approximation of `((-Δ+m²)^s - m^{2s}) u` at the point.
    pub value: f64,
    /// Set when the field is not negligible on the box boundary.
    pub boundary_warning: bool,
}

#[derive(Debug, Clone)]
struct Offset {
    delta: Vec<i64>,
    weight: f64,
    r_sq: f64,
}

/// Reusable quadrature state for one field: the refined samples, the lattice
/// of offsets inside the cutoff ball with their kernel weights, and the
/// radial integrals of the subtracted singular part and the far tail.
///
/// The principal value is taken on the symmetric lattice. The second-order
/// Taylor part of `u(x)-u(y)` is subtracted inside the sum (through `Δu/N·|z|²`,
/// exact on cubic lattices) and added back from its exact radial integral,
/// leaving an `O(r^4)` remainder that the lattice sum resolves accurately.
#[derive(Debug, Clone)]
pub struct KernelQuadrature {
    fine: RealField,
    factor: usize,
    offsets: Vec<Offset>,
    second_moment: f64,
    tail_mass: f64,
    boundary_warning: bool,
}

impl KernelQuadrature {
    pub fn new(u: &RealField, params: &KernelParams) -> Result<Self> {
        let grid = *u.grid();
        let dim = grid.dim();
        let op = params.op;
        let radius = params.quad_cutoff_radius;
        if radius >= 0.5 * grid.box_length() {
            return Err(Error::invalid(
                "quad_cutoff_radius",
                format!(
                    "cutoff {radius} must be below half the box length {}",
                    0.5 * grid.box_length()
                ),
            ));
        }
        let target_h = 2.0 * radius / params.quad_points as f64;
        let mut factor = 1;
        while grid.dx() / factor as f64 > target_h {
            factor *= 2;
        }
        let fine = upsample(u, factor)?;
        let fgrid = *fine.grid();
        let h = fgrid.dx();
        let reach = (radius / h).floor() as i64;

        let mut offsets = Vec::new();
        let side = (2 * reach + 1) as usize;
        let total = side.pow(dim as u32);
        let mut delta = vec![0i64; dim];
        for flat in 0..total {
            let mut rem = flat;
            for d in delta.iter_mut().rev() {
                *d = (rem % side) as i64 - reach;
                rem /= side;
            }
            let cells_sq: i64 = delta.iter().map(|d| d * d).sum();
            if cells_sq == 0 {
                continue;
            }
            let r_sq = cells_sq as f64 * h * h;
            if r_sq > radius * radius {
                continue;
            }
            let weight = kernel_value(r_sq.sqrt(), dim, &op)? * h.powi(dim as i32);
            offsets.push(Offset {
                delta: delta.clone(),
                weight,
                r_sq,
            });
        }

        let area = sphere_area(dim);
        let quad = DoubleExponential::with_tol(1e-12);
        let n = dim as f64;
        let second_moment = area
            * quad.tanh_sinh(
                |r| kernel_times_power(r, n + 1.0, dim, &op).unwrap_or(f64::NAN),
                0.0,
                radius,
            )?;
        let tail_mass = area
            * quad.exp_sinh(|y| {
                kernel_times_power(radius + y, n - 1.0, dim, &op).unwrap_or(f64::NAN)
            })?;

        let scale = u.max_abs();
        let boundary = boundary_max(u);
        let boundary_warning = scale > 0.0 && boundary >= BOUNDARY_SUPPORT_TOL * scale;
        if boundary_warning {
            log::warn!(
                "field is not compactly supported in the box: boundary/max = {:.3e}",
                boundary / scale
            );
        }
        Ok(Self {
            fine,
            factor,
            offsets,
            second_moment,
            tail_mass,
            boundary_warning,
        })
    }

    /// Refinement factor applied to the input grid.
    pub fn refinement(&self) -> usize {
        self.factor
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len()
    }

    /// Value at the point with flat index `x_index` on the input grid.
    pub fn apply_at(&self, x_index: usize, coarse_n: usize) -> QuadratureValue {
        let fgrid = self.fine.grid();
        let dim = fgrid.dim();
        let nf = fgrid.n_per_dim() as i64;
        let h = fgrid.dx();
        let mut coarse = vec![0usize; dim];
        let mut rem = x_index;
        for slot in coarse.iter_mut().rev() {
            *slot = rem % coarse_n;
            rem /= coarse_n;
        }
        let center: Vec<i64> = coarse.iter().map(|&i| (i * self.factor) as i64).collect();
        let values = self.fine.values();
        let at = |delta: &[i64]| -> f64 {
            let flat = center
                .iter()
                .zip(delta)
                .fold(0i64, |acc, (&c, &d)| acc * nf + (c + d).rem_euclid(nf));
            values[flat as usize]
        };
        let u0 = at(&vec![0; dim]);

        // sixth-order central second differences along each axis
        const STENCIL: [f64; 4] = [-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0];
        let mut laplacian = 0.0;
        let mut probe = vec![0i64; dim];
        for axis in 0..dim {
            let mut acc = STENCIL[0] * u0;
            for (j, c) in STENCIL.iter().enumerate().skip(1) {
                probe[axis] = j as i64;
                let plus = at(&probe);
                probe[axis] = -(j as i64);
                let minus = at(&probe);
                acc += c * (plus + minus);
            }
            probe[axis] = 0;
            laplacian += acc / (h * h);
        }

        let quad_coef = 0.5 * laplacian / dim as f64;
        let sum: f64 = self
            .offsets
            .iter()
            .map(|o| o.weight * (u0 - at(&o.delta) + quad_coef * o.r_sq))
            .sum();
        QuadratureValue {
            value: sum - quad_coef * self.second_moment + u0 * self.tail_mass,
            boundary_warning: self.boundary_warning,
        }
    }
}

fn boundary_max(u: &RealField) -> f64 {
    let grid = u.grid();
    let n = grid.n_per_dim();
    (0..grid.len())
        .filter(|&flat| grid.unflatten(flat).iter().any(|&i| i == 0 || i == n - 1))
        .map(|flat| u.get(flat).abs())
        .fold(0.0, f64::max)
}

/// Quadrature evaluation of `((-Δ+m²)^s - m^{2s}) u` at one grid point.
pub fn apply_operator_quadrature(
    u: &RealField,
    x_index: usize,
    params: &KernelParams,
) -> Result<QuadratureValue> {
    if x_index >= u.grid().len() {
        return Err(Error::invalid("x_index", "outside the grid"));
    }
    let quad = KernelQuadrature::new(u, params)?;
    Ok(quad.apply_at(x_index, u.grid().n_per_dim()))
}
