//! Periodic pseudospectral representation of fields and of `(-Δ+m²)^s`.
//!
//! Transform convention: forward unnormalised, inverse scaled by `1/n^N`.
//! Continuum quantities such as `∫(|k|²+m²)^s |Fu(k)|² dk` are discretised as
//! `(Δx^N / n^N) Σ_k (|k|²+m²)^s |û_k|²`, which reduces to the grid L² norm
//! when the symbol is 1.

mod fft;
mod field;
mod grid;

pub use field::{RealField, SpectralField};
pub use grid::{Grid, MAX_POINTS};

use crate::error::{Error, Result};
use crate::params::{FractionalOperator, ModelParams};
use fft::Direction;
use rustfft::num_complex::Complex64;

/// Human-readable transform convention, written into output metadata.
pub const NORMALIZATION_NOTE: &str = "forward=unnormalized inverse=1/n^N parseval=sum|u|^2*dx^N=(dx^N/n^N)*sum|uhat|^2";

/// Relative Hermitian violation above which spectral data is rejected.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

pub fn forward_transform(u: &RealField) -> SpectralField {
    let grid = *u.grid();
    let mut data: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::transform(&mut data, grid.n_per_dim(), grid.dim(), Direction::Forward);
    SpectralField::from_raw(grid, data)
}

/// Inverse transform to a real field. Small Hermitian defects are projected
/// away (the imaginary part is dropped); large ones are reported as corrupt.
pub fn inverse_transform(w: &SpectralField) -> Result<RealField> {
    let violation = w.hermitian_violation();
    if violation > HERMITIAN_TOLERANCE {
        return Err(Error::CorruptSpectrum { violation });
    }
    Ok(inverse_real(w.grid(), w.coefficients().to_vec()))
}

fn inverse_real(grid: &Grid, mut data: Vec<Complex64>) -> RealField {
    fft::transform(&mut data, grid.n_per_dim(), grid.dim(), Direction::Inverse);
    let scale = 1.0 / grid.len() as f64;
    RealField::from_raw(*grid, data.into_iter().map(|c| c.re * scale).collect())
}

/// Multiplies `û` by a real, even multiplier table and transforms back.
pub(crate) fn apply_multiplier(u: &RealField, multiplier: &[f64]) -> RealField {
    let grid = *u.grid();
    debug_assert_eq!(multiplier.len(), grid.len());
    let mut data = forward_transform(u).into_coefficients();
    for (c, &m) in data.iter_mut().zip(multiplier) {
        *c *= m;
    }
    inverse_real(&grid, data)
}

/// `(|k|² + m²)^s`.
pub fn symbol(k_sq: f64, op: &FractionalOperator) -> f64 {
    op.symbol(k_sq)
}

/// Applies `(-Δ+m²)^s - m^{2s}` through its Fourier multiplier.
pub fn apply_operator(u: &RealField, op: &FractionalOperator) -> RealField {
    let table: Vec<f64> = u.grid().k_sq_table().into_iter().map(|k| op.shifted_symbol(k)).collect();
    apply_multiplier(u, &table)
}

/// Solves `[(-Δ+m²)^s - m^{2s} + μ] w = f`.
pub fn apply_resolvent(f: &RealField, params: &ModelParams) -> RealField {
    let op = params.operator();
    let table: Vec<f64> = f
        .grid()
        .k_sq_table()
        .into_iter()
        .map(|k| 1.0 / (op.shifted_symbol(k) + params.mu))
        .collect();
    apply_multiplier(f, &table)
}

/// Discrete `∫ (|k|²+m²)^s |Fu(k)|² dk`.
pub fn hs_norm_sq(u: &RealField, op: &FractionalOperator) -> f64 {
    let spec = forward_transform(u);
    let weight = spec.parseval_weight();
    spec.coefficients()
        .iter()
        .zip(u.grid().k_sq_table())
        .map(|(c, k)| op.symbol(k) * c.norm_sqr())
        .sum::<f64>()
        * weight
}

/// `Σ |u|^q Δx^N`, i.e. `|u|_q^q` for finite `q`.
pub fn lp_pow(u: &RealField, q: f64) -> f64 {
    let sum: f64 = if q == 2.0 {
        u.values().iter().map(|v| v * v).sum()
    } else {
        u.values().iter().map(|v| v.abs().powf(q)).sum()
    };
    sum * u.grid().cell_volume()
}

/// Grid `L^q` norm; `q = f64::INFINITY` gives the max norm.
///
/// Panics if `q < 1`.
pub fn lp_norm(u: &RealField, q: f64) -> f64 {
    assert!(q >= 1.0, "lp_norm needs q >= 1, got {q}");
    if q.is_infinite() {
        u.max_abs()
    } else {
        lp_pow(u, q).powf(1.0 / q)
    }
}

/// Precomputed multiplier tables for repeated application on one grid.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: Grid,
    params: ModelParams,
    /// `(|k|²+m²)^s`
    symbol: Vec<f64>,
    /// `(|k|²+m²)^s - m^{2s} + μ`
    linear: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(grid: Grid, params: ModelParams) -> Result<Self> {
        if grid.dim() != params.dim {
            return Err(Error::invalid(
                "N",
                format!("grid dimension {} differs from model N = {}", grid.dim(), params.dim),
            ));
        }
        let op = params.operator();
        let symbol: Vec<f64> = grid.k_sq_table().into_iter().map(|k| op.symbol(k)).collect();
        let shift = op.mass_shift();
        let linear = symbol.iter().map(|s| s - shift + params.mu).collect();
        Ok(Self {
            grid,
            params,
            symbol,
            linear,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `((-Δ+m²)^s - m^{2s} + μ) u`.
    pub fn apply_linear(&self, u: &RealField) -> RealField {
        apply_multiplier(u, &self.linear)
    }

    pub fn apply_resolvent(&self, f: &RealField) -> RealField {
        let inv: Vec<f64> = self.linear.iter().map(|l| 1.0 / l).collect();
        apply_multiplier(f, &inv)
    }

    /// Returns `(hs_norm_sq, l2_norm_sq)` from one forward transform.
    pub fn quadratic_terms(&self, u: &RealField) -> (f64, f64) {
        let spec = forward_transform(u);
        let weight = spec.parseval_weight();
        let hs = spec
            .coefficients()
            .iter()
            .zip(&self.symbol)
            .map(|(c, s)| s * c.norm_sqr())
            .sum::<f64>()
            * weight;
        (hs, u.l2_norm_sq())
    }
}

/// Trigonometric interpolation onto a grid with `factor` times more points
/// per axis, by zero-padding the spectrum. Nyquist coefficients are split
/// evenly between `±n/2` so real fields stay real.
pub fn upsample(u: &RealField, factor: usize) -> Result<RealField> {
    if factor == 1 {
        return Ok(u.clone());
    }
    if !factor.is_power_of_two() {
        return Err(Error::invalid("factor", "upsampling factor must be a power of two"));
    }
    let coarse = *u.grid();
    let fine = coarse.refined(factor)?;
    let n = coarse.n_per_dim();
    let big = fine.n_per_dim();
    let spec = forward_transform(u);
    let mut data = vec![Complex64::default(); fine.len()];
    let dim = coarse.dim();
    for (flat, &c) in spec.coefficients().iter().enumerate() {
        let idx = coarse.unflatten(flat);
        // Each axis maps to one target, or two halves at the Nyquist index.
        let mut targets: Vec<(usize, f64)> = vec![(0, 1.0)];
        for &j in &idx {
            let opts: Vec<(usize, f64)> = if coarse.is_nyquist(j) {
                vec![(big - n / 2, 0.5), (n / 2, 0.5)]
            } else {
                let sj = coarse.signed_index(j);
                vec![(sj.rem_euclid(big as i64) as usize, 1.0)]
            };
            targets = targets
                .iter()
                .flat_map(|&(acc, w)| opts.iter().map(move |&(t, wt)| (acc * big + t, w * wt)))
                .collect();
        }
        debug_assert!(targets.len() <= 1 << dim);
        for (t, w) in targets {
            data[t] += c * w;
        }
    }
    let scale = (factor as f64).powi(dim as i32);
    for c in data.iter_mut() {
        *c *= scale;
    }
    Ok(inverse_real(&fine, data))
}

/// Spectral translation: returns `x ↦ u(x + displacement)` on the torus.
pub fn translate(u: &RealField, displacement: &[f64]) -> Result<RealField> {
    let grid = *u.grid();
    if displacement.len() != grid.dim() {
        return Err(Error::invalid("displacement", "length must equal the dimension"));
    }
    let n = grid.n_per_dim();
    let per_axis: Vec<Vec<Complex64>> = displacement
        .iter()
        .map(|&d| {
            (0..n)
                .map(|j| {
                    let k = grid.wavenumber(j);
                    if grid.is_nyquist(j) {
                        Complex64::new((k * d).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, k * d)
                    }
                })
                .collect()
        })
        .collect();
    let mut data = forward_transform(u).into_coefficients();
    for (flat, c) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for axis in (0..grid.dim()).rev() {
            *c *= per_axis[axis][rem % n];
            rem /= n;
        }
    }
    Ok(inverse_real(&grid, data))
}

/// Cyclic shift by whole grid cells: `out[i] = u[i + shift]` per axis.
pub fn roll(u: &RealField, shift: &[i64]) -> RealField {
    let grid = *u.grid();
    let n = grid.n_per_dim() as i64;
    let mut out = vec![0.0; grid.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let idx = grid.unflatten(flat);
        let src: Vec<usize> = idx
            .iter()
            .zip(shift)
            .map(|(&i, &s)| (i as i64 + s).rem_euclid(n) as usize)
            .collect();
        *slot = u.get(grid.flatten(&src));
    }
    RealField::from_raw(grid, out)
}
