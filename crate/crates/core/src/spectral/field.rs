use super::grid::Grid;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex64;

/// Real samples of a function on a [`Grid`], row-major. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Callers guarantee length and finiteness.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.n_per_dim();
        let coords: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
        let mut x = vec![0.0; grid.dim()];
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let mut rem = flat;
            for a in (0..grid.dim()).rev() {
                x[a] = coords[rem % n];
                rem /= n;
            }
            values.push(f(&x));
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| t * v).collect())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(u, w)| a * u + b * w)
                .collect(),
        ))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Discrete L² inner product `Σ u w Δx^N`.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        self.check_grid(other)?;
        let sum: f64 = self.values.iter().zip(&other.values).map(|(u, w)| u * w).sum();
        Ok(sum * self.grid.cell_volume())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn check_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discrete Fourier coefficients of a field, same layout as [`RealField`].
///
/// Forward transforms are unnormalised and inverse transforms carry the
/// factor `1/n^N`, so Parseval reads
/// `Σ|u|² Δx^N = (Δx^N / n^N) Σ|û|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coefficients.len(),
            });
        }
        if let Some(index) = coefficients
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, coefficients })
    }

    pub(crate) fn from_raw(grid: Grid, coefficients: Vec<Complex64>) -> Self {
        Self { grid, coefficients }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    /// Largest `|c_k - conj(c_{-k})|` relative to the largest coefficient.
    pub fn hermitian_violation(&self) -> f64 {
        let scale = self.coefficients.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.grid.len())
            .map(|k| {
                let mk = self.grid.mirror_flat(k);
                (self.coefficients[k] - self.coefficients[mk].conj()).norm()
            })
            .fold(0.0f64, f64::max);
        worst / scale
    }

    /// Factor `Δx^N / n^N` converting `Σ|û|²` to the L² norm squared.
    pub fn parseval_weight(&self) -> f64 {
        self.grid.cell_volume() / self.grid.len() as f64
    }
}
