use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Largest number of grid points accepted (2^28 doubles = 2 GiB).
pub const MAX_POINTS: usize = 1 << 28;

/// Uniform periodic grid on the box `[-L/2, L/2)^N` with `n` points per axis.
///
/// Values are stored row-major: the last axis varies fastest. The point with
/// index `n/2` on every axis sits at the origin, which is the box center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n_per_dim: usize, box_length: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("N", "dimension must be >= 1"));
        }
        if n_per_dim < 2 || !n_per_dim.is_power_of_two() {
            return Err(Error::invalid(
                "n",
                format!("points per dimension ({n_per_dim}) must be a power of two >= 2"),
            ));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::invalid(
                "L",
                format!("box length {box_length} must be finite and > 0"),
            ));
        }
        match n_per_dim.checked_pow(dim as u32) {
            Some(total) if total <= MAX_POINTS => {}
            _ => {
                return Err(Error::invalid(
                    "n",
                    format!("{n_per_dim}^{dim} points exceeds the limit of {MAX_POINTS}"),
                ))
            }
        }
        Ok(Self {
            dim,
            n: n_per_dim,
            length: box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_dim(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.length
    }

    /// Total number of points `n^N`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight `Δx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Coordinate of axis index `i`.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    /// Signed frequency index in `[-n/2, n/2)` for storage index `j`.
    pub fn signed_index(&self, j: usize) -> i64 {
        let half = self.n / 2;
        if j < half {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Wavenumber `2πj/L` for storage index `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.signed_index(j) as f64 / self.length
    }

    /// Storage index of `-j` (mod n).
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Flat index of `-k` for the frequency stored at `flat`.
    pub fn mirror_flat(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self.unflatten(flat).iter().map(|&j| self.mirror(j)).collect();
        self.flatten(&idx)
    }

    /// Coordinates of the point at `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).iter().map(|&i| self.coord(i)).collect()
    }

    /// Flat index of the box center (the origin).
    pub fn center(&self) -> usize {
        self.flatten(&vec![self.n / 2; self.dim])
    }

    /// `|k|²` for every stored frequency, in storage order.
    pub fn k_sq_table(&self) -> Vec<f64> {
        let k1: Vec<f64> = (0..self.n).map(|j| self.wavenumber(j).powi(2)).collect();
        self.separable_sum(&k1)
    }

    /// Squared index distance from the box center, `Σ (i_a - n/2)²`, per point.
    pub fn center_distance_sq(&self) -> Vec<u64> {
        let half = (self.n / 2) as i64;
        let d1: Vec<u64> = (0..self.n)
            .map(|i| {
                let d = i as i64 - half;
                (d * d) as u64
            })
            .collect();
        let mut out = vec![0u64; self.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            let mut acc = 0;
            for _ in 0..self.dim {
                acc += d1[rem % self.n];
                rem /= self.n;
            }
            *slot = acc;
        }
        out
    }

    /// Builds `Σ_a f(i_a)` over all points from a per-axis table.
    fn separable_sum(&self, per_axis: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            let mut acc = 0.0;
            for _ in 0..self.dim {
                acc += per_axis[rem % self.n];
                rem /= self.n;
            }
            *slot = acc;
        }
        out
    }

    /// Same box with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.n * factor, self.length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(1, 100, 1.0).is_err());
        assert!(Grid::new(1, 64, 0.0).is_err());
        assert!(Grid::new(0, 64, 1.0).is_err());
        assert!(Grid::new(4, 1 << 10, 1.0).is_err());
        assert!(Grid::new(2, 64, 10.0).is_ok());
    }

    #[test]
    fn index_round_trip_and_center() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        for flat in [0, 7, 100, 511] {
            assert_eq!(g.flatten(&g.unflatten(flat)), flat);
        }
        assert_eq!(g.point(g.center()), vec![0.0; 3]);
        assert_eq!(g.signed_index(4), -4);
        assert_eq!(g.signed_index(3), 3);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(3), 5);
    }

    #[test]
    fn wavenumbers() {
        let g = Grid::new(1, 8, 4.0 * PI).unwrap();
        assert!((g.wavenumber(1) - 0.5).abs() < 1e-15);
        assert!((g.wavenumber(7) + 0.5).abs() < 1e-15);
        let g2 = Grid::new(2, 4, 2.0 * PI).unwrap();
        let ks = g2.k_sq_table();
        assert_eq!(ks[g2.flatten(&[1, 3])], 2.0);
    }
}
