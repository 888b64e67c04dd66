//! Checks of qualitative properties on computed fields: sign, radial
//! symmetry, tail decay and the pointwise equation residual.

use crate::error::Result;
use crate::params::ModelParams;
use crate::spectral::{apply_operator, roll, translate, RealField};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Relative tolerance of the one-sign test.
pub const SIGN_TOL: f64 = 1e-8;
/// Radial deviation accepted for a ground state.
pub const RADIAL_TOL: f64 = 1e-3;
/// Largest accepted tail value at the outer edge of the decay window, relative to `max|u|`.
pub const EDGE_TOL: f64 = 1e-4;
/// Tail values below this fraction of `max|u|` are treated as round-off.
pub const ROUND_OFF_FLOOR: f64 = 1e-13;
/// Inner and outer edges of the decay window as fractions of `L/2`.
pub const DECAY_WINDOW: (f64, f64) = (0.6, 0.9);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCheck {
    pub one_signed: bool,
    pub min: f64,
    pub max: f64,
}

pub fn sign_check(u: &RealField) -> SignCheck {
    let (min, max) = (u.min(), u.max());
    let scale = min.abs().max(max.abs());
    SignCheck {
        one_signed: min * max >= -SIGN_TOL * scale * scale,
        min,
        max,
    }
}

/// Moves the circular-mean centroid of `|u|` to the box center: whole
/// cells by a roll, the remainder by a spectral shift.
pub fn recenter(u: &RealField) -> Result<RealField> {
    let grid = *u.grid();
    let n = grid.n_per_dim();
    let dim = grid.dim();
    let mut sums = vec![(0.0f64, 0.0f64); dim];
    for (flat, v) in u.values().iter().enumerate() {
        let w = v.abs();
        if w == 0.0 {
            continue;
        }
        for (axis, &i) in grid.unflatten(flat).iter().enumerate() {
            let angle = 2.0 * PI * i as f64 / n as f64;
            sums[axis].0 += w * angle.cos();
            sums[axis].1 += w * angle.sin();
        }
    }
    let half = (n / 2) as f64;
    let mut whole = vec![0i64; dim];
    let mut rest = vec![0.0; dim];
    let mut needs_shift = false;
    for axis in 0..dim {
        let (c, s) = sums[axis];
        if c == 0.0 && s == 0.0 {
            continue;
        }
        let centroid = s.atan2(c) * n as f64 / (2.0 * PI);
        let offset = (centroid - half).rem_euclid(n as f64);
        let offset = if offset > half { offset - n as f64 } else { offset };
        whole[axis] = offset.round() as i64;
        let frac = offset - offset.round();
        if frac.abs() > 1e-6 {
            needs_shift = true;
            rest[axis] = frac * grid.dx();
        }
    }
    let rolled = roll(u, &whole);
    if needs_shift {
        translate(&rolled, &rest)
    } else {
        Ok(rolled)
    }
}

/// Largest spread of values among grid points at exactly the same distance
/// from the center, relative to `max|u|`, after recentering.
pub fn symmetry_check(u: &RealField) -> Result<f64> {
    let scale = u.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let centered = recenter(u)?;
    Ok(radial_spread(&centered) / scale)
}

fn radial_spread(u: &RealField) -> f64 {
    let mut classes: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (d, &v) in u.grid().center_distance_sq().iter().zip(u.values()) {
        let e = classes.entry(*d).or_insert((v, v));
        e.0 = e.0.min(v);
        e.1 = e.1.max(v);
    }
    classes.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailModel {
    /// `log u ≈ a + rate·r`
    Exponential,
    /// `log u ≈ a + rate·log r`
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub model: TailModel,
    /// Bin maxima do not increase outward.
    pub monotone: bool,
    /// Outermost bin maximum over `max|u|`.
    pub edge_ratio: f64,
    /// `None` when the tail sits below round-off.
    pub rate: Option<f64>,
}

impl DecayCheck {
    pub fn edge_ok(&self) -> bool {
        self.edge_ratio < EDGE_TOL
    }

    /// The asserted part: monotone tail, plus a small edge value when `m > 0`.
    pub fn passes(&self) -> bool {
        self.monotone && (self.model == TailModel::Algebraic || self.edge_ok())
    }
}

/// Tail behaviour of `|u|` over distances `[0.6, 0.9]·L/2` from the centroid,
/// in bins one cell diagonal wide. Fits an exponential rate when `m > 0`
/// and an algebraic exponent when `m = 0`.
pub fn decay_check(u: &RealField, params: &ModelParams) -> Result<DecayCheck> {
    let model = if params.m > 0.0 { TailModel::Exponential } else { TailModel::Algebraic };
    let centered = recenter(u)?;
    let grid = *centered.grid();
    let scale = centered.max_abs();
    let width = grid.dx() * (grid.dim() as f64).sqrt();
    let half = 0.5 * grid.box_length();
    let (lo, hi) = (DECAY_WINDOW.0 * half, DECAY_WINDOW.1 * half);
    let dx_sq = grid.dx() * grid.dx();
    let mut bins: BTreeMap<usize, f64> = BTreeMap::new();
    for (d, &v) in grid.center_distance_sq().iter().zip(centered.values()) {
        let r = (*d as f64 * dx_sq).sqrt();
        if r < lo || r > hi {
            continue;
        }
        let b = bins.entry(((r - lo) / width) as usize).or_insert(0.0);
        *b = b.max(v.abs());
    }
    let samples: Vec<(f64, f64)> = bins
        .iter()
        .map(|(&b, &v)| (lo + (b as f64 + 0.5) * width, v))
        .collect();
    if scale == 0.0 || samples.len() < 2 {
        return Ok(DecayCheck {
            model,
            monotone: true,
            edge_ratio: 0.0,
            rate: None,
        });
    }
    let monotone = samples.windows(2).all(|w| w[1].1 <= w[0].1);
    let edge_ratio = samples.last().map(|s| s.1 / scale).unwrap_or(0.0);
    let resolved = samples.iter().all(|&(_, v)| v > ROUND_OFF_FLOOR * scale);
    let rate = resolved.then(|| {
        let points: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(r, v)| match model {
                TailModel::Exponential => (r, v.ln()),
                TailModel::Algebraic => (r.ln(), v.ln()),
            })
            .collect();
        least_squares_slope(&points)
    });
    Ok(DecayCheck {
        model,
        monotone,
        edge_ratio,
        rate,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Pointwise residual `((-Δ+m²)^s - m^{2s} + μ)u - |u|^{p-2}u`.
pub fn el_residual_field(u: &RealField, params: &ModelParams) -> RealField {
    let lin = apply_operator(u, &params.operator());
    let q = params.p - 2.0;
    let values = lin
        .values()
        .iter()
        .zip(u.values())
        .map(|(a, v)| a + params.mu * v - v.abs().powf(q) * v)
        .collect();
    RealField::new(*u.grid(), values).expect("finite inputs give finite residuals")
}

/// Max norm of the equation residual.
pub fn el_residual(u: &RealField, params: &ModelParams) -> f64 {
    el_residual_field(u, params).max_abs()
}

/// Max norm of `((-Δ+m²)^s - m^{2s} + μ)u - rhs`, the equation with the
/// nonlinearity replaced by a given source.
pub fn linear_residual(u: &RealField, rhs: &RealField, params: &ModelParams) -> Result<f64> {
    rhs.check_grid(u)?;
    let lin = apply_operator(u, &params.operator());
    Ok(lin
        .values()
        .iter()
        .zip(u.values())
        .zip(rhs.values())
        .map(|((a, v), f)| (a + params.mu * v - f).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsReport {
    pub sign: SignCheck,
    pub radial_deviation: f64,
    pub linf: f64,
    pub decay: DecayCheck,
    pub el_residual_linf: f64,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str =
        "one_signed,min,max,radial_deviation,linf,tail_monotone,tail_edge_ratio,tail_model,tail_rate,el_residual_linf";

    /// One-sign, radial deviation below [`RADIAL_TOL`], and the decay criterion.
    pub fn qualitative_ok(&self) -> bool {
        self.sign.one_signed && self.radial_deviation < RADIAL_TOL && self.decay.passes()
    }

    pub fn csv_row(&self) -> String {
        let model = match self.decay.model {
            TailModel::Exponential => "exponential",
            TailModel::Algebraic => "algebraic",
        };
        let rate = self
            .decay
            .rate
            .map(|r| format!("{r:.10e}"))
            .unwrap_or_else(|| "unresolved".to_string());
        format!(
            "{},{:.16e},{:.16e},{:.6e},{:.16e},{},{:.6e},{},{},{:.6e}",
            self.sign.one_signed,
            self.sign.min,
            self.sign.max,
            self.radial_deviation,
            self.linf,
            self.decay.monotone,
            self.decay.edge_ratio,
            model,
            rate,
            self.el_residual_linf
        )
    }
}

pub fn report(u: &RealField, params: &ModelParams) -> Result<DiagnosticsReport> {
    Ok(DiagnosticsReport {
        sign: sign_check(u),
        radial_deviation: symmetry_check(u)?,
        linf: u.max_abs(),
        decay: decay_check(u, params)?,
        el_residual_linf: el_residual(u, params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn sign_of_simple_fields() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let pos = RealField::from_fn(g, |x| 1.0 + x[0] * x[0]).unwrap();
        assert!(sign_check(&pos).one_signed);
        let sin = RealField::from_fn(g, |x| x[0].sin()).unwrap();
        let s = sign_check(&sin);
        assert!(!s.one_signed && s.min < 0.0 && s.max > 0.0);
        let neg = pos.scaled(-1.0);
        assert!(sign_check(&neg).one_signed);
        let tiny = RealField::from_fn(g, |x| if x[0] < 0.0 { -1e-12 } else { 1.0 }).unwrap();
        assert!(sign_check(&tiny).one_signed);
    }

    #[test]
    fn radial_gaussian_is_symmetric() {
        let g = Grid::new(2, 64, 12.0).unwrap();
        let u = RealField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        assert!(symmetry_check(&u).unwrap() < 1e-12);
    }

    #[test]
    fn translated_gaussian_is_recentered() {
        let g = Grid::new(2, 128, 24.0).unwrap();
        let shifted = RealField::from_fn(g, |x| (-((x[0] - 1.3).powi(2) + (x[1] + 2.0).powi(2))).exp()).unwrap();
        let on_grid = RealField::from_fn(g, |x| (-((x[0] - 1.5).powi(2) + (x[1] + 2.25).powi(2))).exp()).unwrap();
        assert!(symmetry_check(&on_grid).unwrap() < 1e-12);
        assert!(symmetry_check(&shifted).unwrap() < 1e-10);
        let c = recenter(&shifted).unwrap();
        assert!((c.get(g.center()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn anisotropic_field_is_flagged() {
        let g = Grid::new(2, 64, 12.0).unwrap();
        let u = RealField::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()).unwrap();
        let d = symmetry_check(&u).unwrap();
        assert!(d > 0.1 && d <= 1.0);
    }

    #[test]
    fn exponential_tail_rate() {
        let g = Grid::new(1, 2048, 40.0).unwrap();
        let u = RealField::from_fn(g, |x| (-x[0].abs()).exp()).unwrap();
        let p = ModelParams::new(0.5, 1.0, 1.0, 3.0, 1).unwrap();
        let d = decay_check(&u, &p).unwrap();
        assert!(d.monotone && d.edge_ok() && d.passes());
        assert!((d.rate.unwrap() + 1.0).abs() < 0.02);
    }

    #[test]
    fn algebraic_tail_exponent() {
        let g = Grid::new(1, 4096, 80.0).unwrap();
        let u = RealField::from_fn(g, |x| 2.0 / (1.0 + x[0] * x[0])).unwrap();
        let p = ModelParams::new(0.5, 0.0, 1.0, 3.0, 1).unwrap();
        let d = decay_check(&u, &p).unwrap();
        assert!(d.monotone && d.passes());
        assert!((d.rate.unwrap() + 2.0).abs() < 0.1);
    }

    #[test]
    fn tail_below_round_off_is_unresolved() {
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let u = RealField::from_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
        let p = ModelParams::new(0.5, 1.0, 1.0, 3.0, 1).unwrap();
        let d = decay_check(&u, &p).unwrap();
        assert_eq!(d.rate, None);
        assert!(d.edge_ok());
    }

    #[test]
    fn growing_tail_is_not_monotone() {
        let g = Grid::new(1, 512, 40.0).unwrap();
        let u = RealField::from_fn(g, |x| (-x[0] * x[0]).exp() + 1e-6 * x[0] * x[0]).unwrap();
        let p = ModelParams::new(0.5, 1.0, 1.0, 3.0, 1).unwrap();
        assert!(!decay_check(&u, &p).unwrap().monotone);
    }

    #[test]
    fn eigenmode_of_linear_problem() {
        let l = 2.0 * PI;
        let g = Grid::new(1, 64, l).unwrap();
        let p = ModelParams::new(0.4, 1.2, 0.7, 3.0, 1).unwrap();
        let k = 5.0;
        let op = p.operator();
        let lambda = op.shifted_symbol(k * k) + p.mu;
        let u = RealField::from_fn(g, |x| (k * x[0]).cos()).unwrap();
        let rhs = u.scaled(lambda);
        assert!(linear_residual(&u, &rhs, &p).unwrap() < 1e-10);
    }

    #[test]
    fn algebraic_profile_solves_the_massless_problem() {
        let g = Grid::new(1, 8192, 200.0).unwrap();
        let u = RealField::from_fn(g, |x| 2.0 / (1.0 + x[0] * x[0])).unwrap();
        let p = ModelParams::new(0.5, 0.0, 1.0, 3.0, 1).unwrap();
        assert!(el_residual(&u, &p) < 1e-3 * u.max_abs());
    }

    #[test]
    fn report_row_matches_header() {
        let g = Grid::new(1, 512, 40.0).unwrap();
        let u = RealField::from_fn(g, |x| (-x[0].abs()).exp()).unwrap();
        let p = ModelParams::new(0.5, 1.0, 1.0, 3.0, 1).unwrap();
        let r = report(&u, &p).unwrap();
        assert_eq!(r.csv_row().split(',').count(), DiagnosticsReport::CSV_HEADER.split(',').count());
    }
}
