//! Ground states by a normalized resolvent iteration: each step applies
//! `((-Δ+m²)^s - m^{2s} + μ)^{-1}` to `|u|^{p-2}u` and rescales the result
//! onto the Nehari manifold. Continuation in `m` warm-starts each solve
//! from the previous field.

use crate::bounds::tent_profile;
use crate::diagnostics::{self, recenter, DiagnosticsReport};
use crate::energy::{energy_with, ground_energy_from, nehari_scaling, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::io::read_field;
use crate::params::ModelParams;
use crate::spectral::{Grid, RealField, SpectralOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

/// Relative energy increase per step above which a warning is logged.
pub const ENERGY_RISE_WARN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `exp(-|x|²/w²)` with `w = L/20`.
    Gaussian,
    /// The piecewise-linear tent: 1 on the unit ball, falling to 0 at radius 2.
    Tent,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Resolvent,
    /// `u ← project(u - η·gradient(u))`; `None` picks `η` from the largest symbol value.
    DampedGradient { step: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Bound on `|gradient|₂ / ‖u‖_e`.
    pub tol_residual: f64,
    /// Bound on the relative energy change per iteration.
    pub tol_energy: f64,
    /// Rearrange every this many iterations; 0 disables. Rearrangement is
    /// dropped for the rest of the solve the first time it fails to lower
    /// the energy.
    pub rearrange_every: usize,
    /// Move the centroid to the box center every this many iterations; 0 disables.
    pub recenter_every: usize,
    pub init: Init,
    pub damping: f64,
    pub scheme: Scheme,
    /// Relative multiplicative noise on the initial field.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol_residual: 1e-10,
            tol_energy: 1e-12,
            rearrange_every: 0,
            recenter_every: 1,
            init: Init::Gaussian,
            damping: 1.0,
            scheme: Scheme::Resolvent,
            init_noise: 0.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters", "must be >= 1"));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::invalid("tol_residual", "must be > 0"));
        }
        if !(self.tol_energy > 0.0) {
            return Err(Error::invalid("tol_energy", "must be > 0"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", format!("{} outside (0, 1]", self.damping)));
        }
        if !(self.init_noise >= 0.0 && self.init_noise < 1.0) {
            return Err(Error::invalid("init_noise", format!("{} outside [0, 1)", self.init_noise)));
        }
        if let Scheme::DampedGradient { step: Some(eta) } = self.scheme {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid("gradient_step", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub c_m_estimate: f64,
    pub residual: f64,
    pub nehari_residual: f64,
    pub linf: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "iter,c_m_estimate,residual,nehari_residual,linf";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.6e},{:.6e},{:.16e}",
            self.iter, self.c_m_estimate, self.residual, self.nehari_residual, self.linf
        )
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub params: ModelParams,
    pub field: RealField,
    pub energy: EnergyBreakdown,
    pub c_m: f64,
    pub iterations: usize,
    pub residual: f64,
    pub diagnostics: DiagnosticsReport,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// `((-Δ+m²)^s - m^{2s} + μ)u - |u|^{p-2}u`, the L² gradient of the energy.
pub fn gradient(u: &RealField, params: &ModelParams) -> Result<RealField> {
    let op = SpectralOperator::new(*u.grid(), *params)?;
    Ok(gradient_with(u, &op))
}

fn nonlinearity(u: &RealField, p: f64) -> RealField {
    let q = p - 2.0;
    u.map(|v| v.abs().powf(q) * v).expect("finite field stays finite")
}

fn gradient_with(u: &RealField, op: &SpectralOperator) -> RealField {
    let lin = op.apply_linear(u);
    let nl = nonlinearity(u, op.params().p);
    lin.combine(1.0, &nl, -1.0).expect("same grid")
}

fn project_with(u: &RealField, op: &SpectralOperator) -> Result<RealField> {
    if u.is_zero() {
        return Err(Error::ProjectionUndefined("zero field"));
    }
    let e = energy_with(u, op);
    let t = nehari_scaling(e.norm_e_sq, e.lp_p(op.params().p), op.params().p)?;
    Ok(u.scaled(t))
}

fn gradient_step(op: &SpectralOperator, config: &SolverConfig) -> Option<f64> {
    match config.scheme {
        Scheme::Resolvent => None,
        Scheme::DampedGradient { step: Some(eta) } => Some(eta),
        Scheme::DampedGradient { step: None } => {
            let params = op.params();
            let top = params.operator().shifted_symbol(op.grid().k_sq_table().into_iter().fold(0.0, f64::max));
            Some(0.9 / (top + params.mu))
        }
    }
}

fn step_with(u: &RealField, op: &SpectralOperator, config: &SolverConfig, eta: Option<f64>) -> Result<RealField> {
    let raw = match eta {
        None => op.apply_resolvent(&nonlinearity(u, op.params().p)),
        Some(eta) => u.combine(1.0, &gradient_with(u, op), -eta)?,
    };
    let step = project_with(&raw, op)?;
    if config.damping >= 1.0 {
        return Ok(step);
    }
    let mixed = u.combine(1.0 - config.damping, &step, config.damping)?;
    project_with(&mixed, op)
}

/// One iteration of the configured scheme, landing on the Nehari manifold.
pub fn iterate_once(u: &RealField, params: &ModelParams, config: &SolverConfig) -> Result<RealField> {
    config.validate()?;
    let op = SpectralOperator::new(*u.grid(), *params)?;
    let eta = gradient_step(&op, config);
    step_with(u, &op, config, eta)
}

/// Initial field for `config.init`, with optional seeded noise.
pub fn initial_field(grid: &Grid, config: &SolverConfig) -> Result<RealField> {
    let base = match &config.init {
        Init::Gaussian => {
            let w = grid.box_length() / 20.0;
            RealField::from_fn(*grid, |x| (-x.iter().map(|c| c * c).sum::<f64>() / (w * w)).exp())?
        }
        Init::Tent => RealField::from_fn(*grid, |x| tent_profile(x.iter().map(|c| c * c).sum::<f64>().sqrt()))?,
        Init::File(path) => {
            let u = read_field(path)?;
            if u.grid() != grid {
                return Err(Error::GridMismatch);
            }
            u
        }
    };
    if config.init_noise == 0.0 {
        return Ok(base);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noisy = base
        .values()
        .iter()
        .map(|v| v * (1.0 + config.init_noise * rng.gen_range(-1.0..1.0)))
        .collect();
    RealField::new(*grid, noisy)
}

pub fn solve_ground_state(params: &ModelParams, grid: &Grid, config: &SolverConfig) -> Result<GroundStateResult> {
    config.validate()?;
    let init = initial_field(grid, config)?;
    solve_from(params, init, config)
}

/// Runs the iteration from a given field.
pub fn solve_from(params: &ModelParams, init: RealField, config: &SolverConfig) -> Result<GroundStateResult> {
    config.validate()?;
    params.validate()?;
    let op = SpectralOperator::new(*init.grid(), *params)?;
    let eta = gradient_step(&op, config);
    let e_norm = |u: &RealField| energy_with(u, &op).norm_e_sq.max(0.0).sqrt();
    let residual_of = |u: &RealField| gradient_with(u, &op).l2_norm_sq().sqrt() / e_norm(u);

    let mut u = project_with(&init, &op)?;
    let mut e = energy_with(&u, &op);
    let mut trace = Vec::new();
    let mut best: Option<(f64, RealField, usize)> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = residual_of(&u);
    let mut rearranging = config.rearrange_every > 0;

    for iter in 1..=config.max_iters {
        let mut next = step_with(&u, &op, config, eta).map_err(|err| match err {
            Error::ProjectionUndefined(_) => Error::Collapse { iteration: iter },
            other => other,
        })?;
        if rearranging && iter % config.rearrange_every == 0 {
            let candidate = project_with(&rearrange_decreasing(&next), &op)?;
            if energy_with(&candidate, &op).total < energy_with(&next, &op).total {
                next = candidate;
            } else {
                log::debug!("rearrangement stopped lowering the energy at iteration {iter}");
                rearranging = false;
            }
        }
        if config.recenter_every > 0 && iter % config.recenter_every == 0 {
            next = recenter(&next)?;
        }
        if next.max_abs() < 1e-300 || next.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Collapse { iteration: iter });
        }
        let e_next = energy_with(&next, &op);
        let change = (e_next.total - e.total).abs() / e_next.total.abs().max(f64::MIN_POSITIVE);
        if e_next.total - e.total > ENERGY_RISE_WARN * e.total.abs() {
            log::debug!("energy rose by {:.3e} at iteration {iter}", e_next.total - e.total);
        }
        u = next;
        e = e_next;
        residual = residual_of(&u);
        iterations = iter;
        trace.push(TraceRow {
            iter,
            c_m_estimate: (0.5 - 1.0 / params.p) * e.norm_e_sq,
            residual,
            nehari_residual: e.nehari.abs() / e.norm_e_sq,
            linf: u.max_abs(),
        });
        if best.as_ref().map_or(true, |b| residual < b.0) {
            best = Some((residual, u.clone(), iter));
        }
        if residual <= config.tol_residual && change <= config.tol_energy {
            converged = true;
            break;
        }
    }
    if !converged {
        if let Some((r, field, _)) = best {
            log::warn!(
                "no convergence after {} iterations (best residual {r:.3e}, tolerance {:.1e})",
                config.max_iters,
                config.tol_residual
            );
            u = field;
            residual = r;
            e = energy_with(&u, &op);
        }
    }
    let c_m = ground_energy_from(&e, params.p)?;
    let diagnostics = diagnostics::report(&u, params)?;
    Ok(GroundStateResult {
        params: *params,
        field: u,
        energy: e,
        c_m,
        iterations,
        residual,
        diagnostics,
        converged,
        trace,
    })
}

/// Symmetric-decreasing rearrangement on the grid: the values of `|u|`,
/// largest first, are placed on grid points ordered by distance from the
/// box center. Points at equal distance keep storage order, so the map is a
/// deterministic permutation of the value multiset.
pub fn rearrange_decreasing(u: &RealField) -> RealField {
    let grid = *u.grid();
    let mut values: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let dist = grid.center_distance_sq();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by_key(|&i| dist[i]);
    let mut out = vec![0.0; grid.len()];
    for (slot, v) in order.into_iter().zip(values) {
        out[slot] = v;
    }
    RealField::new(grid, out).expect("permutation of finite values")
}

#[derive(Debug, thiserror::Error)]
#[error("continuation stopped at m = {m}: {source}")]
pub struct ContinuationError {
    pub m: f64,
    /// Results for the masses solved before the failure.
    pub partial: Vec<GroundStateResult>,
    #[source]
    pub source: Error,
}

/// Solves for each mass in a strictly decreasing positive sequence; the first
/// solve starts from `config.init`, each later one from the previous field.
pub fn continuation_m(
    base: &ModelParams,
    m_values: &[f64],
    grid: &Grid,
    config: &SolverConfig,
) -> std::result::Result<Vec<GroundStateResult>, ContinuationError> {
    let fail = |m: f64, partial: Vec<GroundStateResult>, source: Error| ContinuationError { m, partial, source };
    let first = m_values.first().copied().unwrap_or(f64::NAN);
    if m_values.is_empty() {
        return Err(fail(first, Vec::new(), Error::invalid("m_values", "empty sequence")));
    }
    if m_values.iter().any(|&m| !(m > 0.0)) || m_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(fail(first, Vec::new(), Error::invalid("m_values", "must be positive and strictly decreasing")));
    }
    let mut results: Vec<GroundStateResult> = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let outcome = base.with_mass(m).and_then(|params| match results.last() {
            None => solve_ground_state(&params, grid, config),
            Some(prev) => solve_from(&params, prev.field.clone(), config),
        });
        match outcome {
            Ok(r) => {
                log::info!("m = {m}: c_m = {:.10}, {} iterations, converged = {}", r.c_m, r.iterations, r.converged);
                results.push(r);
            }
            Err(source) => return Err(fail(m, results, source)),
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::spectral::{hs_norm_sq, lp_pow};

    fn small_params() -> ModelParams {
        ModelParams::new(0.5, 1.0, 2.0, 3.0, 1).unwrap()
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        assert!(gradient(&RealField::zeros(g), &small_params()).unwrap().is_zero());
    }

    #[test]
    fn gradient_matches_directional_difference() {
        let g = Grid::new(1, 256, 30.0).unwrap();
        let p = ModelParams::new(0.35, 0.8, 1.3, 3.5, 1).unwrap();
        let u = RealField::from_fn(g, |x| 1.5 * (-(x[0] - 0.5).powi(2) / 3.0).exp()).unwrap();
        let w = RealField::from_fn(g, |x| x[0].sin() * (-x[0] * x[0] / 10.0).exp()).unwrap();
        let h = 1e-5;
        let fd = (energy(&u.combine(1.0, &w, h).unwrap(), &p).total - energy(&u.combine(1.0, &w, -h).unwrap(), &p).total)
            / (2.0 * h);
        let exact = gradient(&u, &p).unwrap().inner(&w).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.damping = 0.0;
        assert!(c.validate().is_err());
        c.damping = 1.0;
        c.tol_residual = 0.0;
        assert!(c.validate().is_err());
        c.tol_residual = 1e-9;
        c.max_iters = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn iterate_once_stays_positive_and_on_manifold() {
        let g = Grid::new(1, 256, 30.0).unwrap();
        let p = small_params();
        let u = RealField::from_fn(g, |x| (-(x[0] - 1.0).powi(2)).exp() + 0.5 * (-(x[0] + 2.0).powi(2)).exp()).unwrap();
        let v = iterate_once(&u, &p, &SolverConfig::default()).unwrap();
        assert!(v.min() >= 0.0);
        let e = energy(&v, &p);
        assert!(e.nehari.abs() < 1e-10 * e.norm_e_sq);
    }

    #[test]
    fn zero_initial_guess_is_an_error() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let p = small_params();
        assert!(solve_from(&p, RealField::zeros(g), &SolverConfig::default()).is_err());
        assert!(iterate_once(&RealField::zeros(g), &p, &SolverConfig::default()).is_err());
    }

    #[test]
    fn small_solve_converges_to_a_fixed_point() {
        let g = Grid::new(1, 512, 40.0).unwrap();
        let p = small_params();
        let cfg = SolverConfig::default();
        let r = solve_ground_state(&p, &g, &cfg).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        assert!(r.residual <= cfg.tol_residual);
        assert!(r.energy.nehari.abs() <= 1e-8 * r.energy.norm_e_sq);
        let again = iterate_once(&r.field, &p, &cfg).unwrap();
        let diff = again.combine(1.0, &r.field, -1.0).unwrap().l2_norm_sq().sqrt();
        assert!(diff < 1e-8 * r.field.l2_norm_sq().sqrt());
        let lagrange = gradient(&r.field, &p).unwrap().inner(&r.field).unwrap() / r.energy.norm_e_sq;
        assert!(lagrange.abs() <= cfg.tol_residual);
        assert!(r.diagnostics.sign.one_signed);
        assert_eq!(r.trace.len(), r.iterations);
    }

    #[test]
    fn damped_and_gradient_schemes_reach_the_same_level() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let p = small_params();
        let plain = solve_ground_state(&p, &g, &SolverConfig::default()).unwrap();
        let damped = solve_ground_state(&p, &g, &SolverConfig { damping: 0.6, ..Default::default() }).unwrap();
        assert!(damped.converged);
        assert!((damped.c_m - plain.c_m).abs() < 1e-9 * plain.c_m);
        let grad_cfg = SolverConfig {
            scheme: Scheme::DampedGradient { step: None },
            max_iters: 20000,
            tol_residual: 1e-7,
            ..Default::default()
        };
        let grad = solve_ground_state(&p, &g, &grad_cfg).unwrap();
        assert!((grad.c_m - plain.c_m).abs() < 1e-6 * plain.c_m);
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let cfg = SolverConfig { max_iters: 2, ..Default::default() };
        let r = solve_ground_state(&small_params(), &g, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn rearrangement_of_two_bumps() {
        let g = Grid::new(1, 128, 20.0).unwrap();
        let u = RealField::from_fn(g, |x| (-(x[0] - 4.0).powi(2)).exp() + 0.7 * (-(x[0] + 3.0).powi(2) * 2.0).exp()).unwrap();
        let r = rearrange_decreasing(&u);
        let mut a: Vec<f64> = u.values().to_vec();
        let mut b: Vec<f64> = r.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert_eq!(r.get(g.center()), r.max());
        for q in [1.0, 2.0, 3.0, 7.5] {
            assert!((lp_pow(&r, q) / lp_pow(&u, q) - 1.0).abs() < 1e-12);
        }
        let op = crate::params::FractionalOperator::new(0.5, 1.0).unwrap();
        assert!(hs_norm_sq(&r, &op) <= hs_norm_sq(&u, &op) * (1.0 + 1e-6));
    }

    #[test]
    fn rearrangement_fixes_radial_decreasing_fields() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let u = RealField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let r = rearrange_decreasing(&u);
        let spread = r.combine(1.0, &u, -1.0).unwrap().max_abs();
        assert!(spread < 1e-15);
    }

    #[test]
    fn continuation_rejects_bad_sequences() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let p = small_params();
        let cfg = SolverConfig::default();
        assert!(continuation_m(&p, &[], &g, &cfg).is_err());
        assert!(continuation_m(&p, &[0.5, 1.0], &g, &cfg).is_err());
        assert!(continuation_m(&p, &[1.0, 0.0], &g, &cfg).is_err());
    }

    #[test]
    fn continuation_keeps_partial_results() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let cfg = SolverConfig { init: Init::File("/nonexistent/field.txt".into()), ..Default::default() };
        let err = continuation_m(&small_params(), &[1.0, 0.5], &g, &cfg).unwrap_err();
        assert_eq!(err.m, 1.0);
        assert!(err.partial.is_empty());
        let ok = continuation_m(&small_params(), &[1.0, 0.5], &g, &SolverConfig::default()).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[1].params.m, 0.5);
        assert!(ok[1].iterations > 0);
    }
}
