//! Experiment execution and result files.

use crate::config::{Experiment, RunConfig};
use rayon::prelude::*;
use relgs_core::bounds::{lower_bound_witness, upper_bound_delta};
use relgs_core::diagnostics::DiagnosticsReport;
use relgs_core::energy::EnergyBreakdown;
use relgs_core::extension::{dn_map_check, extension_energy_per_mode, kappa_s};
use relgs_core::io::write_field;
use relgs_core::kernel::KernelQuadrature;
use relgs_core::solver::{continuation_m, solve_ground_state, GroundStateResult, TraceRow};
use relgs_core::spectral::{apply_operator, NORMALIZATION_NOTE};
use relgs_core::{Grid, ModelParams, RealField};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Accepted relative error of the extension identities.
pub const EXTENSION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NonConvergence,
    ConfigError,
    VerificationFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::NonConvergence => 1,
            Self::ConfigError => 2,
            Self::VerificationFailure => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write results under {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] relgs_core::Error),
}

impl RunError {
    pub fn status(&self) -> Status {
        match self {
            Self::Output { .. } => Status::ConfigError,
            Self::Core(relgs_core::Error::MassOutOfRange { .. }) => Status::ConfigError,
            Self::Core(relgs_core::Error::InvalidParams { .. }) => Status::ConfigError,
            Self::Core(_) => Status::NonConvergence,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| RunError::Output {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| RunError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// CSV text with a timestamp line, the transform convention, and a header.
fn csv_document(header: &str, rows: &[String]) -> String {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = format!("# generated_unix={stamp}\n# {NORMALIZATION_NOTE}\n{header}\n");
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

fn summary_header() -> String {
    format!(
        "label,s,m,mu,p,N,n,L,c_m,iterations,residual,converged,{},{}",
        EnergyBreakdown::CSV_HEADER,
        DiagnosticsReport::CSV_HEADER
    )
}

fn summary_row(label: &str, grid: &Grid, r: &GroundStateResult) -> String {
    let p = &r.params;
    format!(
        "{label},{},{},{},{},{},{},{},{:.16e},{},{:.6e},{},{},{}",
        p.s,
        p.m,
        p.mu,
        p.p,
        p.dim,
        grid.n_per_dim(),
        grid.box_length(),
        r.c_m,
        r.iterations,
        r.residual,
        r.converged,
        r.energy.csv_row(),
        r.diagnostics.csv_row()
    )
}

/// Trace CSV and field dump for one solve, under `dir`.
fn write_solve_outputs(dir: &Path, r: &GroundStateResult) -> Result<(), RunError> {
    let rows: Vec<String> = r.trace.iter().map(TraceRow::csv_row).collect();
    write_file(&dir.join("trace.csv"), &csv_document(TraceRow::CSV_HEADER, &rows))?;
    fs::create_dir_all(dir).map_err(|source| RunError::Output {
        path: dir.display().to_string(),
        source,
    })?;
    write_field(&dir.join("field.txt"), &r.field).map_err(|err| match err {
        relgs_core::Error::Io(source) => RunError::Output {
            path: dir.join("field.txt").display().to_string(),
            source,
        },
        other => RunError::Core(other),
    })
}

fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(err) => {
            log::warn!("could not build a worker pool ({err}); running on the global pool");
            work()
        }
    }
}

/// Runs the configured experiment and maps its outcome to an exit status.
pub fn run(config: &RunConfig) -> Status {
    match execute(config) {
        Ok(status) => status,
        Err(err) => {
            log::error!("{err}");
            eprintln!("error: {err}");
            err.status()
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Status, RunError> {
    fs::create_dir_all(&config.output_dir).map_err(|source| RunError::Output {
        path: config.output_dir.display().to_string(),
        source,
    })?;
    match config.experiment {
        Experiment::Solve => run_solve(config),
        Experiment::Continuation => run_continuation(config),
        Experiment::Sweep => run_sweep(config),
        Experiment::VerifyExtension => run_verify_extension(config),
        Experiment::VerifyKernel => run_verify_kernel(config),
        Experiment::Bounds => run_bounds(config),
    }
}

fn model(config: &RunConfig) -> ModelParams {
    config.model.expect("validated config carries a model for this experiment")
}

fn grid(config: &RunConfig) -> Grid {
    config.grid.expect("validated config carries a grid for this experiment")
}

fn run_solve(config: &RunConfig) -> Result<Status, RunError> {
    let (params, grid) = (model(config), grid(config));
    let r = solve_ground_state(&params, &grid, &config.solver)?;
    write_solve_outputs(&config.output_dir.join("solve"), &r)?;
    let doc = csv_document(&summary_header(), &[summary_row("solve", &grid, &r)]);
    write_file(&config.output_dir.join("summary.csv"), &doc)?;
    println!("c_m = {:.12} after {} iterations (residual {:.3e})", r.c_m, r.iterations, r.residual);
    Ok(if r.converged { Status::Success } else { Status::NonConvergence })
}

fn run_continuation(config: &RunConfig) -> Result<Status, RunError> {
    let (base, grid) = (model(config), grid(config));
    let masses = config.m_values.as_deref().expect("validated continuation has masses");
    let (family, failure) = match continuation_m(&base, masses, &grid, &config.solver) {
        Ok(f) => (f, None),
        Err(err) => {
            log::error!("{err}");
            (err.partial, Some(err.source))
        }
    };
    let mut rows = Vec::new();
    let mut all_converged = failure.is_none();
    for (i, r) in family.iter().enumerate() {
        let label = format!("m{i:02}");
        write_solve_outputs(&config.output_dir.join(&label), r)?;
        rows.push(summary_row(&label, &grid, r));
        all_converged &= r.converged;
    }
    let mut limit_rows = Vec::new();
    if failure.is_none() {
        let direct = solve_ground_state(&base.with_mass(0.0)?, &grid, &config.solver)?;
        write_solve_outputs(&config.output_dir.join("direct"), &direct)?;
        rows.push(summary_row("direct", &grid, &direct));
        all_converged &= direct.converged;
        let delta = upper_bound_delta(&base.with_mass(0.0)?).ok().map(|b| b.delta);
        for r in &family {
            let admissible = r.params.m < base.mass_limit();
            let floor = lower_bound_witness(r, &r.params).ok().map(|w| w.floor);
            limit_rows.push(format!(
                "{},{:.16e},{:.16e},{:.6e},{},{},{}",
                r.params.m,
                r.c_m,
                direct.c_m,
                (r.c_m - direct.c_m).abs() / direct.c_m,
                admissible,
                floor.map(|f| format!("{f:.16e}")).unwrap_or_default(),
                delta.filter(|_| admissible).map(|d| format!("{d:.16e}")).unwrap_or_default()
            ));
        }
        if let Some(last) = family.last() {
            println!(
                "c_m at m = {} is {:.10}; direct massless level {:.10} (gap {:.3}%)",
                last.params.m,
                last.c_m,
                direct.c_m,
                100.0 * (last.c_m - direct.c_m).abs() / direct.c_m
            );
        }
    }
    write_file(&config.output_dir.join("summary.csv"), &csv_document(&summary_header(), &rows))?;
    write_file(
        &config.output_dir.join("limit.csv"),
        &csv_document("m,c_m,c_direct,rel_gap,admissible,lower_floor,delta", &limit_rows),
    )?;
    Ok(if all_converged { Status::Success } else { Status::NonConvergence })
}

fn run_sweep(config: &RunConfig) -> Result<Status, RunError> {
    let (base, grid) = (model(config), grid(config));
    let sweep = config.sweep.as_ref().expect("validated sweep has values");
    let outcomes: Vec<_> = with_pool(config.jobs, || {
        sweep
            .values
            .par_iter()
            .map(|&v| solve_ground_state(&sweep.param.apply(&base, v), &grid, &config.solver))
            .collect()
    });
    let mut rows = Vec::new();
    let mut status = Status::Success;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let label = format!("run{i:03}");
        match outcome {
            Ok(r) => {
                write_solve_outputs(&config.output_dir.join(&label), &r)?;
                rows.push(summary_row(&label, &grid, &r));
                if !r.converged {
                    status = Status::NonConvergence;
                }
            }
            Err(err) => {
                log::error!("{label} ({} = {}): {err}", sweep.param.name(), sweep.values[i]);
                status = Status::NonConvergence;
            }
        }
    }
    write_file(&config.output_dir.join("summary.csv"), &csv_document(&summary_header(), &rows))?;
    Ok(status)
}

fn run_verify_extension(config: &RunConfig) -> Result<Status, RunError> {
    let spec = &config.extension;
    let cases: Vec<(f64, f64)> = spec
        .s_values
        .iter()
        .flat_map(|&s| spec.rho_values.iter().map(move |&rho| (s, rho)))
        .collect();
    let results: Vec<(f64, f64, Option<(f64, f64)>)> = with_pool(config.jobs, || {
        cases
            .par_iter()
            .map(|&(s, rho)| {
                let check = || -> relgs_core::Result<(f64, f64)> {
                    let dn = dn_map_check(s, rho)?;
                    let want = kappa_s(s)? * rho.powf(2.0 * s);
                    let got = extension_energy_per_mode(s, rho, 1.0)?;
                    Ok((dn, (got - want).abs() / want))
                };
                (s, rho, check().map_err(|e| log::error!("s = {s}, rho = {rho}: {e}")).ok())
            })
            .collect()
    });
    let mut ok = true;
    let mut rows = Vec::new();
    for (s, rho, r) in results {
        let (dn, en) = r.unwrap_or((f64::NAN, f64::NAN));
        ok &= dn < EXTENSION_TOL && en < EXTENSION_TOL;
        rows.push(format!("{s},{rho},{dn:.6e},{en:.6e}"));
    }
    let doc = csv_document("s,rho,dn_rel_err,energy_rel_err", &rows);
    print!("{}", doc.lines().skip(2).fold(String::new(), |acc, l| acc + l + "\n"));
    write_file(&config.output_dir.join("extension.csv"), &doc)?;
    Ok(if ok { Status::Success } else { Status::VerificationFailure })
}

fn run_verify_kernel(config: &RunConfig) -> Result<Status, RunError> {
    let (params, grid) = (model(config), grid(config));
    let spec = config.kernel.as_ref().expect("validated kernel check has settings");
    let u = RealField::from_fn(grid, |x| (-x.iter().map(|c| c * c).sum::<f64>()).exp())?;
    let spectral = apply_operator(&u, &params.operator());
    let quad = KernelQuadrature::new(&u, &spec.params)?;
    let n = grid.n_per_dim();
    let half = (n / 2) as i64;
    let reach = ((3.0 / grid.dx()).round() as i64).clamp(0, half - 1);
    let offsets: Vec<i64> = if spec.points == 1 {
        vec![0]
    } else {
        (0..spec.points)
            .map(|i| -reach + (2 * reach * i as i64) / (spec.points as i64 - 1))
            .collect()
    };
    let mut rows = Vec::new();
    let mut worst_diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut warned = false;
    for off in offsets {
        let mut idx = vec![n / 2; grid.dim()];
        idx[0] = (half + off) as usize;
        let flat = grid.flatten(&idx);
        let q = quad.apply_at(flat, n);
        let sp = spectral.get(flat);
        warned |= q.boundary_warning;
        worst_diff = worst_diff.max((q.value - sp).abs());
        scale = scale.max(sp.abs());
        rows.push(format!("{flat},{:.6},{sp:.16e},{:.16e},{:.6e}", grid.coord(idx[0]), q.value, (q.value - sp).abs()));
    }
    let rel = if scale > 0.0 { worst_diff / scale } else { worst_diff };
    write_file(
        &config.output_dir.join("kernel.csv"),
        &csv_document("index,x,spectral,quadrature,abs_diff", &rows),
    )?;
    let mut msg = String::new();
    let _ = write!(msg, "relative max difference {rel:.3e} (tolerance {:.1e})", spec.tol);
    if warned {
        msg.push_str("; field not negligible on the boundary");
    }
    println!("{msg}");
    Ok(if rel < spec.tol && !warned { Status::Success } else { Status::VerificationFailure })
}

fn run_bounds(config: &RunConfig) -> Result<Status, RunError> {
    let report = upper_bound_delta(&model(config))?;
    print!("{}", report.aligned_text());
    write_file(
        &config.output_dir.join("bounds.csv"),
        &csv_document(relgs_core::bounds::BoundsReport::CSV_HEADER, &[report.csv_row()]),
    )?;
    Ok(Status::Success)
}
