//! Flat `key = value` run configuration with `#` comments.

use relgs_core::kernel::KernelParams;
use relgs_core::solver::{Init, Scheme, SolverConfig};
use relgs_core::{FractionalOperator, Grid, ModelParams};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    Continuation,
    VerifyExtension,
    VerifyKernel,
    Bounds,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Continuation => "continuation",
            Self::VerifyExtension => "verify-extension",
            Self::VerifyKernel => "verify-kernel",
            Self::Bounds => "bounds",
            Self::Sweep => "sweep",
        }
    }

    fn needs_model(self) -> bool {
        self != Self::VerifyExtension
    }

    fn needs_grid(self) -> bool {
        matches!(self, Self::Solve | Self::Continuation | Self::VerifyKernel | Self::Sweep)
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "solve" => Self::Solve,
            "continuation" => Self::Continuation,
            "verify-extension" => Self::VerifyExtension,
            "verify-kernel" => Self::VerifyKernel,
            "bounds" => Self::Bounds,
            "sweep" => Self::Sweep,
            other => {
                return Err(ConfigError::new(
                    "experiment",
                    format!("unknown experiment `{other}`; expected solve, continuation, sweep, verify-extension, verify-kernel or bounds"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    S,
    M,
    Mu,
    P,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::S => "s",
            Self::M => "m",
            Self::Mu => "mu",
            Self::P => "p",
        }
    }

    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            Self::S => p.s = value,
            Self::M => p.m = value,
            Self::Mu => p.mu = value,
            Self::P => p.p = value,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub s_values: Vec<f64>,
    pub rho_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub params: KernelParams,
    /// Number of sample points around the box center.
    pub points: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Absent only for `verify-extension`.
    pub model: Option<ModelParams>,
    /// Absent for `bounds` and `verify-extension`.
    pub grid: Option<Grid>,
    pub solver: SolverConfig,
    pub m_values: Option<Vec<f64>>,
    pub sweep: Option<SweepSpec>,
    pub extension: ExtensionSpec,
    pub kernel: Option<KernelSpec>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads for independent jobs; 0 lets the pool decide.
    pub jobs: usize,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "model.s",
    "model.m",
    "model.mu",
    "model.p",
    "model.N",
    "grid.n",
    "grid.L",
    "solver.max_iters",
    "solver.tol_residual",
    "solver.tol_energy",
    "solver.rearrange_every",
    "solver.recenter_every",
    "solver.init",
    "solver.init_file",
    "solver.init_noise",
    "solver.damping",
    "solver.scheme",
    "solver.gradient_step",
    "m_values",
    "output_dir",
    "seed",
    "sweep.param",
    "sweep.values",
    "extension.s_values",
    "extension.rho_values",
    "kernel.cutoff",
    "kernel.quad_points",
    "kernel.points",
    "kernel.tol",
];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| ConfigError::new(key, format!("`{v}` is not {what}"))))
            .transpose()
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parse::<f64>(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::new(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn required_real(&self, key: &str, context: &str) -> Result<f64, ConfigError> {
        self.real(key)?
            .ok_or_else(|| ConfigError::new(key, format!("missing; required for {context}")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key)
            .map(|v| {
                let items: Result<Vec<f64>, _> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| ConfigError::new(key, format!("`{t}` is not a finite real number")))
                    })
                    .collect();
                let items = items?;
                if items.is_empty() {
                    return Err(ConfigError::new(key, "empty list"));
                }
                Ok(items)
            })
            .transpose()
    }
}

fn model_error(err: relgs_core::Error) -> ConfigError {
    match err {
        relgs_core::Error::InvalidParams { name, reason } => ConfigError::new(&format!("model.{name}"), reason),
        other => ConfigError::new("model", other.to_string()),
    }
}

/// Parses and validates a run configuration. `experiment` may be given
/// by the caller (a CLI subcommand) instead of in the text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_for(text, None)
}

pub fn parse_config_for(text: &str, experiment: Option<Experiment>) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(content, format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::new(key, format!("line {}: unknown key", lineno + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::new(key, format!("line {}: duplicate key", lineno + 1)));
        }
    }
    let e = Entries(map);

    let from_text = e.raw("experiment").map(Experiment::from_str).transpose()?;
    let experiment = match (experiment, from_text) {
        (Some(cli), Some(txt)) if cli != txt => {
            log::warn!("subcommand `{}` overrides experiment `{}` in the config", cli.name(), txt.name());
            cli
        }
        (Some(cli), _) => cli,
        (None, Some(txt)) => txt,
        (None, None) => return Err(ConfigError::new("experiment", "missing; set it in the config or use a subcommand")),
    };
    let context = format!("experiment `{}`", experiment.name());

    let model = if experiment.needs_model() || e.raw("model.s").is_some() {
        let s = e.required_real("model.s", &context)?;
        let m = match experiment {
            Experiment::Continuation => e.real("model.m")?.unwrap_or(0.0),
            _ => e.required_real("model.m", &context)?,
        };
        let mu = e.required_real("model.mu", &context)?;
        let p = e.required_real("model.p", &context)?;
        let dim = e
            .parse::<usize>("model.N", "a positive integer")?
            .ok_or_else(|| ConfigError::new("model.N", format!("missing; required for {context}")))?;
        Some(ModelParams::new(s, m, mu, p, dim).map_err(model_error)?)
    } else {
        None
    };

    let grid = if experiment.needs_grid() {
        let model = model.expect("grid experiments need a model");
        let n = e
            .parse::<usize>("grid.n", "a positive integer")?
            .ok_or_else(|| ConfigError::new("grid.n", format!("missing; required for {context}")))?;
        let length = match e.real("grid.L")? {
            Some(l) => l,
            None => {
                let mut l = 40.0 / model.mu.sqrt();
                let smallest_m = e.list("m_values")?.map_or(model.m, |v| v.iter().cloned().fold(model.m, f64::min));
                if experiment == Experiment::Continuation || smallest_m == 0.0 {
                    l *= 4.0;
                    log::warn!("grid.L not set; using {l} to hold the algebraic tail at small m");
                }
                l
            }
        };
        Some(Grid::new(model.dim, n, length).map_err(|err| match err {
            relgs_core::Error::InvalidParams { name, reason } => {
                let key = if name == "L" { "grid.L" } else { "grid.n" };
                ConfigError::new(key, reason)
            }
            other => ConfigError::new("grid", other.to_string()),
        })?)
    } else {
        None
    };

    let seed = e.parse::<u64>("seed", "a nonnegative integer")?.unwrap_or(0);
    let mut solver = SolverConfig { seed, ..Default::default() };
    if let Some(v) = e.parse::<usize>("solver.max_iters", "a positive integer")? {
        solver.max_iters = v;
    }
    if let Some(v) = e.real("solver.tol_residual")? {
        solver.tol_residual = v;
    }
    if let Some(v) = e.real("solver.tol_energy")? {
        solver.tol_energy = v;
    }
    if let Some(v) = e.parse::<usize>("solver.rearrange_every", "a nonnegative integer")? {
        solver.rearrange_every = v;
    }
    if let Some(v) = e.parse::<usize>("solver.recenter_every", "a nonnegative integer")? {
        solver.recenter_every = v;
    }
    if let Some(v) = e.real("solver.damping")? {
        solver.damping = v;
    }
    if let Some(v) = e.real("solver.init_noise")? {
        solver.init_noise = v;
    }
    solver.init = match e.raw("solver.init").unwrap_or("gaussian") {
        "gaussian" => Init::Gaussian,
        "tent" => Init::Tent,
        "file" => Init::File(
            e.raw("solver.init_file")
                .map(PathBuf::from)
                .ok_or_else(|| ConfigError::new("solver.init_file", "missing; required when solver.init = file"))?,
        ),
        other => return Err(ConfigError::new("solver.init", format!("`{other}` is not one of gaussian, tent, file"))),
    };
    solver.scheme = match e.raw("solver.scheme").unwrap_or("resolvent") {
        "resolvent" => Scheme::Resolvent,
        "gradient" => Scheme::DampedGradient {
            step: e.real("solver.gradient_step")?,
        },
        other => return Err(ConfigError::new("solver.scheme", format!("`{other}` is not one of resolvent, gradient"))),
    };
    solver.validate().map_err(|err| match err {
        relgs_core::Error::InvalidParams { name, reason } => ConfigError::new(&format!("solver.{name}"), reason),
        other => ConfigError::new("solver", other.to_string()),
    })?;

    let m_values = e.list("m_values")?;
    if experiment == Experiment::Continuation {
        let values = m_values
            .as_ref()
            .ok_or_else(|| ConfigError::new("m_values", format!("missing; required for {context}")))?;
        if values.iter().any(|&m| !(m > 0.0)) || values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::new("m_values", "must be positive and strictly decreasing"));
        }
    }

    let sweep = if experiment == Experiment::Sweep {
        let param = match e.raw("sweep.param") {
            Some("s") => SweepParam::S,
            Some("m") => SweepParam::M,
            Some("mu") => SweepParam::Mu,
            Some("p") => SweepParam::P,
            Some(other) => return Err(ConfigError::new("sweep.param", format!("`{other}` is not one of s, m, mu, p"))),
            None => return Err(ConfigError::new("sweep.param", format!("missing; required for {context}"))),
        };
        let values = e
            .list("sweep.values")?
            .ok_or_else(|| ConfigError::new("sweep.values", format!("missing; required for {context}")))?;
        let base = model.expect("sweep needs a model");
        for &v in &values {
            param
                .apply(&base, v)
                .validate()
                .map_err(|err| ConfigError::new("sweep.values", format!("value {v}: {err}")))?;
        }
        Some(SweepSpec { param, values })
    } else {
        None
    };

    let extension = ExtensionSpec {
        s_values: e.list("extension.s_values")?.unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
        rho_values: e.list("extension.rho_values")?.unwrap_or_else(|| vec![0.5, 1.0, 5.0]),
    };
    if let Some(s) = extension.s_values.iter().find(|&&s| !(s > 0.0 && s < 1.0)) {
        return Err(ConfigError::new("extension.s_values", format!("{s} violates s in (0,1)")));
    }
    if let Some(r) = extension.rho_values.iter().find(|&&r| !(r > 0.0)) {
        return Err(ConfigError::new("extension.rho_values", format!("{r} must be > 0")));
    }

    let kernel = if experiment == Experiment::VerifyKernel {
        let model = model.expect("kernel check needs a model");
        if model.m <= 0.0 {
            return Err(ConfigError::new("model.m", "the kernel check needs m > 0"));
        }
        let op = FractionalOperator::new(model.s, model.m).map_err(model_error)?;
        let cutoff = e.real("kernel.cutoff")?.unwrap_or(15.0 / model.m);
        let quad_points = e.parse::<usize>("kernel.quad_points", "a positive integer")?.unwrap_or(4096);
        let params = KernelParams::new(op, cutoff, quad_points).map_err(|err| match err {
            relgs_core::Error::InvalidParams { name, reason } => {
                let key = if name == "quad_points" { "kernel.quad_points" } else { "kernel.cutoff" };
                ConfigError::new(key, reason)
            }
            other => ConfigError::new("kernel", other.to_string()),
        })?;
        let half = 0.5 * grid.expect("kernel check needs a grid").box_length();
        if cutoff >= half {
            return Err(ConfigError::new("kernel.cutoff", format!("{cutoff} must be below L/2 = {half}")));
        }
        let points = e.parse::<usize>("kernel.points", "a positive integer")?.unwrap_or(10);
        if points == 0 {
            return Err(ConfigError::new("kernel.points", "must be >= 1"));
        }
        let tol = e.real("kernel.tol")?.unwrap_or(1e-3);
        Some(KernelSpec { params, points, tol })
    } else {
        None
    };

    Ok(RunConfig {
        experiment,
        model,
        grid,
        solver,
        m_values,
        sweep,
        extension,
        kernel,
        output_dir: PathBuf::from(e.raw("output_dir").unwrap_or("relgs-out")),
        seed,
        jobs: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
experiment = solve
model.s = 0.5
model.m = 1
model.mu = 2
model.p = 3
model.N = 1
grid.n = 4096
grid.L = 80
";

    #[test]
    fn minimal_solve_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment, Experiment::Solve);
        assert_eq!(c.model.unwrap(), ModelParams::new(0.5, 1.0, 2.0, 3.0, 1).unwrap());
        let g = c.grid.unwrap();
        assert_eq!((g.n_per_dim(), g.box_length()), (4096, 80.0));
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.output_dir, PathBuf::from("relgs-out"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{MINIMAL}seed = 5 # trailing\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.solver.seed, 5);
    }

    #[test]
    fn any_exponent_when_dimension_equals_twice_s() {
        let text = MINIMAL.replace("model.p = 3", "model.p = 7");
        assert_eq!(parse_config(&text).unwrap().model.unwrap().p, 7.0);
    }

    #[test]
    fn errors_name_the_key() {
        let err = parse_config(&MINIMAL.replace("model.s = 0.5", "model.s = 1.5")).unwrap_err();
        assert_eq!(err.key, "model.s");
        assert!(err.message.contains("s in (0,1)"), "{}", err.message);

        let err = parse_config(&MINIMAL.replace("model.N = 1", "model.N = 3").replace("model.p = 3", "model.p = 4")).unwrap_err();
        assert_eq!(err.key, "model.p");
        assert!(err.message.contains("2N/(N-2s) = 3.000000"), "{}", err.message);

        let err = parse_config(&format!("{MINIMAL}colour = red\n")).unwrap_err();
        assert_eq!(err.key, "colour");

        let err = parse_config(&MINIMAL.replace("grid.n = 4096\n", "")).unwrap_err();
        assert_eq!(err.key, "grid.n");

        let err = parse_config(&MINIMAL.replace("grid.n = 4096", "grid.n = 100")).unwrap_err();
        assert_eq!(err.key, "grid.n");

        let err = parse_config(&MINIMAL.replace("model.mu = 2", "model.mu = two")).unwrap_err();
        assert_eq!(err.key, "model.mu");

        let err = parse_config(&format!("{MINIMAL}model.s = 0.4\n")).unwrap_err();
        assert!(err.message.contains("duplicate"));

        let err = parse_config(&format!("{MINIMAL}just words\n")).unwrap_err();
        assert!(err.message.contains("key = value"));
    }

    #[test]
    fn experiment_from_subcommand() {
        let text = MINIMAL.replace("experiment = solve\n", "");
        assert!(parse_config(&text).is_err());
        let c = parse_config_for(&text, Some(Experiment::Bounds)).unwrap();
        assert_eq!(c.experiment, Experiment::Bounds);
        let c = parse_config_for(MINIMAL, Some(Experiment::Bounds)).unwrap();
        assert_eq!(c.experiment, Experiment::Bounds);
        assert!(c.grid.is_none());
    }

    #[test]
    fn continuation_needs_decreasing_masses() {
        let base = MINIMAL.replace("experiment = solve", "experiment = continuation");
        assert_eq!(parse_config(&base).unwrap_err().key, "m_values");
        let c = parse_config(&format!("{base}m_values = 1, 0.5, 0.01\n")).unwrap();
        assert_eq!(c.m_values.unwrap(), vec![1.0, 0.5, 0.01]);
        assert_eq!(parse_config(&format!("{base}m_values = 0.5, 1\n")).unwrap_err().key, "m_values");
    }

    #[test]
    fn default_box_length() {
        let text = MINIMAL.replace("grid.L = 80\n", "").replace("model.mu = 2", "model.mu = 4");
        assert_eq!(parse_config(&text).unwrap().grid.unwrap().box_length(), 20.0);
        let massless = text.replace("model.m = 1", "model.m = 0");
        assert_eq!(parse_config(&massless).unwrap().grid.unwrap().box_length(), 80.0);
    }

    #[test]
    fn solver_options() {
        let text = format!(
            "{MINIMAL}solver.init = tent\nsolver.scheme = gradient\nsolver.gradient_step = 0.01\nsolver.damping = 0.5\nsolver.max_iters = 7\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.solver.init, Init::Tent);
        assert_eq!(c.solver.scheme, Scheme::DampedGradient { step: Some(0.01) });
        assert_eq!((c.solver.damping, c.solver.max_iters), (0.5, 7));
        assert_eq!(parse_config(&format!("{MINIMAL}solver.damping = 2\n")).unwrap_err().key, "solver.damping");
        assert_eq!(parse_config(&format!("{MINIMAL}solver.init = file\n")).unwrap_err().key, "solver.init_file");
        assert_eq!(parse_config(&format!("{MINIMAL}solver.init = spiral\n")).unwrap_err().key, "solver.init");
    }

    #[test]
    fn sweep_and_extension_sections() {
        let sweep = MINIMAL.replace("experiment = solve", "experiment = sweep");
        assert_eq!(parse_config(&sweep).unwrap_err().key, "sweep.param");
        let c = parse_config(&format!("{sweep}sweep.param = mu\nsweep.values = 1, 2, 3\n")).unwrap();
        assert_eq!(c.sweep.unwrap(), SweepSpec { param: SweepParam::Mu, values: vec![1.0, 2.0, 3.0] });
        assert_eq!(
            parse_config(&format!("{sweep}sweep.param = mu\nsweep.values = 1, -2\n")).unwrap_err().key,
            "sweep.values"
        );

        let c = parse_config("experiment = verify-extension\n").unwrap();
        assert!(c.model.is_none());
        assert_eq!(c.extension.s_values, vec![0.25, 0.5, 0.75]);
        let err = parse_config("experiment = verify-extension\nextension.s_values = 0.5, 1.2\n").unwrap_err();
        assert_eq!(err.key, "extension.s_values");
    }

    #[test]
    fn kernel_section() {
        let text = MINIMAL.replace("experiment = solve", "experiment = verify-kernel");
        let k = parse_config(&text).unwrap().kernel.unwrap();
        assert_eq!((k.points, k.params.quad_points, k.params.quad_cutoff_radius), (10, 4096, 15.0));
        assert_eq!(parse_config(&format!("{text}kernel.cutoff = 50\n")).unwrap_err().key, "kernel.cutoff");
        let massless = text.replace("model.m = 1", "model.m = 0");
        assert_eq!(parse_config(&massless).unwrap_err().key, "model.m");
    }
}
