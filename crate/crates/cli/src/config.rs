//! Experiment configuration: a TOML file merged with command-line flags,
//! then validated into an [`Experiment`] before anything runs.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use htq_core::transform_lab::VarianceAt;
use htq_core::{
    run_replicas, run_replicas_3q, run_replicas_nsys, ArrivalKind, Boundary, NSystem, SamplingPlan,
    StationaryEnsemble, SwitchSystem, ThreeQSystem,
};
use serde::Deserialize;

/// An invalid or incomplete configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn missing(field: &str) -> ConfigError {
    cfg_err(format!("missing required field `{field}`"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SystemName {
    Switch,
    Threeq,
    Nsys,
}

impl SystemName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Switch => "switch",
            Self::Threeq => "threeq",
            Self::Nsys => "nsys",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

/// Sample counts may be written `1000000`, `1e6` or `"1e6"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Count {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Count {
    fn resolve(&self, field: &str) -> Result<usize, ConfigError> {
        match self {
            Self::Int(v) => Ok(*v as usize),
            Self::Float(v) => count_from_f64(*v, field),
            Self::Text(s) => parse_count(s, field),
        }
    }
}

fn count_from_f64(v: f64, field: &str) -> Result<usize, ConfigError> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 && v <= 1e15 {
        Ok(v as usize)
    } else {
        Err(cfg_err(format!(
            "`{field}` must be a positive integer, got {v}"
        )))
    }
}

pub fn parse_count(s: &str, field: &str) -> Result<usize, ConfigError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| cfg_err(format!("`{field}`: cannot parse {s:?} as a count")))?;
    count_from_f64(v, field)
}

fn parse_list<T: std::str::FromStr>(s: &str, field: &str) -> Result<Vec<T>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| cfg_err(format!("`{field}`: cannot parse {p:?}")))
        })
        .collect()
}

fn pair(v: Vec<f64>, field: &str) -> Result<[f64; 2], ConfigError> {
    v.try_into()
        .map_err(|v: Vec<f64>| cfg_err(format!("`{field}` needs 2 values, got {}", v.len())))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum NuSpec {
    Keyword(String),
    Values(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunTable {
    system: Option<SystemName>,
    eps: Option<OneOrMany<f64>>,
    seeds: Option<OneOrMany<u64>>,
    samples: Option<Count>,
    replicas: Option<usize>,
    burn_in: Option<u64>,
    thin: Option<u64>,
    grid: Option<PathBuf>,
    grid_points: Option<usize>,
    grid_seed: Option<u64>,
    compare_limit: Option<bool>,
    limit_samples: Option<Count>,
    variance_at: Option<VarianceAt>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchTable {
    n: Option<usize>,
    nu: Option<NuSpec>,
    arrivals: Option<ArrivalKind>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreeqTable {
    nu: Option<Vec<f64>>,
    arrivals: Option<ArrivalKind>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NsysTable {
    mu: Option<Vec<f64>>,
    nu: Option<Vec<f64>>,
    gamma: Option<f64>,
    boundary: Option<Boundary>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputTable {
    dir: Option<PathBuf>,
    svg: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    run: RunTable,
    switch: Option<SwitchTable>,
    threeq: Option<ThreeqTable>,
    nsys: Option<NsysTable>,
    #[serde(default)]
    output: OutputTable,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ArrivalArg {
    Bernoulli,
    UniformInt,
    Deterministic,
}

impl From<ArrivalArg> for ArrivalKind {
    fn from(a: ArrivalArg) -> Self {
        match a {
            ArrivalArg::Bernoulli => ArrivalKind::Bernoulli,
            ArrivalArg::UniformInt => ArrivalKind::UniformInt,
            ArrivalArg::Deterministic => ArrivalKind::Deterministic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundaryArg {
    F1,
    F2,
    F3,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::F1 => Boundary::F1,
            BoundaryArg::F2 => Boundary::F2,
            BoundaryArg::F3 => Boundary::F3,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VarianceArg {
    Simulated,
    Limit,
}

/// Flags shared by the simulation-driven subcommands. Every flag overrides
/// the matching config entry.
#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// TOML experiment file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub system: Option<SystemName>,
    /// Switch size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Boundary point: `uniform` (switch) or comma-separated values.
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long, value_enum)]
    pub arrivals: Option<ArrivalArg>,
    /// N-system service rates, `mu1,mu2`.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// One or more comma-separated ε values.
    #[arg(long)]
    pub eps: Option<String>,
    /// One or more comma-separated base seeds.
    #[arg(long)]
    pub seed: Option<String>,
    /// Stationary samples per (ε, seed); `1e6` is accepted.
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    /// JSON frequency grid: an array of frequencies, each an array of `[re, im]`.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Random grid size when no grid file is given.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub grid_seed: Option<u64>,
    /// Skip the limit-law comparison in `verify`.
    #[arg(long)]
    pub no_limit: bool,
    #[arg(long)]
    pub limit_samples: Option<String>,
    /// Arrival variances for limit laws and residuals.
    #[arg(long, value_enum)]
    pub variance_at: Option<VarianceArg>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemParams {
    Switch {
        n: usize,
        nu: Vec<f64>,
        arrivals: ArrivalKind,
    },
    ThreeQ {
        nu: [f64; 3],
        arrivals: ArrivalKind,
    },
    NSys {
        mu: [f64; 2],
        nu: [f64; 2],
        gamma: f64,
        boundary: Boundary,
    },
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub system: SystemName,
    pub params: SystemParams,
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub samples: usize,
    pub replicas: usize,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
    pub grid: Option<PathBuf>,
    pub grid_points: usize,
    pub grid_seed: u64,
    pub compare_limit: bool,
    pub limit_samples: usize,
    pub variance_at: VarianceAt,
    pub out_dir: PathBuf,
    pub svg: bool,
}

pub const DEFAULT_EPS: [f64; 3] = [0.2, 0.1, 0.05];

fn read_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| cfg_err(format!("config {}: {e}", path.display())))
}

impl Experiment {
    pub fn from_args(args: &RunArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => ConfigFile::default(),
        };
        let run = &file.run;
        let system = args
            .system
            .or(run.system)
            .ok_or_else(|| missing("run.system"))?;

        let params = match system {
            SystemName::Switch => switch_params(args, file.switch.unwrap_or_default())?,
            SystemName::Threeq => threeq_params(args, file.threeq.unwrap_or_default())?,
            SystemName::Nsys => nsys_params(args, file.nsys.unwrap_or_default())?,
        };

        let eps = match &args.eps {
            Some(s) => parse_list(s, "eps")?,
            None => run
                .eps
                .clone()
                .map(OneOrMany::into_vec)
                .unwrap_or(DEFAULT_EPS.to_vec()),
        };
        let seeds = match &args.seed {
            Some(s) => parse_list(s, "seed")?,
            None => run
                .seeds
                .clone()
                .map(OneOrMany::into_vec)
                .unwrap_or(vec![1]),
        };
        let samples = match (&args.samples, &run.samples) {
            (Some(s), _) => parse_count(s, "samples")?,
            (None, Some(c)) => c.resolve("run.samples")?,
            (None, None) => 1_000_000,
        };
        let limit_samples = match (&args.limit_samples, &run.limit_samples) {
            (Some(s), _) => parse_count(s, "limit_samples")?,
            (None, Some(c)) => c.resolve("run.limit_samples")?,
            (None, None) => samples,
        };
        let variance_at = match args.variance_at {
            Some(VarianceArg::Simulated) => VarianceAt::Simulated,
            Some(VarianceArg::Limit) => VarianceAt::Limit,
            None => run.variance_at.unwrap_or_default(),
        };
        let exp = Self {
            system,
            params,
            eps,
            seeds,
            samples,
            replicas: args.replicas.or(run.replicas).unwrap_or(8),
            burn_in: args.burn_in.or(run.burn_in),
            thin: args.thin.or(run.thin),
            grid: args.grid.clone().or(run.grid.clone()),
            grid_points: args.grid_points.or(run.grid_points).unwrap_or(10),
            grid_seed: args.grid_seed.or(run.grid_seed).unwrap_or(2024),
            compare_limit: !args.no_limit && run.compare_limit.unwrap_or(true),
            limit_samples,
            variance_at,
            out_dir: args
                .out
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            svg: args.svg || file.output.svg.unwrap_or(false),
        };
        exp.validate()?;
        Ok(exp)
    }

    /// Fail-fast check: every system in the sweep must be constructible.
    fn validate(&self) -> Result<(), ConfigError> {
        if self.eps.is_empty() {
            return Err(cfg_err("`eps` must list at least one value"));
        }
        if self.seeds.is_empty() {
            return Err(cfg_err("`seed` must list at least one value"));
        }
        if self.replicas == 0 {
            return Err(cfg_err("`replicas` must be at least 1"));
        }
        if self.thin == Some(0) {
            return Err(cfg_err("`thin` must be at least 1"));
        }
        if self.grid_points == 0 && self.grid.is_none() {
            return Err(cfg_err("`grid_points` must be at least 1"));
        }
        for &eps in &self.eps {
            self.plan(eps)?;
            self.check_system(eps)?;
        }
        Ok(())
    }

    fn check_system(&self, eps: f64) -> Result<(), ConfigError> {
        let r = match &self.params {
            SystemParams::Switch { n, nu, arrivals } => {
                SwitchSystem::heavy_traffic(*n, nu.clone(), eps, *arrivals).map(|_| ())
            }
            SystemParams::ThreeQ { nu, arrivals } => {
                ThreeQSystem::heavy_traffic(*nu, eps, *arrivals).map(|_| ())
            }
            SystemParams::NSys {
                mu,
                nu,
                gamma,
                boundary,
            } => NSystem::heavy_traffic(*mu, *nu, *boundary, *gamma, eps).map(|_| ()),
        };
        r.map_err(|e| cfg_err(e.to_string()))
    }

    pub fn plan(&self, eps: f64) -> Result<SamplingPlan, ConfigError> {
        let mut plan = match self.params {
            SystemParams::NSys { .. } => SamplingPlan::nsys_default(eps, self.samples),
            _ => SamplingPlan::discrete_default(eps, self.samples),
        }
        .map_err(|e| cfg_err(e.to_string()))?;
        if let Some(b) = self.burn_in {
            plan.burn_in = b;
        }
        if let Some(t) = self.thin {
            plan.thin = t;
        }
        Ok(plan)
    }

    pub fn simulate(&self, eps: f64, seed: u64) -> anyhow::Result<StationaryEnsemble> {
        let plan = self.plan(eps)?;
        Ok(match &self.params {
            SystemParams::Switch { n, nu, arrivals } => {
                let sys = SwitchSystem::heavy_traffic(*n, nu.clone(), eps, *arrivals)?;
                run_replicas(&sys, seed, self.replicas, plan)?
            }
            SystemParams::ThreeQ { nu, arrivals } => {
                let sys = ThreeQSystem::heavy_traffic(*nu, eps, *arrivals)?;
                run_replicas_3q(&sys, seed, self.replicas, plan)?
            }
            SystemParams::NSys {
                mu,
                nu,
                gamma,
                boundary,
            } => {
                let sys = NSystem::heavy_traffic(*mu, *nu, *boundary, *gamma, eps)?;
                run_replicas_nsys(&sys, seed, self.replicas, plan)?
            }
        })
    }

    /// File stem for one (ε, seed) run.
    pub fn stem(&self, eps: f64, seed: u64) -> String {
        format!("{}_eps{eps}_seed{seed}", self.system.as_str())
    }
}

fn switch_params(args: &RunArgs, t: SwitchTable) -> Result<SystemParams, ConfigError> {
    let n = args.n.or(t.n);
    let nu = match &args.nu {
        Some(s) if s.trim() == "uniform" => NuSpec::Keyword("uniform".into()),
        Some(s) => NuSpec::Values(parse_list(s, "switch.nu")?),
        None => t.nu.ok_or_else(|| missing("switch.nu"))?,
    };
    let (n, nu) = match nu {
        NuSpec::Keyword(k) if k == "uniform" => {
            let n = n.ok_or_else(|| missing("switch.n"))?;
            if n < 2 {
                return Err(cfg_err("`switch.n` must be at least 2"));
            }
            (n, vec![1.0 / n as f64; n * n])
        }
        NuSpec::Keyword(k) => {
            return Err(cfg_err(format!(
                "`switch.nu`: unknown keyword {k:?} (use \"uniform\" or a list)"
            )))
        }
        NuSpec::Values(v) => {
            let side = (v.len() as f64).sqrt().round() as usize;
            let n = n.unwrap_or(side);
            if n * n != v.len() {
                return Err(cfg_err(format!(
                    "`switch.nu` needs n² = {} values, got {}",
                    n * n,
                    v.len()
                )));
            }
            (n, v)
        }
    };
    let arrivals = args
        .arrivals
        .map(Into::into)
        .or(t.arrivals)
        .unwrap_or(ArrivalKind::Bernoulli);
    Ok(SystemParams::Switch { n, nu, arrivals })
}

fn threeq_params(args: &RunArgs, t: ThreeqTable) -> Result<SystemParams, ConfigError> {
    let nu = match &args.nu {
        Some(s) => parse_list(s, "threeq.nu")?,
        None => t.nu.ok_or_else(|| missing("threeq.nu"))?,
    };
    let nu: [f64; 3] = nu
        .try_into()
        .map_err(|v: Vec<f64>| cfg_err(format!("`threeq.nu` needs 3 values, got {}", v.len())))?;
    let arrivals = args
        .arrivals
        .map(Into::into)
        .or(t.arrivals)
        .unwrap_or(ArrivalKind::Bernoulli);
    Ok(SystemParams::ThreeQ { nu, arrivals })
}

fn nsys_params(args: &RunArgs, t: NsysTable) -> Result<SystemParams, ConfigError> {
    let mu = match &args.mu {
        Some(s) => parse_list(s, "nsys.mu")?,
        None => t.mu.ok_or_else(|| missing("nsys.mu"))?,
    };
    let mu = pair(mu, "nsys.mu")?;
    let boundary = args
        .boundary
        .map(Into::into)
        .or(t.boundary)
        .unwrap_or(Boundary::F3);
    let nu = match (&args.nu, t.nu) {
        (Some(s), _) => pair(parse_list(s, "nsys.nu")?, "nsys.nu")?,
        (None, Some(v)) => pair(v, "nsys.nu")?,
        (None, None) if boundary == Boundary::F3 => mu,
        (None, None) => return Err(missing("nsys.nu")),
    };
    let gamma = args.gamma.or(t.gamma).unwrap_or(1.0);
    Ok(SystemParams::NSys {
        mu,
        nu,
        gamma,
        boundary,
    })
}
