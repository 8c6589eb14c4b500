//! Experiment configuration: built-in defaults per experiment, overridden by
//! a TOML file, overridden by command-line flags of the same name.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use mvhl_core::certify::Partition;
use mvhl_core::{SolverConfig, SubspaceModel};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseTransition,
    NoiseSweep,
    ChannelDemo,
    Recover,
    Diagnose,
    Generate,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase-transition",
            ExperimentKind::NoiseSweep => "noise-sweep",
            ExperimentKind::ChannelDemo => "channel-demo",
            ExperimentKind::Recover => "recover",
            ExperimentKind::Diagnose => "diagnose",
            ExperimentKind::Generate => "generate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Contiguous,
    Random,
}

impl FromStr for PartitionKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(PartitionKind::Contiguous),
            "random" => Ok(PartitionKind::Random),
            other => Err(HarnessError::Config(format!(
                "unknown partition `{other}` (expected contiguous or random)"
            ))),
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionKind::Contiguous => "contiguous",
            PartitionKind::Random => "random",
        })
    }
}

fn ser_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: Vec<usize>,
    pub k: usize,
    pub s: Vec<usize>,
    pub r: Vec<usize>,
    #[serde(serialize_with = "ser_display")]
    pub model: SubspaceModel,
    pub trials: usize,
    pub seed: u64,
    pub eps: Vec<f64>,
    /// Minimum wrap-around separation between sources of one channel.
    pub separation: f64,
    pub success_threshold: f64,
    /// 1D MUSIC grid size.
    pub grid: usize,
    /// 2D MUSIC grid size per axis.
    pub grid_2d: usize,
    /// Delay-Doppler geometry for the channel demo.
    pub big_n: usize,
    pub p: usize,
    /// Sources per channel in the channel demo.
    pub targets: Vec<usize>,
    /// Forced delays/Dopplers for the channel demo, channel-major.
    pub fixed_tau: Vec<f64>,
    pub fixed_nu: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<usize>,
    #[serde(serialize_with = "ser_display")]
    pub partition: PartitionKind,
    pub partition_seed: u64,
    pub power_iters: usize,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_feas: f64,
    pub over_relaxation: f64,
    pub adaptive_rho: bool,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let solver = SolverConfig::default();
        let mut cfg = Self {
            experiment: kind,
            n: vec![48],
            k: 2,
            s: (1..=6).collect(),
            r: (1..=6).collect(),
            model: SubspaceModel::DftRows,
            trials: 20,
            seed: 1,
            eps: vec![0.0],
            separation: 0.0,
            success_threshold: 1e-3,
            grid: 4096,
            grid_2d: 256,
            big_n: 10,
            p: 10,
            targets: vec![2, 2],
            fixed_tau: Vec::new(),
            fixed_nu: Vec::new(),
            t0: None,
            partition: PartitionKind::Contiguous,
            partition_seed: 0,
            power_iters: 200,
            rho: solver.rho,
            max_iter: solver.max_iter,
            tol_primal: solver.tol_primal,
            tol_dual: solver.tol_dual,
            tol_feas: solver.tol_feas,
            over_relaxation: solver.over_relaxation,
            adaptive_rho: solver.adaptive_rho,
            out: PathBuf::from("results").join(kind.as_str()),
            threads: 0,
            svg: true,
        };
        match kind {
            ExperimentKind::PhaseTransition => {}
            ExperimentKind::NoiseSweep => {
                cfg.n = vec![48, 64];
                cfg.s = vec![2];
                cfg.r = vec![2];
                cfg.trials = 10;
                cfg.eps = vec![1e-3, 1e-2, 1e-1, 1.0];
            }
            ExperimentKind::ChannelDemo => {
                cfg.n = vec![100];
                cfg.s = vec![2];
                cfg.r = vec![2];
                cfg.trials = 1;
                cfg.model = SubspaceModel::FourierSteering;
            }
            ExperimentKind::Recover => {
                cfg.trials = 1;
            }
            ExperimentKind::Diagnose => {
                cfg.n = vec![128];
                cfg.s = vec![1];
                cfg.r = vec![1];
                cfg.trials = 1;
            }
            ExperimentKind::Generate => {
                cfg.s = vec![2];
                cfg.r = vec![2];
                cfg.trials = 1;
            }
        }
        cfg
    }

    /// Defaults, then the file at `path` (if any), then `overrides`.
    pub fn resolve(kind: ExperimentKind, file: Option<&Path>, overrides: &PartialConfig) -> Result<Self> {
        let mut cfg = Self::defaults(kind);
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let partial: PartialConfig = toml::from_str(&text)
                .map_err(|e| HarnessError::Config(format!("{}: {}", path.display(), e.message())))?;
            cfg.apply(&partial)?;
        }
        cfg.apply(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, p: &PartialConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &p.$field {
                    self.$field = v.clone();
                }
            )*};
        }
        set!(
            k, trials, seed, eps, separation, success_threshold, grid, grid_2d, big_n, p, fixed_tau, fixed_nu,
            partition_seed, power_iters, rho, max_iter, tol_primal, tol_dual, tol_feas, over_relaxation,
            adaptive_rho, out, threads, svg
        );
        if let Some(v) = &p.n {
            self.n = v.values()?;
        }
        if let Some(v) = &p.s {
            self.s = v.values()?;
        }
        if let Some(v) = &p.r {
            self.r = v.values()?;
        }
        if let Some(v) = &p.targets {
            self.targets = v.values()?;
        }
        if let Some(m) = &p.model {
            self.model = m.parse().map_err(|e: mvhl_core::MvhlError| HarnessError::Config(e.to_string()))?;
        }
        if let Some(part) = &p.partition {
            self.partition = part.parse()?;
        }
        if p.t0.is_some() {
            self.t0 = p.t0;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        for (name, list) in [("n", &self.n), ("s", &self.s), ("r", &self.r)] {
            if list.is_empty() {
                return fail(format!("`{name}` must list at least one value"));
            }
            if list.contains(&0) {
                return fail(format!("`{name}` values must be positive"));
            }
        }
        if self.k == 0 {
            return fail("`k` must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("`trials` must be at least 1".into());
        }
        if self.eps.is_empty() {
            return fail("`eps` must list at least one value".into());
        }
        if self.eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return fail("`eps` values must be finite and nonnegative".into());
        }
        if !(self.separation >= 0.0 && self.separation < 1.0) {
            return fail("`separation` must lie in [0, 1)".into());
        }
        if !(self.success_threshold > 0.0) {
            return fail("`success_threshold` must be positive".into());
        }
        if self.experiment == ExperimentKind::ChannelDemo {
            if self.targets.len() != self.k || self.targets.contains(&0) {
                return fail(format!(
                    "`targets` needs {} positive counts (one per channel), got {:?}",
                    self.k, self.targets
                ));
            }
            let total: usize = self.targets.iter().sum();
            for (name, list) in [("fixed_tau", &self.fixed_tau), ("fixed_nu", &self.fixed_nu)] {
                if !list.is_empty() && list.len() != total {
                    return fail(format!("`{name}` needs {total} entries, got {}", list.len()));
                }
            }
            if self.big_n < 2 || self.p < 2 {
                return fail("`big_n` and `p` must be at least 2".into());
            }
        }
        self.solver().validate().map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Solver settings with a zero ball radius; callers set the radius per trial.
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            max_iter: self.max_iter,
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
            tol_feas: self.tol_feas,
            noise_delta: 0.0,
            over_relaxation: self.over_relaxation,
            adaptive_rho: self.adaptive_rho,
        }
    }

    pub fn partition_spec(&self) -> Partition {
        match self.partition {
            PartitionKind::Contiguous => Partition::Contiguous,
            PartitionKind::Random => Partition::Random(self.partition_seed),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

/// An integer list written either as an array or as text such as `1..6` or `1,2,4`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ListSpec {
    List(Vec<usize>),
    Text(String),
}

impl ListSpec {
    pub fn values(&self) -> Result<Vec<usize>> {
        match self {
            ListSpec::List(v) => Ok(v.clone()),
            ListSpec::Text(t) => parse_usize_list(t),
        }
    }
}

/// Parses `a,b,c`, inclusive ranges `a..b`, or a mix: `1..3,6`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::Config(format!("cannot parse integer list `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn parse_list_arg(text: &str) -> std::result::Result<ListSpec, String> {
    parse_usize_list(text).map(ListSpec::List).map_err(|e| e.to_string())
}

/// Optional settings; used both for config files and for CLI overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    /// Signal lengths (list or range, e.g. `48,64`).
    #[arg(long, value_parser = parse_list_arg)]
    pub n: Option<ListSpec>,
    /// Number of channels.
    #[arg(long)]
    pub k: Option<usize>,
    /// Subspace dimensions (list or range, e.g. `1..6`).
    #[arg(long, value_parser = parse_list_arg)]
    pub s: Option<ListSpec>,
    /// Sources per channel (list or range).
    #[arg(long, value_parser = parse_list_arg)]
    pub r: Option<ListSpec>,
    /// Subspace model: dft-rows, rademacher or fourier-steering.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub success_threshold: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub grid_2d: Option<usize>,
    #[arg(long)]
    pub big_n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Sources per channel for the channel demo (e.g. `2,2`).
    #[arg(long, value_parser = parse_list_arg)]
    pub targets: Option<ListSpec>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub fixed_tau: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub fixed_nu: Option<Vec<f64>>,
    /// Golfing steps (default: ceil(log2(48 K r s mu0))).
    #[arg(long)]
    pub t0: Option<usize>,
    /// Golfing partition: contiguous or random.
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long)]
    pub partition_seed: Option<u64>,
    #[arg(long)]
    pub power_iters: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol_primal: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    #[arg(long)]
    pub tol_feas: Option<f64>,
    #[arg(long)]
    pub over_relaxation: Option<f64>,
    #[arg(long)]
    pub adaptive_rho: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(skip)]
    pub svg: Option<bool>,
}
