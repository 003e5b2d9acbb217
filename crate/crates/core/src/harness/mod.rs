//! Seeded multi-trial experiments, phase sweeps and their CSV/JSON outputs.
//!
//! Trial `i` at sample budget `N` runs on the stream seed
//! `derive_seed(master_seed, [N, i])` (sweeps use `[d, λ bits, N, i]`), so
//! every method compared at the same `(N, i)` sees the same planted vector
//! and the same noise. Trials run on a rayon pool whose size comes from
//! `SPIKED_TENSOR_THREADS`, then `workers` in the config, then rayon's
//! default. Files are written once, after all trials finish.

mod cli;
mod stats;

pub use cli::cli_main;
pub use stats::{quantile, summarize, CellStats};

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Deserializer, Serialize};

use crate::baselines::{sga_accelerated, sga_projected, sga_vector, VectorSgaConfig};
use crate::error::{Error, Result};
use crate::model::{derive_seed, NoiseModel, ObservationStream, StreamConfig};
use crate::optim::{nsga_even, nsga_odd, NsgaConfig, RecoveryResult};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "SPIKED_TENSOR_THREADS";

pub const SUMMARY_CSV_HEADER: &str = "N,method,mean_error,median_error,q25,q75,success_rate";
pub const PHASE_CSV_HEADER: &str = "d,lambda,N,k,success_rate";

/// Recovery error charged to a trial that diverged or collapsed.
pub const FAILED_TRIAL_ERROR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nsga,
    NsgaOdd,
    Sga,
    SgaProjected,
    SgaAccelerated,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Nsga,
        Method::NsgaOdd,
        Method::Sga,
        Method::SgaProjected,
        Method::SgaAccelerated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nsga => "nsga",
            Method::NsgaOdd => "nsga_odd",
            Method::Sga => "sga",
            Method::SgaProjected => "sga_projected",
            Method::SgaAccelerated => "sga_accelerated",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(
            self,
            Method::Sga | Method::SgaProjected | Method::SgaAccelerated
        )
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<Method>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Method),
        Many(Vec<Method>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(m) => vec![m],
        OneOrMany::Many(v) => v,
    })
}

/// Per-method optimizer settings. `nsga` serves both NSGA variants; each
/// baseline uses its own entry when present and falls back to `sga`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodConfigs {
    #[serde(default)]
    pub nsga: NsgaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sga: Option<VectorSgaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sga_projected: Option<VectorSgaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sga_accelerated: Option<VectorSgaConfig>,
}

impl MethodConfigs {
    fn baseline(&self, method: Method) -> Result<&VectorSgaConfig> {
        let own = match method {
            Method::SgaProjected => self.sga_projected.as_ref(),
            Method::SgaAccelerated => self.sga_accelerated.as_ref(),
            _ => None,
        };
        own.or(self.sga.as_ref()).ok_or_else(|| {
            Error::config(format!(
                "method {method} needs an `sga` (or `{method}`) config with eta0"
            ))
        })
    }

    fn validate(&self, methods: &[Method]) -> Result<()> {
        for &m in methods {
            if m.is_baseline() {
                let mut c = self.baseline(m)?.clone();
                c.n = 1;
                c.validate()?;
            } else {
                let mut c = self.nsga.clone();
                c.n = 1;
                c.validate()?;
            }
        }
        Ok(())
    }
}

/// One seeded recovery: the stream built from `stream` with its seed replaced
/// by `seed`, then `method` with budget `n`.
pub fn run_single(
    stream: &StreamConfig,
    method: Method,
    configs: &MethodConfigs,
    n: usize,
    seed: u64,
) -> Result<RecoveryResult> {
    let mut sc = stream.clone();
    sc.seed = seed;
    let mut s = ObservationStream::new(sc)?;
    if method.is_baseline() {
        let mut c = configs.baseline(method)?.clone();
        c.n = n;
        match method {
            Method::Sga => sga_vector(&mut s, &c),
            Method::SgaProjected => sga_projected(&mut s, &c),
            _ => sga_accelerated(&mut s, &c),
        }
    } else {
        let mut c = configs.nsga.clone();
        c.n = n;
        if method == Method::Nsga {
            nsga_even(&mut s, &c)
        } else {
            nsga_odd(&mut s, &c)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Stream template; its `seed` is replaced per trial.
    pub stream: StreamConfig,
    /// A method name or a list of them.
    #[serde(rename = "method", deserialize_with = "one_or_many")]
    pub methods: Vec<Method>,
    #[serde(flatten)]
    pub configs: MethodConfigs,
    pub trials: usize,
    pub master_seed: u64,
    pub sample_grid: Vec<usize>,
    pub output_dir: PathBuf,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_threshold() -> f64 {
    0.1
}

fn check_threshold(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::config(format!(
            "success_threshold must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Structural checks only; an element-budget violation is not an error
    /// here but is reported per cell.
    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if self.sample_grid.is_empty() {
            return Err(Error::config("sample_grid must not be empty"));
        }
        if self.sample_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sample_grid must be strictly increasing"));
        }
        if self.sample_grid[0] == 0 {
            return Err(Error::config("sample budgets must be positive"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        check_threshold(self.success_threshold)?;
        validate_stream_shape(&self.stream)?;
        self.configs.validate(&self.methods)
    }
}

/// [`StreamConfig::validate`] minus the element budget.
fn validate_stream_shape(stream: &StreamConfig) -> Result<()> {
    let mut s = stream.clone();
    s.element_budget = Some(usize::MAX);
    match s.validate() {
        Err(Error::BudgetExceeded { .. }) => Ok(()),
        other => other,
    }
}

/// Everything recorded about one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub stream: StreamConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nsga: Option<NsgaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sga: Option<VectorSgaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RecoveryResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
}

impl TrialRecord {
    /// Recovery error, with failed runs charged [`FAILED_TRIAL_ERROR`];
    /// `None` when the cell could not run at all.
    pub fn charged_error(&self) -> Option<f64> {
        match (&self.result, self.error_kind.as_deref()) {
            (Some(r), _) => Some(r.error),
            (None, Some("budget_exceeded")) => None,
            (None, _) => Some(FAILED_TRIAL_ERROR),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub method: Method,
    /// `None` when the cell exceeded the element budget.
    pub stats: Option<CellStats>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<TrialRecord>,
    pub summary_path: PathBuf,
    pub trial_paths: Vec<PathBuf>,
}

impl RunOutput {
    pub fn row(&self, n: usize, method: Method) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.n == n && r.method == method)
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        std::iter::once(self.summary_path.as_path())
            .chain(self.trial_paths.iter().map(PathBuf::as_path))
    }
}

/// Worker count: `SPIKED_TENSOR_THREADS`, else `configured`, else rayon's
/// default.
pub fn worker_count(configured: Option<usize>) -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(configured.filter(|&n| n > 0))
}

fn parallel_map<T, U, F>(items: Vec<T>, workers: Option<usize>, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(workers) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

fn record_trial(cfg: &ExperimentConfig, method: Method, n: usize, trial: usize) -> TrialRecord {
    let seed = derive_seed(cfg.master_seed, &[n as u64, trial as u64]);
    let outcome = run_single(&cfg.stream, method, &cfg.configs, n, seed);
    let mut stream = cfg.stream.clone();
    stream.seed = seed;
    let (nsga, sga) = if method.is_baseline() {
        let mut c = cfg.configs.baseline(method).ok().cloned();
        if let Some(c) = c.as_mut() {
            c.n = n;
        }
        (None, c)
    } else {
        let mut c = cfg.configs.nsga.clone();
        c.n = n;
        (Some(c), None)
    };
    let (result, error, error_kind) = match outcome {
        Ok(r) => (Some(r), None, None),
        Err(e) => {
            warn!("{method} N={n} trial {trial}: {e}");
            (None, Some(e.to_string()), Some(e.kind().to_string()))
        }
    };
    TrialRecord {
        method,
        n,
        trial,
        seed,
        stream,
        nsga,
        sga,
        result,
        error,
        error_kind,
    }
}

/// Runs every `(N, method, trial)` of `cfg` and writes
/// `output_dir/trials/{method}_N{N}_t{trial:03}.json` plus
/// `output_dir/summary.csv` with one row per `(N, method)`.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &n in &cfg.sample_grid {
        for &m in &cfg.methods {
            for trial in 0..cfg.trials {
                jobs.push((n, m, trial));
            }
        }
    }
    info!("running {} trials", jobs.len());
    let records = parallel_map(jobs, cfg.workers, |(n, m, trial)| {
        record_trial(cfg, m, n, trial)
    })?;

    let trial_dir = cfg.output_dir.join("trials");
    fs::create_dir_all(&trial_dir)?;
    let mut trial_paths = Vec::with_capacity(records.len());
    for r in &records {
        let path = trial_dir.join(format!("{}_N{}_t{:03}.json", r.method, r.n, r.trial));
        fs::write(&path, serde_json::to_string_pretty(r)? + "\n")?;
        trial_paths.push(path);
    }

    let mut rows = Vec::new();
    for (cell, chunk) in records.chunks(cfg.trials).enumerate() {
        let n = cfg.sample_grid[cell / cfg.methods.len()];
        let method = cfg.methods[cell % cfg.methods.len()];
        let errors: Option<Vec<f64>> = chunk.iter().map(TrialRecord::charged_error).collect();
        let stats = errors.map(|e| summarize(&e, cfg.success_threshold));
        if stats.is_none() {
            warn!("{method} N={n}: element budget exceeded, cell skipped");
        }
        rows.push(SummaryRow { n, method, stats });
    }
    let summary_path = cfg.output_dir.join("summary.csv");
    fs::write(&summary_path, summary_csv(&rows))?;
    Ok(RunOutput {
        rows,
        records,
        summary_path,
        trial_paths,
    })
}

/// Floats are written in their shortest round-trip form.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},", r.n, r.method));
        match &r.stats {
            Some(s) => out.push_str(&format!(
                "{:?},{:?},{:?},{:?},{:?}",
                s.mean, s.median, s.q25, s.q75, s.success_rate
            )),
            None => out.push_str(",,,,"),
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: Vec<usize>,
    pub lambda: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub k: usize,
    pub noise: NoiseModel,
    #[serde(default = "default_sweep_method")]
    pub method: Method,
    #[serde(flatten)]
    pub configs: MethodConfigs,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_sweep_method() -> Method {
    Method::Nsga
}

impl SweepConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_trials(self.trials)?;
        if self.d.is_empty() || self.lambda.is_empty() || self.n.is_empty() {
            return Err(Error::config(
                "sweep grids over d, lambda and N must be non-empty",
            ));
        }
        if self.d.contains(&0) || self.n.contains(&0) || self.k == 0 {
            return Err(Error::config("d, N and k must be positive"));
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::config("lambda values must be finite and >= 0"));
        }
        self.noise.validate()?;
        check_threshold(self.success_threshold)?;
        self.configs.validate(&[self.method])
    }

    fn stream(&self, d: usize, lambda: f64) -> StreamConfig {
        let mut s = StreamConfig::new(d, self.k, lambda, self.noise, 0);
        s.element_budget = self.element_budget;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub d: usize,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
    /// `None` when the cell exceeded the element budget.
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<PhaseRow>,
    pub phase_path: PathBuf,
}

/// Success rate of `cfg.method` on every `(d, λ, N)` cell, written to
/// `output_dir/phase.csv` in `d`, then `λ`, then `N` order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &d in &cfg.d {
        for &lambda in &cfg.lambda {
            for &n in &cfg.n {
                cells.push((d, lambda, n));
            }
        }
    }
    let jobs: Vec<_> = cells
        .iter()
        .flat_map(|&c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let outcomes = parallel_map(jobs, cfg.workers, |((d, lambda, n), trial)| {
        let seed = derive_seed(
            cfg.master_seed,
            &[d as u64, lambda.to_bits(), n as u64, trial as u64],
        );
        match run_single(&cfg.stream(d, lambda), cfg.method, &cfg.configs, n, seed) {
            Ok(r) => Some(r.error),
            Err(Error::BudgetExceeded { .. }) => None,
            Err(e) => {
                warn!("sweep d={d} lambda={lambda} N={n} trial {trial}: {e}");
                Some(FAILED_TRIAL_ERROR)
            }
        }
    })?;
    let rows: Vec<PhaseRow> = cells
        .iter()
        .zip(outcomes.chunks(cfg.trials))
        .map(|(&(d, lambda, n), chunk)| {
            let errors: Option<Vec<f64>> = chunk.iter().copied().collect();
            if errors.is_none() {
                warn!("sweep d={d} N={n}: element budget exceeded, cell skipped");
            }
            PhaseRow {
                d,
                lambda,
                n,
                k: cfg.k,
                success_rate: errors.map(|e| summarize(&e, cfg.success_threshold).success_rate),
            }
        })
        .collect();
    fs::create_dir_all(&cfg.output_dir)?;
    let phase_path = cfg.output_dir.join("phase.csv");
    fs::write(&phase_path, phase_csv(&rows))?;
    Ok(SweepOutput { rows, phase_path })
}

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from(PHASE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{:?},{},{},", r.d, r.lambda, r.n, r.k));
        if let Some(s) = r.success_rate {
            out.push_str(&format!("{s:?}"));
        }
        out.push('\n');
    }
    out
}
