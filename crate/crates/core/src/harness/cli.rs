use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::{run_single, run_sweep, run_trials, ExperimentConfig, Method, SweepConfig};
use crate::diagnostics::{
    alpha_taylor_check, gradient_suite, noise_moment_check, subgaussian_tail_check, CheckReport,
};
use crate::error::{Error, Result};
use crate::model::{derive_seed, StreamConfig};

#[derive(Debug, Parser)]
#[command(
    name = "spiked-tensor",
    version,
    about = "Tensor PCA experiments with normalized stochastic gradient ascent",
    arg_required_else_help = true
)]
struct Cli {
    /// Replaces every seed in the loaded config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Seeded trials over a sample grid; writes per-trial JSON and summary.csv.
    Run(ConfigArg),
    /// Success rates over a (d, lambda, N) grid; writes phase.csv.
    Sweep(ConfigArg),
    /// Finite-difference checks of the reward gradients and the alignment
    /// expansion.
    CheckGrad {
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Writes the reports as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment and tail checks on the noise of a stream config.
    ValidateNoise {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 16)]
        directions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One seeded trial with its full trace as CSV.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first configured method.
        #[arg(long)]
        method: Option<String>,
        /// Sample budget; defaults to the largest grid value.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Trace path; defaults to a file in the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on runtime failure or a failed check,
/// 2 on a usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(a) => {
            let mut cfg = ExperimentConfig::from_json_file(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let out = run_trials(&cfg)?;
            for r in &out.rows {
                match &r.stats {
                    Some(s) => eprintln!(
                        "N={:<8} {:<16} median {:.3e}  success {:.2}",
                        r.n, r.method, s.median, s.success_rate
                    ),
                    None => eprintln!("N={:<8} {:<16} skipped (element budget)", r.n, r.method),
                }
            }
            print_paths(out.paths());
            Ok(true)
        }
        Command::Sweep(a) => {
            let mut cfg = SweepConfig::from_json_file(&a.config)?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let out = run_sweep(&cfg)?;
            print_paths([out.phase_path.as_path()]);
            Ok(true)
        }
        Command::CheckGrad { d, k, trials, out } => {
            let seed = cli.seed.unwrap_or(0);
            let mut reports = gradient_suite(d, k, trials, seed)?;
            reports.push(alpha_taylor_check(
                d,
                trials,
                derive_seed(seed, &[u64::MAX]),
            )?);
            report(&reports, out.as_deref())
        }
        Command::ValidateNoise {
            config,
            samples,
            directions,
            out,
        } => {
            let mut sc: StreamConfig = serde_json::from_str(&fs::read_to_string(&config)?)?;
            if let Some(s) = cli.seed {
                sc.seed = s;
            }
            let reports = vec![
                noise_moment_check(sc.noise, sc.d, sc.k, samples, directions, sc.seed)?,
                subgaussian_tail_check(sc.noise, sc.d, sc.k, samples, derive_seed(sc.seed, &[1]))?,
            ];
            report(&reports, out.as_deref())
        }
        Command::Trace {
            config,
            method,
            n,
            trial,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            trace(&mut cfg, method.as_deref(), n, trial, out)
        }
    }
}

fn print_paths<'a>(paths: impl IntoIterator<Item = &'a Path>) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn report(reports: &[CheckReport], out: Option<&Path>) -> Result<bool> {
    eprintln!("{}", CheckReport::table_header());
    for r in reports {
        eprintln!("{}", r.table_row());
    }
    if let Some(path) = out {
        write_json(path, &reports)?;
        print_paths([path]);
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn parse_method(name: &str) -> Result<Method> {
    Method::ALL
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::config(format!("unknown method {name:?}")))
}

/// Runs trial `trial` at budget `n` exactly as `run` would, but records every
/// iteration unless the config sets `trace_every`.
fn trace(
    cfg: &mut ExperimentConfig,
    method: Option<&str>,
    n: Option<usize>,
    trial: usize,
    out: Option<PathBuf>,
) -> Result<bool> {
    cfg.validate()?;
    let method = match method {
        Some(m) => parse_method(m)?,
        None => cfg.methods[0],
    };
    let n = n.unwrap_or(*cfg.sample_grid.last().expect("validated grid"));
    cfg.configs.nsga.trace_every.get_or_insert(1);
    for c in [
        &mut cfg.configs.sga,
        &mut cfg.configs.sga_projected,
        &mut cfg.configs.sga_accelerated,
    ]
    .into_iter()
    .flatten()
    {
        c.trace_every.get_or_insert(1);
    }
    let seed = derive_seed(cfg.master_seed, &[n as u64, trial as u64]);
    let path = out.unwrap_or_else(|| {
        cfg.output_dir
            .join(format!("trace_{method}_N{n}_t{trial:03}.csv"))
    });
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let result = match run_single(&cfg.stream, method, &cfg.configs, n, seed) {
        Ok(r) => r,
        Err(e) => {
            if let Error::Divergence { trace, .. } | Error::NumericalCollapse { trace, .. } = &e {
                fs::write(&path, trace.to_csv())?;
                eprintln!("partial trace written to {}", path.display());
            }
            return Err(e);
        }
    };
    fs::write(&path, result.trace.to_csv())?;
    let mut written = vec![path.clone()];
    if let Some(second) = &result.second_trace {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        let p2 = path.with_file_name(format!("{stem}_second.csv"));
        fs::write(&p2, second.to_csv())?;
        written.push(p2);
    }
    eprintln!(
        "{method} N={n} trial {trial}: recovery error {:.3e}",
        result.error
    );
    print_paths(written.iter().map(PathBuf::as_path));
    Ok(true)
}
