//! Empirical success rate over a small (lambda, N) grid.

use spiked_tensor::harness::{run_sweep, Method, MethodConfigs, SweepConfig};
use spiked_tensor::model::NoiseModel;

fn main() -> spiked_tensor::Result<()> {
    let cfg = SweepConfig {
        d: vec![8],
        lambda: vec![1.0, 2.0, 4.0],
        n: vec![250, 1_000, 4_000],
        k: 4,
        noise: NoiseModel::Gaussian { sigma: 1.0 },
        method: Method::Nsga,
        configs: MethodConfigs::default(),
        success_threshold: 0.1,
        trials: 6,
        master_seed: 3,
        output_dir: std::env::temp_dir().join("spiked-tensor-sweep"),
        element_budget: None,
        workers: None,
    };
    let out = run_sweep(&cfg)?;
    print!("{:>8}", "lambda");
    for n in &cfg.n {
        print!("{n:>8}");
    }
    println!();
    for row in out.rows.chunks(cfg.n.len()) {
        print!("{:>8}", row[0].lambda);
        for cell in row {
            print!("{:>8.2}", cell.success_rate.unwrap_or(f64::NAN));
        }
        println!();
    }
    println!("phase table: {}", out.phase_path.display());
    Ok(())
}
