//! NSGA against the three vector baselines through the experiment harness,
//! writing per-trial JSON and summary.csv.

use spiked_tensor::baselines::VectorSgaConfig;
use spiked_tensor::harness::{run_trials, ExperimentConfig, Method, MethodConfigs};
use spiked_tensor::model::{NoiseModel, StreamConfig};

fn main() -> spiked_tensor::Result<()> {
    let mut accelerated = VectorSgaConfig::new(0, 1e-4);
    accelerated.momentum = 0.9;
    let cfg = ExperimentConfig {
        stream: StreamConfig::new(10, 4, 2.0, NoiseModel::Gaussian { sigma: 1.0 }, 0),
        methods: vec![
            Method::Nsga,
            Method::Sga,
            Method::SgaProjected,
            Method::SgaAccelerated,
        ],
        configs: MethodConfigs {
            sga: Some(VectorSgaConfig::new(0, 1e-3)),
            sga_projected: Some(VectorSgaConfig::new(0, 1e-3)),
            sga_accelerated: Some(accelerated),
            ..MethodConfigs::default()
        },
        trials: 4,
        master_seed: 7,
        sample_grid: vec![2_000, 8_000],
        output_dir: std::env::temp_dir().join("spiked-tensor-compare"),
        success_threshold: 0.1,
        workers: None,
    };
    let out = run_trials(&cfg)?;
    for row in &out.rows {
        if let Some(s) = row.stats {
            println!(
                "N = {:>5}  {:<16} median {:.3e}  q25 {:.3e}  q75 {:.3e}",
                row.n, row.method, s.median, s.q25, s.q75
            );
        }
    }
    println!("summary: {}", out.summary_path.display());
    Ok(())
}
