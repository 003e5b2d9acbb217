//! Second-moment and sub-Gaussian tail checks for each noise model.

use spiked_tensor::diagnostics::{noise_moment_check, subgaussian_tail_check, CheckReport};
use spiked_tensor::model::NoiseModel;

fn main() -> spiked_tensor::Result<()> {
    println!("{}", CheckReport::table_header());
    for model in [
        NoiseModel::Gaussian { sigma: 1.0 },
        NoiseModel::Rademacher { sigma: 2.0 },
        NoiseModel::Uniform { sigma: 0.5 },
    ] {
        println!(
            "{}",
            noise_moment_check(model, 2, 3, 100_000, 10, 1)?.table_row()
        );
        let tail = subgaussian_tail_check(model, 2, 3, 100_000, 2)?;
        println!("{}", tail.table_row());
        println!("    {}", tail.detail);
    }
    Ok(())
}
