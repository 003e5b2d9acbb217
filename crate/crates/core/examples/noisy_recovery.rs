//! Noisy order-4 recovery with the automatic step size, at growing sample
//! budgets.

use spiked_tensor::model::{derive_seed, NoiseModel, ObservationStream, StreamConfig};
use spiked_tensor::optim::{default_eta0_even, nsga_even, NsgaConfig};

fn main() -> spiked_tensor::Result<()> {
    let (d, lambda) = (10, 4.0);
    for n in [2_000usize, 5_000, 20_000] {
        let mut errors = Vec::new();
        for trial in 0..5u64 {
            let seed = derive_seed(42, &[n as u64, trial]);
            let cfg = StreamConfig::new(d, 4, lambda, NoiseModel::Gaussian { sigma: 1.0 }, seed);
            let r = nsga_even(&mut ObservationStream::new(cfg)?, &NsgaConfig::new(n))?;
            errors.push(r.error);
        }
        errors.sort_by(f64::total_cmp);
        println!(
            "N = {n:>6}  eta0 = {:.3e}  median error {:.3e}",
            default_eta0_even(d, 4, lambda, n),
            errors[errors.len() / 2]
        );
    }
    Ok(())
}
