//! NSGA on noiseless order-4 observations: alignment climbs from d^{-1/2}
//! to 1.

use spiked_tensor::model::{NoiseModel, ObservationStream, StreamConfig};
use spiked_tensor::optim::{nsga_even, NsgaConfig};

fn main() -> spiked_tensor::Result<()> {
    let cfg = StreamConfig::new(12, 4, 1.0, NoiseModel::Gaussian { sigma: 0.0 }, 1);
    let mut stream = ObservationStream::new(cfg)?;
    let mut nsga = NsgaConfig::new(2000).with_eta0(0.05);
    nsga.trace_every = Some(100);
    let r = nsga_even(&mut stream, &nsga)?;
    println!("{:>6} {:>10} {:>12} {:>12}", "t", "eta", "alpha", "||W||_F");
    for rec in &r.trace.records {
        println!(
            "{:>6} {:>10.5} {:>12.9} {:>12.4e}",
            rec.t, rec.eta, rec.alpha, rec.frob_norm
        );
    }
    println!("recovery error {:.3e}", r.error);
    Ok(())
}
