//! Order-5 recovery: partial-trace preprocessing, two sign-opposed NSGA
//! instances and holdout selection.

use spiked_tensor::model::{NoiseModel, ObservationStream, StreamConfig};
use spiked_tensor::optim::{nsga_odd, NsgaConfig, Preprocess, Selection};

fn main() -> spiked_tensor::Result<()> {
    let cfg = StreamConfig::new(6, 5, 3.0, NoiseModel::Gaussian { sigma: 1.0 }, 5);
    let mut stream = ObservationStream::new(cfg)?;
    let mut nsga = NsgaConfig::new(8_000);
    nsga.preprocess = Preprocess::PartialTrace { n1: 360 };
    nsga.selection = Selection::Holdout { fraction: 0.5 };
    let r = nsga_odd(&mut stream, &nsga)?;

    println!(
        "effective SNR lambda<v*,u> = {:.3}",
        r.effective_snr.unwrap_or(f64::NAN)
    );
    for (i, c) in r.candidates.iter().enumerate() {
        let mark = if Some(i) == r.selected { "*" } else { " " };
        println!(
            "{mark} instance {} sign {:+}  holdout score {:>9.4}  error {:.3e}",
            c.instance,
            c.sign,
            c.holdout_score.unwrap_or(f64::NAN),
            c.error
        );
    }
    println!(
        "samples used {}, selected error {:.3e}",
        r.samples_used, r.error
    );
    Ok(())
}
