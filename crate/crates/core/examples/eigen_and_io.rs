//! Top eigenvector of a symmetrized matrix and the binary tensor format.

use spiked_tensor::model::{NoiseModel, ObservationStream, StreamConfig};
use spiked_tensor::optim::{alignment, extract_estimate};
use spiked_tensor::tensor::{
    read_tensor, sym_top_eigenvector, write_tensor, EigenOptions, SquareMatrix, UnitVector,
};

fn main() -> spiked_tensor::Result<()> {
    let v = UnitVector::normalize(vec![3.0, -1.0, 2.0, 0.5])?;
    let mut w = SquareMatrix::outer(v.as_slice()).scaled(5.0);
    w.set(0, 3, w.get(0, 3) + 0.2);
    let (top, theta) = sym_top_eigenvector(&w.symmetrized(), EigenOptions::default())?;
    println!(
        "theta = {theta:.6}, |<top, v>| = {:.9}",
        top.dot(v.as_slice()).abs()
    );
    println!(
        "estimate: {:?}",
        extract_estimate(&w, EigenOptions::default())?.as_slice()
    );
    println!("alpha(v, W) = {:.6}", alignment(v.as_slice(), &w)?);

    let mut stream = ObservationStream::new(StreamConfig::new(
        4,
        3,
        1.0,
        NoiseModel::Gaussian { sigma: 1.0 },
        9,
    ))?;
    let t = stream.next_observation();
    let mut buf = Vec::new();
    write_tensor(&mut buf, &t)?;
    let back = read_tensor(buf.as_slice())?;
    println!(
        "{} bytes, round trip exact: {}",
        buf.len(),
        back.as_slice() == t.as_slice()
    );
    Ok(())
}
