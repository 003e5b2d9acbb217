//! Flat indexing, rank-one tensors and the matrix contraction behind the
//! NSGA reward.

use spiked_tensor::tensor::{
    contract_matrix_power, flat_index, mode1_contract, partial_trace_vector, rank_one_tensor,
    reward_gradient, tensor_inner, unflatten_index, SquareMatrix, UnitVector,
};

fn main() -> spiked_tensor::Result<()> {
    let d = 3;
    for idx in [[1, 1, 1, 1], [1, 2, 3, 1], [3, 3, 3, 3]] {
        let p = flat_index(&idx, d)?;
        println!("{idx:?} -> {p} -> {:?}", unflatten_index(p, d, 4)?);
    }

    let v = UnitVector::normalize(vec![1.0, 2.0, 2.0])?;
    let u = UnitVector::normalize(vec![0.0, 1.0, 1.0])?;
    let tv = rank_one_tensor(v.as_slice(), 4)?;
    let tu = rank_one_tensor(u.as_slice(), 4)?;
    println!(
        "<u^4, v^4> = {:.6}, <u,v>^4 = {:.6}",
        tensor_inner(&tu, &tv)?,
        u.dot(v.as_slice()).powi(4)
    );

    let mut w = SquareMatrix::identity(d);
    w.set(0, 1, 0.5);
    let q = w.quad_form(v.as_slice());
    println!(
        "<W (x) W, v^4> = {:.6}, (v'Wv)^2 = {:.6}",
        contract_matrix_power(&tv, &w)?,
        q * q
    );

    let g = reward_gradient(&tv, &w)?;
    println!("gradient row 0: {:?}", &g.as_slice()[..d]);

    let t5 = rank_one_tensor(v.as_slice(), 5)?;
    let slice = mode1_contract(&t5, u.as_slice())?;
    println!(
        "T(u) has order {}, norm {:.6}",
        slice.order(),
        slice.frobenius_norm()
    );
    println!("partial trace of v^5: {:?}", partial_trace_vector(&t5)?);
    Ok(())
}
