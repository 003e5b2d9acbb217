//! Finite-difference checks of the matrix and vector reward gradients and of
//! the first-order alignment term.

use spiked_tensor::diagnostics::{alpha_taylor_check, gradient_suite, CheckReport};

fn main() -> spiked_tensor::Result<()> {
    println!("{}", CheckReport::table_header());
    for (d, k) in [(3, 4), (4, 3), (3, 6)] {
        for r in gradient_suite(d, k, 10, 1)? {
            println!("{}", r.table_row());
        }
    }
    println!("{}", alpha_taylor_check(5, 50, 2)?.table_row());
    Ok(())
}
