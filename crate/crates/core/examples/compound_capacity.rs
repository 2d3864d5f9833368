//! Capacity of compound binary symmetric channels.

use seplab::capacity::compound_capacity;
use seplab::probability::StochasticMatrix;

fn main() -> seplab::Result<()> {
    let sets = [vec![(1, 10)], vec![(1, 10), (1, 5)], vec![(1, 10), (9, 10)]];
    for set in sets {
        let kernels: Vec<StochasticMatrix> = set.iter().map(|&(a, b)| StochasticMatrix::bsc_ratio(a, b)).collect();
        let r = compound_capacity(&kernels)?;
        println!("{set:?}: C = {:.6} at Q = {:?}, worst kernel {}", r.capacity, r.q_star, r.worst_kernel);
    }
    // a Z channel next to a BSC; the optimal input is no longer uniform
    let z = StochasticMatrix::from_f64_rows(vec![vec![1.0, 0.0], vec![0.3, 0.7]])?;
    let r = compound_capacity(&[z, StochasticMatrix::bsc_ratio(1, 20)])?;
    println!("Z(0.3) and BSC(0.05): C = {:.6} at Q = {:?}", r.capacity, r.q_star);
    Ok(())
}
