//! The union-bound exponent for the decoding error of the random codebook.

use seplab::coding::{error_exponent_bound, ExponentQuery};
use seplab::distortion::DistortionSpec;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let p = Distribution::rational(&[(1, 2), (1, 2)])?;
    for d in [0.0, 0.1, 0.2, 0.3, 0.5] {
        let q = ExponentQuery { p_x: p.clone(), spec: DistortionSpec::hamming(2), d, eps: 0.1, rate: 0.1, n: 64 };
        let r = error_exponent_bound(&q)?;
        println!("D = {d:.1}: E = {:.6} bits, log2 bound at n = 64: {:.2}", r.exponent, r.log2_bound);
    }
    Ok(())
}
