//! A_n' and the packing/covering functionals along blocklengths.

use seplab::covering::threshold_trace;
use seplab::distortion::DistortionSpec;
use seplab::probability::rational::ratio;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let p = Distribution::rational(&[(1, 2), (1, 2)])?;
    for rate in [0.1, 0.25] {
        let t = threshold_trace(&p, &DistortionSpec::hamming(2), &ratio(1, 4), rate, &[4, 8, 12, 16])?;
        println!("R = {rate}");
        for r in &t.rows {
            println!("  n' = {:>2}  A = {:<12} channel {:.6}  source {:.6}", r.n, r.a.to_string(), r.channel_functional, r.source_functional);
        }
    }
    Ok(())
}
