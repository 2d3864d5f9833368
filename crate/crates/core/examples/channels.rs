//! Block channels: a DMC, the half-lying channel and an encoder/channel/decoder composition.

use std::sync::Arc;

use seplab::channels::{compose, exact_matrix, half_lying_channel, identity_scheme_distortion, Dmc, Majority, Repetition};
use seplab::distortion::DistortionSpec;
use seplab::probability::rational::ratio;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let bsc = Dmc::bsc(ratio(1, 10))?.into_kernel();
    let coded = compose(Arc::new(Repetition { alphabet: 2, times: 3 }), bsc, Arc::new(Majority { alphabet: 2, times: 3 }))?;
    let law = exact_matrix(coded.as_ref(), 1)?;
    println!("repetition-3 over BSC(1/10) with majority decoding: flip probability {}", law[0][&vec![1]]);

    let uniform = Distribution::rational(&[(1, 2), (1, 2)])?;
    let e = identity_scheme_distortion(half_lying_channel().as_ref(), &uniform, &DistortionSpec::hamming(2), 20, 100_000, 9)?;
    println!("half-lying channel, uncoded: expected distortion {:.4} +- {:.4}", e.mean, e.sigma);
    Ok(())
}
