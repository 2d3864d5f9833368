//! Exact excess-distortion probabilities on both sides of the covering-packing duality.

use seplab::covering::{compute_a, duality_sweep, excess_prob_channel_side, excess_prob_source_side, mc_packing_covering};
use seplab::distortion::DistortionSpec;
use seplab::probability::rational::ratio;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let p = Distribution::rational(&[(1, 2), (1, 2)])?;
    let cert = DistortionSpec::hamming(2).certify(4)?;
    let d = ratio(1, 4);
    println!("n' = 4, q = p: channel side {}, source side {}", excess_prob_channel_side(4, &p, &p, &cert, &d)?, excess_prob_source_side(4, &p, &p, &cert, &d)?);

    let a = compute_a(4, &p, &cert, &d)?;
    println!("A = {} at q = {:?}", a.a, a.minimizer);
    for t in &a.per_type {
        println!("    q = {:?}: {}", t.q, t.value);
    }

    let third = Distribution::rational(&[(1, 3), (2, 3)])?;
    let sweep = duality_sweep(&third, &DistortionSpec::sorted_sequence(2), 9, 5, 1)?;
    println!("sorted-sequence sweep over n' = {:?}: {} cases, all equal {}", sweep.blocklengths, sweep.cases.len(), sweep.all_equal);

    let mc = mc_packing_covering(8, &p, &p, &DistortionSpec::hamming(2).certify(8)?, &d, 0.5, 10_000, 3)?;
    println!(
        "n' = 8, M = {}: correct-decoding event {:.4} vs {:.4}, covering failure {:.4} vs {:.4}",
        mc.codebook_size, mc.channel_event.estimate, mc.channel_exact, mc.source_event.estimate, mc.source_exact
    );
    Ok(())
}
