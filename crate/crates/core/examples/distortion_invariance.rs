//! Block distortions and permutation-invariance certificates.

use seplab::distortion::{check_permutation_invariance, CheckMode, DistortionSpec};

fn main() -> seplab::Result<()> {
    let x = [0, 0, 1, 1];
    let y = [1, 0, 1, 0];
    for spec in [DistortionSpec::hamming(2), DistortionSpec::sorted_sequence(2), DistortionSpec::position_weighted(2)] {
        let d = spec.block_distortion(&x, &y)?;
        let r = check_permutation_invariance(&spec, 4, CheckMode::Exhaustive)?;
        println!("{:<20} d(x, y) = {:<4} invariant at n = 4: {}", spec.name(), d.to_string(), r.invariant);
        if let Some(w) = r.witness {
            println!("    counterexample: {w:?}");
        }
    }
    let cert = DistortionSpec::sorted_sequence(2).certify(10)?;
    println!("sorted_sequence certificate at n = 10: {:?}", cert.certificate());
    Ok(())
}
