//! R(D) for a uniform binary source under Hamming distortion, next to 1 - h(D).

use seplab::distortion::DistortionSpec;
use seplab::probability::binary_entropy;
use seplab::rate_distortion::rd_curve;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let p = Distribution::rational(&[(1, 2), (1, 2)])?;
    let grid: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    println!("{:>6} {:>10} {:>10} {:>8}", "D", "R(D)", "1-h(D)", "iters");
    for r in rd_curve(&p, &DistortionSpec::hamming(2), &grid)? {
        println!("{:>6.2} {:>10.6} {:>10.6} {:>8}", r.d, r.rate, 1.0 - binary_entropy(r.d), r.iterations);
    }

    // a skewed ternary source with a non-Hamming matrix
    let q = Distribution::rational(&[(1, 2), (1, 4), (1, 4)])?;
    let spec = seplab::distortion::DistortionConfig::Matrix {
        matrix: serde_json::from_str("[[0, 1, 2], [1, 0, 1], [2, 1, 0]]").unwrap(),
    }
    .build(3)?;
    let r = seplab::rate_distortion::blahut_arimoto(&q, &spec, 0.3)?;
    println!("\nternary, D = 0.3: R = {:.6} bits, output law {:?}", r.rate, r.output);
    Ok(())
}
