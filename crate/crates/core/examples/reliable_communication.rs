//! Random i.i.d. codebooks with distortion-typicality decoding over BSC(0.05) viewed as a
//! source-communicating black box; the error falls with blocklength.

use seplab::channels::{CompoundChannel, Dmc};
use seplab::coding::{simulate_decay, SimulationConfig, SimulationMode};
use seplab::distortion::DistortionSpec;
use seplab::probability::rational::ratio;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let cfg = SimulationConfig {
        p_x: Distribution::rational(&[(1, 2), (1, 2)])?,
        eps: 0.1,
        spec: DistortionSpec::hamming(2),
        d: 0.07,
        rate: 0.4,
        n: 32,
        trials: 500,
        batch_size: 25,
        seed: 7,
        mode: SimulationMode::Auto,
    };
    let channel = CompoundChannel::single(Dmc::bsc(ratio(1, 20))?.into_kernel());
    let r = simulate_decay(&channel, &cfg, &[32, 64, 128, 256, 512])?;
    for p in &r.profiles {
        let k = &p.per_kernel[0];
        println!("n = {:>3}  2^{:<3} words  error {:.3} +- {:.3}  ({:?})", p.n, p.log2_codebook_size, k.error.estimate, k.error.sigma, p.mode);
    }
    println!("monotone: {}", r.monotone);
    Ok(())
}
