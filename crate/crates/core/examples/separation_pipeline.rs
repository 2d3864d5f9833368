//! Source covering code followed by a channel code, end to end over a compound channel.

use seplab::channels::{CompoundChannel, Dmc};
use seplab::coding::{separation_pipeline, ChannelCode, PipelineConfig, SourceCode};
use seplab::distortion::DistortionSpec;
use seplab::probability::rational::ratio;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let p = Distribution::rational(&[(1, 2), (1, 2)])?;
    let channels = CompoundChannel::new(vec![Dmc::bsc(ratio(0, 1))?.into_kernel(), Dmc::bsc(ratio(1, 2))?.into_kernel()])?;
    for n in [16, 32, 64] {
        let cfg = PipelineConfig {
            p_x: p.clone(),
            spec: DistortionSpec::hamming(2),
            d: 0.25,
            source: SourceCode::Covering { rate: 0.5, law: p.clone() },
            channel: ChannelCode::IdentityBits,
            n,
            trials: 500,
            batch_size: 50,
            seed: 11,
            explicit_limit: None,
        };
        let r = separation_pipeline(&channels, &cfg)?;
        for k in &r.per_kernel {
            println!("n = {n:>2} {:<10} excess {:.3}  covering failures {:.3}", k.name, k.excess.estimate, k.covering_failures.estimate);
        }
    }
    Ok(())
}
