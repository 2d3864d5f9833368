//! Two users over an interfering medium: unicast simulation, layered replacement and separation.

use seplab::distortion::DistortionSpec;
use seplab::multiuser::{
    check_commutation, end_to_end_separation, layered_replacement, simulate_unicast, ExactSystem, MediumKernel, ModemStack, PairDemand,
    UnicastDemandSet,
};
use seplab::probability::rational::ratio;
use seplab::probability::StochasticMatrix;
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let uniform = Distribution::rational(&[(1, 2), (1, 2)])?;
    let pair = |from, to, d| PairDemand { from, to, p_x: uniform.clone(), spec: DistortionSpec::hamming(2), d };
    let demands = UnicastDemandSet::new(2, vec![pair(0, 1, 0.15), pair(1, 0, 0.15)])?;
    let interfering = MediumKernel::interfering(ratio(1, 10))?;
    let links = MediumKernel::independent_links(&[1, 0], &[StochasticMatrix::bsc_ratio(1, 10), StochasticMatrix::bsc_ratio(1, 10)])?;

    let p = simulate_unicast(&[links.clone(), interfering.clone()], &demands, &ModemStack::identity(2, 1), 64, 2000, 100)?;
    for m in &p.per_medium {
        let e: Vec<String> = m.per_pair.iter().map(|e| format!("{:.3}", e.excess.estimate)).collect();
        println!("{:<18} identity modems, excess per pair {e:?}", m.name);
    }

    let sys = ExactSystem::new(interfering, demands.clone(), 2)?;
    let skewed = Distribution::rational(&[(3, 4), (1, 4)])?;
    for law in [&uniform, &skewed] {
        let (_, r) = layered_replacement(&sys, 0, 0.5, law, 1)?;
        println!("replace pair (0,1) with law {law}: other pair TV {} ({}), sender input TV {}", r.other_pairs_tv_exact, r.mode, r.input_tv_exact);
    }
    println!("replacement orders commute: {}", check_commutation(&sys, 0.5, &[uniform.clone(), uniform.clone()], 1)?.commutes);

    let noiseless = MediumKernel::independent_links(&[1, 0], &[StochasticMatrix::identity(2), StochasticMatrix::identity(2)])?;
    let demands = UnicastDemandSet::new(2, vec![pair(0, 1, 0.3), pair(1, 0, 0.3)])?;
    let p = end_to_end_separation(&[noiseless], &demands, &[0.25, 0.25], &[uniform.clone(), uniform.clone()], 64, 300, 2)?;
    println!("separation at rate 0.25 per pair: worst excess per pair {:?}", p.worst_per_pair);
    Ok(())
}
