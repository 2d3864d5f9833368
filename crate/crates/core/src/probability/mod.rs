//! Probability primitives: pmfs over finite alphabets in exact-rational or float mode,
//! single-letter kernels, and the information measures built on them. All logarithms
//! are base 2.

mod distribution;
mod exact_bits;
mod joint;
mod kernel;
mod measures;
pub mod rational;

pub use distribution::{Alphabet, Distribution, Masses, Mode, FLOAT_MASS_TOL};
pub use exact_bits::ExactBits;
pub use joint::JointDistribution;
pub use kernel::{MatrixSpec, StochasticMatrix};
pub use measures::{
    binary_entropy, entropy, entropy_of, information_density, joint_kl, joint_kl_exact,
    joint_mutual_information, kl_divergence, kl_divergence_exact, kl_exact_of, kl_of,
    mutual_information, mutual_information_of,
};
pub use rational::Rational;

use rand::Rng;

/// A random exact pmf of length `k` whose masses are multiples of `1/den`-ish weights.
///
/// Masses are drawn as integer weights in `1..=den` (zero with probability `zero_prob`)
/// and normalized, so every mass is an exact rational.
pub fn random_rational_pmf<R: Rng + ?Sized>(rng: &mut R, k: usize, den: i64, zero_prob: f64) -> Distribution {
    loop {
        let w: Vec<i64> = (0..k)
            .map(|_| if rng.random::<f64>() < zero_prob { 0 } else { rng.random_range(1..=den) })
            .collect();
        let total: i64 = w.iter().sum();
        if total == 0 {
            continue;
        }
        let masses = w.iter().map(|&x| rational::ratio(x, total)).collect();
        return Distribution::exact(Alphabet::indexed(k), masses).expect("normalized weights");
    }
}

/// A random exact joint pmf on `rows x cols`.
pub fn random_rational_joint<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    den: i64,
    zero_prob: f64,
) -> JointDistribution {
    let flat = random_rational_pmf(rng, rows * cols, den, zero_prob);
    JointDistribution::exact(
        Alphabet::indexed(rows),
        Alphabet::indexed(cols),
        flat.exact_masses().unwrap().to_vec(),
    )
    .expect("valid joint")
}

/// A random float stochastic matrix.
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> StochasticMatrix {
    let rows = (0..inputs)
        .map(|_| {
            let w: Vec<f64> = (0..outputs).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StochasticMatrix::from_f64_rows(rows).expect("normalized rows")
}
