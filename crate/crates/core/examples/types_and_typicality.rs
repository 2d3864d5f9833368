//! Types, type classes, the uniform-on-a-type-class source and typicality.

use seplab::probability::Alphabet;
use seplab::rng::stream;
use seplab::types::{achievable_types, is_epsilon_typical, type_class, type_of, UniformSourceSpec};
use seplab::Distribution;

fn main() -> seplab::Result<()> {
    let x = [0, 1, 1, 0, 1, 1];
    println!("type of {x:?}: {}", type_of(&x, &Alphabet::binary())?);

    let q = Distribution::rational(&[(1, 3), (2, 3)])?;
    let class = type_class(6, &q)?;
    println!("|T(1/3, 2/3)| at n = 6: {}", class.cardinality());
    println!("canonical member: {:?}", class.canonical());

    let src = UniformSourceSpec::new(q.clone())?;
    println!("admissible n' up to 12: {:?}", src.admissible_up_to(12));
    let mut rng = stream(1, &[]);
    let u = src.support(9)?.sample(&mut rng);
    println!("a draw from the uniform source at n' = 9: {u:?}");

    println!("achievable types at n = 4: {}", achievable_types(4, &Alphabet::binary()).len());
    for eps in [0.1, 0.2, 0.25] {
        println!("[0,0,0,1] typical for (1/2,1/2) at eps {eps}: {}", is_epsilon_typical(&[0, 0, 0, 1], &Distribution::rational(&[(1, 2), (1, 2)])?, eps)?);
    }
    Ok(())
}
