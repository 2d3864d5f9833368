//! Method of types: empirical types, type classes, achievable types and permutations.

use num::bigint::BigUint;
use num::integer::Integer;
use num::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::rational::{binomial, multinomial, ratio, Rational};
use crate::probability::{Alphabet, Distribution};

/// Type classes larger than this may be sampled but not enumerated.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

pub fn type_counts(seq: &[usize], k: usize) -> Result<Vec<u64>> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0u64; k];
    for &s in seq {
        if s >= k {
            return Err(Error::SymbolOutOfRange { symbol: s, size: k });
        }
        counts[s] += 1;
    }
    Ok(counts)
}

/// Empirical type of a sequence as an exact pmf.
pub fn type_of(seq: &[usize], alphabet: &Alphabet) -> Result<Distribution> {
    let counts = type_counts(seq, alphabet.len())?;
    let n = seq.len() as i64;
    Distribution::exact(alphabet.clone(), counts.iter().map(|&c| ratio(c as i64, n)).collect())
}

/// Least `n0` with `n0 * p(x)` integral for every letter.
pub fn base_blocklength(p: &Distribution) -> Result<u64> {
    let masses = p.require_exact()?;
    let mut l = num::BigInt::one();
    for m in masses {
        l = l.lcm(m.denom());
    }
    l.to_u64().ok_or_else(|| Error::Infeasible("base blocklength overflows u64".into()))
}

/// Letter counts `n * q(y)` if all are integral.
pub fn counts_at(n: usize, q: &Distribution) -> Result<Vec<u64>> {
    let masses = q.require_exact()?;
    let nr = Rational::from_integer(n.into());
    masses
        .iter()
        .map(|m| {
            let c = m * &nr;
            if c.is_integer() {
                Ok(c.to_integer().to_u64().unwrap())
            } else {
                Err(Error::UnachievableType { n, q: q.to_string() })
            }
        })
        .collect()
}

/// The set of length-`n` sequences with type exactly `q`.
#[derive(Clone, Debug)]
pub struct TypeClass {
    n: usize,
    q: Distribution,
    counts: Vec<u64>,
    cardinality: BigUint,
}

pub fn type_class(n: usize, q: &Distribution) -> Result<TypeClass> {
    if n == 0 {
        return Err(Error::UnsupportedBlocklength(0));
    }
    let counts = counts_at(n, q)?;
    let cardinality = multinomial(&counts);
    Ok(TypeClass { n, q: q.clone(), counts, cardinality })
}

impl TypeClass {
    pub fn from_counts(alphabet: &Alphabet, counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::UnsupportedBlocklength(0));
        }
        let q = Distribution::exact(alphabet.clone(), counts.iter().map(|&c| ratio(c as i64, n as i64)).collect())?;
        type_class(n as usize, &q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &Distribution {
        &self.q
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn cardinality(&self) -> &BigUint {
        &self.cardinality
    }

    /// Lexicographically smallest member.
    pub fn canonical(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c as usize)).collect()
    }

    pub fn contains(&self, seq: &[usize]) -> bool {
        seq.len() == self.n && type_counts(seq, self.counts.len()).map(|c| c == self.counts).unwrap_or(false)
    }

    pub fn enumerable(&self, budget: u64) -> bool {
        self.cardinality <= BigUint::from(budget)
    }

    /// All members in lexicographic order.
    pub fn members(&self) -> Result<Vec<Vec<usize>>> {
        self.members_within(DEFAULT_ENUMERATION_BUDGET)
    }

    pub fn members_within(&self, budget: u64) -> Result<Vec<Vec<usize>>> {
        if !self.enumerable(budget) {
            return Err(Error::BudgetExceeded { size: self.cardinality.to_string(), budget });
        }
        let mut cur = self.canonical();
        let mut out = Vec::with_capacity(self.cardinality.to_usize().unwrap_or(0));
        loop {
            out.push(cur.clone());
            if !next_permutation(&mut cur) {
                break;
            }
        }
        Ok(out)
    }

    /// A uniformly random member: a shuffle of the canonical composition.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut v = self.canonical();
        v.shuffle(rng);
        v
    }
}

/// Advances to the next lexicographic arrangement of a multiset; false when wrapped.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All achievable letter-count vectors at blocklength `n`, lexicographically increasing.
pub fn achievable_counts(n: usize, k: usize) -> Vec<Vec<u64>> {
    fn rec(rem: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=rem {
            prefix.push(c);
            rec(rem - c, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n as u64, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// The set of all types at blocklength `n` over `alphabet`, lexicographically ordered.
pub fn achievable_types(n: usize, alphabet: &Alphabet) -> Vec<Distribution> {
    achievable_counts(n, alphabet.len())
        .into_iter()
        .map(|c| {
            Distribution::exact(alphabet.clone(), c.iter().map(|&x| ratio(x as i64, n as i64)).collect())
                .expect("counts sum to n")
        })
        .collect()
}

/// Number of types: C(n + k - 1, k - 1).
pub fn type_count(n: usize, k: usize) -> BigUint {
    if k == 0 {
        return BigUint::zero();
    }
    binomial((n + k - 1) as u64, (k - 1) as u64)
}

/// Letterwise L-infinity typicality: `|type(x) - p(x)| <= eps` for every letter.
pub fn is_epsilon_typical(seq: &[usize], p: &Distribution, eps: f64) -> Result<bool> {
    let counts = type_counts(seq, p.len())?;
    let ranges = typical_count_ranges(seq.len(), p, eps)?;
    Ok(counts_in_ranges(&counts, &ranges))
}

/// For each letter, the inclusive range of counts `c` with `|c/n - p| <= eps`.
/// Rational pmfs are compared exactly (with `eps` read as its exact binary value).
pub fn typical_count_ranges(n: usize, p: &Distribution, eps: f64) -> Result<Vec<(u64, u64)>> {
    if eps < 0.0 || eps.is_nan() {
        return Err(Error::Negative(format!("epsilon {eps}")));
    }
    let ok: Box<dyn Fn(usize, u64) -> bool> = match p.exact_masses() {
        Some(masses) => {
            let e = Rational::from_float(eps).unwrap_or_else(|| Rational::from_integer(u32::MAX.into()));
            let nn = Rational::from_integer(n.into());
            let masses = masses.to_vec();
            Box::new(move |a, c| {
                let d = Rational::from_integer(c.into()) / &nn - &masses[a];
                num::Signed::abs(&d) <= e
            })
        }
        None => {
            let probs = p.probs().to_vec();
            Box::new(move |a, c| (c as f64 / n as f64 - probs[a]).abs() <= eps)
        }
    };
    Ok((0..p.len())
        .map(|a| {
            let good: Vec<u64> = (0..=n as u64).filter(|&c| ok(a, c)).collect();
            match (good.first(), good.last()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => (1, 0),
            }
        })
        .collect())
}

pub fn counts_in_ranges(counts: &[u64], ranges: &[(u64, u64)]) -> bool {
    counts.iter().zip(ranges).all(|(&c, &(lo, hi))| lo <= c && c <= hi)
}

/// Uniform distribution on the single type class with type exactly `p_X`.
#[derive(Clone, Debug)]
pub struct UniformSourceSpec {
    p_x: Distribution,
    n0: u64,
}

impl UniformSourceSpec {
    pub fn new(p_x: Distribution) -> Result<Self> {
        let n0 = base_blocklength(&p_x)?;
        Ok(UniformSourceSpec { p_x, n0 })
    }

    pub fn p_x(&self) -> &Distribution {
        &self.p_x
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn is_admissible(&self, n_prime: usize) -> bool {
        n_prime > 0 && (n_prime as u64).is_multiple_of(self.n0)
    }

    /// Admissible blocklengths `n0 * k` not exceeding `max`.
    pub fn admissible_up_to(&self, max: usize) -> Vec<usize> {
        (1..).map(|k| k * self.n0 as usize).take_while(|&n| n <= max).collect()
    }

    pub fn support(&self, n_prime: usize) -> Result<TypeClass> {
        if !self.is_admissible(n_prime) {
            return Err(Error::UnachievableType { n: n_prime, q: self.p_x.to_string() });
        }
        type_class(n_prime, &self.p_x)
    }
}

/// A rearrangement of positions: `apply(s)[i] = s[image[i]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &i in &image {
            if i >= image.len() || seen[i] {
                return Err(Error::InvalidDistribution(format!("not a permutation: {image:?}")));
            }
            seen[i] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (0..n).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Permutation { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply<T: Clone>(&self, seq: &[T]) -> Vec<T> {
        assert_eq!(seq.len(), self.image.len(), "permutation length mismatch");
        self.image.iter().map(|&i| seq[i].clone()).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { image: inv }
    }

    /// All `n!` permutations in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut cur: Vec<usize> = (0..n).collect();
        let mut out = vec![Permutation { image: cur.clone() }];
        while next_permutation(&mut cur) {
            out.push(Permutation { image: cur.clone() });
        }
        out
    }
}

/// All sequences of length `n` over `k` symbols, lexicographically.
pub fn all_sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total).map(|idx| index_to_sequence(idx, n, k)).collect()
}

/// Mixed-radix decoding with the first position most significant.
pub fn index_to_sequence(mut idx: usize, n: usize, k: usize) -> Vec<usize> {
    let mut v = vec![0; n];
    for slot in v.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    v
}

pub fn sequence_to_index(seq: &[usize], k: usize) -> usize {
    seq.iter().fold(0, |acc, &s| acc * k + s)
}

/// Serialized reference to a type class: `{"n": 4, "q": <Distribution>}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypeClassRef {
    pub n: usize,
    pub q: Distribution,
}

impl TypeClassRef {
    pub fn resolve(&self) -> Result<TypeClass> {
        type_class(self.n, &self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn d(pairs: &[(i64, i64)]) -> Distribution {
        Distribution::rational(pairs).unwrap()
    }

    #[test]
    fn type_of_examples() {
        assert_eq!(type_of(&[0, 1, 1, 0], &Alphabet::binary()).unwrap(), d(&[(1, 2), (1, 2)]));
        let abc = Alphabet::new(["a", "b", "c"]);
        let t = type_of(&[0, 0, 1], &abc).unwrap();
        assert_eq!(t.exact_masses().unwrap(), &[ratio(2, 3), ratio(1, 3), ratio(0, 1)]);
        assert_eq!(type_of(&[], &abc), Err(Error::EmptySequence));
        assert!(matches!(type_of(&[3], &abc), Err(Error::SymbolOutOfRange { .. })));
    }

    #[test]
    fn base_blocklength_examples() {
        assert_eq!(base_blocklength(&d(&[(1, 2), (1, 2)])).unwrap(), 2);
        assert_eq!(base_blocklength(&d(&[(1, 3), (2, 3)])).unwrap(), 3);
        assert_eq!(base_blocklength(&d(&[(3, 10), (7, 10)])).unwrap(), 10);
        let f = Distribution::from_f64(&[0.5, 0.5]).unwrap();
        assert_eq!(base_blocklength(&f), Err(Error::RequiresExact));
    }

    #[test]
    fn type_class_examples() {
        assert_eq!(type_class(4, &d(&[(1, 2), (1, 2)])).unwrap().cardinality(), &BigUint::from(6u32));
        let tc = type_class(3, &d(&[(1, 3), (2, 3)])).unwrap();
        assert_eq!(tc.cardinality(), &BigUint::from(3u32));
        assert_eq!(tc.members().unwrap(), vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
        assert!(matches!(type_class(2, &d(&[(1, 3), (2, 3)])), Err(Error::UnachievableType { .. })));
    }

    #[test]
    fn enumeration_budget() {
        let tc = type_class(30, &d(&[(1, 2), (1, 2)])).unwrap();
        assert!(!tc.enumerable(DEFAULT_ENUMERATION_BUDGET));
        assert!(matches!(tc.members(), Err(Error::BudgetExceeded { .. })));
        let s = tc.sample(&mut stream(1, &[]));
        assert!(tc.contains(&s));
    }

    #[test]
    fn achievable_types_examples() {
        let t = achievable_types(2, &Alphabet::binary());
        assert_eq!(t, vec![d(&[(0, 1), (1, 1)]), d(&[(1, 2), (1, 2)]), d(&[(1, 1), (0, 1)])]);
        let t1 = achievable_types(1, &Alphabet::indexed(3));
        assert_eq!(t1.len(), 3);
        assert!(t1.iter().all(|q| q.exact_masses().unwrap().iter().filter(|m| m.is_one()).count() == 1));
        assert_eq!(achievable_types(4, &Alphabet::binary()).len(), 5);
        for n in 1..7 {
            for k in 1..4 {
                assert_eq!(BigUint::from(achievable_types(n, &Alphabet::indexed(k)).len()), type_count(n, k));
            }
        }
    }

    #[test]
    fn cardinalities_partition_the_space() {
        for (n, k) in [(5usize, 2usize), (4, 3), (6, 3), (3, 4)] {
            let a = Alphabet::indexed(k);
            let total: BigUint =
                achievable_types(n, &a).iter().map(|q| type_class(n, q).unwrap().cardinality().clone()).sum();
            assert_eq!(total, BigUint::from(k).pow(n as u32));
        }
    }

    #[test]
    fn joint_type_count_bound() {
        // binary x binary joint types vs (n+1)^4
        for n in 1..=8usize {
            let exact = achievable_counts(n, 4).len() as u64;
            assert_eq!(BigUint::from(exact), type_count(n, 4));
            assert!(exact <= (n as u64 + 1).pow(4));
        }
    }

    #[test]
    fn typicality_examples() {
        let p = d(&[(1, 2), (1, 2)]);
        assert!(is_epsilon_typical(&[0, 1, 1, 0], &p, 0.0).unwrap());
        assert!(!is_epsilon_typical(&[0, 0, 0, 0], &p, 0.1).unwrap());
        assert!(is_epsilon_typical(&[0, 0, 0, 1], &p, 0.25).unwrap());
        assert!(is_epsilon_typical(&[0, 0, 0, 1], &p, -0.1).is_err());
    }

    #[test]
    fn sample_small_classes() {
        let mut rng = stream(3, &[0]);
        let single = type_class(3, &d(&[(1, 1), (0, 1)])).unwrap();
        for _ in 0..10 {
            assert_eq!(single.sample(&mut rng), vec![0, 0, 0]);
        }
        let two = type_class(2, &d(&[(1, 2), (1, 2)])).unwrap();
        let n = 10_000;
        let ones_first = (0..n).filter(|_| two.sample(&mut rng)[0] == 1).count() as f64 / n as f64;
        assert!((ones_first - 0.5).abs() < 5.0 * (0.25f64 / n as f64).sqrt());
    }

    #[test]
    fn sample_is_uniform_over_members() {
        // Oracle: exact uniform law 1/6 on the 6 members; 5 sigma binomial bands.
        let tc = type_class(4, &d(&[(1, 2), (1, 2)])).unwrap();
        let mut rng = stream(11, &[0]);
        let trials = 100_000;
        let mut hist: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..trials {
            *hist.entry(tc.sample(&mut rng)).or_default() += 1;
        }
        assert_eq!(hist.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for (seq, c) in hist {
            assert!(tc.contains(&seq));
            assert!((c as f64 / trials as f64 - p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn uniform_source_spec() {
        let u = UniformSourceSpec::new(d(&[(1, 3), (2, 3)])).unwrap();
        assert_eq!(u.n0(), 3);
        assert_eq!(u.admissible_up_to(12), vec![3, 6, 9, 12]);
        assert!(u.support(4).is_err());
        assert_eq!(u.support(6).unwrap().cardinality(), &BigUint::from(15u32));
    }

    #[test]
    fn permutations() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert_eq!(Permutation::all(3).len(), 6);
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.apply(&[10, 20, 30]), vec![30, 10, 20]);
        assert_eq!(p.inverse().apply(&p.apply(&[1, 2, 3])), vec![1, 2, 3]);
    }

    proptest! {
        #[test]
        fn permutation_preserves_type(seq in prop::collection::vec(0usize..3, 1..12), seed in any::<u64>()) {
            let a = Alphabet::indexed(3);
            let p = Permutation::random(seq.len(), &mut stream(seed, &[]));
            prop_assert_eq!(type_of(&seq, &a).unwrap(), type_of(&p.apply(&seq), &a).unwrap());
        }

        #[test]
        fn samples_have_exact_type(c0 in 0u64..6, c1 in 0u64..6, c2 in 1u64..6, seed in any::<u64>()) {
            let tc = TypeClass::from_counts(&Alphabet::indexed(3), &[c0, c1, c2]).unwrap();
            let s = tc.sample(&mut stream(seed, &[]));
            prop_assert_eq!(type_of(&s, &Alphabet::indexed(3)).unwrap(), tc.q().clone());
        }
    }
}
