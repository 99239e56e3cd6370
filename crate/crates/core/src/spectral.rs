//! Fourier-coefficient estimation from random examples, the sparse spectrum
//! estimator built on rectification, and the agnostic parity learner.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::boolfn::{BooleanFunction, FourierSpectrum};
use crate::error::{check_unit_open, check_width, Error, Result};
use crate::noise::NoiseChannel;
use crate::oracles::{random_examples, QfsSimulator, RandomExample};
use crate::rectify::{rectify, required_samples};

/// Smallest `k′` with `2m·exp(−k′ε²/2) ≤ δ`, i.e. `⌈(2/ε²)·ln(2m/δ)⌉`.
pub fn examples_needed(m: usize, eps: f64, delta: f64) -> Result<usize> {
    if m == 0 {
        return Err(Error::Argument("support size must be positive".into()));
    }
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let k = (2.0 / (eps * eps)) * (2.0 * m as f64 / delta).ln();
    Ok((k.ceil() as usize).max(1))
}

/// Empirical means `(1/k′) Σ (1 − 2f(x))·χ_s(x)` for every `s` in `set`.
pub fn estimate_coeffs(set: &[BitString], examples: &[RandomExample]) -> Result<BTreeMap<BitString, f64>> {
    let first = examples
        .first()
        .ok_or_else(|| Error::Argument("no random examples".into()))?;
    let n = first.x.len();
    for e in examples {
        check_width(n, e.x.len())?;
    }
    for s in set {
        check_width(n, s.len())?;
    }
    let total = examples.len() as f64;
    Ok(set
        .iter()
        .map(|s| {
            let sum: i64 = examples
                .iter()
                .map(|e| if s.dot(&e.x) { -e.g() } else { e.g() })
                .sum();
            (s.clone(), sum as f64 / total)
        })
        .collect())
}

/// Succinct estimate `g̃` of the spectrum; zero off `support`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseEstimate {
    pub entries: BTreeMap<BitString, f64>,
    pub eps: f64,
    pub support: Vec<BitString>,
    pub qfs_samples: usize,
    pub random_examples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub s: BitString,
    pub gtilde: f64,
}

impl SparseEstimate {
    pub fn get(&self, s: &BitString) -> f64 {
        self.entries.get(s).copied().unwrap_or(0.0)
    }

    /// `max_s |ĝ(s) − g̃(s)|` over all of `{0,1}ⁿ`.
    pub fn linf_error(&self, spec: &FourierSpectrum) -> f64 {
        let on_estimate = self
            .entries
            .iter()
            .map(|(s, g)| (spec.coeff(s) - g).abs())
            .fold(0.0, f64::max);
        let off_estimate = spec
            .iter()
            .filter(|(s, _)| !self.entries.contains_key(s))
            .map(|(_, c)| c.abs())
            .fold(0.0, f64::max);
        on_estimate.max(off_estimate)
    }

    pub fn records(&self) -> Vec<EstimateRecord> {
        self.entries
            .iter()
            .map(|(s, &gtilde)| EstimateRecord { s: s.clone(), gtilde })
            .collect()
    }

    pub fn argmax(&self, n: usize) -> BitString {
        argmax_lex(&self.entries, n)
    }
}

/// Argmax with lexicographically smallest tie-break; `0ⁿ` when `values` is empty.
pub fn argmax_lex(values: &BTreeMap<BitString, f64>, n: usize) -> BitString {
    let mut best: Option<(&BitString, f64)> = None;
    for (s, &v) in values {
        // BTreeMap iterates in lexicographic order, so strict `>` keeps the smallest.
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((s, v));
        }
    }
    best.map(|(s, _)| s.clone()).unwrap_or_else(|| BitString::zeros(n))
}

/// A target with oracle access to `f` and the exact spectrum the simulated
/// quantum device samples from.
#[derive(Clone, Debug)]
pub struct Target {
    pub f: BooleanFunction,
    pub spectrum: FourierSpectrum,
}

impl Target {
    pub fn new(f: BooleanFunction) -> Result<Self> {
        let spectrum = f.spectrum()?;
        Ok(Target { f, spectrum })
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }
}

/// Rectify `k = required_samples(n, ε², δ/2)` noisy samples with `θ = ε²`,
/// then estimate every coefficient on the resulting list from fresh random
/// examples with an `(ε, δ/2)` union bound.
pub fn sparse_estimate<R: Rng + ?Sized>(
    target: &Target,
    channel: NoiseChannel,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<SparseEstimate> {
    check_unit_open("eps", eps)?;
    check_unit_open("delta", delta)?;
    let theta = eps * eps;
    let limit = theta / 10.0;
    if channel.strength() > limit + 1e-12 {
        return Err(Error::Precondition(format!(
            "noise strength {} exceeds eps^2/10 = {limit}",
            channel.strength()
        )));
    }
    let n = target.n();
    let k = required_samples(n, theta, delta / 2.0)?;
    let sim = QfsSimulator::new(&target.spectrum, channel)?;
    let samples = sim.sample_batch(k, rng)?;
    let support = rectify(&samples, n, theta, rng)?;
    let k_prime = examples_needed(support.len().max(1), eps, delta / 2.0)?;
    let examples = random_examples(&target.f, k_prime, rng);
    let entries = estimate_coeffs(&support, &examples)?;
    Ok(SparseEstimate {
        entries,
        eps,
        support,
        qfs_samples: k,
        random_examples: k_prime,
    })
}

/// Returns `s₀ = argmax g̃` together with the estimate it came from.
pub fn learn_parity_with_estimate<R: Rng + ?Sized>(
    target: &Target,
    channel: NoiseChannel,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<(BitString, SparseEstimate)> {
    let est = sparse_estimate(target, channel, eps, delta, rng)?;
    Ok((est.argmax(target.n()), est))
}

pub fn learn_parity<R: Rng + ?Sized>(
    target: &Target,
    channel: NoiseChannel,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<BitString> {
    learn_parity_with_estimate(target, channel, eps, delta, rng).map(|(s, _)| s)
}

/// Excess loss of the parity `s₀` over the best parity: `(max_s ĝ(s) − ĝ(s₀))/2`.
pub fn regret(spec: &FourierSpectrum, s0: &BitString) -> f64 {
    ((spec.max_coeff() - spec.coeff(s0)) / 2.0).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{coeff_bruteforce, gen_ftau, TruthTable};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn and2_junta(n: usize, a: usize, b: usize) -> BooleanFunction {
        BooleanFunction::junta(n, vec![a, b], TruthTable::new(2, vec![false, false, false, true]).unwrap()).unwrap()
    }

    fn full_table(f: &BooleanFunction) -> Vec<RandomExample> {
        (0..1u64 << f.n())
            .map(|i| {
                let x = BitString::from_index(i, f.n());
                RandomExample { fx: f.eval(&x).unwrap(), x }
            })
            .collect()
    }

    #[test]
    fn examples_needed_values() {
        // 200·ln 640 = 1292.29…
        assert_eq!(examples_needed(32, 0.1, 0.1).unwrap(), 1293);
        let k = examples_needed(1, 1.0 - 1e-9, 1.0 - 1e-9).unwrap();
        assert!((1..=3).contains(&k));
        for m in [1usize, 3, 10, 50] {
            for eps in [0.05, 0.3, 0.7] {
                let a = examples_needed(m, eps, 0.1).unwrap();
                let b = examples_needed(2 * m, eps, 0.1).unwrap();
                let step = (2.0 / (eps * eps) * 2f64.ln()).ceil() as usize;
                assert!(b >= a && b - a <= step);
            }
        }
        assert!(examples_needed(0, 0.1, 0.1).is_err());
        assert!(examples_needed(3, 1.0, 0.1).is_err());
    }

    #[test]
    fn estimate_exact_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = bs("10110");
        let f = BooleanFunction::parity(&s);
        let ex = random_examples(&f, 300, &mut rng);
        assert_eq!(estimate_coeffs(std::slice::from_ref(&s), &ex).unwrap()[&s], 1.0);
        let zero = BooleanFunction::constant(5, false);
        let ex = random_examples(&zero, 300, &mut rng);
        let z = BitString::zeros(5);
        assert_eq!(estimate_coeffs(std::slice::from_ref(&z), &ex).unwrap()[&z], 1.0);
        assert!(estimate_coeffs(&[z], &[]).is_err());
    }

    #[test]
    fn full_table_reproduces_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let f = BooleanFunction::dense(TruthTable::random(7, &mut rng).unwrap());
            let set: Vec<BitString> = (0..128).map(|i| BitString::from_index(i, 7)).collect();
            let est = estimate_coeffs(&set, &full_table(&f)).unwrap();
            for s in &set {
                assert_eq!(est[s], coeff_bruteforce(&f, s).unwrap());
            }
        }
    }

    #[test]
    fn hoeffding_accuracy_for_and2() {
        let f = and2_junta(12, 3, 8);
        let mut s = BitString::zeros(12);
        s.set(3, true);
        s.set(8, true);
        let k = examples_needed(4, 0.05, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let good = (0..1000)
            .filter(|_| {
                let ex = random_examples(&f, k, &mut rng);
                (estimate_coeffs(&[s.clone()], &ex).unwrap()[&s] + 0.5).abs() <= 0.05
            })
            .count();
        assert!(good >= 970, "good {good}");
    }

    #[test]
    fn regret_examples() {
        let and2 = BooleanFunction::dense(TruthTable::new(2, vec![false, false, false, true]).unwrap());
        let spec = and2.spectrum().unwrap();
        assert_eq!(regret(&spec, &spec.argmax()), 0.0);
        assert_eq!(regret(&spec, &bs("11")), 0.5);
        let p = BooleanFunction::parity(&bs("0110")).spectrum().unwrap();
        assert_eq!(regret(&p, &bs("1111")), 0.5);
    }

    #[test]
    fn argmax_ties_and_empty() {
        let mut m = BTreeMap::new();
        assert_eq!(argmax_lex(&m, 3), bs("000"));
        m.insert(bs("110"), 0.5);
        m.insert(bs("011"), 0.5);
        m.insert(bs("001"), 0.2);
        assert_eq!(argmax_lex(&m, 3), bs("011"));
    }

    #[test]
    fn sparse_estimate_rejects_strong_noise() {
        let t = Target::new(and2_junta(8, 1, 2)).unwrap();
        let r = sparse_estimate(&t, NoiseChannel::bit_flip(0.05).unwrap(), 0.5, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_target_learns_zero() {
        let t = Target::new(BooleanFunction::constant(10, false)).unwrap();
        let s0 = learn_parity(&t, NoiseChannel::noiseless(), 0.5, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(s0, BitString::zeros(10));
        assert_eq!(t.spectrum.loss_exact(&s0).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_parity_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hits = 0;
        for _ in 0..200 {
            let s = BitString::random(10, &mut rng);
            let t = Target::new(BooleanFunction::parity(&s)).unwrap();
            let (s0, est) = learn_parity_with_estimate(&t, NoiseChannel::noiseless(), 0.5, 0.1, &mut rng).unwrap();
            assert!(est.support.len() <= 8);
            if s0 == s && est.get(&s) >= 0.5 && est.linf_error(&t.spectrum) <= 0.5 {
                hits += 1;
            }
        }
        assert!(hits >= 180, "hits {hits}");
    }

    #[test]
    fn support_is_capped_for_ftau_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let t = Target::new(gen_ftau(12, 3, 0.25, &mut rng).unwrap()).unwrap();
            let est = sparse_estimate(&t, NoiseChannel::bit_flip(0.02).unwrap(), 0.6, 0.1, &mut rng).unwrap();
            assert!(est.support.len() <= (2.0 / 0.36f64).floor() as usize);
            assert!(est.entries.values().all(|g| g.abs() <= 1.0 + 1e-9));
        }
    }

    proptest! {
        #[test]
        fn argmax_is_scale_invariant(
            vals in proptest::collection::btree_map(0u64..64, -4i32..=4, 0..20),
            scale in 0.01f64..100.0,
        ) {
            let base: BTreeMap<BitString, f64> = vals.iter().map(|(&k, &v)| (BitString::from_index(k, 6), v as f64 / 4.0)).collect();
            let scaled: BTreeMap<BitString, f64> = base.iter().map(|(k, v)| (k.clone(), v * scale)).collect();
            prop_assert_eq!(argmax_lex(&base, 6), argmax_lex(&scaled, 6));
        }

        #[test]
        fn estimates_lie_in_unit_interval(seed in any::<u64>(), count in 1usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = BooleanFunction::dense(TruthTable::random(6, &mut rng).unwrap());
            let set: Vec<BitString> = (0..8).map(|_| BitString::random(6, &mut rng)).collect();
            let est = estimate_coeffs(&set, &random_examples(&f, count, &mut rng)).unwrap();
            prop_assert!(est.values().all(|g| (-1.0..=1.0).contains(g)));
        }
    }
}
