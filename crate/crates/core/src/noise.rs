//! Noise acting on Fourier-sampling measurement outcomes.
//!
//! Three families are modelled at the outcome level:
//! independent bit flips, depolarizing noise through its effective flip rate,
//! and a correlated block-flip channel whose per-bit marginal is bounded.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Sparse probability distribution over bit strings.
pub type SparseDist = BTreeMap<BitString, f64>;

/// Widest dense table `analytic_noisy_dist` will produce.
pub const MAX_ANALYTIC_WIDTH: usize = 12;

const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BitFlipNoise {
    eta: f64,
}

impl BitFlipNoise {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::Argument(format!("bit-flip eta must lie in [0, 1/2), got {eta}")));
        }
        Ok(BitFlipNoise { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepolarizingNoise {
    eta_dep: f64,
    eta_eff: f64,
}

impl DepolarizingNoise {
    pub fn new(eta_dep: f64) -> Result<Self> {
        Ok(DepolarizingNoise {
            eta_dep,
            eta_eff: eta_eff(eta_dep)?,
        })
    }

    pub fn eta_dep(&self) -> f64 {
        self.eta_dep
    }

    pub fn eta_eff(&self) -> f64 {
        self.eta_eff
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelatedKind {
    /// Disjoint adjacent pairs `(1,2), (3,4), …` are flipped together with
    /// probability `eta` each; with odd width the last bit flips alone.
    BlockFlip,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatedNoise {
    kind: CorrelatedKind,
    eta: f64,
}

impl CorrelatedNoise {
    pub fn block_flip(eta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::Argument(format!("block-flip eta must lie in [0, 1/2), got {eta}")));
        }
        Ok(CorrelatedNoise {
            kind: CorrelatedKind::BlockFlip,
            eta,
        })
    }

    pub fn kind(&self) -> CorrelatedKind {
        self.kind
    }

    /// Certified upper bound on the flip probability of any single bit.
    pub fn eta_bound(&self) -> f64 {
        match self.kind {
            CorrelatedKind::BlockFlip => self.eta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseChannel {
    BitFlip(BitFlipNoise),
    Depolarizing(DepolarizingNoise),
    Correlated(CorrelatedNoise),
}

impl NoiseChannel {
    pub fn noiseless() -> Self {
        NoiseChannel::BitFlip(BitFlipNoise { eta: 0.0 })
    }

    pub fn bit_flip(eta: f64) -> Result<Self> {
        BitFlipNoise::new(eta).map(NoiseChannel::BitFlip)
    }

    pub fn depolarizing(eta_dep: f64) -> Result<Self> {
        DepolarizingNoise::new(eta_dep).map(NoiseChannel::Depolarizing)
    }

    pub fn block_flip(eta: f64) -> Result<Self> {
        CorrelatedNoise::block_flip(eta).map(NoiseChannel::Correlated)
    }

    /// Per-bit flip probability of the outcome-level channel (an upper bound
    /// for the correlated family).
    pub fn strength(&self) -> f64 {
        match self {
            NoiseChannel::BitFlip(c) => c.eta,
            NoiseChannel::Depolarizing(c) => c.eta_eff,
            NoiseChannel::Correlated(c) => c.eta_bound(),
        }
    }

    /// Applies the channel to one measured string. For depolarizing noise this
    /// is the effective independent flip at rate `eta_eff`; the mixture with
    /// the all-zero outcome is handled by the sampler.
    pub fn apply<R: Rng + ?Sized>(&self, s: &BitString, rng: &mut R) -> BitString {
        let mut out = s.clone();
        match self {
            NoiseChannel::BitFlip(c) => flip_independent(&mut out, c.eta, rng),
            NoiseChannel::Depolarizing(c) => flip_independent(&mut out, c.eta_eff, rng),
            NoiseChannel::Correlated(c) => match c.kind {
                CorrelatedKind::BlockFlip => {
                    let n = out.len();
                    let mut i = 0;
                    while i < n {
                        if c.eta > 0.0 && rng.gen::<f64>() < c.eta {
                            out.flip(i);
                            if i + 1 < n {
                                out.flip(i + 1);
                            }
                        }
                        i += 2;
                    }
                }
            },
        }
        out
    }

    pub fn spec(&self) -> NoiseSpec {
        match self {
            NoiseChannel::BitFlip(c) => NoiseSpec {
                model: NoiseModel::Bitflip,
                eta: c.eta,
            },
            NoiseChannel::Depolarizing(c) => NoiseSpec {
                model: NoiseModel::Depolarizing,
                eta: c.eta_dep,
            },
            NoiseChannel::Correlated(c) => NoiseSpec {
                model: NoiseModel::Blockflip,
                eta: c.eta,
            },
        }
    }
}

pub(crate) fn flip_independent<R: Rng + ?Sized>(s: &mut BitString, eta: f64, rng: &mut R) {
    if eta <= 0.0 {
        return;
    }
    for i in 0..s.len() {
        if rng.gen::<f64>() < eta {
            s.flip(i);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Bitflip,
    Depolarizing,
    Blockflip,
}

/// Config-file form: `{ model = "bitflip" | "depolarizing" | "blockflip", eta = … }`.
/// For the depolarizing model `eta` is the channel strength `eta_dep`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub eta: f64,
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseChannel> {
        match self.model {
            NoiseModel::Bitflip => NoiseChannel::bit_flip(self.eta),
            NoiseModel::Depolarizing => NoiseChannel::depolarizing(self.eta),
            NoiseModel::Blockflip => NoiseChannel::block_flip(self.eta),
        }
    }
}

/// Effective outcome flip rate of a depolarizing channel: `η_dep − η_dep²/2`.
pub fn eta_eff(eta_dep: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta_dep) {
        return Err(Error::Argument(format!("eta_dep must lie in [0, 1], got {eta_dep}")));
    }
    Ok(eta_dep - eta_dep * eta_dep / 2.0)
}

fn total_mass(dist: &SparseDist) -> f64 {
    dist.values().sum()
}

fn check_normalized(dist: &SparseDist) -> Result<()> {
    let mass = total_mass(dist);
    if (mass - 1.0).abs() <= MASS_TOL && dist.values().all(|&p| p >= 0.0) {
        Ok(())
    } else {
        Err(Error::Argument(format!("distribution is not normalized (mass {mass})")))
    }
}

/// `(1 − η_eff)·p₀ + η_eff·δ_{0ⁿ}`: the outcome law conditioned on a noisy
/// `y = 1` under depolarizing noise, before the bit flips.
pub fn p0_eff(p0: &SparseDist, n: usize, eta_eff: f64) -> Result<SparseDist> {
    check_normalized(p0)?;
    if !(0.0..=0.5).contains(&eta_eff) {
        return Err(Error::Argument(format!("eta_eff must lie in [0, 1/2], got {eta_eff}")));
    }
    let mut out: SparseDist = p0.iter().map(|(s, p)| (s.clone(), (1.0 - eta_eff) * p)).collect();
    if eta_eff > 0.0 {
        *out.entry(BitString::zeros(n)).or_insert(0.0) += eta_eff;
    }
    Ok(out)
}

/// Dense law `p_η(s) = Σ_{s'} η^{d(s,s')} (1−η)^{n−d(s,s')} p₀(s')`, indexed
/// by [`BitString::to_index`].
pub fn analytic_noisy_dist(p0: &SparseDist, eta: f64, n: usize) -> Result<Vec<f64>> {
    if n > MAX_ANALYTIC_WIDTH {
        return Err(Error::Capacity {
            what: "analytic noisy distribution width",
            limit: MAX_ANALYTIC_WIDTH,
            requested: n,
        });
    }
    check_normalized(p0)?;
    let powers: Vec<f64> = (0..=n)
        .map(|d| eta.powi(d as i32) * (1.0 - eta).powi((n - d) as i32))
        .collect();
    let mut dense = vec![0.0; 1usize << n];
    for (idx, slot) in dense.iter_mut().enumerate() {
        let s = BitString::from_index(idx as u64, n);
        *slot = p0.iter().map(|(t, p)| powers[s.hamming(t)] * p).sum();
    }
    Ok(dense)
}

/// Total-variation distance between two dense distributions.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

/// Normalized histogram of samples over `{0,1}ⁿ`, indexed like [`analytic_noisy_dist`].
pub fn empirical_dist(samples: &[BitString], n: usize) -> Vec<f64> {
    assert!(n <= 24);
    let mut counts = vec![0u64; 1usize << n];
    for s in samples {
        counts[s.to_index() as usize] += 1;
    }
    let total = samples.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn point(s: &str) -> SparseDist {
        [(bs(s), 1.0)].into_iter().collect()
    }

    #[test]
    fn eta_eff_values() {
        assert_eq!(eta_eff(0.0).unwrap(), 0.0);
        assert!((eta_eff(0.1).unwrap() - 0.095).abs() < 1e-15);
        assert_eq!(eta_eff(1.0).unwrap(), 0.5);
        assert!(eta_eff(1.5).is_err());
        assert!(eta_eff(-0.1).is_err());
    }

    #[test]
    fn channel_ranges() {
        assert!(NoiseChannel::bit_flip(0.5).is_err());
        assert!(NoiseChannel::block_flip(-0.1).is_err());
        assert!(NoiseChannel::depolarizing(1.0).is_ok());
    }

    #[test]
    fn identity_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = bs("1011001");
        for _ in 0..100 {
            assert_eq!(NoiseChannel::noiseless().apply(&s, &mut rng), s);
            assert_eq!(NoiseChannel::block_flip(0.0).unwrap().apply(&s, &mut rng), s);
        }
    }

    #[test]
    fn near_half_flip_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = NoiseChannel::bit_flip(0.5 - 1e-9).unwrap();
        let zero = bs("0");
        let ones = (0..1_000_000).filter(|_| ch.apply(&zero, &mut rng).get(0)).count();
        let freq = ones as f64 / 1e6;
        assert!((freq - 0.5).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn block_flip_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = NoiseChannel::block_flip(0.3).unwrap();
        let s = bs("01");
        let mut flipped = 0;
        for _ in 0..1_000_000 {
            let t = ch.apply(&s, &mut rng);
            if t == bs("10") {
                flipped += 1;
            } else {
                assert_eq!(t, s);
            }
        }
        let freq = flipped as f64 / 1e6;
        assert!((freq - 0.3).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn block_flip_marginals_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = NoiseChannel::block_flip(0.05).unwrap();
        let bound = ch.strength();
        let s = bs("0110101");
        let draws = 1_000_000;
        let mut counts = [0usize; 7];
        for _ in 0..draws {
            let t = ch.apply(&s, &mut rng);
            for (i, c) in counts.iter_mut().enumerate() {
                if t.get(i) != s.get(i) {
                    *c += 1;
                }
            }
        }
        for c in counts {
            assert!(c as f64 / draws as f64 <= bound + 0.005);
        }
    }

    #[test]
    fn p0_eff_examples() {
        let p = point("101");
        assert_eq!(p0_eff(&p, 3, 0.0).unwrap(), p);
        let mixed = p0_eff(&p, 3, 0.2).unwrap();
        assert!((mixed[&bs("101")] - 0.8).abs() < 1e-15);
        assert!((mixed[&bs("000")] - 0.2).abs() < 1e-15);
        let fixed = p0_eff(&point("000"), 3, 0.3).unwrap();
        assert_eq!(fixed.len(), 1);
        assert!((fixed[&bs("000")] - 1.0).abs() < 1e-15);
        let bad: SparseDist = [(bs("000"), 0.5)].into_iter().collect();
        assert!(p0_eff(&bad, 3, 0.1).is_err());
    }

    #[test]
    fn analytic_examples() {
        let d = analytic_noisy_dist(&point("1"), 0.2, 1).unwrap();
        assert!((d[1] - 0.8).abs() < 1e-15 && (d[0] - 0.2).abs() < 1e-15);
        let d = analytic_noisy_dist(&point("00"), 0.1, 2).unwrap();
        let expect = [0.81, 0.09, 0.09, 0.01];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let p: SparseDist = [(bs("010"), 0.25), (bs("111"), 0.75)].into_iter().collect();
        let d0 = analytic_noisy_dist(&p, 0.0, 3).unwrap();
        assert_eq!(d0[2], 0.25);
        assert_eq!(d0[7], 0.75);
        assert!(analytic_noisy_dist(&point("0000000000000"), 0.1, 13).is_err());
    }

    #[test]
    fn analytic_mass_and_continuity() {
        let p: SparseDist = [(bs("0101"), 0.5), (bs("1100"), 0.25), (bs("0000"), 0.25)]
            .into_iter()
            .collect();
        let mut last = f64::INFINITY;
        for eta in [0.3, 0.1, 0.03, 0.01, 0.001] {
            let d = analytic_noisy_dist(&p, eta, 4).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let base = analytic_noisy_dist(&p, 0.0, 4).unwrap();
            let tv = total_variation(&d, &base);
            assert!(tv < last);
            last = tv;
        }
    }

    #[test]
    fn bitflip_matches_analytic_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p: SparseDist = [(bs("010110"), 0.5), (bs("111000"), 0.5)].into_iter().collect();
        let keys: Vec<BitString> = p.keys().cloned().collect();
        let ch = NoiseChannel::bit_flip(0.08).unwrap();
        let samples: Vec<BitString> = (0..1_000_000)
            .map(|i| ch.apply(&keys[i % 2], &mut rng))
            .collect();
        let tv = total_variation(
            &empirical_dist(&samples, 6),
            &analytic_noisy_dist(&p, 0.08, 6).unwrap(),
        );
        assert!(tv <= 0.01, "tv {tv}");
    }
}
