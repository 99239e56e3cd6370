//! The two data sources: the classical random example oracle and a classical
//! simulation of the (noisy) quantum Fourier sampling circuit.
//!
//! The circuit is never simulated at the amplitude level. Measuring the
//! final `n + 1` qubits yields `y = 1` with probability 1/2, in which case
//! the first `n` qubits follow `p₀(s) = ĝ(s)²`; otherwise they read `0ⁿ`.
//! The samplers reproduce that law directly from the sparse spectrum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::boolfn::{BooleanFunction, FourierSpectrum};
use crate::error::{Error, Result};
use crate::noise::{flip_independent, p0_eff, NoiseChannel, SparseDist};

/// Raw circuit runs attempted before declaring the sampler stuck.
pub const MAX_RAW_DRAWS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomExample {
    pub x: BitString,
    pub fx: bool,
}

impl RandomExample {
    /// `g(x) = 1 − 2f(x)` as ±1.
    #[inline]
    pub fn g(&self) -> i64 {
        if self.fx {
            -1
        } else {
            1
        }
    }
}

/// Draws `(x, f(x))` with `x` uniform over `{0,1}ⁿ`.
pub fn random_example<R: Rng + ?Sized>(f: &BooleanFunction, rng: &mut R) -> RandomExample {
    let x = BitString::random(f.n(), rng);
    let fx = f.eval_unchecked(&x);
    RandomExample { x, fx }
}

pub fn random_examples<R: Rng + ?Sized>(f: &BooleanFunction, count: usize, rng: &mut R) -> Vec<RandomExample> {
    (0..count).map(|_| random_example(f, rng)).collect()
}

/// Exact discrete sampler over a sparse distribution using cumulative weights
/// and binary search.
#[derive(Clone, Debug)]
pub struct DiscreteSampler {
    n: usize,
    outcomes: Vec<BitString>,
    cumulative: Vec<f64>,
}

impl DiscreteSampler {
    pub fn from_dist(n: usize, dist: &SparseDist) -> Result<Self> {
        let mut outcomes = Vec::with_capacity(dist.len());
        let mut cumulative = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for (s, &p) in dist {
            if p < 0.0 {
                return Err(Error::Argument(format!("negative probability {p} for {s}")));
            }
            if p > 0.0 {
                acc += p;
                outcomes.push(s.clone());
                cumulative.push(acc);
            }
        }
        if outcomes.is_empty() {
            return Err(Error::Argument("cannot sample from an empty distribution".into()));
        }
        Ok(DiscreteSampler { n, outcomes, cumulative })
    }

    /// Sampler for `p₀ = ĝ²`; rejects spectra that violate Parseval.
    pub fn p0(spec: &FourierSpectrum) -> Result<Self> {
        spec.check_parseval()?;
        Self::from_dist(spec.n(), &spec.p0())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        let total = *self.cumulative.last().expect("nonempty");
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.outcomes[idx.min(self.outcomes.len() - 1)].clone()
    }
}

/// One run of the noise-free circuit: the first `n` outcomes and the last qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QfsRawOutcome {
    pub s: BitString,
    pub y: bool,
}

pub fn qfs_raw<R: Rng + ?Sized>(p0: &DiscreteSampler, rng: &mut R) -> QfsRawOutcome {
    if rng.gen::<bool>() {
        QfsRawOutcome {
            s: p0.sample(rng),
            y: true,
        }
    } else {
        QfsRawOutcome {
            s: BitString::zeros(p0.n()),
            y: false,
        }
    }
}

/// How depolarizing noise is simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepolarizingPath {
    /// Sample `p0_eff`, then flip each bit at `eta_eff`.
    #[default]
    Effective,
    /// Run the raw circuit, flip every outcome bit including `y` at
    /// `eta_eff`, and keep the first run whose noisy `y` reads 1.
    Physical,
}

/// Simulated noisy Fourier-sampling prover device. Each call to
/// [`QfsSimulator::sample`] returns one outcome conditioned on `y = 1`.
#[derive(Clone, Debug)]
pub struct QfsSimulator {
    p0: DiscreteSampler,
    channel: NoiseChannel,
    path: DepolarizingPath,
    effective: Option<DiscreteSampler>,
}

impl QfsSimulator {
    pub fn new(spec: &FourierSpectrum, channel: NoiseChannel) -> Result<Self> {
        Self::with_path(spec, channel, DepolarizingPath::Effective)
    }

    pub fn with_path(spec: &FourierSpectrum, channel: NoiseChannel, path: DepolarizingPath) -> Result<Self> {
        let p0 = DiscreteSampler::p0(spec)?;
        Self::from_sampler(p0, channel, path, Some(&spec.p0()))
    }

    /// Simulator over an arbitrary source law instead of `ĝ²`.
    pub fn from_dist(n: usize, dist: &SparseDist, channel: NoiseChannel) -> Result<Self> {
        let p0 = DiscreteSampler::from_dist(n, dist)?;
        Self::from_sampler(p0, channel, DepolarizingPath::Effective, Some(dist))
    }

    fn from_sampler(
        p0: DiscreteSampler,
        channel: NoiseChannel,
        path: DepolarizingPath,
        dist: Option<&SparseDist>,
    ) -> Result<Self> {
        let effective = match (channel, dist) {
            (NoiseChannel::Depolarizing(c), Some(dist)) => {
                let total: f64 = dist.values().sum();
                let normalized: SparseDist = dist.iter().map(|(s, p)| (s.clone(), p / total)).collect();
                let eff = p0_eff(&normalized, p0.n(), c.eta_eff())?;
                Some(DiscreteSampler::from_dist(p0.n(), &eff)?)
            }
            _ => None,
        };
        Ok(QfsSimulator {
            p0,
            channel,
            path,
            effective,
        })
    }

    pub fn n(&self) -> usize {
        self.p0.n()
    }

    pub fn channel(&self) -> NoiseChannel {
        self.channel
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BitString> {
        match self.channel {
            NoiseChannel::Depolarizing(c) => match self.path {
                DepolarizingPath::Effective => {
                    let sampler = self.effective.as_ref().expect("built for depolarizing");
                    Ok(self.channel.apply(&sampler.sample(rng), rng))
                }
                DepolarizingPath::Physical => {
                    for _ in 0..MAX_RAW_DRAWS {
                        let mut raw = qfs_raw(&self.p0, rng);
                        flip_independent(&mut raw.s, c.eta_eff(), rng);
                        let y = raw.y ^ (rng.gen::<f64>() < c.eta_eff());
                        if y {
                            return Ok(raw.s);
                        }
                    }
                    Err(Error::Internal(format!(
                        "no y = 1 outcome in {MAX_RAW_DRAWS} circuit runs"
                    )))
                }
            },
            _ => {
                for _ in 0..MAX_RAW_DRAWS {
                    let raw = qfs_raw(&self.p0, rng);
                    if raw.y {
                        return Ok(self.channel.apply(&raw.s, rng));
                    }
                }
                Err(Error::Internal(format!(
                    "no y = 1 outcome in {MAX_RAW_DRAWS} circuit runs"
                )))
            }
        }
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<BitString>> {
        if count == 0 {
            return Err(Error::Argument("batch count must be positive".into()));
        }
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// One sample from the noisy circuit's `y = 1` conditional law.
pub fn qfs_sample_noisy<R: Rng + ?Sized>(sim: &QfsSimulator, rng: &mut R) -> Result<BitString> {
    sim.sample(rng)
}

pub fn sample_batch<R: Rng + ?Sized>(sim: &QfsSimulator, count: usize, rng: &mut R) -> Result<Vec<BitString>> {
    sim.sample_batch(count, rng)
}

/// Sample dump: one bit string per line.
pub fn write_samples(samples: &[BitString]) -> String {
    let mut out = String::with_capacity(samples.len() * (samples.first().map_or(0, |s| s.len()) + 1));
    for s in samples {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

pub fn read_samples(text: &str, n: Option<usize>) -> Result<Vec<BitString>> {
    let mut width = n;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let s: BitString = line.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
        match width {
            Some(w) if w != s.len() => {
                return Err(Error::parse(i + 1, format!("expected {w} bits, got {}", s.len())))
            }
            None => width = Some(s.len()),
            _ => {}
        }
        out.push(s);
    }
    Ok(out)
}

/// Random-example dump: `x-string<space>bit` per line.
pub fn write_examples(examples: &[RandomExample]) -> String {
    examples
        .iter()
        .map(|e| format!("{} {}\n", e.x, e.fx as u8))
        .collect()
}

pub fn read_examples(text: &str) -> Result<Vec<RandomExample>> {
    let mut out = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(x), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(i + 1, "expected `<x> <bit>`"));
        };
        let x: BitString = x.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
        if *width.get_or_insert(x.len()) != x.len() {
            return Err(Error::parse(i + 1, "inconsistent example width"));
        }
        let fx = match b {
            "0" => false,
            "1" => true,
            _ => return Err(Error::parse(i + 1, format!("invalid label {b:?}"))),
        };
        out.push(RandomExample { x, fx });
    }
    Ok(out)
}
