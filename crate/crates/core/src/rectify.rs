//! Classical error rectification: recover every heavy component of `p₀`
//! from samples of the bit-flipped law `p_η`.
//!
//! The search grows candidate prefixes one bit at a time. At depth `m` every
//! surviving `(m−1)`-bit prefix is extended by 0 and 1, each noisy sample is
//! matched by its first `m` bits to the nearest candidate in Hamming distance
//! (uniform random tie-break), and the `⌊2/θ⌋` most frequently matched
//! candidates survive. The same samples are reused at every depth.

use std::collections::BTreeSet;

use rand::Rng;

use crate::bits::BitString;
use crate::boolfn::FourierSpectrum;
use crate::error::{check_unit_open, check_width, Error, Result};

/// Smallest `k` with `2n·exp(−kθ²/200) ≤ δ`, i.e. `⌈(200/θ²)·ln(2n/δ)⌉`.
pub fn required_samples(n: usize, theta: f64, delta: f64) -> Result<usize> {
    check_unit_open("theta", theta)?;
    check_unit_open("delta", delta)?;
    if n == 0 {
        return Err(Error::Argument("width must be positive".into()));
    }
    let k = (200.0 / (theta * theta)) * (2.0 * n as f64 / delta).ln();
    Ok((k.ceil() as usize).max(1))
}

/// List-size bound `⌊2/θ⌋`.
pub fn list_cap(theta: f64) -> usize {
    (2.0 / theta).floor() as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectifyParams {
    pub theta: f64,
    pub delta: f64,
    pub k: usize,
    pub cap: usize,
}

impl RectifyParams {
    pub fn new(n: usize, theta: f64, delta: f64) -> Result<Self> {
        let k = required_samples(n, theta, delta)?;
        Ok(RectifyParams {
            theta,
            delta,
            k,
            cap: list_cap(theta),
        })
    }
}

/// Candidate prefixes at one depth with their match counts, sorted by
/// descending count and then lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixList {
    pub m: usize,
    pub entries: Vec<(BitString, usize)>,
    pub total: usize,
}

impl PrefixList {
    pub fn freq(&self, i: usize) -> f64 {
        self.entries[i].1 as f64 / self.total as f64
    }

    pub fn freq_of(&self, prefix: &BitString) -> Option<f64> {
        self.entries
            .iter()
            .position(|(p, _)| p == prefix)
            .map(|i| self.freq(i))
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &BitString> {
        self.entries.iter().map(|(p, _)| p)
    }
}

/// Index of the candidate nearest to `t` over the first `m` bits, ties
/// broken uniformly at random. Reservoir selection keeps this allocation-free.
#[inline]
fn nearest_prefix<R: Rng + ?Sized>(t: &BitString, candidates: &[BitString], m: usize, rng: &mut R) -> usize {
    let mut best = usize::MAX;
    let mut chosen = 0;
    let mut ties = 0u32;
    for (i, c) in candidates.iter().enumerate() {
        let d = t.prefix_hamming(c, m);
        if d < best {
            best = d;
            chosen = i;
            ties = 1;
        } else if d == best {
            ties += 1;
            if rng.gen_range(0..ties) == 0 {
                chosen = i;
            }
        }
    }
    chosen
}

/// Index of the candidate at minimal Hamming distance from `t_prefix`, with
/// uniformly random tie-breaking.
pub fn nearest_match<R: Rng + ?Sized>(t_prefix: &BitString, candidates: &[BitString], rng: &mut R) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Argument("no candidates to match against".into()));
    }
    for c in candidates {
        check_width(t_prefix.len(), c.len())?;
    }
    Ok(nearest_prefix(t_prefix, candidates, t_prefix.len(), rng))
}

fn validate(samples: &[BitString], n: usize, theta: f64) -> Result<()> {
    check_unit_open("theta", theta)?;
    if samples.is_empty() {
        return Err(Error::Argument("sample list is empty".into()));
    }
    if n == 0 {
        return Err(Error::Argument("width must be positive".into()));
    }
    for s in samples {
        check_width(n, s.len())?;
    }
    Ok(())
}

/// Runs the rectification search and returns `L` with `|L| ≤ ⌊2/θ⌋`.
pub fn rectify<R: Rng + ?Sized>(samples: &[BitString], n: usize, theta: f64, rng: &mut R) -> Result<Vec<BitString>> {
    validate(samples, n, theta)?;
    Ok(run(samples, n, theta, rng, |_| {}))
}

/// Like [`rectify`], also returning the sorted, untruncated candidate list of
/// every depth.
pub fn rectify_traced<R: Rng + ?Sized>(
    samples: &[BitString],
    n: usize,
    theta: f64,
    rng: &mut R,
) -> Result<(Vec<BitString>, Vec<PrefixList>)> {
    validate(samples, n, theta)?;
    let mut trace = Vec::with_capacity(n);
    let out = run(samples, n, theta, rng, |list| trace.push(list.clone()));
    Ok((out, trace))
}

fn run<R: Rng + ?Sized>(
    samples: &[BitString],
    n: usize,
    theta: f64,
    rng: &mut R,
    mut observe: impl FnMut(&PrefixList),
) -> Vec<BitString> {
    let cap = list_cap(theta);
    let mut survivors = vec![BitString::empty()];
    let mut counts: Vec<usize> = Vec::new();
    for m in 1..=n {
        let candidates: Vec<BitString> = survivors
            .iter()
            .flat_map(|p| [p.extended(false), p.extended(true)])
            .collect();
        counts.clear();
        counts.resize(candidates.len(), 0);
        for t in samples {
            counts[nearest_prefix(t, &candidates, m, rng)] += 1;
        }
        let mut entries: Vec<(BitString, usize)> = candidates.into_iter().zip(counts.iter().copied()).collect();
        entries.sort_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then_with(|| pa.cmp(pb)));
        let list = PrefixList {
            m,
            entries,
            total: samples.len(),
        };
        observe(&list);
        survivors = list.entries.into_iter().take(cap).map(|(p, _)| p).collect();
    }
    survivors
}

/// Exact heavy set `{s : ĝ(s)² ≥ θ}` of a known spectrum.
pub fn heavy_set(spec: &FourierSpectrum, theta: f64) -> BTreeSet<BitString> {
    spec.iter()
        .filter(|(_, c)| c * c >= theta)
        .map(|(s, _)| s.clone())
        .collect()
}

fn binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Mismatch polynomial `P_d(η) = Σ_{i=0}^{⌊d/2⌋} (1 − ½·[i = d/2]) C(d,i) η^{d−i} (1−η)^i`:
/// the probability that noise pushes a sample at distance `d` from a rival
/// candidate onto that rival, counting ties at half weight.
pub fn p_d_poly(eta: f64, d: usize) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Argument(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    if d == 0 {
        return Err(Error::Argument("d must be positive".into()));
    }
    let mut total = 0.0;
    for i in 0..=d / 2 {
        let weight = if 2 * i == d { 0.5 } else { 1.0 };
        total += weight * binomial(d as u64, i as u64) * eta.powi((d - i) as i32) * (1.0 - eta).powi(i as i32);
    }
    Ok(total)
}

/// Summary record written alongside a rectified list.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RectifySummary {
    pub theta: f64,
    pub k: usize,
    pub cap: usize,
    pub list_len: usize,
}
