//! One-round interactive proof for agnostic parity learning.
//!
//! The classical verifier asks the prover for `k` noisy Fourier samples,
//! rectifies them into a candidate list `L`, checks with fresh random
//! examples that `L` carries almost all Fourier weight
//! (`Σ_{s∈L} g̃(s)² ≥ 1 − τ²/2`), and only then estimates the coefficients on
//! `L` a second time and returns the best parity. A prover cannot make the
//! verifier accept a list missing a heavy coefficient without the weight
//! check noticing, whatever strings it sends.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::boolfn::{gen_ftau, BooleanFunction, FourierSpectrum};
use crate::error::{check_unit_open, Error, Result};
use crate::noise::{NoiseChannel, SparseDist};
use crate::oracles::{random_examples, QfsSimulator};
use crate::rectify::{list_cap, rectify, required_samples};
use crate::seed::derive_seed;
use crate::spectral::{argmax_lex, estimate_coeffs, examples_needed, regret, Target};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifierParams {
    pub n: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
}

impl VerifierParams {
    pub fn new(n: usize, tau: f64, eps: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("width must be positive".into()));
        }
        check_unit_open("tau", tau)?;
        check_unit_open("eps", eps)?;
        check_unit_open("delta", delta)?;
        Ok(VerifierParams { n, tau, eps, delta })
    }

    /// Rectification threshold `θ = τ²`.
    pub fn theta(&self) -> f64 {
        self.tau * self.tau
    }

    pub fn cap(&self) -> usize {
        list_cap(self.theta())
    }

    /// Noisy samples requested in step 1.
    pub fn k(&self) -> usize {
        required_samples(self.n, self.theta(), self.delta / 3.0).expect("validated params")
    }

    /// Accuracy of the step-2 estimates, `τ³/8`.
    pub fn step2_accuracy(&self) -> f64 {
        self.tau.powi(3) / 8.0
    }

    /// Acceptance threshold on the estimated weight of `L`, `1 − τ²/2`.
    pub fn threshold(&self) -> f64 {
        1.0 - self.theta() / 2.0
    }

    pub fn kprime2(&self) -> usize {
        examples_needed(self.cap(), self.step2_accuracy(), self.delta / 3.0).expect("validated params")
    }

    pub fn kprime3(&self) -> usize {
        examples_needed(self.cap(), self.eps, self.delta / 3.0).expect("validated params")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    SampleRequest { count: usize },
    SampleBatch { samples: Vec<BitString> },
}

impl Message {
    /// Wire form: `REQ <count>`, or `BATCH <count>` followed by one line per sample.
    pub fn encode(&self) -> String {
        match self {
            Message::SampleRequest { count } => format!("REQ {count}"),
            Message::SampleBatch { samples } => {
                let mut out = format!("BATCH {}", samples.len());
                for s in samples {
                    out.push('\n');
                    out.push_str(&s.to_string());
                }
                out
            }
        }
    }

    /// Parses exactly one message.
    pub fn decode(text: &str) -> Result<Message> {
        let mut msgs = decode_stream(text)?;
        match msgs.len() {
            1 => Ok(msgs.remove(0)),
            0 => Err(Error::parse(1, "no message")),
            _ => Err(Error::parse(1, "more than one message")),
        }
    }
}

fn parse_count(word: Option<&str>, line: usize) -> Result<usize> {
    word.ok_or_else(|| Error::parse(line, "missing count"))?
        .parse::<usize>()
        .map_err(|e| Error::parse(line, format!("bad count: {e}")))
}

/// Parses a sequence of wire messages. Every sample of a batch must have the
/// width of the batch's first sample.
pub fn decode_stream(text: &str) -> Result<Vec<Message>> {
    let lines: Vec<&str> = text.lines().collect();
    decode_lines(&lines, 0).map(|(msgs, _)| msgs)
}

/// Decodes messages from `lines` until the end or a line that starts with
/// neither `REQ` nor `BATCH`. Returns the messages and the index of the first
/// unconsumed line. `offset` is added to reported line numbers.
fn decode_lines(lines: &[&str], offset: usize) -> Result<(Vec<Message>, usize)> {
    let mut msgs = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line_no = offset + i + 1;
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        match head {
            "REQ" => {
                let count = parse_count(words.next(), line_no)?;
                if count == 0 {
                    return Err(Error::parse(line_no, "request count must be positive"));
                }
                if words.next().is_some() {
                    return Err(Error::parse(line_no, "trailing data after REQ"));
                }
                msgs.push(Message::SampleRequest { count });
                i += 1;
            }
            "BATCH" => {
                let count = parse_count(words.next(), line_no)?;
                if words.next().is_some() {
                    return Err(Error::parse(line_no, "trailing data after BATCH"));
                }
                let mut samples = Vec::with_capacity(count);
                let mut width = None;
                for j in 0..count {
                    let idx = i + 1 + j;
                    let Some(raw) = lines.get(idx) else {
                        return Err(Error::parse(offset + idx + 1, format!("batch truncated after {j} of {count} samples")));
                    };
                    let s: BitString = raw
                        .trim()
                        .parse()
                        .map_err(|e: Error| Error::parse(offset + idx + 1, e.to_string()))?;
                    if *width.get_or_insert(s.len()) != s.len() {
                        return Err(Error::parse(
                            offset + idx + 1,
                            format!("sample width {} differs from batch width {}", s.len(), width.unwrap()),
                        ));
                    }
                    samples.push(s);
                }
                msgs.push(Message::SampleBatch { samples });
                i += 1 + count;
            }
            _ => return Ok((msgs, i)),
        }
    }
    Ok((msgs, i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    BadBatch,
    ValidationFailed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::BadBatch => "BadBatch",
            RejectReason::ValidationFailed => "ValidationFailed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accepted { s0: BitString },
    Rejected { reason: RejectReason },
}

impl Outcome {
    pub fn accepted(&self) -> Option<&BitString> {
        match self {
            Outcome::Accepted { s0 } => Some(s0),
            Outcome::Rejected { .. } => None,
        }
    }

    fn encode(&self) -> String {
        match self {
            Outcome::Accepted { s0 } => format!("OUTCOME ACCEPT {s0}"),
            Outcome::Rejected { reason } => format!("OUTCOME REJECT {reason}"),
        }
    }

    fn decode(line: &str, line_no: usize) -> Result<Outcome> {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["OUTCOME", "ACCEPT", s] => Ok(Outcome::Accepted {
                s0: s.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?,
            }),
            ["OUTCOME", "REJECT", "BadBatch"] => Ok(Outcome::Rejected {
                reason: RejectReason::BadBatch,
            }),
            ["OUTCOME", "REJECT", "ValidationFailed"] => Ok(Outcome::Rejected {
                reason: RejectReason::ValidationFailed,
            }),
            _ => Err(Error::parse(line_no, format!("bad outcome line {line:?}"))),
        }
    }
}

/// Header line of a transcript file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptHeader {
    pub n: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub kprime1: usize,
    pub kprime2: usize,
    pub kprime3: usize,
}

/// Full record of one verifier run. `kprime*` are the random examples the
/// verifier actually drew in each step; step 1 draws none.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub params: VerifierParams,
    pub seed: u64,
    pub messages: Vec<Message>,
    pub outcome: Outcome,
    pub kprime1: usize,
    pub kprime2: usize,
    pub kprime3: usize,
}

impl Transcript {
    pub fn header(&self) -> TranscriptHeader {
        TranscriptHeader {
            n: self.params.n,
            tau: self.params.tau,
            eps: self.params.eps,
            delta: self.params.delta,
            seed: self.seed,
            kprime1: self.kprime1,
            kprime2: self.kprime2,
            kprime3: self.kprime3,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        for m in &self.messages {
            out.push('\n');
            out.push_str(&m.encode());
        }
        out.push('\n');
        out.push_str(&self.outcome.encode());
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Transcript> {
        let lines: Vec<&str> = text.lines().collect();
        let first = lines.first().ok_or_else(|| Error::parse(1, "empty transcript"))?;
        let header: TranscriptHeader =
            serde_json::from_str(first).map_err(|e| Error::parse(1, format!("bad header: {e}")))?;
        let params = VerifierParams::new(header.n, header.tau, header.eps, header.delta)
            .map_err(|e| Error::parse(1, e.to_string()))?;
        let (messages, used) = decode_lines(&lines[1..], 1)?;
        let rest: Vec<(usize, &str)> = lines[1 + used..]
            .iter()
            .enumerate()
            .map(|(i, l)| (i + 2 + used, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let [(line_no, outcome_line)] = rest.as_slice() else {
            return Err(Error::parse(lines.len(), "expected exactly one OUTCOME line at the end"));
        };
        let outcome = Outcome::decode(outcome_line, *line_no)?;
        Ok(Transcript {
            params,
            seed: header.seed,
            messages,
            outcome,
            kprime1: header.kprime1,
            kprime2: header.kprime2,
            kprime3: header.kprime3,
        })
    }

    /// The batch the prover sent, if any.
    pub fn batch(&self) -> Option<&[BitString]> {
        self.messages.iter().find_map(|m| match m {
            Message::SampleBatch { samples } => Some(samples.as_slice()),
            _ => None,
        })
    }
}

/// Anything that answers a sample request.
pub trait Prover {
    fn respond(&mut self, request: &Message) -> Message;
}

fn requested(request: &Message) -> usize {
    match request {
        Message::SampleRequest { count } => *count,
        Message::SampleBatch { .. } => 0,
    }
}

/// Honest prover: a noisy Fourier-sampling device.
pub struct HonestProver {
    sim: QfsSimulator,
    rng: ChaCha8Rng,
}

impl HonestProver {
    pub fn new(spec: &FourierSpectrum, channel: NoiseChannel, seed: u64) -> Result<Self> {
        Ok(HonestProver {
            sim: QfsSimulator::new(spec, channel)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Prover for HonestProver {
    fn respond(&mut self, request: &Message) -> Message {
        let count = requested(request);
        let samples = if count == 0 {
            Vec::new()
        } else {
            self.sim.sample_batch(count, &mut self.rng).unwrap_or_default()
        };
        Message::SampleBatch { samples }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// i.i.d. uniform strings.
    Uniform,
    /// Honest sampling of a different function's spectrum.
    WrongFunction,
    /// Honest sampling that never emits the target's best coefficient.
    Omit,
    /// Every string is `0ⁿ`.
    Constant,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::Uniform,
        AdversaryKind::WrongFunction,
        AdversaryKind::Omit,
        AdversaryKind::Constant,
    ];
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(AdversaryKind::Uniform),
            "wrong-function" => Ok(AdversaryKind::WrongFunction),
            "omit" => Ok(AdversaryKind::Omit),
            "constant" => Ok(AdversaryKind::Constant),
            other => Err(Error::Argument(format!("unknown adversary kind {other:?}"))),
        }
    }
}

enum Emitter {
    Uniform,
    Constant,
    Sampler(QfsSimulator),
}

/// A dishonest prover that knows the target function.
pub struct Adversary {
    kind: AdversaryKind,
    n: usize,
    emitter: Emitter,
    rng: ChaCha8Rng,
    omitted: Option<BitString>,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, target: &Target, channel: NoiseChannel, seed: u64) -> Result<Self> {
        let n = target.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut omitted = None;
        let emitter = match kind {
            AdversaryKind::Uniform => Emitter::Uniform,
            AdversaryKind::Constant => Emitter::Constant,
            AdversaryKind::WrongFunction => {
                let other = different_function(target, &mut rng)?;
                Emitter::Sampler(QfsSimulator::new(&other.spectrum()?, channel)?)
            }
            AdversaryKind::Omit => {
                let s_star = best_support_element(&target.spectrum);
                let rest: SparseDist = target
                    .spectrum
                    .p0()
                    .into_iter()
                    .filter(|(s, _)| *s != s_star)
                    .collect();
                omitted = Some(s_star);
                if rest.is_empty() {
                    // Nothing left to sample once s* is excluded.
                    Emitter::Uniform
                } else {
                    // Renormalized restriction: the law of honest draws resampled until they differ from s*.
                    Emitter::Sampler(QfsSimulator::from_dist(n, &rest, channel)?)
                }
            }
        };
        Ok(Adversary {
            kind,
            n,
            emitter,
            rng,
            omitted,
        })
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    /// The string an `Omit` adversary never produces before noise.
    pub fn omitted(&self) -> Option<&BitString> {
        self.omitted.as_ref()
    }

    /// Noise-free/pre-channel draws are internal; this emits what goes on the wire.
    pub fn emit(&mut self, count: usize) -> Vec<BitString> {
        match &self.emitter {
            Emitter::Uniform => (0..count).map(|_| BitString::random(self.n, &mut self.rng)).collect(),
            Emitter::Constant => vec![BitString::zeros(self.n); count],
            Emitter::Sampler(sim) => sim.sample_batch(count.max(1), &mut self.rng).unwrap_or_default()[..count].to_vec(),
        }
    }
}

impl Prover for Adversary {
    fn respond(&mut self, request: &Message) -> Message {
        let count = requested(request);
        Message::SampleBatch {
            samples: self.emit(count),
        }
    }
}

fn best_support_element(spec: &FourierSpectrum) -> BitString {
    let map = spec.iter().map(|(s, c)| (s.clone(), c)).collect();
    argmax_lex(&map, spec.n())
}

fn different_function<R: Rng + ?Sized>(target: &Target, rng: &mut R) -> Result<BooleanFunction> {
    let n = target.n();
    let j = target.f.relevant_coords().len().clamp(1, n.min(8));
    let tau = target.spectrum.min_nonzero_coeff()?.min(2f64.powi(1 - j as i32));
    for _ in 0..100 {
        let g = gen_ftau(n, j, tau, rng)?;
        if g.spectrum()? != target.spectrum {
            return Ok(g);
        }
    }
    Err(Error::Generation {
        attempts: 100,
        reason: "could not find a function with a different spectrum".into(),
    })
}

/// Replays a recorded batch.
pub struct ReplayProver {
    batch: Option<Vec<BitString>>,
}

impl ReplayProver {
    pub fn new(transcript: &Transcript) -> Self {
        ReplayProver {
            batch: transcript.batch().map(|b| b.to_vec()),
        }
    }
}

impl Prover for ReplayProver {
    fn respond(&mut self, _request: &Message) -> Message {
        Message::SampleBatch {
            samples: self.batch.clone().unwrap_or_default(),
        }
    }
}

/// Weight check: `Σ_{s∈L} g̃(s)² ≥ 1 − τ²/2`.
pub fn validation_passes<'a>(estimates: impl IntoIterator<Item = &'a f64>, tau: f64) -> bool {
    let weight: f64 = estimates.into_iter().map(|g| g * g).sum();
    weight >= 1.0 - tau * tau / 2.0
}

/// Runs the verifier against `prover`. All of the verifier's randomness
/// (tie-breaks and random examples) comes from `seed`.
pub fn verifier_run(
    params: &VerifierParams,
    f: &BooleanFunction,
    prover: &mut dyn Prover,
    seed: u64,
) -> Result<(Outcome, Transcript)> {
    if f.n() != params.n {
        return Err(Error::WidthMismatch {
            expected: params.n,
            actual: f.n(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let request = Message::SampleRequest { count: params.k() };
    let response = prover.respond(&request);
    let mut transcript = Transcript {
        params: *params,
        seed,
        messages: vec![request, response.clone()],
        outcome: Outcome::Rejected {
            reason: RejectReason::BadBatch,
        },
        kprime1: 0,
        kprime2: 0,
        kprime3: 0,
    };

    let batch = match response {
        Message::SampleBatch { samples }
            if samples.len() == params.k() && samples.iter().all(|s| s.len() == params.n) =>
        {
            samples
        }
        _ => return Ok((transcript.outcome.clone(), transcript)),
    };

    // Step 1
    let list = rectify(&batch, params.n, params.theta(), &mut rng)?;

    // Step 2
    let k2 = params.kprime2();
    let examples = random_examples(f, k2, &mut rng);
    transcript.kprime2 = k2;
    let check = estimate_coeffs(&list, &examples)?;
    if !validation_passes(check.values(), params.tau) {
        transcript.outcome = Outcome::Rejected {
            reason: RejectReason::ValidationFailed,
        };
        return Ok((transcript.outcome.clone(), transcript));
    }

    // Step 3
    let k3 = params.kprime3();
    let examples = random_examples(f, k3, &mut rng);
    transcript.kprime3 = k3;
    let estimates = estimate_coeffs(&list, &examples)?;
    let s0 = argmax_lex(&estimates, params.n);
    transcript.outcome = Outcome::Accepted { s0 };
    Ok((transcript.outcome.clone(), transcript))
}

/// Re-runs the verifier on a recorded transcript's batch and seed.
pub fn replay(transcript: &Transcript, f: &BooleanFunction) -> Result<Outcome> {
    let mut prover = ReplayProver::new(transcript);
    verifier_run(&transcript.params, f, &mut prover, transcript.seed).map(|(o, _)| o)
}

/// Verdict on one protocol run against the known spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolTrial {
    pub outcome: Outcome,
    pub transcript: Transcript,
    /// Accepted with regret at most `eps`.
    pub correct: bool,
    /// Accepted with regret above `eps`.
    pub wrong_accept: bool,
    pub regret: Option<f64>,
}

pub fn judge(spec: &FourierSpectrum, outcome: &Outcome, eps: f64) -> (bool, bool, Option<f64>) {
    match outcome.accepted() {
        Some(s0) => {
            let r = regret(spec, s0);
            (r <= eps, r > eps, Some(r))
        }
        None => (false, false, None),
    }
}

fn trial(params: &VerifierParams, target: &Target, prover: &mut dyn Prover, verifier_seed: u64) -> Result<ProtocolTrial> {
    let (outcome, transcript) = verifier_run(params, &target.f, prover, verifier_seed)?;
    let (correct, wrong_accept, regret) = judge(&target.spectrum, &outcome, params.eps);
    Ok(ProtocolTrial {
        outcome,
        transcript,
        correct,
        wrong_accept,
        regret,
    })
}

/// Honest prover with the given channel; prover and verifier seeds are derived from `seed`.
pub fn completeness_trial(
    params: &VerifierParams,
    target: &Target,
    channel: NoiseChannel,
    seed: u64,
) -> Result<ProtocolTrial> {
    let mut prover = HonestProver::new(&target.spectrum, channel, derive_seed(seed, 0))?;
    trial(params, target, &mut prover, derive_seed(seed, 1))
}

pub fn soundness_trial(
    params: &VerifierParams,
    target: &Target,
    kind: AdversaryKind,
    channel: NoiseChannel,
    seed: u64,
) -> Result<ProtocolTrial> {
    let mut prover = Adversary::new(kind, target, channel, derive_seed(seed, 0))?;
    trial(params, target, &mut prover, derive_seed(seed, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::TruthTable;
    use crate::rectify::heavy_set;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn and2_target(n: usize) -> Target {
        let f = BooleanFunction::junta(n, vec![1, n - 2], TruthTable::new(2, vec![false, false, false, true]).unwrap())
            .unwrap();
        Target::new(f).unwrap()
    }

    struct Fixed(Message);

    impl Prover for Fixed {
        fn respond(&mut self, _request: &Message) -> Message {
            self.0.clone()
        }
    }

    #[test]
    fn derived_quantities() {
        let p = VerifierParams::new(16, 0.5, 0.45, 0.2).unwrap();
        assert_eq!(p.theta(), 0.25);
        assert_eq!(p.cap(), 8);
        assert_eq!(p.threshold(), 0.875);
        assert_eq!(p.step2_accuracy(), 0.015625);
        assert_eq!(p.k(), required_samples(16, 0.25, 0.2 / 3.0).unwrap());
        assert_eq!(p.kprime2(), examples_needed(8, 0.015625, 0.2 / 3.0).unwrap());
        assert!(VerifierParams::new(16, 1.0, 0.45, 0.2).is_err());
    }

    #[test]
    fn wire_format() {
        assert_eq!(Message::SampleRequest { count: 3 }.encode(), "REQ 3");
        let b = Message::SampleBatch {
            samples: vec![bs("01"), bs("11")],
        };
        assert_eq!(b.encode(), "BATCH 2\n01\n11");
        assert_eq!(Message::decode(&b.encode()).unwrap(), b);
        assert!(matches!(
            Message::decode("BATCH 2\n01\n0"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(Message::decode("BATCH 3\n01\n01"), Err(Error::Parse { .. })));
        assert!(matches!(Message::decode("REQ x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Message::decode("REQ 0"), Err(Error::Parse { .. })));
        let stream = decode_stream("REQ 2\nBATCH 2\n0\n1\n").unwrap();
        assert_eq!(stream.len(), 2);
    }

    #[test]
    fn short_batch_is_rejected() {
        let t = and2_target(8);
        let p = VerifierParams::new(8, 0.5, 0.45, 0.2).unwrap();
        let mut prover = Fixed(Message::SampleBatch {
            samples: vec![BitString::zeros(8); 3],
        });
        let (o, tr) = verifier_run(&p, &t.f, &mut prover, 1).unwrap();
        assert_eq!(o, Outcome::Rejected { reason: RejectReason::BadBatch });
        assert_eq!(tr.kprime2, 0);

        let mut wrong_width = Fixed(Message::SampleBatch {
            samples: vec![BitString::zeros(7); p.k()],
        });
        let (o, _) = verifier_run(&p, &t.f, &mut wrong_width, 1).unwrap();
        assert_eq!(o, Outcome::Rejected { reason: RejectReason::BadBatch });

        let mut nonsense = Fixed(Message::SampleRequest { count: 4 });
        let (o, _) = verifier_run(&p, &t.f, &mut nonsense, 1).unwrap();
        assert_eq!(o, Outcome::Rejected { reason: RejectReason::BadBatch });
    }

    #[test]
    fn honest_prover_batches() {
        let t = and2_target(10);
        let mut prover = HonestProver::new(&t.spectrum, NoiseChannel::noiseless(), 5).unwrap();
        let Message::SampleBatch { samples } = prover.respond(&Message::SampleRequest { count: 321 }) else {
            panic!("expected a batch");
        };
        assert_eq!(samples.len(), 321);
        assert!(samples.iter().all(|s| t.spectrum.coeff(s) != 0.0));
        let mut again = HonestProver::new(&t.spectrum, NoiseChannel::noiseless(), 5).unwrap();
        assert_eq!(
            again.respond(&Message::SampleRequest { count: 321 }),
            Message::SampleBatch { samples }
        );
    }

    #[test]
    fn adversary_behaviour() {
        let t = and2_target(16);
        let ch = NoiseChannel::noiseless();

        let mut uni = Adversary::new(AdversaryKind::Uniform, &t, ch, 1).unwrap();
        let batch = uni.emit(100_000 / 16);
        let ones: usize = batch.iter().map(|s| s.weight()).sum();
        let frac = ones as f64 / (batch.len() * 16) as f64;
        assert!((frac - 0.5).abs() <= 0.01);

        let mut omit = Adversary::new(AdversaryKind::Omit, &t, ch, 2).unwrap();
        let s_star = omit.omitted().unwrap().clone();
        assert!(heavy_set(&t.spectrum, 0.25).contains(&s_star));
        assert!(omit.emit(5000).iter().all(|s| *s != s_star));

        let mut c = Adversary::new(AdversaryKind::Constant, &t, ch, 3).unwrap();
        assert!(c.emit(100).iter().all(|s| s.is_zero()));

        let mut w = Adversary::new(AdversaryKind::WrongFunction, &t, ch, 4).unwrap();
        assert_eq!(w.emit(10).len(), 10);
    }

    #[test]
    fn constant_adversary_is_caught() {
        let t = and2_target(12);
        let p = VerifierParams::new(12, 0.5, 0.45, 0.2).unwrap();
        let mut prover = Adversary::new(AdversaryKind::Constant, &t, NoiseChannel::noiseless(), 0).unwrap();
        let (o, _) = verifier_run(&p, &t.f, &mut prover, 9).unwrap();
        assert_eq!(o, Outcome::Rejected { reason: RejectReason::ValidationFailed });
    }

    #[test]
    fn honest_noiseless_parity_is_accepted() {
        let s = bs("0100110010");
        let t = Target::new(BooleanFunction::parity(&s)).unwrap();
        let p = VerifierParams::new(10, 0.5, 0.45, 0.2).unwrap();
        let tr = completeness_trial(&p, &t, NoiseChannel::noiseless(), 11).unwrap();
        assert_eq!(tr.outcome, Outcome::Accepted { s0: s });
        assert!(tr.correct && !tr.wrong_accept);
        assert_eq!(tr.transcript.kprime1, 0);
    }

    #[test]
    fn rejected_is_never_wrong_accept() {
        let spec = and2_target(6).spectrum;
        let out = Outcome::Rejected { reason: RejectReason::ValidationFailed };
        assert_eq!(judge(&spec, &out, 0.1), (false, false, None));
    }

    #[test]
    fn transcript_round_trip_and_replay() {
        let t = and2_target(9);
        let p = VerifierParams::new(9, 0.5, 0.45, 0.2).unwrap();
        let trial = completeness_trial(&p, &t, NoiseChannel::bit_flip(0.02).unwrap(), 77).unwrap();
        let text = trial.transcript.to_text();
        assert!(text.lines().next().unwrap().contains("\"kprime1\":0"));
        assert!(text.trim_end().lines().last().unwrap().starts_with("OUTCOME "));
        let parsed = Transcript::from_text(&text).unwrap();
        assert_eq!(parsed, trial.transcript);
        assert_eq!(replay(&parsed, &t.f).unwrap(), trial.outcome);
        let reqs = parsed
            .messages
            .iter()
            .filter(|m| matches!(m, Message::SampleRequest { .. }))
            .count();
        assert_eq!(reqs, 1);
        assert!(parsed.messages.len() <= 2);
    }

    #[test]
    fn exact_weight_check_detects_missing_heavy_elements() {
        // With exact coefficients the check accepts iff every nonzero coefficient is in L.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for tau in [0.5, 0.25] {
            for _ in 0..20 {
                let j = if tau == 0.5 { 2 } else { 3 };
                let f = gen_ftau(6, j, tau, &mut rng).unwrap();
                let spec = f.spectrum().unwrap();
                let heavy = heavy_set(&spec, tau * tau);
                let cap = list_cap(tau * tau);
                let support: Vec<BitString> = spec.support().cloned().collect();
                // Enumerate lists made of subsets of the support padded with zero-coefficient strings.
                for mask in 0u32..1 << support.len() {
                    let mut list: Vec<BitString> = support
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, s)| s.clone())
                        .collect();
                    let mut filler = 0u64;
                    while list.len() < cap && filler < 64 {
                        let s = BitString::from_index(filler, 6);
                        if spec.coeff(&s) == 0.0 {
                            list.push(s);
                        }
                        filler += 1;
                    }
                    let exact: Vec<f64> = list.iter().map(|s| spec.coeff(s)).collect();
                    let contains = heavy.iter().all(|h| list.contains(h));
                    assert_eq!(validation_passes(&exact, tau), contains);
                }
            }
        }
    }

    fn arb_message() -> impl proptest::strategy::Strategy<Value = Message> {
        prop_oneof![
            (1usize..100_000).prop_map(|count| Message::SampleRequest { count }),
            (1usize..40, proptest::collection::vec(any::<u64>(), 0..30)).prop_map(|(n, raw)| {
                let samples = raw
                    .into_iter()
                    .map(|v| {
                        let mut r = ChaCha8Rng::seed_from_u64(v);
                        BitString::random(n, &mut r)
                    })
                    .collect();
                Message::SampleBatch { samples }
            }),
        ]
    }

    proptest! {
        #[test]
        fn message_round_trip(m in arb_message()) {
            prop_assert_eq!(Message::decode(&m.encode()).unwrap(), m);
        }
    }
}
