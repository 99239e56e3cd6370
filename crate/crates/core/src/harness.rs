//! Seeded Monte Carlo experiments over the learners and the protocol.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::boolfn::{coeff_bruteforce, gen_ftau, BooleanFunction, TruthTable};
use crate::error::{check_unit_open, Error, Result};
use crate::noise::{analytic_noisy_dist, p0_eff, total_variation, NoiseSpec};
use crate::oracles::QfsSimulator;
use crate::protocol::{completeness_trial, soundness_trial, AdversaryKind, VerifierParams};
use crate::rectify::{heavy_set, p_d_poly, rectify, required_samples};
use crate::seed::derive_seed;
use crate::spectral::{examples_needed, learn_parity_with_estimate, regret, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Does the rectified list contain every heavy string?
    Rectify,
    /// Is the learned parity within `eps` of the best one?
    Learn,
    /// Honest prover: is the verifier's answer accepted and correct?
    VerifyComplete,
    /// Adversarial prover: is a wrong answer accepted?
    VerifySound,
}

impl Mode {
    /// Name of the per-trial event the summary counts.
    pub fn metric(&self) -> &'static str {
        match self {
            Mode::Rectify => "heavy_in_list",
            Mode::Learn => "regret_ok",
            Mode::VerifyComplete => "correct_accept",
            Mode::VerifySound => "wrong_accept",
        }
    }
}

/// Experiment description. Every statistical field is required.
///
/// ```toml
/// n = 16
/// junta = 2
/// tau = 0.5
/// eps = 0.45
/// delta = 0.1
/// trials = 100
/// seed = 7
/// mode = "verify-sound"
/// adversary = "omit"
/// out = "runs/omit.jsonl"
/// threads = 0
///
/// [noise]
/// model = "bitflip"
/// eta = 0.025
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub junta: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryKind>,
    pub out: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    #[serde(default)]
    pub threads: usize,
    /// Fixed target function file; a fresh `gen_ftau(n, junta, tau)` per trial otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|sp| text[..sp.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        if self.junta > self.n {
            return Err(Error::config("junta", format!("must not exceed n = {}", self.n)));
        }
        for (field, v) in [("tau", self.tau), ("eps", self.eps), ("delta", self.delta)] {
            check_unit_open(field, v).map_err(|e| Error::config(field, e.to_string()))?;
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        self.noise.build().map_err(|e| Error::config("noise.eta", e.to_string()))?;
        match (self.mode, self.adversary) {
            (Mode::VerifySound, None) => {
                return Err(Error::config("adversary", "required when mode = \"verify-sound\""))
            }
            (Mode::VerifySound, Some(_)) | (_, None) => {}
            (_, Some(_)) => {
                return Err(Error::config("adversary", "only meaningful when mode = \"verify-sound\""))
            }
        }
        Ok(())
    }
}

/// Outcome of one trial. Booleans that do not apply to the mode are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    /// The mode's metric event (see [`Mode::metric`]).
    pub hit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heavy_in_list: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret_ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_accept: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrong_accept: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    pub qfs_samples: usize,
    pub random_examples: usize,
    pub list_len: usize,
    pub elapsed_ms: f64,
}

impl TrialRecord {
    fn new(index: usize, seed: u64) -> Self {
        TrialRecord {
            index,
            seed,
            hit: false,
            heavy_in_list: None,
            regret_ok: None,
            correct_accept: None,
            wrong_accept: None,
            regret: None,
            outcome: None,
            qfs_samples: 0,
            random_examples: 0,
            list_len: 0,
            elapsed_ms: 0.0,
        }
    }

    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &TrialRecord) -> bool {
        let mut a = self.clone();
        a.elapsed_ms = other.elapsed_ms;
        a == *other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub metric: String,
    pub trials: usize,
    pub hits: usize,
    pub fraction: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_ms: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub records: Vec<TrialRecord>,
}

/// 95% Wilson score interval for `hits` out of `trials`.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn summarize(mode: Mode, seed: u64, records: &[TrialRecord]) -> Summary {
    let trials = records.len();
    let hits = records.iter().filter(|r| r.hit).count();
    let (wilson_low, wilson_high) = wilson_interval(hits, trials);
    let mean_ms = if trials == 0 {
        0.0
    } else {
        records.iter().map(|r| r.elapsed_ms).sum::<f64>() / trials as f64
    };
    Summary {
        mode,
        metric: mode.metric().to_string(),
        trials,
        hits,
        fraction: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        wilson_low,
        wilson_high,
        mean_ms,
        seed,
    }
}

fn run_trial(cfg: &ExperimentConfig, fixed: Option<&Target>, index: usize) -> Result<TrialRecord> {
    let start = Instant::now();
    let seed = derive_seed(cfg.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let generated;
    let target = match fixed {
        Some(t) => t,
        None => {
            generated = Target::new(gen_ftau(cfg.n, cfg.junta, cfg.tau, &mut rng)?)?;
            &generated
        }
    };
    let channel = cfg.noise.build()?;
    let mut rec = TrialRecord::new(index, seed);
    match cfg.mode {
        Mode::Rectify => {
            let theta = cfg.tau * cfg.tau;
            let k = required_samples(cfg.n, theta, cfg.delta)?;
            let samples = QfsSimulator::new(&target.spectrum, channel)?.sample_batch(k, &mut rng)?;
            let list = rectify(&samples, cfg.n, theta, &mut rng)?;
            let ok = heavy_set(&target.spectrum, theta).iter().all(|h| list.contains(h));
            rec.hit = ok;
            rec.heavy_in_list = Some(ok);
            rec.qfs_samples = k;
            rec.list_len = list.len();
        }
        Mode::Learn => {
            let (s0, est) = learn_parity_with_estimate(target, channel, cfg.eps, cfg.delta, &mut rng)?;
            let r = regret(&target.spectrum, &s0);
            rec.hit = r <= cfg.eps;
            rec.regret_ok = Some(rec.hit);
            rec.regret = Some(r);
            rec.qfs_samples = est.qfs_samples;
            rec.random_examples = est.random_examples;
            rec.list_len = est.support.len();
        }
        Mode::VerifyComplete | Mode::VerifySound => {
            let params = VerifierParams::new(cfg.n, cfg.tau, cfg.eps, cfg.delta)?;
            let trial = match cfg.adversary {
                Some(kind) => soundness_trial(&params, target, kind, channel, seed)?,
                None => completeness_trial(&params, target, channel, seed)?,
            };
            rec.correct_accept = Some(trial.correct);
            rec.wrong_accept = Some(trial.wrong_accept);
            rec.hit = if cfg.mode == Mode::VerifySound {
                trial.wrong_accept
            } else {
                trial.correct
            };
            rec.regret = trial.regret;
            rec.outcome = Some(match trial.outcome.accepted() {
                Some(s0) => format!("accept {s0}"),
                None => match trial.outcome {
                    crate::protocol::Outcome::Rejected { reason } => format!("reject {reason}"),
                    _ => unreachable!(),
                },
            });
            rec.qfs_samples = trial.transcript.batch().map_or(0, |b| b.len());
            rec.random_examples = trial.transcript.kprime2 + trial.transcript.kprime3;
            rec.list_len = 0;
        }
    }
    rec.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

/// Runs every trial and returns records in index order. Nothing is written.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let fixed = match &cfg.function {
        Some(path) => {
            let f = BooleanFunction::load(path)?;
            if f.n() != cfg.n {
                return Err(Error::config("function", format!("file has n = {}, config has n = {}", f.n(), cfg.n)));
            }
            Some(Target::new(f)?)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let records = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, fixed.as_ref(), i))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult {
        summary: summarize(cfg.mode, cfg.seed, &records),
        records,
    })
}

/// Path of the summary file that accompanies a records file.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.jsonl");
    PathBuf::from(s)
}

/// Appends one JSON line per record to `out` and the summary to [`summary_path`].
pub fn persist(result: &ExperimentResult, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = String::new();
    for r in &result.records {
        buf.push_str(&serde_json::to_string(r).expect("record serializes"));
        buf.push('\n');
    }
    OpenOptions::new().create(true).append(true).open(out)?.write_all(buf.as_bytes())?;
    let line = serde_json::to_string(&result.summary).expect("summary serializes") + "\n";
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(summary_path(out))?
        .write_all(line.as_bytes())?;
    Ok(())
}

/// [`run_trials`] followed by [`persist`] to `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let result = run_trials(cfg)?;
    persist(&result, &cfg.out)?;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String>) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn fail(msg: String) -> Error {
    Error::Invariant(msg)
}

/// Deterministic oracle checks: spectra against brute force, the `P_d`
/// identities, the analytic noise laws and the closed-form sample counts.
pub fn selftest() -> Vec<CheckResult> {
    vec![
        check("spectrum-bruteforce", || {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
            let mut worst = 0.0f64;
            for i in 0..40 {
                let n = 1 + i % 8;
                let f = if i % 2 == 0 {
                    BooleanFunction::dense(TruthTable::random(n, &mut rng)?)
                } else {
                    let j = (i / 2) % n + 1;
                    gen_ftau(n, j, 2f64.powi(1 - j as i32), &mut rng)?
                };
                let spec = f.spectrum()?;
                spec.check_parseval()?;
                for idx in 0..1u64 << n {
                    let s = BitString::from_index(idx, n);
                    worst = worst.max((spec.coeff(&s) - coeff_bruteforce(&f, &s)?).abs());
                }
            }
            if worst > 1e-10 {
                return Err(fail(format!("max deviation {worst:e}")));
            }
            Ok(format!("40 functions, max deviation {worst:e}"))
        }),
        check("p_d-identities", || {
            for d in 1..=25 {
                for step in 1..=49 {
                    let eta = step as f64 / 100.0;
                    let odd = p_d_poly(eta, 2 * d - 1)?;
                    let even = p_d_poly(eta, 2 * d)?;
                    if odd > eta + 1e-12 || even > eta + 1e-12 || (odd - even).abs() > 1e-12 {
                        return Err(fail(format!("d = {d}, eta = {eta}: P_odd = {odd}, P_even = {even}")));
                    }
                }
            }
            Ok("d in 1..=25, eta in 0.01..0.49".into())
        }),
        check("analytic-noise", || {
            let f = BooleanFunction::junta(6, vec![0, 3], TruthTable::new(2, vec![false, false, false, true])?)?;
            let p0 = f.spectrum()?.p0();
            let clean = analytic_noisy_dist(&p0, 0.0, 6)?;
            for (s, p) in &p0 {
                if (clean[s.to_index() as usize] - p).abs() > 1e-15 {
                    return Err(fail("eta = 0 law differs from p0".into()));
                }
            }
            let noisy = analytic_noisy_dist(&p0, 0.05, 6)?;
            let mass: f64 = noisy.iter().sum();
            if (mass - 1.0).abs() > 1e-12 {
                return Err(fail(format!("noisy law mass {mass}")));
            }
            let eff = p0_eff(&p0, 6, crate::noise::eta_eff(0.1)?)?;
            let dep = analytic_noisy_dist(&eff, crate::noise::eta_eff(0.1)?, 6)?;
            let tv = total_variation(&noisy, &dep);
            if tv <= 0.0 {
                return Err(fail("depolarizing law equals plain bit flip".into()));
            }
            Ok(format!("mass {mass:.15}, TV(bitflip 0.05, depolarizing 0.1) = {tv:.4}"))
        }),
        check("sample-counts", || {
            let expect = [
                ("required_samples(2, 0.9, 0.9)", required_samples(2, 0.9, 0.9)?, 369),
                ("required_samples(16, 0.25, 0.1)", required_samples(16, 0.25, 0.1)?, 18459),
                ("examples_needed(32, 0.1, 0.1)", examples_needed(32, 0.1, 0.1)?, 1293),
            ];
            for (name, got, want) in expect {
                if got != want {
                    return Err(fail(format!("{name} = {got}, expected {want}")));
                }
            }
            Ok("369, 18459, 1293".into())
        }),
        check("wilson-interval", || {
            let (lo, _) = wilson_interval(100, 100);
            if (lo - 0.963).abs() > 5e-4 {
                return Err(fail(format!("lower bound for 100/100 is {lo}")));
            }
            Ok(format!("100/100 -> [{lo:.4}, 1]"))
        }),
    ]
}
