use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qfs_core::boolfn::gen_ftau;
use qfs_core::harness::{persist, run_trials, selftest, summary_path, ExperimentConfig};
use qfs_core::noise::{NoiseModel, NoiseSpec};
use qfs_core::oracles::{random_examples, read_samples, write_examples, write_samples, QfsSimulator};
use qfs_core::protocol::{replay, verifier_run, Adversary, AdversaryKind, HonestProver, Outcome, Prover, Transcript, VerifierParams};
use qfs_core::rectify::{list_cap, rectify, RectifySummary};
use qfs_core::seed::derive_seed;
use qfs_core::spectral::{learn_parity_with_estimate, regret, Target};
use qfs_core::{BooleanFunction, NoiseChannel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "qfs", version, about = "Noisy Fourier sampling: rectification, parity learning and verification")]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of trials, overriding the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random junta whose nonzero Fourier coefficients all have magnitude at least tau.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        junta: usize,
        #[arg(long)]
        tau: f64,
    },
    /// Write noisy Fourier samples (or random examples) of a function.
    Sample {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Write `x f(x)` random examples instead of Fourier samples.
        #[arg(long)]
        examples: bool,
    },
    /// Recover the heavy strings of a sample dump.
    Rectify {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        theta: f64,
    },
    /// Learn the best parity of a function from simulated noisy samples.
    Learn {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Run the verifier against an honest or adversarial prover, or replay a transcript.
    Verify {
        #[arg(long)]
        function: PathBuf,
        #[arg(long, required_unless_present = "replay")]
        tau: Option<f64>,
        #[arg(long, required_unless_present = "replay")]
        eps: Option<f64>,
        #[arg(long, required_unless_present = "replay")]
        delta: Option<f64>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum)]
        adversary: Option<AdversaryArg>,
        /// Replay a recorded transcript instead of running a prover.
        #[arg(long, conflicts_with_all = ["tau", "eps", "delta", "adversary"])]
        replay: Option<PathBuf>,
        #[arg(long)]
        transcript_out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment from `--config`.
    Experiment,
    /// Run the deterministic oracle checks.
    Selftest,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, value_enum, default_value_t = NoiseArg::Bitflip)]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Bitflip,
    Depolarizing,
    Blockflip,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryArg {
    Uniform,
    WrongFunction,
    Omit,
    Constant,
}

impl From<AdversaryArg> for AdversaryKind {
    fn from(a: AdversaryArg) -> Self {
        match a {
            AdversaryArg::Uniform => AdversaryKind::Uniform,
            AdversaryArg::WrongFunction => AdversaryKind::WrongFunction,
            AdversaryArg::Omit => AdversaryKind::Omit,
            AdversaryArg::Constant => AdversaryKind::Constant,
        }
    }
}

impl NoiseArgs {
    fn channel(&self) -> Result<NoiseChannel> {
        let model = match self.noise {
            NoiseArg::Bitflip => NoiseModel::Bitflip,
            NoiseArg::Depolarizing => NoiseModel::Depolarizing,
            NoiseArg::Blockflip => NoiseModel::Blockflip,
        };
        Ok(NoiseSpec { model, eta: self.eta }.build()?)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_function(path: &Path) -> Result<BooleanFunction> {
    BooleanFunction::load(path).with_context(|| format!("loading function {}", path.display()))
}

fn outcome_line(o: &Outcome) -> String {
    match o {
        Outcome::Accepted { s0 } => format!("ACCEPT {s0}"),
        Outcome::Rejected { reason } => format!("REJECT {reason}"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cli.command {
        Command::Gen { n, junta, tau } => {
            let f = gen_ftau(n, junta, tau, &mut rng)?;
            let text = serde_json::to_string(&f.to_file())? + "\n";
            emit(cli.out.as_deref(), &text)?;
        }
        Command::Sample {
            function,
            count,
            noise,
            examples,
        } => {
            let f = load_function(&function)?;
            let text = if examples {
                write_examples(&random_examples(&f, count, &mut rng))
            } else {
                let sim = QfsSimulator::new(&f.spectrum()?, noise.channel()?)?;
                write_samples(&sim.sample_batch(count, &mut rng)?)
            };
            emit(cli.out.as_deref(), &text)?;
        }
        Command::Rectify { samples, theta } => {
            let text = std::fs::read_to_string(&samples).with_context(|| format!("reading {}", samples.display()))?;
            let batch = read_samples(&text, None)?;
            let Some(n) = batch.first().map(|s| s.len()) else {
                bail!("{} contains no samples", samples.display());
            };
            let list = rectify(&batch, n, theta, &mut rng)?;
            let summary = RectifySummary {
                theta,
                k: batch.len(),
                cap: list_cap(theta),
                list_len: list.len(),
            };
            let mut out = serde_json::to_string(&summary)? + "\n";
            out.push_str(&write_samples(&list));
            emit(cli.out.as_deref(), &out)?;
        }
        Command::Learn {
            function,
            eps,
            delta,
            noise,
        } => {
            let target = Target::new(load_function(&function)?)?;
            let (s0, est) = learn_parity_with_estimate(&target, noise.channel()?, eps, delta, &mut rng)?;
            let report = serde_json::json!({
                "s0": s0,
                "regret": regret(&target.spectrum, &s0),
                "qfs_samples": est.qfs_samples,
                "random_examples": est.random_examples,
                "estimate": est.records(),
            });
            emit(cli.out.as_deref(), &(serde_json::to_string(&report)? + "\n"))?;
        }
        Command::Verify {
            function,
            tau,
            eps,
            delta,
            noise,
            adversary,
            replay: replay_path,
            transcript_out,
        } => {
            let target = Target::new(load_function(&function)?)?;
            if let Some(path) = replay_path {
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let transcript = Transcript::from_text(&text)?;
                let outcome = replay(&transcript, &target.f)?;
                println!("{}", outcome_line(&outcome));
                if outcome != transcript.outcome {
                    eprintln!("error: replay gave {}, transcript records {}", outcome_line(&outcome), outcome_line(&transcript.outcome));
                    return Ok(false);
                }
                return Ok(true);
            }
            let (tau, eps, delta) = (tau.unwrap(), eps.unwrap(), delta.unwrap());
            let params = VerifierParams::new(target.n(), tau, eps, delta)?;
            let channel = noise.channel()?;
            let mut prover: Box<dyn Prover> = match adversary {
                Some(kind) => Box::new(Adversary::new(kind.into(), &target, channel, derive_seed(seed, 0))?),
                None => Box::new(HonestProver::new(&target.spectrum, channel, derive_seed(seed, 0))?),
            };
            let (outcome, transcript) = verifier_run(&params, &target.f, prover.as_mut(), derive_seed(seed, 1))?;
            if let Some(path) = transcript_out {
                std::fs::write(&path, transcript.to_text()).with_context(|| format!("writing {}", path.display()))?;
            }
            match &outcome {
                Outcome::Accepted { s0 } => println!("{} regret={}", outcome_line(&outcome), regret(&target.spectrum, s0)),
                Outcome::Rejected { .. } => println!("{}", outcome_line(&outcome)),
            }
        }
        Command::Experiment => {
            let Some(path) = cli.config else {
                bail!("experiment needs --config");
            };
            let mut cfg = ExperimentConfig::load(&path).with_context(|| format!("config {}", path.display()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(t) = cli.trials {
                cfg.trials = t;
            }
            if let Some(o) = cli.out {
                cfg.out = o;
            }
            if let Some(t) = cli.threads {
                cfg.threads = t;
            }
            cfg.validate().with_context(|| format!("config {}", path.display()))?;
            let result = run_trials(&cfg)?;
            persist(&result, &cfg.out)?;
            println!("{}", serde_json::to_string(&result.summary)?);
            eprintln!(
                "records appended to {}, summary to {}",
                cfg.out.display(),
                summary_path(&cfg.out).display()
            );
        }
        Command::Selftest => {
            let mut all = true;
            for c in selftest() {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                all &= c.passed;
            }
            return Ok(all);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
