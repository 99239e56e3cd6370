use std::time::Instant;

use qfs_core::boolfn::{gen_ftau, BooleanFunction, TruthTable};
use qfs_core::oracles::QfsSimulator;
use qfs_core::protocol::{
    completeness_trial, verifier_run, Adversary, AdversaryKind, Outcome, RejectReason, VerifierParams,
};
use qfs_core::seed::derive_seed;
use qfs_core::{BitString, NoiseChannel, Target};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn honest_parity_is_learned() {
    let s: BitString = "1011000110".parse().unwrap();
    let target = Target::new(BooleanFunction::parity(&s)).unwrap();
    let params = VerifierParams::new(10, 0.5, 0.45, 0.2).unwrap();
    let good = (0..200)
        .filter(|&i| {
            let t = completeness_trial(&params, &target, NoiseChannel::noiseless(), i).unwrap();
            t.outcome == Outcome::Accepted { s0: s.clone() }
        })
        .count();
    assert!(good >= 160, "{good}/200");
}

#[test]
fn all_zero_prover_fails_validation() {
    let f = BooleanFunction::junta(10, vec![2, 6], TruthTable::new(2, vec![false, false, false, true]).unwrap()).unwrap();
    let target = Target::new(f).unwrap();
    let params = VerifierParams::new(10, 0.5, 0.45, 0.2).unwrap();
    let rejected = (0..200u64)
        .filter(|&i| {
            let mut prover = Adversary::new(AdversaryKind::Constant, &target, NoiseChannel::noiseless(), i).unwrap();
            let (o, _) = verifier_run(&params, &target.f, &mut prover, derive_seed(i, 1)).unwrap();
            o == Outcome::Rejected {
                reason: RejectReason::ValidationFailed,
            }
        })
        .count();
    assert!(rejected >= 160, "{rejected}/200");
}

#[test]
fn batch_sampling_is_fast() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = gen_ftau(16, 4, 0.125, &mut rng).unwrap();
    let sim = QfsSimulator::new(&f.spectrum().unwrap(), NoiseChannel::bit_flip(0.02).unwrap()).unwrap();
    let start = Instant::now();
    let batch = sim.sample_batch(10_000, &mut rng).unwrap();
    assert_eq!(batch.len(), 10_000);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}
