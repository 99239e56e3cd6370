//! Learning from noisy quantum Fourier samples.
//!
//! A simulated quantum device emits strings `s` with probability `ĝ(s)²`
//! (where `g = 1 − 2f`), corrupted by bit-flip, depolarizing or correlated
//! block noise. [`rectify`](rectify::rectify) recovers every heavy string
//! from such samples, [`spectral`] turns that into an agnostic parity
//! learner, and [`protocol`] wraps it in a one-round classical verifier that
//! checks an untrusted prover's samples with random examples.

pub mod bits;
pub mod boolfn;
pub mod error;
pub mod harness;
pub mod noise;
pub mod oracles;
pub mod protocol;
pub mod rectify;
pub mod seed;
pub mod spectral;
pub mod wht;

pub use bits::BitString;
pub use boolfn::{BooleanFunction, FourierSpectrum, TruthTable};
pub use error::{Error, Result};
pub use noise::NoiseChannel;
pub use spectral::Target;
