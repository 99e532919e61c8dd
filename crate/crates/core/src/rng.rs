//! Seed derivation and random streams.
//!
//! Every trial owns a ChaCha8 generator keyed by a 64-bit trial seed. Patient
//! `i` consumes exactly four uniforms (stage-one allocation, infection,
//! stage-two allocation, death) from positions `4i..4i+4` of stream 0,
//! whether or not it reaches stage two. Two designs run with the same trial
//! seed therefore see the same uniforms patient by patient (common random
//! numbers). MCMC fits draw from separately derived seeds so they never
//! disturb the patient stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn combine(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED_5EED_5EED_5EED, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Seed of one sweep trial.
///
/// Depends on the scenario and replicate but not on the design, so the four
/// designs of a `(scenario, replicate)` pair are compared on common random
/// numbers.
pub fn trial_seed(base_seed: u64, scenario_index: usize, replicate: usize) -> u64 {
    combine(&[base_seed, scenario_index as u64, replicate as u64])
}

/// Seed for the MCMC fit of `stage` at interim `analysis` of a trial.
pub fn analysis_seed(trial_seed: u64, analysis: usize, stage: u8) -> u64 {
    combine(&[trial_seed, 0x4D43_4D43, analysis as u64, stage as u64])
}

/// The patient-level generator of a trial.
pub fn patient_stream(trial_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed)
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
