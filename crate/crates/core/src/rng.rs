//! Random-stream discipline.
//!
//! A master seed plus a (drop, purpose) pair addresses an independent ChaCha
//! stream, so any drop can be reproduced in isolation and results do not
//! depend on worker count or execution order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha12Rng;

/// Sub-stream purposes within one drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Geometry = 0,
    Shadowing = 1,
    LosState = 2,
    Fading = 3,
}

const STREAMS_PER_DROP: u64 = 8;

pub fn stream(seed: u64, drop_index: usize, purpose: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(drop_index as u64 * STREAMS_PER_DROP + purpose as u64);
    rng
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
