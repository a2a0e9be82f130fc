// SPDX-License-Identifier: MIT OR Apache-2.0

//! Stable seed derivation.
//!
//! Seeds are derived by hashing a master seed together with labels and
//! counters, so any sub-computation can be reproduced on its own without
//! replaying a shared random stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Component of a derived seed.
#[derive(Clone, Copy, Debug)]
pub enum Part<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(s: &'a str) -> Self {
        Part::Str(s)
    }
}

impl From<u64> for Part<'_> {
    fn from(v: u64) -> Self {
        Part::Int(v)
    }
}

impl From<usize> for Part<'_> {
    fn from(v: usize) -> Self {
        Part::Int(v as u64)
    }
}

pub fn derive_seed(master: u64, parts: &[Part<'_>]) -> u64 {
    let mut state = mix64(master.wrapping_add(GOLDEN));
    for part in parts {
        let v = match *part {
            Part::Str(s) => fnv1a(s.as_bytes()),
            Part::Int(i) => i,
        };
        state = mix64(state ^ mix64(v.wrapping_add(GOLDEN)));
    }
    state
}

/// Generator for one `(seed, index)` pair. The index selects the ChaCha
/// stream, so per-index draws do not depend on iteration order.
pub fn index_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
