//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator whose 256-bit key is the tuple of
//! four 64-bit words passed in, so draws depend only on the key and never on
//! evaluation order.

use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Number of tensor entries drawn from one keyed block.
pub const TENSOR_BLOCK: usize = 4096;

pub(crate) const TAG_TENSOR: u64 = 0x7465_6e73_6f72_0001;
pub(crate) const TAG_DESCENT: u64 = 0x6465_7363_656e_0002;
pub(crate) const TAG_CHAIN: u64 = 0x6368_6169_6e00_0003;
pub(crate) const TAG_NEWTON: u64 = 0x6e65_7774_6f6e_0004;

/// Generator keyed by four words.
pub fn keyed(key: [u64; 4]) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (chunk, word) in seed.chunks_exact_mut(8).zip(key.iter()) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent seed from a parent seed and a task index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Fill `out` with i.i.d. standard normals for coupling order `order`.
///
/// Entry `i` is drawn from block `i / TENSOR_BLOCK`, whose generator is keyed
/// by `(seed, order, block)`; blocks can be generated in any order.
pub fn fill_tensor_normals(seed: u64, order: u64, out: &mut [f64]) {
    for (block, chunk) in out.chunks_mut(TENSOR_BLOCK).enumerate() {
        fill_tensor_block(seed, order, block as u64, chunk);
    }
}

pub fn fill_tensor_block(seed: u64, order: u64, block: u64, chunk: &mut [f64]) {
    let mut rng = keyed([seed, order, block, TAG_TENSOR]);
    for v in chunk.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the sphere `|x|^2 = radius_sq`.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, radius_sq: f64) -> Vec<f64> {
    loop {
        let mut g = normal_vec(rng, n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = radius_sq.sqrt() / norm;
            g.iter_mut().for_each(|v| *v *= s);
            return g;
        }
    }
}
