//! Deterministic uniform instance generation: residues are drawn by
//! rejection sampling on 64-bit chunks, so the stream depends only on
//! (seed, q, n, m) and not on the platform.

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::field::{Modulus, Residue};
use crate::linalg::{FieldVec, VecFamily};

/// Uniform residue sampler over `[0, q)`.
pub struct UniformSampler<'a> {
    modulus: &'a Modulus,
    rng: ChaCha20Rng,
    words: usize,
    limit: BigUint, // largest multiple of q below 2^(64*words)
}

impl<'a> UniformSampler<'a> {
    pub fn new(modulus: &'a Modulus, seed: u64) -> Self {
        let bits = modulus.q().bits();
        let words = bits.div_ceil(64).max(1) as usize;
        let space = BigUint::from(1u8) << (64 * words as u64);
        let limit = &space - &space % modulus.q();
        UniformSampler { modulus, rng: ChaCha20Rng::seed_from_u64(seed), words, limit }
    }

    pub fn draw(&mut self) -> Residue {
        loop {
            let mut digits = Vec::with_capacity(self.words * 2);
            for _ in 0..self.words {
                let w = self.rng.next_u64();
                digits.push(w as u32);
                digits.push((w >> 32) as u32);
            }
            let x = BigUint::new(digits);
            if x < self.limit {
                return self.modulus.residue(&x);
            }
        }
    }

    pub fn draw_vector(&mut self, n: usize) -> FieldVec {
        FieldVec::new((0..n).map(|_| self.draw()).collect())
    }
}

/// A uniform family of m vectors in F_q^n, a deterministic function of
/// (seed, q, n, m).
pub fn uniform_family(modulus: &Modulus, seed: u64, n: usize, m: usize) -> VecFamily {
    let mut sampler = UniformSampler::new(modulus, seed);
    let vectors = (0..m).map(|_| sampler.draw_vector(n)).collect();
    VecFamily::new(modulus.clone(), n, vectors).expect("dimensions consistent by construction")
}
