//! Exact modular arithmetic over an odd prime modulus.
//!
//! Residues are stored canonically in `[0, q)`; the balanced view
//! `{-floor(q/2), ..., floor(q/2)}` is a lift function, never a second
//! storage format, so equality tests have a single canonical form.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// A canonical element of `F_q`, always in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Residue(BigUint);

impl Residue {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl std::fmt::Display for Residue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// An odd prime modulus plus the arithmetic on its residues.
///
/// Primality is verified at construction: deterministic Miller-Rabin bases
/// for q < 2^64, and 40 fixed-seed witness rounds above that (error
/// probability at most 4^-40 <= 2^-80).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modulus {
    q: BigUint,
    half: BigUint, // floor(q/2)
    q64: Option<u64>,
}

impl Modulus {
    pub fn new(q: BigUint) -> Result<Self> {
        let three = BigUint::from(3u32);
        if q < three || q.is_even() || !check_prime(&q) {
            return Err(Error::NotPrime(q));
        }
        let half = &q >> 1;
        let q64 = q.to_u64();
        Ok(Modulus { q, half, q64 })
    }

    pub fn from_u64(q: u64) -> Result<Self> {
        Self::new(BigUint::from(q))
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// floor(q/2), the largest balanced lift.
    pub fn half(&self) -> &BigUint {
        &self.half
    }

    pub fn zero(&self) -> Residue {
        Residue(BigUint::zero())
    }

    pub fn one(&self) -> Residue {
        Residue(BigUint::one())
    }

    /// Reduce an arbitrary nonnegative integer into `[0, q)`.
    pub fn residue(&self, x: &BigUint) -> Residue {
        Residue(x % &self.q)
    }

    pub fn residue_u64(&self, x: u64) -> Residue {
        if let Some(q) = self.q64 {
            return Residue(BigUint::from(x % q));
        }
        self.residue(&BigUint::from(x))
    }

    /// Reduce a signed integer into `[0, q)`.
    pub fn residue_int(&self, x: &BigInt) -> Residue {
        let q = BigInt::from(self.q.clone());
        let r = x.mod_floor(&q);
        Residue(r.to_biguint().expect("mod_floor is nonnegative"))
    }

    pub fn residue_i64(&self, x: i64) -> Residue {
        self.residue_int(&BigInt::from(x))
    }

    pub fn add(&self, a: &Residue, b: &Residue) -> Residue {
        if let Some(q) = self.q64 {
            let s = (a.0.to_u64().unwrap() as u128 + b.0.to_u64().unwrap() as u128) % q as u128;
            return Residue(BigUint::from(s as u64));
        }
        let mut s = &a.0 + &b.0;
        if s >= self.q {
            s -= &self.q;
        }
        Residue(s)
    }

    pub fn sub(&self, a: &Residue, b: &Residue) -> Residue {
        if let Some(q) = self.q64 {
            let (av, bv) = (a.0.to_u64().unwrap(), b.0.to_u64().unwrap());
            let r = if av >= bv { av - bv } else { q - bv + av };
            return Residue(BigUint::from(r));
        }
        if a.0 >= b.0 {
            Residue(&a.0 - &b.0)
        } else {
            Residue(&self.q - &b.0 + &a.0)
        }
    }

    pub fn neg(&self, a: &Residue) -> Residue {
        if a.0.is_zero() {
            Residue(BigUint::zero())
        } else {
            Residue(&self.q - &a.0)
        }
    }

    pub fn mul(&self, a: &Residue, b: &Residue) -> Residue {
        if let Some(q) = self.q64 {
            let p = (a.0.to_u64().unwrap() as u128 * b.0.to_u64().unwrap() as u128) % q as u128;
            return Residue(BigUint::from(p as u64));
        }
        Residue(&a.0 * &b.0 % &self.q)
    }

    /// Balanced lift b with |b| <= floor(q/2) and b = x (mod q).
    pub fn balanced_lift(&self, x: &Residue) -> BigInt {
        if x.0 <= self.half {
            BigInt::from(x.0.clone())
        } else {
            BigInt::from(x.0.clone()) - BigInt::from(self.q.clone())
        }
    }

    /// |balanced lift|, as an unsigned integer.
    pub fn lift_abs(&self, x: &Residue) -> BigUint {
        if x.0 <= self.half {
            x.0.clone()
        } else {
            &self.q - &x.0
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inverse(&self, x: &Residue) -> Result<Residue> {
        if x.0.is_zero() {
            return Err(Error::NonInvertible);
        }
        if let Some(q) = self.q64 {
            let (mut r0, mut r1) = (q as i128, x.0.to_u64().unwrap() as i128);
            let (mut t0, mut t1) = (0i128, 1i128);
            while r1 != 0 {
                let d = r0 / r1;
                (r0, r1) = (r1, r0 - d * r1);
                (t0, t1) = (t1, t0 - d * t1);
            }
            debug_assert_eq!(r0, 1);
            let t = t0.rem_euclid(q as i128) as u64;
            return Ok(Residue(BigUint::from(t)));
        }
        let a = BigInt::from(x.0.clone());
        let q = BigInt::from(self.q.clone());
        let ext = a.extended_gcd(&q);
        debug_assert!(ext.gcd.is_one(), "modulus is prime and x is nonzero");
        Ok(self.residue_int(&ext.x))
    }

    pub fn div(&self, a: &Residue, b: &Residue) -> Result<Residue> {
        Ok(self.mul(a, &self.inverse(b)?))
    }
}

/// Primality check: deterministic for q < 2^64, probabilistic with fixed
/// seed witnesses (40 rounds) above.
pub fn check_prime(q: &BigUint) -> bool {
    if q < &BigUint::from(2u32) {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if q == &p {
            return true;
        }
        if (q % &p).is_zero() {
            return false;
        }
    }
    if q.bits() <= 64 {
        // These twelve bases decide primality for all q < 2^64.
        miller_rabin(q, [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37].iter().map(|&b| BigUint::from(b)))
    } else {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x5a5f_5052494d45);
        let span = q - BigUint::from(3u32); // witnesses drawn from [2, q-2]
        let bytes = span.bits().div_ceil(8) as usize + 8;
        let witnesses: Vec<BigUint> = (0..40)
            .map(|_| {
                let mut buf = vec![0u8; bytes];
                rng.fill_bytes(&mut buf);
                BigUint::from_bytes_le(&buf) % &span + BigUint::from(2u32)
            })
            .collect();
        miller_rabin(q, witnesses.into_iter())
    }
}

fn miller_rabin(q: &BigUint, witnesses: impl Iterator<Item = BigUint>) -> bool {
    let one = BigUint::one();
    let n_minus_1 = q - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for a in witnesses {
        let a = a % q;
        if a.is_zero() || a.is_one() {
            continue;
        }
        let mut x = a.modpow(&d, q);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % q;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn m(q: u64) -> Modulus {
        Modulus::from_u64(q).unwrap()
    }

    #[test]
    fn balanced_lift_examples() {
        let m7 = m(7);
        assert_eq!(m7.balanced_lift(&m7.residue_u64(5)), BigInt::from(-2));
        assert_eq!(m7.balanced_lift(&m7.residue_u64(3)), BigInt::from(3));
        let m101 = m(101);
        assert_eq!(m101.balanced_lift(&m101.residue_u64(0)), BigInt::from(0));
    }

    #[test]
    fn balanced_lift_exhaustive_small_q() {
        for q in [3u64, 5, 7, 31, 101, 9973] {
            let mq = m(q);
            for x in 0..q {
                let r = mq.residue_u64(x);
                let b = mq.balanced_lift(&r);
                assert!(b.magnitude() <= mq.half());
                assert_eq!(mq.residue_int(&b), r);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let m7 = m(7);
        assert_eq!(m7.inverse(&m7.residue_u64(3)).unwrap(), m7.residue_u64(5));
        let m5 = m(5);
        assert_eq!(m5.inverse(&m5.residue_u64(1)).unwrap(), m5.residue_u64(1));
        assert_eq!(m5.inverse(&m5.residue_u64(0)), Err(Error::NonInvertible));
    }

    #[test]
    fn inverse_involutive() {
        let mq = m(97);
        for x in 1..97u64 {
            let r = mq.residue_u64(x);
            let inv = mq.inverse(&r).unwrap();
            assert_eq!(mq.inverse(&inv).unwrap(), r);
            assert_eq!(mq.mul(&r, &inv), mq.one());
        }
    }

    #[test]
    fn primality() {
        assert!(check_prime(&BigUint::from(7u32)));
        assert!(!check_prime(&BigUint::from(9u32)));
        // 2^61 - 1 is a Mersenne prime; cross-check with Lucas-Lehmer,
        // an independent primality route for Mersenne numbers.
        let m61 = (BigUint::one() << 61) - BigUint::one();
        assert!(check_prime(&m61));
        assert!(lucas_lehmer(61));
        assert!(!lucas_lehmer(67)); // 2^67 - 1 is composite
        assert!(!check_prime(&((BigUint::one() << 61) + BigUint::one())));
        // A large prime (2^89 - 1, Mersenne) goes through the witness path.
        let m89 = (BigUint::one() << 89) - BigUint::one();
        assert!(check_prime(&m89));
        assert!(!check_prime(&(m89 + BigUint::from(2u32))));
    }

    fn lucas_lehmer(p: u32) -> bool {
        let m = (BigUint::one() << p) - BigUint::one();
        let mut s = BigUint::from(4u32);
        for _ in 0..p - 2 {
            s = (&s * &s + (&m - BigUint::from(2u32))) % &m;
        }
        s.is_zero()
    }

    #[test]
    fn modulus_rejects_bad_q() {
        assert!(Modulus::from_u64(2).is_err());
        assert!(Modulus::from_u64(9).is_err());
        assert!(Modulus::from_u64(1).is_err());
        assert!(Modulus::from_u64(3).is_ok());
    }
}
