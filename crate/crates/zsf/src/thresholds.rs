//! Shared threshold arithmetic: the exact vector counts each solver
//! requires for its guarantee. Everything is computed over exact
//! rationals or big integers; ceilings are applied once, where a count of
//! vectors is allocated. Tests and the CLI both read from here.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::field::Modulus;

pub use crate::derand::density_ratio;

/// Smallest integer >= x, as an unsigned integer (x must be >= 0).
pub fn ceil_to_uint(x: &BigRational) -> BigUint {
    assert!(!x.is_negative());
    x.ceil().to_integer().to_biguint().expect("nonnegative")
}

/// Smallest d >= 0 with 2^d >= x.
pub fn ceil_log2_ratio(x: &BigRational) -> u32 {
    let mut d = 0u32;
    let mut pow = BigRational::one();
    let two = BigRational::from_integer(2.into());
    while pow < *x {
        pow *= &two;
        d += 1;
    }
    d
}

/// The unique integer power of two in (q/4, floor(q/2)].
pub fn power_of_two_for_unit_norm(m: &Modulus) -> u64 {
    let q = m.q();
    let mut k = 1u64;
    let four_k = |k: u64| BigUint::from(4 * k);
    while four_k(k) <= *q {
        k *= 2;
    }
    // now 4k > q, i.e. k > q/4; k <= floor(q/2) holds since 4(k/2) <= q
    // gave 2k <= q.
    k
}

/// Number of vectors for a (+-floor(q/4))-zero-sum:
/// ceil(rho * n(n+1)/2 + r(n+1)).
pub fn sis_quarter(m: &Modulus, n: usize, r: usize) -> BigUint {
    let rho = density_ratio(m, r);
    let n_big = BigInt::from(n);
    let pairs = BigRational::from_integer(&n_big * (&n_big + 1)) / BigRational::from_integer(2.into());
    let extra = BigRational::from_integer(BigInt::from(r) * (&n_big + 1));
    ceil_to_uint(&(rho * pairs + extra))
}

/// Number of vectors for a (+-floor(q/(2k)))-zero-sum with k a power of
/// two: the quarter threshold, squared once per halving.
pub fn sis_power2(m: &Modulus, n: usize, k: u64, r: usize) -> Result<BigUint> {
    validate_power2_k(m, k)?;
    let mut t = sis_quarter(m, n, r);
    let mut kk = k;
    while kk > 2 {
        t = &t * &t;
        kk /= 2;
    }
    Ok(t)
}

pub fn validate_power2_k(m: &Modulus, k: u64) -> Result<()> {
    if k < 2 || !k.is_power_of_two() {
        return Err(Error::BadK(format!("{k} is not a power of two >= 2")));
    }
    if BigUint::from(k) > *m.half() {
        return Err(Error::BadK(format!("k = {k} exceeds floor(q/2)")));
    }
    Ok(())
}

/// Closed-form vector requirement of the one-shot short-solution
/// guarantee:
/// (k-1)^((k-1)(k-2)/2) * (n+k)^k.
pub fn one_shot_closed(n: usize, k: usize) -> BigUint {
    let base = BigUint::from(k - 1);
    let exp = ((k - 1) * (k - 2) / 2) as u32;
    base.pow(exp) * BigUint::from(n + k).pow(k as u32)
}

/// Closed-form vector requirement of the centered-constraint
/// guarantee:
/// k^(k(k-1)/2) * (n+k+1)^(k+1).
pub fn centered_closed(n: usize, k: usize) -> BigUint {
    BigUint::from(k).pow((k * (k - 1) / 2) as u32) * BigUint::from(n + k + 1).pow(k as u32 + 1)
}

/// Pool sizes m_1..m_{k+1} for the forest construction, given the start
/// algorithm's input-size and sparsity profiles per dimension. Returns
/// m_{k+1}, the number of depth-(k+1) nodes (input vectors) needed.
pub fn forest_pool_need(
    n: usize,
    k: usize,
    input_size: impl Fn(usize) -> usize,
    sparsity: impl Fn(usize) -> usize,
) -> BigUint {
    let mut m_ell = BigUint::one();
    for ell in 2..=(k + 1) {
        let dim = pow_usize(k, k + 1 - ell) * n;
        let s = BigUint::from(sparsity(dim));
        let m = BigUint::from(input_size(dim));
        m_ell = (m_ell - BigUint::one()) * s + m;
    }
    m_ell
}

fn pow_usize(base: usize, exp: usize) -> usize {
    base.checked_pow(exp as u32).expect("dimension overflow")
}

/// Exact vector need of the one-shot pipeline: input-size(n) batches of
/// the forest pool size, with the start profile m(d) = s(d) = d + k.
pub fn one_shot_need(n: usize, k: usize) -> BigUint {
    let prof = move |d: usize| d + k;
    BigUint::from(prof(n)) * forest_pool_need(n, k - 1, prof, prof)
}

/// Exact vector need of the centered pipeline, start profile
/// m(d) = s(d) = d + k + 1.
pub fn centered_need(n: usize, k: usize) -> BigUint {
    let prof = move |d: usize| d + k + 1;
    BigUint::from(prof(n)) * forest_pool_need(n, k, prof, prof)
}

/// Batch count for the affine transfer: d = ceil(log2(q / eps)).
pub fn affine_batches(m: &Modulus, eps: &BigRational) -> u32 {
    let q = BigRational::from_integer(BigInt::from(m.q().clone()));
    ceil_log2_ratio(&(q / eps))
}

/// Batch count pinned for the ternary-group pipeline: per-chunk failure
/// at most 1/100, so d = ceil(log2(100 q)).
pub fn group_batches(m: &Modulus) -> u32 {
    let q = BigRational::from_integer(BigInt::from(m.q().clone()));
    ceil_log2_ratio(&(q * BigRational::from_integer(100.into())))
}

/// Chernoff-backed number of chunks to attempt so that, with per-chunk
/// success 0.99, at least `groups` chunks succeed with probability
/// 1 - eps: ceil(g * (1 + ln(1/eps)/g + sqrt(3 ln(1/eps) / g))).
pub fn chunk_count(groups: &BigUint, eps: &BigRational) -> BigUint {
    let g = groups.to_f64().unwrap_or(f64::MAX);
    let le = (BigRational::one() / eps).to_f64().unwrap_or(f64::MAX).ln().max(0.0);
    let n = g * (1.0 + le / g + (3.0 * le / g).sqrt());
    if n.is_finite() {
        BigUint::from(n.ceil() as u128)
    } else {
        groups * BigUint::from(2u32)
    }
}

/// Documented threshold of the averaged subset-sum solver built on the
/// halving engine.
pub fn subset_sum_random(m: &Modulus, n: usize, r: usize, eps: &BigRational) -> Result<BigUint> {
    let k = power_of_two_for_unit_norm(m);
    let engine = sis_power2(m, n, k, r)?;
    let d = BigUint::from(group_batches(m));
    let chunk = &d * &engine + BigUint::one();
    Ok(chunk_count(&engine, eps) * chunk)
}

/// Documented threshold of the averaged subset-sum solver built on the
/// one-shot engine (k = floor((q+3)/4), so the engine emits unit-norm
/// zero-sums).
pub fn subset_sum_improved(m: &Modulus, n: usize, eps: &BigRational) -> Result<BigUint> {
    let k = unit_norm_k(m)?;
    let engine = one_shot_need(n, k);
    let d = BigUint::from(group_batches(m));
    let chunk = &d * &engine + BigUint::one();
    Ok(chunk_count(&engine, eps) * chunk)
}

/// k = floor((q+3)/4); requires q >= 5 and guarantees floor(q/(2k)) = 1.
pub fn unit_norm_k(m: &Modulus) -> Result<usize> {
    let q = m
        .q()
        .to_u64()
        .ok_or_else(|| Error::PreconditionViolated("averaged pipelines need q to fit in u64".into()))?;
    if q < 5 {
        return Err(Error::PreconditionViolated("need q >= 5".into()));
    }
    Ok(q.div_ceil(4) as usize)
}

/// Documented threshold of the two-element-set solver: d' independent
/// subset runs, each at failure eps/(2 d').
pub fn size_two(m: &Modulus, n: usize, eps: &BigRational) -> Result<BigUint> {
    let q = BigRational::from_integer(BigInt::from(m.q().clone()));
    let d = ceil_log2_ratio(&(q * BigRational::from_integer(2.into()) / eps));
    let inner_eps = eps / BigRational::from_integer(BigInt::from(2 * d as u64));
    let inner = subset_sum_improved(m, n, &inner_eps)?;
    Ok(BigUint::from(d) * inner + BigUint::one())
}

/// Documented per-case threshold of the full constrained-solution
/// dispatch, for co-size c (worst case over allowed sets of that size).
pub fn cis_full(m: &Modulus, n: usize, c: usize, eps: &BigRational) -> Result<BigUint> {
    let q = m
        .q()
        .to_u64()
        .ok_or_else(|| Error::PreconditionViolated("dispatch needs q to fit in u64".into()))? as usize;
    if c < 1 || c > q - 2 {
        return Err(Error::PreconditionViolated(format!("co-size {c} outside [1, q-2]")));
    }
    let d = BigUint::from(affine_batches(m, eps));
    if q == 3 {
        // c = 1: worst-case binary solver behind an affine transfer.
        let inner = crate::f3::f3_threshold(n, crate::f3::F3Strategy::Main);
        return Ok(d * inner + BigUint::one());
    }
    if c == 1 {
        return Ok(&d * centered_need(n, 1) + BigUint::one());
    }
    if 2 * c < q {
        // antipodal-hole case; worst-case pair count is c - 1
        return Ok(&d * centered_need(n, c - 1) + BigUint::one());
    }
    if 2 * c == q + 1 && q >= 11 {
        // three-term-progression case
        let k = unit_norm_k(m)?;
        return Ok(&d * one_shot_need(n, k) + BigUint::one());
    }
    // remaining large-c cases reduce to a two-element subset of B
    size_two(m, n, eps)
}
