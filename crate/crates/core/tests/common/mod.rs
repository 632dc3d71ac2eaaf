//! Exact-arithmetic reference computations shared by the integration tests.
//! Nothing here calls into the crate's numeric code.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn choose(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn choose_q(n: u64, k: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(choose(n, k)))
}

/// Natural log of a positive big integer to double precision.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Correctly-scaled conversion of a nonnegative rational to f64.
pub fn to_f64(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let num = q.numer().magnitude().clone();
    let den = q.denom().magnitude().clone();
    let shift = 80i64 + den.bits() as i64 - num.bits() as i64;
    let quotient = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    quotient.to_f64().unwrap() * 2f64.powi(-shift as i32)
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow(q: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = q.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Binomial(m, p) mass at j with rational p.
pub fn binom_pmf_q(m: u64, p: &BigRational, j: u64) -> BigRational {
    if j > m {
        return BigRational::zero();
    }
    choose_q(m, j) * pow(p, j) * pow(&(BigRational::one() - p), m - j)
}

/// Hypergeometric P(a | A) for a sample of n from N, exactly.
pub fn hypergeom_q(population: u64, marked: u64, sample: u64, observed: u64) -> BigRational {
    if observed > marked || observed > sample || sample - observed > population - marked {
        return BigRational::zero();
    }
    choose_q(marked, observed) * choose_q(population - marked, sample - observed)
        / choose_q(population, sample)
}

/// Exact posterior table p(A | a) ∝ P(a | A) prior(A).
pub fn posterior_q(
    prior: &[BigRational],
    population: u64,
    sample: u64,
    observed: u64,
) -> Vec<BigRational> {
    let joint: Vec<BigRational> = prior
        .iter()
        .enumerate()
        .map(|(a, p)| hypergeom_q(population, a as u64, sample, observed) * p)
        .collect();
    let total = joint.iter().fold(BigRational::zero(), |acc, x| acc + x);
    joint.into_iter().map(|x| x / &total).collect()
}

/// Counts samples (as bitmasks over `population` items, items `0..marked`
/// carrying the attribute) of size `sample` with exactly `observed` marked.
pub fn enumerate_samples(population: u32, marked: u32, sample: u32, observed: u32) -> (u64, u64) {
    let marked_mask: u64 = (1u64 << marked) - 1;
    let mut hits = 0;
    let mut total = 0;
    for s in 0u64..(1u64 << population) {
        if s.count_ones() != sample {
            continue;
        }
        total += 1;
        if (s & marked_mask).count_ones() == observed {
            hits += 1;
        }
    }
    (hits, total)
}

pub fn assert_close(actual: f64, expected: f64, rel: f64, what: &str) {
    let scale = expected.abs().max(f64::MIN_POSITIVE);
    assert!(
        (actual - expected).abs() <= rel * scale,
        "{what}: got {actual:e}, expected {expected:e} (rel tol {rel:e})"
    );
}
