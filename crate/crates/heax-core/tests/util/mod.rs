#![allow(dead_code)] // shared across test binaries that each use a subset

//! Shared oracle helpers for the integration test suites.

use num_bigint::BigInt;

/// Exact negacyclic product of two signed integer polynomials in `i128`
/// (coefficients up to 2^24 at degree 2^14 stay well inside range).
pub fn negacyclic_i128(a: &[i64], b: &[i64]) -> Vec<i128> {
    let n = a.len();
    assert_eq!(n, b.len());
    let mut c = vec![0i128; n];
    for i in 0..n {
        let ai = a[i] as i128;
        if ai == 0 {
            continue;
        }
        for j in 0..n {
            let prod = ai * b[j] as i128;
            let k = i + j;
            if k < n {
                c[k] += prod;
            } else {
                c[k - n] -= prod;
            }
        }
    }
    c
}

/// Floored division for a positive divisor.
pub fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a / b;
    if (a - &q * b).sign() == num_bigint::Sign::Minus {
        q - 1
    } else {
        q
    }
}

/// Round-half-up division for a positive divisor.
pub fn round_div(x: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    floor_div(&(x * &two + d), &(d * &two))
}

/// Representative of `x mod q` in `(-q/2, q/2]`.
pub fn centered_mod(x: &BigInt, q: &BigInt) -> BigInt {
    let mut r = x % q;
    if r.sign() == num_bigint::Sign::Minus {
        r += q;
    }
    if &r * 2 > *q {
        r -= q;
    }
    r
}

pub fn max_abs_bigint(v: &[BigInt]) -> BigInt {
    v.iter()
        .map(|x| BigInt::from(x.magnitude().clone()))
        .max()
        .unwrap_or_else(|| BigInt::from(0))
}
