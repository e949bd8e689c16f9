//! Word-level modular arithmetic with a configurable word size `w`.
//!
//! The word size models the native multiplier width of the target machine:
//! 54 bits for the production parameter sets (two 27-bit DSP multipliers),
//! anything in `8..=63` for tests so that exhaustive sweeps stay cheap.
//! All moduli must satisfy `p < 2^(w-2)`, which is what makes the
//! single-correction Shoup multiplication below sound.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModArithError {
    #[error("not invertible")]
    NotInvertible,
    #[error("insufficient primes")]
    InsufficientPrimes,
    #[error("modulus not congruent to 1 mod 2n")]
    NotNttFriendly,
    #[error("no root")]
    NoRoot,
}

/// A word-sized prime with its Barrett precomputation.
///
/// Invariants: `p` is prime, `p < 2^(w-2)`, and
/// `barrett_u * p <= 2^(2w) < (barrett_u + 1) * p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    p: u64,
    w: u32,
    barrett_u: u128,
}

impl Modulus {
    /// Builds a modulus for word size `w`, precomputing `u = floor(2^(2w) / p)`.
    ///
    /// Panics if `w` is out of `8..=63`, if `p >= 2^(w-2)`, or (debug builds
    /// only) if `p` is not prime.
    pub fn new(p: u64, w: u32) -> Self {
        assert!((8..=63).contains(&w), "word size must be in 8..=63");
        assert!(p >= 2, "modulus must be at least 2");
        assert!(
            (p as u128) < (1u128 << (w - 2)),
            "modulus must be below 2^(w-2)"
        );
        debug_assert!(is_prime_u64(p), "modulus must be prime");
        let barrett_u = (1u128 << (2 * w)) / (p as u128);
        Modulus { p, w, barrett_u }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn word_bits(&self) -> u32 {
        self.w
    }

    #[inline]
    pub fn barrett_u(&self) -> u128 {
        self.barrett_u
    }

    /// Bit length of the prime itself.
    #[inline]
    pub fn bits(&self) -> u32 {
        64 - self.p.leading_zeros()
    }
}

/// A constant operand `y` together with `y' = floor(y * 2^w / p)`.
///
/// Invariant: `y_shoup * p <= y * 2^w < (y_shoup + 1) * p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShoupPair {
    pub y: u64,
    pub y_shoup: u64,
}

/// Precomputes the Shoup companion of `y` for later [`mul_red`] calls.
#[inline]
pub fn precompute_shoup(y: u64, m: &Modulus) -> ShoupPair {
    debug_assert!(y < m.p);
    let y_shoup = (((y as u128) << m.w) / (m.p as u128)) as u64;
    ShoupPair { y, y_shoup }
}

/// Barrett reduction of a double-word value into `[0, p)`. The estimate
/// `q = floor(x * u / 2^(2w))` is off by at most one for any `x < 2^(2w)`,
/// which covers the contract domain `x <= (p-1)^2`.
#[inline]
pub fn barrett_reduce(x: u128, m: &Modulus) -> u64 {
    debug_assert!(x < (1u128 << (2 * m.w)));
    let q = mul_shift_right(x, m.barrett_u, 2 * m.w);
    let mut r = x - q * (m.p as u128);
    // q >= floor(x / p) - 1, so a single correction suffices.
    debug_assert!(r < 2 * (m.p as u128));
    if r >= m.p as u128 {
        r -= m.p as u128;
    }
    r as u64
}

/// Shoup modular multiplication `x * y mod p` for `x, y in [0, p)`,
/// `p < 2^(w-2)`, with `y` carried as a precomputed [`ShoupPair`].
///
/// The five-step sequence: low product, high product against `y'`, error
/// term, single-word subtraction, one conditional correction.
#[inline]
pub fn mul_red(x: u64, sp: ShoupPair, m: &Modulus) -> u64 {
    debug_assert!(x < m.p && sp.y < m.p);
    let mask = word_mask(m.w);
    let z = ((x as u128 * sp.y as u128) as u64) & mask;
    let t = ((x as u128 * sp.y_shoup as u128) >> m.w) as u64;
    let z_eps = ((t as u128 * m.p as u128) as u64) & mask;
    let z = z.wrapping_sub(z_eps) & mask;
    // The estimate t is off by at most one, so z < 2p before the correction.
    debug_assert!(z < 2 * m.p);
    if z >= m.p {
        z - m.p
    } else {
        z
    }
}

/// `x * y mod p` for two variable operands, via Barrett reduction of the
/// double-word product.
#[inline]
pub fn mul_mod(x: u64, y: u64, m: &Modulus) -> u64 {
    barrett_reduce(x as u128 * y as u128, m)
}

#[inline]
pub fn add_mod(x: u64, y: u64, m: &Modulus) -> u64 {
    debug_assert!(x < m.p && y < m.p);
    let s = x + y;
    if s >= m.p {
        s - m.p
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(x: u64, y: u64, m: &Modulus) -> u64 {
    debug_assert!(x < m.p && y < m.p);
    if x >= y {
        x - y
    } else {
        x + m.p - y
    }
}

#[inline]
pub fn neg_mod(x: u64, m: &Modulus) -> u64 {
    debug_assert!(x < m.p);
    if x == 0 {
        0
    } else {
        m.p - x
    }
}

/// Square-and-multiply exponentiation.
pub fn pow_mod(x: u64, e: u64, m: &Modulus) -> u64 {
    debug_assert!(x < m.p);
    let mut base = x;
    let mut acc: u64 = 1 % m.p;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// Inverse of `x` modulo the prime `p`. Fails on `x = 0`.
pub fn inv_mod(x: u64, m: &Modulus) -> Result<u64, ModArithError> {
    if x == 0 {
        return Err(ModArithError::NotInvertible);
    }
    let inv = pow_mod(x, m.p - 2, m);
    debug_assert_eq!(mul_mod(inv, x, m), 1);
    Ok(inv)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut a: u64, mut e: u64| {
        let mut r: u64 = 1;
        a %= n;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    };
    // This witness set is deterministic for all n < 2^64.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Generates `count` distinct NTT-friendly primes for ring degree `n` and
/// word size `w`: all `p ≡ 1 (mod 2n)`, all below `2^(w-2)`, scanned in
/// descending order so the result is deterministic and strictly decreasing.
pub fn gen_ntt_primes(n: usize, w: u32, count: usize) -> Result<Vec<Modulus>, ModArithError> {
    assert!(n.is_power_of_two(), "ring degree must be a power of two");
    assert!(count >= 1);
    assert!((8..=63).contains(&w));
    scan_ntt_primes(n, w - 2, count, w)
}

/// Scans downward from `2^limit_bits - 1` for primes `≡ 1 (mod 2n)`,
/// building each as a [`Modulus`] with word size `w`.
pub(crate) fn scan_ntt_primes(
    n: usize,
    limit_bits: u32,
    count: usize,
    w: u32,
) -> Result<Vec<Modulus>, ModArithError> {
    assert!(limit_bits <= w - 2);
    let two_n = 2 * n as u64;
    let top = (1u64 << limit_bits) - 1;
    if top <= two_n {
        return Err(ModArithError::InsufficientPrimes);
    }
    let mut candidate = top - ((top - 1) % two_n);
    let mut primes = Vec::with_capacity(count);
    while candidate > two_n {
        if is_prime_u64(candidate) {
            primes.push(Modulus::new(candidate, w));
            if primes.len() == count {
                return Ok(primes);
            }
        }
        candidate -= two_n;
    }
    Err(ModArithError::InsufficientPrimes)
}

/// Finds the smallest `ψ` of multiplicative order exactly `2n` modulo `p`,
/// i.e. `ψ^n ≡ -1 (mod p)`. Requires `p ≡ 1 (mod 2n)`.
pub fn find_primitive_root(m: &Modulus, n: usize) -> Result<u64, ModArithError> {
    assert!(n.is_power_of_two());
    let two_n = 2 * n as u64;
    if (m.p - 1) % two_n != 0 {
        return Err(ModArithError::NotNttFriendly);
    }
    let g = find_generator(m)?;
    let psi0 = pow_mod(g, (m.p - 1) / two_n, m);
    debug_assert_eq!(pow_mod(psi0, n as u64, m), m.p - 1);
    // Since 2n is a power of two, an element has order exactly 2n iff its
    // n-th power is -1; these are precisely the odd powers of psi0. Take
    // the smallest for determinism.
    let psi_sq = mul_mod(psi0, psi0, m);
    let mut cur = psi0;
    let mut best = psi0;
    for _ in 1..n {
        cur = mul_mod(cur, psi_sq, m);
        if cur < best {
            best = cur;
        }
    }
    Ok(best)
}

/// Finds a generator of the full multiplicative group by trial.
fn find_generator(m: &Modulus) -> Result<u64, ModArithError> {
    let factors = distinct_prime_factors(m.p - 1);
    for g in 2..m.p {
        if factors.iter().all(|&f| pow_mod(g, (m.p - 1) / f, m) != 1) {
            return Ok(g);
        }
    }
    Err(ModArithError::NoRoot)
}

fn distinct_prime_factors(mut x: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    if x & 1 == 0 {
        factors.push(2);
        while x & 1 == 0 {
            x >>= 1;
        }
    }
    let mut d = 3u64;
    while d * d <= x {
        if is_prime_u64(x) {
            break;
        }
        if x % d == 0 {
            factors.push(d);
            while x % d == 0 {
                x /= d;
            }
        }
        d += 2;
    }
    if x > 1 {
        factors.push(x);
    }
    factors
}

#[inline]
fn word_mask(w: u32) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

/// `floor(a * b / 2^shift)` for a 256-bit intermediate product,
/// `0 < shift < 128`. The result must fit in 128 bits.
#[inline]
fn mul_shift_right(a: u128, b: u128, shift: u32) -> u128 {
    const LO: u128 = u64::MAX as u128;
    let (a0, a1) = (a & LO, a >> 64);
    let (b0, b1) = (b & LO, b >> 64);
    let ll = a0 * b0;
    let lh = a0 * b1;
    let hl = a1 * b0;
    let hh = a1 * b1;
    let mid = (ll >> 64) + (lh & LO) + (hl & LO);
    let lo = (ll & LO) | ((mid & LO) << 64);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    debug_assert!(shift > 0 && shift < 128);
    (lo >> shift) | (hi << (128 - shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m17() -> Modulus {
        Modulus::new(17, 8)
    }

    #[test]
    fn barrett_examples() {
        let m = m17();
        assert_eq!(barrett_reduce(0, &m), 0);
        assert_eq!(barrett_reduce(300, &m), 11);
    }

    #[test]
    fn barrett_large_word() {
        // Largest permitted input at w = 54 against the wide-integer oracle.
        let m = gen_ntt_primes(1 << 12, 54, 1).unwrap()[0];
        let p = m.value() as u128;
        let x = (p - 1) * (p - 1);
        assert_eq!(barrett_reduce(x, &m) as u128, x % p);
    }

    #[test]
    fn barrett_invariant() {
        for w in [8u32, 12, 54, 63] {
            let m = gen_ntt_primes(4, w, 1).unwrap()[0];
            let u = m.barrett_u();
            let p = m.value() as u128;
            assert!(u * p <= 1u128 << (2 * w));
            assert!((1u128 << (2 * w)) < (u + 1) * p);
        }
    }

    #[test]
    fn mul_red_examples() {
        let m = m17();
        let sp = precompute_shoup(3, &m);
        assert_eq!(sp.y_shoup, 45);
        assert_eq!(mul_red(5, sp, &m), 15);

        let sp = precompute_shoup(16, &m);
        assert_eq!(sp.y_shoup, 240);
        assert_eq!(mul_red(16, sp, &m), 1);

        let one = precompute_shoup(1, &m);
        assert_eq!(mul_red(7, one, &m), 7);
    }

    #[test]
    fn shoup_precompute_examples() {
        let m = m17();
        assert_eq!(precompute_shoup(0, &m).y_shoup, 0);
        let sp = precompute_shoup(16, &m);
        // floor(16 * 256 / 17) = floor(4096 / 17)
        assert_eq!(sp.y_shoup, 240);
        // ShoupPair invariant.
        for y in 0..17u64 {
            let sp = precompute_shoup(y, &m);
            let lhs = sp.y_shoup as u128 * 17;
            let mid = (y as u128) << 8;
            assert!(lhs <= mid && mid < lhs + 17);
        }
    }

    #[test]
    fn add_sub_pow_inv() {
        let m = m17();
        assert_eq!(add_mod(16, 16, &m), 15);
        assert_eq!(sub_mod(0, 1, &m), 16);
        assert_eq!(pow_mod(2, 4, &m), 16);
        assert_eq!(inv_mod(13, &m), Ok(4));
        assert_eq!(inv_mod(0, &m), Err(ModArithError::NotInvertible));
    }

    #[test]
    fn primes_small_word() {
        // Primes ≡ 1 (mod 8) below 2^6 are exactly {17, 41}; the descending
        // scan returns the largest first.
        let ps = gen_ntt_primes(4, 8, 1).unwrap();
        assert_eq!(ps[0].value(), 41);
        let ps = gen_ntt_primes(4, 8, 2).unwrap();
        assert_eq!(ps.iter().map(|m| m.value()).collect::<Vec<_>>(), [41, 17]);
        assert_eq!(
            gen_ntt_primes(4, 8, 30),
            Err(ModArithError::InsufficientPrimes)
        );
    }

    #[test]
    fn primes_postconditions() {
        let n = 1 << 12;
        let ps = gen_ntt_primes(n, 54, 4).unwrap();
        let mut last = u64::MAX;
        for m in &ps {
            assert!(is_prime_u64(m.value()));
            assert_eq!(m.value() % (2 * n as u64), 1);
            assert!((m.value() as u128) < (1 << 52));
            assert!(m.value() < last, "must be strictly decreasing");
            last = m.value();
        }
    }

    #[test]
    fn primitive_root_examples() {
        let m = m17();
        assert_eq!(find_primitive_root(&m, 4), Ok(2));
        // 17 ≡ 1 (mod 16), so n = 8 is admissible; the smallest element of
        // order 16 is 3.
        assert_eq!(find_primitive_root(&m, 8), Ok(3));
        assert_eq!(pow_mod(3, 8, &m), 16);
        // 17 is not ≡ 1 (mod 32).
        assert_eq!(
            find_primitive_root(&m, 16),
            Err(ModArithError::NotNttFriendly)
        );
    }

    #[test]
    fn primitive_root_postcondition() {
        for (n, w) in [(4usize, 12u32), (8, 16), (1 << 12, 54)] {
            let m = gen_ntt_primes(n, w, 1).unwrap()[0];
            let psi = find_primitive_root(&m, n).unwrap();
            assert_eq!(pow_mod(psi, n as u64, &m), m.value() - 1);
            assert_eq!(pow_mod(psi, 2 * n as u64, &m), 1);
        }
    }

    #[test]
    fn exhaustive_small_word_oracle() {
        // Every x, y pair for every prime ≡ 1 (mod 8) below 2^6.
        for m in gen_ntt_primes(4, 8, 2).unwrap() {
            let p = m.value();
            for y in 0..p {
                let sp = precompute_shoup(y, &m);
                for x in 0..p {
                    let want = (x as u128 * y as u128 % p as u128) as u64;
                    assert_eq!(mul_red(x, sp, &m), want);
                    assert_eq!(barrett_reduce(x as u128 * y as u128, &m), want);
                }
            }
        }
    }
}
