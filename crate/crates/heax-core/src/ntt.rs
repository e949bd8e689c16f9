//! Negacyclic NTT and inverse NTT over `Z_p^n`, plus twiddle-table
//! construction and a quadratic reference convolution oracle.
//!
//! The forward transform is the radix-2 Cooley-Tukey decimation-in-time
//! network: natural-order input, bit-reversed output, `log n` stages of
//! `n/2` butterflies each, with twiddle factors consumed from a table of
//! powers of `ψ` stored in bit-reversed index order. Output slot `j` holds
//! the evaluation of the input polynomial at `ψ^(2*bitrev(j)+1)`, the
//! odd powers of the `2n`-th root `ψ`, which is what makes coefficient-wise
//! products in the transformed domain correspond to negacyclic convolution.
//!
//! The inverse runs the mirrored Gentleman-Sande network over the stages in
//! reverse order, folding the final `n^-1` scaling into its last stage so
//! the whole inverse is a single pass.

use crate::modarith::{
    add_mod, find_primitive_root, inv_mod, mul_mod, mul_red, pow_mod, precompute_shoup, sub_mod,
    ModArithError, Modulus, ShoupPair,
};

/// Twiddle tables for one modulus and one ring degree.
#[derive(Debug, Clone)]
pub struct NttTable {
    m: Modulus,
    n: usize,
    log_n: u32,
    psi: u64,
    /// `psi_powers[i] = ψ^bitrev(i)`: twiddles in bit-reversed index order.
    psi_powers: Vec<u64>,
    /// Shoup companions of `psi_powers`.
    psi_shoup: Vec<u64>,
    /// `inv_psi_powers[i] = ψ^-bitrev(i)`.
    inv_psi_powers: Vec<u64>,
    inv_psi_shoup: Vec<u64>,
    /// `n^-1 mod p` with its Shoup companion.
    n_inv: ShoupPair,
    /// `ψ^-(n/2) * n^-1`, consumed by the merged final inverse stage.
    last_inv_scaled: ShoupPair,
}

impl NttTable {
    /// Builds tables for ring degree `n` (a power of two, at least 2) over
    /// modulus `m` with `p ≡ 1 (mod 2n)`.
    pub fn new(m: Modulus, n: usize) -> Result<Self, ModArithError> {
        assert!(n.is_power_of_two() && n >= 2);
        let psi = find_primitive_root(&m, n)?;
        Self::with_root(m, n, psi)
    }

    /// Builds tables from a caller-chosen root `ψ` of order exactly `2n`.
    pub fn with_root(m: Modulus, n: usize, psi: u64) -> Result<Self, ModArithError> {
        assert!(n.is_power_of_two() && n >= 2);
        if pow_mod(psi, n as u64, &m) != m.value() - 1 {
            return Err(ModArithError::NoRoot);
        }
        let log_n = n.trailing_zeros();
        let psi_inv = inv_mod(psi, &m)?;

        let scatter = |base: u64| -> Vec<u64> {
            let mut powers = vec![0u64; n];
            let mut cur = 1u64;
            for i in 0..n {
                powers[bit_reverse(i, log_n)] = cur;
                cur = mul_mod(cur, base, &m);
            }
            powers
        };
        let psi_powers = scatter(psi);
        let inv_psi_powers = scatter(psi_inv);
        let shoup = |v: &[u64]| v.iter().map(|&y| precompute_shoup(y, &m).y_shoup).collect();
        let psi_shoup: Vec<u64> = shoup(&psi_powers);
        let inv_psi_shoup: Vec<u64> = shoup(&inv_psi_powers);

        let n_inv_val = inv_mod((n as u64) % m.value(), &m)?;
        let n_inv = precompute_shoup(n_inv_val, &m);
        let last_inv_scaled = precompute_shoup(mul_mod(inv_psi_powers[1], n_inv_val, &m), &m);

        Ok(NttTable {
            m,
            n,
            log_n,
            psi,
            psi_powers,
            psi_shoup,
            inv_psi_powers,
            inv_psi_shoup,
            n_inv,
            last_inv_scaled,
        })
    }

    #[inline]
    pub fn modulus(&self) -> &Modulus {
        &self.m
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn log_degree(&self) -> u32 {
        self.log_n
    }

    #[inline]
    pub fn psi(&self) -> u64 {
        self.psi
    }

    #[inline]
    pub fn psi_powers(&self) -> &[u64] {
        &self.psi_powers
    }

    #[inline]
    pub fn psi_shoup(&self) -> &[u64] {
        &self.psi_shoup
    }

    #[inline]
    pub fn inv_psi_powers(&self) -> &[u64] {
        &self.inv_psi_powers
    }

    #[inline]
    pub fn n_inv(&self) -> ShoupPair {
        self.n_inv
    }

    #[inline]
    pub fn twiddle(&self, index: usize) -> ShoupPair {
        ShoupPair {
            y: self.psi_powers[index],
            y_shoup: self.psi_shoup[index],
        }
    }
}

/// Forward negacyclic NTT, in place. Input in natural order, output in
/// bit-reversed order; coefficients canonical in `[0, p)` throughout.
pub fn ntt_forward_in_place(a: &mut [u64], t: &NttTable) {
    ntt_forward_counting(a, t);
}

/// Forward transform of a borrowed slice.
pub fn ntt_forward(a: &[u64], t: &NttTable) -> Vec<u64> {
    let mut v = a.to_vec();
    ntt_forward_in_place(&mut v, t);
    v
}

/// Forward transform that also reports the number of butterfly
/// evaluations performed; `(n/2) * log n` by construction.
pub fn ntt_forward_counting(a: &mut [u64], t: &NttTable) -> u64 {
    assert_eq!(a.len(), t.n);
    let m = &t.m;
    let mut count = 0u64;
    let mut blocks = 1usize;
    let mut dist = t.n / 2;
    while blocks < t.n {
        for i in 0..blocks {
            let w = t.twiddle(blocks + i);
            let j1 = 2 * i * dist;
            for j in j1..j1 + dist {
                let u = a[j];
                let v = mul_red(a[j + dist], w, m);
                a[j] = add_mod(u, v, m);
                a[j + dist] = sub_mod(u, v, m);
                count += 1;
            }
        }
        blocks <<= 1;
        dist >>= 1;
    }
    count
}

/// Inverse negacyclic NTT, in place: bit-reversed input, natural-order
/// output, including the multiplication by `n^-1` (merged into the final
/// stage).
pub fn ntt_inverse_in_place(a: &mut [u64], t: &NttTable) {
    assert_eq!(a.len(), t.n);
    let m = &t.m;
    let mut blocks = t.n / 2;
    let mut dist = 1usize;
    while blocks >= 1 {
        for i in 0..blocks {
            let j1 = 2 * i * dist;
            if blocks == 1 {
                for j in j1..j1 + dist {
                    let u = a[j];
                    let v = a[j + dist];
                    a[j] = mul_red(add_mod(u, v, m), t.n_inv, m);
                    a[j + dist] = mul_red(sub_mod(u, v, m), t.last_inv_scaled, m);
                }
            } else {
                let w = ShoupPair {
                    y: t.inv_psi_powers[blocks + i],
                    y_shoup: t.inv_psi_shoup[blocks + i],
                };
                for j in j1..j1 + dist {
                    let u = a[j];
                    let v = a[j + dist];
                    a[j] = add_mod(u, v, m);
                    a[j + dist] = mul_red(sub_mod(u, v, m), w, m);
                }
            }
        }
        blocks >>= 1;
        dist <<= 1;
    }
}

/// Inverse transform of a borrowed slice.
pub fn ntt_inverse(a: &[u64], t: &NttTable) -> Vec<u64> {
    let mut v = a.to_vec();
    ntt_inverse_in_place(&mut v, t);
    v
}

/// Schoolbook negacyclic product in `Z_p[X]/(X^n + 1)`:
/// `c_j = sum_{i<=j} a_i b_{j-i} - sum_{i>j} a_i b_{j-i+n}`.
///
/// Quadratic; the test oracle for NTT-based multiplication.
pub fn negacyclic_convolve_reference(a: &[u64], b: &[u64], m: &Modulus) -> Vec<u64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut c = vec![0u64; n];
    for j in 0..n {
        let mut acc = 0u64;
        for i in 0..=j {
            acc = add_mod(acc, mul_mod(a[i], b[j - i], m), m);
        }
        for i in j + 1..n {
            acc = sub_mod(acc, mul_mod(a[i], b[j + n - i], m), m);
        }
        c[j] = acc;
    }
    c
}

/// Coefficient-wise product of two transformed polynomials.
pub fn dyadic_product(a: &[u64], b: &[u64], m: &Modulus) -> Vec<u64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| mul_mod(x, y, m)).collect()
}

/// Reverses the low `bits` bits of `x`.
#[inline]
pub fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Permutes `v` so the element at index `i` moves to `bitrev(i)`;
/// an involution.
pub fn bit_reverse_permutation<T: Clone>(v: &[T]) -> Vec<T> {
    assert!(v.len().is_power_of_two());
    let bits = v.len().trailing_zeros();
    let mut out = v.to_vec();
    for i in 0..v.len() {
        out[bit_reverse(i, bits)] = v[i].clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table(p: u64, w: u32, n: usize) -> NttTable {
        NttTable::new(Modulus::new(p, w), n).unwrap()
    }

    /// Direct evaluation of the defining sums: output slot `j` is the input
    /// polynomial evaluated at `ψ^(2*bitrev(j)+1)`.
    fn ntt_reference(a: &[u64], t: &NttTable) -> Vec<u64> {
        let n = a.len();
        let m = t.modulus();
        let mut out = vec![0u64; n];
        for j in 0..n {
            let e = 2 * bit_reverse(j, t.log_n) as u64 + 1;
            let root = pow_mod(t.psi(), e, m);
            let mut acc = 0u64;
            let mut x = 1u64;
            for &coeff in a {
                acc = add_mod(acc, mul_mod(coeff, x, m), m);
                x = mul_mod(x, root, m);
            }
            out[j] = acc;
        }
        out
    }

    #[test]
    fn table_invariants() {
        let t = table(17, 8, 4);
        assert_eq!(t.psi(), 2);
        assert_eq!(t.psi_powers()[0], 1);
        // Element at bit-reversed index 1 is ψ^(n/2).
        assert_eq!(t.psi_powers()[1], pow_mod(2, 2, t.modulus()));
        assert_eq!(pow_mod(t.psi(), 4, t.modulus()), 16);
        for i in 0..4 {
            let y = t.psi_powers()[i];
            assert_eq!(t.psi_shoup()[i], precompute_shoup(y, t.modulus()).y_shoup);
        }
    }

    #[test]
    fn forward_matches_defining_sum_n4() {
        let t = table(17, 8, 4);
        // Frozen from the direct-summation oracle with ψ = 2:
        // a = [1, 1, 1, 1] evaluates to [15, 12, 7, 4] in bit-reversed slots.
        let a = [1u64, 1, 1, 1];
        assert_eq!(ntt_forward(&a, &t), ntt_reference(&a, &t));
        assert_eq!(ntt_forward(&a, &t), vec![15, 12, 7, 4]);
    }

    #[test]
    fn forward_matches_defining_sum_random() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in [4usize, 8, 16, 64] {
            let m = crate::modarith::gen_ntt_primes(n, 16, 1).unwrap()[0];
            let t = NttTable::new(m, n).unwrap();
            let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..m.value())).collect();
            assert_eq!(ntt_forward(&a, &t), ntt_reference(&a, &t));
        }
    }

    #[test]
    fn roundtrip_identity() {
        let mut rng = StdRng::seed_from_u64(1);
        for n in [4usize, 8, 256] {
            let t = table(12289, 16, n); // 12289 ≡ 1 (mod 512)
            let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..12289)).collect();
            assert_eq!(ntt_inverse(&ntt_forward(&a, &t), &t), a);
        }
    }

    #[test]
    fn transform_is_linear() {
        let mut rng = StdRng::seed_from_u64(2);
        let n = 32;
        let t = table(12289, 16, n);
        let m = t.modulus();
        let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..12289)).collect();
        let b: Vec<u64> = (0..n).map(|_| rng.random_range(0..12289)).collect();
        let alpha = rng.random_range(0..12289);
        let combo: Vec<u64> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| add_mod(mul_mod(alpha, x, m), y, m))
            .collect();
        let lhs = ntt_forward(&combo, &t);
        let fa = ntt_forward(&a, &t);
        let fb = ntt_forward(&b, &t);
        for j in 0..n {
            assert_eq!(lhs[j], add_mod(mul_mod(alpha, fa[j], m), fb[j], m));
        }
    }

    #[test]
    fn butterfly_count() {
        for n in [4usize, 64, 1024] {
            let t = table(12289, 16, n);
            let mut a = vec![1u64; n];
            let count = ntt_forward_counting(&mut a, &t);
            assert_eq!(count, (n as u64 / 2) * n.trailing_zeros() as u64);
        }
    }

    #[test]
    fn pointwise_multiplication_is_negacyclic() {
        let mut rng = StdRng::seed_from_u64(3);
        for n in [4usize, 8, 32] {
            let t = table(12289, 16, n);
            let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..12289)).collect();
            let b: Vec<u64> = (0..n).map(|_| rng.random_range(0..12289)).collect();
            let prod = dyadic_product(&ntt_forward(&a, &t), &ntt_forward(&b, &t), t.modulus());
            assert_eq!(
                ntt_inverse(&prod, &t),
                negacyclic_convolve_reference(&a, &b, t.modulus())
            );
        }
    }

    #[test]
    fn convolution_identities() {
        let m = Modulus::new(17, 8);
        let n = 8;
        let mut unit = vec![0u64; n];
        unit[0] = 1;
        let b: Vec<u64> = (1..=n as u64).collect();
        assert_eq!(negacyclic_convolve_reference(&unit, &b, &m), b);

        // X * X^(n-1) = X^n = -1.
        let mut x1 = vec![0u64; n];
        x1[1] = 1;
        let mut xn1 = vec![0u64; n];
        xn1[n - 1] = 1;
        let mut want = vec![0u64; n];
        want[0] = 16;
        assert_eq!(negacyclic_convolve_reference(&x1, &xn1, &m), want);
    }

    #[test]
    fn convolution_matches_symbolic_reduction() {
        // Big-integer polynomial product reduced mod X^n + 1, then mod p.
        use num_bigint::BigInt;
        let mut rng = StdRng::seed_from_u64(4);
        let m = Modulus::new(97, 10);
        let n = 16;
        let a: Vec<u64> = (0..n).map(|_| rng.random_range(0..97)).collect();
        let b: Vec<u64> = (0..n).map(|_| rng.random_range(0..97)).collect();
        let mut wide = vec![BigInt::from(0); 2 * n];
        for i in 0..n {
            for j in 0..n {
                wide[i + j] += BigInt::from(a[i]) * BigInt::from(b[j]);
            }
        }
        let p = BigInt::from(97);
        let reduced: Vec<u64> = (0..n)
            .map(|j| {
                let v = (&wide[j] - &wide[j + n]) % &p;
                let v = ((v % &p) + &p) % &p;
                let digits = v.to_u64_digits().1;
                digits.first().copied().unwrap_or(0)
            })
            .collect();
        assert_eq!(negacyclic_convolve_reference(&a, &b, &m), reduced);
    }

    #[test]
    fn bit_reverse_cases() {
        let v = ['a', 'b', 'c', 'd'];
        assert_eq!(bit_reverse_permutation(&v), ['a', 'c', 'b', 'd']);
        let twice = bit_reverse_permutation(&bit_reverse_permutation(&v));
        assert_eq!(twice, v);
        assert_eq!(bit_reverse(3, 3), 6);
        assert_eq!(bit_reverse(6, 3), 3);
    }

    #[test]
    fn negacyclic_wraparound_in_forward_domain() {
        // Constant polynomial through the transform and back.
        let t = table(17, 8, 4);
        let a = [5u64, 5, 5, 5];
        let f = ntt_forward(&a, &t);
        assert_eq!(ntt_inverse(&f, &t), a);
    }
}
