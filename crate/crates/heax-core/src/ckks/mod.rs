//! The RNS-CKKS scheme operations accelerated by the architecture model:
//! key generation, symmetric encryption, Add, Mul, Floor, KeySwitch,
//! relinearization, rescaling, and rotation.
//!
//! Plaintexts are raw polynomials carrying a scale as metadata; ciphertexts
//! are vectors of residue-form polynomials kept in the NTT domain at every
//! public-operation boundary. The secret key distribution is uniform
//! ternary; errors are centered discrete Gaussians with `σ = 3.2`,
//! truncated at `6σ`.

mod ops;

pub use ops::{
    apply_galois, floor_rns, galois_element_for_step, galois_poly_coeff, hom_add, hom_mul,
    key_switch, relinearize, rescale, rotate,
};

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::modarith::{mul_red, precompute_shoup, scan_ntt_primes, Modulus};
use crate::rns::{crt_reconstruct, rns_dyadic_mul, rns_sub, Domain, RnsBasis, RnsError, RnsPoly};

/// Production word size: pairs of 27-bit DSP multipliers.
pub const WORD_BITS: u32 = 54;

/// Default error distribution width.
pub const ERROR_SIGMA: f64 = 3.2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CkksError {
    #[error("level mismatch")]
    LevelMismatch,
    #[error("scale mismatch")]
    ScaleMismatch,
    #[error("component count mismatch")]
    ShapeMismatch,
    #[error("missing special row")]
    MissingSpecialRow,
    #[error("level exhausted")]
    LevelExhausted,
    #[error("even galois element")]
    EvenGaloisElement,
    #[error("ksk basis mismatch")]
    KskBasisMismatch,
    #[error(transparent)]
    Rns(#[from] RnsError),
}

/// The named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSet {
    A,
    B,
    C,
}

impl ParamSet {
    pub fn parse(s: &str) -> Option<ParamSet> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "set-a" | "seta" => Some(ParamSet::A),
            "b" | "set-b" | "setb" => Some(ParamSet::B),
            "c" | "set-c" | "setc" => Some(ParamSet::C),
            _ => None,
        }
    }

    /// `(n, total modulus bits, k)` for the named sets.
    pub fn shape(self) -> (usize, u32, usize) {
        match self {
            ParamSet::A => (1 << 12, 109, 2),
            ParamSet::B => (1 << 13, 218, 4),
            ParamSet::C => (1 << 14, 438, 8),
        }
    }
}

/// Scheme parameters: ring degree, RNS component count for `q`, total
/// modulus bits, the basis itself, and the error width.
#[derive(Debug, Clone)]
pub struct HeParams {
    pub n: usize,
    pub k: usize,
    pub log_qp: u32,
    pub error_sigma: f64,
    pub basis: RnsBasis,
}

impl HeParams {
    /// Builds one of the named sets. Moduli are generated deterministically
    /// (descending scans per bit size), so the same set is bit-identical
    /// across machines. The special modulus is the largest prime generated.
    pub fn for_set(set: ParamSet) -> Result<Self, CkksError> {
        let (n, log_qp, k) = set.shape();
        // Per-prime bit sizes chosen so the total matches the set's modulus
        // budget: 37+36*2 = 109, 44*3+43*2 = 218, 49*6+48*3 = 438.
        let (special_bits, q_bits): (u32, Vec<u32>) = match set {
            ParamSet::A => (37, vec![36, 36]),
            ParamSet::B => (44, vec![44, 44, 43, 43]),
            ParamSet::C => (49, vec![49, 49, 49, 49, 49, 48, 48, 48]),
        };
        let params = Self::from_bit_sizes(n, WORD_BITS, &q_bits, special_bits, ERROR_SIGMA)?;
        debug_assert_eq!(params.k, k);
        debug_assert_eq!(params.log_qp, log_qp);
        Ok(params)
    }

    /// Builds parameters from explicit per-prime bit sizes. The special
    /// modulus is drawn from `special_bits`, which must be at least the
    /// largest entry of `q_bits` so it ends up as the largest prime overall.
    pub fn from_bit_sizes(
        n: usize,
        w: u32,
        q_bits: &[u32],
        special_bits: u32,
        error_sigma: f64,
    ) -> Result<Self, CkksError> {
        assert!(n.is_power_of_two() && n >= 2);
        assert!(!q_bits.is_empty());
        assert!(
            q_bits.iter().all(|&b| b <= special_bits),
            "special modulus must be the largest prime"
        );
        // One descending scan per distinct bit size, so primes of equal size
        // are distinct and ordered.
        let mut sizes: Vec<u32> = q_bits.to_vec();
        sizes.push(special_bits);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes.dedup();
        let mut by_size = std::collections::HashMap::new();
        for &b in &sizes {
            let count = q_bits.iter().filter(|&&x| x == b).count() + usize::from(b == special_bits);
            let primes = scan_ntt_primes(n, b, count, w).map_err(RnsError::ModArith)?;
            by_size.insert(b, primes);
        }
        let special = by_size.get_mut(&special_bits).unwrap().remove(0);
        let mut moduli: Vec<Modulus> = Vec::with_capacity(q_bits.len());
        for &b in &sizes {
            moduli.extend(by_size.remove(&b).unwrap_or_default());
        }
        let log_qp = moduli.iter().map(|m| m.bits()).sum::<u32>() + special.bits();
        let k = moduli.len();
        let basis = RnsBasis::new(moduli, special, n)?;
        Ok(HeParams {
            n,
            k,
            log_qp,
            error_sigma,
            basis,
        })
    }

    /// Rebuilds parameters around an explicit modulus list (used when
    /// loading serialized parameter files). The last value is the special
    /// modulus.
    pub fn from_moduli(
        n: usize,
        w: u32,
        values: &[u64],
        error_sigma: f64,
    ) -> Result<Self, CkksError> {
        assert!(values.len() >= 2);
        let moduli: Vec<Modulus> = values[..values.len() - 1]
            .iter()
            .map(|&p| Modulus::new(p, w))
            .collect();
        let special = Modulus::new(values[values.len() - 1], w);
        let log_qp = moduli.iter().map(|m| m.bits()).sum::<u32>() + special.bits();
        let k = moduli.len();
        let basis = RnsBasis::new(moduli, special, n)?;
        Ok(HeParams {
            n,
            k,
            log_qp,
            error_sigma,
            basis,
        })
    }

    /// Highest ciphertext level, `L = k - 1`.
    pub fn max_level(&self) -> usize {
        self.k - 1
    }

    /// All modulus values, special last; the serialization order.
    pub fn modulus_values(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.basis.moduli().iter().map(|m| m.value()).collect();
        v.push(self.basis.special().value());
        v
    }
}

/// A raw plaintext polynomial in residue form with an attached scale.
#[derive(Debug, Clone)]
pub struct Plaintext {
    pub poly: RnsPoly,
    pub scale: f64,
}

impl Plaintext {
    /// Embeds signed integer coefficients at the given level.
    pub fn from_signed_coeffs(coeffs: &[i64], basis: &RnsBasis, level: usize, scale: f64) -> Self {
        assert_eq!(coeffs.len(), basis.degree());
        let rows = basis.moduli()[..=level]
            .iter()
            .map(|m| coeffs.iter().map(|&c| signed_to_residue(c, m)).collect())
            .collect();
        Plaintext {
            poly: RnsPoly::from_rows(rows, level, false, Domain::Coefficient),
            scale,
        }
    }

    /// Centered representatives in `(-q_l/2, q_l/2]` of the CRT-reconstructed
    /// coefficients.
    pub fn centered_coeffs(&self, basis: &RnsBasis) -> Vec<BigInt> {
        let q = basis.level_modulus(self.poly.level());
        crt_reconstruct(&self.poly, basis)
            .into_iter()
            .map(|v| center(v, q))
            .collect()
    }
}

fn signed_to_residue(c: i64, m: &Modulus) -> u64 {
    let p = m.value();
    if c >= 0 {
        (c as u64) % p
    } else {
        let r = (c.unsigned_abs()) % p;
        if r == 0 {
            0
        } else {
            p - r
        }
    }
}

/// Centers `v in [0, q)` into `(-q/2, q/2]`.
pub fn center(v: BigUint, q: &BigUint) -> BigInt {
    let v = BigInt::from(v);
    let q = BigInt::from(q.clone());
    if &v * 2 > q {
        v - q
    } else {
        v
    }
}

/// Ternary secret key in RNS+NTT form over the extended basis
/// (ciphertext moduli plus the special modulus).
#[derive(Debug, Clone)]
pub struct SecretKey {
    pub s: RnsPoly,
}

/// A ciphertext: `α >= 2` NTT-domain components sharing a level and scale.
#[derive(Debug, Clone)]
pub struct Ciphertext {
    pub components: Vec<RnsPoly>,
    pub level: usize,
    pub scale: f64,
}

/// Key switching key: `L + 2` rows per column, each row a polynomial over
/// the extended basis in NTT form.
#[derive(Debug, Clone)]
pub struct KeySwitchKey {
    pub d0: Vec<RnsPoly>,
    pub d1: Vec<RnsPoly>,
}

impl KeySwitchKey {
    pub fn rows(&self) -> usize {
        self.d0.len()
    }
}

/// Uniform ternary coefficients in `{-1, 0, 1}`.
pub fn sample_ternary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(0..3) - 1).collect()
}

/// Centered discrete Gaussian with width `sigma`, truncated at `6σ`
/// by rejection.
pub fn sample_gaussian<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Vec<i64> {
    let normal = Normal::new(0.0, sigma).expect("sigma must be positive");
    let bound = 6.0 * sigma;
    (0..n)
        .map(|_| loop {
            let v = normal.sample(rng);
            if v.abs() <= bound {
                return v.round() as i64;
            }
        })
        .collect()
}

/// Converts signed coefficients into an RNS polynomial over the first
/// `level + 1` moduli, plus the special modulus when `with_special`.
pub(crate) fn signed_to_rns(
    coeffs: &[i64],
    basis: &RnsBasis,
    level: usize,
    with_special: bool,
    domain: Domain,
) -> RnsPoly {
    let mut rows: Vec<Vec<u64>> = basis.moduli()[..=level]
        .iter()
        .map(|m| coeffs.iter().map(|&c| signed_to_residue(c, m)).collect())
        .collect();
    if with_special {
        rows.push(
            coeffs
                .iter()
                .map(|&c| signed_to_residue(c, basis.special()))
                .collect(),
        );
    }
    let mut poly = RnsPoly::from_rows(rows, level, with_special, Domain::Coefficient);
    if domain == Domain::Ntt {
        poly.to_ntt(basis);
    }
    poly
}

/// Uniformly random NTT-domain polynomial over the first `level + 1` moduli
/// (plus special when requested). Row-wise uniformity is uniformity over the
/// full modulus by the CRT bijection.
fn sample_uniform_poly<R: Rng + ?Sized>(
    basis: &RnsBasis,
    level: usize,
    with_special: bool,
    rng: &mut R,
) -> RnsPoly {
    let n = basis.degree();
    let mut rows: Vec<Vec<u64>> = basis.moduli()[..=level]
        .iter()
        .map(|m| (0..n).map(|_| rng.random_range(0..m.value())).collect())
        .collect();
    if with_special {
        let p = basis.special().value();
        rows.push((0..n).map(|_| rng.random_range(0..p)).collect());
    }
    RnsPoly::from_rows(rows, level, with_special, Domain::Ntt)
}

/// Samples a fresh ternary secret key.
pub fn keygen<R: Rng + ?Sized>(params: &HeParams, rng: &mut R) -> SecretKey {
    let coeffs = sample_ternary(params.n, rng);
    let s = signed_to_rns(
        &coeffs,
        &params.basis,
        params.max_level(),
        true,
        Domain::Ntt,
    );
    SecretKey { s }
}

/// Restricts an extended-basis key polynomial to the first `level + 1` rows.
fn key_prefix(s: &RnsPoly, level: usize) -> RnsPoly {
    let rows = (0..=level).map(|i| s.row(i).to_vec()).collect();
    RnsPoly::from_rows(rows, level, false, Domain::Ntt)
}

/// Symmetric encryption: `ct = (b, a)` with `a` uniform,
/// `b = -a*s + e + m`, everything in NTT form.
pub fn sym_enc<R: Rng + ?Sized>(
    pt: &Plaintext,
    sk: &SecretKey,
    params: &HeParams,
    rng: &mut R,
) -> Ciphertext {
    let basis = &params.basis;
    let level = pt.poly.level();
    let a = sample_uniform_poly(basis, level, false, rng);
    let e = sample_gaussian(params.n, params.error_sigma, rng);
    let e_poly = signed_to_rns(&e, basis, level, false, Domain::Ntt);
    let mut m_poly = pt.poly.clone();
    if m_poly.domain() == Domain::Coefficient {
        m_poly.to_ntt(basis);
    }

    let s = key_prefix(&sk.s, level);
    let a_s = rns_dyadic_mul(&a, &s, basis).expect("shapes match");
    let b = crate::rns::rns_add(
        &crate::rns::rns_sub(&e_poly, &a_s, basis).unwrap(),
        &m_poly,
        basis,
    )
    .unwrap();

    Ciphertext {
        components: vec![b, a],
        level,
        scale: pt.scale,
    }
}

/// Decryption: evaluates `sum_j c_j * s^j` in the NTT domain, transforms
/// back, and returns the residue-form plaintext (use
/// [`Plaintext::centered_coeffs`] for centered representatives).
pub fn decrypt(ct: &Ciphertext, sk: &SecretKey, params: &HeParams) -> Result<Plaintext, CkksError> {
    if ct.level > params.max_level() {
        return Err(CkksError::LevelMismatch);
    }
    let basis = &params.basis;
    let s = key_prefix(&sk.s, ct.level);
    // Horner: acc = c_last; acc = acc*s + c_j.
    let mut acc = ct.components.last().expect("nonempty ciphertext").clone();
    for c in ct.components.iter().rev().skip(1) {
        acc = rns_dyadic_mul(&acc, &s, basis)?;
        acc = crate::rns::rns_add(&acc, c, basis)?;
    }
    acc.to_coefficient(basis);
    Ok(Plaintext {
        poly: acc,
        scale: ct.scale,
    })
}

/// Centered decryption, the noise-measurement path used throughout tests.
pub fn decrypt_centered(
    ct: &Ciphertext,
    sk: &SecretKey,
    params: &HeParams,
) -> Result<Vec<BigInt>, CkksError> {
    Ok(decrypt(ct, sk, params)?.centered_coeffs(&params.basis))
}

/// Generates a key switching key from `s'` to `s`: row `i` is a symmetric
/// encryption of `p * g_i * s'` over the extended basis, where `g` is the
/// full-level gadget vector and `p` the special modulus. The final row
/// extends the gadget to the special modulus itself; the switching loop
/// never consumes it, it completes the `(L+2)`-row layout.
pub fn ksk_gen<R: Rng + ?Sized>(
    s_prime: &RnsPoly,
    sk: &SecretKey,
    params: &HeParams,
    rng: &mut R,
) -> Result<KeySwitchKey, CkksError> {
    let basis = &params.basis;
    let top = params.max_level();
    if s_prime.level() != top || !s_prime.has_special() || s_prime.domain() != Domain::Ntt {
        return Err(CkksError::KskBasisMismatch);
    }
    let special = BigUint::from(basis.special().value());
    let q = basis.level_modulus(top);
    let q_inv_mod_p =
        crate::modarith::inv_mod(biguint_mod(q, basis.special().value()), basis.special())
            .map_err(RnsError::ModArith)?;

    let mut d0 = Vec::with_capacity(top + 2);
    let mut d1 = Vec::with_capacity(top + 2);
    for i in 0..top + 2 {
        // p * g_i for the q-basis rows; q * [q^-1]_p extends the gadget to
        // the special modulus for the final row.
        let message_scalar: BigUint = if i <= top {
            basis.gadget(top)[i].clone() * &special
        } else {
            q * BigUint::from(q_inv_mod_p)
        };
        let a = sample_uniform_poly(basis, top, true, rng);
        let e = sample_gaussian(params.n, params.error_sigma, rng);
        let e_poly = signed_to_rns(&e, basis, top, true, Domain::Ntt);

        // message = scalar * s', row by row.
        let mut msg = s_prime.clone();
        for r in 0..top + 2 {
            let m = if r <= top {
                basis.moduli()[r]
            } else {
                *basis.special()
            };
            let scalar = precompute_shoup(biguint_mod(&message_scalar, m.value()), &m);
            for v in msg.row_mut(r).iter_mut() {
                *v = mul_red(*v, scalar, &m);
            }
        }

        let a_s = rns_dyadic_mul(&a, &sk.s, basis)?;
        let b = crate::rns::rns_add(&rns_sub(&e_poly, &a_s, basis)?, &msg, basis)?;
        d0.push(b);
        d1.push(a);
    }
    Ok(KeySwitchKey { d0, d1 })
}

/// Relinearization key: switches the `s^2` component back to `s`.
pub fn relin_keygen<R: Rng + ?Sized>(
    sk: &SecretKey,
    params: &HeParams,
    rng: &mut R,
) -> Result<KeySwitchKey, CkksError> {
    let s_sq = rns_dyadic_mul(&sk.s, &sk.s, &params.basis)?;
    ksk_gen(&s_sq, sk, params, rng)
}

/// Rotation key for `steps`: switches `s(X^g)` back to `s`,
/// `g = 3^steps (mod 2n)`.
pub fn rotation_keygen<R: Rng + ?Sized>(
    steps: i64,
    sk: &SecretKey,
    params: &HeParams,
    rng: &mut R,
) -> Result<KeySwitchKey, CkksError> {
    let g = galois_element_for_step(steps, params.n);
    let s_g = ops::galois_poly_ntt(&sk.s, g, params.n)?;
    ksk_gen(&s_g, sk, params, rng)
}

pub(crate) fn biguint_mod(x: &BigUint, p: u64) -> u64 {
    let r = x % BigUint::from(p);
    r.to_u64_digits().first().copied().unwrap_or(0)
}

/// Zero polynomial helper used by relinearization.
pub(crate) fn zero_poly(basis: &RnsBasis, level: usize) -> RnsPoly {
    RnsPoly::zero(basis, level, Domain::Ntt, false)
}
