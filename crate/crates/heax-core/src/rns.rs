//! Residue-number-system representation of ring elements, CRT
//! reconstruction, basis-change reduction, and gadget decomposition.
//!
//! Evaluation paths operate strictly on word-level residue rows; big-integer
//! arithmetic appears only in construction-time precomputation and in the
//! test/keygen-facing CRT and gadget routines.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::modarith::{
    add_mod, barrett_reduce, inv_mod, mul_red, precompute_shoup, sub_mod, Modulus, ShoupPair,
};
use crate::ntt::{ntt_forward_in_place, ntt_inverse_in_place, NttTable};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RnsError {
    #[error("basis mismatch")]
    BasisMismatch,
    #[error("domain mismatch")]
    DomainMismatch,
    #[error("moduli must be distinct primes, special excluded")]
    InvalidBasis,
    #[error(transparent)]
    ModArith(#[from] crate::modarith::ModArithError),
}

/// Which representation a polynomial's residue rows are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Coefficient,
    Ntt,
}

/// Per-level CRT data: `q_l = prod_{i<=l} p_i`, punctured products
/// `pi_i = q_l / p_i`, their inverses mod `p_i`, and the gadget vector
/// `g_i = pi_i * [pi_i^-1]_{p_i}`.
#[derive(Debug, Clone)]
struct LevelPrecomp {
    q: BigUint,
    punctured: Vec<BigUint>,
    inv_punctured: Vec<u64>,
    gadget: Vec<BigUint>,
}

/// An ordered list of coprime ciphertext moduli `p_0..p_L` plus the special
/// modulus `p`, with CRT, flooring, and NTT precomputations.
#[derive(Debug, Clone)]
pub struct RnsBasis {
    moduli: Vec<Modulus>,
    special: Modulus,
    n: usize,
    ntt_tables: Vec<NttTable>,
    special_table: NttTable,
    levels: Vec<LevelPrecomp>,
    /// `[p^-1]_{p_i}` with Shoup companions, for flooring by the special modulus.
    floor_inv: Vec<ShoupPair>,
    /// `rescale_inv[l][i] = [p_l^-1]_{p_i}` for `i < l`, for rescaling.
    rescale_inv: Vec<Vec<ShoupPair>>,
}

impl RnsBasis {
    pub fn new(moduli: Vec<Modulus>, special: Modulus, n: usize) -> Result<Self, RnsError> {
        let mut values: Vec<u64> = moduli.iter().map(|m| m.value()).collect();
        values.push(special.value());
        values.sort_unstable();
        values.dedup();
        if values.len() != moduli.len() + 1 || moduli.is_empty() {
            return Err(RnsError::InvalidBasis);
        }

        let ntt_tables = moduli
            .iter()
            .map(|&m| NttTable::new(m, n))
            .collect::<Result<Vec<_>, _>>()?;
        let special_table = NttTable::new(special, n)?;

        let mut levels = Vec::with_capacity(moduli.len());
        let mut q = BigUint::one();
        for (level, m) in moduli.iter().enumerate() {
            q *= BigUint::from(m.value());
            let mut punctured = Vec::with_capacity(level + 1);
            let mut inv_punctured = Vec::with_capacity(level + 1);
            let mut gadget = Vec::with_capacity(level + 1);
            for mi in &moduli[..=level] {
                let pi = &q / BigUint::from(mi.value());
                let pi_mod = biguint_mod_u64(&pi, mi.value());
                let inv = inv_mod(pi_mod, mi)?;
                gadget.push(&pi * BigUint::from(inv));
                punctured.push(pi);
                inv_punctured.push(inv);
            }
            levels.push(LevelPrecomp {
                q: q.clone(),
                punctured,
                inv_punctured,
                gadget,
            });
        }

        let floor_inv = moduli
            .iter()
            .map(|mi| {
                let p_mod = special.value() % mi.value();
                Ok(precompute_shoup(inv_mod(p_mod, mi)?, mi))
            })
            .collect::<Result<Vec<_>, RnsError>>()?;

        let rescale_inv = (0..moduli.len())
            .map(|l| {
                moduli[..l]
                    .iter()
                    .map(|mi| {
                        let v = moduli[l].value() % mi.value();
                        Ok(precompute_shoup(inv_mod(v, mi)?, mi))
                    })
                    .collect::<Result<Vec<_>, RnsError>>()
            })
            .collect::<Result<Vec<_>, RnsError>>()?;

        Ok(RnsBasis {
            moduli,
            special,
            n,
            ntt_tables,
            special_table,
            levels,
            floor_inv,
            rescale_inv,
        })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    #[inline]
    pub fn special(&self) -> &Modulus {
        &self.special
    }

    /// Highest level: `L = k - 1`.
    #[inline]
    pub fn max_level(&self) -> usize {
        self.moduli.len() - 1
    }

    #[inline]
    pub fn table(&self, i: usize) -> &NttTable {
        &self.ntt_tables[i]
    }

    #[inline]
    pub fn special_table(&self) -> &NttTable {
        &self.special_table
    }

    /// `q_l`, the product of the first `level + 1` moduli. Test/keygen path.
    pub fn level_modulus(&self, level: usize) -> &BigUint {
        &self.levels[level].q
    }

    /// Punctured products `pi_i = q_l / p_i` at `level`.
    pub fn punctured(&self, level: usize) -> &[BigUint] {
        &self.levels[level].punctured
    }

    /// `[pi_i^-1]_{p_i}` at `level`.
    pub fn inv_punctured(&self, level: usize) -> &[u64] {
        &self.levels[level].inv_punctured
    }

    /// Gadget vector `g_i = pi_i * [pi_i^-1]_{p_i}` at `level`.
    pub fn gadget(&self, level: usize) -> &[BigUint] {
        &self.levels[level].gadget
    }

    /// `[p^-1]_{p_i}` for the special modulus, with Shoup companion.
    pub fn floor_inv(&self, i: usize) -> ShoupPair {
        self.floor_inv[i]
    }

    /// `[p_level^-1]_{p_i}` for `i < level`, with Shoup companion.
    pub fn rescale_inv(&self, level: usize, i: usize) -> ShoupPair {
        self.rescale_inv[level][i]
    }
}

/// Residue-form polynomial: one row of `n` words per active modulus,
/// optionally one extra row for the special modulus (stored last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RnsPoly {
    rows: Vec<Vec<u64>>,
    level: usize,
    has_special: bool,
    domain: Domain,
}

impl RnsPoly {
    pub fn zero(basis: &RnsBasis, level: usize, domain: Domain, with_special: bool) -> Self {
        let count = level + 1 + usize::from(with_special);
        RnsPoly {
            rows: vec![vec![0u64; basis.degree()]; count],
            level,
            has_special: with_special,
            domain,
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>, level: usize, has_special: bool, domain: Domain) -> Self {
        assert_eq!(rows.len(), level + 1 + usize::from(has_special));
        RnsPoly {
            rows,
            level,
            has_special,
            domain,
        }
    }

    #[inline]
    pub fn level(&self) -> usize {
        self.level
    }

    #[inline]
    pub fn domain(&self) -> Domain {
        self.domain
    }

    #[inline]
    pub fn has_special(&self) -> bool {
        self.has_special
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut Vec<u64> {
        &mut self.rows[i]
    }

    /// The special-modulus row; only valid when `has_special`.
    #[inline]
    pub fn special_row(&self) -> &[u64] {
        assert!(self.has_special);
        self.rows.last().unwrap()
    }

    #[inline]
    pub fn special_row_mut(&mut self) -> &mut Vec<u64> {
        assert!(self.has_special);
        self.rows.last_mut().unwrap()
    }

    pub fn set_domain(&mut self, domain: Domain) {
        self.domain = domain;
    }

    /// Drops the special row, keeping the ciphertext-modulus rows.
    pub fn drop_special(mut self) -> Self {
        assert!(self.has_special);
        self.rows.pop();
        self.has_special = false;
        self
    }

    /// Transforms every row into the NTT domain.
    pub fn to_ntt(&mut self, basis: &RnsBasis) {
        assert_eq!(self.domain, Domain::Coefficient);
        for i in 0..=self.level {
            ntt_forward_in_place(&mut self.rows[i], basis.table(i));
        }
        if self.has_special {
            ntt_forward_in_place(self.rows.last_mut().unwrap(), basis.special_table());
        }
        self.domain = Domain::Ntt;
    }

    /// Transforms every row back to the coefficient domain.
    pub fn to_coefficient(&mut self, basis: &RnsBasis) {
        assert_eq!(self.domain, Domain::Ntt);
        for i in 0..=self.level {
            ntt_inverse_in_place(&mut self.rows[i], basis.table(i));
        }
        if self.has_special {
            ntt_inverse_in_place(self.rows.last_mut().unwrap(), basis.special_table());
        }
        self.domain = Domain::Coefficient;
    }

    /// Checks the row-count and canonical-range invariants. Test support.
    pub fn check_invariants(&self, basis: &RnsBasis) -> bool {
        if self.rows.len() != self.level + 1 + usize::from(self.has_special) {
            return false;
        }
        for (i, row) in self.rows.iter().take(self.level + 1).enumerate() {
            if row.len() != basis.degree() {
                return false;
            }
            if row.iter().any(|&x| x >= basis.moduli()[i].value()) {
                return false;
            }
        }
        if self.has_special
            && self
                .special_row()
                .iter()
                .any(|&x| x >= basis.special().value())
        {
            return false;
        }
        true
    }
}

fn biguint_mod_u64(x: &BigUint, p: u64) -> u64 {
    let r = x % BigUint::from(p);
    r.to_u64_digits().first().copied().unwrap_or(0)
}

/// Reduces big-integer coefficients in `[0, q_l)` into residue rows.
pub fn to_rns(coeffs: &[BigUint], basis: &RnsBasis, level: usize) -> RnsPoly {
    assert_eq!(coeffs.len(), basis.degree());
    let rows = basis.moduli()[..=level]
        .iter()
        .map(|m| {
            coeffs
                .iter()
                .map(|c| biguint_mod_u64(c, m.value()))
                .collect()
        })
        .collect();
    RnsPoly::from_rows(rows, level, false, Domain::Coefficient)
}

/// CRT reconstruction `a = sum_i a_i * pi_i * [pi_i^-1]_{p_i} (mod q_l)`,
/// the unique representative in `[0, q_l)`. Test/oracle path.
pub fn crt_reconstruct(x: &RnsPoly, basis: &RnsBasis) -> Vec<BigUint> {
    assert_eq!(x.domain(), Domain::Coefficient);
    let level = x.level();
    let q = basis.level_modulus(level);
    let gadget = basis.gadget(level);
    (0..basis.degree())
        .map(|j| {
            let mut acc = BigUint::zero();
            for i in 0..=level {
                acc += &gadget[i] * BigUint::from(x.row(i)[j]);
            }
            acc % q
        })
        .collect()
}

/// Gadget decomposition `g^-1(a) = ([a]_{p_i})_i`: component `i` is residue
/// row `i` lifted as a small polynomial, satisfying `<g, A> ≡ a (mod q_l)`.
pub fn gadget_decompose(a: &RnsPoly) -> Vec<Vec<u64>> {
    assert_eq!(a.domain(), Domain::Coefficient);
    (0..=a.level()).map(|i| a.row(i).to_vec()).collect()
}

/// Coefficient-wise reduction of a residue row (lifted to integers) into a
/// different modulus. When the source modulus is smaller this is the
/// identity embedding.
pub fn reduce_row(src: &[u64], dst: &Modulus) -> Vec<u64> {
    src.iter()
        .map(|&x| {
            if x < dst.value() {
                x
            } else {
                barrett_reduce(x as u128, dst)
            }
        })
        .collect()
}

fn check_compatible(x: &RnsPoly, y: &RnsPoly) -> Result<(), RnsError> {
    if x.level() != y.level() || x.has_special() != y.has_special() {
        return Err(RnsError::BasisMismatch);
    }
    if x.domain() != y.domain() {
        return Err(RnsError::DomainMismatch);
    }
    Ok(())
}

fn modulus_for_row(basis: &RnsBasis, poly: &RnsPoly, row: usize) -> Modulus {
    if poly.has_special() && row == poly.level() + 1 {
        *basis.special()
    } else {
        basis.moduli()[row]
    }
}

/// Row-wise modular addition.
pub fn rns_add(x: &RnsPoly, y: &RnsPoly, basis: &RnsBasis) -> Result<RnsPoly, RnsError> {
    check_compatible(x, y)?;
    let mut out = x.clone();
    for r in 0..out.rows.len() {
        let m = modulus_for_row(basis, x, r);
        for (o, &b) in out.rows[r].iter_mut().zip(&y.rows[r]) {
            *o = add_mod(*o, b, &m);
        }
    }
    Ok(out)
}

/// Row-wise modular subtraction.
pub fn rns_sub(x: &RnsPoly, y: &RnsPoly, basis: &RnsBasis) -> Result<RnsPoly, RnsError> {
    check_compatible(x, y)?;
    let mut out = x.clone();
    for r in 0..out.rows.len() {
        let m = modulus_for_row(basis, x, r);
        for (o, &b) in out.rows[r].iter_mut().zip(&y.rows[r]) {
            *o = sub_mod(*o, b, &m);
        }
    }
    Ok(out)
}

/// Row-wise dyadic (coefficient-wise) product; NTT domain only.
pub fn rns_dyadic_mul(x: &RnsPoly, y: &RnsPoly, basis: &RnsBasis) -> Result<RnsPoly, RnsError> {
    check_compatible(x, y)?;
    if x.domain() != Domain::Ntt {
        return Err(RnsError::DomainMismatch);
    }
    let mut out = x.clone();
    for r in 0..out.rows.len() {
        let m = modulus_for_row(basis, x, r);
        for (o, &b) in out.rows[r].iter_mut().zip(&y.rows[r]) {
            *o = mul_red(*o, precompute_shoup(b, &m), &m);
        }
    }
    Ok(out)
}
