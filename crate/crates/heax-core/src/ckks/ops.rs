//! Homomorphic operations: Add, Mul, RNS flooring, key switching,
//! relinearization, rescaling, and rotation.

use super::{zero_poly, Ciphertext, CkksError, HeParams, KeySwitchKey};
use crate::modarith::{add_mod, mul_mod, mul_red, sub_mod};
use crate::ntt::{bit_reverse, ntt_forward_in_place, ntt_inverse_in_place};
use crate::rns::{reduce_row, rns_add, rns_dyadic_mul, Domain, RnsBasis, RnsError, RnsPoly};

/// Component-wise addition of equal-shape ciphertexts. Exact: no noise
/// growth beyond the sum of the operands' noises.
pub fn hom_add(
    ct0: &Ciphertext,
    ct1: &Ciphertext,
    params: &HeParams,
) -> Result<Ciphertext, CkksError> {
    if ct0.level != ct1.level {
        return Err(CkksError::LevelMismatch);
    }
    if ct0.scale != ct1.scale {
        return Err(CkksError::ScaleMismatch);
    }
    if ct0.components.len() != ct1.components.len() {
        return Err(CkksError::ShapeMismatch);
    }
    let components = ct0
        .components
        .iter()
        .zip(&ct1.components)
        .map(|(a, b)| rns_add(a, b, &params.basis))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ciphertext {
        components,
        level: ct0.level,
        scale: ct0.scale,
    })
}

/// Homomorphic multiplication. For a pair of 2-component ciphertexts this
/// is the three dyadic products `(a0*b0, a0*b1 + a1*b0, a1*b1)` per RNS
/// component; generally, all pairwise products accumulated by output index,
/// yielding `α + β - 1` components. Output scale is the product of scales.
pub fn hom_mul(
    ct0: &Ciphertext,
    ct1: &Ciphertext,
    params: &HeParams,
) -> Result<Ciphertext, CkksError> {
    if ct0.level != ct1.level {
        return Err(CkksError::LevelMismatch);
    }
    let basis = &params.basis;
    let alpha = ct0.components.len();
    let beta = ct1.components.len();
    let mut components = vec![zero_poly(basis, ct0.level); alpha + beta - 1];
    for i in 0..alpha {
        for j in 0..beta {
            let prod = rns_dyadic_mul(&ct0.components[i], &ct1.components[j], basis)?;
            components[i + j] = rns_add(&components[i + j], &prod, basis)?;
        }
    }
    Ok(Ciphertext {
        components,
        level: ct0.level,
        scale: ct0.scale * ct1.scale,
    })
}

/// RNS flooring `c' = floor(p^-1 * c)` by the special modulus: the special
/// row is transformed back to the coefficient domain, re-reduced into each
/// ciphertext modulus, re-transformed, subtracted, and scaled by
/// `[p^-1]_{p_i}`. The output drops the special row.
pub fn floor_rns(c: &RnsPoly, basis: &RnsBasis) -> Result<RnsPoly, CkksError> {
    if !c.has_special() {
        return Err(CkksError::MissingSpecialRow);
    }
    if c.domain() != Domain::Ntt {
        return Err(CkksError::Rns(RnsError::DomainMismatch));
    }
    let level = c.level();
    let mut a = c.special_row().to_vec();
    ntt_inverse_in_place(&mut a, basis.special_table());

    let rows = (0..=level)
        .map(|i| {
            let m = &basis.moduli()[i];
            let mut r = reduce_row(&a, m);
            ntt_forward_in_place(&mut r, basis.table(i));
            let inv = basis.floor_inv(i);
            c.row(i)
                .iter()
                .zip(&r)
                .map(|(&ci, &ri)| mul_red(sub_mod(ci, ri, m), inv, m))
                .collect()
        })
        .collect();
    Ok(RnsPoly::from_rows(rows, level, false, Domain::Ntt))
}

/// Key switching: makes a 2-component ciphertext decryptable under the key
/// its `ksk` targets. Per residue `i`, the second component's row is
/// inverse-transformed, fanned out to every other modulus (the matching
/// modulus reuses the original NTT-form row), multiplied against both ksk
/// columns and accumulated; both accumulators are floored by the special
/// modulus, and the first input component is added back into the first
/// output component.
pub fn key_switch(
    ct: &Ciphertext,
    ksk: &KeySwitchKey,
    params: &HeParams,
) -> Result<Ciphertext, CkksError> {
    if ct.components.len() != 2 {
        return Err(CkksError::ShapeMismatch);
    }
    let basis = &params.basis;
    let top = params.max_level();
    if ct.level > top {
        return Err(CkksError::LevelMismatch);
    }
    if ksk.d0.len() != top + 2
        || ksk.d0.len() != ksk.d1.len()
        || ksk
            .d0
            .iter()
            .chain(&ksk.d1)
            .any(|r| r.level() != top || !r.has_special() || r.domain() != Domain::Ntt)
    {
        return Err(CkksError::KskBasisMismatch);
    }
    let level = ct.level;
    let c1 = &ct.components[1];

    let mut acc0 = RnsPoly::zero(basis, level, Domain::Ntt, true);
    let mut acc1 = RnsPoly::zero(basis, level, Domain::Ntt, true);

    for i in 0..=level {
        let mut a = c1.row(i).to_vec();
        ntt_inverse_in_place(&mut a, basis.table(i));

        // Fan out to every ciphertext modulus plus the special modulus;
        // target index level+1 denotes the special row.
        for j in 0..=level + 1 {
            let is_special = j == level + 1;
            let m = if is_special {
                *basis.special()
            } else {
                basis.moduli()[j]
            };
            let b_row: Vec<u64> = if !is_special && j == i {
                c1.row(i).to_vec()
            } else {
                let mut r = reduce_row(&a, &m);
                let table = if is_special {
                    basis.special_table()
                } else {
                    basis.table(j)
                };
                ntt_forward_in_place(&mut r, table);
                r
            };
            let ksk_row = |poly: &RnsPoly| -> Vec<u64> {
                if is_special {
                    poly.special_row().to_vec()
                } else {
                    poly.row(j).to_vec()
                }
            };
            let d0_row = ksk_row(&ksk.d0[i]);
            let d1_row = ksk_row(&ksk.d1[i]);
            let acc0_row = acc0.row_mut(j);
            for ((t, &b), &d) in acc0_row.iter_mut().zip(&b_row).zip(&d0_row) {
                *t = add_mod(*t, mul_mod(b, d, &m), &m);
            }
            let acc1_row = acc1.row_mut(j);
            for ((t, &b), &d) in acc1_row.iter_mut().zip(&b_row).zip(&d1_row) {
                *t = add_mod(*t, mul_mod(b, d, &m), &m);
            }
        }
    }

    let f0 = floor_rns(&acc0, basis)?;
    let f1 = floor_rns(&acc1, basis)?;
    let out0 = rns_add(&f0, &ct.components[0], basis)?;
    Ok(Ciphertext {
        components: vec![out0, f1],
        level,
        scale: ct.scale,
    })
}

/// Relinearization: reduces a 3-component ciphertext back to 2 components
/// via `(c0, c1) + KeySwitch((0, c2), rlk)`.
pub fn relinearize(
    ct: &Ciphertext,
    rlk: &KeySwitchKey,
    params: &HeParams,
) -> Result<Ciphertext, CkksError> {
    if ct.components.len() != 3 {
        return Err(CkksError::ShapeMismatch);
    }
    let basis = &params.basis;
    let carrier = Ciphertext {
        components: vec![zero_poly(basis, ct.level), ct.components[2].clone()],
        level: ct.level,
        scale: ct.scale,
    };
    let switched = key_switch(&carrier, rlk, params)?;
    Ok(Ciphertext {
        components: vec![
            rns_add(&switched.components[0], &ct.components[0], basis)?,
            rns_add(&switched.components[1], &ct.components[1], basis)?,
        ],
        level: ct.level,
        scale: ct.scale,
    })
}

/// Rescaling: divides the encrypted value by the last ciphertext prime
/// `p_l` using the flooring structure, dropping one RNS row and one level.
pub fn rescale(ct: &Ciphertext, params: &HeParams) -> Result<Ciphertext, CkksError> {
    if ct.level == 0 {
        return Err(CkksError::LevelExhausted);
    }
    let basis = &params.basis;
    let level = ct.level;
    let divisor = basis.moduli()[level];
    let components = ct
        .components
        .iter()
        .map(|comp| {
            let mut a = comp.row(level).to_vec();
            ntt_inverse_in_place(&mut a, basis.table(level));
            let rows: Vec<Vec<u64>> = (0..level)
                .map(|i| {
                    let m = &basis.moduli()[i];
                    let mut r = reduce_row(&a, m);
                    ntt_forward_in_place(&mut r, basis.table(i));
                    let inv = basis.rescale_inv(level, i);
                    comp.row(i)
                        .iter()
                        .zip(&r)
                        .map(|(&ci, &ri)| mul_red(sub_mod(ci, ri, m), inv, m))
                        .collect()
                })
                .collect();
            RnsPoly::from_rows(rows, level - 1, false, Domain::Ntt)
        })
        .collect();
    Ok(Ciphertext {
        components,
        level: level - 1,
        scale: ct.scale / divisor.value() as f64,
    })
}

/// The Galois element implementing a rotation by `steps` slots:
/// `3^steps (mod 2n)`, with negative steps via the inverse of 3.
pub fn galois_element_for_step(steps: i64, n: usize) -> u64 {
    let two_n = 2 * n as u64;
    let order = (n / 2) as i64;
    let r = steps.rem_euclid(order) as u64;
    let mut g: u64 = 1;
    for _ in 0..r {
        g = (g * 3) % two_n;
    }
    g
}

/// Builds the NTT-domain index permutation for `a(X) -> a(X^g)`: slot `j`
/// holds the evaluation at exponent `2*bitrev(j) + 1`, so the automorphism
/// is a pure table-driven permutation of slots.
fn galois_permutation(g: u64, n: usize) -> Vec<usize> {
    let bits = n.trailing_zeros();
    let two_n = 2 * n as u64;
    (0..n)
        .map(|j| {
            let e = 2 * bit_reverse(j, bits) as u64 + 1;
            let src = (e * (g % two_n)) % two_n;
            bit_reverse(((src - 1) / 2) as usize, bits)
        })
        .collect()
}

/// Applies `a(X) -> a(X^g)` to an NTT-form polynomial.
pub(super) fn galois_poly_ntt(poly: &RnsPoly, g: u64, n: usize) -> Result<RnsPoly, CkksError> {
    if g % 2 == 0 {
        return Err(CkksError::EvenGaloisElement);
    }
    let perm = galois_permutation(g, n);
    let mut out = poly.clone();
    let row_count = poly.level() + 1 + usize::from(poly.has_special());
    for r in 0..row_count {
        let src = poly.row(r).to_vec();
        let dst = out.row_mut(r);
        for (j, &p) in perm.iter().enumerate() {
            dst[j] = src[p];
        }
    }
    Ok(out)
}

/// Coefficient-domain automorphism `a(X) -> a(X^g) mod X^n + 1`: an index
/// permutation with sign flips. Reference path for tests.
pub fn galois_poly_coeff(a: &[u64], g: u64, m: &crate::modarith::Modulus) -> Vec<u64> {
    let n = a.len();
    let two_n = 2 * n as u64;
    let mut out = vec![0u64; n];
    for (i, &c) in a.iter().enumerate() {
        let e = ((i as u64) * (g % two_n)) % two_n;
        if e < n as u64 {
            out[e as usize] = add_mod(out[e as usize], c, m);
        } else {
            out[(e - n as u64) as usize] = sub_mod(out[(e - n as u64) as usize], c, m);
        }
    }
    out
}

/// Applies the automorphism `X -> X^g` to every ciphertext component. The
/// result decrypts under `s(X^g)`; follow with [`key_switch`] against a
/// matching rotation key to restore decryptability under `s`.
pub fn apply_galois(ct: &Ciphertext, g: u64, params: &HeParams) -> Result<Ciphertext, CkksError> {
    if g % 2 == 0 {
        return Err(CkksError::EvenGaloisElement);
    }
    let components = ct
        .components
        .iter()
        .map(|c| galois_poly_ntt(c, g, params.n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ciphertext {
        components,
        level: ct.level,
        scale: ct.scale,
    })
}

/// Rotation: automorphism by `3^steps` followed by a key switch under the
/// matching rotation key.
pub fn rotate(
    ct: &Ciphertext,
    steps: i64,
    galois_ksk: &KeySwitchKey,
    params: &HeParams,
) -> Result<Ciphertext, CkksError> {
    let g = galois_element_for_step(steps, params.n);
    let rotated = apply_galois(ct, g, params)?;
    key_switch(&rotated, galois_ksk, params)
}
