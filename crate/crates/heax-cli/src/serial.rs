//! Binary serialization of parameters, keys, ciphertexts, and plaintexts.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "HEAX"
//! version 1 byte   (1)
//! kind    1 byte   params=0 secret_key=1 ksk=2 ciphertext=3 plaintext=4
//! log2n   1 byte
//! m_count 1 byte   number of moduli listed next
//! moduli  m_count * 8 bytes
//! level   1 byte
//! comps   1 byte   component count (0 for params, 2*(L+2) for ksk)
//! domain  1 byte   0=coefficient 1=ntt
//! scale   8 bytes  IEEE-754 double (error sigma for params files)
//! body    comps * m_count_rows * n * 8 bytes of residue words
//! ```
//!
//! Key material (secret key, ksk) lists every modulus including the special
//! modulus last; ciphertexts and plaintexts list only the active ciphertext
//! moduli for their level. The deserializer rejects wrong magic or version
//! and any residue at or above its modulus.

use heax_core::ckks::{Ciphertext, HeParams, KeySwitchKey, Plaintext, SecretKey, WORD_BITS};
use heax_core::modarith::is_prime_u64;
use heax_core::rns::{Domain, RnsPoly};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"HEAX";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SerialError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown object kind {0}")]
    BadKind(u8),
    #[error("expected {expected:?}, found {found:?}")]
    WrongKind { expected: Kind, found: Kind },
    #[error("truncated object")]
    Truncated,
    #[error("trailing bytes after object")]
    TrailingBytes,
    #[error("residue out of range for its modulus")]
    ResidueOutOfRange,
    #[error("moduli do not match the supplied parameters")]
    ModulusMismatch,
    #[error("malformed header field: {0}")]
    BadHeader(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Params = 0,
    SecretKey = 1,
    Ksk = 2,
    Ciphertext = 3,
    Plaintext = 4,
}

impl Kind {
    fn from_byte(b: u8) -> Result<Kind, SerialError> {
        match b {
            0 => Ok(Kind::Params),
            1 => Ok(Kind::SecretKey),
            2 => Ok(Kind::Ksk),
            3 => Ok(Kind::Ciphertext),
            4 => Ok(Kind::Plaintext),
            other => Err(SerialError::BadKind(other)),
        }
    }
}

struct Header {
    kind: Kind,
    log2n: u8,
    moduli: Vec<u64>,
    level: u8,
    components: u8,
    domain: u8,
    scale: f64,
}

impl Header {
    fn n(&self) -> usize {
        1usize << self.log2n
    }
}

fn write_header(out: &mut Vec<u8>, h: &Header) {
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(h.kind as u8);
    out.push(h.log2n);
    out.push(h.moduli.len() as u8);
    for m in &h.moduli {
        out.extend_from_slice(&m.to_le_bytes());
    }
    out.push(h.level);
    out.push(h.components);
    out.push(h.domain);
    out.extend_from_slice(&h.scale.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], SerialError> {
        if self.pos + len > self.buf.len() {
            return Err(SerialError::Truncated);
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8, SerialError> {
        Ok(self.take(1)?[0])
    }

    fn u64_le(&mut self) -> Result<u64, SerialError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_le(&mut self) -> Result<f64, SerialError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<(), SerialError> {
        if self.pos != self.buf.len() {
            return Err(SerialError::TrailingBytes);
        }
        Ok(())
    }
}

fn read_header(r: &mut Reader) -> Result<Header, SerialError> {
    if r.take(4)? != MAGIC {
        return Err(SerialError::BadMagic);
    }
    let version = r.byte()?;
    if version != VERSION {
        return Err(SerialError::BadVersion(version));
    }
    let kind = Kind::from_byte(r.byte()?)?;
    let log2n = r.byte()?;
    if log2n == 0 || log2n > 24 {
        return Err(SerialError::BadHeader("log2n"));
    }
    let m_count = r.byte()? as usize;
    if m_count == 0 {
        return Err(SerialError::BadHeader("modulus count"));
    }
    let mut moduli = Vec::with_capacity(m_count);
    for _ in 0..m_count {
        moduli.push(r.u64_le()?);
    }
    let level = r.byte()?;
    let components = r.byte()?;
    let domain = r.byte()?;
    if domain > 1 {
        return Err(SerialError::BadHeader("domain flag"));
    }
    let scale = r.f64_le()?;
    Ok(Header {
        kind,
        log2n,
        moduli,
        level,
        components,
        domain,
        scale,
    })
}

fn write_rows(out: &mut Vec<u8>, rows: impl Iterator<Item = u64>) {
    for w in rows {
        out.extend_from_slice(&w.to_le_bytes());
    }
}

fn read_row(r: &mut Reader, n: usize, modulus: u64) -> Result<Vec<u64>, SerialError> {
    let mut row = Vec::with_capacity(n);
    for _ in 0..n {
        let w = r.u64_le()?;
        if w >= modulus {
            return Err(SerialError::ResidueOutOfRange);
        }
        row.push(w);
    }
    Ok(row)
}

/// Expects the header kind to match.
fn expect_kind(h: &Header, expected: Kind) -> Result<(), SerialError> {
    if h.kind != expected {
        return Err(SerialError::WrongKind {
            expected,
            found: h.kind,
        });
    }
    Ok(())
}

/// All moduli (special last), as a parameters header.
pub fn serialize_params(params: &HeParams) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        &Header {
            kind: Kind::Params,
            log2n: params.n.trailing_zeros() as u8,
            moduli: params.modulus_values(),
            level: params.max_level() as u8,
            components: 0,
            domain: 0,
            scale: params.error_sigma,
        },
    );
    out
}

pub fn deserialize_params(buf: &[u8]) -> Result<HeParams, SerialError> {
    let mut r = Reader::new(buf);
    let h = read_header(&mut r)?;
    expect_kind(&h, Kind::Params)?;
    r.finish()?;
    if h.moduli.len() < 2 {
        return Err(SerialError::BadHeader("parameter modulus count"));
    }
    for &p in &h.moduli {
        if p < 2 || (p as u128) >= (1u128 << (WORD_BITS - 2)) || !is_prime_u64(p) {
            return Err(SerialError::BadHeader("modulus value"));
        }
    }
    HeParams::from_moduli(h.n(), WORD_BITS, &h.moduli, h.scale)
        .map_err(|_| SerialError::BadHeader("inconsistent moduli"))
}

fn poly_rows(poly: &RnsPoly) -> impl Iterator<Item = u64> + '_ {
    let rows = poly.level() + 1 + usize::from(poly.has_special());
    (0..rows).flat_map(move |i| poly.row(i).iter().copied())
}

pub fn serialize_secret_key(sk: &SecretKey, params: &HeParams) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        &Header {
            kind: Kind::SecretKey,
            log2n: params.n.trailing_zeros() as u8,
            moduli: params.modulus_values(),
            level: params.max_level() as u8,
            components: 1,
            domain: 1,
            scale: 0.0,
        },
    );
    write_rows(&mut out, poly_rows(&sk.s));
    out
}

/// Reads one extended-basis polynomial (each header modulus in order,
/// special last).
fn read_extended_poly(r: &mut Reader, h: &Header) -> Result<RnsPoly, SerialError> {
    let n = h.n();
    let level = h.level as usize;
    let mut rows = Vec::with_capacity(h.moduli.len());
    for &m in &h.moduli {
        rows.push(read_row(r, n, m)?);
    }
    let domain = if h.domain == 1 {
        Domain::Ntt
    } else {
        Domain::Coefficient
    };
    Ok(RnsPoly::from_rows(rows, level, true, domain))
}

fn check_extended_header(h: &Header, params: &HeParams) -> Result<(), SerialError> {
    if h.n() != params.n
        || h.level as usize != params.max_level()
        || h.moduli != params.modulus_values()
    {
        return Err(SerialError::ModulusMismatch);
    }
    Ok(())
}

pub fn deserialize_secret_key(buf: &[u8], params: &HeParams) -> Result<SecretKey, SerialError> {
    let mut r = Reader::new(buf);
    let h = read_header(&mut r)?;
    expect_kind(&h, Kind::SecretKey)?;
    check_extended_header(&h, params)?;
    if h.components != 1 || h.domain != 1 {
        return Err(SerialError::BadHeader("secret key shape"));
    }
    let s = read_extended_poly(&mut r, &h)?;
    r.finish()?;
    Ok(SecretKey { s })
}

pub fn serialize_ksk(ksk: &KeySwitchKey, params: &HeParams) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        &Header {
            kind: Kind::Ksk,
            log2n: params.n.trailing_zeros() as u8,
            moduli: params.modulus_values(),
            level: params.max_level() as u8,
            components: (2 * ksk.rows()) as u8,
            domain: 1,
            scale: 0.0,
        },
    );
    for poly in ksk.d0.iter().chain(&ksk.d1) {
        write_rows(&mut out, poly_rows(poly));
    }
    out
}

pub fn deserialize_ksk(buf: &[u8], params: &HeParams) -> Result<KeySwitchKey, SerialError> {
    let mut r = Reader::new(buf);
    let h = read_header(&mut r)?;
    expect_kind(&h, Kind::Ksk)?;
    check_extended_header(&h, params)?;
    let rows = params.max_level() + 2;
    if h.components as usize != 2 * rows || h.domain != 1 {
        return Err(SerialError::BadHeader("ksk shape"));
    }
    let mut polys = Vec::with_capacity(2 * rows);
    for _ in 0..2 * rows {
        polys.push(read_extended_poly(&mut r, &h)?);
    }
    r.finish()?;
    let d1 = polys.split_off(rows);
    Ok(KeySwitchKey { d0: polys, d1 })
}

pub fn serialize_ciphertext(ct: &Ciphertext, params: &HeParams) -> Vec<u8> {
    let moduli: Vec<u64> = params.basis.moduli()[..=ct.level]
        .iter()
        .map(|m| m.value())
        .collect();
    let mut out = Vec::new();
    write_header(
        &mut out,
        &Header {
            kind: Kind::Ciphertext,
            log2n: params.n.trailing_zeros() as u8,
            moduli,
            level: ct.level as u8,
            components: ct.components.len() as u8,
            domain: 1,
            scale: ct.scale,
        },
    );
    for comp in &ct.components {
        write_rows(&mut out, poly_rows(comp));
    }
    out
}

fn check_prefix_moduli(h: &Header, params: &HeParams) -> Result<(), SerialError> {
    let level = h.level as usize;
    if h.n() != params.n || level > params.max_level() {
        return Err(SerialError::ModulusMismatch);
    }
    let expected: Vec<u64> = params.basis.moduli()[..=level]
        .iter()
        .map(|m| m.value())
        .collect();
    if h.moduli != expected {
        return Err(SerialError::ModulusMismatch);
    }
    Ok(())
}

pub fn deserialize_ciphertext(buf: &[u8], params: &HeParams) -> Result<Ciphertext, SerialError> {
    let mut r = Reader::new(buf);
    let h = read_header(&mut r)?;
    expect_kind(&h, Kind::Ciphertext)?;
    check_prefix_moduli(&h, params)?;
    if h.components < 2 || h.domain != 1 {
        return Err(SerialError::BadHeader("ciphertext shape"));
    }
    let level = h.level as usize;
    let n = h.n();
    let mut components = Vec::with_capacity(h.components as usize);
    for _ in 0..h.components {
        let mut rows = Vec::with_capacity(level + 1);
        for &m in &h.moduli {
            rows.push(read_row(&mut r, n, m)?);
        }
        components.push(RnsPoly::from_rows(rows, level, false, Domain::Ntt));
    }
    r.finish()?;
    Ok(Ciphertext {
        components,
        level,
        scale: h.scale,
    })
}

pub fn serialize_plaintext(pt: &Plaintext, params: &HeParams) -> Vec<u8> {
    let level = pt.poly.level();
    let moduli: Vec<u64> = params.basis.moduli()[..=level]
        .iter()
        .map(|m| m.value())
        .collect();
    let mut out = Vec::new();
    write_header(
        &mut out,
        &Header {
            kind: Kind::Plaintext,
            log2n: params.n.trailing_zeros() as u8,
            moduli,
            level: level as u8,
            components: 1,
            domain: match pt.poly.domain() {
                Domain::Coefficient => 0,
                Domain::Ntt => 1,
            },
            scale: pt.scale,
        },
    );
    write_rows(&mut out, poly_rows(&pt.poly));
    out
}

pub fn deserialize_plaintext(buf: &[u8], params: &HeParams) -> Result<Plaintext, SerialError> {
    let mut r = Reader::new(buf);
    let h = read_header(&mut r)?;
    expect_kind(&h, Kind::Plaintext)?;
    check_prefix_moduli(&h, params)?;
    if h.components != 1 {
        return Err(SerialError::BadHeader("plaintext shape"));
    }
    let level = h.level as usize;
    let n = h.n();
    let mut rows = Vec::with_capacity(level + 1);
    for &m in &h.moduli {
        rows.push(read_row(&mut r, n, m)?);
    }
    r.finish()?;
    let domain = if h.domain == 1 {
        Domain::Ntt
    } else {
        Domain::Coefficient
    };
    Ok(Plaintext {
        poly: RnsPoly::from_rows(rows, level, false, domain),
        scale: h.scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use heax_core::ckks::{self, HeParams, ERROR_SIGMA};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small_params() -> HeParams {
        HeParams::from_bit_sizes(64, 30, &[26, 26], 28, ERROR_SIGMA).unwrap()
    }

    #[test]
    fn roundtrips_are_bitwise() {
        let params = small_params();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let sk = ckks::keygen(&params, &mut rng);
        let ksk = ckks::relin_keygen(&sk, &params, &mut rng).unwrap();
        let pt = ckks::Plaintext::from_signed_coeffs(
            &vec![7i64; params.n],
            &params.basis,
            params.max_level(),
            2.0,
        );
        let ct = ckks::sym_enc(&pt, &sk, &params, &mut rng);

        let bytes = serialize_params(&params);
        let params2 = deserialize_params(&bytes).unwrap();
        assert_eq!(serialize_params(&params2), bytes);

        let bytes = serialize_secret_key(&sk, &params);
        let sk2 = deserialize_secret_key(&bytes, &params).unwrap();
        assert_eq!(serialize_secret_key(&sk2, &params), bytes);

        let bytes = serialize_ksk(&ksk, &params);
        let ksk2 = deserialize_ksk(&bytes, &params).unwrap();
        assert_eq!(serialize_ksk(&ksk2, &params), bytes);

        let bytes = serialize_ciphertext(&ct, &params);
        let ct2 = deserialize_ciphertext(&bytes, &params).unwrap();
        assert_eq!(serialize_ciphertext(&ct2, &params), bytes);

        let bytes = serialize_plaintext(&pt, &params);
        let pt2 = deserialize_plaintext(&bytes, &params).unwrap();
        assert_eq!(serialize_plaintext(&pt2, &params), bytes);
    }

    #[test]
    fn corrupted_objects_are_rejected() {
        let params = small_params();
        let mut bytes = serialize_params(&params);
        bytes[0] = b'X';
        assert_eq!(
            deserialize_params(&bytes).unwrap_err(),
            SerialError::BadMagic
        );

        let mut bytes = serialize_params(&params);
        bytes[4] = 9;
        assert_eq!(
            deserialize_params(&bytes).unwrap_err(),
            SerialError::BadVersion(9)
        );

        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let sk = ckks::keygen(&params, &mut rng);
        let mut bytes = serialize_secret_key(&sk, &params);
        // Force a residue to the modulus value itself.
        let body_start = bytes.len() - params.n * (params.k + 1) * 8;
        let p0 = params.basis.moduli()[0].value();
        bytes[body_start..body_start + 8].copy_from_slice(&p0.to_le_bytes());
        assert_eq!(
            deserialize_secret_key(&bytes, &params).unwrap_err(),
            SerialError::ResidueOutOfRange
        );

        // Truncation.
        let bytes = serialize_secret_key(&sk, &params);
        assert_eq!(
            deserialize_secret_key(&bytes[..bytes.len() - 1], &params).unwrap_err(),
            SerialError::Truncated
        );

        // Kind confusion.
        let bytes = serialize_secret_key(&sk, &params);
        assert!(matches!(
            deserialize_ciphertext(&bytes, &params).unwrap_err(),
            SerialError::WrongKind { .. }
        ));
    }
}
