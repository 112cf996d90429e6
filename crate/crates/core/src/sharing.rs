//! Additive sharing of bit-decomposed integers over `Z_u`.
//!
//! Bit positions are 1-based throughout: bit 1 is the least significant,
//! bit `l` the most significant.

use crate::arith::SeededRng;
use crate::error::{Error, Result};

/// Arithmetic in `Z_u` for `u < 2^63`.
pub mod zu {
    pub fn add(a: u64, b: u64, u: u64) -> u64 {
        ((u128::from(a) + u128::from(b)) % u128::from(u)) as u64
    }

    pub fn sub(a: u64, b: u64, u: u64) -> u64 {
        add(a % u, u - b % u, u)
    }

    pub fn mul(a: u64, b: u64, u: u64) -> u64 {
        ((u128::from(a) * u128::from(b)) % u128::from(u)) as u64
    }

    pub fn neg(a: u64, u: u64) -> u64 {
        sub(0, a, u)
    }

    /// Residue of a signed integer.
    pub fn from_signed(x: i64, u: u64) -> u64 {
        x.rem_euclid(u as i64) as u64
    }
}

/// One party's share of one bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitShare(u64);

impl BitShare {
    pub fn new(value: u64, u: u64) -> Result<Self> {
        if value >= u {
            return Err(Error::Domain(format!("share {value} is not below u = {u}")));
        }
        Ok(BitShare(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

/// One party's half of a shared `l`-bit integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SharedInteger {
    // index 0 holds bit 1
    bits: Vec<BitShare>,
}

impl SharedInteger {
    pub fn new(bits: Vec<BitShare>) -> Self {
        SharedInteger { bits }
    }

    /// From raw residues, least significant bit first.
    pub fn from_residues(values: &[u64], u: u64) -> Result<Self> {
        let bits = values.iter().map(|&v| BitShare::new(v, u)).collect::<Result<_>>()?;
        Ok(SharedInteger { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Share of bit `i`, `1 <= i <= l`.
    pub fn bit(&self, i: usize) -> BitShare {
        assert!(i >= 1 && i <= self.bits.len(), "bit index {i} out of 1..={}", self.bits.len());
        self.bits[i - 1]
    }

    /// Shares from bit 1 upwards.
    pub fn bits(&self) -> &[BitShare] {
        &self.bits
    }

    pub fn residues(&self) -> Vec<u64> {
        self.bits.iter().map(|b| b.0).collect()
    }
}

/// Splits `x` into per-bit shares: A's share uniform, B's the complement.
pub fn share_integer(x: u64, l: u32, u: u64, rng: &mut SeededRng) -> Result<(SharedInteger, SharedInteger)> {
    if l == 0 || l >= 64 || x >> l != 0 {
        return Err(Error::Domain(format!("{x} does not fit in {l} bits")));
    }
    if u < 3 {
        return Err(Error::Parameter(format!("plaintext modulus {u} is too small")));
    }
    let mut a = Vec::with_capacity(l as usize);
    let mut b = Vec::with_capacity(l as usize);
    for i in 0..l {
        let bit = (x >> i) & 1;
        let share_a = rng.uniform_below_u64(u);
        a.push(BitShare(share_a));
        b.push(BitShare(zu::sub(bit, share_a, u)));
    }
    Ok((SharedInteger { bits: a }, SharedInteger { bits: b }))
}

/// `(a + b) mod u`, which must be a bit.
pub fn reconstruct_bit(a: BitShare, b: BitShare, u: u64) -> Result<u8> {
    match zu::add(a.0, b.0, u) {
        v @ (0 | 1) => Ok(v as u8),
        v => Err(Error::Integrity(format!("shares reconstruct to {v}, not a bit"))),
    }
}

/// Recombines both halves into the plaintext integer.
pub fn reconstruct_integer(a: &SharedInteger, b: &SharedInteger, u: u64) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!("share lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() >= 64 {
        return Err(Error::Parameter("shared integer wider than 63 bits".into()));
    }
    a.bits.iter().zip(&b.bits).enumerate().try_fold(0u64, |acc, (i, (&sa, &sb))| {
        Ok(acc | u64::from(reconstruct_bit(sa, sb, u)?) << i)
    })
}

/// `Σ coeffs_j · shares_j + constant mod u`, evaluated share-wise.
pub fn local_linear(shares: &[BitShare], coeffs: &[u64], constant: u64, u: u64) -> Result<u64> {
    if shares.len() != coeffs.len() {
        return Err(Error::Parameter(format!(
            "{} shares but {} coefficients",
            shares.len(),
            coeffs.len()
        )));
    }
    Ok(shares
        .iter()
        .zip(coeffs)
        .fold(constant % u, |acc, (s, &c)| zu::add(acc, zu::mul(s.0, c, u), u)))
}
