//! The additively homomorphic cipher `E(m, r) = g^m · h^r mod n` over `Z_u`.
//!
//! Holders of the secret key can always test whether a ciphertext encrypts
//! zero (`c^v ≡ 1`). Full decryption needs a discrete log in the order-`u`
//! subgroup generated by `g^v`, served by either a lookup table or
//! baby-step giant-step.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::SeededRng;
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::keygen::{PublicKey, SecretKey};

/// Largest `u` for which a full decryption table is built.
pub const TABLE_CAP: u64 = 1 << 24;

/// An element of `Z_n^*`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext(BigUint);

impl Ciphertext {
    /// Wraps a value after checking `1 <= value < n` and `gcd(value, n) = 1`.
    pub fn from_value(pk: &PublicKey, value: BigUint) -> Result<Self> {
        if value.is_zero() || &value >= pk.n() || !value.gcd(pk.n()).is_one() {
            return Err(Error::MalformedCiphertext("value is not in Z_n^*".into()));
        }
        Ok(Ciphertext(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Big-endian, minimal length.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes_be()
    }

    /// Inverse of [`Ciphertext::to_bytes`]. Rejects empty input and leading
    /// zero bytes. Membership in `Z_n^*` is checked where the key is known.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match bytes.first() {
            None => Err(Error::MalformedCiphertext("empty ciphertext".into())),
            Some(0) => Err(Error::MalformedCiphertext("non-minimal ciphertext encoding".into())),
            Some(_) => Ok(Ciphertext(BigUint::from_bytes_be(bytes))),
        }
    }

    /// Membership check against a key, for values that arrived off the wire.
    pub fn check(&self, pk: &PublicKey) -> Result<()> {
        if &self.0 >= pk.n() || !self.0.gcd(pk.n()).is_one() {
            return Err(Error::MalformedCiphertext("value is not in Z_n^*".into()));
        }
        Ok(())
    }
}

fn check_plaintext(pk: &PublicKey, m: u64) -> Result<()> {
    if m >= pk.plain_modulus() {
        return Err(Error::Domain(format!("plaintext {m} is not below u = {}", pk.u())));
    }
    Ok(())
}

/// `E(m, r)` with a fresh uniform 2t-bit randomizer.
pub fn encrypt(pk: &PublicKey, m: u64, rng: &mut SeededRng, counters: &mut OpCounters) -> Result<Ciphertext> {
    check_plaintext(pk, m)?;
    let r = rng.random_bits(pk.randomizer_bits());
    encrypt_with_randomness(pk, m, &r, counters)
}

/// `E(m, r) = g^m · h^r mod n` with a caller-chosen `r`.
pub fn encrypt_with_randomness(pk: &PublicKey, m: u64, r: &BigUint, counters: &mut OpCounters) -> Result<Ciphertext> {
    check_plaintext(pk, m)?;
    counters.encryptions += 1;
    let gm = counters.mod_pow(pk.g(), &BigUint::from(m), pk.n());
    let hr = counters.mod_pow(pk.h(), r, pk.n());
    Ok(Ciphertext(gm * hr % pk.n()))
}

/// True iff `c` encrypts `0 mod u`, i.e. `c^v ≡ 1 (mod n)`.
pub fn is_zero(sk: &SecretKey, c: &Ciphertext, counters: &mut OpCounters) -> bool {
    counters.zero_checks += 1;
    counters.mod_pow(&c.0, sk.v(), sk.n()).is_one()
}

/// `E(m1 + m2 mod u)`.
pub fn homomorphic_add(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Ciphertext {
    Ciphertext(&c1.0 * &c2.0 % pk.n())
}

/// `c · g^k`: shifts the plaintext by a public constant `k`.
pub fn add_plaintext(pk: &PublicKey, c: &Ciphertext, k: u64, counters: &mut OpCounters) -> Ciphertext {
    let gk = counters.mod_pow(pk.g(), &BigUint::from(k), pk.n());
    Ciphertext(&c.0 * gk % pk.n())
}

/// `E(m·s mod u)` via `c^s`.
pub fn homomorphic_scale(pk: &PublicKey, c: &Ciphertext, s: &BigUint, counters: &mut OpCounters) -> Ciphertext {
    Ciphertext(counters.mod_pow(&c.0, s, pk.n()))
}

/// `c^s · h^s' mod n` with `s` in `Z_u^*`: keeps only whether the
/// plaintext was zero, and rerandomizes.
pub fn blind(pk: &PublicKey, c: &Ciphertext, s: u64, s_prime: &BigUint, counters: &mut OpCounters) -> Result<Ciphertext> {
    if s == 0 || s >= pk.plain_modulus() {
        return Err(Error::Domain(format!("blinding factor {s} is not in Z_u^*")));
    }
    let scaled = counters.mod_pow(&c.0, &BigUint::from(s), pk.n());
    let mask = counters.mod_pow(pk.h(), s_prime, pk.n());
    Ok(Ciphertext(scaled * mask % pk.n()))
}

/// Map `g^(m·v) mod n → m` for every `m` in `Z_u`.
#[derive(Debug, Clone)]
pub struct DecryptionTable {
    entries: HashMap<BigUint, u64>,
}

impl DecryptionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, residue: &BigUint) -> Option<u64> {
        self.entries.get(residue).copied()
    }
}

/// Builds the full table; refuses when `u` exceeds [`TABLE_CAP`].
pub fn build_table(pk: &PublicKey, sk: &SecretKey) -> Result<DecryptionTable> {
    let u = pk.plain_modulus();
    if u > TABLE_CAP {
        return Err(Error::Config(format!(
            "u = {u} exceeds the table cap of {TABLE_CAP} entries; use the baby-step giant-step backend"
        )));
    }
    let base = pk.g().modpow(sk.v(), pk.n());
    let mut entries = HashMap::with_capacity(u as usize);
    let mut acc = BigUint::one();
    for m in 0..u {
        if entries.insert(acc.clone(), m).is_some() {
            return Err(Error::Integrity("g^v does not have order u".into()));
        }
        acc = acc * &base % pk.n();
    }
    Ok(DecryptionTable { entries })
}

/// Baby-step giant-step discrete log in `<g^v>`, which has order `u`.
#[derive(Debug, Clone)]
pub struct BsgsSolver {
    n: BigUint,
    step: u64,
    u: u64,
    baby: HashMap<BigUint, u64>,
    giant: BigUint,
}

impl BsgsSolver {
    pub fn new(pk: &PublicKey, sk: &SecretKey) -> Self {
        let u = pk.plain_modulus();
        let n = pk.n().clone();
        let base = pk.g().modpow(sk.v(), &n);
        let step = (u as f64).sqrt().ceil() as u64;
        let step = step.max(1);
        let mut baby = HashMap::with_capacity(step as usize);
        let mut acc = BigUint::one();
        for j in 0..step {
            baby.entry(acc.clone()).or_insert(j);
            acc = acc * &base % &n;
        }
        // base^-step = base^(u - step mod u)
        let giant = base.modpow(&BigUint::from((u - step % u) % u), &n);
        BsgsSolver { n, step, u, baby, giant }
    }

    /// `m` with `base^m = target`, if any.
    pub fn solve(&self, target: &BigUint) -> Option<u64> {
        let mut y = target % &self.n;
        for i in 0..self.step {
            if let Some(&j) = self.baby.get(&y) {
                let m = i * self.step + j;
                if m < self.u {
                    return Some(m);
                }
            }
            y = y * &self.giant % &self.n;
        }
        None
    }
}

/// Full-decryption backend held by the secret-key party.
#[derive(Debug, Clone)]
pub enum Decryptor {
    Table(DecryptionTable),
    Bsgs(BsgsSolver),
}

impl Decryptor {
    /// Table when `u <= TABLE_CAP`, baby-step giant-step otherwise.
    pub fn for_key(pk: &PublicKey, sk: &SecretKey) -> Result<Self> {
        if pk.plain_modulus() <= TABLE_CAP {
            Ok(Decryptor::Table(build_table(pk, sk)?))
        } else {
            Ok(Decryptor::Bsgs(BsgsSolver::new(pk, sk)))
        }
    }

    fn discrete_log(&self, residue: &BigUint) -> Option<u64> {
        match self {
            Decryptor::Table(table) => table.lookup(residue),
            Decryptor::Bsgs(solver) => solver.solve(residue),
        }
    }
}

/// Recovers `m` from `c`.
pub fn decrypt(sk: &SecretKey, decryptor: &Decryptor, c: &Ciphertext, counters: &mut OpCounters) -> Result<u64> {
    counters.full_decryptions += 1;
    let residue = counters.mod_pow(&c.0, sk.v(), sk.n());
    decryptor
        .discrete_log(&residue)
        .ok_or_else(|| Error::MalformedCiphertext("c^v is not a power of g^v".into()))
}

/// Convenience for tests and tooling: `decrypt` a batch with one counter set.
pub fn decrypt_all(sk: &SecretKey, decryptor: &Decryptor, cs: &[Ciphertext], counters: &mut OpCounters) -> Result<Vec<u64>> {
    cs.iter().map(|c| decrypt(sk, decryptor, c, counters)).collect()
}
