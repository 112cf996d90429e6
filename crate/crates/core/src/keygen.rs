//! Key material for the small-plaintext cipher.
//!
//! `n = p·q` with `p = 2·u·v_p·f_p + 1` and `q = 2·u·v_q·f_q + 1`, so that
//! `Z_n^*` contains an element `g` of order `u·v` and an element `h` of
//! order `v = v_p·v_q`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{crt_combine, is_probable_prime, prime_candidate, random_prime, SeededRng, MILLER_RABIN_ROUNDS};
use crate::error::{Error, Result};

/// Largest supported comparison width; keeps `u` below 2^50 so plaintext
/// arithmetic fits in machine words.
pub const MAX_L: u32 = 48;

/// Give up after this many rejected (v, f) candidates for one prime.
const MAX_PRIME_ATTEMPTS: usize = 1_000_000;

/// Bit sizes: `k` for n, `t` for v, `l` for the compared integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub k: u32,
    pub t: u32,
    pub l: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { k: 1024, t: 160, l: 16 }
    }
}

impl Params {
    /// Checks `k > t > l >= 1`, `k` even and `l <= MAX_L`.
    pub fn new(k: u32, t: u32, l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Parameter("l must be at least 1".into()));
        }
        if l > MAX_L {
            return Err(Error::Parameter(format!("l = {l} exceeds the supported maximum {MAX_L}")));
        }
        if t <= l {
            return Err(Error::Parameter(format!("need t > l, got t = {t}, l = {l}")));
        }
        if k <= t {
            return Err(Error::Parameter(format!("need k > t, got k = {k}, t = {t}")));
        }
        if !k.is_multiple_of(2) {
            return Err(Error::Parameter(format!("k must be even, got {k}")));
        }
        Ok(Params { k, t, l })
    }

    /// Bit length of the plaintext modulus u.
    pub fn u_bits(&self) -> u32 {
        self.l + 2
    }

    /// Bit length of each of v_p and v_q.
    pub fn v_factor_bits(&self) -> u32 {
        self.t.div_ceil(2) + 1
    }

    /// Smallest even k leaving room for the cofactor primes at these t, l.
    pub fn min_k(t: u32, l: u32) -> u32 {
        let half = l + 2 + t.div_ceil(2) + 3;
        2 * half
    }

    /// Errors unless `k/2 > (l+2) + ceil(t/2) + 2`.
    pub fn check_room(&self) -> Result<()> {
        if self.k < Self::min_k(self.t, self.l) {
            return Err(Error::Config(format!(
                "k = {} leaves no room for cofactor primes at t = {}, l = {} (need k >= {})",
                self.k,
                self.t,
                self.l,
                Self::min_k(self.t, self.l)
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} t={} l={}", self.k, self.t, self.l)
    }
}

/// `pk = (n, g, h, u)` plus the sizes it was generated for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    params: Params,
    n: BigUint,
    g: BigUint,
    h: BigUint,
    u: BigUint,
    u_small: u64,
}

impl PublicKey {
    /// Assembles a key without checking the algebraic invariants; use
    /// [`validate_keys`] for that.
    pub fn from_parts(params: Params, n: BigUint, g: BigUint, h: BigUint, u: BigUint) -> Result<Self> {
        if n < BigUint::from(3u8) {
            return Err(Error::Parameter("modulus n is too small".into()));
        }
        let u_small = u
            .to_u64()
            .filter(|&v| (2..(1u64 << (MAX_L + 3))).contains(&v))
            .ok_or_else(|| Error::Parameter(format!("plaintext modulus u = {u} out of range")))?;
        Ok(PublicKey { params, n, g, h, u, u_small })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn h(&self) -> &BigUint {
        &self.h
    }

    pub fn u(&self) -> &BigUint {
        &self.u
    }

    /// u as a machine word; all share arithmetic happens modulo this.
    pub fn plain_modulus(&self) -> u64 {
        self.u_small
    }

    /// Bit length of encryption randomizers (2t).
    pub fn randomizer_bits(&self) -> u64 {
        2 * u64::from(self.params.t)
    }
}

/// `sk = (p, q, v_p, v_q)`, with `v = v_p·v_q` and `n` cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    p: BigUint,
    q: BigUint,
    v_p: BigUint,
    v_q: BigUint,
    v: BigUint,
    n: BigUint,
}

impl SecretKey {
    pub fn from_parts(p: BigUint, q: BigUint, v_p: BigUint, v_q: BigUint) -> Self {
        let v = &v_p * &v_q;
        let n = &p * &q;
        SecretKey { p, q, v_p, v_q, v, n }
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn v_p(&self) -> &BigUint {
        &self.v_p
    }

    pub fn v_q(&self) -> &BigUint {
        &self.v_q
    }

    pub fn v(&self) -> &BigUint {
        &self.v
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }
}

/// Finds `(prime, v_factor)` with `prime = 2·u·v_factor·f + 1` of exactly
/// `bits` bits, `v_factor` a fresh prime not in `exclude`, `f` prime.
fn factor_structured_prime(
    u: &BigUint,
    v_bits: u64,
    bits: u64,
    exclude: &[&BigUint],
    rng: &mut SeededRng,
) -> Result<(BigUint, BigUint)> {
    let f_bits = bits
        .checked_sub(u.bits() + v_bits)
        .filter(|&b| b >= 2)
        .ok_or_else(|| Error::Config("no room for the cofactor prime".into()))?;
    let mut attempts = 0usize;
    loop {
        let v_factor = random_prime(v_bits, rng)?;
        if exclude.contains(&&v_factor) {
            continue;
        }
        let base = (u * &v_factor) << 1u32;
        for _ in 0..256 {
            attempts += 1;
            if attempts > MAX_PRIME_ATTEMPTS {
                return Err(Error::Config(format!(
                    "could not find a {bits}-bit prime of the form 2*u*v*f+1"
                )));
            }
            // Cheap single-round screens first, full rounds only on survivors.
            let f = prime_candidate(f_bits, rng);
            let candidate = &base * &f + 1u32;
            if candidate.bits() != bits {
                continue;
            }
            if !is_probable_prime(&f, 1)? || !is_probable_prime(&candidate, 1)? {
                continue;
            }
            if is_probable_prime(&f, MILLER_RABIN_ROUNDS)? && is_probable_prime(&candidate, MILLER_RABIN_ROUNDS)? {
                return Ok((candidate, v_factor));
            }
        }
    }
}

/// Element of `Z_prime^*` whose order is exactly the product of the
/// distinct primes in `order_primes`.
fn element_of_order(prime: &BigUint, order_primes: &[&BigUint], rng: &mut SeededRng) -> BigUint {
    let order: BigUint = order_primes.iter().fold(BigUint::one(), |acc, &w| acc * w);
    let cofactor = (prime - 1u32) / &order;
    let two = BigUint::from(2u8);
    let span = prime - 3u32;
    loop {
        let x = rng.uniform_below(&span) + &two;
        let candidate = x.modpow(&cofactor, prime);
        let exact = order_primes
            .iter()
            .all(|&w| !candidate.modpow(&(&order / w), prime).is_one());
        if exact {
            return candidate;
        }
    }
}

/// Generates a key pair for `params`, deterministic in `rng`.
pub fn generate_keys(params: Params, rng: &mut SeededRng) -> Result<(PublicKey, SecretKey)> {
    let params = Params::new(params.k, params.t, params.l)?;
    params.check_room()?;
    let half = u64::from(params.k / 2);
    let v_bits = u64::from(params.v_factor_bits());

    let u = random_prime(u64::from(params.u_bits()), rng)?;
    let (p, v_p) = factor_structured_prime(&u, v_bits, half, &[&u], rng)?;
    let (q, v_q) = loop {
        let (q, v_q) = factor_structured_prime(&u, v_bits, half, &[&u, &v_p], rng)?;
        if q != p {
            break (q, v_q);
        }
    };

    let g_p = element_of_order(&p, &[&u, &v_p], rng);
    let g_q = element_of_order(&q, &[&u, &v_q], rng);
    let h_p = element_of_order(&p, &[&v_p], rng);
    let h_q = element_of_order(&q, &[&v_q], rng);
    let g = crt_combine(&g_p, &g_q, &p, &q)?;
    let h = crt_combine(&h_p, &h_q, &p, &q)?;

    let sk = SecretKey::from_parts(p, q, v_p, v_q);
    let pk = PublicKey::from_parts(params, sk.n.clone(), g, h, u)?;
    Ok((pk, sk))
}

/// Hand-checkable toy key: u = 11, v_p = 3, v_q = 5, p = 67, q = 331,
/// n = 22177, g = 4 (order 165), h = 269 (order 15). Insecure; tests only.
pub fn toy_keys() -> (PublicKey, SecretKey) {
    let sk = SecretKey::from_parts(67u32.into(), 331u32.into(), 3u32.into(), 5u32.into());
    let params = Params { k: 16, t: 4, l: 2 };
    let pk = PublicKey::from_parts(params, sk.n.clone(), 4u32.into(), 269u32.into(), 11u32.into())
        .expect("toy key is well-formed");
    (pk, sk)
}

/// One named invariant in a [`KeyReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyCheck {
    pub name: &'static str,
    pub passed: bool,
}

/// Pass/fail for every structural property of a key pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyReport {
    pub checks: Vec<KeyCheck>,
}

impl KeyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &KeyCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for KeyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(f, "[{}] {}", if check.passed { "pass" } else { "FAIL" }, check.name)?;
        }
        Ok(())
    }
}

/// True iff `x` has multiplicative order exactly `order` modulo `n`, where
/// `order` is the product of the distinct primes `order_primes`.
fn has_exact_order(x: &BigUint, n: &BigUint, order_primes: &[&BigUint]) -> bool {
    let order: BigUint = order_primes.iter().fold(BigUint::one(), |acc, &w| acc * w);
    x.modpow(&order, n).is_one() && order_primes.iter().all(|&w| !x.modpow(&(&order / w), n).is_one())
}

/// Checks every constraint the cipher relies on. Never fails; problems show
/// up as failed entries.
pub fn validate_keys(pk: &PublicKey, sk: &SecretKey) -> KeyReport {
    let prime = |x: &BigUint| is_probable_prime(x, MILLER_RABIN_ROUNDS).unwrap_or(false);
    let divides = |d: &BigUint, x: &BigUint| !d.is_zero() && (x % d).is_zero();
    let unit = |x: &BigUint| !x.is_zero() && x < &pk.n && x.gcd(&pk.n).is_one();
    let params = pk.params;
    let p1 = &sk.p - 1u32;
    let q1 = &sk.q - 1u32;
    let distinct_factors = pk.u != sk.v_p && pk.u != sk.v_q && sk.v_p != sk.v_q;

    let checks = vec![
        ("k > t > l", params.k > params.t && params.t > params.l && params.l >= 1),
        ("p prime", prime(&sk.p)),
        ("q prime", prime(&sk.q)),
        ("p != q", sk.p != sk.q),
        ("n = p*q", pk.n == &sk.p * &sk.q),
        ("u prime", prime(&pk.u)),
        ("v_p prime", prime(&sk.v_p)),
        ("v_q prime", prime(&sk.v_q)),
        ("u, v_p, v_q pairwise distinct", distinct_factors),
        ("v = v_p*v_q", sk.v == &sk.v_p * &sk.v_q),
        ("u divides p-1", divides(&pk.u, &p1)),
        ("u divides q-1", divides(&pk.u, &q1)),
        ("v_p divides p-1", divides(&sk.v_p, &p1)),
        ("v_q divides q-1", divides(&sk.v_q, &q1)),
        ("u has l+2 bits", pk.u.bits() == u64::from(params.u_bits())),
        ("v has at least t bits", sk.v.bits() >= u64::from(params.t)),
        ("g in Z_n^*", unit(&pk.g)),
        ("h in Z_n^*", unit(&pk.h)),
        ("order of g is u*v", distinct_factors && has_exact_order(&pk.g, &pk.n, &[&pk.u, &sk.v_p, &sk.v_q])),
        ("order of h is v", sk.v_p != sk.v_q && has_exact_order(&pk.h, &pk.n, &[&sk.v_p, &sk.v_q])),
    ];
    KeyReport {
        checks: checks.into_iter().map(|(name, passed)| KeyCheck { name, passed }).collect(),
    }
}

/// On-disk JSON form; big integers are base-10 strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub k: u32,
    pub t: u32,
    pub l: u32,
    pub n: String,
    pub g: String,
    pub h: String,
    pub u: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_q: Option<String>,
}

fn parse_decimal(field: &str, value: &str) -> Result<BigUint> {
    BigUint::parse_bytes(value.as_bytes(), 10)
        .ok_or_else(|| Error::KeyFile(format!("field {field:?} is not a base-10 integer")))
}

impl KeyFile {
    /// Pass `None` for a public-only export.
    pub fn new(pk: &PublicKey, sk: Option<&SecretKey>) -> Self {
        let params = pk.params;
        KeyFile {
            k: params.k,
            t: params.t,
            l: params.l,
            n: pk.n.to_str_radix(10),
            g: pk.g.to_str_radix(10),
            h: pk.h.to_str_radix(10),
            u: pk.u.to_str_radix(10),
            p: sk.map(|s| s.p.to_str_radix(10)),
            q: sk.map(|s| s.q.to_str_radix(10)),
            v_p: sk.map(|s| s.v_p.to_str_radix(10)),
            v_q: sk.map(|s| s.v_q.to_str_radix(10)),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("key file serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::KeyFile(e.to_string()))
    }

    pub fn public_key(&self) -> Result<PublicKey> {
        let params = Params { k: self.k, t: self.t, l: self.l };
        PublicKey::from_parts(
            params,
            parse_decimal("n", &self.n)?,
            parse_decimal("g", &self.g)?,
            parse_decimal("h", &self.h)?,
            parse_decimal("u", &self.u)?,
        )
    }

    /// `Ok(None)` for a public-only file; an error if only some secret
    /// fields are present.
    pub fn secret_key(&self) -> Result<Option<SecretKey>> {
        match (&self.p, &self.q, &self.v_p, &self.v_q) {
            (None, None, None, None) => Ok(None),
            (Some(p), Some(q), Some(v_p), Some(v_q)) => Ok(Some(SecretKey::from_parts(
                parse_decimal("p", p)?,
                parse_decimal("q", q)?,
                parse_decimal("v_p", v_p)?,
                parse_decimal("v_q", v_q)?,
            ))),
            _ => Err(Error::KeyFile("secret key fields p, q, v_p, v_q must all be present or all absent".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multiplicative_order(x: u64, n: u64) -> u64 {
        let mut y = x % n;
        let mut k = 1;
        while y != 1 {
            y = y * x % n;
            k += 1;
        }
        k
    }

    #[test]
    fn params_ordering() {
        assert!(Params::new(1024, 160, 16).is_ok());
        assert!(Params::new(100, 160, 16).is_err());
        assert!(Params::new(1024, 16, 16).is_err());
        assert!(Params::new(1023, 160, 16).is_err());
        assert!(Params::new(1024, 160, 0).is_err());
        assert!(Params::new(1024, 160, MAX_L + 1).is_err());
        assert!(Params::new(16, 8, 2).unwrap().check_room().is_err());
        assert_eq!(Params::min_k(8, 2), 22);
        assert!(Params::new(22, 8, 2).unwrap().check_room().is_ok());
    }

    #[test]
    fn toy_key_structure_by_factorization() {
        // 66 = 2*3*11 and 330 = 2*3*5*11
        assert_eq!(66, 2 * 3 * 11);
        assert_eq!(330, 2 * 3 * 5 * 11);
        assert_eq!(67 * 331, 22177);
        assert_eq!(multiplicative_order(4, 22177), 165);
        assert_eq!(multiplicative_order(269, 22177), 15);
        // 4 and 269 are the smallest elements of those orders
        assert!((2..4).all(|x| multiplicative_order(x, 22177) != 165));
        assert!((2..269).all(|x| num_integer::gcd(x, 22177) != 1 || multiplicative_order(x, 22177) != 15));
    }

    #[test]
    fn toy_key_report_all_pass() {
        let (pk, sk) = toy_keys();
        let report = validate_keys(&pk, &sk);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn report_flags_bad_h() {
        let (pk, sk) = toy_keys();
        let bad = PublicKey::from_parts(pk.params(), pk.n().clone(), pk.g().clone(), BigUint::one(), pk.u().clone()).unwrap();
        let report = validate_keys(&bad, &sk);
        assert_eq!(report.check("order of h is v"), Some(false));
        assert_eq!(report.check("order of g is u*v"), Some(true));
    }

    #[test]
    fn report_flags_composite_u() {
        let (pk, sk) = toy_keys();
        let bad = PublicKey::from_parts(pk.params(), pk.n().clone(), pk.g().clone(), pk.h().clone(), 12u32.into()).unwrap();
        let report = validate_keys(&bad, &sk);
        assert_eq!(report.check("u prime"), Some(false));
        assert!(!report.all_passed());
    }

    #[test]
    fn generated_small_key_is_valid_and_deterministic() {
        let params = Params::new(64, 16, 4).unwrap();
        let (pk, sk) = generate_keys(params, &mut SeededRng::from_seed(1)).unwrap();
        let report = validate_keys(&pk, &sk);
        assert!(report.all_passed(), "{report}");
        assert_eq!(pk.n().bits(), 64);
        assert_eq!(sk.p().bits(), 32);
        assert_eq!(sk.q().bits(), 32);
        assert_eq!(pk.u().bits(), 6);

        let again = generate_keys(params, &mut SeededRng::from_seed(1)).unwrap();
        assert_eq!((pk.clone(), sk.clone()), again);
        let other = generate_keys(params, &mut SeededRng::from_seed(2)).unwrap();
        assert_ne!(pk, other.0);
    }

    #[test]
    fn order_definitions_hold_for_generated_keys() {
        for seed in 0..5 {
            let params = Params::new(96, 24, 6).unwrap();
            let (pk, sk) = generate_keys(params, &mut SeededRng::from_seed(seed)).unwrap();
            let uv = pk.u() * sk.v();
            assert!(pk.h().modpow(sk.v(), pk.n()).is_one());
            assert!(pk.g().modpow(&uv, pk.n()).is_one());
            assert!(!pk.g().modpow(sk.v(), pk.n()).is_one());
            assert!(((sk.p() - 1u32) % pk.u()).is_zero());
            assert!(((sk.q() - 1u32) % pk.u()).is_zero());
            assert!(validate_keys(&pk, &sk).all_passed());
        }
    }

    #[test]
    fn tight_params_are_a_config_error() {
        let params = Params::new(20, 8, 2).unwrap();
        assert!(matches!(generate_keys(params, &mut SeededRng::from_seed(0)), Err(Error::Config(_))));
    }

    #[test]
    fn key_file_round_trip() {
        let (pk, sk) = toy_keys();
        let full = KeyFile::new(&pk, Some(&sk));
        let parsed = KeyFile::from_json(&full.to_json()).unwrap();
        assert_eq!(parsed.public_key().unwrap(), pk);
        assert_eq!(parsed.secret_key().unwrap(), Some(sk));

        let public = KeyFile::new(&pk, None).to_json();
        assert!(!public.contains("\"p\""));
        assert!(!public.contains("v_q"));
        let parsed = KeyFile::from_json(&public).unwrap();
        assert_eq!(parsed.secret_key().unwrap(), None);
        assert!(public.contains("\"n\": \"22177\""));
    }

    #[test]
    fn key_file_rejects_partial_secret() {
        let (pk, sk) = toy_keys();
        let mut file = KeyFile::new(&pk, Some(&sk));
        file.q = None;
        assert!(file.secret_key().is_err());
        file.n = "12ab".into();
        assert!(file.public_key().is_err());
    }
}
