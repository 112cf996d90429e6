//! Secure comparison of two additively shared integers X and Y.
//!
//! Both variants end with the same three messages: A sends encryptions of
//! its shares of every `c_i`; B completes, blinds and shuffles them; A
//! zero-checks the result. Some `c_i` is zero exactly when `Y > X`.
//!
//! * [`Variant::P1`] first computes shares of `d_i = x_i ⊕ y_i` with two
//!   interactive share-product rounds per bit, then uses
//!   `c_i = x_i − y_i + 1 + Σ_{j>i} d_j`.
//! * [`Variant::P3`] skips the XOR entirely: `d_i = x_i − y_i` is computed
//!   locally and the prefix test uses signed digits weighted by powers of
//!   two, `c_i = d_i + 1 + Σ_{j>i} 2^(j−i)·d_j`. The weight of each digit
//!   exceeds the sum of all lower weights, so the prefix sum is zero only
//!   when every digit is, and its sign follows the most significant
//!   nonzero digit.

mod machine;
mod run;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::seq::SliceRandom;

pub use machine::{ComparatorA, ComparatorB, Party};
pub use run::{drive, run_comparison, run_comparison_with};

use crate::arith::SeededRng;
use crate::cipher::{self, Ciphertext, Decryptor};
use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::keygen::{PublicKey, SecretKey};
use crate::sharing::{local_linear, zu, BitShare, SharedInteger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Holds the secret key; learns the outcome first.
    A,
    B,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::A => "A",
            Role::B => "B",
        })
    }
}

/// Which comparison protocol to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Baseline: interactive XOR of every bit pair.
    P1,
    /// XOR-free: local signed differences with power-of-two weights.
    P3,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::P1 => "p1",
            Variant::P3 => "p3",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Variant::P1),
            "p3" => Ok(Variant::P3),
            other => Err(Error::Parameter(format!("unknown protocol {other:?} (expected p1 or p3)"))),
        }
    }
}

/// How P1's share-product rounds are grouped into messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum P2Schedule {
    /// Two round trips, each covering every bit.
    #[default]
    Batched,
    /// Two round trips per bit.
    PerBit,
}

/// `Greater` means `Y > X`; ties are `NotGreater`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparisonOutcome {
    Greater,
    NotGreater,
}

impl ComparisonOutcome {
    pub fn from_greater(greater: bool) -> Self {
        if greater {
            ComparisonOutcome::Greater
        } else {
            ComparisonOutcome::NotGreater
        }
    }

    pub fn is_greater(self) -> bool {
        self == ComparisonOutcome::Greater
    }
}

impl fmt::Display for ComparisonOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonOutcome::Greater => "GREATER",
            ComparisonOutcome::NotGreater => "NOT_GREATER",
        })
    }
}

/// Everything one party holds during a single comparison.
#[derive(Debug)]
pub struct PartySession {
    role: Role,
    pk: Arc<PublicKey>,
    sk: Option<Arc<SecretKey>>,
    decryptor: Option<Arc<Decryptor>>,
    x_shares: SharedInteger,
    y_shares: SharedInteger,
    rng: SeededRng,
    counters: OpCounters,
    c_shares: Vec<u64>,
}

impl PartySession {
    /// Session for the key holder. `decryptor` is only needed by P1.
    pub fn party_a(
        pk: Arc<PublicKey>,
        sk: Arc<SecretKey>,
        decryptor: Option<Arc<Decryptor>>,
        x_shares: SharedInteger,
        y_shares: SharedInteger,
        rng: SeededRng,
    ) -> Result<Self> {
        Self::new(Role::A, pk, Some(sk), decryptor, x_shares, y_shares, rng)
    }

    pub fn party_b(pk: Arc<PublicKey>, x_shares: SharedInteger, y_shares: SharedInteger, rng: SeededRng) -> Result<Self> {
        Self::new(Role::B, pk, None, None, x_shares, y_shares, rng)
    }

    fn new(
        role: Role,
        pk: Arc<PublicKey>,
        sk: Option<Arc<SecretKey>>,
        decryptor: Option<Arc<Decryptor>>,
        x_shares: SharedInteger,
        y_shares: SharedInteger,
        rng: SeededRng,
    ) -> Result<Self> {
        let l = x_shares.len();
        if l == 0 || l != y_shares.len() {
            return Err(Error::Protocol(format!(
                "share lengths must be equal and nonzero, got {} and {}",
                l,
                y_shares.len()
            )));
        }
        // |c_i| <= 2^l must stay below u for the zero test to be exact.
        let u = pk.plain_modulus();
        if l >= 62 || u < 1u64 << (l + 1) {
            return Err(Error::Parameter(format!("u = {u} is too small for {l}-bit comparisons")));
        }
        let in_range = |s: &SharedInteger| s.bits().iter().all(|b| b.value() < u);
        if !in_range(&x_shares) || !in_range(&y_shares) {
            return Err(Error::Domain("share value not below u".into()));
        }
        Ok(PartySession {
            role,
            pk,
            sk,
            decryptor,
            x_shares,
            y_shares,
            rng,
            counters: OpCounters::new(),
            c_shares: Vec::new(),
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Number of compared bits.
    pub fn l(&self) -> usize {
        self.x_shares.len()
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn x_shares(&self) -> &SharedInteger {
        &self.x_shares
    }

    pub fn y_shares(&self) -> &SharedInteger {
        &self.y_shares
    }

    /// This party's shares of `c_1..c_l` from the last comparison step.
    pub fn c_shares(&self) -> &[u64] {
        &self.c_shares
    }

    fn u(&self) -> u64 {
        self.pk.plain_modulus()
    }

    fn require(&self, role: Role, step: &str) -> Result<()> {
        if self.role != role {
            return Err(Error::State(format!("{step} must be run by party {role}, not {}", self.role)));
        }
        Ok(())
    }

    fn secret_key(&self) -> Result<&SecretKey> {
        self.sk.as_deref().ok_or_else(|| Error::State("session holds no secret key".into()))
    }
}

/// Share-product round, first message: A encrypts its input `p_A`.
pub fn p2_request(a: &mut PartySession, p_a: BitShare) -> Result<Ciphertext> {
    a.require(Role::A, "p2_request")?;
    cipher::encrypt(&a.pk, p_a.value(), &mut a.rng, &mut a.counters)
}

/// Share-product round, reply with a fresh mask `r`: returns
/// `E(p_A·q_B − r)` and keeps `r` as B's share of the product.
pub fn p2_respond(b: &mut PartySession, c: &Ciphertext, q_b: BitShare) -> Result<(Ciphertext, BitShare)> {
    let r = b.rng.uniform_below_u64(b.u());
    let response = p2_respond_with_mask(b, c, q_b, r)?;
    Ok((response, BitShare::new(r, b.u())?))
}

/// [`p2_respond`] with a caller-chosen mask.
pub fn p2_respond_with_mask(b: &mut PartySession, c: &Ciphertext, q_b: BitShare, r: u64) -> Result<Ciphertext> {
    b.require(Role::B, "p2_respond")?;
    let u = b.u();
    let scaled = cipher::homomorphic_scale(&b.pk, c, &BigUint::from(q_b.value()), &mut b.counters);
    // the encryption of −r carries a fresh h^r', rerandomizing the reply
    let mask = cipher::encrypt(&b.pk, zu::neg(r % u, u), &mut b.rng, &mut b.counters)?;
    Ok(cipher::homomorphic_add(&b.pk, &scaled, &mask))
}

/// Share-product round, last step: A decrypts `p_A·q_B − r`.
pub fn p2_finish(a: &mut PartySession, response: &Ciphertext) -> Result<BitShare> {
    a.require(Role::A, "p2_finish")?;
    let decryptor = a
        .decryptor
        .as_deref()
        .ok_or_else(|| Error::State("party A has no decryption backend".into()))?;
    let sk = a.sk.as_deref().ok_or_else(|| Error::State("session holds no secret key".into()))?;
    let m = cipher::decrypt(sk, decryptor, response, &mut a.counters)
        .map_err(|e| Error::Integrity(format!("share-product reply: {e}")))?;
    BitShare::new(m, a.pk.plain_modulus())
}

/// One party's share of `p ⊕ q = p + q − 2pq`, given its shares of `p`, `q`
/// and of the two cross products `p_A·q_B` and `p_B·q_A`.
pub fn xor_combine(p: BitShare, q: BitShare, cross_1: BitShare, cross_2: BitShare, u: u64) -> BitShare {
    let local = zu::mul(p.value(), q.value(), u);
    let products = zu::add(zu::add(local, cross_1.value(), u), cross_2.value(), u);
    let linear = zu::add(p.value(), q.value(), u);
    let share = zu::sub(linear, zu::mul(2, products, u), u);
    BitShare::new(share, u).expect("reduced mod u")
}

/// Shares of `p ⊕ q` for two in-process sessions: two share-product rounds
/// (A's `p_A` against B's `q_B`, then A's `q_A` against B's `p_B`) and a
/// local combination on each side.
pub fn xor_shares(
    a: &mut PartySession,
    b: &mut PartySession,
    p: (BitShare, BitShare),
    q: (BitShare, BitShare),
) -> Result<(BitShare, BitShare)> {
    let (p_a, p_b) = p;
    let (q_a, q_b) = q;
    let u = a.u();

    let req = p2_request(a, p_a)?;
    let (resp, r1) = p2_respond(b, &req, q_b)?;
    let t1 = p2_finish(a, &resp)?;

    let req = p2_request(a, q_a)?;
    let (resp, r2) = p2_respond(b, &req, p_b)?;
    let t2 = p2_finish(a, &resp)?;

    Ok((xor_combine(p_a, q_a, t1, t2, u), xor_combine(p_b, q_b, r1, r2, u)))
}

/// P1, local: shares of `c_i = x_i − y_i + 1 + Σ_{j>i} d_j`, where
/// `d_shares` are this party's shares of `x_j ⊕ y_j`. Only A adds the `+1`.
pub fn compute_c_shares_p1(session: &mut PartySession, d_shares: &[BitShare]) -> Result<Vec<u64>> {
    let l = session.l();
    if d_shares.len() != l {
        return Err(Error::Protocol(format!("expected {l} XOR shares, got {}", d_shares.len())));
    }
    let u = session.u();
    let constant = u64::from(session.role == Role::A);
    let mut c = Vec::with_capacity(l);
    for i in 1..=l {
        let mut shares = vec![session.x_shares.bit(i), session.y_shares.bit(i)];
        let mut coeffs = vec![1, u - 1];
        shares.extend_from_slice(&d_shares[i..]);
        coeffs.extend(std::iter::repeat_n(1, l - i));
        c.push(local_linear(&shares, &coeffs, constant, u)?);
    }
    session.c_shares = c.clone();
    Ok(c)
}

/// Shares of `w_i = Σ_{j>i} 2^(j−i)·d_j` for `i = 1..=l` from shares of the
/// digits `d_1..d_l` (least significant first). `w_l` is the empty sum.
pub fn weighted_prefix_sums(d: &[u64], u: u64) -> Vec<u64> {
    let mut w = vec![0u64; d.len()];
    // w_i = 2·(d_{i+1} + w_{i+1})
    for i in (0..d.len().saturating_sub(1)).rev() {
        w[i] = zu::mul(2, zu::add(d[i + 1], w[i + 1], u), u);
    }
    w
}

/// P3, fully local: shares of `c_i = d_i + 1 + w_i` with
/// `d_i = x_i − y_i`. Only A adds the `+1`.
pub fn compute_c_shares_p3(session: &mut PartySession) -> Vec<u64> {
    let u = session.u();
    let d: Vec<u64> = session
        .x_shares
        .bits()
        .iter()
        .zip(session.y_shares.bits())
        .map(|(x, y)| zu::sub(x.value(), y.value(), u))
        .collect();
    let w = weighted_prefix_sums(&d, u);
    let constant = u64::from(session.role == Role::A);
    let c: Vec<u64> = d
        .iter()
        .zip(&w)
        .map(|(&d_i, &w_i)| zu::add(zu::add(d_i, w_i, u), constant, u))
        .collect();
    session.c_shares = c.clone();
    c
}

/// A encrypts its shares `α_i` of every `c_i`.
pub fn encrypt_c_batch(a: &mut PartySession) -> Result<Vec<Ciphertext>> {
    a.require(Role::A, "encrypt_c_batch")?;
    if a.c_shares.len() != a.l() {
        return Err(Error::State("c shares have not been computed".into()));
    }
    let alphas = a.c_shares.clone();
    alphas
        .into_iter()
        .map(|alpha| cipher::encrypt(&a.pk, alpha, &mut a.rng, &mut a.counters))
        .collect()
}

/// B blinds: `γ_i = (E(α_i)·g^β_i)^s_i · h^s'_i` with fresh `s_i ∈ Z_u^*`
/// and 2t-bit `s'_i`, returned in a uniformly shuffled order.
pub fn blind_permute(b: &mut PartySession, batch: &[Ciphertext], beta: &[u64]) -> Result<Vec<Ciphertext>> {
    b.require(Role::B, "blind_permute")?;
    let l = b.l();
    if batch.len() != l || beta.len() != l {
        return Err(Error::Protocol(format!(
            "expected {l} ciphertexts and shares, got {} and {}",
            batch.len(),
            beta.len()
        )));
    }
    let u = b.u();
    let mut gammas = Vec::with_capacity(l);
    for (c, &beta_i) in batch.iter().zip(beta) {
        let completed = cipher::add_plaintext(&b.pk, c, beta_i % u, &mut b.counters);
        let s = 1 + b.rng.uniform_below_u64(u - 1);
        let s_prime = b.rng.random_bits(b.pk.randomizer_bits());
        gammas.push(cipher::blind(&b.pk, &completed, s, &s_prime, &mut b.counters)?);
    }
    gammas.shuffle(&mut b.rng);
    Ok(gammas)
}

/// A tests: `Greater` iff some `γ` encrypts zero. Every ciphertext is
/// checked, hit or not.
pub fn detect_zero(a: &mut PartySession, gammas: &[Ciphertext]) -> Result<ComparisonOutcome> {
    a.require(Role::A, "detect_zero")?;
    if gammas.len() != a.l() {
        return Err(Error::Protocol(format!("expected {} blinded values, got {}", a.l(), gammas.len())));
    }
    let sk = a.secret_key()?.clone();
    let mut hits = 0usize;
    for gamma in gammas {
        if cipher::is_zero(&sk, gamma, &mut a.counters) {
            hits += 1;
        }
    }
    Ok(ComparisonOutcome::from_greater(hits > 0))
}

/// `Σ_j d_j·2^j` over signed digits `d_1..d_l` in `{−1, 0, 1}` (least
/// significant first). Zero exactly when every digit is zero.
pub fn signed_digit_weight(digits: &[i8]) -> Result<i128> {
    if digits.len() > 120 {
        return Err(Error::Parameter("at most 120 digits supported".into()));
    }
    digits.iter().enumerate().try_fold(0i128, |acc, (idx, &d)| {
        if !(-1..=1).contains(&d) {
            return Err(Error::Domain(format!("digit {d} not in {{-1, 0, 1}}")));
        }
        Ok(acc + i128::from(d) * (1i128 << (idx + 1)))
    })
}

/// Signed integer values of `c_1..c_l` for plaintext inputs; used to audit
/// runs, never by the parties themselves.
pub fn plaintext_c_values(variant: Variant, x: u64, y: u64, l: usize) -> Vec<i64> {
    let bit = |v: u64, i: usize| ((v >> (i - 1)) & 1) as i64;
    (1..=l)
        .map(|i| {
            let diff = bit(x, i) - bit(y, i);
            let tail: i64 = match variant {
                Variant::P1 => (i + 1..=l).map(|j| bit(x, j) ^ bit(y, j)).sum(),
                Variant::P3 => (i + 1..=l).map(|j| (bit(x, j) - bit(y, j)) << (j - i)).sum(),
            };
            diff + 1 + tail
        })
        .collect()
}
