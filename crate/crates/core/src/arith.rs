//! Arbitrary-precision helpers: modular exponentiation, Miller–Rabin,
//! prime sampling, CRT and the seeded random stream every protocol draws from.

use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Rounds used wherever the crate needs "a prime" (error bound 2^-80).
pub const MILLER_RABIN_ROUNDS: u32 = 40;

const SMALL_PRIME_LIMIT: u32 = 2000;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = SMALL_PRIME_LIMIT as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// `base^exp mod modulus`.
pub fn mod_pow(base: &BigUint, exp: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus < &BigUint::from(2u8) {
        return Err(Error::Parameter(format!("modulus must be at least 2, got {modulus}")));
    }
    Ok(base.modpow(exp, modulus))
}

/// Quick composite filter by trial division. `None` means inconclusive.
fn trial_division(n: &BigUint) -> Option<bool> {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return Some(false);
        }
        for &p in small_primes() {
            let p = u64::from(p);
            if p * p > small {
                return Some(true);
            }
            if small % p == 0 {
                return Some(small == p);
            }
        }
        return None;
    }
    for &p in small_primes() {
        if (n % p).is_zero() {
            return Some(false);
        }
    }
    None
}

/// Miller–Rabin with `rounds` pseudo-random bases.
///
/// Always true for primes; a composite survives with probability at most
/// `4^-rounds`.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> Result<bool> {
    if rounds == 0 {
        return Err(Error::Parameter("Miller-Rabin needs at least one round".into()));
    }
    if let Some(answer) = trial_division(n) {
        return Ok(answer);
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    // Bases come from a fixed stream so the test is a pure function of n.
    let mut base_rng = ChaCha20Rng::seed_from_u64(0x6d69_6c6c_6572_7261);
    let two = BigUint::from(2u8);
    let upper = n - &two; // bases drawn from [2, n-2)
    'witness: for _ in 0..rounds {
        let a = base_rng.gen_biguint_range(&two, &upper);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Uniform `bits`-bit integer with the top bit set; odd when `bits >= 3`.
pub(crate) fn prime_candidate(bits: u64, rng: &mut SeededRng) -> BigUint {
    let mut candidate = rng.random_bits(bits);
    candidate.set_bit(bits - 1, true);
    if bits >= 3 {
        candidate.set_bit(0, true);
    }
    candidate
}

/// Probable prime with exactly `bits` bits.
pub fn random_prime(bits: u64, rng: &mut SeededRng) -> Result<BigUint> {
    if bits < 2 {
        return Err(Error::Parameter(format!("a prime needs at least 2 bits, got {bits}")));
    }
    loop {
        let candidate = prime_candidate(bits, rng);
        if is_probable_prime(&candidate, MILLER_RABIN_ROUNDS)? {
            return Ok(candidate);
        }
    }
}

/// The unique `x` in `[0, pq)` with `x ≡ a_p (mod p)` and `x ≡ a_q (mod q)`.
pub fn crt_combine(a_p: &BigUint, a_q: &BigUint, p: &BigUint, q: &BigUint) -> Result<BigUint> {
    if p.is_zero() || q.is_zero() || !p.gcd(q).is_one() {
        return Err(Error::Parameter(format!("CRT moduli {p} and {q} are not coprime")));
    }
    let a_p = a_p % p;
    let a_q = a_q % q;
    if q.is_one() {
        return Ok(a_p);
    }
    // p^-1 mod q exists because gcd(p, q) = 1.
    let p_inv = (p % q)
        .modinv(q)
        .ok_or_else(|| Error::Parameter("no inverse of p modulo q".into()))?;
    let diff = (&a_q + q - (&a_p % q)) % q;
    let k = (diff * p_inv) % q;
    Ok(a_p + p * k)
}

/// Seeded ChaCha20 stream.
///
/// Equal seeds (and stream ids) give equal outputs, which is what makes
/// whole protocol runs reproducible.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn from_seed(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent sub-stream of the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    /// Seeded from OS entropy; for production entry points.
    pub fn from_entropy() -> Self {
        Self::from_seed(rand::rngs::OsRng.next_u64())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, bound)` by rejection sampling. `bound` must be nonzero.
    pub fn uniform_below(&mut self, bound: &BigUint) -> BigUint {
        assert!(!bound.is_zero(), "uniform_below: empty range");
        let bits = bound.bits();
        loop {
            let candidate = self.random_bits(bits);
            if &candidate < bound {
                return candidate;
            }
        }
    }

    /// Uniform in `[0, bound)`; `bound` must be nonzero.
    pub fn uniform_below_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "uniform_below_u64: empty range");
        self.inner.gen_range(0..bound)
    }

    /// Uniform in `[0, 2^bits)`.
    pub fn random_bits(&mut self, bits: u64) -> BigUint {
        self.inner.gen_biguint(bits)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
