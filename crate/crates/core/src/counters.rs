use std::fmt;
use std::ops::AddAssign;

use num_bigint::BigUint;

/// Per-party tallies of the expensive cipher operations.
///
/// One instance belongs to exactly one party session; the counts only ever
/// grow while the session is alive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounters {
    pub encryptions: u64,
    pub full_decryptions: u64,
    pub zero_checks: u64,
    pub modexps: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Modular exponentiation that is charged to this context.
    ///
    /// The modulus must be at least 2; callers inside the crate only pass key
    /// moduli, which are validated on construction.
    pub(crate) fn mod_pow(&mut self, base: &BigUint, exp: &BigUint, modulus: &BigUint) -> BigUint {
        debug_assert!(modulus > &BigUint::from(1u8));
        self.modexps += 1;
        base.modpow(exp, modulus)
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.encryptions += rhs.encryptions;
        self.full_decryptions += rhs.full_decryptions;
        self.zero_checks += rhs.zero_checks;
        self.modexps += rhs.modexps;
    }
}

impl fmt::Display for OpCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "encryptions={} full_decryptions={} zero_checks={} modexps={}",
            self.encryptions, self.full_decryptions, self.zero_checks, self.modexps
        )
    }
}
