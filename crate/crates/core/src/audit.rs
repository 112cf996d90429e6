//! Plaintext-side audit of in-process runs (debug builds).
//!
//! With both sessions in hand the harness can reconstruct X, Y and every
//! `c_i`, and confirm that the signed value of `c_i` never wraps modulo `u`:
//! `|c_i| < u`, so `c_i ≡ 0 (mod u)` exactly when `c_i = 0`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::protocols::{plaintext_c_values, PartySession, Variant};
use crate::sharing::{reconstruct_integer, zu};

static CHECKED: AtomicU64 = AtomicU64::new(0);
static VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// Process-wide totals: (`c_i` values checked, wraparound violations).
pub fn no_wraparound_stats() -> (u64, u64) {
    (CHECKED.load(Ordering::Relaxed), VIOLATIONS.load(Ordering::Relaxed))
}

/// Number of `c_i` values in a finished run whose signed magnitude reaches
/// `u` or whose shares do not reconstruct to it.
pub fn wraparound_violations(variant: Variant, a: &PartySession, b: &PartySession) -> Option<usize> {
    let u = a.public_key().plain_modulus();
    let x = reconstruct_integer(a.x_shares(), b.x_shares(), u).ok()?;
    let y = reconstruct_integer(a.y_shares(), b.y_shares(), u).ok()?;
    let expected = plaintext_c_values(variant, x, y, a.l());
    if a.c_shares().len() != expected.len() || b.c_shares().len() != expected.len() {
        return None;
    }
    let bad = expected
        .iter()
        .zip(a.c_shares().iter().zip(b.c_shares()))
        .filter(|&(&c, (&ca, &cb))| c.unsigned_abs() >= u || zu::add(ca, cb, u) != zu::from_signed(c, u))
        .count();
    Some(bad)
}

pub(crate) fn audit_run(variant: Variant, a: &PartySession, b: &PartySession) {
    if let Some(bad) = wraparound_violations(variant, a, b) {
        CHECKED.fetch_add(a.l() as u64, Ordering::Relaxed);
        VIOLATIONS.fetch_add(bad as u64, Ordering::Relaxed);
        debug_assert_eq!(bad, 0, "{variant} run produced c_i values that wrap modulo u");
    }
}
