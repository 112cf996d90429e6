use std::time::Duration;

use super::{ComparatorA, ComparatorB, ComparisonOutcome, P2Schedule, Party, PartySession, Variant};
use crate::error::{Error, Result};
use crate::transport::{memory_pair, Transport};

/// How long an in-process step waits for a message that must already be
/// queued.
const IN_PROCESS_WAIT: Duration = Duration::from_secs(10);

/// Runs one comparison between two in-process sessions over a fresh
/// in-memory link, with batched share-product rounds.
pub fn run_comparison(variant: Variant, a: &mut PartySession, b: &mut PartySession) -> Result<ComparisonOutcome> {
    let (mut ep_a, mut ep_b) = memory_pair();
    run_comparison_with(variant, P2Schedule::default(), a, b, &mut ep_a, &mut ep_b)
}

/// Steps both parties on one thread, routing every message through the
/// given endpoints (which must be connected to each other).
pub fn run_comparison_with(
    variant: Variant,
    schedule: P2Schedule,
    a: &mut PartySession,
    b: &mut PartySession,
    ep_a: &mut dyn Transport,
    ep_b: &mut dyn Transport,
) -> Result<ComparisonOutcome> {
    if a.l() != b.l() {
        return Err(Error::Protocol(format!("parties compare {} and {} bits", a.l(), b.l())));
    }
    let outcome = {
        let mut party_a = ComparatorA::new(a, variant, schedule)?;
        let mut party_b = ComparatorB::new(b, variant, schedule)?;

        let mut pending_for_b = 0usize;
        let mut pending_for_a = 0usize;
        for msg in party_a.start()? {
            ep_a.send(&msg)?;
            pending_for_b += 1;
        }
        for msg in party_b.start()? {
            ep_b.send(&msg)?;
            pending_for_a += 1;
        }
        while pending_for_a + pending_for_b > 0 {
            while pending_for_b > 0 {
                let msg = ep_b.receive(Some(IN_PROCESS_WAIT))?;
                pending_for_b -= 1;
                for reply in party_b.handle(msg)? {
                    ep_b.send(&reply)?;
                    pending_for_a += 1;
                }
            }
            while pending_for_a > 0 {
                let msg = ep_a.receive(Some(IN_PROCESS_WAIT))?;
                pending_for_a -= 1;
                for reply in party_a.handle(msg)? {
                    ep_a.send(&reply)?;
                    pending_for_b += 1;
                }
            }
        }
        match (party_a.outcome(), party_b.outcome()) {
            (Some(x), Some(y)) if x == y => x,
            (x, y) => {
                return Err(Error::Protocol(format!("run ended with outcomes A={x:?}, B={y:?}")));
            }
        }
    };
    #[cfg(debug_assertions)]
    crate::audit::audit_run(variant, a, b);
    Ok(outcome)
}

/// Runs one party to completion against a remote peer.
pub fn drive(party: &mut dyn Party, ep: &mut dyn Transport, timeout: Option<Duration>) -> Result<ComparisonOutcome> {
    for msg in party.start()? {
        ep.send(&msg)?;
    }
    while !party.is_finished() {
        let msg = ep.receive(timeout)?;
        for reply in party.handle(msg)? {
            ep.send(&reply)?;
        }
    }
    Ok(party.outcome().expect("finished parties have an outcome"))
}
