use std::net::TcpListener;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use seccmp::protocols::{drive, run_comparison_with, ComparatorA, ComparatorB};
use seccmp::transport::{memory_pair, TcpEndpoint, Transport};
use seccmp::{
    generate_keys, share_integer, validate_keys, ComparisonOutcome, Decryptor, Error, KeyFile, P2Schedule, Params,
    PartySession, ProtocolMessage, PublicKey, SecretKey, SeededRng, Variant,
};

const TIMEOUT: Option<Duration> = Some(Duration::from_secs(20));

fn keys(l: u32) -> (Arc<PublicKey>, Arc<SecretKey>, Arc<Decryptor>) {
    let (pk, sk) = generate_keys(Params::new(128, 32, l).unwrap(), &mut SeededRng::from_seed(17)).unwrap();
    let dec = Decryptor::for_key(&pk, &sk).unwrap();
    (Arc::new(pk), Arc::new(sk), Arc::new(dec))
}

fn sessions(l: u32, x: u64, y: u64, seed: u64) -> (PartySession, PartySession) {
    let (pk, sk, dec) = keys(l);
    let u = pk.plain_modulus();
    let mut rng = SeededRng::with_stream(seed, 0);
    let (xa, xb) = share_integer(x, l, u, &mut rng).unwrap();
    let (ya, yb) = share_integer(y, l, u, &mut rng).unwrap();
    let a = PartySession::party_a(pk.clone(), sk, Some(dec), xa, ya, SeededRng::with_stream(seed, 1)).unwrap();
    let b = PartySession::party_b(pk, xb, yb, SeededRng::with_stream(seed, 2)).unwrap();
    (a, b)
}

/// Each party on its own thread, over loopback TCP.
fn threaded_tcp(variant: Variant, schedule: P2Schedule, mut a: PartySession, mut b: PartySession) -> (ComparisonOutcome, ComparisonOutcome, Vec<u8>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let b_thread = thread::spawn(move || {
        let mut ep = TcpEndpoint::accept(&listener, TIMEOUT).unwrap();
        let mut party = ComparatorB::new(&mut b, variant, schedule).unwrap();
        drive(&mut party, &mut ep, TIMEOUT).unwrap()
    });
    let mut ep = TcpEndpoint::connect(addr, TIMEOUT).unwrap();
    let mut party = ComparatorA::new(&mut a, variant, schedule).unwrap();
    let outcome_a = drive(&mut party, &mut ep, TIMEOUT).unwrap();
    let outcome_b = b_thread.join().unwrap();
    (outcome_a, outcome_b, ep.transcript().tags())
}

#[test]
fn separate_threads_over_tcp() {
    let l = 8;
    for (x, y) in [(5u64, 7u64), (200, 13), (77, 77), (0, 255), (128, 129)] {
        for variant in [Variant::P3, Variant::P1] {
            let (a, b) = sessions(l, x, y, x ^ y);
            let (oa, ob, tags) = threaded_tcp(variant, P2Schedule::Batched, a, b);
            assert_eq!(oa, ob);
            assert_eq!(oa.is_greater(), y > x, "{variant} x={x} y={y}");
            let expected: Vec<u8> = match variant {
                Variant::P3 => vec![0x03, 0x04, 0x05],
                Variant::P1 => vec![0x01, 0x02, 0x01, 0x02, 0x03, 0x04, 0x05],
            };
            assert_eq!(tags, expected);
        }
    }
}

#[test]
fn per_bit_schedule_over_tcp() {
    let (a, b) = sessions(6, 41, 42, 3);
    let (oa, _, tags) = threaded_tcp(Variant::P1, P2Schedule::PerBit, a, b);
    assert!(oa.is_greater());
    assert_eq!(tags.len(), 3 + 4 * 6);
}

#[test]
fn drive_over_memory_threads_matches_single_thread_run() {
    let (mut a1, mut b1) = sessions(8, 90, 91, 12);
    let (mut ea, mut eb) = memory_pair();
    let single = run_comparison_with(Variant::P3, P2Schedule::Batched, &mut a1, &mut b1, &mut ea, &mut eb).unwrap();

    let (mut a2, mut b2) = sessions(8, 90, 91, 12);
    let (mut fa, mut fb) = memory_pair();
    let handle = thread::spawn(move || {
        let mut party = ComparatorB::new(&mut b2, Variant::P3, P2Schedule::Batched).unwrap();
        let outcome = drive(&mut party, &mut fb, TIMEOUT).unwrap();
        (outcome, fb.transcript().clone(), b2.counters())
    });
    let mut party = ComparatorA::new(&mut a2, Variant::P3, P2Schedule::Batched).unwrap();
    let threaded = drive(&mut party, &mut fa, TIMEOUT).unwrap();
    let (outcome_b, transcript_b, counters_b) = handle.join().unwrap();

    assert_eq!(single, threaded);
    assert_eq!(outcome_b, threaded);
    assert_eq!(ea.transcript(), fa.transcript());
    assert_eq!(eb.transcript(), &transcript_b);
    assert_eq!(a1.counters(), a2.counters());
    assert_eq!(b1.counters(), counters_b);
}

#[test]
fn silent_peer_times_out() {
    let (mut a, _b) = sessions(4, 1, 2, 1);
    let (mut ea, _eb) = memory_pair();
    let mut party = ComparatorA::new(&mut a, Variant::P3, P2Schedule::Batched).unwrap();
    let err = drive(&mut party, &mut ea, Some(Duration::from_millis(50))).unwrap_err();
    assert!(matches!(err, Error::Timeout));
    assert!(err.is_session_failure());
}

#[test]
fn vanished_peer_is_a_disconnect() {
    let (mut a, _b) = sessions(4, 1, 2, 1);
    let (mut ea, eb) = memory_pair();
    drop(eb);
    let mut party = ComparatorA::new(&mut a, Variant::P3, P2Schedule::Batched).unwrap();
    assert!(matches!(drive(&mut party, &mut ea, TIMEOUT), Err(Error::Disconnected)));
}

#[test]
fn wrong_message_aborts_the_peer() {
    let (_a, mut b) = sessions(4, 1, 2, 1);
    let (mut ea, mut eb) = memory_pair();
    ea.send(&ProtocolMessage::Outcome { result: ComparisonOutcome::Greater }).unwrap();
    let mut party = ComparatorB::new(&mut b, Variant::P3, P2Schedule::Batched).unwrap();
    assert!(matches!(drive(&mut party, &mut eb, TIMEOUT), Err(Error::Protocol(_))));
}

#[test]
fn short_batch_is_rejected() {
    let (_a, mut b) = sessions(4, 1, 2, 1);
    let (mut ea, mut eb) = memory_pair();
    ea.send(&ProtocolMessage::CBatch { cs: Vec::new() }).unwrap();
    let mut party = ComparatorB::new(&mut b, Variant::P3, P2Schedule::Batched).unwrap();
    assert!(matches!(drive(&mut party, &mut eb, TIMEOUT), Err(Error::Protocol(_))));
}

#[test]
fn key_file_survives_a_round_trip_and_still_compares() {
    let (pk, sk) = generate_keys(Params::new(96, 24, 5).unwrap(), &mut SeededRng::from_seed(4)).unwrap();
    let text = KeyFile::new(&pk, Some(&sk)).to_json();
    let file = KeyFile::from_json(&text).unwrap();
    let pk2 = file.public_key().unwrap();
    let sk2 = file.secret_key().unwrap().unwrap();
    assert_eq!(pk2, pk);
    assert!(validate_keys(&pk2, &sk2).all_passed());
    assert_eq!(file.to_json(), text);

    let public_only = KeyFile::from_json(&KeyFile::new(&pk, None).to_json()).unwrap();
    assert!(public_only.secret_key().unwrap().is_none());

    let (pk2, sk2) = (Arc::new(pk2), Arc::new(sk2));
    let u = pk2.plain_modulus();
    let mut rng = SeededRng::from_seed(1);
    let (xa, xb) = share_integer(30, 5, u, &mut rng).unwrap();
    let (ya, yb) = share_integer(31, 5, u, &mut rng).unwrap();
    let mut a = PartySession::party_a(pk2.clone(), sk2, None, xa, ya, SeededRng::from_seed(2)).unwrap();
    let mut b = PartySession::party_b(pk2, xb, yb, SeededRng::from_seed(3)).unwrap();
    assert!(seccmp::run_comparison(Variant::P3, &mut a, &mut b).unwrap().is_greater());
}
