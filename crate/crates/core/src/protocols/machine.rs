//! Message-driven state machines for the two roles.

use super::{
    blind_permute, compute_c_shares_p1, compute_c_shares_p3, detect_zero, encrypt_c_batch, p2_finish, p2_request,
    p2_respond, xor_combine, ComparisonOutcome, P2Schedule, PartySession, Role, Variant,
};
use crate::cipher::Ciphertext;
use crate::error::{Error, Result};
use crate::message::ProtocolMessage;
use crate::sharing::BitShare;

/// A party advanced by incoming messages.
pub trait Party {
    fn role(&self) -> Role;

    /// Messages to send before anything has been received.
    fn start(&mut self) -> Result<Vec<ProtocolMessage>>;

    /// Consumes one message, returning the replies to send.
    fn handle(&mut self, msg: ProtocolMessage) -> Result<Vec<ProtocolMessage>>;

    fn outcome(&self) -> Option<ComparisonOutcome>;

    fn is_finished(&self) -> bool {
        self.outcome().is_some()
    }
}

/// The two cross products needed for each XOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    /// A's `x_iA` against B's `y_iB`.
    XaYb,
    /// A's `y_iA` against B's `x_iB`.
    YaXb,
}

impl Term {
    fn index(self) -> usize {
        match self {
            Term::XaYb => 0,
            Term::YaXb => 1,
        }
    }
}

type Job = Vec<(Term, usize)>;

fn p2_jobs(l: usize, schedule: P2Schedule) -> Vec<Job> {
    match schedule {
        P2Schedule::Batched => vec![
            (1..=l).map(|i| (Term::XaYb, i)).collect(),
            (1..=l).map(|i| (Term::YaXb, i)).collect(),
        ],
        P2Schedule::PerBit => (1..=l)
            .flat_map(|i| [vec![(Term::XaYb, i)], vec![(Term::YaXb, i)]])
            .collect(),
    }
}

fn check_batch(pk: &crate::keygen::PublicKey, cs: &[Ciphertext], expected: usize, what: &str) -> Result<()> {
    if cs.len() != expected {
        return Err(Error::Protocol(format!("{what}: expected {expected} ciphertexts, got {}", cs.len())));
    }
    cs.iter().try_for_each(|c| c.check(pk))
}

fn unexpected(role: Role, msg: &ProtocolMessage, state: &str) -> Error {
    Error::Protocol(format!("party {role} got unexpected {} while {state}", msg.kind()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateA {
    Idle,
    AwaitP2(usize),
    AwaitGamma,
    Done(ComparisonOutcome),
}

/// Party A (key holder).
#[derive(Debug)]
pub struct ComparatorA<'s> {
    session: &'s mut PartySession,
    variant: Variant,
    jobs: Vec<Job>,
    cross: [Vec<Option<BitShare>>; 2],
    state: StateA,
}

impl<'s> ComparatorA<'s> {
    pub fn new(session: &'s mut PartySession, variant: Variant, schedule: P2Schedule) -> Result<Self> {
        session.require(Role::A, "ComparatorA")?;
        let l = session.l();
        Ok(ComparatorA {
            session,
            variant,
            jobs: p2_jobs(l, schedule),
            cross: [vec![None; l], vec![None; l]],
            state: StateA::Idle,
        })
    }

    fn request(&mut self, job: usize) -> Result<ProtocolMessage> {
        let mut cs = Vec::with_capacity(self.jobs[job].len());
        for &(term, i) in &self.jobs[job] {
            let input = match term {
                Term::XaYb => self.session.x_shares.bit(i),
                Term::YaXb => self.session.y_shares.bit(i),
            };
            cs.push(p2_request(self.session, input)?);
        }
        self.state = StateA::AwaitP2(job);
        Ok(ProtocolMessage::P2Request { cs })
    }

    fn send_c_batch(&mut self) -> Result<ProtocolMessage> {
        let cs = encrypt_c_batch(self.session)?;
        self.state = StateA::AwaitGamma;
        Ok(ProtocolMessage::CBatch { cs })
    }
}

impl Party for ComparatorA<'_> {
    fn role(&self) -> Role {
        Role::A
    }

    fn start(&mut self) -> Result<Vec<ProtocolMessage>> {
        if self.state != StateA::Idle {
            return Err(Error::State("party A already started".into()));
        }
        match self.variant {
            Variant::P1 => Ok(vec![self.request(0)?]),
            Variant::P3 => {
                compute_c_shares_p3(self.session);
                Ok(vec![self.send_c_batch()?])
            }
        }
    }

    fn handle(&mut self, msg: ProtocolMessage) -> Result<Vec<ProtocolMessage>> {
        match (self.state, msg) {
            (StateA::AwaitP2(job), ProtocolMessage::P2Response { cs }) => {
                check_batch(self.session.public_key(), &cs, self.jobs[job].len(), "P2Response")?;
                for (k, c) in cs.iter().enumerate() {
                    let (term, i) = self.jobs[job][k];
                    self.cross[term.index()][i - 1] = Some(p2_finish(self.session, c)?);
                }
                if job + 1 < self.jobs.len() {
                    return Ok(vec![self.request(job + 1)?]);
                }
                let u = self.session.u();
                let d = (1..=self.session.l())
                    .map(|i| {
                        xor_combine(
                            self.session.x_shares.bit(i),
                            self.session.y_shares.bit(i),
                            self.cross[0][i - 1].expect("every product round finished"),
                            self.cross[1][i - 1].expect("every product round finished"),
                            u,
                        )
                    })
                    .collect::<Vec<_>>();
                compute_c_shares_p1(self.session, &d)?;
                Ok(vec![self.send_c_batch()?])
            }
            (StateA::AwaitGamma, ProtocolMessage::GammaBatch { gammas }) => {
                check_batch(self.session.public_key(), &gammas, self.session.l(), "GammaBatch")?;
                let result = detect_zero(self.session, &gammas)?;
                self.state = StateA::Done(result);
                Ok(vec![ProtocolMessage::Outcome { result }])
            }
            (state, msg) => Err(unexpected(Role::A, &msg, &format!("{state:?}"))),
        }
    }

    fn outcome(&self) -> Option<ComparisonOutcome> {
        match self.state {
            StateA::Done(result) => Some(result),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateB {
    AwaitP2(usize),
    AwaitC,
    AwaitOutcome,
    Done(ComparisonOutcome),
}

/// Party B (no secret key).
#[derive(Debug)]
pub struct ComparatorB<'s> {
    session: &'s mut PartySession,
    variant: Variant,
    jobs: Vec<Job>,
    masks: [Vec<Option<BitShare>>; 2],
    state: StateB,
}

impl<'s> ComparatorB<'s> {
    pub fn new(session: &'s mut PartySession, variant: Variant, schedule: P2Schedule) -> Result<Self> {
        session.require(Role::B, "ComparatorB")?;
        let l = session.l();
        let state = match variant {
            Variant::P1 => StateB::AwaitP2(0),
            Variant::P3 => StateB::AwaitC,
        };
        Ok(ComparatorB {
            session,
            variant,
            jobs: p2_jobs(l, schedule),
            masks: [vec![None; l], vec![None; l]],
            state,
        })
    }
}

impl Party for ComparatorB<'_> {
    fn role(&self) -> Role {
        Role::B
    }

    fn start(&mut self) -> Result<Vec<ProtocolMessage>> {
        Ok(Vec::new())
    }

    fn handle(&mut self, msg: ProtocolMessage) -> Result<Vec<ProtocolMessage>> {
        match (self.state, msg) {
            (StateB::AwaitP2(job), ProtocolMessage::P2Request { cs }) => {
                check_batch(self.session.public_key(), &cs, self.jobs[job].len(), "P2Request")?;
                let mut replies = Vec::with_capacity(cs.len());
                for (k, c) in cs.iter().enumerate() {
                    let (term, i) = self.jobs[job][k];
                    let input = match term {
                        Term::XaYb => self.session.y_shares.bit(i),
                        Term::YaXb => self.session.x_shares.bit(i),
                    };
                    let (reply, r) = p2_respond(self.session, c, input)?;
                    self.masks[term.index()][i - 1] = Some(r);
                    replies.push(reply);
                }
                self.state = if job + 1 < self.jobs.len() { StateB::AwaitP2(job + 1) } else { StateB::AwaitC };
                Ok(vec![ProtocolMessage::P2Response { cs: replies }])
            }
            (StateB::AwaitC, ProtocolMessage::CBatch { cs }) => {
                check_batch(self.session.public_key(), &cs, self.session.l(), "CBatch")?;
                let beta = match self.variant {
                    Variant::P3 => compute_c_shares_p3(self.session),
                    Variant::P1 => {
                        let u = self.session.u();
                        let d = (1..=self.session.l())
                            .map(|i| {
                                xor_combine(
                                    self.session.x_shares.bit(i),
                                    self.session.y_shares.bit(i),
                                    self.masks[0][i - 1].expect("every product round answered"),
                                    self.masks[1][i - 1].expect("every product round answered"),
                                    u,
                                )
                            })
                            .collect::<Vec<_>>();
                        compute_c_shares_p1(self.session, &d)?
                    }
                };
                let gammas = blind_permute(self.session, &cs, &beta)?;
                self.state = StateB::AwaitOutcome;
                Ok(vec![ProtocolMessage::GammaBatch { gammas }])
            }
            (StateB::AwaitOutcome, ProtocolMessage::Outcome { result }) => {
                self.state = StateB::Done(result);
                Ok(Vec::new())
            }
            (state, msg) => Err(unexpected(Role::B, &msg, &format!("{state:?}"))),
        }
    }

    fn outcome(&self) -> Option<ComparisonOutcome> {
        match self.state {
            StateB::Done(result) => Some(result),
            _ => None,
        }
    }
}
