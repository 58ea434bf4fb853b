//! Shared vocabulary between node state machines and the simulator:
//! simulated time, the seeded random stream, message payloads, timers, and
//! the effect interface nodes use to act on the world.
//!
//! Nodes never read wall clocks or global randomness. Everything a node does
//! comes out as an [`Effect`]; the network turns sends into scheduled
//! deliveries and timers into scheduled ticks, which is what makes whole
//! runs a pure function of (scenario, seed).

use crate::chaincode::ChaincodeResponse;
use crate::codec::{self, Hash256};
use crate::gateway::CommitResult;
use crate::identity::Certificate;
use crate::ledger::Block;
use crate::ordering::RaftMsg;
use crate::peer::{Endorsement, Transaction, TransactionProposal};
use crate::policy::PolicyExpr;
use crate::vfs::Vfs;
use serde::Serialize;

pub type NodeId = String;
pub type ChannelId = String;

/// Simulated time in microseconds.
pub type SimTime = u64;

pub const fn ms(n: u64) -> SimTime {
    n * 1_000
}

pub const fn secs(n: u64) -> SimTime {
    n * 1_000_000
}

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

/// splitmix64 stream; all simulation randomness derives from one of these.
#[derive(Debug, Clone)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    pub fn from_seed(seed: u64) -> SimRng {
        SimRng {
            state: seed ^ 0x9e37_79b9_7f4a_7c15,
        }
    }

    /// Derives an independent labelled stream from a master seed, so one
    /// node's draws never shift another's.
    pub fn derive(master: u64, label: &str) -> SimRng {
        let mut bytes = Vec::with_capacity(8 + label.len());
        codec::put_u64(&mut bytes, master);
        bytes.extend_from_slice(label.as_bytes());
        let h = Hash256::of(&bytes);
        SimRng {
            state: u64::from_be_bytes(h.0[..8].try_into().unwrap()),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.next_u64() % (hi - lo + 1)
    }

    /// True with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        if p >= 1.0 {
            return true;
        }
        ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64) < p
    }

    pub fn bytes32(&mut self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for chunk in out.chunks_mut(8) {
            chunk.copy_from_slice(&self.next_u64().to_be_bytes());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

/// Why an endorsement request was rejected by a peer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EndorseRejection {
    NotEndorser,
    NotMember,
    UnknownChaincode,
    BadSignature,
    /// Contract logic failed; carries the error payload.
    Chaincode(String),
}

impl std::fmt::Display for EndorseRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EndorseRejection::NotEndorser => f.write_str("NOT_ENDORSER"),
            EndorseRejection::NotMember => f.write_str("NOT_MEMBER"),
            EndorseRejection::UnknownChaincode => f.write_str("UNKNOWN_CHAINCODE"),
            EndorseRejection::BadSignature => f.write_str("BAD_SIGNATURE"),
            EndorseRejection::Chaincode(e) => write!(f, "CHAINCODE_ERROR: {e}"),
        }
    }
}

/// Orderer's answer to a broadcast submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BroadcastStatus {
    Accepted,
    Rejected(String),
    /// Not the leader; optionally hints at the current one.
    NoLeader(Option<NodeId>),
}

/// Everything that travels between nodes.
#[derive(Debug, Clone)]
pub enum Payload {
    // client -> gateway
    SubmitProposal(TransactionProposal),
    EvaluateProposal(TransactionProposal),
    SubscribeCommits { channel: ChannelId },
    SendTransaction(Transaction),
    // gateway -> endorser
    Endorse(TransactionProposal),
    // endorser -> gateway
    EndorseOk {
        tx_id: Hash256,
        endorsement: Endorsement,
        response: ChaincodeResponse,
    },
    EndorseRejected {
        tx_id: Hash256,
        reason: EndorseRejection,
    },
    // gateway -> client
    EndorsementBundle {
        tx_id: Hash256,
        policy: PolicyExpr,
        results: Vec<(Endorsement, ChaincodeResponse)>,
    },
    EndorseFailed {
        tx_id: Hash256,
        reason: String,
        chaincode_error: bool,
    },
    EvaluateResult {
        tx_id: Hash256,
        result: Result<Vec<u8>, String>,
    },
    SubmitOutcome {
        tx_id: Hash256,
        accepted: bool,
        detail: String,
    },
    CommitEvents {
        channel: ChannelId,
        results: Vec<CommitResult>,
    },
    // gateway -> orderer
    Broadcast(Transaction),
    // orderer -> gateway
    BroadcastAck {
        tx_id: Hash256,
        status: BroadcastStatus,
    },
    // orderer <-> orderer
    Raft(RaftMsg),
    // orderer -> peer, peer <-> peer
    BlockDeliver {
        channel: ChannelId,
        block: Block,
    },
    BlockRequest {
        channel: ChannelId,
        from: u64,
    },
    BlockResponse {
        channel: ChannelId,
        blocks: Vec<Block>,
    },
}

/// A routed message: the wire form carries the channel scope inside the
/// payload, plus the sender's node id and certificate.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub from: NodeId,
    pub sender: Certificate,
    pub payload: Payload,
}

// ---------------------------------------------------------------------------
// Timers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimerTag {
    /// Raft election timeout.
    Election,
    /// Raft leader heartbeat.
    Heartbeat,
    /// Orderer batch timeout for one channel.
    Batch(ChannelId),
    /// Peer periodic catch-up probe.
    Sync,
    /// Gateway endorsement-round timeout.
    GatewayEndorse(Hash256),
    /// Gateway broadcast retry.
    GatewayResubmit(Hash256),
    /// Client session deadline.
    SessionDeadline(Hash256),
}

// ---------------------------------------------------------------------------
// Effects
// ---------------------------------------------------------------------------

/// Notable milestones nodes surface into the run trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TraceNote {
    LeaderElected {
        term: u64,
    },
    BlockCut {
        channel: ChannelId,
        number: u64,
        digest: Hash256,
    },
    BlockCommitted {
        channel: ChannelId,
        number: u64,
        digest: Hash256,
    },
    TxRejected {
        tx_id: Hash256,
        reason: String,
    },
    SessionDone {
        label: String,
        outcome: String,
    },
}

#[derive(Debug)]
pub enum Effect {
    Send { to: NodeId, payload: Payload },
    SetTimer { delay: SimTime, tag: TimerTag },
    Note(TraceNote),
}

/// Per-event execution context: the node's clock, persistent storage,
/// private random stream, and effect buffer.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub self_id: &'a str,
    pub vfs: &'a mut dyn Vfs,
    pub rng: &'a mut SimRng,
    effects: Vec<Effect>,
}

impl<'a> Ctx<'a> {
    pub fn new(
        now: SimTime,
        self_id: &'a str,
        vfs: &'a mut dyn Vfs,
        rng: &'a mut SimRng,
    ) -> Ctx<'a> {
        Ctx {
            now,
            self_id,
            vfs,
            rng,
            effects: Vec::new(),
        }
    }

    pub fn send(&mut self, to: impl Into<NodeId>, payload: Payload) {
        self.effects.push(Effect::Send {
            to: to.into(),
            payload,
        });
    }

    pub fn timer(&mut self, delay: SimTime, tag: TimerTag) {
        self.effects.push(Effect::SetTimer { delay, tag });
    }

    pub fn note(&mut self, note: TraceNote) {
        self.effects.push(Effect::Note(note));
    }

    pub fn take_effects(self) -> Vec<Effect> {
        self.effects
    }
}
