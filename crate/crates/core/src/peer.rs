//! Peer nodes and the transaction structures they exchange.
//!
//! A peer combines up to five roles: endorsers simulate proposals and sign
//! the results, committers validate and append delivered blocks, leaders
//! fan blocks out inside their org, anchors carry blocks across org
//! boundaries, and gateways run the client-facing pipeline (endorser
//! selection, endorsement collection, orderer submission, commit events).
//!
//! Commit durability: a peer persists only its chain file. The world state
//! is rebuilt from the chain on boot, so a crash at any point between block
//! receipt and commit completion recovers by replay with no divergence.

use crate::chaincode::{self, ChaincodeResponse, InstalledChaincodes, ResponseStatus, RwSet};
use crate::channel::{self, NetworkConfig};
use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use crate::gateway::CommitResult;
use crate::identity::{self, Certificate, Identity, Role};
use crate::ledger::chain::{ChainError, ChainStore};
use crate::ledger::state::WorldState;
use crate::ledger::{Block, ValidationCode};
use crate::policy::PolicyExpr;
use crate::sim::api::{
    BroadcastStatus, ChannelId, Ctx, EndorseRejection, Envelope, NodeId, Payload, SimTime,
    TimerTag, TraceNote, ms, secs,
};
use crate::validation::{self, ConfigState, TrustContext};
use crate::vfs::Vfs;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Roles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeerRole {
    Endorser,
    Committer,
    Anchor,
    Leader,
    Gateway,
}

impl PeerRole {
    pub fn parse(s: &str) -> Option<PeerRole> {
        match s {
            "endorser" => Some(PeerRole::Endorser),
            "committer" => Some(PeerRole::Committer),
            "anchor" => Some(PeerRole::Anchor),
            "leader" => Some(PeerRole::Leader),
            "gateway" => Some(PeerRole::Gateway),
            _ => None,
        }
    }
}

impl fmt::Display for PeerRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeerRole::Endorser => "endorser",
            PeerRole::Committer => "committer",
            PeerRole::Anchor => "anchor",
            PeerRole::Leader => "leader",
            PeerRole::Gateway => "gateway",
        })
    }
}

// ---------------------------------------------------------------------------
// Proposals, endorsements, transactions
// ---------------------------------------------------------------------------

/// A client's signed request to simulate one chaincode invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionProposal {
    pub tx_id: Hash256,
    pub channel_id: ChannelId,
    pub chaincode: String,
    pub fn_name: String,
    pub args: Vec<String>,
    pub nonce: Vec<u8>,
    pub creator: Certificate,
    pub client_signature: Vec<u8>,
}

impl TransactionProposal {
    /// tx_id = SHA-256 over (creator, channel, chaincode, fn, args, nonce).
    pub fn compute_tx_id(
        creator: &Certificate,
        channel_id: &str,
        chaincode: &str,
        fn_name: &str,
        args: &[String],
        nonce: &[u8],
    ) -> Hash256 {
        let mut out = Vec::new();
        creator.encode_into(&mut out);
        codec::put_str(&mut out, channel_id);
        codec::put_str(&mut out, chaincode);
        codec::put_str(&mut out, fn_name);
        args.to_vec().encode_into(&mut out);
        codec::put_bytes(&mut out, nonce);
        Hash256::of(&out)
    }

    pub fn build(
        creator: &Identity,
        channel_id: &str,
        chaincode: &str,
        fn_name: &str,
        args: Vec<String>,
        nonce: [u8; 32],
    ) -> TransactionProposal {
        let tx_id = TransactionProposal::compute_tx_id(
            &creator.certificate,
            channel_id,
            chaincode,
            fn_name,
            &args,
            &nonce,
        );
        let mut p = TransactionProposal {
            tx_id,
            channel_id: channel_id.to_string(),
            chaincode: chaincode.to_string(),
            fn_name: fn_name.to_string(),
            args,
            nonce: nonce.to_vec(),
            creator: creator.certificate.clone(),
            client_signature: Vec::new(),
        };
        p.client_signature = creator.sign(&p.signing_payload());
        p
    }

    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.tx_id.encode_into(&mut out);
        codec::put_str(&mut out, &self.channel_id);
        codec::put_str(&mut out, &self.chaincode);
        codec::put_str(&mut out, &self.fn_name);
        self.args.encode_into(&mut out);
        codec::put_bytes(&mut out, &self.nonce);
        self.creator.encode_into(&mut out);
        out
    }

    /// Signature, id-derivation, and role checks.
    pub fn verify(&self) -> bool {
        self.tx_id
            == TransactionProposal::compute_tx_id(
                &self.creator,
                &self.channel_id,
                &self.chaincode,
                &self.fn_name,
                &self.args,
                &self.nonce,
            )
            && identity::verify(&self.creator, &self.signing_payload(), &self.client_signature)
    }
}

impl Encode for TransactionProposal {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signing_payload());
        codec::put_bytes(out, &self.client_signature);
    }
}

impl TransactionProposal {
    pub fn decode(d: &mut Decoder<'_>) -> Result<TransactionProposal, DecodeError> {
        Ok(TransactionProposal {
            tx_id: d.hash()?,
            channel_id: d.string()?,
            chaincode: d.string()?,
            fn_name: d.string()?,
            args: d.list(|d| d.string())?,
            nonce: d.bytes()?,
            creator: Certificate::decode(d)?,
            client_signature: d.bytes()?,
        })
    }
}

/// A peer's signed attestation that simulating the proposal produced the
/// response whose hash is carried here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endorsement {
    pub tx_id: Hash256,
    pub endorser: Certificate,
    pub response_hash: Hash256,
    pub signature: Vec<u8>,
}

impl Endorsement {
    fn signing_payload(tx_id: &Hash256, response_hash: &Hash256) -> Vec<u8> {
        let mut out = Vec::new();
        tx_id.encode_into(&mut out);
        response_hash.encode_into(&mut out);
        out
    }

    pub fn sign(endorser: &Identity, tx_id: Hash256, response_hash: Hash256) -> Endorsement {
        Endorsement {
            tx_id,
            endorser: endorser.certificate.clone(),
            response_hash,
            signature: endorser.sign(&Endorsement::signing_payload(&tx_id, &response_hash)),
        }
    }

    pub fn verify(&self) -> bool {
        identity::verify(
            &self.endorser,
            &Endorsement::signing_payload(&self.tx_id, &self.response_hash),
            &self.signature,
        )
    }
}

impl Encode for Endorsement {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.tx_id.encode_into(out);
        self.endorser.encode_into(out);
        self.response_hash.encode_into(out);
        codec::put_bytes(out, &self.signature);
    }
}

impl Endorsement {
    pub fn decode(d: &mut Decoder<'_>) -> Result<Endorsement, DecodeError> {
        Ok(Endorsement {
            tx_id: d.hash()?,
            endorser: Certificate::decode(d)?,
            response_hash: d.hash()?,
            signature: d.bytes()?,
        })
    }
}

/// Channel configuration changes carried as config transactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigUpdate {
    Genesis(channel::ChannelConfig),
    AnchorUpdate(channel::AnchorEnvelope),
    ChaincodeCommit {
        definition: chaincode::ChaincodeDefinition,
        approvals: Vec<chaincode::Approval>,
    },
}

impl Encode for ConfigUpdate {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            ConfigUpdate::Genesis(cfg) => {
                codec::put_tag(out, 0);
                cfg.encode_into(out);
            }
            ConfigUpdate::AnchorUpdate(env) => {
                codec::put_tag(out, 1);
                env.encode_into(out);
            }
            ConfigUpdate::ChaincodeCommit {
                definition,
                approvals,
            } => {
                codec::put_tag(out, 2);
                definition.encode_into(out);
                approvals.encode_into(out);
            }
        }
    }
}

impl ConfigUpdate {
    pub fn decode(d: &mut Decoder<'_>) -> Result<ConfigUpdate, DecodeError> {
        let at = d.offset();
        match d.tag()? {
            0 => Ok(ConfigUpdate::Genesis(channel::ChannelConfig::decode(d)?)),
            1 => Ok(ConfigUpdate::AnchorUpdate(channel::AnchorEnvelope::decode(d)?)),
            2 => Ok(ConfigUpdate::ChaincodeCommit {
                definition: chaincode::ChaincodeDefinition::decode(d)?,
                approvals: d.list(chaincode::Approval::decode)?,
            }),
            tag => Err(DecodeError::BadTag { offset: at, tag }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxBody {
    Invoke {
        chaincode: String,
        version: String,
        rwset: RwSet,
        /// The agreed response payload; lets committers recompute the
        /// response hash the endorsements signed.
        response_payload: Vec<u8>,
        endorsements: Vec<Endorsement>,
    },
    Config(ConfigUpdate),
}

impl Encode for TxBody {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            TxBody::Invoke {
                chaincode,
                version,
                rwset,
                response_payload,
                endorsements,
            } => {
                codec::put_tag(out, 0);
                codec::put_str(out, chaincode);
                codec::put_str(out, version);
                rwset.encode_into(out);
                codec::put_bytes(out, response_payload);
                endorsements.encode_into(out);
            }
            TxBody::Config(update) => {
                codec::put_tag(out, 1);
                update.encode_into(out);
            }
        }
    }
}

impl TxBody {
    pub fn decode(d: &mut Decoder<'_>) -> Result<TxBody, DecodeError> {
        let at = d.offset();
        match d.tag()? {
            0 => Ok(TxBody::Invoke {
                chaincode: d.string()?,
                version: d.string()?,
                rwset: RwSet::decode(d)?,
                response_payload: d.bytes()?,
                endorsements: d.list(Endorsement::decode)?,
            }),
            1 => Ok(TxBody::Config(ConfigUpdate::decode(d)?)),
            tag => Err(DecodeError::BadTag { offset: at, tag }),
        }
    }
}

/// An endorsed transaction as submitted to ordering and stored in blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub tx_id: Hash256,
    pub channel_id: ChannelId,
    pub body: TxBody,
    pub creator: Certificate,
    pub client_signature: Vec<u8>,
}

impl Transaction {
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.tx_id.encode_into(&mut out);
        codec::put_str(&mut out, &self.channel_id);
        self.body.encode_into(&mut out);
        self.creator.encode_into(&mut out);
        out
    }

    pub fn build_signed(
        tx_id: Hash256,
        channel_id: ChannelId,
        body: TxBody,
        creator: &Identity,
    ) -> Transaction {
        let mut tx = Transaction {
            tx_id,
            channel_id,
            body,
            creator: creator.certificate.clone(),
            client_signature: Vec::new(),
        };
        tx.client_signature = creator.sign(&tx.signing_payload());
        tx
    }

    pub fn chaincode(&self) -> Option<(&str, &str)> {
        match &self.body {
            TxBody::Invoke {
                chaincode, version, ..
            } => Some((chaincode, version)),
            TxBody::Config(_) => None,
        }
    }

    pub fn endorsements(&self) -> &[Endorsement] {
        match &self.body {
            TxBody::Invoke { endorsements, .. } => endorsements,
            TxBody::Config(_) => &[],
        }
    }

    /// Structural invariant: all endorsements reference this transaction and
    /// an identical response hash.
    pub fn endorsements_coherent(&self) -> bool {
        let es = self.endorsements();
        es.windows(2).all(|w| w[0].response_hash == w[1].response_hash)
            && es.iter().all(|e| e.tx_id == self.tx_id)
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Transaction, DecodeError> {
        Ok(Transaction {
            tx_id: d.hash()?,
            channel_id: d.string()?,
            body: TxBody::decode(d)?,
            creator: Certificate::decode(d)?,
            client_signature: d.bytes()?,
        })
    }
}

impl Encode for Transaction {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signing_payload());
        codec::put_bytes(out, &self.client_signature);
    }
}

// ---------------------------------------------------------------------------
// Peer node
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum JoinError {
    #[error("MEMBERSHIP_DENIED: org {org} is not a member of channel {channel}")]
    MembershipDenied { org: String, channel: String },
    #[error("already joined channel {0}")]
    AlreadyJoined(String),
    #[error("genesis verification failed: {0}")]
    Genesis(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Error)]
pub enum BootError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("chain for {channel} fails revalidation: {message}")]
    Revalidate { channel: String, message: String },
}

/// One joined channel's ledger and bookkeeping.
pub struct ChannelLedger {
    pub chain: ChainStore,
    pub state: WorldState,
    pub config: ConfigState,
    /// Out-of-order blocks awaiting their predecessors.
    pending: BTreeMap<u64, Block>,
    /// Clients subscribed to commit events.
    subscribers: BTreeSet<NodeId>,
}

impl ChannelLedger {
    pub fn height(&self) -> u64 {
        self.chain.height()
    }
}

const SYNC_INTERVAL: SimTime = ms(500);
const ENDORSE_TIMEOUT: SimTime = secs(2);
const RESUBMIT_INTERVAL: SimTime = secs(1);
const MAX_BROADCAST_ATTEMPTS: u32 = 100;
const CATCH_UP_BATCH: u64 = 16;

struct EndorseRound {
    client: NodeId,
    proposal: TransactionProposal,
    evaluate: bool,
    /// Principal sets still to try, current set first.
    sets: Vec<Vec<String>>,
    outstanding: BTreeMap<NodeId, String>,
    collected: Vec<(Endorsement, ChaincodeResponse)>,
    policy: PolicyExpr,
    attempt: u64,
}

struct PendingBroadcast {
    client: NodeId,
    tx: Transaction,
    attempts: u32,
}

#[derive(Default)]
struct GatewayState {
    rounds: BTreeMap<Hash256, EndorseRound>,
    broadcasts: BTreeMap<Hash256, PendingBroadcast>,
    orderer_hint: Option<NodeId>,
    orderer_rotation: u64,
}

pub struct PeerNode {
    pub peer_id: NodeId,
    pub org_id: String,
    pub identity: Identity,
    pub roles: BTreeSet<PeerRole>,
    pub installed: InstalledChaincodes,
    pub ledgers: BTreeMap<ChannelId, ChannelLedger>,
    net: Arc<NetworkConfig>,
    trust: TrustContext,
    gateway: GatewayState,
    sync_round: u64,
}

fn chain_path(peer_id: &str, channel: &str) -> String {
    format!("peers/{peer_id}/channels/{channel}.chain")
}

impl PeerNode {
    pub fn new(
        peer_id: &str,
        org_id: &str,
        identity: Identity,
        roles: BTreeSet<PeerRole>,
        net: Arc<NetworkConfig>,
    ) -> PeerNode {
        let trust = TrustContext::from_network(&net);
        PeerNode {
            peer_id: peer_id.to_string(),
            org_id: org_id.to_string(),
            identity,
            roles,
            installed: InstalledChaincodes::default(),
            ledgers: BTreeMap::new(),
            net,
            trust,
            gateway: GatewayState::default(),
            sync_round: 0,
        }
    }

    pub fn has_role(&self, role: PeerRole) -> bool {
        self.roles.contains(&role)
    }

    pub fn chain_file(&self, channel: &str) -> String {
        chain_path(&self.peer_id, channel)
    }

    /// Instantiates the channel ledger from a verified genesis block.
    pub fn join_channel(&mut self, vfs: &mut dyn Vfs, genesis: &Block) -> Result<(), JoinError> {
        let config = channel::verify_genesis(genesis)
            .map_err(|e| JoinError::Genesis(e.to_string()))?;
        let channel_id = config.channel_id.clone();
        if self.ledgers.contains_key(&channel_id) {
            return Err(JoinError::AlreadyJoined(channel_id));
        }
        if !config.member_orgs.contains(&self.org_id) {
            return Err(JoinError::MembershipDenied {
                org: self.org_id.clone(),
                channel: channel_id,
            });
        }
        let path = self.chain_file(&channel_id);
        let mut chain = ChainStore::create(vfs, &path);
        chain.append(vfs, genesis.clone())?;
        let cfg = ConfigState::from_genesis(genesis).map_err(JoinError::Genesis)?;
        let state = WorldState::new(cfg.channel.state_backend);
        self.ledgers.insert(
            channel_id,
            ChannelLedger {
                chain,
                state,
                config: cfg,
                pending: BTreeMap::new(),
                subscribers: BTreeSet::new(),
            },
        );
        Ok(())
    }

    /// Rebuilds every joined channel from persisted chain files: open,
    /// revalidate from genesis, regenerate the world state.
    pub fn boot(&mut self, vfs: &dyn Vfs) -> Result<(), BootError> {
        let prefix = format!("peers/{}/channels/", self.peer_id);
        for path in vfs.list(&prefix) {
            let Some(channel_id) = path
                .strip_prefix(&prefix)
                .and_then(|p| p.strip_suffix(".chain"))
                .map(String::from)
            else {
                continue;
            };
            let chain = ChainStore::open(vfs, &path)?;
            let result = validation::revalidate_blocks(&self.trust, chain.blocks()).map_err(
                |e| BootError::Revalidate {
                    channel: channel_id.clone(),
                    message: e.to_string(),
                },
            )?;
            for (i, block) in chain.blocks().iter().enumerate() {
                if result.flags[i] != block.validation_flags {
                    return Err(BootError::Revalidate {
                        channel: channel_id.clone(),
                        message: format!("stored flags diverge at block {i}"),
                    });
                }
            }
            self.ledgers.insert(
                channel_id,
                ChannelLedger {
                    chain,
                    state: result.state,
                    config: result.config,
                    pending: BTreeMap::new(),
                    subscribers: BTreeSet::new(),
                },
            );
        }
        Ok(())
    }

    pub fn on_boot(&mut self, ctx: &mut Ctx<'_>) {
        ctx.timer(SYNC_INTERVAL, TimerTag::Sync);
    }

    // -- endorsement --------------------------------------------------------

    /// Simulates a proposal against the current state snapshot and signs the
    /// result. The peer's own state is never changed.
    pub fn endorse(
        &self,
        proposal: &TransactionProposal,
    ) -> Result<(Endorsement, ChaincodeResponse), EndorseRejection> {
        if !self.has_role(PeerRole::Endorser) {
            return Err(EndorseRejection::NotEndorser);
        }
        let Some(ledger) = self.ledgers.get(&proposal.channel_id) else {
            return Err(EndorseRejection::NotMember);
        };
        if proposal.creator.subject.role != Role::Client
            || !identity::verify_certificate(&proposal.creator, &self.trust.roots, &self.trust.crl)
            || !proposal.verify()
        {
            return Err(EndorseRejection::BadSignature);
        }
        let Some(def) = ledger.config.definition(&proposal.chaincode) else {
            return Err(EndorseRejection::UnknownChaincode);
        };
        let Some((package, code)) = self.installed.get(&proposal.chaincode) else {
            return Err(EndorseRejection::UnknownChaincode);
        };
        if package.hash != def.package_hash {
            return Err(EndorseRejection::UnknownChaincode);
        }
        let response = chaincode::invoke(*code, &proposal.fn_name, &proposal.args, &ledger.state);
        if response.status == ResponseStatus::Error {
            return Err(EndorseRejection::Chaincode(
                String::from_utf8_lossy(&response.payload).into_owned(),
            ));
        }
        let endorsement = Endorsement::sign(&self.identity, proposal.tx_id, response.hash());
        Ok((endorsement, response))
    }

    // -- commit path --------------------------------------------------------

    /// Validates a block that extends the tip and commits it: flags are
    /// computed per transaction, VALID write-sets applied, and the block is
    /// appended to the chain file with its flags.
    pub fn validate_and_commit(
        &mut self,
        vfs: &mut dyn Vfs,
        channel: &str,
        block: &Block,
    ) -> Result<Vec<ValidationCode>, ChainError> {
        let ledger = self
            .ledgers
            .get_mut(channel)
            .expect("validate_and_commit on unjoined channel");
        // reject broken linkage before touching any state
        ledger.chain.check_extends_content(block)?;
        let flags = validation::validate_and_apply_block(
            &self.trust,
            &mut ledger.config,
            &mut ledger.state,
            block,
        );
        let stored = block.with_flags(flags.clone());
        ledger.chain.append(vfs, stored)?;
        Ok(flags)
    }

    fn deliver_block(&mut self, ctx: &mut Ctx<'_>, channel: &str, block: Block) {
        let Some(ledger) = self.ledgers.get_mut(channel) else {
            return; // not joined; drop
        };
        let height = ledger.chain.height();
        let number = block.header.number;
        if number < height {
            return; // duplicate
        }
        if number > height {
            ledger.pending.insert(number, block);
            // ask for the gap right away rather than waiting for the next
            // sync tick
            let targets = self.pull_targets(channel);
            if let Some(t) = targets.first() {
                ctx.send(
                    t.clone(),
                    Payload::BlockRequest {
                        channel: channel.to_string(),
                        from: height,
                    },
                );
            }
            return;
        }
        self.commit_and_drain(ctx, channel, block);
    }

    fn commit_and_drain(&mut self, ctx: &mut Ctx<'_>, channel: &str, block: Block) {
        let mut next = Some(block);
        while let Some(block) = next.take() {
            match self.validate_and_commit(ctx.vfs, channel, &block) {
                Ok(flags) => self.after_commit(ctx, channel, &block, &flags),
                Err(e) => {
                    ctx.note(TraceNote::TxRejected {
                        tx_id: Hash256::ZERO,
                        reason: format!("block {} rejected: {e}", block.header.number),
                    });
                    return;
                }
            }
            let ledger = self.ledgers.get_mut(channel).unwrap();
            let height = ledger.chain.height();
            ledger.pending.retain(|n, _| *n >= height);
            next = ledger.pending.remove(&height);
        }
    }

    fn after_commit(
        &mut self,
        ctx: &mut Ctx<'_>,
        channel: &str,
        block: &Block,
        flags: &[ValidationCode],
    ) {
        let ledger = self.ledgers.get(channel).unwrap();
        let stored = ledger.chain.tip().expect("just appended");
        ctx.note(TraceNote::BlockCommitted {
            channel: channel.to_string(),
            number: block.header.number,
            digest: stored.digest(),
        });
        // commit notifications, one per transaction in block order
        if !ledger.subscribers.is_empty() {
            let results: Vec<CommitResult> = block
                .transactions
                .iter()
                .zip(flags.iter())
                .enumerate()
                .map(|(i, (tx, code))| CommitResult {
                    tx_id: tx.tx_id,
                    block_number: block.header.number,
                    tx_index: i as u64,
                    code: *code,
                })
                .collect();
            for client in ledger.subscribers.clone() {
                ctx.send(
                    client,
                    Payload::CommitEvents {
                        channel: channel.to_string(),
                        results: results.clone(),
                    },
                );
            }
        }
        // propagation: org fan-out by the leader, cross-org via anchors
        for target in self.forward_targets(channel) {
            ctx.send(
                target,
                Payload::BlockDeliver {
                    channel: channel.to_string(),
                    block: block.clone(),
                },
            );
        }
    }

    /// Who this peer pushes freshly committed blocks to.
    fn forward_targets(&self, channel: &str) -> Vec<NodeId> {
        let Some(ledger) = self.ledgers.get(channel) else {
            return Vec::new();
        };
        let cfg = &ledger.config.channel;
        let mut targets: Vec<NodeId> = Vec::new();
        let is_anchor = cfg.anchor_peers.get(&self.org_id) == Some(&self.peer_id);
        if self.has_role(PeerRole::Leader) {
            // fan out to every peer of the own org on this channel
            for peer in self.net.org(&self.org_id).map(|o| o.peers.as_slice()).unwrap_or(&[]) {
                if peer.peer_id != self.peer_id {
                    targets.push(peer.peer_id.clone());
                }
            }
        }
        if is_anchor {
            // cross-org propagation to other orgs' designated anchors
            for org in &cfg.member_orgs {
                if org == &self.org_id {
                    continue;
                }
                if let Some(anchor) = cfg.anchor_peers.get(org) {
                    targets.push(anchor.clone());
                }
            }
            // an anchor that is not the org leader hands blocks inward
            if !self.has_role(PeerRole::Leader) {
                if let Some(leader) = self.net.leader_peer(&self.org_id) {
                    if leader != self.peer_id {
                        targets.push(leader);
                    }
                }
            }
        }
        targets.sort();
        targets.dedup();
        targets.retain(|t| t != &self.peer_id);
        targets
    }

    /// Catch-up sources, most preferred first: leaders pull from the
    /// ordering service, others from their org leader; designated anchors
    /// additionally pull from another org's anchor so a whole org cut off
    /// from the orderer still converges.
    fn pull_targets(&self, channel: &str) -> Vec<NodeId> {
        let Some(ledger) = self.ledgers.get(channel) else {
            return Vec::new();
        };
        let cfg = &ledger.config.channel;
        let mut targets = Vec::new();
        if self.has_role(PeerRole::Leader) {
            let orderers = self.net.orderer_ids();
            if !orderers.is_empty() {
                targets.push(orderers[(self.sync_round as usize) % orderers.len()].clone());
            }
        } else if let Some(leader) = self.net.leader_peer(&self.org_id) {
            if leader != self.peer_id {
                targets.push(leader);
            }
        }
        if cfg.anchor_peers.get(&self.org_id) == Some(&self.peer_id) {
            let other_anchors: Vec<&String> = cfg
                .anchor_peers
                .iter()
                .filter(|(org, _)| *org != &self.org_id)
                .map(|(_, p)| p)
                .collect();
            if !other_anchors.is_empty() {
                targets.push(other_anchors[(self.sync_round as usize) % other_anchors.len()].clone());
            }
        }
        targets.retain(|t| t != &self.peer_id);
        targets
    }

    fn on_sync(&mut self, ctx: &mut Ctx<'_>) {
        self.sync_round += 1;
        ctx.timer(SYNC_INTERVAL, TimerTag::Sync);
        let channels: Vec<String> = self.ledgers.keys().cloned().collect();
        for channel in channels {
            let height = self.ledgers[&channel].chain.height();
            for target in self.pull_targets(&channel) {
                ctx.send(
                    target,
                    Payload::BlockRequest {
                        channel: channel.clone(),
                        from: height,
                    },
                );
            }
        }
    }

    // -- gateway ------------------------------------------------------------

    fn endorser_universe(&self, channel: &str) -> BTreeSet<String> {
        let Some(ledger) = self.ledgers.get(channel) else {
            return BTreeSet::new();
        };
        ledger
            .config
            .channel
            .member_orgs
            .iter()
            .filter(|org| !self.net.peers_with_role(org, PeerRole::Endorser).is_empty())
            .map(|org| format!("{org}.peer"))
            .collect()
    }

    /// Maps a principal like `R1.peer` to one of that org's endorser peers,
    /// rotating on retry attempts.
    fn endorser_peer_for(&self, principal: &str, attempt: u64) -> Option<NodeId> {
        let org = principal.strip_suffix(".peer")?;
        let peers = self.net.peers_with_role(org, PeerRole::Endorser);
        if peers.is_empty() {
            return None;
        }
        Some(peers[(attempt as usize) % peers.len()].clone())
    }

    fn start_round(&mut self, ctx: &mut Ctx<'_>, mut round: EndorseRound) {
        let tx_id = round.proposal.tx_id;
        if round.sets.is_empty() {
            let reason = if round.evaluate {
                "no endorser reachable for evaluation".to_string()
            } else {
                "ENDORSEMENT_FAILURE: policy unsatisfiable with reachable endorsers".to_string()
            };
            ctx.send(
                round.client.clone(),
                Payload::EndorseFailed {
                    tx_id,
                    reason,
                    chaincode_error: false,
                },
            );
            return;
        }
        let set = round.sets[0].clone();
        round.outstanding.clear();
        round.collected.clear();
        for principal in &set {
            if let Some(peer) = self.endorser_peer_for(principal, round.attempt) {
                round.outstanding.insert(peer, principal.clone());
            }
        }
        if round.outstanding.is_empty() {
            // no live mapping for this set; fall through to the next one
            round.sets.remove(0);
            round.attempt += 1;
            self.start_round(ctx, round);
            return;
        }
        for peer in round.outstanding.keys() {
            ctx.send(peer.clone(), Payload::Endorse(round.proposal.clone()));
        }
        ctx.timer(ENDORSE_TIMEOUT, TimerTag::GatewayEndorse(tx_id));
        self.gateway.rounds.insert(tx_id, round);
    }

    fn on_submit_proposal(&mut self, ctx: &mut Ctx<'_>, client: NodeId, proposal: TransactionProposal, evaluate: bool) {
        let tx_id = proposal.tx_id;
        let fail = |ctx: &mut Ctx<'_>, reason: String| {
            ctx.send(
                client.clone(),
                Payload::EndorseFailed {
                    tx_id,
                    reason,
                    chaincode_error: false,
                },
            );
        };
        let Some(ledger) = self.ledgers.get(&proposal.channel_id) else {
            return fail(ctx, format!("gateway has not joined channel {}", proposal.channel_id));
        };
        let Some(def) = ledger.config.definition(&proposal.chaincode) else {
            return fail(ctx, format!("UNKNOWN_CHAINCODE: {} not committed", proposal.chaincode));
        };
        let policy = def.endorsement_policy.clone();
        let universe = self.endorser_universe(&proposal.channel_id);
        let sets: Vec<Vec<String>> = if evaluate {
            // any single endorser will do for a read-only evaluation
            universe.iter().map(|p| vec![p.clone()]).collect()
        } else {
            policy
                .minimal_satisfying_sets(&universe)
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect()
        };
        let round = EndorseRound {
            client,
            proposal,
            evaluate,
            sets,
            outstanding: BTreeMap::new(),
            collected: Vec::new(),
            policy,
            attempt: 0,
        };
        self.start_round(ctx, round);
    }

    fn on_endorse_result(
        &mut self,
        ctx: &mut Ctx<'_>,
        from: NodeId,
        tx_id: Hash256,
        result: Result<(Endorsement, ChaincodeResponse), EndorseRejection>,
    ) {
        let Some(mut round) = self.gateway.rounds.remove(&tx_id) else {
            return; // stale response from an abandoned round
        };
        match result {
            Ok((endorsement, response)) => {
                if round.outstanding.remove(&from).is_none() {
                    self.gateway.rounds.insert(tx_id, round);
                    return;
                }
                round.collected.push((endorsement, response));
                if !round.outstanding.is_empty() {
                    self.gateway.rounds.insert(tx_id, round);
                    return;
                }
                if round.evaluate {
                    let payload = round.collected[0].1.payload.clone();
                    ctx.send(
                        round.client,
                        Payload::EvaluateResult {
                            tx_id,
                            result: Ok(payload),
                        },
                    );
                } else {
                    ctx.send(
                        round.client,
                        Payload::EndorsementBundle {
                            tx_id,
                            policy: round.policy,
                            results: round.collected,
                        },
                    );
                }
            }
            Err(rejection) => {
                let chaincode_error = matches!(rejection, EndorseRejection::Chaincode(_));
                if round.evaluate {
                    ctx.send(
                        round.client,
                        Payload::EvaluateResult {
                            tx_id,
                            result: Err(rejection.to_string()),
                        },
                    );
                } else {
                    ctx.send(
                        round.client,
                        Payload::EndorseFailed {
                            tx_id,
                            reason: rejection.to_string(),
                            chaincode_error,
                        },
                    );
                }
            }
        }
    }

    fn on_endorse_timeout(&mut self, ctx: &mut Ctx<'_>, tx_id: Hash256) {
        let Some(mut round) = self.gateway.rounds.remove(&tx_id) else {
            return; // round already completed
        };
        if round.outstanding.is_empty() {
            // completed concurrently; nothing to do
            return;
        }
        // some endorsers unreachable: fall back to the next minimal set
        round.sets.remove(0);
        round.attempt += 1;
        self.start_round(ctx, round);
    }

    fn submit_to_orderer(&mut self, ctx: &mut Ctx<'_>, tx_id: Hash256) {
        let Some(pending) = self.gateway.broadcasts.get_mut(&tx_id) else {
            return;
        };
        let orderers = self.net.orderer_ids();
        let target = match &self.gateway.orderer_hint {
            Some(leader) => leader.clone(),
            None => {
                let t = orderers[(self.gateway.orderer_rotation as usize) % orderers.len()].clone();
                self.gateway.orderer_rotation += 1;
                t
            }
        };
        pending.attempts += 1;
        ctx.send(target, Payload::Broadcast(pending.tx.clone()));
        ctx.timer(RESUBMIT_INTERVAL, TimerTag::GatewayResubmit(tx_id));
    }

    fn on_broadcast_ack(&mut self, ctx: &mut Ctx<'_>, tx_id: Hash256, status: BroadcastStatus) {
        let Some(pending) = self.gateway.broadcasts.get(&tx_id) else {
            return;
        };
        let client = pending.client.clone();
        match status {
            BroadcastStatus::Accepted => {
                self.gateway.broadcasts.remove(&tx_id);
                ctx.send(
                    client,
                    Payload::SubmitOutcome {
                        tx_id,
                        accepted: true,
                        detail: String::new(),
                    },
                );
            }
            BroadcastStatus::Rejected(reason) => {
                self.gateway.broadcasts.remove(&tx_id);
                ctx.send(
                    client,
                    Payload::SubmitOutcome {
                        tx_id,
                        accepted: false,
                        detail: reason,
                    },
                );
            }
            BroadcastStatus::NoLeader(hint) => {
                // cache the hint until the next NO_LEADER answer
                self.gateway.orderer_hint = hint;
                self.submit_to_orderer(ctx, tx_id);
            }
        }
    }

    fn on_resubmit_timer(&mut self, ctx: &mut Ctx<'_>, tx_id: Hash256) {
        let Some(pending) = self.gateway.broadcasts.get(&tx_id) else {
            return;
        };
        if pending.attempts >= MAX_BROADCAST_ATTEMPTS {
            let client = pending.client.clone();
            self.gateway.broadcasts.remove(&tx_id);
            ctx.send(
                client,
                Payload::SubmitOutcome {
                    tx_id,
                    accepted: false,
                    detail: "ordering service unreachable".to_string(),
                },
            );
            return;
        }
        // no ack yet; the cached leader may be dead
        self.gateway.orderer_hint = None;
        self.submit_to_orderer(ctx, tx_id);
    }

    // -- dispatch ------------------------------------------------------------

    pub fn on_message(&mut self, ctx: &mut Ctx<'_>, env: Envelope) {
        match env.payload {
            Payload::Endorse(proposal) => {
                let tx_id = proposal.tx_id;
                match self.endorse(&proposal) {
                    Ok((endorsement, response)) => ctx.send(
                        env.from,
                        Payload::EndorseOk {
                            tx_id,
                            endorsement,
                            response,
                        },
                    ),
                    Err(reason) => ctx.send(env.from, Payload::EndorseRejected { tx_id, reason }),
                }
            }
            Payload::BlockDeliver { channel, block } => self.deliver_block(ctx, &channel, block),
            Payload::BlockResponse { channel, blocks } => {
                for block in blocks {
                    self.deliver_block(ctx, &channel, block);
                }
            }
            Payload::BlockRequest { channel, from } => {
                if let Some(ledger) = self.ledgers.get(&channel) {
                    let height = ledger.chain.height();
                    if from < height {
                        let to = (from + CATCH_UP_BATCH).min(height);
                        let blocks: Vec<Block> = (from..to)
                            .filter_map(|n| ledger.chain.get(n).cloned())
                            .collect();
                        ctx.send(env.from, Payload::BlockResponse { channel, blocks });
                    }
                }
            }
            Payload::SubscribeCommits { channel } => {
                if let Some(ledger) = self.ledgers.get_mut(&channel) {
                    ledger.subscribers.insert(env.from);
                }
            }
            Payload::SubmitProposal(p) => self.on_submit_proposal(ctx, env.from, p, false),
            Payload::EvaluateProposal(p) => self.on_submit_proposal(ctx, env.from, p, true),
            Payload::EndorseOk {
                tx_id,
                endorsement,
                response,
            } => self.on_endorse_result(ctx, env.from, tx_id, Ok((endorsement, response))),
            Payload::EndorseRejected { tx_id, reason } => {
                self.on_endorse_result(ctx, env.from, tx_id, Err(reason))
            }
            Payload::SendTransaction(tx) => {
                let tx_id = tx.tx_id;
                self.gateway.broadcasts.insert(
                    tx_id,
                    PendingBroadcast {
                        client: env.from,
                        tx,
                        attempts: 0,
                    },
                );
                self.submit_to_orderer(ctx, tx_id);
            }
            Payload::BroadcastAck { tx_id, status } => self.on_broadcast_ack(ctx, tx_id, status),
            _ => {}
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx<'_>, tag: TimerTag) {
        match tag {
            TimerTag::Sync => self.on_sync(ctx),
            TimerTag::GatewayEndorse(tx_id) => self.on_endorse_timeout(ctx, tx_id),
            TimerTag::GatewayResubmit(tx_id) => self.on_resubmit_timer(ctx, tx_id),
            _ => {}
        }
    }
}
