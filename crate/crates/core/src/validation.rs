//! Commit-time transaction validation.
//!
//! Every committer runs the same deterministic pipeline over each block, in
//! transaction order:
//!
//! 1. signature stage — creator and endorser certificates verify against
//!    the trust roots and CRL, and every signature checks out, else
//!    `BAD_SIGNATURE`;
//! 2. definition stage — the transaction's chaincode name/version must be
//!    the channel's committed definition, else `UNKNOWN_CHAINCODE`;
//! 3. policy stage — the endorser principals must satisfy the chaincode's
//!    endorsement policy (config updates check admin signatures and the
//!    lifecycle policy instead), else `POLICY_FAILURE`;
//! 4. staleness stage — every read version must equal the current world
//!    state version for that key, else `STALE_READ`.
//!
//! VALID transactions apply their write-sets (or config effects)
//! immediately, so later transactions in the same block see their writes.
//! The whole pipeline is a pure function of (trust context, genesis, block
//! sequence), which is what lets peers, chain verification, and replay all
//! agree on every flag.

use crate::chaincode::{self, ChaincodeDefinition, ChaincodeResponse, ResponseStatus, WriteValue};
use crate::channel::{self, ChannelConfig, NetworkConfig};
use crate::identity::{self, Certificate, Role};
use crate::ledger::state::{Version, WorldState};
use crate::ledger::{Block, ValidationCode};
use crate::peer::{ConfigUpdate, Transaction, TxBody};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Certificate-verification material plus the org/peer roster, all derived
/// from the shared network configuration.
#[derive(Debug, Clone, Default)]
pub struct TrustContext {
    /// Trust roots keyed by CA id.
    pub roots: BTreeMap<String, Certificate>,
    /// Revoked (ca_id, serial) pairs.
    pub crl: BTreeSet<(String, u64)>,
    /// Peer ids per org, for anchor-update checks.
    pub org_peers: BTreeMap<String, BTreeSet<String>>,
}

impl TrustContext {
    pub fn from_network(net: &NetworkConfig) -> TrustContext {
        TrustContext {
            roots: net.trust_roots(),
            crl: BTreeSet::new(),
            org_peers: net.org_peers(),
        }
    }

    fn cert_ok(&self, cert: &Certificate) -> bool {
        identity::verify_certificate(cert, &self.roots, &self.crl)
    }
}

/// Channel configuration as of some point in the chain: the config block
/// contents plus every committed chaincode definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigState {
    pub channel: ChannelConfig,
    pub definitions: BTreeMap<String, ChaincodeDefinition>,
}

impl ConfigState {
    pub fn from_genesis(genesis: &Block) -> Result<ConfigState, String> {
        let channel = channel::verify_genesis(genesis).map_err(|e| e.to_string())?;
        Ok(ConfigState {
            channel,
            definitions: BTreeMap::new(),
        })
    }

    pub fn definition(&self, name: &str) -> Option<&ChaincodeDefinition> {
        self.definitions.get(name)
    }
}

/// Validates one transaction against the current config and state. Does not
/// apply effects; pure.
pub fn validate_tx(
    trust: &TrustContext,
    cfg: &ConfigState,
    state: &WorldState,
    tx: &Transaction,
) -> ValidationCode {
    // stage 1: certificates and signatures
    if !trust.cert_ok(&tx.creator) {
        return ValidationCode::BadSignature;
    }
    if !identity::verify(&tx.creator, &tx.signing_payload(), &tx.client_signature) {
        return ValidationCode::BadSignature;
    }
    match &tx.body {
        TxBody::Invoke {
            chaincode,
            version,
            rwset,
            response_payload,
            endorsements,
        } => {
            if tx.creator.subject.role != Role::Client {
                return ValidationCode::BadSignature;
            }
            // endorsement integrity binds each signature to this exact
            // read/write set via the response hash
            let expected_hash = ChaincodeResponse {
                status: ResponseStatus::Ok,
                payload: response_payload.clone(),
                rwset: rwset.clone(),
            }
            .hash();
            if endorsements.is_empty() {
                return ValidationCode::PolicyFailure;
            }
            for e in endorsements {
                if e.tx_id != tx.tx_id
                    || e.response_hash != expected_hash
                    || e.endorser.subject.role != Role::Peer
                    || !trust.cert_ok(&e.endorser)
                    || !e.verify()
                {
                    return ValidationCode::BadSignature;
                }
            }
            // stage 2: committed definition
            let Some(def) = cfg.definition(chaincode) else {
                return ValidationCode::UnknownChaincode;
            };
            if def.version != *version {
                return ValidationCode::UnknownChaincode;
            }
            // stage 3: endorsement policy over endorser org.role principals
            let signers: BTreeSet<String> =
                endorsements.iter().map(|e| e.endorser.principal()).collect();
            if !def.endorsement_policy.evaluate(&signers) {
                return ValidationCode::PolicyFailure;
            }
            // stage 4: multi-version staleness
            for read in &rwset.reads {
                if state.version_of(&read.key) != read.version {
                    return ValidationCode::StaleRead;
                }
            }
            ValidationCode::Valid
        }
        TxBody::Config(update) => validate_config_update(trust, cfg, tx, update),
    }
}

fn validate_config_update(
    trust: &TrustContext,
    cfg: &ConfigState,
    tx: &Transaction,
    update: &ConfigUpdate,
) -> ValidationCode {
    if tx.creator.subject.role != Role::Admin {
        return ValidationCode::PolicyFailure;
    }
    match update {
        // a genesis config appearing anywhere past block 0 is invalid
        ConfigUpdate::Genesis(_) => ValidationCode::PolicyFailure,
        ConfigUpdate::AnchorUpdate(env) => {
            if !trust.cert_ok(&env.signer) {
                return ValidationCode::BadSignature;
            }
            if !env.verify() {
                return ValidationCode::BadSignature;
            }
            if env.signer.subject.role != Role::Admin
                || env.signer.subject.org_id != env.org_id
            {
                return ValidationCode::PolicyFailure;
            }
            if !cfg.channel.member_orgs.contains(&env.org_id) {
                return ValidationCode::PolicyFailure;
            }
            // the proposed anchor must belong to the updating org
            match trust.org_peers.get(&env.org_id) {
                Some(peers) if peers.contains(&env.peer_id) => ValidationCode::Valid,
                _ => ValidationCode::PolicyFailure,
            }
        }
        ConfigUpdate::ChaincodeCommit {
            definition,
            approvals,
        } => {
            for a in approvals {
                if !trust.cert_ok(&a.admin_cert) {
                    return ValidationCode::BadSignature;
                }
            }
            if let Some(existing) = cfg.definitions.get(&definition.name) {
                if existing.version == definition.version {
                    return ValidationCode::PolicyFailure; // (name, version) already committed
                }
            }
            match chaincode::check_commit(
                definition,
                approvals,
                &cfg.channel.lifecycle_policy,
                cfg.channel.member_orgs.len(),
            ) {
                Ok(()) => ValidationCode::Valid,
                Err(chaincode::LifecycleError::BadApproval(_)) => ValidationCode::BadSignature,
                Err(_) => ValidationCode::PolicyFailure,
            }
        }
    }
}

/// Applies the effects of a transaction already judged VALID.
pub fn apply_tx(cfg: &mut ConfigState, state: &mut WorldState, tx: &Transaction, at: Version) {
    match &tx.body {
        TxBody::Invoke { rwset, .. } => {
            for w in &rwset.writes {
                match &w.value {
                    WriteValue::Put(bytes) => state.put(&w.key, bytes.clone(), at),
                    WriteValue::Delete => state.delete(&w.key),
                }
            }
        }
        TxBody::Config(ConfigUpdate::AnchorUpdate(env)) => {
            cfg.channel
                .anchor_peers
                .insert(env.org_id.clone(), env.peer_id.clone());
        }
        TxBody::Config(ConfigUpdate::ChaincodeCommit { definition, .. }) => {
            cfg.definitions
                .insert(definition.name.clone(), definition.clone());
        }
        TxBody::Config(ConfigUpdate::Genesis(_)) => {}
    }
}

/// Validates a block's transactions in order, applying each VALID one so
/// later transactions in the same block observe its effects. Returns one
/// flag per transaction.
pub fn validate_and_apply_block(
    trust: &TrustContext,
    cfg: &mut ConfigState,
    state: &mut WorldState,
    block: &Block,
) -> Vec<ValidationCode> {
    let mut flags = Vec::with_capacity(block.transactions.len());
    for (i, tx) in block.transactions.iter().enumerate() {
        let code = validate_tx(trust, cfg, state, tx);
        if code == ValidationCode::Valid {
            apply_tx(cfg, state, tx, Version::new(block.header.number, i as u64));
        }
        flags.push(code);
    }
    flags
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("block {block}: {message}")]
pub struct RevalidateError {
    pub block: u64,
    pub message: String,
}

impl RevalidateError {
    pub fn block(&self) -> u64 {
        self.block
    }
}

/// Outcome of re-running validation from genesis.
pub struct RevalidationResult {
    /// Re-derived flags, one vector per block (genesis included).
    pub flags: Vec<Vec<ValidationCode>>,
    pub state: WorldState,
    pub config: ConfigState,
}

/// Re-runs the whole validation pipeline over a block sequence starting at
/// genesis. The result depends only on the trust context and the block
/// bytes, never on who runs it.
pub fn revalidate_blocks(
    trust: &TrustContext,
    blocks: &[Block],
) -> Result<RevalidationResult, RevalidateError> {
    let Some(genesis) = blocks.first() else {
        return Err(RevalidateError {
            block: 0,
            message: "chain has no genesis block".to_string(),
        });
    };
    let mut cfg = ConfigState::from_genesis(genesis).map_err(|message| RevalidateError {
        block: 0,
        message,
    })?;
    let mut state = WorldState::new(cfg.channel.state_backend);
    let mut flags = vec![vec![ValidationCode::Valid]];
    for block in &blocks[1..] {
        flags.push(validate_and_apply_block(trust, &mut cfg, &mut state, block));
    }
    Ok(RevalidationResult {
        flags,
        state,
        config: cfg,
    })
}

