//! Network and channel configuration: the consortium description file, the
//! channel configuration recorded in genesis blocks, and the artifact
//! generation toolchain (genesis, join and anchor-update envelopes).
//!
//! A channel exists once its configuration block exists; peers join against
//! the genesis artifact and the ordering service registers the channel from
//! the same bytes. Artifact generation is a pure function of the network
//! configuration, so rerunning it yields byte-identical files.

use crate::chaincode;
use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use crate::identity::{Certificate, Identity};
use crate::ledger::state::BackendKind;
use crate::ledger::{Block, ValidationCode};
use crate::ordering::BlockCutConfig;
use crate::peer::{ConfigUpdate, PeerRole, Transaction, TxBody};
use crate::policy::PolicyExpr;
use crate::text::{self, Node, TextError};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("bad configuration: {0}")]
    Invalid(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("bad policy: {0}")]
    Policy(#[from] crate::policy::PolicyError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

// ---------------------------------------------------------------------------
// Configuration types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeerSpec {
    pub peer_id: String,
    pub roles: BTreeSet<PeerRole>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrgSpec {
    pub org_id: String,
    pub msp_id: String,
    pub ca_id: String,
    /// Filled in at bootstrap once the CA exists.
    pub root_cert: Option<Certificate>,
    pub peers: Vec<PeerSpec>,
    pub clients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderingNodeSpec {
    pub node_id: String,
    pub org_id: String,
}

/// The consortium description (the shared network configuration file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkConfig {
    pub consortium: String,
    pub organizations: Vec<OrgSpec>,
    pub ordering: Vec<OrderingNodeSpec>,
    pub channels: Vec<ChannelConfig>,
}

/// Channel definition recorded in the genesis block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelConfig {
    pub channel_id: String,
    pub member_orgs: Vec<String>,
    pub anchor_peers: BTreeMap<String, String>,
    pub state_backend: BackendKind,
    pub block_cut: BlockCutConfig,
    /// Policy governing chaincode definition commits, over `org.admin`
    /// principals. Defaults to a strict majority of member orgs.
    pub lifecycle_policy: PolicyExpr,
}

impl Encode for ChannelConfig {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.channel_id);
        self.member_orgs.encode_into(out);
        codec::put_count(out, self.anchor_peers.len());
        for (org, peer) in &self.anchor_peers {
            codec::put_str(out, org);
            codec::put_str(out, peer);
        }
        codec::put_tag(out, self.state_backend.tag());
        self.block_cut.encode_into(out);
        codec::put_str(out, &self.lifecycle_policy.to_string());
    }
}

impl ChannelConfig {
    pub fn decode(d: &mut Decoder<'_>) -> Result<ChannelConfig, DecodeError> {
        let channel_id = d.string()?;
        let member_orgs = d.list(|d| d.string())?;
        let anchors = d.list(|d| Ok((d.string()?, d.string()?)))?;
        let at = d.offset();
        let tag = d.tag()?;
        let state_backend =
            BackendKind::from_tag(tag).ok_or(DecodeError::BadTag { offset: at, tag })?;
        let block_cut = BlockCutConfig::decode(d)?;
        let policy_text = d.string()?;
        let lifecycle_policy = crate::policy::parse(&policy_text)
            .map_err(|e| d.invalid(format!("bad lifecycle policy: {e}")))?;
        Ok(ChannelConfig {
            channel_id,
            member_orgs,
            anchor_peers: anchors.into_iter().collect(),
            state_backend,
            block_cut,
            lifecycle_policy,
        })
    }
}

impl NetworkConfig {
    pub fn org(&self, org_id: &str) -> Option<&OrgSpec> {
        self.organizations.iter().find(|o| o.org_id == org_id)
    }

    pub fn org_mut(&mut self, org_id: &str) -> Option<&mut OrgSpec> {
        self.organizations.iter_mut().find(|o| o.org_id == org_id)
    }

    pub fn channel(&self, channel_id: &str) -> Option<&ChannelConfig> {
        self.channels.iter().find(|c| c.channel_id == channel_id)
    }

    pub fn orderer_ids(&self) -> Vec<String> {
        self.ordering.iter().map(|o| o.node_id.clone()).collect()
    }

    /// Trust anchors keyed by CA id, for certificate verification.
    pub fn trust_roots(&self) -> BTreeMap<String, Certificate> {
        self.organizations
            .iter()
            .filter_map(|o| o.root_cert.clone().map(|c| (o.ca_id.clone(), c)))
            .collect()
    }

    /// Peer ids per org, for roster checks.
    pub fn org_peers(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.organizations
            .iter()
            .map(|o| {
                (
                    o.org_id.clone(),
                    o.peers.iter().map(|p| p.peer_id.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn peers_with_role(&self, org_id: &str, role: PeerRole) -> Vec<String> {
        self.org(org_id)
            .map(|o| {
                o.peers
                    .iter()
                    .filter(|p| p.roles.contains(&role))
                    .map(|p| p.peer_id.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// The org's leader-role peer, if any (at most one is enforced).
    pub fn leader_peer(&self, org_id: &str) -> Option<String> {
        self.peers_with_role(org_id, PeerRole::Leader).into_iter().next()
    }

    pub fn org_of_peer(&self, peer_id: &str) -> Option<&str> {
        self.organizations
            .iter()
            .find(|o| o.peers.iter().any(|p| p.peer_id == peer_id))
            .map(|o| o.org_id.as_str())
    }

    pub fn org_of_client(&self, client_id: &str) -> Option<&str> {
        self.organizations
            .iter()
            .find(|o| o.clients.iter().any(|c| c == client_id))
            .map(|o| o.org_id.as_str())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let mut org_ids = BTreeSet::new();
        let mut node_ids = BTreeSet::new();
        for org in &self.organizations {
            if !org_ids.insert(&org.org_id) {
                return Err(invalid(format!("duplicate org id {}", org.org_id)));
            }
            let leaders = org
                .peers
                .iter()
                .filter(|p| p.roles.contains(&PeerRole::Leader))
                .count();
            if leaders > 1 {
                return Err(invalid(format!(
                    "org {} declares {} leader peers; at most one is allowed",
                    org.org_id, leaders
                )));
            }
            for p in &org.peers {
                if !node_ids.insert(p.peer_id.clone()) {
                    return Err(invalid(format!("duplicate node id {}", p.peer_id)));
                }
            }
            for c in &org.clients {
                if !node_ids.insert(c.clone()) {
                    return Err(invalid(format!("duplicate node id {c}")));
                }
            }
        }
        for o in &self.ordering {
            if self.org(&o.org_id).is_none() {
                return Err(invalid(format!(
                    "ordering node {} names unknown org {}",
                    o.node_id, o.org_id
                )));
            }
            if !node_ids.insert(o.node_id.clone()) {
                return Err(invalid(format!("duplicate node id {}", o.node_id)));
            }
        }
        if self.ordering.is_empty() {
            return Err(invalid("at least one ordering node is required"));
        }
        let mut channel_ids = BTreeSet::new();
        for ch in &self.channels {
            if !channel_ids.insert(&ch.channel_id) {
                return Err(invalid(format!("duplicate channel id {}", ch.channel_id)));
            }
            if ch.member_orgs.is_empty() {
                return Err(invalid(format!("channel {} has no members", ch.channel_id)));
            }
            for org in &ch.member_orgs {
                if self.org(org).is_none() {
                    return Err(invalid(format!(
                        "channel {} names unknown org {org}",
                        ch.channel_id
                    )));
                }
            }
            for (org, peer) in &ch.anchor_peers {
                let Some(spec) = self.org(org) else {
                    return Err(invalid(format!("anchor for unknown org {org}")));
                };
                if !spec.peers.iter().any(|p| p.peer_id == *peer) {
                    return Err(invalid(format!(
                        "anchor peer {peer} does not belong to org {org}"
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Configuration file parsing
// ---------------------------------------------------------------------------

/// Parses the network configuration file (restricted YAML subset).
pub fn parse_network_config(input: &str) -> Result<NetworkConfig, ConfigError> {
    let root = text::parse(input)?;
    network_from_node(&root)
}

pub fn network_from_node(root: &Node) -> Result<NetworkConfig, ConfigError> {
    let consortium = root.str_of("consortium")?;
    let mut organizations = Vec::new();
    for org_node in root.req("organizations")?.as_list()? {
        let org_id = org_node.str_of("org")?;
        let msp_id = org_node
            .get("msp")
            .map(|n| n.as_str().map(String::from))
            .transpose()?
            .unwrap_or_else(|| format!("{org_id}MSP"));
        let ca_id = org_node
            .get("ca")
            .map(|n| n.as_str().map(String::from))
            .transpose()?
            .unwrap_or_else(|| format!("CA.{org_id}"));
        let mut peers = Vec::new();
        if let Some(peers_node) = org_node.get("peers") {
            for p in peers_node.as_list()? {
                let peer_id = p.str_of("peer")?;
                let mut roles = BTreeSet::new();
                for r in p.csv_of("roles")? {
                    let role = PeerRole::parse(&r)
                        .ok_or_else(|| invalid(format!("unknown peer role `{r}`")))?;
                    roles.insert(role);
                }
                // joining a channel makes a peer a committer; make it explicit
                roles.insert(PeerRole::Committer);
                peers.push(PeerSpec { peer_id, roles });
            }
        }
        let clients = match org_node.get("clients") {
            Some(node) => match node.as_list() {
                Ok(list) => list
                    .iter()
                    .map(|n| n.as_str().map(String::from))
                    .collect::<Result<Vec<_>, _>>()?,
                Err(_) => node
                    .as_str()?
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            },
            None => Vec::new(),
        };
        organizations.push(OrgSpec {
            org_id,
            msp_id,
            ca_id,
            root_cert: None,
            peers,
            clients,
        });
    }

    let mut ordering = Vec::new();
    for o in root.req("ordering")?.as_list()? {
        ordering.push(OrderingNodeSpec {
            node_id: o.str_of("node")?,
            org_id: o.str_of("org")?,
        });
    }

    let mut channels = Vec::new();
    if let Some(channels_node) = root.get("channels") {
        for ch in channels_node.as_list()? {
            channels.push(channel_from_node(ch)?);
        }
    }

    let config = NetworkConfig {
        consortium,
        organizations,
        ordering,
        channels,
    };
    config.validate()?;
    Ok(config)
}

fn channel_from_node(ch: &Node) -> Result<ChannelConfig, ConfigError> {
    let channel_id = ch.str_of("channel")?;
    let member_orgs = ch.csv_of("members")?;
    let state_backend = match ch.get("backend") {
        Some(node) => {
            let s = node.as_str()?;
            BackendKind::parse(s).ok_or_else(|| {
                invalid(format!("unknown backend `{s}` (ordered-kv or document)"))
            })?
        }
        None => BackendKind::OrderedKv,
    };
    let mut block_cut = BlockCutConfig::default();
    if let Some(n) = ch.get("max_tx_count") {
        block_cut.max_tx_count = n
            .as_str()?
            .parse()
            .map_err(|_| invalid("max_tx_count must be an integer"))?;
    }
    if let Some(n) = ch.get("batch_timeout") {
        block_cut.batch_timeout_us = text::parse_duration_us(n.as_str()?, n.line)?;
    }
    if block_cut.max_tx_count == 0 {
        return Err(invalid("max_tx_count must be at least 1"));
    }
    if block_cut.batch_timeout_us == 0 {
        return Err(invalid("batch_timeout must be positive"));
    }
    let mut anchor_peers = BTreeMap::new();
    if let Some(anchors) = ch.get("anchors") {
        for (org, peer) in anchors.as_map()? {
            anchor_peers.insert(org.clone(), peer.as_str()?.to_string());
        }
    }
    let lifecycle_policy = match ch.get("lifecycle_policy") {
        Some(n) => crate::policy::parse(n.as_str()?)?,
        None => chaincode::majority_admin_policy(&member_orgs),
    };
    Ok(ChannelConfig {
        channel_id,
        member_orgs,
        anchor_peers,
        state_backend,
        block_cut,
        lifecycle_policy,
    })
}

// ---------------------------------------------------------------------------
// Channel artifacts
// ---------------------------------------------------------------------------

/// The join artifact: binds a channel id to its genesis header hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinEnvelope {
    pub channel_id: String,
    pub genesis_hash: Hash256,
    pub signer: Certificate,
    pub signature: Vec<u8>,
}

impl JoinEnvelope {
    fn signing_payload(channel_id: &str, genesis_hash: &Hash256) -> Vec<u8> {
        let mut out = Vec::new();
        codec::put_str(&mut out, channel_id);
        genesis_hash.encode_into(&mut out);
        out
    }

    pub fn verify(&self) -> bool {
        crate::identity::verify(
            &self.signer,
            &JoinEnvelope::signing_payload(&self.channel_id, &self.genesis_hash),
            &self.signature,
        )
    }
}

impl Encode for JoinEnvelope {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.channel_id);
        self.genesis_hash.encode_into(out);
        self.signer.encode_into(out);
        codec::put_bytes(out, &self.signature);
    }
}

impl JoinEnvelope {
    pub fn decode(d: &mut Decoder<'_>) -> Result<JoinEnvelope, DecodeError> {
        Ok(JoinEnvelope {
            channel_id: d.string()?,
            genesis_hash: d.hash()?,
            signer: Certificate::decode(d)?,
            signature: d.bytes()?,
        })
    }
}

/// The anchor artifact: a signed request to set an org's anchor peer,
/// submitted later as a config transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorEnvelope {
    pub channel_id: String,
    pub org_id: String,
    pub peer_id: String,
    pub signer: Certificate,
    pub signature: Vec<u8>,
}

impl AnchorEnvelope {
    pub fn signing_payload(channel_id: &str, org_id: &str, peer_id: &str) -> Vec<u8> {
        let mut out = Vec::new();
        codec::put_str(&mut out, channel_id);
        codec::put_str(&mut out, org_id);
        codec::put_str(&mut out, peer_id);
        out
    }

    pub fn sign(admin: &Identity, channel_id: &str, org_id: &str, peer_id: &str) -> AnchorEnvelope {
        let payload = AnchorEnvelope::signing_payload(channel_id, org_id, peer_id);
        AnchorEnvelope {
            channel_id: channel_id.to_string(),
            org_id: org_id.to_string(),
            peer_id: peer_id.to_string(),
            signer: admin.certificate.clone(),
            signature: admin.sign(&payload),
        }
    }

    pub fn verify(&self) -> bool {
        crate::identity::verify(
            &self.signer,
            &AnchorEnvelope::signing_payload(&self.channel_id, &self.org_id, &self.peer_id),
            &self.signature,
        )
    }
}

impl Encode for AnchorEnvelope {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.channel_id);
        codec::put_str(out, &self.org_id);
        codec::put_str(out, &self.peer_id);
        self.signer.encode_into(out);
        codec::put_bytes(out, &self.signature);
    }
}

impl AnchorEnvelope {
    pub fn decode(d: &mut Decoder<'_>) -> Result<AnchorEnvelope, DecodeError> {
        Ok(AnchorEnvelope {
            channel_id: d.string()?,
            org_id: d.string()?,
            peer_id: d.string()?,
            signer: Certificate::decode(d)?,
            signature: d.bytes()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub genesis: Block,
    pub join_tx: JoinEnvelope,
    /// One anchor update envelope per org that declares an anchor.
    pub anchor_updates: BTreeMap<String, AnchorEnvelope>,
}

/// Builds the genesis config transaction for a channel. Deterministic: the
/// transaction id is the digest of the channel configuration itself.
pub fn genesis_transaction(config: &ChannelConfig, creator: &Identity) -> Transaction {
    let mut id_bytes = Vec::new();
    codec::put_str(&mut id_bytes, "genesis");
    config.encode_into(&mut id_bytes);
    let tx_id = Hash256::of(&id_bytes);
    Transaction::build_signed(
        tx_id,
        config.channel_id.clone(),
        TxBody::Config(ConfigUpdate::Genesis(config.clone())),
        creator,
    )
}

/// The configtxgen analog: genesis block plus join and anchor artifacts.
/// Signing uses the admin identities enrolled at bootstrap (keyed by org).
pub fn generate_artifacts(
    net: &NetworkConfig,
    admins: &BTreeMap<String, Identity>,
    channel_id: &str,
) -> Result<Artifacts, ConfigError> {
    let config = net
        .channel(channel_id)
        .ok_or_else(|| ConfigError::UnknownChannel(channel_id.to_string()))?;
    for org in &config.member_orgs {
        let spec = net.org(org).ok_or_else(|| invalid(format!("unknown org {org}")))?;
        if spec.root_cert.is_none() {
            return Err(invalid(format!("org {org} has no CA root certificate")));
        }
    }
    // the first member org's admin signs network-level artifacts
    let signing_org = &config.member_orgs[0];
    let signer = admins
        .get(signing_org)
        .ok_or_else(|| invalid(format!("no admin identity for org {signing_org}")))?;

    let genesis_tx = genesis_transaction(config, signer);
    let genesis = Block::build(0, Hash256::ZERO, vec![genesis_tx], vec![ValidationCode::Valid]);

    let join_tx = JoinEnvelope {
        channel_id: channel_id.to_string(),
        genesis_hash: genesis.header.hash(),
        signer: signer.certificate.clone(),
        signature: signer.sign(&JoinEnvelope::signing_payload(
            channel_id,
            &genesis.header.hash(),
        )),
    };

    let mut anchor_updates = BTreeMap::new();
    for (org, peer) in &config.anchor_peers {
        let admin = admins
            .get(org)
            .ok_or_else(|| invalid(format!("no admin identity for org {org}")))?;
        anchor_updates.insert(
            org.clone(),
            AnchorEnvelope::sign(admin, channel_id, org, peer),
        );
    }

    Ok(Artifacts {
        genesis,
        join_tx,
        anchor_updates,
    })
}

/// Structural check of a genesis block; returns the embedded configuration.
pub fn verify_genesis(block: &Block) -> Result<ChannelConfig, ConfigError> {
    if block.header.number != 0 {
        return Err(invalid("genesis block number must be 0"));
    }
    if block.header.previous_hash != Hash256::ZERO {
        return Err(invalid("genesis previous hash must be all zeros"));
    }
    if block.transactions.len() != 1 {
        return Err(invalid("genesis must contain exactly one config transaction"));
    }
    if block.header.transactions_hash != crate::ledger::transactions_hash(&block.transactions) {
        return Err(invalid("genesis transactions hash mismatch"));
    }
    match &block.transactions[0].body {
        TxBody::Config(ConfigUpdate::Genesis(cfg)) => Ok(cfg.clone()),
        _ => Err(invalid("genesis transaction is not a channel configuration")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{CertificateAuthority, Role};

    pub(crate) const TWO_ORG_YAML: &str = "\
consortium: X
organizations:
  - org: R1
    peers:
      - peer: P1
        roles: endorser,committer,anchor,leader,gateway
    clients:
      - A1
  - org: R2
    peers:
      - peer: P2
        roles: endorser,committer,anchor,leader,gateway
    clients:
      - A2
ordering:
  - node: O1
    org: R1
channels:
  - channel: C
    members: R1,R2
    backend: ordered-kv
    max_tx_count: 2
    batch_timeout: 500ms
    anchors:
      R1: P1
      R2: P2
";

    fn material(net: &mut NetworkConfig) -> BTreeMap<String, Identity> {
        let mut admins = BTreeMap::new();
        for org in net.organizations.iter_mut() {
            let mut ca = CertificateAuthority::new(&org.ca_id, &org.org_id, org.org_id.as_bytes());
            let admin = ca.enroll("admin", Role::Admin).unwrap();
            org.root_cert = Some(ca.root_certificate().clone());
            admins.insert(org.org_id.clone(), admin);
        }
        admins
    }

    #[test]
    fn parses_two_org_config() {
        let net = parse_network_config(TWO_ORG_YAML).unwrap();
        assert_eq!(net.consortium, "X");
        assert_eq!(net.organizations.len(), 2);
        assert_eq!(net.ordering.len(), 1);
        let ch = net.channel("C").unwrap();
        assert_eq!(ch.member_orgs, vec!["R1", "R2"]);
        assert_eq!(ch.block_cut.max_tx_count, 2);
        assert_eq!(ch.block_cut.batch_timeout_us, 500_000);
        assert_eq!(ch.anchor_peers["R1"], "P1");
        // default lifecycle policy: majority of 2 = 2
        assert_eq!(ch.lifecycle_policy.to_string(), "OutOf(2,R1.admin,R2.admin)");
        assert_eq!(net.leader_peer("R1"), Some("P1".to_string()));
    }

    #[test]
    fn rejects_foreign_anchor_peer() {
        let bad = TWO_ORG_YAML.replace("R2: P2", "R2: P1");
        let err = parse_network_config(&bad).unwrap_err();
        assert!(err.to_string().contains("does not belong"));
    }

    #[test]
    fn rejects_two_leaders_per_org() {
        let bad = TWO_ORG_YAML.replace(
            "    clients:\n      - A2\n",
            "      - peer: P2b\n        roles: leader\n    clients:\n      - A2\n",
        );
        let err = parse_network_config(&bad).unwrap_err();
        assert!(err.to_string().contains("leader"));
    }

    #[test]
    fn artifacts_are_deterministic_and_well_formed() {
        let mut net = parse_network_config(TWO_ORG_YAML).unwrap();
        let admins = material(&mut net);

        let a1 = generate_artifacts(&net, &admins, "C").unwrap();
        let a2 = generate_artifacts(&net, &admins, "C").unwrap();
        assert_eq!(a1.genesis.encode(), a2.genesis.encode());
        assert_eq!(a1.join_tx.encode(), a2.join_tx.encode());
        assert_eq!(
            a1.anchor_updates["R1"].encode(),
            a2.anchor_updates["R1"].encode()
        );

        assert_eq!(a1.genesis.header.number, 0);
        assert_eq!(a1.genesis.header.previous_hash, Hash256::ZERO);
        assert_eq!(a1.genesis.transactions.len(), 1);
        assert!(a1.join_tx.verify());
        assert!(a1.anchor_updates["R2"].verify());

        // decoded genesis round-trips the channel config field for field
        let cfg = verify_genesis(&a1.genesis).unwrap();
        assert_eq!(&cfg, net.channel("C").unwrap());

        assert!(matches!(
            generate_artifacts(&net, &admins, "nope"),
            Err(ConfigError::UnknownChannel(_))
        ));
    }

    #[test]
    fn artifact_envelopes_decode() {
        let mut net = parse_network_config(TWO_ORG_YAML).unwrap();
        let admins = material(&mut net);
        let artifacts = generate_artifacts(&net, &admins, "C").unwrap();
        let join = codec::decode_all(&artifacts.join_tx.encode(), JoinEnvelope::decode).unwrap();
        assert_eq!(join, artifacts.join_tx);
        let anchor = codec::decode_all(
            &artifacts.anchor_updates["R1"].encode(),
            AnchorEnvelope::decode,
        )
        .unwrap();
        assert_eq!(anchor, artifacts.anchor_updates["R1"]);
    }
}
