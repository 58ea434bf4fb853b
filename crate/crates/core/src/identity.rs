//! Membership services: certificate authorities, enrollment, signing,
//! verification, revocation, and identity wallets.
//!
//! Certificates are a simplified canonical structure (not X.509 DER): a
//! subject, a verification key, and the issuing CA's signature over the
//! canonical encoding of everything that precedes it. The signature scheme
//! is pluggable behind [`SignatureScheme`]; the default binding is Ed25519,
//! whose deterministic signatures keep whole-network runs replayable.

use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use crate::vfs::Vfs;
use ed25519_dalek::{Signer, Verifier};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentityError {
    #[error("common name `{0}` already enrolled with this CA")]
    DuplicateName(String),
    #[error("serial {0} was never issued by this CA")]
    UnknownSerial(u64),
    #[error("common name must be non-empty")]
    EmptyName,
    #[error("wallet label `{0}` already present")]
    DuplicateLabel(String),
    #[error("wallet entry failed to decode: {0}")]
    BadWalletEntry(#[from] DecodeError),
}

// ---------------------------------------------------------------------------
// Signature scheme
// ---------------------------------------------------------------------------

/// Length of the key seed material drawn per enrollment.
pub const KEY_SEED_LEN: usize = 32;

/// A deterministic public-key signature algorithm.
///
/// Determinism matters: signing the same message with the same key must
/// yield identical bytes so simulation runs replay bit-exactly.
pub trait SignatureScheme {
    fn name(&self) -> &'static str;
    /// Derives a (private, public) pair from 32 bytes of seed material.
    fn keypair(&self, seed: &[u8; KEY_SEED_LEN]) -> (Vec<u8>, Vec<u8>);
    fn sign(&self, private_key: &[u8], message: &[u8]) -> Vec<u8>;
    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool;
}

/// Ed25519 (RFC 8032), the default scheme.
pub struct Ed25519;

impl SignatureScheme for Ed25519 {
    fn name(&self) -> &'static str {
        "ed25519"
    }

    fn keypair(&self, seed: &[u8; KEY_SEED_LEN]) -> (Vec<u8>, Vec<u8>) {
        let sk = ed25519_dalek::SigningKey::from_bytes(seed);
        (seed.to_vec(), sk.verifying_key().to_bytes().to_vec())
    }

    fn sign(&self, private_key: &[u8], message: &[u8]) -> Vec<u8> {
        let seed: [u8; 32] = private_key.try_into().expect("ed25519 private key is 32 bytes");
        let sk = ed25519_dalek::SigningKey::from_bytes(&seed);
        sk.sign(message).to_bytes().to_vec()
    }

    fn verify(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        let Ok(pk_bytes) = <[u8; 32]>::try_from(public_key) else {
            return false;
        };
        let Ok(pk) = ed25519_dalek::VerifyingKey::from_bytes(&pk_bytes) else {
            return false;
        };
        let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
            return false;
        };
        pk.verify(message, &sig).is_ok()
    }
}

/// Resolves a scheme by name. Only Ed25519 is registered.
pub fn scheme(name: &str) -> Option<&'static dyn SignatureScheme> {
    match name {
        "ed25519" => Some(&Ed25519),
        _ => None,
    }
}

/// The default scheme used everywhere a scheme is not named explicitly.
pub fn default_scheme() -> &'static dyn SignatureScheme {
    &Ed25519
}

// ---------------------------------------------------------------------------
// Certificates and identities
// ---------------------------------------------------------------------------

/// Principal roles a certificate can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Admin,
    Peer,
    Orderer,
    Client,
}

impl Role {
    pub fn tag(self) -> u8 {
        match self {
            Role::Admin => 0,
            Role::Peer => 1,
            Role::Orderer => 2,
            Role::Client => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Role> {
        match tag {
            0 => Some(Role::Admin),
            1 => Some(Role::Peer),
            2 => Some(Role::Orderer),
            3 => Some(Role::Client),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "admin" => Some(Role::Admin),
            "peer" => Some(Role::Peer),
            "orderer" => Some(Role::Orderer),
            "client" => Some(Role::Client),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Admin => "admin",
            Role::Peer => "peer",
            Role::Orderer => "orderer",
            Role::Client => "client",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub common_name: String,
    pub org_id: String,
    pub role: Role,
}

/// An issued certificate. `signature` is the issuer's signature over the
/// canonical encoding of all preceding fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub serial: u64,
    pub subject: Subject,
    pub public_key: Vec<u8>,
    pub issuer_id: String,
    pub signature: Vec<u8>,
}

impl Certificate {
    /// The bytes the issuer signs.
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        codec::put_u64(&mut out, self.serial);
        codec::put_str(&mut out, &self.subject.common_name);
        codec::put_str(&mut out, &self.subject.org_id);
        codec::put_tag(&mut out, self.subject.role.tag());
        codec::put_bytes(&mut out, &self.public_key);
        codec::put_str(&mut out, &self.issuer_id);
        out
    }

    /// Policy-language leaf token for this certificate: `OrgID.role`.
    pub fn principal(&self) -> String {
        format!("{}.{}", self.subject.org_id, self.subject.role)
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Certificate, DecodeError> {
        let serial = d.u64()?;
        let common_name = d.string()?;
        let org_id = d.string()?;
        let role_tag = d.tag()?;
        let role = Role::from_tag(role_tag).ok_or(DecodeError::BadTag {
            offset: d.offset(),
            tag: role_tag,
        })?;
        let public_key = d.bytes()?;
        let issuer_id = d.string()?;
        let signature = d.bytes()?;
        Ok(Certificate {
            serial,
            subject: Subject {
                common_name,
                org_id,
                role,
            },
            public_key,
            issuer_id,
            signature,
        })
    }
}

impl Encode for Certificate {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signing_payload());
        codec::put_bytes(out, &self.signature);
    }
}

/// A certificate plus the matching private key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub certificate: Certificate,
    pub private_key: Vec<u8>,
}

impl Identity {
    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        default_scheme().sign(&self.private_key, message)
    }

    pub fn principal(&self) -> String {
        self.certificate.principal()
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Identity, DecodeError> {
        let certificate = Certificate::decode(d)?;
        let private_key = d.bytes()?;
        Ok(Identity {
            certificate,
            private_key,
        })
    }
}

impl Encode for Identity {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.certificate.encode_into(out);
        codec::put_bytes(out, &self.private_key);
    }
}

/// Verifies a message signature against a certificate's public key.
pub fn verify(cert: &Certificate, message: &[u8], signature: &[u8]) -> bool {
    default_scheme().verify(&cert.public_key, message, signature)
}

/// A revocation entry: (issuing CA, serial).
pub type CrlEntry = (String, u64);

/// Certificate validity: the signature must verify under a trust root whose
/// id matches the issuer, and the serial must not be revoked. Malformed
/// input yields `false`, never an error.
pub fn verify_certificate(
    cert: &Certificate,
    trust_roots: &BTreeMap<String, Certificate>,
    crl: &BTreeSet<CrlEntry>,
) -> bool {
    if crl.contains(&(cert.issuer_id.clone(), cert.serial)) {
        return false;
    }
    let Some(root) = trust_roots.get(&cert.issuer_id) else {
        return false;
    };
    default_scheme().verify(&root.public_key, &cert.signing_payload(), &cert.signature)
}

// ---------------------------------------------------------------------------
// Certificate authority
// ---------------------------------------------------------------------------

/// Deterministic key-seed stream: each CA derives all key material from its
/// own stream so enrollment order is the only thing that matters.
#[derive(Debug, Clone)]
pub struct KeyStream {
    state: [u8; 32],
    counter: u64,
}

impl KeyStream {
    pub fn new(material: &[u8]) -> KeyStream {
        KeyStream {
            state: Hash256::of(material).0,
            counter: 0,
        }
    }

    pub fn next_seed(&mut self) -> [u8; KEY_SEED_LEN] {
        let mut buf = Vec::with_capacity(40);
        buf.extend_from_slice(&self.state);
        codec::put_u64(&mut buf, self.counter);
        self.counter += 1;
        Hash256::of(&buf).0
    }
}

/// Issues certificates for one organization. The root certificate is
/// self-signed with serial 0; enrollments start at serial 1.
pub struct CertificateAuthority {
    pub ca_id: String,
    pub org_id: String,
    root: Identity,
    issued: Vec<Certificate>,
    revoked: BTreeSet<u64>,
    next_serial: u64,
    keys: KeyStream,
}

impl CertificateAuthority {
    pub fn new(ca_id: &str, org_id: &str, seed_material: &[u8]) -> CertificateAuthority {
        let mut keys = KeyStream::new(seed_material);
        let scheme = default_scheme();
        let (sk, pk) = scheme.keypair(&keys.next_seed());
        let mut root_cert = Certificate {
            serial: 0,
            subject: Subject {
                common_name: ca_id.to_string(),
                org_id: org_id.to_string(),
                role: Role::Admin,
            },
            public_key: pk,
            issuer_id: ca_id.to_string(),
            signature: Vec::new(),
        };
        root_cert.signature = scheme.sign(&sk, &root_cert.signing_payload());
        CertificateAuthority {
            ca_id: ca_id.to_string(),
            org_id: org_id.to_string(),
            root: Identity {
                certificate: root_cert,
                private_key: sk,
            },
            issued: Vec::new(),
            revoked: BTreeSet::new(),
            next_serial: 1,
            keys,
        }
    }

    /// The self-signed root certificate (the org's trust anchor).
    pub fn root_certificate(&self) -> &Certificate {
        &self.root.certificate
    }

    pub fn issued(&self) -> &[Certificate] {
        &self.issued
    }

    pub fn revoked(&self) -> &BTreeSet<u64> {
        &self.revoked
    }

    /// Enrolls a principal: generates a keypair, issues the next serial.
    /// Common names must be unique per CA so policy principals stay
    /// unambiguous.
    pub fn enroll(&mut self, common_name: &str, role: Role) -> Result<Identity, IdentityError> {
        if common_name.is_empty() {
            return Err(IdentityError::EmptyName);
        }
        if self
            .issued
            .iter()
            .any(|c| c.subject.common_name == common_name)
        {
            return Err(IdentityError::DuplicateName(common_name.to_string()));
        }
        let scheme = default_scheme();
        let (sk, pk) = scheme.keypair(&self.keys.next_seed());
        let mut cert = Certificate {
            serial: self.next_serial,
            subject: Subject {
                common_name: common_name.to_string(),
                org_id: self.org_id.clone(),
                role,
            },
            public_key: pk,
            issuer_id: self.ca_id.clone(),
            signature: Vec::new(),
        };
        cert.signature = self.root.sign(&cert.signing_payload());
        self.next_serial += 1;
        self.issued.push(cert.clone());
        Ok(Identity {
            certificate: cert,
            private_key: sk,
        })
    }

    /// Adds a serial to the revocation set. Revoking twice is a no-op;
    /// revoking a serial this CA never issued is an error.
    pub fn revoke(&mut self, serial: u64) -> Result<&BTreeSet<u64>, IdentityError> {
        if !self.issued.iter().any(|c| c.serial == serial) {
            return Err(IdentityError::UnknownSerial(serial));
        }
        self.revoked.insert(serial);
        Ok(&self.revoked)
    }

    /// CRL entries in the exported `(ca_id, serial)` form.
    pub fn crl(&self) -> BTreeSet<CrlEntry> {
        self.revoked
            .iter()
            .map(|s| (self.ca_id.clone(), *s))
            .collect()
    }

    /// Newline-separated `ca_id:serial` export.
    pub fn export_crl(&self) -> String {
        let mut out = String::new();
        for serial in &self.revoked {
            out.push_str(&format!("{}:{}\n", self.ca_id, serial));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Wallet
// ---------------------------------------------------------------------------

/// Labelled identity store. Persisted as one directory per wallet with one
/// canonically encoded file per identity, file name = label.
#[derive(Debug, Clone, Default)]
pub struct Wallet {
    entries: BTreeMap<String, Identity>,
}

impl Wallet {
    pub fn new() -> Wallet {
        Wallet::default()
    }

    pub fn put(&mut self, label: &str, identity: Identity) -> Result<(), IdentityError> {
        if self.entries.contains_key(label) {
            return Err(IdentityError::DuplicateLabel(label.to_string()));
        }
        self.entries.insert(label.to_string(), identity);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&Identity> {
        self.entries.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn save(&self, vfs: &mut dyn Vfs, dir: &str) {
        for (label, identity) in &self.entries {
            vfs.write(&format!("{dir}/{label}"), &identity.encode());
        }
    }

    pub fn load(vfs: &dyn Vfs, dir: &str) -> Result<Wallet, IdentityError> {
        let prefix = format!("{dir}/");
        let mut entries = BTreeMap::new();
        for path in vfs.list(&prefix) {
            let label = path[prefix.len()..].to_string();
            if label.contains('/') {
                continue; // nested directory, not a wallet entry
            }
            let bytes = vfs.read(&path).unwrap_or_default();
            let identity = codec::decode_all(&bytes, Identity::decode)?;
            entries.insert(label, identity);
        }
        Ok(Wallet { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfs::MemVfs;

    fn test_ca() -> CertificateAuthority {
        CertificateAuthority::new("CA1", "R1", b"seed-material")
    }

    #[test]
    fn enroll_propagates_fields_and_serials() {
        let mut ca = test_ca();
        let id = ca.enroll("P1", Role::Peer).unwrap();
        assert_eq!(id.certificate.serial, 1);
        assert_eq!(id.certificate.subject.org_id, "R1");
        assert_eq!(id.certificate.subject.role, Role::Peer);
        assert_eq!(id.certificate.issuer_id, "CA1");
        assert_eq!(id.principal(), "R1.peer");
        let id2 = ca.enroll("P2", Role::Peer).unwrap();
        assert_eq!(id2.certificate.serial, 2);
    }

    #[test]
    fn duplicate_common_name_rejected() {
        let mut ca = test_ca();
        ca.enroll("P1", Role::Peer).unwrap();
        assert_eq!(
            ca.enroll("P1", Role::Client),
            Err(IdentityError::DuplicateName("P1".into()))
        );
    }

    #[test]
    fn sign_verify_round_trip() {
        let mut ca = test_ca();
        let id = ca.enroll("A1", Role::Client).unwrap();
        let sig = id.sign(b"hello");
        assert!(verify(&id.certificate, b"hello", &sig));
        assert!(!verify(&id.certificate, b"hellO", &sig));
        // empty message
        let sig = id.sign(b"");
        assert!(verify(&id.certificate, b"", &sig));
        // another identity's certificate does not verify
        let other = ca.enroll("A2", Role::Client).unwrap();
        assert!(!verify(&other.certificate, b"", &sig));
    }

    #[test]
    fn signing_is_deterministic() {
        let mut ca = test_ca();
        let id = ca.enroll("A1", Role::Client).unwrap();
        assert_eq!(id.sign(b"msg"), id.sign(b"msg"));
    }

    /// RFC 8032 section 7.1, first Ed25519 test vector.
    #[test]
    fn ed25519_known_answer() {
        let seed: [u8; 32] =
            hex::decode("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60")
                .unwrap()
                .try_into()
                .unwrap();
        let (sk, pk) = Ed25519.keypair(&seed);
        assert_eq!(
            hex::encode(&pk),
            "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
        );
        let sig = Ed25519.sign(&sk, b"");
        assert_eq!(
            hex::encode(&sig),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
        );
        assert!(Ed25519.verify(&pk, b"", &sig));
    }

    #[test]
    fn verify_certificate_trust_and_revocation() {
        let mut ca = test_ca();
        let mut other_ca = CertificateAuthority::new("CA2", "R2", b"other-material");
        let id = ca.enroll("P1", Role::Peer).unwrap();

        let mut roots = BTreeMap::new();
        roots.insert("CA1".to_string(), ca.root_certificate().clone());
        roots.insert("CA2".to_string(), other_ca.root_certificate().clone());
        let empty_crl = BTreeSet::new();

        assert!(verify_certificate(&id.certificate, &roots, &empty_crl));

        // tampered signature byte
        let mut bad = id.certificate.clone();
        bad.signature[0] ^= 0x01;
        assert!(!verify_certificate(&bad, &roots, &empty_crl));

        // only the wrong CA trusted
        let mut wrong_roots = BTreeMap::new();
        wrong_roots.insert("CA2".to_string(), other_ca.root_certificate().clone());
        assert!(!verify_certificate(&id.certificate, &wrong_roots, &empty_crl));

        // revocation
        ca.revoke(1).unwrap();
        assert!(!verify_certificate(&id.certificate, &roots, &ca.crl()));
        // idempotent revoke, unknown serial errors
        ca.revoke(1).unwrap();
        assert_eq!(ca.revoke(99), Err(IdentityError::UnknownSerial(99)));
        assert_eq!(other_ca.export_crl(), "");
        other_ca.enroll("X", Role::Client).unwrap();
        other_ca.revoke(1).unwrap();
        assert_eq!(other_ca.export_crl(), "CA2:1\n");
    }

    #[test]
    fn enrolled_identity_fails_under_other_ca_root() {
        let mut ca1 = test_ca();
        let ca2 = CertificateAuthority::new("CA2", "R2", b"other");
        let id = ca1.enroll("P1", Role::Peer).unwrap();
        // forge: claim issuance by CA2
        let mut forged = id.certificate.clone();
        forged.issuer_id = "CA2".to_string();
        let mut roots = BTreeMap::new();
        roots.insert("CA2".to_string(), ca2.root_certificate().clone());
        assert!(!verify_certificate(&forged, &roots, &BTreeSet::new()));
    }

    #[test]
    fn wallet_round_trips_byte_identical() {
        let mut ca = test_ca();
        let mut wallet = Wallet::new();
        wallet.put("admin", ca.enroll("Admin", Role::Admin).unwrap()).unwrap();
        wallet.put("A1", ca.enroll("A1", Role::Client).unwrap()).unwrap();
        assert!(wallet.put("A1", ca.enroll("A1b", Role::Client).unwrap()).is_err());

        let mut vfs = MemVfs::new();
        wallet.save(&mut vfs, "wallets/R1");
        let first: Vec<_> = vfs
            .list("wallets/R1/")
            .into_iter()
            .map(|p| (p.clone(), vfs.read(&p).unwrap()))
            .collect();

        let loaded = Wallet::load(&vfs, "wallets/R1").unwrap();
        assert_eq!(loaded.get("A1"), wallet.get("A1"));

        let mut vfs2 = MemVfs::new();
        loaded.save(&mut vfs2, "wallets/R1");
        let second: Vec<_> = vfs2
            .list("wallets/R1/")
            .into_iter()
            .map(|p| (p.clone(), vfs2.read(&p).unwrap()))
            .collect();
        assert_eq!(first, second);
    }

    /// Single-bit mutations of message, signature, or public key must all
    /// fail verification.
    #[test]
    fn signature_mutation_fuzz() {
        let mut ca = test_ca();
        let id = ca.enroll("F", Role::Client).unwrap();
        let msg = b"the quick brown fox".to_vec();
        let sig = id.sign(&msg);
        let pk = id.certificate.public_key.clone();
        let mut checked = 0usize;
        let mut state = 0x9e3779b97f4a7c15u64; // deterministic pick of bit positions
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        while checked < 1200 {
            let which = next() % 3;
            match which {
                0 => {
                    let mut m = msg.clone();
                    let bit = (next() as usize) % (m.len() * 8);
                    m[bit / 8] ^= 1 << (bit % 8);
                    assert!(!default_scheme().verify(&pk, &m, &sig));
                }
                1 => {
                    let mut s = sig.clone();
                    let bit = (next() as usize) % (s.len() * 8);
                    s[bit / 8] ^= 1 << (bit % 8);
                    assert!(!default_scheme().verify(&pk, &msg, &s));
                }
                _ => {
                    let mut k = pk.clone();
                    let bit = (next() as usize) % (k.len() * 8);
                    k[bit / 8] ^= 1 << (bit % 8);
                    assert!(!default_scheme().verify(&k, &msg, &sig));
                }
            }
            checked += 1;
        }
    }
}
