//! Deterministic smart-contract runtime with read/write-set capture, the
//! chaincode lifecycle (package, install, approve, commit, init), and the
//! sample asset-transfer contract.
//!
//! Contracts run in-process against a read-only snapshot of the world state.
//! Every key they touch is recorded: reads carry the version observed (or
//! absence), writes carry the new value or a delete marker. The recorded
//! read versions are what makes the commit-time staleness check possible.

use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use crate::identity::{self, Certificate, Identity};
use crate::ledger::state::{StateEntry, Version, WorldState};
use crate::policy::PolicyExpr;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

// ---------------------------------------------------------------------------
// Read/write sets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadRecord {
    pub key: String,
    /// Version observed during simulation; `None` for an absent key.
    pub version: Option<Version>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WriteValue {
    Put(Vec<u8>),
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteRecord {
    pub key: String,
    pub value: WriteValue,
}

/// Keys are unique within reads and within writes, ordered by first access.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RwSet {
    pub reads: Vec<ReadRecord>,
    pub writes: Vec<WriteRecord>,
}

impl Encode for RwSet {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_count(out, self.reads.len());
        for r in &self.reads {
            codec::put_str(out, &r.key);
            match r.version {
                None => codec::put_tag(out, 0),
                Some(v) => {
                    codec::put_tag(out, 1);
                    v.encode_into(out);
                }
            }
        }
        codec::put_count(out, self.writes.len());
        for w in &self.writes {
            codec::put_str(out, &w.key);
            match &w.value {
                WriteValue::Delete => codec::put_tag(out, 0),
                WriteValue::Put(bytes) => {
                    codec::put_tag(out, 1);
                    codec::put_bytes(out, bytes);
                }
            }
        }
    }
}

impl RwSet {
    pub fn decode(d: &mut Decoder<'_>) -> Result<RwSet, DecodeError> {
        let reads = d.list(|d| {
            let key = d.string()?;
            let version = d.option(Version::decode)?;
            Ok(ReadRecord { key, version })
        })?;
        let writes = d.list(|d| {
            let key = d.string()?;
            let at = d.offset();
            let value = match d.tag()? {
                0 => WriteValue::Delete,
                1 => WriteValue::Put(d.bytes()?),
                tag => return Err(DecodeError::BadTag { offset: at, tag }),
            };
            Ok(WriteRecord { key, value })
        })?;
        Ok(RwSet { reads, writes })
    }
}

// ---------------------------------------------------------------------------
// Responses and invocation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaincodeResponse {
    pub status: ResponseStatus,
    pub payload: Vec<u8>,
    pub rwset: RwSet,
}

impl ChaincodeResponse {
    pub fn hash(&self) -> Hash256 {
        self.digest()
    }
}

impl Encode for ChaincodeResponse {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_tag(
            out,
            match self.status {
                ResponseStatus::Ok => 0,
                ResponseStatus::Error => 1,
            },
        );
        codec::put_bytes(out, &self.payload);
        self.rwset.encode_into(out);
    }
}

/// Read-only world-state snapshot handed to contracts.
pub struct StateView<'a> {
    state: &'a WorldState,
}

impl<'a> StateView<'a> {
    pub fn new(state: &'a WorldState) -> StateView<'a> {
        StateView { state }
    }
}

/// Execution context capturing every state access of one invocation.
pub struct TxContext<'a> {
    view: StateView<'a>,
    reads: Vec<ReadRecord>,
    writes: Vec<WriteRecord>,
}

impl<'a> TxContext<'a> {
    fn new(view: StateView<'a>) -> TxContext<'a> {
        TxContext {
            view,
            reads: Vec::new(),
            writes: Vec::new(),
        }
    }

    fn record_read(&mut self, key: &str, version: Option<Version>) {
        if !self.reads.iter().any(|r| r.key == key) {
            self.reads.push(ReadRecord {
                key: key.to_string(),
                version,
            });
        }
    }

    fn record_write(&mut self, key: &str, value: WriteValue) {
        if let Some(existing) = self.writes.iter_mut().find(|w| w.key == key) {
            existing.value = value; // last write wins, position keeps first access
        } else {
            self.writes.push(WriteRecord {
                key: key.to_string(),
                value,
            });
        }
    }

    /// Reads the committed value. Reads always observe the snapshot, never
    /// the invocation's own buffered writes.
    pub fn get_state(&mut self, key: &str) -> Option<Vec<u8>> {
        let entry = self.view.state.get(key);
        self.record_read(key, entry.map(|e| e.version));
        entry.map(|e| e.value.clone())
    }

    pub fn put_state(&mut self, key: &str, value: Vec<u8>) {
        self.record_write(key, WriteValue::Put(value));
    }

    pub fn delete_state(&mut self, key: &str) {
        self.record_write(key, WriteValue::Delete);
    }

    /// Committed entries with `start <= key < end`; each returned key is
    /// recorded as a read.
    pub fn get_range(&mut self, start: &str, end: &str) -> Vec<StateEntry> {
        let entries: Vec<StateEntry> = self
            .view
            .state
            .range(start, end)
            .unwrap_or_default()
            .into_iter()
            .cloned()
            .collect();
        for e in &entries {
            self.record_read(&e.key, Some(e.version));
        }
        entries
    }
}

/// Failure raised by contract logic; becomes an ERROR response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractError(pub String);

impl fmt::Display for ContractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type ContractResult = Result<Vec<u8>, ContractError>;

/// A deterministic contract implementation.
pub trait Chaincode: Send + Sync {
    /// Exported function names, in a fixed order (part of the package hash).
    fn functions(&self) -> Vec<&'static str>;
    fn call(&self, ctx: &mut TxContext<'_>, fn_name: &str, args: &[String]) -> ContractResult;
}

/// Simulates one invocation against a snapshot. The snapshot is never
/// mutated; all effects are captured in the returned read/write set.
/// Unknown functions and contract failures yield ERROR responses with
/// empty write sets.
pub fn invoke(
    code: &dyn Chaincode,
    fn_name: &str,
    args: &[String],
    state: &WorldState,
) -> ChaincodeResponse {
    let mut ctx = TxContext::new(StateView::new(state));
    if !code.functions().contains(&fn_name) {
        return ChaincodeResponse {
            status: ResponseStatus::Error,
            payload: format!("unknown function: {fn_name}").into_bytes(),
            rwset: RwSet::default(),
        };
    }
    match code.call(&mut ctx, fn_name, args) {
        Ok(payload) => ChaincodeResponse {
            status: ResponseStatus::Ok,
            payload,
            rwset: RwSet {
                reads: ctx.reads,
                writes: ctx.writes,
            },
        },
        Err(e) => ChaincodeResponse {
            status: ResponseStatus::Error,
            payload: e.0.into_bytes(),
            // failed invocations keep their reads but never write
            rwset: RwSet {
                reads: ctx.reads,
                writes: Vec::new(),
            },
        },
    }
}

// ---------------------------------------------------------------------------
// Lifecycle
// ---------------------------------------------------------------------------

/// Output of the packaging stage: the identity of a piece of chaincode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaincodePackage {
    pub name: String,
    pub version: String,
    /// The code manifest: implementation id plus exported functions.
    pub impl_id: String,
    pub functions: Vec<String>,
    pub hash: Hash256,
}

/// Hash of the canonical encoding of (name, version, manifest).
pub fn lifecycle_package(
    name: &str,
    version: &str,
    impl_id: &str,
    code: &dyn Chaincode,
) -> ChaincodePackage {
    let functions: Vec<String> = code.functions().iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    codec::put_str(&mut out, name);
    codec::put_str(&mut out, version);
    codec::put_str(&mut out, impl_id);
    functions.encode_into(&mut out);
    ChaincodePackage {
        name: name.to_string(),
        version: version.to_string(),
        impl_id: impl_id.to_string(),
        functions,
        hash: Hash256::of(&out),
    }
}

/// The channel-level agreement governing one chaincode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaincodeDefinition {
    pub name: String,
    pub version: String,
    pub endorsement_policy: PolicyExpr,
    pub package_hash: Hash256,
}

impl Encode for ChaincodeDefinition {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.name);
        codec::put_str(out, &self.version);
        codec::put_str(out, &self.endorsement_policy.to_string());
        self.package_hash.encode_into(out);
    }
}

impl ChaincodeDefinition {
    pub fn decode(d: &mut Decoder<'_>) -> Result<ChaincodeDefinition, DecodeError> {
        let name = d.string()?;
        let version = d.string()?;
        let policy_text = d.string()?;
        let endorsement_policy = crate::policy::parse(&policy_text)
            .map_err(|e| d.invalid(format!("bad policy text: {e}")))?;
        let package_hash = d.hash()?;
        Ok(ChaincodeDefinition {
            name,
            version,
            endorsement_policy,
            package_hash,
        })
    }
}

/// An organization's signed agreement to a definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approval {
    pub org_id: String,
    pub definition_name: String,
    pub definition_version: String,
    pub package_hash: Hash256,
    pub admin_cert: Certificate,
    pub signature: Vec<u8>,
}

impl Approval {
    fn signing_payload(
        org_id: &str,
        name: &str,
        version: &str,
        package_hash: &Hash256,
    ) -> Vec<u8> {
        let mut out = Vec::new();
        codec::put_str(&mut out, org_id);
        codec::put_str(&mut out, name);
        codec::put_str(&mut out, version);
        package_hash.encode_into(&mut out);
        out
    }

    /// The approval stage: the org admin signs (org, name, version, hash).
    pub fn sign(admin: &Identity, org_id: &str, package: &ChaincodePackage) -> Approval {
        let payload =
            Approval::signing_payload(org_id, &package.name, &package.version, &package.hash);
        Approval {
            org_id: org_id.to_string(),
            definition_name: package.name.clone(),
            definition_version: package.version.clone(),
            package_hash: package.hash,
            admin_cert: admin.certificate.clone(),
            signature: admin.sign(&payload),
        }
    }

    pub fn verify(&self) -> bool {
        let payload = Approval::signing_payload(
            &self.org_id,
            &self.definition_name,
            &self.definition_version,
            &self.package_hash,
        );
        self.admin_cert.subject.org_id == self.org_id
            && self.admin_cert.subject.role == identity::Role::Admin
            && identity::verify(&self.admin_cert, &payload, &self.signature)
    }
}

impl Encode for Approval {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.org_id);
        codec::put_str(out, &self.definition_name);
        codec::put_str(out, &self.definition_version);
        self.package_hash.encode_into(out);
        self.admin_cert.encode_into(out);
        codec::put_bytes(out, &self.signature);
    }
}

impl Approval {
    pub fn decode(d: &mut Decoder<'_>) -> Result<Approval, DecodeError> {
        Ok(Approval {
            org_id: d.string()?,
            definition_name: d.string()?,
            definition_version: d.string()?,
            package_hash: d.hash()?,
            admin_cert: Certificate::decode(d)?,
            signature: d.bytes()?,
        })
    }
}

/// Why a lifecycle commit was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LifecycleError {
    #[error("approvals satisfy only {got} of {required} required orgs")]
    InsufficientApprovals { got: usize, required: usize },
    #[error("approvals reference different package hashes")]
    HashMismatch,
    #[error("approval by {0} has a bad signature")]
    BadApproval(String),
}

/// Checks a commit request: approvals must verify, agree on the package
/// hash, match the definition, and collectively satisfy `lifecycle_policy`
/// (by default a strict majority of member orgs, expressed over
/// `org.admin` principals).
pub fn check_commit(
    definition: &ChaincodeDefinition,
    approvals: &[Approval],
    lifecycle_policy: &PolicyExpr,
    member_count: usize,
) -> Result<(), LifecycleError> {
    let mut signers = std::collections::BTreeSet::new();
    for a in approvals {
        if !a.verify() {
            return Err(LifecycleError::BadApproval(a.org_id.clone()));
        }
        if a.package_hash != definition.package_hash
            || a.definition_name != definition.name
            || a.definition_version != definition.version
        {
            return Err(LifecycleError::HashMismatch);
        }
        signers.insert(a.admin_cert.principal());
    }
    if !lifecycle_policy.evaluate(&signers) {
        return Err(LifecycleError::InsufficientApprovals {
            got: signers.len(),
            required: member_count / 2 + 1,
        });
    }
    Ok(())
}

/// The default lifecycle policy for a channel: strict majority of member
/// org admins.
pub fn majority_admin_policy(member_orgs: &[String]) -> PolicyExpr {
    let admins: Vec<PolicyExpr> = member_orgs
        .iter()
        .map(|org| PolicyExpr::Principal(format!("{org}.admin")))
        .collect();
    let n = (member_orgs.len() / 2 + 1) as u32;
    if admins.len() == 1 {
        admins.into_iter().next().unwrap()
    } else {
        PolicyExpr::OutOf(n, admins)
    }
}

// ---------------------------------------------------------------------------
// Built-in contracts
// ---------------------------------------------------------------------------

/// Looks up a built-in contract implementation by id.
pub fn builtin(impl_id: &str) -> Option<&'static dyn Chaincode> {
    match impl_id {
        "asset-transfer" => Some(&AssetContract),
        _ => None,
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct Asset {
    owner: String,
    value: u64,
}

fn asset_key(id: &str) -> String {
    format!("asset:{id}")
}

/// Sample asset-transfer contract. Assets live under `asset:<id>` with JSON
/// values `{"owner":...,"value":...}`.
pub struct AssetContract;

impl AssetContract {
    fn load(ctx: &mut TxContext<'_>, id: &str) -> Result<Asset, ContractError> {
        let raw = ctx
            .get_state(&asset_key(id))
            .ok_or_else(|| ContractError(format!("asset {id} does not exist")))?;
        serde_json::from_slice(&raw)
            .map_err(|_| ContractError(format!("asset {id} has a malformed record")))
    }

    fn store(ctx: &mut TxContext<'_>, id: &str, asset: &Asset) {
        let raw = serde_json::to_vec(asset).expect("asset serializes");
        ctx.put_state(&asset_key(id), raw);
    }
}

impl Chaincode for AssetContract {
    fn functions(&self) -> Vec<&'static str> {
        vec![
            "CreateAsset",
            "ReadAsset",
            "TransferAsset",
            "DeleteAsset",
            "ListAssets",
        ]
    }

    fn call(&self, ctx: &mut TxContext<'_>, fn_name: &str, args: &[String]) -> ContractResult {
        let arg = |i: usize| -> Result<&String, ContractError> {
            args.get(i)
                .ok_or_else(|| ContractError(format!("{fn_name}: missing argument {i}")))
        };
        match fn_name {
            "CreateAsset" => {
                let id = arg(0)?;
                let owner = arg(1)?.clone();
                let value: u64 = arg(2)?
                    .parse()
                    .map_err(|_| ContractError("value must be an integer".into()))?;
                if ctx.get_state(&asset_key(id)).is_some() {
                    return Err(ContractError(format!("asset {id} already exists")));
                }
                let asset = Asset { owner, value };
                AssetContract::store(ctx, id, &asset);
                Ok(serde_json::to_vec(&asset).unwrap())
            }
            "ReadAsset" => {
                let asset = AssetContract::load(ctx, arg(0)?)?;
                Ok(serde_json::to_vec(&asset).unwrap())
            }
            "TransferAsset" => {
                let id = arg(0)?;
                let new_owner = arg(1)?.clone();
                let mut asset = AssetContract::load(ctx, id)?;
                asset.owner = new_owner;
                AssetContract::store(ctx, id, &asset);
                Ok(serde_json::to_vec(&asset).unwrap())
            }
            "DeleteAsset" => {
                let id = arg(0)?;
                AssetContract::load(ctx, id)?; // must exist
                ctx.delete_state(&asset_key(id));
                Ok(Vec::new())
            }
            "ListAssets" => {
                let entries = ctx.get_range("asset:", "asset;"); // ';' follows ':' in ASCII
                let docs: Vec<serde_json::Value> = entries
                    .iter()
                    .filter_map(|e| serde_json::from_slice(&e.value).ok())
                    .collect();
                Ok(serde_json::to_vec(&docs).unwrap())
            }
            _ => Err(ContractError(format!("unknown function: {fn_name}"))),
        }
    }
}

// ---------------------------------------------------------------------------

/// The implementations a peer has installed, keyed by channel-level
/// chaincode name.
#[derive(Default)]
pub struct InstalledChaincodes {
    entries: BTreeMap<String, (ChaincodePackage, &'static dyn Chaincode)>,
}

impl InstalledChaincodes {
    pub fn install(&mut self, package: ChaincodePackage, code: &'static dyn Chaincode) {
        self.entries.insert(package.name.clone(), (package, code));
    }

    pub fn get(&self, name: &str) -> Option<&(ChaincodePackage, &'static dyn Chaincode)> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }
}

impl fmt::Debug for InstalledChaincodes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InstalledChaincodes")
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{CertificateAuthority, Role};
    use crate::ledger::state::BackendKind;

    fn strs(args: &[&str]) -> Vec<String> {
        args.iter().map(|s| s.to_string()).collect()
    }

    fn fresh_state() -> WorldState {
        WorldState::new(BackendKind::OrderedKv)
    }

    #[test]
    fn create_asset_records_reads_and_writes() {
        let state = fresh_state();
        let resp = invoke(&AssetContract, "CreateAsset", &strs(&["a1", "A", "10"]), &state);
        assert_eq!(resp.status, ResponseStatus::Ok);
        assert_eq!(
            resp.rwset.reads,
            vec![ReadRecord {
                key: "asset:a1".into(),
                version: None
            }]
        );
        assert_eq!(resp.rwset.writes.len(), 1);
        assert_eq!(resp.rwset.writes[0].key, "asset:a1");
        let WriteValue::Put(raw) = &resp.rwset.writes[0].value else {
            panic!("expected put");
        };
        assert_eq!(
            serde_json::from_slice::<Asset>(raw).unwrap(),
            Asset {
                owner: "A".into(),
                value: 10
            }
        );
    }

    #[test]
    fn read_asset_is_pure() {
        let mut state = fresh_state();
        state.put(
            "asset:a1",
            br#"{"owner":"A","value":10}"#.to_vec(),
            Version::new(1, 0),
        );
        let resp = invoke(&AssetContract, "ReadAsset", &strs(&["a1"]), &state);
        assert_eq!(resp.status, ResponseStatus::Ok);
        assert!(resp.rwset.writes.is_empty());
        assert_eq!(resp.payload, br#"{"owner":"A","value":10}"#.to_vec());
    }

    #[test]
    fn transfer_missing_asset_errors_with_empty_writes() {
        let state = fresh_state();
        let resp = invoke(&AssetContract, "TransferAsset", &strs(&["missing", "B"]), &state);
        assert_eq!(resp.status, ResponseStatus::Error);
        assert!(resp.rwset.writes.is_empty());
    }

    #[test]
    fn unknown_function_errors() {
        let state = fresh_state();
        let resp = invoke(&AssetContract, "Nope", &[], &state);
        assert_eq!(resp.status, ResponseStatus::Error);
        assert!(resp.rwset.writes.is_empty());
    }

    #[test]
    fn invocation_is_deterministic_and_isolated() {
        let mut state = fresh_state();
        state.put(
            "asset:a1",
            br#"{"owner":"A","value":10}"#.to_vec(),
            Version::new(1, 0),
        );
        let before = state.digest();
        let r1 = invoke(&AssetContract, "TransferAsset", &strs(&["a1", "B"]), &state);
        let r2 = invoke(&AssetContract, "TransferAsset", &strs(&["a1", "B"]), &state);
        assert_eq!(r1, r2);
        assert_eq!(r1.hash(), r2.hash());
        assert_eq!(state.digest(), before, "snapshot must never be mutated");
    }

    #[test]
    fn list_assets_scans_prefix() {
        let mut state = fresh_state();
        state.put("asset:a", br#"{"owner":"A","value":1}"#.to_vec(), Version::new(1, 0));
        state.put("asset:b", br#"{"owner":"B","value":2}"#.to_vec(), Version::new(1, 1));
        state.put("other:x", b"zzz".to_vec(), Version::new(1, 2));
        let resp = invoke(&AssetContract, "ListAssets", &[], &state);
        let docs: Vec<Asset> = serde_json::from_slice(&resp.payload).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(resp.rwset.reads.len(), 2);
    }

    #[test]
    fn transfer_preserves_asset_values() {
        // conservation: transfers change owners, never the asset multiset
        let mut state = fresh_state();
        for (i, (id, owner, value)) in [("a", "A", 5u64), ("b", "B", 7), ("c", "C", 9)]
            .iter()
            .enumerate()
        {
            let doc = serde_json::to_vec(&Asset {
                owner: owner.to_string(),
                value: *value,
            })
            .unwrap();
            state.put(&asset_key(id), doc, Version::new(1, i as u64));
        }
        let values_before: Vec<u64> = {
            let mut v: Vec<u64> = state
                .iter()
                .map(|e| serde_json::from_slice::<Asset>(&e.value).unwrap().value)
                .collect();
            v.sort();
            v
        };
        let mut seed = 5u64;
        for i in 0..50 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let id = ["a", "b", "c"][(seed % 3) as usize];
            let new_owner = format!("O{}", seed % 7);
            let resp = invoke(&AssetContract, "TransferAsset", &strs(&[id, &new_owner]), &state);
            assert_eq!(resp.status, ResponseStatus::Ok);
            for w in &resp.rwset.writes {
                match &w.value {
                    WriteValue::Put(raw) => state.put(&w.key, raw.clone(), Version::new(2, i)),
                    WriteValue::Delete => state.delete(&w.key),
                }
            }
        }
        let mut values_after: Vec<u64> = state
            .iter()
            .map(|e| serde_json::from_slice::<Asset>(&e.value).unwrap().value)
            .collect();
        values_after.sort();
        assert_eq!(values_before, values_after);
    }

    #[test]
    fn package_hash_is_deterministic_and_version_sensitive() {
        let p1 = lifecycle_package("S", "v1", "asset-transfer", &AssetContract);
        let p2 = lifecycle_package("S", "v1", "asset-transfer", &AssetContract);
        let p3 = lifecycle_package("S", "v2", "asset-transfer", &AssetContract);
        assert_eq!(p1.hash, p2.hash);
        assert_ne!(p1.hash, p3.hash);
    }

    #[test]
    fn commit_requires_majority_and_consistent_hashes() {
        let mut cas: Vec<CertificateAuthority> = ["R0", "R1", "R2"]
            .iter()
            .map(|org| CertificateAuthority::new(&format!("CA-{org}"), org, org.as_bytes()))
            .collect();
        let admins: Vec<Identity> = cas
            .iter_mut()
            .map(|ca| ca.enroll("admin", Role::Admin).unwrap())
            .collect();
        let package = lifecycle_package("S", "v1", "asset-transfer", &AssetContract);
        let definition = ChaincodeDefinition {
            name: "S".into(),
            version: "v1".into(),
            endorsement_policy: crate::policy::parse("AND(R1.peer,R2.peer)").unwrap(),
            package_hash: package.hash,
        };
        let orgs: Vec<String> = vec!["R0".into(), "R1".into(), "R2".into()];
        let policy = majority_admin_policy(&orgs);
        assert_eq!(policy.to_string(), "OutOf(2,R0.admin,R1.admin,R2.admin)");

        let a0 = Approval::sign(&admins[0], "R0", &package);
        let a1 = Approval::sign(&admins[1], "R1", &package);

        // two of three approvals: commit succeeds
        assert!(check_commit(&definition, &[a0.clone(), a1.clone()], &policy, 3).is_ok());
        // one approval: rejected
        assert!(matches!(
            check_commit(&definition, &[a0.clone()], &policy, 3),
            Err(LifecycleError::InsufficientApprovals { .. })
        ));
        // divergent package hashes: rejected
        let other = lifecycle_package("S", "v9", "asset-transfer", &AssetContract);
        let bad = Approval::sign(&admins[1], "R1", &other);
        assert_eq!(
            check_commit(&definition, &[a0.clone(), bad], &policy, 3),
            Err(LifecycleError::HashMismatch)
        );
        // tampered signature: rejected
        let mut forged = a1;
        forged.signature[0] ^= 1;
        assert_eq!(
            check_commit(&definition, &[a0, forged], &policy, 3),
            Err(LifecycleError::BadApproval("R1".into()))
        );
    }
}
