//! Versioned world state: the current value of every key, derivable at any
//! time by replaying the valid transactions in the chain.
//!
//! Two query backends exist, mirroring the LevelDB/CouchDB split: both give
//! identical ordered key-value semantics (get, put, delete, half-open range),
//! and only the document backend supports JSON field-equality queries.

use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Position of the transaction that last wrote a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Version {
    pub block: u64,
    pub tx: u64,
}

impl Version {
    pub fn new(block: u64, tx: u64) -> Version {
        Version { block, tx }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.block, self.tx)
    }
}

impl Encode for Version {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_u64(out, self.block);
        codec::put_u64(out, self.tx);
    }
}

impl Version {
    pub fn decode(d: &mut Decoder<'_>) -> Result<Version, DecodeError> {
        Ok(Version {
            block: d.u64()?,
            tx: d.u64()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    pub key: String,
    #[serde(with = "bytes_as_string")]
    pub value: Vec<u8>,
    pub version: Version,
}

mod bytes_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        match std::str::from_utf8(v) {
            Ok(text) => s.serialize_str(text),
            Err(_) => s.serialize_str(&hex::encode(v)),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        Ok(String::deserialize(d)?.into_bytes())
    }
}

impl Encode for StateEntry {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_str(out, &self.key);
        codec::put_bytes(out, &self.value);
        self.version.encode_into(out);
    }
}

/// Which query features the state database offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    OrderedKv,
    Document,
}

impl BackendKind {
    pub fn tag(self) -> u8 {
        match self {
            BackendKind::OrderedKv => 0,
            BackendKind::Document => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<BackendKind> {
        match tag {
            0 => Some(BackendKind::OrderedKv),
            1 => Some(BackendKind::Document),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<BackendKind> {
        match s {
            "ordered-kv" => Some(BackendKind::OrderedKv),
            "document" => Some(BackendKind::Document),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::OrderedKv => "ordered-kv",
            BackendKind::Document => "document",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("range start must not exceed end")]
    BadRange,
    #[error("JSON queries are not supported by the {0} backend")]
    UnsupportedBackend(BackendKind),
}

/// One field-equality conjunct of a JSON selector.
#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    pub conjuncts: Vec<(String, serde_json::Value)>,
}

impl Selector {
    /// Parses `owner=A,value=10`. Values parse as JSON when possible,
    /// falling back to plain strings.
    pub fn parse(s: &str) -> Option<Selector> {
        let mut conjuncts = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (field, raw) = part.split_once('=')?;
            let value = serde_json::from_str(raw.trim())
                .unwrap_or_else(|_| serde_json::Value::String(raw.trim().to_string()));
            conjuncts.push((field.trim().to_string(), value));
        }
        Some(Selector { conjuncts })
    }

    fn matches(&self, value: &[u8]) -> bool {
        let Ok(doc) = serde_json::from_slice::<serde_json::Value>(value) else {
            return false; // non-JSON values are skipped, not errors
        };
        let Some(obj) = doc.as_object() else {
            return false;
        };
        self.conjuncts
            .iter()
            .all(|(field, expect)| obj.get(field) == Some(expect))
    }
}

/// The key-value view of current object states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    backend: BackendKind,
    entries: BTreeMap<String, StateEntry>,
}

impl WorldState {
    pub fn new(backend: BackendKind) -> WorldState {
        WorldState {
            backend,
            entries: BTreeMap::new(),
        }
    }

    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&StateEntry> {
        self.entries.get(key)
    }

    pub fn version_of(&self, key: &str) -> Option<Version> {
        self.entries.get(key).map(|e| e.version)
    }

    pub fn put(&mut self, key: &str, value: Vec<u8>, version: Version) {
        self.entries.insert(
            key.to_string(),
            StateEntry {
                key: key.to_string(),
                value,
                version,
            },
        );
    }

    /// Deleting an absent key is a no-op.
    pub fn delete(&mut self, key: &str) {
        self.entries.remove(key);
    }

    /// Entries with `start <= key < end`, in key order.
    pub fn range(&self, start: &str, end: &str) -> Result<Vec<&StateEntry>, StateError> {
        if start > end {
            return Err(StateError::BadRange);
        }
        Ok(self
            .entries
            .range(start.to_string()..end.to_string())
            .map(|(_, e)| e)
            .collect())
    }

    /// Entries whose JSON value satisfies every conjunct, in key order.
    /// Only the document backend supports this.
    pub fn query(&self, selector: &Selector) -> Result<Vec<&StateEntry>, StateError> {
        if self.backend != BackendKind::Document {
            return Err(StateError::UnsupportedBackend(self.backend));
        }
        Ok(self
            .entries
            .values()
            .filter(|e| selector.matches(&e.value))
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateEntry> {
        self.entries.values()
    }

    /// Digest over the canonical encoding of all entries, key-ordered.
    pub fn digest(&self) -> Hash256 {
        let mut out = Vec::new();
        codec::put_count(&mut out, self.entries.len());
        for entry in self.entries.values() {
            entry.encode_into(&mut out);
        }
        Hash256::of(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(b: u64, t: u64) -> Version {
        Version::new(b, t)
    }

    #[test]
    fn put_get_delete() {
        let mut s = WorldState::new(BackendKind::OrderedKv);
        s.put("a", b"1".to_vec(), v(1, 0));
        assert_eq!(s.get("a").unwrap().value, b"1");
        assert_eq!(s.version_of("a"), Some(v(1, 0)));
        assert!(s.get("zz").is_none());
        s.delete("zz"); // absent: no-op
        s.delete("a");
        assert!(s.get("a").is_none());
    }

    #[test]
    fn range_is_half_open_lexicographic() {
        let mut s = WorldState::new(BackendKind::OrderedKv);
        for k in ["a", "b", "c"] {
            s.put(k, k.as_bytes().to_vec(), v(1, 0));
        }
        let got: Vec<&str> = s
            .range("a", "c")
            .unwrap()
            .iter()
            .map(|e| e.key.as_str())
            .collect();
        assert_eq!(got, vec!["a", "b"]);
        assert_eq!(s.range("c", "a"), Err(StateError::BadRange));
    }

    #[test]
    fn query_requires_document_backend() {
        let mut kv = WorldState::new(BackendKind::OrderedKv);
        kv.put("x", b"{}".to_vec(), v(1, 0));
        let sel = Selector::parse("owner=A").unwrap();
        assert_eq!(
            kv.query(&sel),
            Err(StateError::UnsupportedBackend(BackendKind::OrderedKv))
        );
    }

    #[test]
    fn query_field_equality() {
        let mut s = WorldState::new(BackendKind::Document);
        s.put("k1", br#"{"owner":"A","value":10}"#.to_vec(), v(1, 0));
        s.put("k2", br#"{"owner":"B","value":10}"#.to_vec(), v(1, 1));
        s.put("k3", b"not json".to_vec(), v(1, 2));
        let sel = Selector::parse("owner=A").unwrap();
        let got: Vec<&str> = s.query(&sel).unwrap().iter().map(|e| e.key.as_str()).collect();
        assert_eq!(got, vec!["k1"]);
        // numeric constants compare as JSON numbers
        let sel = Selector::parse("value=10").unwrap();
        let got: Vec<&str> = s.query(&sel).unwrap().iter().map(|e| e.key.as_str()).collect();
        assert_eq!(got, vec!["k1", "k2"]);
        // non-JSON value skipped silently
        let sel = Selector::parse("owner=C").unwrap();
        assert!(s.query(&sel).unwrap().is_empty());
    }

    #[test]
    fn query_matches_linear_scan_oracle() {
        let mut s = WorldState::new(BackendKind::Document);
        let owners = ["A", "B", "C"];
        let mut seed = 99u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for i in 0..100 {
            let owner = owners[(next() % 3) as usize];
            let value = next() % 5;
            let doc = format!(r#"{{"owner":"{owner}","value":{value}}}"#);
            s.put(&format!("k{i:03}"), doc.into_bytes(), v(1, i));
        }
        for owner in owners {
            let sel = Selector::parse(&format!("owner={owner}")).unwrap();
            let fast: Vec<&str> = s.query(&sel).unwrap().iter().map(|e| e.key.as_str()).collect();
            // independent linear scan with serde_json directly
            let slow: Vec<&str> = s
                .iter()
                .filter(|e| {
                    serde_json::from_slice::<serde_json::Value>(&e.value)
                        .ok()
                        .and_then(|d| d.get("owner").cloned())
                        == Some(serde_json::Value::String(owner.to_string()))
                })
                .map(|e| e.key.as_str())
                .collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn backends_agree_on_kv_operations() {
        let mut kv = WorldState::new(BackendKind::OrderedKv);
        let mut doc = WorldState::new(BackendKind::Document);
        let ops: Vec<(&str, &str)> = vec![("put", "b"), ("put", "a"), ("del", "b"), ("put", "c")];
        for (i, (op, key)) in ops.iter().enumerate() {
            for s in [&mut kv, &mut doc] {
                match *op {
                    "put" => s.put(key, key.as_bytes().to_vec(), v(1, i as u64)),
                    _ => s.delete(key),
                }
            }
        }
        let keys = |s: &WorldState| -> Vec<String> { s.iter().map(|e| e.key.clone()).collect() };
        assert_eq!(keys(&kv), keys(&doc));
        assert_eq!(
            kv.range("a", "zz").unwrap().len(),
            doc.range("a", "zz").unwrap().len()
        );
        // digest ignores backend kind: same data, same digest
        assert_eq!(kv.digest(), doc.digest());
    }
}
