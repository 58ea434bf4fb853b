//! Canonical binary encoding and SHA-256 digests.
//!
//! Every structure that gets hashed, signed, or persisted goes through this
//! encoding so that identical values always produce identical bytes:
//!
//! * integers: 8-byte big-endian
//! * byte strings (and UTF-8 strings): 4-byte big-endian length, then bytes
//! * lists: 4-byte big-endian element count, then elements
//! * options: one tag byte (0 absent, 1 present), then the value
//! * enums: one discriminant byte, then the variant's fields
//! * struct fields in declared order
//!
//! The encoding is injective per type; decoding is strict and rejects
//! trailing bytes.

use sha2::{Digest as _, Sha256};
use std::fmt;
use thiserror::Error;

/// Length of a SHA-256 digest in bytes.
pub const DIGEST_LEN: usize = 32;

/// A SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hash256(pub [u8; DIGEST_LEN]);

impl Hash256 {
    /// The all-zero digest, used as the genesis previous-header hash.
    pub const ZERO: Hash256 = Hash256([0u8; DIGEST_LEN]);

    /// SHA-256 of the given bytes.
    pub fn of(bytes: &[u8]) -> Hash256 {
        let mut h = Sha256::new();
        h.update(bytes);
        Hash256(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Hash256> {
        let raw = hex::decode(s).ok()?;
        let arr: [u8; DIGEST_LEN] = raw.try_into().ok()?;
        Some(Hash256(arr))
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl serde::Serialize for Hash256 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for Hash256 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Hash256::from_hex(&s).ok_or_else(|| serde::de::Error::custom("bad hex digest"))
    }
}

/// Types with a canonical byte representation.
pub trait Encode {
    fn encode_into(&self, out: &mut Vec<u8>);

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    /// SHA-256 over the canonical encoding.
    fn digest(&self) -> Hash256 {
        Hash256::of(&self.encode())
    }
}

impl Encode for u64 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
}

impl Encode for str {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, self.as_bytes());
    }
}

impl Encode for String {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, self.as_bytes());
    }
}

impl Encode for Vec<u8> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, self);
    }
}

impl Encode for Hash256 {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_bytes(out, &self.0);
    }
}

impl<T: Encode> Encode for [T] {
    fn encode_into(&self, out: &mut Vec<u8>) {
        put_count(out, self.len());
        for item in self {
            item.encode_into(out);
        }
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.as_slice().encode_into(out);
    }
}

impl<T: Encode> Encode for Option<T> {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                v.encode_into(out);
            }
        }
    }
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    put_count(out, bytes.len());
    out.extend_from_slice(bytes);
}

pub fn put_str(out: &mut Vec<u8>, s: &str) {
    put_bytes(out, s.as_bytes());
}

/// 4-byte big-endian count prefix used for byte strings and lists.
pub fn put_count(out: &mut Vec<u8>, n: usize) {
    let n = u32::try_from(n).expect("encoded collection exceeds u32::MAX elements");
    out.extend_from_slice(&n.to_be_bytes());
}

pub fn put_tag(out: &mut Vec<u8>, tag: u8) {
    out.push(tag);
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("invalid utf-8 string at offset {0}")]
    BadUtf8(usize),
    #[error("unknown tag {tag} at offset {offset}")]
    BadTag { offset: usize, tag: u8 },
    #[error("expected {expected}-byte field, got {actual} at offset {offset}")]
    BadLength {
        offset: usize,
        expected: usize,
        actual: usize,
    },
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("malformed value at offset {offset}: {reason}")]
    Invalid { offset: usize, reason: String },
}

/// Strict cursor over canonically encoded bytes.
pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Decoder<'a> {
        Decoder { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().unwrap()))
    }

    pub fn count(&mut self) -> Result<usize, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().unwrap()) as usize)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, DecodeError> {
        let n = self.count()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        let at = self.pos;
        String::from_utf8(self.bytes()?).map_err(|_| DecodeError::BadUtf8(at))
    }

    pub fn tag(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn hash(&mut self) -> Result<Hash256, DecodeError> {
        let at = self.pos;
        let raw = self.bytes()?;
        let arr: [u8; DIGEST_LEN] = raw.try_into().map_err(|v: Vec<u8>| DecodeError::BadLength {
            offset: at,
            expected: DIGEST_LEN,
            actual: v.len(),
        })?;
        Ok(Hash256(arr))
    }

    pub fn list<T>(
        &mut self,
        mut f: impl FnMut(&mut Decoder<'a>) -> Result<T, DecodeError>,
    ) -> Result<Vec<T>, DecodeError> {
        let n = self.count()?;
        let mut out = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            out.push(f(self)?);
        }
        Ok(out)
    }

    pub fn option<T>(
        &mut self,
        f: impl FnOnce(&mut Decoder<'a>) -> Result<T, DecodeError>,
    ) -> Result<Option<T>, DecodeError> {
        let at = self.pos;
        match self.tag()? {
            0 => Ok(None),
            1 => Ok(Some(f(self)?)),
            tag => Err(DecodeError::BadTag { offset: at, tag }),
        }
    }

    pub fn invalid(&self, reason: impl Into<String>) -> DecodeError {
        DecodeError::Invalid {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    /// Ensures the whole input was consumed.
    pub fn finish(self) -> Result<(), DecodeError> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(DecodeError::Trailing(self.remaining()))
        }
    }
}

/// Decodes a complete value, rejecting trailing bytes.
pub fn decode_all<T>(
    bytes: &[u8],
    f: impl FnOnce(&mut Decoder<'_>) -> Result<T, DecodeError>,
) -> Result<T, DecodeError> {
    let mut d = Decoder::new(bytes);
    let v = f(&mut d)?;
    d.finish()?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_is_8_byte_big_endian() {
        assert_eq!(1u64.encode(), vec![0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(
            0x0102_0304_0506_0708u64.encode(),
            vec![1, 2, 3, 4, 5, 6, 7, 8]
        );
    }

    #[test]
    fn empty_list_is_count_only() {
        let empty: Vec<u64> = vec![];
        assert_eq!(empty.encode(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn string_is_length_prefixed() {
        assert_eq!("ab".encode(), vec![0, 0, 0, 2, b'a', b'b']);
    }

    #[test]
    fn option_tags() {
        assert_eq!(None::<u64>.encode(), vec![0]);
        assert_eq!(Some(1u64).encode(), vec![1, 0, 0, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn decode_round_trip() {
        let v = vec!["hello".to_string(), "".to_string(), "world".to_string()];
        let bytes = v.encode();
        let back = decode_all(&bytes, |d| d.list(|d| d.string())).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn decode_rejects_trailing() {
        let mut bytes = 7u64.encode();
        bytes.push(0);
        assert!(matches!(
            decode_all(&bytes, |d| d.u64()),
            Err(DecodeError::Trailing(1))
        ));
    }

    #[test]
    fn decode_rejects_truncation() {
        let bytes = "hello".encode();
        assert!(decode_all(&bytes[..6], |d| d.string()).is_err());
    }
}
