//! The channel ledger: hash-chained block store plus versioned world state.
//!
//! Blocks store all transactions, valid and invalid; per-transaction
//! validation flags record why. Header linkage uses SHA-256: each header
//! carries the hash of the previous block's header and the hash of the
//! canonically encoded transaction list, so any byte of history is covered
//! by either a header hash, the transaction hash, or flag re-derivation
//! (see [`chain::verify_chain_bytes`]).

pub mod chain;
pub mod state;

pub use chain::{ChainReport, ChainStore};
pub use state::{BackendKind, Selector, StateEntry, Version, WorldState};

use crate::codec::{self, Decoder, DecodeError, Encode, Hash256};
use crate::peer::Transaction;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Commit-time verdict for one transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValidationCode {
    Valid,
    BadSignature,
    PolicyFailure,
    StaleRead,
    UnknownChaincode,
}

impl ValidationCode {
    pub fn tag(self) -> u8 {
        match self {
            ValidationCode::Valid => 0,
            ValidationCode::BadSignature => 1,
            ValidationCode::PolicyFailure => 2,
            ValidationCode::StaleRead => 3,
            ValidationCode::UnknownChaincode => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<ValidationCode> {
        match tag {
            0 => Some(ValidationCode::Valid),
            1 => Some(ValidationCode::BadSignature),
            2 => Some(ValidationCode::PolicyFailure),
            3 => Some(ValidationCode::StaleRead),
            4 => Some(ValidationCode::UnknownChaincode),
            _ => None,
        }
    }
}

impl fmt::Display for ValidationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationCode::Valid => "VALID",
            ValidationCode::BadSignature => "BAD_SIGNATURE",
            ValidationCode::PolicyFailure => "POLICY_FAILURE",
            ValidationCode::StaleRead => "STALE_READ",
            ValidationCode::UnknownChaincode => "UNKNOWN_CHAINCODE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockHeader {
    pub number: u64,
    pub previous_hash: Hash256,
    pub transactions_hash: Hash256,
}

impl BlockHeader {
    /// SHA-256 of the canonical header encoding; what the next block's
    /// `previous_hash` must equal.
    pub fn hash(&self) -> Hash256 {
        self.digest()
    }
}

impl Encode for BlockHeader {
    fn encode_into(&self, out: &mut Vec<u8>) {
        codec::put_u64(out, self.number);
        self.previous_hash.encode_into(out);
        self.transactions_hash.encode_into(out);
    }
}

impl BlockHeader {
    pub fn decode(d: &mut Decoder<'_>) -> Result<BlockHeader, DecodeError> {
        Ok(BlockHeader {
            number: d.u64()?,
            previous_hash: d.hash()?,
            transactions_hash: d.hash()?,
        })
    }
}

/// SHA-256 of the canonical encoding of the ordered transaction list.
pub fn transactions_hash(txs: &[Transaction]) -> Hash256 {
    let mut out = Vec::new();
    codec::put_count(&mut out, txs.len());
    for tx in txs {
        tx.encode_into(&mut out);
    }
    Hash256::of(&out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
    pub validation_flags: Vec<ValidationCode>,
}

impl Block {
    pub fn build(
        number: u64,
        previous_hash: Hash256,
        transactions: Vec<Transaction>,
        validation_flags: Vec<ValidationCode>,
    ) -> Block {
        assert_eq!(
            transactions.len(),
            validation_flags.len(),
            "one validation flag per transaction"
        );
        let transactions_hash = transactions_hash(&transactions);
        Block {
            header: BlockHeader {
                number,
                previous_hash,
                transactions_hash,
            },
            transactions,
            validation_flags,
        }
    }

    /// Same block content with the committer's validation flags.
    pub fn with_flags(&self, validation_flags: Vec<ValidationCode>) -> Block {
        assert_eq!(self.transactions.len(), validation_flags.len());
        Block {
            header: self.header.clone(),
            transactions: self.transactions.clone(),
            validation_flags,
        }
    }

    /// Structural integrity: flag count and transactions hash.
    pub fn check_integrity(&self) -> Result<(), String> {
        if self.validation_flags.len() != self.transactions.len() {
            return Err(format!(
                "block {}: {} flags for {} transactions",
                self.header.number,
                self.validation_flags.len(),
                self.transactions.len()
            ));
        }
        if self.header.transactions_hash != transactions_hash(&self.transactions) {
            return Err(format!(
                "block {}: transactions hash mismatch",
                self.header.number
            ));
        }
        Ok(())
    }

    pub fn decode(d: &mut Decoder<'_>) -> Result<Block, DecodeError> {
        let header = BlockHeader::decode(d)?;
        let transactions = d.list(Transaction::decode)?;
        let validation_flags = d.list(|d| {
            let at = d.offset();
            let tag = d.tag()?;
            ValidationCode::from_tag(tag).ok_or(DecodeError::BadTag { offset: at, tag })
        })?;
        Ok(Block {
            header,
            transactions,
            validation_flags,
        })
    }
}

impl Encode for Block {
    fn encode_into(&self, out: &mut Vec<u8>) {
        self.header.encode_into(out);
        codec::put_count(out, self.transactions.len());
        for tx in &self.transactions {
            tx.encode_into(out);
        }
        codec::put_count(out, self.validation_flags.len());
        for flag in &self.validation_flags {
            codec::put_tag(out, flag.tag());
        }
    }
}
