//! Desk-scale permissioned consortium blockchain: identity-based membership,
//! endorsement-policy consensus, a Raft-backed ordering service, channel-scoped
//! hash-chained ledgers, and the full client transaction pipeline, all hosted
//! on a deterministic discrete-event network simulator with fault injection.
//!
//! The crate is organized around the lifecycle of a transaction:
//!
//! * [`identity`] — certificate authorities, enrollment, signing, wallets.
//! * [`policy`] — the endorsement-policy expression language.
//! * [`codec`] — the canonical binary encoding everything is hashed over.
//! * [`ledger`] — hash-chained block store and versioned world state.
//! * [`chaincode`] — deterministic contract runtime with read/write-set capture.
//! * [`validation`] — commit-time transaction validation rules.
//! * [`peer`] — peer roles: endorser, committer, anchor, leader, gateway.
//! * [`ordering`] — Raft ordering cluster and deterministic block cutting.
//! * [`channel`] — network/channel configuration and artifact generation.
//! * [`gateway`] — client sessions driving the submission pipeline.
//! * [`sim`] — the discrete-event simulator, fault injector and scenarios.

pub mod chaincode;
pub mod channel;
pub mod codec;
pub mod gateway;
pub mod identity;
pub mod ledger;
pub mod ordering;
pub mod peer;
pub mod policy;
pub mod sim;
pub mod text;
pub mod validation;
pub mod vfs;
