//! Decentralized domain name service built from three pieces: an asset
//! ledger that records who owns which name, a content-addressed store
//! holding the record files those names point at, and a caching DNS
//! resolver that stitches both into ordinary DNS answers.
//!
//! `domain` has the name/asset-path/record-file model, `ledger` the
//! simulated chain, `store` the object store and pinning client, `resolver`
//! the lookup engine, and `wire` the RFC 1035 codec plus the UDP server.
//! `node` ties them together behind one handle and `registrar` layers the
//! owner-facing registration workflows on top.

pub mod config;
pub mod domain;
pub mod ledger;
pub mod node;
pub mod registrar;
pub mod resolver;
pub mod rpc;
pub mod store;
pub mod wire;

pub use config::Config;
pub use domain::{
    AssetPath, Binding, ContentId, DnsRecord, DomainName, RecordFile, RecordType,
};
pub use ledger::{Address, Amount, KeyPair, Ledger, LedgerParams, Tx, TxBody};
pub use node::{Node, NodeError};
pub use registrar::RegistrarSession;
pub use resolver::{Resolver, ResolverConfig};
pub use rpc::RpcEnvelope;
pub use store::{compute_cid, LocalStore, PinningClient, PinningConfig};
