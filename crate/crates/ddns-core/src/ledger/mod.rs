//! Simulated blockchain asset ledger.
//!
//! Single-writer state machine: signed transactions enter a FIFO mempool
//! (validated immediately against a speculative state), blocks confirm them
//! in order under the size cap, and resolution reads only confirmed state.
//! No mining: block production is a timer in service mode or an explicit
//! call in tests. Fees are burned and tracked so conservation is checkable.

mod amount;
mod keys;
mod tx;

pub use amount::Amount;
pub use keys::{verify_signature, Address, KeyPair};
pub use tx::{Tx, TxBody, TYPICAL_TX_BYTES};

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{AssetPath, Binding};

/// Protocol parameters; defaults mirror the measured network figures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerParams {
    pub block_size_bytes: u64,
    pub block_interval_s: u64,
    pub creation_fee: Amount,
    pub modification_fee: Amount,
    /// Used only for capacity reporting.
    pub avg_tx_size_bytes: u64,
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self {
            block_size_bytes: 4 * 1024 * 1024,
            block_interval_s: 15,
            creation_fee: Amount::from_milli(100),
            modification_fee: Amount::from_milli(100),
            avg_tx_size_bytes: TYPICAL_TX_BYTES as u64,
        }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<(), LedgerError> {
        let positive = self.block_size_bytes > 0
            && self.block_interval_s > 0
            && self.creation_fee > Amount::ZERO
            && self.modification_fee > Amount::ZERO
            && self.avg_tx_size_bytes > 0;
        if positive {
            Ok(())
        } else {
            Err(LedgerError::ValidationFailure(
                "all ledger parameters must be strictly positive".into(),
            ))
        }
    }
}

/// Block capacity implied by the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Capacity {
    pub txs_per_block: u64,
    pub tps: f64,
}

impl Capacity {
    pub fn tps_floor(&self) -> u64 {
        self.tps as u64
    }
}

/// floor(block_size / avg_tx_size) transactions per block, divided by the
/// block interval.
pub fn capacity_tps(params: &LedgerParams) -> Capacity {
    let txs_per_block = params.block_size_bytes / params.avg_tx_size_bytes;
    Capacity {
        txs_per_block,
        tps: txs_per_block as f64 / params.block_interval_s as f64,
    }
}

/// One domain asset: ownership plus current binding. Quantity and
/// reissuability are fixed by the asset rules but recorded explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub path: AssetPath,
    pub owner: Address,
    pub binding: Binding,
    pub quantity: u32,
    pub reissuable: bool,
    pub created_at_height: u64,
}

/// A confirmed block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub timestamp: u64,
    pub txs: Vec<Tx>,
    pub total_bytes: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("asset {0} already exists and is non-reissuable")]
    DuplicateAsset(String),
    #[error("insufficient funds: need {needed}, have {available}")]
    InsufficientFunds { needed: Amount, available: Amount },
    #[error("{signer} does not own asset {path}")]
    NotOwner { path: String, signer: Address },
    #[error("unknown asset {0}")]
    UnknownAsset(String),
    #[error("validation failure: {0}")]
    ValidationFailure(String),
    #[error("invalid binding target: {0}")]
    InvalidCid(String),
    #[error("signature does not verify")]
    BadSignature,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("wrong fee: expected {expected}, got {got}")]
    WrongFee { expected: Amount, got: Amount },
    #[error("persistence failure: {0}")]
    Persistence(String),
}

/// Full materialized state. BTreeMaps keep serialization order stable, so
/// hashing the canonical JSON is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    pub height: u64,
    pub balances: BTreeMap<Address, Amount>,
    pub assets: BTreeMap<String, AssetRecord>,
    pub nonces: BTreeMap<Address, u64>,
    pub fees_burned: Amount,
}

impl LedgerState {
    fn with_genesis(genesis: &BTreeMap<Address, Amount>) -> Self {
        Self { balances: genesis.clone(), ..Self::default() }
    }

    /// Hex sha2-256 over the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn total_balance(&self) -> Amount {
        self.balances
            .values()
            .fold(Amount::ZERO, |acc, b| acc.saturating_add(*b))
    }

    fn required_fee(&self, body: &TxBody, params: &LedgerParams) -> Amount {
        match body {
            TxBody::CreateRoot { .. } | TxBody::CreateSub { .. } => params.creation_fee,
            TxBody::SetBinding { .. } => params.modification_fee,
            TxBody::Transfer { .. } => Amount::ZERO,
        }
    }

    /// All validation for a transaction, with no mutation. Ownership is
    /// checked before funds so an unauthorized signer is always reported
    /// as NotOwner.
    fn check_tx(&self, tx: &Tx, params: &LedgerParams) -> Result<(), LedgerError> {
        if !tx.verify_signature() {
            return Err(LedgerError::BadSignature);
        }
        let signer = tx.signer_address();
        let expected_nonce = self.nonces.get(&signer).copied().unwrap_or(0) + 1;
        if tx.nonce != expected_nonce {
            return Err(LedgerError::BadNonce { expected: expected_nonce, got: tx.nonce });
        }

        match &tx.body {
            TxBody::CreateRoot { path, .. } => {
                if !path.is_root() {
                    return Err(LedgerError::ValidationFailure(format!(
                        "{path} is not a root asset path"
                    )));
                }
                path.validate()
                    .map_err(|e| LedgerError::ValidationFailure(e.to_string()))?;
                if self.assets.contains_key(&path.render()) {
                    return Err(LedgerError::DuplicateAsset(path.render()));
                }
            }
            TxBody::CreateSub { parent, segment, .. } => {
                let record = self
                    .assets
                    .get(&parent.render())
                    .ok_or_else(|| LedgerError::UnknownAsset(parent.render()))?;
                if record.owner != signer {
                    return Err(LedgerError::NotOwner { path: parent.render(), signer });
                }
                let child = parent
                    .child(segment)
                    .map_err(|e| LedgerError::ValidationFailure(e.to_string()))?;
                if self.assets.contains_key(&child.render()) {
                    return Err(LedgerError::DuplicateAsset(child.render()));
                }
            }
            TxBody::SetBinding { path, binding } => {
                let record = self
                    .assets
                    .get(&path.render())
                    .ok_or_else(|| LedgerError::UnknownAsset(path.render()))?;
                if record.owner != signer {
                    return Err(LedgerError::NotOwner { path: path.render(), signer });
                }
                if matches!(binding, Binding::Initial) {
                    return Err(LedgerError::InvalidCid(
                        "cannot rebind to the initial sentinel".into(),
                    ));
                }
            }
            TxBody::Transfer { path, .. } => {
                let record = self
                    .assets
                    .get(&path.render())
                    .ok_or_else(|| LedgerError::UnknownAsset(path.render()))?;
                if record.owner != signer {
                    return Err(LedgerError::NotOwner { path: path.render(), signer });
                }
            }
        }

        let required = self.required_fee(&tx.body, params);
        if tx.fee != required {
            return Err(LedgerError::WrongFee { expected: required, got: tx.fee });
        }
        let available = self.balances.get(&signer).copied().unwrap_or(Amount::ZERO);
        if available < required {
            return Err(LedgerError::InsufficientFunds { needed: required, available });
        }
        Ok(())
    }

    /// Mutation half; must only run after `check_tx` passed on this state.
    fn apply_unchecked(&mut self, tx: &Tx) {
        let signer = tx.signer_address();
        *self.nonces.entry(signer.clone()).or_insert(0) += 1;
        if tx.fee > Amount::ZERO {
            let balance = self.balances.entry(signer.clone()).or_insert(Amount::ZERO);
            *balance = balance.checked_sub(tx.fee).expect("checked by check_tx");
            self.fees_burned = self.fees_burned.saturating_add(tx.fee);
        }
        match &tx.body {
            TxBody::CreateRoot { path, new_owner } => {
                self.assets.insert(
                    path.render(),
                    AssetRecord {
                        path: path.clone(),
                        owner: new_owner.clone(),
                        binding: Binding::Initial,
                        quantity: 1,
                        reissuable: false,
                        created_at_height: self.height + 1,
                    },
                );
            }
            TxBody::CreateSub { parent, segment, new_owner } => {
                let child = parent.child(segment).expect("checked by check_tx");
                self.assets.insert(
                    child.render(),
                    AssetRecord {
                        path: child,
                        owner: new_owner.clone(),
                        binding: Binding::Initial,
                        quantity: 1,
                        reissuable: false,
                        created_at_height: self.height + 1,
                    },
                );
            }
            TxBody::SetBinding { path, binding } => {
                let record = self.assets.get_mut(&path.render()).expect("checked");
                record.binding = binding.clone();
            }
            TxBody::Transfer { path, new_owner } => {
                let record = self.assets.get_mut(&path.render()).expect("checked");
                record.owner = new_owner.clone();
            }
        }
    }
}

/// First line of the chain log.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainHeader {
    format: String,
    version: u32,
    params: LedgerParams,
    genesis: BTreeMap<Address, Amount>,
}

const CHAIN_FORMAT: &str = "ddns-chain";
const CHAIN_VERSION: u32 = 1;

/// The ledger: confirmed state, speculative (mempool-applied) state, and
/// the FIFO mempool. Not internally synchronized; wrap in a mutex to share.
pub struct Ledger {
    params: LedgerParams,
    genesis: BTreeMap<Address, Amount>,
    confirmed: LedgerState,
    pending: LedgerState,
    mempool: VecDeque<Tx>,
    log_path: Option<PathBuf>,
}

impl Ledger {
    /// Fresh in-memory ledger.
    pub fn new(
        params: LedgerParams,
        genesis: BTreeMap<Address, Amount>,
    ) -> Result<Self, LedgerError> {
        params.validate()?;
        let confirmed = LedgerState::with_genesis(&genesis);
        Ok(Self {
            params,
            genesis,
            pending: confirmed.clone(),
            confirmed,
            mempool: VecDeque::new(),
            log_path: None,
        })
    }

    /// Opens a persistent ledger backed by an append-only block log. An
    /// existing log wins over the passed parameters (they describe the
    /// chain that is already on disk); a fresh one is created otherwise.
    pub fn open(
        params: LedgerParams,
        genesis: BTreeMap<Address, Amount>,
        log_path: &Path,
    ) -> Result<Self, LedgerError> {
        if log_path.exists() {
            let mut ledger = Self::replay(log_path)?;
            ledger.log_path = Some(log_path.to_path_buf());
            return Ok(ledger);
        }
        let mut ledger = Self::new(params, genesis)?;
        let header = ChainHeader {
            format: CHAIN_FORMAT.to_string(),
            version: CHAIN_VERSION,
            params: ledger.params.clone(),
            genesis: ledger.genesis.clone(),
        };
        let line = serde_json::to_string(&header).expect("header serializes");
        fs::write(log_path, format!("{line}\n"))
            .map_err(|e| LedgerError::Persistence(e.to_string()))?;
        ledger.log_path = Some(log_path.to_path_buf());
        Ok(ledger)
    }

    /// Rebuilds a ledger by replaying a block log from genesis. Every
    /// transaction is re-validated; the result is bit-identical state.
    pub fn replay(log_path: &Path) -> Result<Self, LedgerError> {
        let file =
            fs::File::open(log_path).map_err(|e| LedgerError::Persistence(e.to_string()))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| LedgerError::Persistence("empty chain log".into()))?
            .map_err(|e| LedgerError::Persistence(e.to_string()))?;
        let header: ChainHeader = serde_json::from_str(&header_line)
            .map_err(|e| LedgerError::Persistence(format!("bad chain header: {e}")))?;
        if header.format != CHAIN_FORMAT || header.version != CHAIN_VERSION {
            return Err(LedgerError::Persistence(format!(
                "unsupported chain log {}/{}",
                header.format, header.version
            )));
        }
        let mut ledger = Self::new(header.params, header.genesis)?;
        for line in lines {
            let line = line.map_err(|e| LedgerError::Persistence(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let block: Block = serde_json::from_str(&line)
                .map_err(|e| LedgerError::Persistence(format!("bad block line: {e}")))?;
            if block.height != ledger.confirmed.height + 1 {
                return Err(LedgerError::Persistence(format!(
                    "block height {} does not follow {}",
                    block.height, ledger.confirmed.height
                )));
            }
            for tx in &block.txs {
                ledger.confirmed.check_tx(tx, &ledger.params)?;
                ledger.confirmed.apply_unchecked(tx);
            }
            ledger.confirmed.height = block.height;
        }
        ledger.pending = ledger.confirmed.clone();
        Ok(ledger)
    }

    pub fn params(&self) -> &LedgerParams {
        &self.params
    }

    pub fn genesis(&self) -> &BTreeMap<Address, Amount> {
        &self.genesis
    }

    /// Validates against the speculative state and queues the transaction.
    /// Rejections (NotOwner, InsufficientFunds, …) surface here, before
    /// any block is produced.
    pub fn submit(&mut self, tx: Tx) -> Result<String, LedgerError> {
        self.pending.check_tx(&tx, &self.params)?;
        self.pending.apply_unchecked(&tx);
        let txid = tx.txid();
        self.mempool.push_back(tx);
        Ok(txid)
    }

    /// Next valid nonce for an address, counting queued transactions.
    pub fn next_nonce(&self, address: &Address) -> u64 {
        self.pending.nonces.get(address).copied().unwrap_or(0) + 1
    }

    /// Drains the mempool FIFO into a block, packing greedily until the
    /// next transaction would cross the size cap, and confirms the packed
    /// transactions atomically.
    pub fn produce_block(&mut self, timestamp: u64) -> Result<Block, LedgerError> {
        let mut txs = Vec::new();
        let mut total_bytes = 0u64;
        while let Some(front) = self.mempool.front() {
            let size = front.serialized_size() as u64;
            if total_bytes + size > self.params.block_size_bytes {
                break;
            }
            let tx = self.mempool.pop_front().expect("front exists");
            // Prefix-FIFO packing means these re-checks pass; a failure
            // would indicate a bug, so the tx is dropped loudly.
            if let Err(e) = self.confirmed.check_tx(&tx, &self.params) {
                log::warn!("dropping mempool tx {}: {e}", tx.txid());
                continue;
            }
            self.confirmed.apply_unchecked(&tx);
            total_bytes += size;
            txs.push(tx);
        }
        self.confirmed.height += 1;
        let block = Block { height: self.confirmed.height, timestamp, txs, total_bytes };

        // Speculative state = confirmed + whatever stayed queued.
        self.pending = self.confirmed.clone();
        for tx in &self.mempool {
            if self.pending.check_tx(tx, &self.params).is_ok() {
                self.pending.apply_unchecked(tx);
            }
        }

        if let Some(path) = &self.log_path {
            let line = serde_json::to_string(&block).expect("block serializes");
            let mut file = fs::OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| LedgerError::Persistence(e.to_string()))?;
            file.write_all(format!("{line}\n").as_bytes())
                .map_err(|e| LedgerError::Persistence(e.to_string()))?;
        }
        Ok(block)
    }

    /// Current confirmed binding; mempool updates are invisible here.
    pub fn get_binding(&self, path: &AssetPath) -> Result<Binding, LedgerError> {
        self.confirmed
            .assets
            .get(&path.render())
            .map(|r| r.binding.clone())
            .ok_or_else(|| LedgerError::UnknownAsset(path.render()))
    }

    pub fn asset(&self, path: &AssetPath) -> Option<&AssetRecord> {
        self.confirmed.assets.get(&path.render())
    }

    pub fn owner_of(&self, path: &AssetPath) -> Result<Address, LedgerError> {
        self.confirmed
            .assets
            .get(&path.render())
            .map(|r| r.owner.clone())
            .ok_or_else(|| LedgerError::UnknownAsset(path.render()))
    }

    pub fn balance(&self, address: &Address) -> Amount {
        self.confirmed.balances.get(address).copied().unwrap_or(Amount::ZERO)
    }

    pub fn height(&self) -> u64 {
        self.confirmed.height
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn fees_burned(&self) -> Amount {
        self.confirmed.fees_burned
    }

    /// Hex hash of the confirmed state.
    pub fn state_hash(&self) -> String {
        self.confirmed.hash()
    }

    pub fn confirmed_state(&self) -> &LedgerState {
        &self.confirmed
    }

    // Convenience builders: pick the right fee and nonce, sign, submit.

    pub fn create_root_asset(
        &mut self,
        path: &AssetPath,
        owner: &Address,
        signer: &KeyPair,
    ) -> Result<String, LedgerError> {
        let tx = Tx::sign(
            TxBody::CreateRoot { path: path.clone(), new_owner: owner.clone() },
            self.params.creation_fee,
            self.next_nonce(&signer.address()),
            signer,
        );
        self.submit(tx)
    }

    pub fn create_sub_asset(
        &mut self,
        parent: &AssetPath,
        segment: &str,
        new_owner: &Address,
        signer: &KeyPair,
    ) -> Result<String, LedgerError> {
        let tx = Tx::sign(
            TxBody::CreateSub {
                parent: parent.clone(),
                segment: segment.to_string(),
                new_owner: new_owner.clone(),
            },
            self.params.creation_fee,
            self.next_nonce(&signer.address()),
            signer,
        );
        self.submit(tx)
    }

    pub fn set_binding(
        &mut self,
        path: &AssetPath,
        binding: Binding,
        signer: &KeyPair,
    ) -> Result<String, LedgerError> {
        let tx = Tx::sign(
            TxBody::SetBinding { path: path.clone(), binding },
            self.params.modification_fee,
            self.next_nonce(&signer.address()),
            signer,
        );
        self.submit(tx)
    }

    pub fn transfer_ownership(
        &mut self,
        path: &AssetPath,
        new_owner: &Address,
        signer: &KeyPair,
    ) -> Result<String, LedgerError> {
        let tx = Tx::sign(
            TxBody::Transfer { path: path.clone(), new_owner: new_owner.clone() },
            Amount::ZERO,
            self.next_nonce(&signer.address()),
            signer,
        );
        self.submit(tx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ContentId;
    use tempfile::TempDir;

    fn funded_ledger(keys: &[&KeyPair]) -> Ledger {
        let genesis: BTreeMap<Address, Amount> = keys
            .iter()
            .map(|kp| (kp.address(), Amount::from_phi(10)))
            .collect();
        Ledger::new(LedgerParams::default(), genesis).unwrap()
    }

    fn path(text: &str) -> AssetPath {
        AssetPath::parse(text).unwrap()
    }

    fn cid(n: u8) -> ContentId {
        ContentId::from_digest(&[n; 32])
    }

    #[test]
    fn create_root_confirms_with_initial_binding() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        // Unconfirmed: invisible to reads.
        assert!(matches!(
            ledger.get_binding(&path("XXX")),
            Err(LedgerError::UnknownAsset(_))
        ));
        ledger.produce_block(1).unwrap();
        assert_eq!(ledger.get_binding(&path("XXX")).unwrap(), Binding::Initial);
        let record = ledger.asset(&path("XXX")).unwrap();
        assert_eq!(record.quantity, 1);
        assert!(!record.reissuable);
        assert_eq!(record.created_at_height, 1);
    }

    #[test]
    fn duplicate_root_is_rejected_even_in_mempool() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        let err = ledger
            .create_root_asset(&path("XXX"), &kp.address(), &kp)
            .unwrap_err();
        assert_eq!(err, LedgerError::DuplicateAsset("XXX".into()));
        ledger.produce_block(1).unwrap();
        let err = ledger
            .create_root_asset(&path("XXX"), &kp.address(), &kp)
            .unwrap_err();
        assert_eq!(err, LedgerError::DuplicateAsset("XXX".into()));
    }

    #[test]
    fn creation_fee_debits_exactly_a_tenth() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        let before = ledger.balance(&kp.address());
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        let after = ledger.balance(&kp.address());
        assert_eq!(before.checked_sub(after).unwrap(), Amount::from_milli(100));
        assert_eq!(ledger.fees_burned(), Amount::from_milli(100));
    }

    #[test]
    fn insufficient_funds_rejected_at_submit() {
        let rich = KeyPair::from_seed([1; 32]);
        let poor = KeyPair::from_seed([2; 32]);
        let genesis = BTreeMap::from([
            (rich.address(), Amount::from_phi(10)),
            (poor.address(), Amount::from_milli(50)),
        ]);
        let mut ledger = Ledger::new(LedgerParams::default(), genesis).unwrap();
        let err = ledger
            .create_root_asset(&path("POOR"), &poor.address(), &poor)
            .unwrap_err();
        assert_eq!(
            err,
            LedgerError::InsufficientFunds {
                needed: Amount::from_milli(100),
                available: Amount::from_milli(50),
            }
        );
    }

    #[test]
    fn sub_asset_ownership_lands_on_the_specified_address() {
        let alice = KeyPair::from_seed([1; 32]);
        let bob = KeyPair::from_seed([2; 32]);
        let mut ledger = funded_ledger(&[&alice, &bob]);
        ledger.create_root_asset(&path("XXX"), &alice.address(), &alice).unwrap();
        ledger.produce_block(1).unwrap();
        ledger
            .create_sub_asset(&path("XXX"), "WWW", &bob.address(), &alice)
            .unwrap();
        ledger.produce_block(2).unwrap();
        assert_eq!(ledger.owner_of(&path("XXX/WWW")).unwrap(), bob.address());
        assert_eq!(ledger.get_binding(&path("XXX/WWW")).unwrap(), Binding::Initial);
    }

    #[test]
    fn non_owner_mutations_are_rejected_and_state_untouched() {
        let alice = KeyPair::from_seed([1; 32]);
        let mallory = KeyPair::from_seed([2; 32]);
        let mut ledger = funded_ledger(&[&alice, &mallory]);
        ledger.create_root_asset(&path("XXX"), &alice.address(), &alice).unwrap();
        ledger.produce_block(1).unwrap();
        let hash_before = ledger.state_hash();

        let err = ledger
            .create_sub_asset(&path("XXX"), "EVIL", &mallory.address(), &mallory)
            .unwrap_err();
        assert!(matches!(err, LedgerError::NotOwner { .. }));
        let err = ledger
            .set_binding(&path("XXX"), Binding::Active(cid(1)), &mallory)
            .unwrap_err();
        assert!(matches!(err, LedgerError::NotOwner { .. }));
        let err = ledger
            .transfer_ownership(&path("XXX"), &mallory.address(), &mallory)
            .unwrap_err();
        assert!(matches!(err, LedgerError::NotOwner { .. }));

        assert_eq!(ledger.state_hash(), hash_before);
        assert_eq!(ledger.mempool_len(), 0);
    }

    #[test]
    fn set_binding_visible_only_after_confirmation() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        ledger
            .set_binding(&path("XXX"), Binding::Active(cid(7)), &kp)
            .unwrap();
        assert_eq!(ledger.get_binding(&path("XXX")).unwrap(), Binding::Initial);
        ledger.produce_block(2).unwrap();
        assert_eq!(
            ledger.get_binding(&path("XXX")).unwrap(),
            Binding::Active(cid(7))
        );
    }

    #[test]
    fn rebinding_to_initial_is_invalid() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        let err = ledger
            .set_binding(&path("XXX"), Binding::Initial, &kp)
            .unwrap_err();
        assert!(matches!(err, LedgerError::InvalidCid(_)));
    }

    #[test]
    fn transfer_chain_ends_at_final_address_and_is_fee_free() {
        let a = KeyPair::from_seed([1; 32]);
        let b = KeyPair::from_seed([2; 32]);
        let c = KeyPair::from_seed([3; 32]);
        let mut ledger = funded_ledger(&[&a, &b, &c]);
        ledger.create_root_asset(&path("XXX"), &a.address(), &a).unwrap();
        ledger.produce_block(1).unwrap();
        let b_balance = ledger.balance(&b.address());

        ledger.transfer_ownership(&path("XXX"), &b.address(), &a).unwrap();
        ledger.produce_block(2).unwrap();
        ledger.transfer_ownership(&path("XXX"), &c.address(), &b).unwrap();
        ledger.produce_block(3).unwrap();
        assert_eq!(ledger.owner_of(&path("XXX")).unwrap(), c.address());
        assert_eq!(ledger.balance(&b.address()), b_balance);

        // Previous owner lost rights.
        let err = ledger
            .set_binding(&path("XXX"), Binding::Deactivated, &a)
            .unwrap_err();
        assert!(matches!(err, LedgerError::NotOwner { .. }));
    }

    #[test]
    fn replayed_nonce_is_rejected() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        let tx = Tx::sign(
            TxBody::CreateRoot { path: path("XXX"), new_owner: kp.address() },
            LedgerParams::default().creation_fee,
            1,
            &kp,
        );
        ledger.submit(tx.clone()).unwrap();
        assert!(matches!(ledger.submit(tx), Err(LedgerError::BadNonce { .. })));
    }

    #[test]
    fn packing_respects_the_size_cap() {
        let kp = KeyPair::from_seed([1; 32]);
        let genesis = BTreeMap::from([(kp.address(), Amount::from_phi(10_000))]);
        // Small cap: 3 typical txs fit, the 4th does not.
        let params = LedgerParams {
            block_size_bytes: (TYPICAL_TX_BYTES as u64) * 3 + 100,
            ..LedgerParams::default()
        };
        let mut ledger = Ledger::new(params, genesis).unwrap();
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        ledger
            .create_sub_asset(&path("XXX"), "WWW", &kp.address(), &kp)
            .unwrap();
        ledger.produce_block(2).unwrap();
        for i in 0..5 {
            ledger
                .set_binding(&path("XXX/WWW"), Binding::Active(cid(i)), &kp)
                .unwrap();
        }
        let block = ledger.produce_block(3).unwrap();
        assert_eq!(block.txs.len(), 3);
        assert!(block.total_bytes <= ledger.params().block_size_bytes);
        assert_eq!(ledger.mempool_len(), 2);
        let block = ledger.produce_block(4).unwrap();
        assert_eq!(block.txs.len(), 2);
        // Last queued binding wins.
        assert_eq!(
            ledger.get_binding(&path("XXX/WWW")).unwrap(),
            Binding::Active(cid(4))
        );
    }

    #[test]
    fn capacity_matches_the_published_arithmetic() {
        let capacity = capacity_tps(&LedgerParams::default());
        assert_eq!(capacity.txs_per_block, 7681);
        assert!((capacity.tps - 512.066).abs() < 0.001);
        assert_eq!(capacity.tps_floor(), 512);

        let half = LedgerParams {
            block_size_bytes: 2 * 1024 * 1024,
            ..LedgerParams::default()
        };
        assert_eq!(capacity_tps(&half).tps_floor(), 256);

        let unit = LedgerParams {
            block_size_bytes: 546,
            block_interval_s: 1,
            avg_tx_size_bytes: 546,
            ..LedgerParams::default()
        };
        assert_eq!(capacity_tps(&unit).txs_per_block, 1);
        assert_eq!(capacity_tps(&unit).tps_floor(), 1);
    }

    #[test]
    fn conservation_holds_across_blocks() {
        let kp = KeyPair::from_seed([1; 32]);
        let mut ledger = funded_ledger(&[&kp]);
        let initial = ledger.confirmed_state().total_balance();
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        for i in 0..10 {
            ledger
                .set_binding(&path("XXX"), Binding::Active(cid(i)), &kp)
                .unwrap();
        }
        ledger.produce_block(2).unwrap();
        let state = ledger.confirmed_state();
        assert_eq!(
            state.total_balance().checked_add(state.fees_burned).unwrap(),
            initial
        );
        assert_eq!(state.fees_burned, Amount::from_milli(1100));
    }

    #[test]
    fn chain_log_replay_reproduces_the_state_hash() {
        let dir = TempDir::new().unwrap();
        let log = dir.path().join("chain.log");
        let kp = KeyPair::from_seed([1; 32]);
        let genesis = BTreeMap::from([(kp.address(), Amount::from_phi(10))]);
        let mut ledger =
            Ledger::open(LedgerParams::default(), genesis.clone(), &log).unwrap();
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(100).unwrap();
        ledger
            .create_sub_asset(&path("XXX"), "WWW", &kp.address(), &kp)
            .unwrap();
        ledger
            .set_binding(&path("XXX/WWW"), Binding::Active(cid(5)), &kp)
            .unwrap();
        ledger.produce_block(200).unwrap();
        ledger.produce_block(300).unwrap(); // empty block

        let replayed = Ledger::replay(&log).unwrap();
        assert_eq!(replayed.state_hash(), ledger.state_hash());
        assert_eq!(replayed.height(), 3);

        // Reopening continues the same chain.
        let reopened = Ledger::open(LedgerParams::default(), genesis, &log).unwrap();
        assert_eq!(reopened.state_hash(), ledger.state_hash());
    }

    #[test]
    fn mempool_remainder_survives_block_production() {
        let kp = KeyPair::from_seed([1; 32]);
        let genesis = BTreeMap::from([(kp.address(), Amount::from_phi(100))]);
        let params = LedgerParams {
            block_size_bytes: TYPICAL_TX_BYTES as u64, // one tx per block
            ..LedgerParams::default()
        };
        let mut ledger = Ledger::new(params, genesis).unwrap();
        // CreateRoot for XXX is smaller than 546 so it fits its own block.
        ledger.create_root_asset(&path("XXX"), &kp.address(), &kp).unwrap();
        ledger.produce_block(1).unwrap();
        ledger
            .set_binding(&path("XXX"), Binding::Active(cid(1)), &kp)
            .unwrap();
        ledger
            .set_binding(&path("XXX"), Binding::Active(cid(2)), &kp)
            .unwrap();
        assert_eq!(ledger.mempool_len(), 2);
        ledger.produce_block(2).unwrap();
        assert_eq!(ledger.mempool_len(), 1);
        assert_eq!(ledger.get_binding(&path("XXX")).unwrap(), Binding::Active(cid(1)));
        ledger.produce_block(3).unwrap();
        assert_eq!(ledger.mempool_len(), 0);
        assert_eq!(ledger.get_binding(&path("XXX")).unwrap(), Binding::Active(cid(2)));
    }
}
