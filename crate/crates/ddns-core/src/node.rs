//! One-process composition: ledger, object store, resolver, and block
//! scheduler wired together under a locked data directory.
//!
//! The directory layout is flat: `chain.log` (block log), `objects/` plus
//! `index.json` (content store), `stats.json` (monitoring snapshot),
//! `node.lock` (single-writer guard). Two processes mutating the same
//! chain log would fork it, so `open` takes an OS file lock and everything
//! else refuses to start while it is held.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::domain::{DomainError, DomainName, RecordError};
use crate::ledger::{Block, KeyPair, Ledger, LedgerError};
use crate::resolver::{
    ContentFetcher, CounterSnapshot, LedgerReader, Resolver, UdpForwarder, Upstream,
};
use crate::registrar::RegistrarSession;
use crate::store::{LocalStore, PinningClient, StoreError};

#[derive(Debug, Error)]
pub enum NodeError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("data dir {0} is in use by another process")]
    Locked(PathBuf),
}

/// Point-in-time operational snapshot, also persisted as `stats.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeStats {
    pub height: u64,
    pub mempool: usize,
    pub state_hash: String,
    pub fees_burned: String,
    pub stored_objects: usize,
    pub counters: CounterSnapshot,
}

pub struct Node {
    config: Config,
    ledger: Arc<Mutex<Ledger>>,
    store: Arc<LocalStore>,
    resolver: Arc<Resolver>,
    pinner: Option<Arc<PinningClient>>,
    _lock: File,
}

impl Node {
    pub fn open(config: Config) -> Result<Self, NodeError> {
        fs::create_dir_all(&config.data_dir)?;
        let lock = lock_dir(&config.data_dir)?;

        let ledger = Ledger::open(
            config.ledger_params()?,
            config.genesis()?,
            &config.data_dir.join("chain.log"),
        )?;
        let ledger = Arc::new(Mutex::new(ledger));
        let store = Arc::new(LocalStore::open(&config.data_dir)?);
        let upstream =
            UdpForwarder::from_addr_text(&config.upstream).map_err(ConfigError::BadValue)?;
        let resolver = Arc::new(Resolver::new(
            config.resolver_config(),
            Arc::clone(&ledger) as Arc<dyn LedgerReader>,
            Arc::clone(&store) as Arc<dyn ContentFetcher>,
            Arc::new(upstream) as Arc<dyn Upstream>,
        ));
        let pinner = config.pinning.clone().map(|cfg| Arc::new(PinningClient::new(cfg)));
        Ok(Self { config, ledger, store, resolver, pinner, _lock: lock })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn ledger(&self) -> Arc<Mutex<Ledger>> {
        Arc::clone(&self.ledger)
    }

    pub fn store(&self) -> Arc<LocalStore> {
        Arc::clone(&self.store)
    }

    pub fn resolver(&self) -> Arc<Resolver> {
        Arc::clone(&self.resolver)
    }

    pub fn session(&self, keypair: KeyPair) -> RegistrarSession {
        RegistrarSession::new(
            keypair,
            Arc::clone(&self.ledger),
            Arc::clone(&self.store),
            self.pinner.clone(),
            self.config.root_suffix.clone(),
        )
    }

    /// Seals the next block and drops stale cache entries for every name a
    /// packed transaction touched. Bindings only change here, so this is
    /// the single point where the resolver's view moves.
    pub fn advance_block(&self) -> Result<Block, NodeError> {
        let block = {
            let mut ledger = self.ledger.lock().expect("ledger lock");
            ledger.produce_block(unix_now())?
        };
        for name in affected_names(&block, &self.config.root_suffix) {
            self.resolver.invalidate(&name);
        }
        Ok(block)
    }

    /// Background block production at the configured interval. The handle
    /// stops the scheduler when dropped.
    pub fn start_block_timer(self: &Arc<Self>) -> BlockTimer {
        let stop = Arc::new(AtomicBool::new(false));
        let node = Arc::clone(self);
        let flag = Arc::clone(&stop);
        let interval = Duration::from_secs(node.config.ledger.block_interval_s.max(1));
        let handle = std::thread::spawn(move || {
            let mut next_block = std::time::Instant::now() + interval;
            while !flag.load(Ordering::Relaxed) {
                std::thread::sleep(Duration::from_millis(50));
                if std::time::Instant::now() < next_block {
                    continue;
                }
                next_block += interval;
                match node.advance_block() {
                    Ok(block) => log::info!(
                        "sealed block {} with {} txs",
                        block.height,
                        block.txs.len()
                    ),
                    Err(e) => log::error!("block production failed: {e}"),
                }
                if let Err(e) = node.write_stats() {
                    log::warn!("stats write failed: {e}");
                }
            }
        });
        BlockTimer { stop, handle: Some(handle) }
    }

    pub fn stats(&self) -> NodeStats {
        let ledger = self.ledger.lock().expect("ledger lock");
        NodeStats {
            height: ledger.height(),
            mempool: ledger.mempool_len(),
            state_hash: ledger.state_hash(),
            fees_burned: ledger.fees_burned().to_string(),
            stored_objects: self.store.len(),
            counters: self.resolver.counters().snapshot(),
        }
    }

    /// Atomically replaces `stats.json` in the data dir.
    pub fn write_stats(&self) -> Result<(), NodeError> {
        let path = self.stats_path();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&self.stats()).expect("stats serialize"))?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn stats_path(&self) -> PathBuf {
        self.config.data_dir.join("stats.json")
    }
}

pub struct BlockTimer {
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl BlockTimer {
    pub fn stop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for BlockTimer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn lock_dir(dir: &Path) -> Result<File, NodeError> {
    let file = File::create(dir.join("node.lock"))?;
    match file.try_lock() {
        Ok(()) => Ok(file),
        Err(std::fs::TryLockError::WouldBlock) => Err(NodeError::Locked(dir.to_path_buf())),
        Err(std::fs::TryLockError::Error(e)) => Err(e.into()),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn affected_names(block: &Block, root_suffix: &str) -> Vec<DomainName> {
    let mut names = BTreeSet::new();
    for tx in &block.txs {
        let Ok(path) = tx.body.target_path() else { continue };
        if let Ok(name) = DomainName::from_asset_path(&path, root_suffix) {
            names.insert(name);
        }
    }
    names.into_iter().collect()
}
