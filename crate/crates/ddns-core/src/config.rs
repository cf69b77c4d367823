//! Daemon configuration: one JSON file, every field optional.
//!
//! Fees and balances are written in whole currency units ("0.1"), not the
//! ledger's internal milli fixed point, because that is what operators
//! think in. Conversion happens once, at load, and rejects amounts the
//! fixed point cannot represent exactly.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Address, Amount, LedgerParams};
use crate::resolver::ResolverConfig;
use crate::store::PinningConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad config value: {0}")]
    BadValue(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSection {
    pub block_size_bytes: u64,
    pub block_interval_s: u64,
    pub creation_fee: f64,
    pub modification_fee: f64,
    pub avg_tx_size_bytes: u64,
}

impl Default for LedgerSection {
    fn default() -> Self {
        let params = LedgerParams::default();
        Self {
            block_size_bytes: params.block_size_bytes,
            block_interval_s: params.block_interval_s,
            creation_fee: params.creation_fee.as_phi_f64(),
            modification_fee: params.modification_fee.as_phi_f64(),
            avg_tx_size_bytes: params.avg_tx_size_bytes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub bind: String,
    pub port: u16,
    pub workers: usize,
    pub upstream: String,
    pub root_suffix: String,
    pub cache_capacity: usize,
    pub negative_ttl: u32,
    pub cname_chase_limit: u32,
    pub ledger: LedgerSection,
    /// Opening balances in whole currency units, keyed by address text.
    pub genesis_balances: BTreeMap<String, f64>,
    pub pinning: Option<PinningConfig>,
    pub key_file: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let resolver = ResolverConfig::default();
        Self {
            data_dir: PathBuf::from("ddns-data"),
            bind: "127.0.0.1".to_string(),
            port: 5553,
            workers: 4,
            upstream: resolver.upstream,
            root_suffix: resolver.root_suffix,
            cache_capacity: resolver.cache_capacity,
            negative_ttl: resolver.negative_ttl,
            cname_chase_limit: resolver.cname_chase_limit,
            ledger: LedgerSection::default(),
            genesis_balances: BTreeMap::new(),
            pinning: None,
            key_file: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let bytes = std::fs::read(path)?;
        Self::from_json(&bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ConfigError> {
        let config: Config = serde_json::from_slice(bytes)?;
        config.ledger_params()?;
        config.genesis()?;
        config.bind_addr()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn ledger_params(&self) -> Result<LedgerParams, ConfigError> {
        let fee = |label: &str, value: f64| {
            Amount::from_phi_f64(value)
                .map_err(|e| ConfigError::BadValue(format!("{label}: {e}")))
        };
        Ok(LedgerParams {
            block_size_bytes: self.ledger.block_size_bytes,
            block_interval_s: self.ledger.block_interval_s,
            creation_fee: fee("ledger.creation_fee", self.ledger.creation_fee)?,
            modification_fee: fee("ledger.modification_fee", self.ledger.modification_fee)?,
            avg_tx_size_bytes: self.ledger.avg_tx_size_bytes,
        })
    }

    pub fn genesis(&self) -> Result<BTreeMap<Address, Amount>, ConfigError> {
        let mut balances = BTreeMap::new();
        for (text, phi) in &self.genesis_balances {
            let address = Address::parse(text)
                .map_err(|e| ConfigError::BadValue(format!("genesis address {text}: {e}")))?;
            let amount = Amount::from_phi_f64(*phi)
                .map_err(|e| ConfigError::BadValue(format!("genesis balance {text}: {e}")))?;
            balances.insert(address, amount);
        }
        Ok(balances)
    }

    pub fn resolver_config(&self) -> ResolverConfig {
        ResolverConfig {
            root_suffix: self.root_suffix.clone(),
            upstream: self.upstream.clone(),
            cache_capacity: self.cache_capacity,
            negative_ttl: self.negative_ttl,
            cname_chase_limit: self.cname_chase_limit,
        }
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, ConfigError> {
        format!("{}:{}", self.bind, self.port)
            .parse()
            .map_err(|e| ConfigError::BadValue(format!("bind {}:{}: {e}", self.bind, self.port)))
    }
}
