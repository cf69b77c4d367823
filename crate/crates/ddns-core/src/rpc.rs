//! Node-style RPC result envelope: {"result": ..., "error": null, "id": ...}.
//! Command output keeps this shape so scripts written against a real
//! chain daemon parse ours unchanged.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcEnvelope {
    pub result: Value,
    pub error: Option<String>,
    pub id: u64,
}

impl RpcEnvelope {
    pub fn success(id: u64, result: Value) -> Self {
        Self { result, error: None, id }
    }

    /// The common single-txid result: {"result": ["<txid>"], ...}.
    pub fn txid(id: u64, txid: &str) -> Self {
        Self::success(id, Value::Array(vec![Value::String(txid.to_string())]))
    }

    pub fn failure(id: u64, error: impl std::fmt::Display) -> Self {
        Self { result: Value::Null, error: Some(error.to_string()), id }
    }

    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}
