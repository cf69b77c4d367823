//! HTTP client for a Pinata-shaped pinning service.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{compute_cid, StoreError};
use crate::domain::ContentId;

/// Connection settings for the remote pinning endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinningConfig {
    pub endpoint_url: String,
    pub api_key: String,
    /// Soft client-side quota on pinned files.
    #[serde(default = "default_max_files")]
    pub max_files: u64,
}

fn default_max_files() -> u64 {
    500
}

impl PinningConfig {
    pub fn new(endpoint_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            api_key: api_key.into(),
            max_files: default_max_files(),
        }
    }
}

#[derive(Deserialize)]
struct PinResponse {
    #[serde(rename = "IpfsHash")]
    ipfs_hash: String,
}

/// Uploads payloads to `{endpoint}/pinning/pinFileToIPFS` and checks the
/// returned hash against the locally computed cid. Tracks its own pin
/// count so the quota fails fast instead of at the service.
pub struct PinningClient {
    cfg: PinningConfig,
    http: reqwest::blocking::Client,
    pinned: Mutex<u64>,
}

impl PinningClient {
    pub fn new(cfg: PinningConfig) -> Self {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .expect("http client builds");
        Self { cfg, http, pinned: Mutex::new(0) }
    }

    /// Number of successful pins so far.
    pub fn pinned_count(&self) -> u64 {
        *self.pinned.lock().expect("pin counter lock")
    }

    /// Pins `payload` under `name`, returning the verified cid.
    pub fn pin(&self, name: &str, payload: &[u8]) -> Result<ContentId, StoreError> {
        let local = compute_cid(payload)?;
        {
            let used = self.pinned.lock().expect("pin counter lock");
            if *used >= self.cfg.max_files {
                return Err(StoreError::QuotaExceeded { used: *used, max: self.cfg.max_files });
            }
        }

        let metadata = serde_json::json!({ "name": name }).to_string();
        let form = reqwest::blocking::multipart::Form::new()
            .part(
                "file",
                reqwest::blocking::multipart::Part::bytes(payload.to_vec())
                    .file_name(name.to_string()),
            )
            .text("pinataMetadata", metadata);

        let url = format!(
            "{}/pinning/pinFileToIPFS",
            self.cfg.endpoint_url.trim_end_matches('/')
        );
        let response = self
            .http
            .post(&url)
            .bearer_auth(&self.cfg.api_key)
            .multipart(form)
            .send()
            .map_err(|e| StoreError::NetworkFailure(e.to_string()))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(StoreError::AuthFailure);
        }
        if !status.is_success() {
            return Err(StoreError::NetworkFailure(format!(
                "pinning endpoint returned status {status}"
            )));
        }
        let body: PinResponse = response
            .json()
            .map_err(|e| StoreError::NetworkFailure(format!("bad pin response: {e}")))?;
        if body.ipfs_hash != local.as_str() {
            return Err(StoreError::RemoteMismatch {
                local: local.as_str().to_string(),
                remote: body.ipfs_hash,
            });
        }
        *self.pinned.lock().expect("pin counter lock") += 1;
        Ok(local)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{FakeBehavior, FakePinningServer};

    #[test]
    fn pin_against_fake_returns_local_cid() {
        let server = FakePinningServer::start(Some("test-key".into()));
        let client = PinningClient::new(PinningConfig::new(server.endpoint(), "test-key"));
        let payload = br#"{"Type":"A","Address":"1.2.3.4"}"#;
        let cid = client.pin("WWW.XXX.DDNS", payload).unwrap();
        assert_eq!(cid, compute_cid(payload).unwrap());
        assert_eq!(client.pinned_count(), 1);
        assert_eq!(server.seen_names(), vec!["WWW.XXX.DDNS".to_string()]);
    }

    #[test]
    fn bad_key_is_auth_failure() {
        let server = FakePinningServer::start(Some("right-key".into()));
        let client = PinningClient::new(PinningConfig::new(server.endpoint(), "wrong-key"));
        assert!(matches!(client.pin("X", b"data"), Err(StoreError::AuthFailure)));
        assert_eq!(client.pinned_count(), 0);
    }

    #[test]
    fn quota_fails_on_pin_past_max() {
        let server = FakePinningServer::start(None);
        let mut cfg = PinningConfig::new(server.endpoint(), "k");
        cfg.max_files = 3;
        let client = PinningClient::new(cfg);
        for i in 0..3 {
            client.pin("N", format!("payload {i}").as_bytes()).unwrap();
        }
        assert!(matches!(
            client.pin("N", b"payload 3"),
            Err(StoreError::QuotaExceeded { used: 3, max: 3 })
        ));
    }

    #[test]
    fn remote_hash_mismatch_is_detected() {
        let server = FakePinningServer::start_with_behavior(None, FakeBehavior::WrongHash);
        let client = PinningClient::new(PinningConfig::new(server.endpoint(), "k"));
        assert!(matches!(
            client.pin("N", b"data"),
            Err(StoreError::RemoteMismatch { .. })
        ));
    }

    #[test]
    fn unreachable_endpoint_is_network_failure() {
        // Reserved port on localhost with nothing listening.
        let client = PinningClient::new(PinningConfig::new("http://127.0.0.1:9", "k"));
        assert!(matches!(client.pin("N", b"data"), Err(StoreError::NetworkFailure(_))));
    }
}
