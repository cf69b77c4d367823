//! Signing keys and the addresses derived from them.

use std::fmt;
use std::fs;
use std::path::Path;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Short textual account identifier: "P" plus base58 of the first 20 bytes
/// of the public key's sha2-256 digest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(String);

impl Address {
    pub fn from_pubkey_bytes(pubkey: &[u8; 32]) -> Self {
        let digest = Sha256::digest(pubkey);
        Address(format!("P{}", bs58::encode(&digest[..20]).into_string()))
    }

    /// Accepts previously rendered addresses (config files, CLI args).
    pub fn parse(text: &str) -> Result<Self, String> {
        let rest = text
            .strip_prefix('P')
            .ok_or_else(|| format!("address {text:?} must start with 'P'"))?;
        let bytes = bs58::decode(rest)
            .into_vec()
            .map_err(|_| format!("address {text:?} is not base58"))?;
        if bytes.len() != 20 {
            return Err(format!("address {text:?} has a bad payload length"));
        }
        Ok(Address(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ed25519 keypair used to sign ledger transactions.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn generate() -> Self {
        let mut seed = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self { signing: SigningKey::from_bytes(&seed) }
    }

    pub fn seed(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public_bytes(&self) -> [u8; 32] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn address(&self) -> Address {
        Address::from_pubkey_bytes(&self.public_bytes())
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.signing.sign(message).to_bytes()
    }

    /// Writes the key as JSON with the derived address alongside the seed.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let file = KeyFile {
            secret_seed: hex::encode(self.seed()),
            public_key: hex::encode(self.public_bytes()),
            address: self.address().to_string(),
        };
        fs::write(path, serde_json::to_vec_pretty(&file).expect("key file serializes"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let bytes = fs::read(path).map_err(|e| format!("cannot read key file: {e}"))?;
        let file: KeyFile =
            serde_json::from_slice(&bytes).map_err(|e| format!("bad key file: {e}"))?;
        let seed = hex::decode(&file.secret_seed).map_err(|e| format!("bad seed hex: {e}"))?;
        let seed: [u8; 32] = seed
            .try_into()
            .map_err(|_| "seed must be 32 bytes".to_string())?;
        Ok(Self::from_seed(seed))
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("address", &self.address()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    secret_seed: String,
    public_key: String,
    address: String,
}

/// Verifies a detached signature against raw public-key bytes.
pub fn verify_signature(pubkey: &[u8; 32], message: &[u8], signature: &[u8; 64]) -> bool {
    let Ok(key) = VerifyingKey::from_bytes(pubkey) else {
        return false;
    };
    key.verify(message, &Signature::from_bytes(signature)).is_ok()
}
