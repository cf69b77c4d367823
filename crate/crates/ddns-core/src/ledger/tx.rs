//! Signed transactions and their canonical serialization.
//!
//! The canonical form is a fixed binary layout (magic, kind tag,
//! length-prefixed strings, little-endian integers, signer key, zero
//! padding) followed by the 64-byte signature. The padding is calibrated
//! so a typical binding update (path like `XXX/WWW`, 46-character cid)
//! serializes to exactly [`TYPICAL_TX_BYTES`], which makes the block
//! arithmetic reproduce the measured figures.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::amount::Amount;
use super::keys::{verify_signature, Address, KeyPair};
use crate::domain::{AssetPath, Binding, DomainError};

/// Serialized size of a typical binding-update transaction.
pub const TYPICAL_TX_BYTES: usize = 546;

const TX_MAGIC: &[u8; 4] = b"DTX1";
/// Zero padding appended before the signature; fixed by the format version.
/// 4 (magic) + 1 (kind) + 9 ("XXX/WWW") + 48 (cid) + 8 (fee) + 8 (nonce)
/// + 32 (pubkey) + PAD + 64 (signature) = 546.
const TX_PADDING: usize = 372;

/// What a transaction does. `CreateSub` carries the parent and the new
/// segment separately; the child path is derived (and validated) from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxBody {
    CreateRoot { path: AssetPath, new_owner: Address },
    CreateSub { parent: AssetPath, segment: String, new_owner: Address },
    SetBinding { path: AssetPath, binding: Binding },
    Transfer { path: AssetPath, new_owner: Address },
}

impl TxBody {
    fn kind_byte(&self) -> u8 {
        match self {
            TxBody::CreateRoot { .. } => 1,
            TxBody::CreateSub { .. } => 2,
            TxBody::SetBinding { .. } => 3,
            TxBody::Transfer { .. } => 4,
        }
    }

    /// The asset the transaction creates or mutates.
    pub fn target_path(&self) -> Result<AssetPath, DomainError> {
        match self {
            TxBody::CreateRoot { path, .. } => Ok(path.clone()),
            TxBody::CreateSub { parent, segment, .. } => parent.child(segment),
            TxBody::SetBinding { path, .. } => Ok(path.clone()),
            TxBody::Transfer { path, .. } => Ok(path.clone()),
        }
    }
}

/// A signed transaction. Equality covers all fields; the txid is derived,
/// not stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TxWire", try_from = "TxWire")]
pub struct Tx {
    pub body: TxBody,
    pub fee: Amount,
    pub nonce: u64,
    pub signer_pubkey: [u8; 32],
    pub signature: [u8; 64],
}

impl Tx {
    /// Builds and signs a transaction in one step.
    pub fn sign(body: TxBody, fee: Amount, nonce: u64, keypair: &KeyPair) -> Self {
        let mut tx = Tx {
            body,
            fee,
            nonce,
            signer_pubkey: keypair.public_bytes(),
            signature: [0u8; 64],
        };
        tx.signature = keypair.sign(&tx.signing_bytes());
        tx
    }

    /// Canonical bytes covered by the signature: everything but the
    /// signature itself.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(TYPICAL_TX_BYTES);
        out.extend_from_slice(TX_MAGIC);
        out.push(self.body.kind_byte());
        match &self.body {
            TxBody::CreateRoot { path, new_owner } => {
                push_str(&mut out, &path.render());
                push_str(&mut out, new_owner.as_str());
            }
            TxBody::CreateSub { parent, segment, new_owner } => {
                push_str(&mut out, &parent.render());
                push_str(&mut out, segment);
                push_str(&mut out, new_owner.as_str());
            }
            TxBody::SetBinding { path, binding } => {
                push_str(&mut out, &path.render());
                push_str(&mut out, &binding.to_ledger_text());
            }
            TxBody::Transfer { path, new_owner } => {
                push_str(&mut out, &path.render());
                push_str(&mut out, new_owner.as_str());
            }
        }
        out.extend_from_slice(&self.fee.milli().to_le_bytes());
        out.extend_from_slice(&self.nonce.to_le_bytes());
        out.extend_from_slice(&self.signer_pubkey);
        out.resize(out.len() + TX_PADDING, 0);
        out
    }

    /// Full canonical serialization: signed bytes plus signature.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = self.signing_bytes();
        out.extend_from_slice(&self.signature);
        out
    }

    /// Exact byte length of the canonical serialization.
    pub fn serialized_size(&self) -> usize {
        self.canonical_bytes().len()
    }

    /// Hex sha2-256 of the canonical serialization; unique per distinct
    /// content.
    pub fn txid(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_bytes()))
    }

    pub fn signer_address(&self) -> Address {
        Address::from_pubkey_bytes(&self.signer_pubkey)
    }

    pub fn verify_signature(&self) -> bool {
        verify_signature(&self.signer_pubkey, &self.signing_bytes(), &self.signature)
    }
}

fn push_str(out: &mut Vec<u8>, s: &str) {
    let bytes = s.as_bytes();
    out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
    out.extend_from_slice(bytes);
}

/// JSON shape of a transaction in the chain log.
#[derive(Clone, Serialize, Deserialize)]
struct TxWire {
    kind: String,
    path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    segment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    new_owner: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    binding: Option<String>,
    fee: u64,
    nonce: u64,
    pubkey: String,
    signature: String,
}

impl From<Tx> for TxWire {
    fn from(tx: Tx) -> Self {
        let (kind, path, segment, new_owner, binding) = match &tx.body {
            TxBody::CreateRoot { path, new_owner } => {
                ("create_root", path.render(), None, Some(new_owner.to_string()), None)
            }
            TxBody::CreateSub { parent, segment, new_owner } => (
                "create_sub",
                parent.render(),
                Some(segment.clone()),
                Some(new_owner.to_string()),
                None,
            ),
            TxBody::SetBinding { path, binding } => {
                ("set_binding", path.render(), None, None, Some(binding.to_ledger_text()))
            }
            TxBody::Transfer { path, new_owner } => {
                ("transfer", path.render(), None, Some(new_owner.to_string()), None)
            }
        };
        TxWire {
            kind: kind.to_string(),
            path,
            segment,
            new_owner,
            binding,
            fee: tx.fee.milli(),
            nonce: tx.nonce,
            pubkey: hex::encode(tx.signer_pubkey),
            signature: hex::encode(tx.signature),
        }
    }
}

impl TryFrom<TxWire> for Tx {
    type Error = String;

    fn try_from(w: TxWire) -> Result<Self, Self::Error> {
        let path = AssetPath::parse(&w.path).map_err(|e| e.to_string())?;
        let owner = |o: &Option<String>| -> Result<Address, String> {
            Address::parse(o.as_deref().ok_or("missing new_owner")?)
        };
        let body = match w.kind.as_str() {
            "create_root" => TxBody::CreateRoot { path, new_owner: owner(&w.new_owner)? },
            "create_sub" => TxBody::CreateSub {
                parent: path,
                segment: w.segment.clone().ok_or("missing segment")?,
                new_owner: owner(&w.new_owner)?,
            },
            "set_binding" => TxBody::SetBinding {
                path,
                binding: Binding::from_ledger_text(
                    w.binding.as_deref().ok_or("missing binding")?,
                )
                .map_err(|e| e.to_string())?,
            },
            "transfer" => TxBody::Transfer { path, new_owner: owner(&w.new_owner)? },
            other => return Err(format!("unknown tx kind {other:?}")),
        };
        let pubkey: [u8; 32] = hex::decode(&w.pubkey)
            .map_err(|e| e.to_string())?
            .try_into()
            .map_err(|_| "pubkey must be 32 bytes")?;
        let signature: [u8; 64] = hex::decode(&w.signature)
            .map_err(|e| e.to_string())?
            .try_into()
            .map_err(|_| "signature must be 64 bytes")?;
        Ok(Tx { body, fee: Amount::from_milli(w.fee), nonce: w.nonce, signer_pubkey: pubkey, signature })
    }
}
