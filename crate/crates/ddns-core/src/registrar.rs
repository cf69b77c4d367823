//! Owner-facing registration workflows. Each call composes record
//! encoding, store upload, and one signed ledger transaction; nothing here
//! is visible to resolution until a block seals the transaction.

use std::sync::{Arc, Mutex};

use crate::domain::{AssetPath, Binding, ContentId, DomainName, RecordFile};
use crate::ledger::{Address, KeyPair, Ledger, LedgerError};
use crate::node::NodeError;
use crate::store::{LocalStore, PinningClient};

pub struct RegistrarSession {
    keypair: KeyPair,
    owner_address: Address,
    ledger: Arc<Mutex<Ledger>>,
    store: Arc<LocalStore>,
    pinner: Option<Arc<PinningClient>>,
    root_suffix: String,
}

impl RegistrarSession {
    pub fn new(
        keypair: KeyPair,
        ledger: Arc<Mutex<Ledger>>,
        store: Arc<LocalStore>,
        pinner: Option<Arc<PinningClient>>,
        root_suffix: String,
    ) -> Self {
        let owner_address = keypair.address();
        Self { keypair, owner_address, ledger, store, pinner, root_suffix }
    }

    pub fn owner_address(&self) -> &Address {
        &self.owner_address
    }

    pub fn root_suffix(&self) -> &str {
        &self.root_suffix
    }

    /// Claims a new top-level domain. Accepts the DNS-side spelling
    /// ("xxx"); the asset root is its uppercase form.
    pub fn register_tld(&self, tld: &str) -> Result<String, NodeError> {
        let root = AssetPath::root_only(&tld.trim().to_ascii_uppercase())
            .map_err(|e| LedgerError::ValidationFailure(e.to_string()))?;
        let mut ledger = self.ledger.lock().expect("ledger lock");
        Ok(ledger.create_root_asset(&root, &self.owner_address, &self.keypair)?)
    }

    /// Creates `sub` under `tld` with the given owner and an Initial
    /// binding. `sub` may be dotted ("a.b") to extend an existing chain.
    pub fn add_subdomain(&self, tld: &str, sub: &str, owner: &Address) -> Result<String, NodeError> {
        let name = DomainName::parse(&format!("{sub}.{tld}.{}", self.root_suffix))?;
        let path = self.asset_path(&name)?;
        let parent = path.parent().expect("subdomain paths have parents");
        let segment = path.subpath().last().expect("subdomain paths have segments");
        let mut ledger = self.ledger.lock().expect("ledger lock");
        Ok(ledger.create_sub_asset(&parent, segment, owner, &self.keypair)?)
    }

    /// Uploads the record file and points the domain's binding at it.
    /// The content lands in the local store unconditionally and is pinned
    /// remotely when a pinning service is configured.
    pub fn set_record(
        &self,
        domain: &DomainName,
        records: &RecordFile,
    ) -> Result<(ContentId, String), NodeError> {
        let path = self.asset_path(domain)?;
        let payload = records.encode();
        let cid = self.store.put_named(&payload, Some(&domain.to_string()))?;
        if let Some(pinner) = &self.pinner {
            pinner.pin(&domain.to_string(), &payload)?;
        }
        let mut ledger = self.ledger.lock().expect("ledger lock");
        let txid = ledger.set_binding(&path, Binding::Active(cid.clone()), &self.keypair)?;
        Ok((cid, txid))
    }

    /// Points the binding at the deactivation sentinel; the name resolves
    /// as NxDomain once the transaction confirms.
    pub fn disable_subdomain(&self, domain: &DomainName) -> Result<String, NodeError> {
        let path = self.asset_path(domain)?;
        let mut ledger = self.ledger.lock().expect("ledger lock");
        Ok(ledger.set_binding(&path, Binding::Deactivated, &self.keypair)?)
    }

    fn asset_path(&self, domain: &DomainName) -> Result<AssetPath, NodeError> {
        Ok(domain.to_asset_path(&self.root_suffix)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DnsRecord;
    use crate::ledger::{Amount, LedgerParams};
    use std::collections::BTreeMap;
    use tempfile::TempDir;

    struct Fixture {
        _dir: TempDir,
        ledger: Arc<Mutex<Ledger>>,
        session: RegistrarSession,
        outsider: RegistrarSession,
    }

    fn fixture() -> Fixture {
        let dir = TempDir::new().unwrap();
        let kp = KeyPair::from_seed([7; 32]);
        let stranger = KeyPair::from_seed([8; 32]);
        let genesis = BTreeMap::from([
            (kp.address(), Amount::from_phi(50)),
            (stranger.address(), Amount::from_phi(50)),
        ]);
        let ledger = Arc::new(Mutex::new(Ledger::new(LedgerParams::default(), genesis).unwrap()));
        let store = Arc::new(LocalStore::open(dir.path()).unwrap());
        let session = RegistrarSession::new(
            kp,
            Arc::clone(&ledger),
            Arc::clone(&store),
            None,
            "ddns".to_string(),
        );
        let outsider = RegistrarSession::new(
            stranger,
            Arc::clone(&ledger),
            Arc::clone(&store),
            None,
            "ddns".to_string(),
        );
        Fixture { _dir: dir, ledger, session, outsider }
    }

    fn seal(ledger: &Arc<Mutex<Ledger>>) {
        let mut ledger = ledger.lock().unwrap();
        let height = ledger.height();
        ledger.produce_block(height + 1).unwrap();
    }

    #[test]
    fn full_registration_flow_reaches_the_ledger() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        fx.session
            .add_subdomain("xxx", "www", fx.session.owner_address())
            .unwrap();
        seal(&fx.ledger);

        let name = DomainName::parse("www.xxx.ddns").unwrap();
        let file =
            RecordFile::new(vec![DnsRecord::A { address: "1.2.3.4".parse().unwrap() }]).unwrap();
        let (cid, txid) = fx.session.set_record(&name, &file).unwrap();
        assert_eq!(txid.len(), 64);
        seal(&fx.ledger);

        let path = AssetPath::parse("XXX/WWW").unwrap();
        let ledger = fx.ledger.lock().unwrap();
        assert_eq!(ledger.get_binding(&path).unwrap(), Binding::Active(cid));
    }

    #[test]
    fn stored_bytes_decode_back_to_the_input_records() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        fx.session
            .add_subdomain("xxx", "mail", fx.session.owner_address())
            .unwrap();
        seal(&fx.ledger);
        let name = DomainName::parse("mail.xxx.ddns").unwrap();
        let file = RecordFile::new(vec![DnsRecord::Mx {
            mail_server: "mail.example.com".to_string(),
            ttl: 3600,
            priority: 10,
        }])
        .unwrap();
        let (cid, _) = fx.session.set_record(&name, &file).unwrap();
        let stored = fx.session.store.get(&cid).unwrap();
        assert_eq!(RecordFile::decode(&stored).unwrap(), file);
    }

    #[test]
    fn foreign_tld_mutations_are_not_owner() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        seal(&fx.ledger);

        let err = fx
            .outsider
            .add_subdomain("xxx", "www", fx.outsider.owner_address())
            .unwrap_err();
        assert!(matches!(err, NodeError::Ledger(LedgerError::NotOwner { .. })));

        fx.session
            .add_subdomain("xxx", "www", fx.session.owner_address())
            .unwrap();
        seal(&fx.ledger);
        let name = DomainName::parse("www.xxx.ddns").unwrap();
        let err = fx.outsider.disable_subdomain(&name).unwrap_err();
        assert!(matches!(err, NodeError::Ledger(LedgerError::NotOwner { .. })));
    }

    #[test]
    fn oversized_tld_is_a_validation_failure() {
        let fx = fixture();
        let long = "x".repeat(33);
        let err = fx.session.register_tld(&long).unwrap_err();
        assert!(matches!(err, NodeError::Ledger(LedgerError::ValidationFailure(_))));
        assert!(fx.session.register_tld(&"x".repeat(32)).is_ok());
    }

    #[test]
    fn duplicate_tld_is_refused() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        let err = fx.session.register_tld("xxx").unwrap_err();
        assert!(matches!(err, NodeError::Ledger(LedgerError::DuplicateAsset(_))));
    }

    #[test]
    fn disable_unknown_domain_is_unknown_asset() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        seal(&fx.ledger);
        let name = DomainName::parse("ghost.xxx.ddns").unwrap();
        let err = fx.session.disable_subdomain(&name).unwrap_err();
        assert!(matches!(err, NodeError::Ledger(LedgerError::UnknownAsset(_))));
    }

    #[test]
    fn dotted_sub_extends_an_existing_chain() {
        let fx = fixture();
        fx.session.register_tld("xxx").unwrap();
        fx.session.add_subdomain("xxx", "b", fx.session.owner_address()).unwrap();
        fx.session
            .add_subdomain("xxx", "a.b", fx.session.owner_address())
            .unwrap();
        seal(&fx.ledger);
        let ledger = fx.ledger.lock().unwrap();
        let path = AssetPath::parse("XXX/B/A").unwrap();
        assert_eq!(ledger.get_binding(&path).unwrap(), Binding::Initial);
    }
}
