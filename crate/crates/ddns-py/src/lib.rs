//! Python bindings for the ddns node.
//!
//! Exposes the registrar workflows, the resolver, and the UDP server to
//! Python in-process: a script can stand up a node, register names, and
//! answer real DNS queries without shelling out to the ddnsd binary.
//!
//! Structured values cross the boundary as JSON strings or plain tuples;
//! nothing here adds behavior on top of the core crate.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ddns_core::domain::{DomainName, RecordFile, RecordType};
use ddns_core::ledger::Address;
use ddns_core::node::NodeError;
use ddns_core::resolver::AnswerData;
use ddns_core::wire::{self, ServeOptions};
use ddns_core::{Config, Node, RegistrarSession};

fn node_err(err: NodeError) -> PyErr {
    match err {
        NodeError::Io(e) => PyIOError::new_err(e.to_string()),
        NodeError::Locked(path) => {
            PyRuntimeError::new_err(format!("data dir is locked: {}", path.display()))
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_rtype(rtype: &str) -> PyResult<RecordType> {
    RecordType::from_name(rtype)
        .ok_or_else(|| PyValueError::new_err(format!("unknown record type: {rtype}")))
}

/// Content id of a payload: base58 multihash of its sha-256, the same id
/// the store and the ledger bindings use.
#[pyfunction]
fn compute_cid(data: &[u8]) -> PyResult<String> {
    ddns_core::compute_cid(data)
        .map(|cid| cid.as_str().to_string())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An ed25519 signing key and the address derived from it.
#[pyclass(name = "KeyPair")]
struct PyKeyPair {
    inner: ddns_core::KeyPair,
}

#[pymethods]
impl PyKeyPair {
    /// Generate a fresh random key.
    #[new]
    fn new() -> Self {
        Self { inner: ddns_core::KeyPair::generate() }
    }

    /// Deterministic key from a 32-byte hex seed (tests, fixtures).
    #[staticmethod]
    fn from_seed_hex(seed: &str) -> PyResult<Self> {
        let bytes = hex::decode(seed).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| PyValueError::new_err("seed must be exactly 32 bytes of hex"))?;
        Ok(Self { inner: ddns_core::KeyPair::from_seed(seed) })
    }

    /// Load a key file written by `save` (or by `ddnsd keygen`).
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ddns_core::KeyPair::load(&path)
            .map(|inner| Self { inner })
            .map_err(PyValueError::new_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn address(&self) -> String {
        self.inner.address().as_str().to_string()
    }

    fn __repr__(&self) -> String {
        format!("KeyPair(address='{}')", self.inner.address().as_str())
    }
}

/// A running DNS server bound to a UDP port. Shuts down when dropped.
#[pyclass(name = "DnsServer")]
struct PyDnsServer {
    handle: Option<wire::ServerHandle>,
    address: String,
}

#[pymethods]
impl PyDnsServer {
    #[getter]
    fn address(&self) -> &str {
        &self.address
    }

    #[getter]
    fn port(&self) -> PyResult<u16> {
        match &self.handle {
            Some(handle) => Ok(handle.local_addr().port()),
            None => Err(PyRuntimeError::new_err("server already shut down")),
        }
    }

    /// Stop the worker threads and release the socket.
    fn shutdown(&mut self) {
        if let Some(mut handle) = self.handle.take() {
            handle.shutdown();
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "DnsServer(address='{}', running={})",
            self.address,
            self.handle.is_some()
        )
    }
}

/// Registration workflows signed by one key. Obtained from `Node.session`.
#[pyclass(name = "Registrar")]
struct PyRegistrar {
    inner: RegistrarSession,
}

#[pymethods]
impl PyRegistrar {
    #[getter]
    fn address(&self) -> String {
        self.inner.owner_address().as_str().to_string()
    }

    /// Claim a top-level domain ("xxx" becomes the XXX root asset).
    /// Returns the transaction id.
    fn register_tld(&self, tld: &str) -> PyResult<String> {
        self.inner.register_tld(tld).map_err(node_err)
    }

    /// Create `sub` under `tld`, owned by `owner` (defaults to this
    /// session's address). Returns the transaction id.
    #[pyo3(signature = (tld, sub, owner=None))]
    fn add_subdomain(&self, tld: &str, sub: &str, owner: Option<&str>) -> PyResult<String> {
        let owner = match owner {
            Some(text) => Address::parse(text).map_err(PyValueError::new_err)?,
            None => self.inner.owner_address().clone(),
        };
        self.inner.add_subdomain(tld, sub, &owner).map_err(node_err)
    }

    /// Store a record file (JSON text: one record object or an array) and
    /// bind the domain to it. Returns (cid, txid).
    fn set_record(&self, domain: &str, records_json: &str) -> PyResult<(String, String)> {
        let name = DomainName::parse(domain).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let file = RecordFile::decode(records_json.as_bytes())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let (cid, txid) = self.inner.set_record(&name, &file).map_err(node_err)?;
        Ok((cid.as_str().to_string(), txid))
    }

    /// `set_record` spelled out by parts: subdomain, tld, and the owner
    /// address the caller believes holds the name. The address must be
    /// this session's own, since that key signs the binding update.
    fn set_domain_record(
        &self,
        tld: &str,
        sub: &str,
        owner_address: &str,
        records_json: &str,
    ) -> PyResult<(String, String)> {
        if owner_address != self.inner.owner_address().as_str() {
            return Err(PyValueError::new_err(format!(
                "owner_address {owner_address} is not this session's address"
            )));
        }
        let domain = format!("{sub}.{tld}.{}", self.inner.root_suffix());
        self.set_record(&domain, records_json)
    }

    /// Point the domain at the deactivation sentinel. Returns the
    /// transaction id; the name turns NXDOMAIN once a block seals it.
    fn disable(&self, domain: &str) -> PyResult<String> {
        let name = DomainName::parse(domain).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.disable_subdomain(&name).map_err(node_err)
    }

    fn __repr__(&self) -> String {
        format!("Registrar(address='{}')", self.inner.owner_address().as_str())
    }
}

/// A ddns node: ledger, object store, and resolver over one data dir.
///
/// Usage from Python:
///
/// ```text
/// from ddns_py import Node, KeyPair
/// node = Node("ddns.json")
/// session = node.session(KeyPair.load("op.key"))
/// session.register_tld("xxx")
/// node.advance_block()
/// status, answers = node.resolve("www.xxx.ddns", "A")
/// ```
#[pyclass(name = "Node")]
struct PyNode {
    inner: Arc<Node>,
}

impl PyNode {
    fn open(config: Config) -> PyResult<Self> {
        let node = Node::open(config).map_err(node_err)?;
        Ok(Self { inner: Arc::new(node) })
    }
}

#[pymethods]
impl PyNode {
    /// Open the node described by a JSON config file. The data dir is
    /// created if needed and locked for exclusive use.
    #[new]
    fn new(config_path: PathBuf) -> PyResult<Self> {
        let config = Config::load(Path::new(&config_path))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::open(config)
    }

    /// Open a node from config JSON text instead of a file.
    #[staticmethod]
    fn from_config_json(text: &str) -> PyResult<Self> {
        let config = Config::from_json(text.as_bytes())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::open(config)
    }

    /// Registration session signing with the given key.
    fn session(&self, keypair: &PyKeyPair) -> PyRegistrar {
        PyRegistrar { inner: self.inner.session(keypair.inner.clone()) }
    }

    /// Seal the mempool into a block immediately (instead of waiting for
    /// the block interval). Returns the new chain height.
    fn advance_block(&self) -> PyResult<u64> {
        self.inner.advance_block().map_err(node_err)?;
        Ok(self.height())
    }

    #[getter]
    fn height(&self) -> u64 {
        self.inner.ledger().lock().expect("ledger lock").height()
    }

    /// Answer one query through the caching resolver. Returns
    /// (status, answers) where status is "NOERROR" / "NXDOMAIN" /
    /// "SERVFAIL" and each answer is (name, ttl, type, rdata).
    #[pyo3(signature = (name, rtype="A"))]
    fn resolve(
        &self,
        name: &str,
        rtype: &str,
    ) -> PyResult<(String, Vec<(String, u32, String, String)>)> {
        let qname = DomainName::parse(name).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let qtype = parse_rtype(rtype)?;
        let result = self.inner.resolver().resolve(&qname, qtype);
        let answers = result
            .answers
            .iter()
            .map(|answer| {
                let rdata = match &answer.data {
                    AnswerData::A(ip) => ip.to_string(),
                    AnswerData::Aaaa(ip) => ip.to_string(),
                    AnswerData::Cname(target) => target.to_string(),
                    AnswerData::Mx { preference, exchange } => {
                        format!("{preference} {exchange}")
                    }
                    AnswerData::Tlsa { usage, selector, matching_type, cert } => {
                        format!("{usage} {selector} {matching_type} {}", hex::encode(cert))
                    }
                    AnswerData::Raw(bytes) => hex::encode(bytes),
                };
                (
                    answer.name.to_string(),
                    answer.ttl,
                    answer.rtype.to_string(),
                    rdata,
                )
            })
            .collect();
        Ok((result.rcode.to_string(), answers))
    }

    /// Start answering DNS queries over UDP. With no argument the bind
    /// address comes from the config; pass e.g. "127.0.0.1:0" to pick an
    /// ephemeral port.
    #[pyo3(signature = (bind=None))]
    fn serve(&self, bind: Option<&str>) -> PyResult<PyDnsServer> {
        let addr = match bind {
            Some(text) => text
                .parse()
                .map_err(|_| PyValueError::new_err(format!("bad bind address: {text}")))?,
            None => self
                .inner
                .config()
                .bind_addr()
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
        };
        let options = ServeOptions { bind: addr, ..ServeOptions::default() };
        let handle = wire::serve(self.inner.resolver(), options)
            .map_err(|e| PyIOError::new_err(e.to_string()))?;
        let address = handle.local_addr().to_string();
        Ok(PyDnsServer { handle: Some(handle), address })
    }

    /// Current node statistics as a JSON string (same shape as the
    /// stats.json snapshot the daemon writes).
    fn stats_json(&self) -> String {
        serde_json::to_string(&self.inner.stats()).expect("stats serialize")
    }

    /// Store integrity check: returns (checked, mismatched, unreadable).
    fn fsck(&self) -> PyResult<(usize, Vec<String>, Vec<String>)> {
        let report = self.inner.store().fsck().map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((report.checked, report.mismatched, report.unreadable))
    }

    fn __repr__(&self) -> String {
        format!(
            "Node(data_dir='{}', height={})",
            self.inner.config().data_dir.display(),
            self.height()
        )
    }
}

#[pymodule]
fn ddns_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(compute_cid, m)?)?;
    m.add_class::<PyKeyPair>()?;
    m.add_class::<PyNode>()?;
    m.add_class::<PyRegistrar>()?;
    m.add_class::<PyDnsServer>()?;
    Ok(())
}
