//! The resolution engine.
//!
//! Names under the root suffix resolve through ledger binding lookup and
//! content-store fetch; everything else is forwarded upstream. Results are
//! cached per (name, qtype) with LRU eviction and TTL freshness, and every
//! backend touch is counted so cache behavior is observable.

mod upstream;

pub use upstream::UdpForwarder;

use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::domain::{
    AssetPath, Binding, ContentId, DnsRecord, DomainName, RecordFile, RecordType,
};
use crate::ledger::{Ledger, LedgerError};
use crate::store::{LocalStore, StoreError};

/// Resolver tuning; defaults match the deployment described in the README.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolverConfig {
    pub root_suffix: String,
    pub upstream: String,
    pub cache_capacity: usize,
    pub negative_ttl: u32,
    pub cname_chase_limit: u32,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        Self {
            root_suffix: "ddns".to_string(),
            upstream: "1.1.1.1:53".to_string(),
            cache_capacity: 4096,
            negative_ttl: 30,
            cname_chase_limit: 8,
        }
    }
}

impl ResolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.cname_chase_limit < 1 {
            return Err("cname_chase_limit must be at least 1".into());
        }
        if self.cache_capacity < 1 {
            return Err("cache_capacity must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Ddns,
    Traditional,
}

/// A name is DDNS iff its last label equals the root suffix.
pub fn classify(name: &DomainName, root_suffix: &str) -> Classification {
    if name.is_under(root_suffix) {
        Classification::Ddns
    } else {
        Classification::Traditional
    }
}

/// Response codes the resolver can produce. Wire-level FormErr/NotImp are
/// the server's business, not the resolver's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rcode {
    NoError,
    NxDomain,
    ServFail,
}

impl fmt::Display for Rcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rcode::NoError => f.write_str("NOERROR"),
            Rcode::NxDomain => f.write_str("NXDOMAIN"),
            Rcode::ServFail => f.write_str("SERVFAIL"),
        }
    }
}

/// Typed rdata of one answer record.
#[derive(Debug, Clone, PartialEq)]
pub enum AnswerData {
    A(Ipv4Addr),
    Aaaa(Ipv6Addr),
    Cname(DomainName),
    Mx { preference: u16, exchange: DomainName },
    Tlsa { usage: u8, selector: u8, matching_type: u8, cert: Vec<u8> },
    /// Verbatim rdata of types this artifact does not model (kept so
    /// forwarded upstream answers relay unchanged).
    Raw(Vec<u8>),
}

/// One answer record.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub name: DomainName,
    pub rtype: RecordType,
    pub ttl: u32,
    pub data: AnswerData,
}

/// What a query produced: rcode, answers, and the chain of names the
/// resolver walked (length 1 unless CNAMEs were chased).
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionResult {
    pub rcode: Rcode,
    pub answers: Vec<Answer>,
    pub cname_chain: Vec<DomainName>,
}

impl ResolutionResult {
    fn empty(rcode: Rcode, cname_chain: Vec<DomainName>) -> Self {
        Self { rcode, answers: Vec::new(), cname_chain }
    }
}

/// Read access to confirmed ledger state.
pub trait LedgerReader: Send + Sync {
    fn get_binding(&self, path: &AssetPath) -> Result<Binding, LedgerError>;
}

impl LedgerReader for Mutex<Ledger> {
    fn get_binding(&self, path: &AssetPath) -> Result<Binding, LedgerError> {
        self.lock().expect("ledger lock").get_binding(path)
    }
}

/// Read access to stored record files.
pub trait ContentFetcher: Send + Sync {
    fn fetch(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError>;
}

impl ContentFetcher for LocalStore {
    fn fetch(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError> {
        self.get(cid)
    }
}

#[derive(Debug)]
pub struct UpstreamError(pub String);

/// Transport for traditional queries.
pub trait Upstream: Send + Sync {
    fn forward(
        &self,
        name: &DomainName,
        qtype: RecordType,
    ) -> Result<(Rcode, Vec<Answer>), UpstreamError>;
}

/// Instrumentation counters; a repeated cached query must show zero
/// ledger reads and zero store fetches, and these make that observable.
#[derive(Default)]
pub struct Counters {
    pub queries: AtomicU64,
    pub cache_hits: AtomicU64,
    pub cache_misses: AtomicU64,
    pub ledger_reads: AtomicU64,
    pub store_fetches: AtomicU64,
    pub upstream_forwards: AtomicU64,
    pub servfails: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub queries: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub ledger_reads: u64,
    pub store_fetches: u64,
    pub upstream_forwards: u64,
    pub servfails: u64,
}

impl Counters {
    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            queries: self.queries.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            cache_misses: self.cache_misses.load(Ordering::Relaxed),
            ledger_reads: self.ledger_reads.load(Ordering::Relaxed),
            store_fetches: self.store_fetches.load(Ordering::Relaxed),
            upstream_forwards: self.upstream_forwards.load(Ordering::Relaxed),
            servfails: self.servfails.load(Ordering::Relaxed),
        }
    }

    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

struct CacheEntry {
    result: ResolutionResult,
    inserted: Instant,
    ttl: u32,
}

impl CacheEntry {
    /// Strict inequality: a zero TTL is never fresh, which makes caching
    /// fully transparent when records opt out.
    fn is_fresh(&self, now: Instant) -> bool {
        now.duration_since(self.inserted).as_secs() < u64::from(self.ttl)
    }
}

type CacheKey = (String, u16);

/// Thread-safe caching resolver/forwarder. Query paths never mutate the
/// ledger or the store.
pub struct Resolver {
    cfg: ResolverConfig,
    ledger: Arc<dyn LedgerReader>,
    store: Arc<dyn ContentFetcher>,
    upstream: Arc<dyn Upstream>,
    cache: Mutex<LruCache<CacheKey, CacheEntry>>,
    counters: Counters,
}

impl Resolver {
    pub fn new(
        cfg: ResolverConfig,
        ledger: Arc<dyn LedgerReader>,
        store: Arc<dyn ContentFetcher>,
        upstream: Arc<dyn Upstream>,
    ) -> Self {
        let capacity = NonZeroUsize::new(cfg.cache_capacity.max(1)).expect("nonzero");
        Self {
            cfg,
            ledger,
            store,
            upstream,
            cache: Mutex::new(LruCache::new(capacity)),
            counters: Counters::default(),
        }
    }

    pub fn config(&self) -> &ResolverConfig {
        &self.cfg
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Cache-first resolution. ServFail results are never cached, so a
    /// transient fault does not outlive its cause.
    pub fn resolve(&self, name: &DomainName, qtype: RecordType) -> ResolutionResult {
        Counters::bump(&self.counters.queries);
        let key: CacheKey = (name.to_string(), qtype.code());
        let now = Instant::now();
        {
            let mut cache = self.cache.lock().expect("cache lock");
            if let Some(entry) = cache.get(&key) {
                if entry.is_fresh(now) {
                    Counters::bump(&self.counters.cache_hits);
                    return entry.result.clone();
                }
                cache.pop(&key);
            }
        }
        Counters::bump(&self.counters.cache_misses);

        let result = self.resolve_uncached(name, qtype);
        if result.rcode == Rcode::ServFail {
            Counters::bump(&self.counters.servfails);
        } else {
            let ttl = self.cache_ttl(&result);
            let entry = CacheEntry { result: result.clone(), inserted: now, ttl };
            self.cache.lock().expect("cache lock").put(key, entry);
        }
        result
    }

    /// Positive results live for their smallest answer TTL; empty and
    /// NxDomain results live for the configured negative TTL.
    fn cache_ttl(&self, result: &ResolutionResult) -> u32 {
        result
            .answers
            .iter()
            .map(|a| a.ttl)
            .min()
            .unwrap_or(self.cfg.negative_ttl)
    }

    /// Drops every cached qtype for a name (e.g. after its binding moved).
    pub fn invalidate(&self, name: &DomainName) {
        let target = name.to_string();
        let mut cache = self.cache.lock().expect("cache lock");
        let keys: Vec<CacheKey> = cache
            .iter()
            .filter(|((n, _), _)| *n == target)
            .map(|(k, _)| k.clone())
            .collect();
        for key in keys {
            cache.pop(&key);
        }
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    fn resolve_uncached(&self, name: &DomainName, qtype: RecordType) -> ResolutionResult {
        let mut chain = Vec::new();
        match classify(name, &self.cfg.root_suffix) {
            Classification::Ddns => {
                self.resolve_ddns(name, qtype, self.cfg.cname_chase_limit, &mut chain)
            }
            Classification::Traditional => {
                chain.push(name.clone());
                let (rcode, answers) = self.forward(name, qtype);
                ResolutionResult { rcode, answers, cname_chain: chain }
            }
        }
    }

    fn forward(&self, name: &DomainName, qtype: RecordType) -> (Rcode, Vec<Answer>) {
        Counters::bump(&self.counters.upstream_forwards);
        match self.upstream.forward(name, qtype) {
            Ok((rcode, answers)) => (rcode, answers),
            Err(UpstreamError(reason)) => {
                log::debug!("upstream failure for {name}: {reason}");
                (Rcode::ServFail, Vec::new())
            }
        }
    }

    /// Ledger + store resolution with CNAME chasing. `budget` is the number
    /// of chase steps left; exceeding it is a ServFail (availability fault),
    /// so adversarial record files cannot loop the resolver.
    fn resolve_ddns(
        &self,
        name: &DomainName,
        qtype: RecordType,
        budget: u32,
        chain: &mut Vec<DomainName>,
    ) -> ResolutionResult {
        chain.push(name.clone());

        let path = match name.to_asset_path(&self.cfg.root_suffix) {
            Ok(path) => path,
            // Under the suffix but not mappable (bare root, or segments
            // outside the label charset): no asset can exist for it.
            Err(_) => return ResolutionResult::empty(Rcode::NxDomain, chain.clone()),
        };

        Counters::bump(&self.counters.ledger_reads);
        let binding = match self.ledger.get_binding(&path) {
            Ok(binding) => binding,
            Err(LedgerError::UnknownAsset(_)) => {
                return ResolutionResult::empty(Rcode::NxDomain, chain.clone())
            }
            Err(e) => {
                log::warn!("ledger read failed for {path}: {e}");
                return ResolutionResult::empty(Rcode::ServFail, chain.clone());
            }
        };

        let cid = match binding {
            // Registered but unconfigured: the name provably exists, so
            // this is success with nothing to say, not NxDomain.
            Binding::Initial => {
                return ResolutionResult::empty(Rcode::NoError, chain.clone())
            }
            Binding::Deactivated => {
                return ResolutionResult::empty(Rcode::NxDomain, chain.clone())
            }
            Binding::Active(cid) => cid,
        };

        Counters::bump(&self.counters.store_fetches);
        let bytes = match self.store.fetch(&cid) {
            Ok(bytes) => bytes,
            Err(e) => {
                log::warn!("content fetch failed for {name} ({cid}): {e}");
                return ResolutionResult::empty(Rcode::ServFail, chain.clone());
            }
        };
        let file = match RecordFile::decode(&bytes) {
            Ok(file) => file,
            Err(e) => {
                log::warn!("record file for {name} is malformed: {e}");
                return ResolutionResult::empty(Rcode::ServFail, chain.clone());
            }
        };

        let mut direct = Vec::new();
        for record in &file.records {
            if record.record_type() != Some(qtype) {
                continue;
            }
            match build_answer(name, record, file.ttl_for(record)) {
                Ok(answer) => direct.push(answer),
                Err(reason) => {
                    log::warn!("unencodable record for {name}: {reason}");
                    return ResolutionResult::empty(Rcode::ServFail, chain.clone());
                }
            }
        }
        if !direct.is_empty() {
            return ResolutionResult {
                rcode: Rcode::NoError,
                answers: direct,
                cname_chain: chain.clone(),
            };
        }

        // No direct match: chase a CNAME if one is present.
        let cname = file.records.iter().find_map(|r| match r {
            DnsRecord::Cname { target } => Some((target.clone(), file.ttl_for(r))),
            _ => None,
        });
        if let (Some((target_text, cname_ttl)), false) = (cname, qtype == RecordType::Cname) {
            let target = match DomainName::parse(&target_text) {
                Ok(target) => target,
                Err(e) => {
                    log::warn!("bad CNAME target {target_text:?} for {name}: {e}");
                    return ResolutionResult::empty(Rcode::ServFail, chain.clone());
                }
            };
            if budget == 0 {
                log::warn!("CNAME chase limit hit at {name} -> {target}");
                return ResolutionResult::empty(Rcode::ServFail, chain.clone());
            }
            let mut answers = vec![Answer {
                name: name.clone(),
                rtype: RecordType::Cname,
                ttl: cname_ttl,
                data: AnswerData::Cname(target.clone()),
            }];
            let sub = match classify(&target, &self.cfg.root_suffix) {
                Classification::Ddns => self.resolve_ddns(&target, qtype, budget - 1, chain),
                Classification::Traditional => {
                    chain.push(target.clone());
                    let (rcode, forwarded) = self.forward(&target, qtype);
                    ResolutionResult { rcode, answers: forwarded, cname_chain: chain.clone() }
                }
            };
            answers.extend(sub.answers);
            return ResolutionResult {
                rcode: sub.rcode,
                answers,
                cname_chain: chain.clone(),
            };
        }

        // Name resolves, nothing of the requested type.
        ResolutionResult::empty(Rcode::NoError, chain.clone())
    }
}

/// Converts a stored record into a wire-facing answer. Host names inside
/// records (CNAME target, MX exchange) must parse; a failure is a data
/// fault surfaced as ServFail by the caller.
fn build_answer(name: &DomainName, record: &DnsRecord, ttl: u32) -> Result<Answer, String> {
    let (rtype, data) = match record {
        DnsRecord::A { address } => (RecordType::A, AnswerData::A(*address)),
        DnsRecord::Aaaa { address } => (RecordType::Aaaa, AnswerData::Aaaa(*address)),
        DnsRecord::Cname { target } => {
            let target = DomainName::parse(target).map_err(|e| e.to_string())?;
            (RecordType::Cname, AnswerData::Cname(target))
        }
        DnsRecord::Mx { mail_server, priority, .. } => {
            let exchange = DomainName::parse(mail_server).map_err(|e| e.to_string())?;
            (RecordType::Mx, AnswerData::Mx { preference: *priority, exchange })
        }
        DnsRecord::Tlsa { usage, selector, matching_type, cert_data } => {
            let cert = hex::decode(cert_data).map_err(|e| e.to_string())?;
            (
                RecordType::Tlsa,
                AnswerData::Tlsa {
                    usage: *usage,
                    selector: *selector,
                    matching_type: *matching_type,
                    cert,
                },
            )
        }
        DnsRecord::Extension { type_name, .. } => {
            return Err(format!("extension record {type_name} has no wire form"))
        }
    };
    Ok(Answer { name: name.clone(), rtype, ttl, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DnsRecord;
    use crate::ledger::{Amount, KeyPair, LedgerParams};
    use std::collections::BTreeMap;
    use std::collections::HashMap;
    use tempfile::TempDir;

    fn name(text: &str) -> DomainName {
        DomainName::parse(text).unwrap()
    }

    /// Upstream stub: fixed answers per (name, qtype), everything else
    /// NxDomain; optionally fails outright.
    #[derive(Default)]
    struct StubUpstream {
        table: HashMap<(String, u16), Vec<Answer>>,
        unreachable: bool,
    }

    impl StubUpstream {
        fn with_a(mut self, qname: &str, addr: &str) -> Self {
            self.table.insert(
                (qname.to_string(), RecordType::A.code()),
                vec![Answer {
                    name: name(qname),
                    rtype: RecordType::A,
                    ttl: 300,
                    data: AnswerData::A(addr.parse().unwrap()),
                }],
            );
            self
        }
    }

    impl Upstream for StubUpstream {
        fn forward(
            &self,
            qname: &DomainName,
            qtype: RecordType,
        ) -> Result<(Rcode, Vec<Answer>), UpstreamError> {
            if self.unreachable {
                return Err(UpstreamError("stub is down".into()));
            }
            match self.table.get(&(qname.to_string(), qtype.code())) {
                Some(answers) => Ok((Rcode::NoError, answers.clone())),
                None => Ok((Rcode::NxDomain, Vec::new())),
            }
        }
    }

    struct Harness {
        resolver: Resolver,
        ledger: Arc<Mutex<Ledger>>,
        store: Arc<LocalStore>,
        keypair: KeyPair,
        _dir: TempDir,
    }

    impl Harness {
        fn new(upstream: StubUpstream) -> Self {
            Self::with_config(upstream, ResolverConfig::default())
        }

        fn with_config(upstream: StubUpstream, cfg: ResolverConfig) -> Self {
            let dir = TempDir::new().unwrap();
            let keypair = KeyPair::from_seed([1; 32]);
            let genesis = BTreeMap::from([(keypair.address(), Amount::from_phi(1000))]);
            let ledger =
                Arc::new(Mutex::new(Ledger::new(LedgerParams::default(), genesis).unwrap()));
            let store = Arc::new(LocalStore::open(dir.path()).unwrap());
            let resolver = Resolver::new(
                cfg,
                Arc::clone(&ledger) as Arc<dyn LedgerReader>,
                Arc::clone(&store) as Arc<dyn ContentFetcher>,
                Arc::new(upstream),
            );
            Self { resolver, ledger, store, keypair, _dir: dir }
        }

        /// Registers a domain and binds the given record file, confirmed.
        fn bind(&self, domain: &str, file: &RecordFile) -> ContentId {
            let bytes = file.encode();
            let cid = self.store.put(&bytes).unwrap();
            self.bind_cid(domain, Binding::Active(cid.clone()));
            cid
        }

        /// Creates the asset chain for `domain` (root plus segments) and,
        /// unless asked for the Initial state creation already provides,
        /// confirms the given binding.
        fn bind_cid(&self, domain: &str, binding: Binding) {
            let dn = name(domain);
            let path = dn.to_asset_path("ddns").unwrap();
            let mut ledger = self.ledger.lock().unwrap();
            let root = AssetPath::root_only(path.root()).unwrap();
            if ledger.asset(&root).is_none() {
                ledger
                    .create_root_asset(&root, &self.keypair.address(), &self.keypair)
                    .unwrap();
            }
            let mut cursor = root;
            for segment in path.subpath() {
                let child = cursor.child(segment).unwrap();
                if ledger.asset(&child).is_none() {
                    ledger
                        .create_sub_asset(&cursor, segment, &self.keypair.address(), &self.keypair)
                        .unwrap();
                }
                cursor = child;
            }
            let now = ledger.height() + 1;
            ledger.produce_block(now).unwrap();
            if binding != Binding::Initial {
                ledger.set_binding(&path, binding, &self.keypair).unwrap();
                let now = ledger.height() + 1;
                ledger.produce_block(now).unwrap();
            }
        }
    }

    fn a_file(addr: &str) -> RecordFile {
        RecordFile::new(vec![DnsRecord::A { address: addr.parse().unwrap() }]).unwrap()
    }

    fn cname_file(target: &str) -> RecordFile {
        RecordFile::new(vec![DnsRecord::Cname { target: target.to_string() }]).unwrap()
    }

    #[test]
    fn classifies_by_root_suffix() {
        assert_eq!(classify(&name("www.xxx.ddns"), "ddns"), Classification::Ddns);
        assert_eq!(classify(&name("example.com"), "ddns"), Classification::Traditional);
        assert_eq!(classify(&name("ddns"), "ddns"), Classification::Ddns);
    }

    #[test]
    fn resolves_a_record_end_to_end() {
        let h = Harness::new(StubUpstream::default());
        h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        let result = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(result.answers.len(), 1);
        assert_eq!(result.answers[0].data, AnswerData::A("1.2.3.4".parse().unwrap()));
        assert_eq!(result.answers[0].ttl, 60);
        assert_eq!(result.cname_chain, vec![name("www.xxx.ddns")]);
    }

    #[test]
    fn initial_binding_is_noerror_empty() {
        let h = Harness::new(StubUpstream::default());
        h.bind_cid("new.xxx.ddns", Binding::Initial);
        let result = h.resolver.resolve(&name("new.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NoError);
        assert!(result.answers.is_empty());
    }

    #[test]
    fn deactivated_and_unknown_are_nxdomain() {
        let h = Harness::new(StubUpstream::default());
        h.bind_cid("gone.xxx.ddns", Binding::Deactivated);
        let result = h.resolver.resolve(&name("gone.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NxDomain);
        assert!(result.answers.is_empty());

        let result = h.resolver.resolve(&name("nothere.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NxDomain);

        // Bare root suffix cannot map to an asset.
        let result = h.resolver.resolve(&name("ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NxDomain);
    }

    #[test]
    fn wrong_qtype_on_live_name_is_noerror_empty() {
        let h = Harness::new(StubUpstream::default());
        h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        let result = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::Other(16));
        assert_eq!(result.rcode, Rcode::NoError);
        assert!(result.answers.is_empty());
    }

    #[test]
    fn traditional_names_are_forwarded() {
        let h = Harness::new(StubUpstream::default().with_a("example.com", "93.184.216.34"));
        let result = h.resolver.resolve(&name("example.com"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(
            result.answers[0].data,
            AnswerData::A("93.184.216.34".parse().unwrap())
        );
        assert_eq!(h.resolver.counters().snapshot().upstream_forwards, 1);
        assert_eq!(h.resolver.counters().snapshot().ledger_reads, 0);
    }

    #[test]
    fn unreachable_upstream_is_servfail_and_uncached() {
        let h = Harness::new(StubUpstream { unreachable: true, ..Default::default() });
        let result = h.resolver.resolve(&name("example.com"), RecordType::A);
        assert_eq!(result.rcode, Rcode::ServFail);
        h.resolver.resolve(&name("example.com"), RecordType::A);
        // Both attempts hit the upstream: failures are not cached.
        assert_eq!(h.resolver.counters().snapshot().upstream_forwards, 2);
        assert_eq!(h.resolver.counters().snapshot().servfails, 2);
    }

    #[test]
    fn cname_chases_into_ddns_namespace() {
        let h = Harness::new(StubUpstream::default());
        h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        h.bind("alias.xxx.ddns", &cname_file("www.xxx.ddns"));
        let result = h.resolver.resolve(&name("alias.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(result.answers.len(), 2);
        assert_eq!(result.answers[0].rtype, RecordType::Cname);
        assert_eq!(result.answers[1].data, AnswerData::A("1.2.3.4".parse().unwrap()));
        assert_eq!(
            result.cname_chain,
            vec![name("alias.xxx.ddns"), name("www.xxx.ddns")]
        );
    }

    #[test]
    fn cname_chases_out_to_traditional_namespace() {
        let h = Harness::new(StubUpstream::default().with_a("example.com", "93.184.216.34"));
        h.bind("ext.xxx.ddns", &cname_file("example.com"));
        let result = h.resolver.resolve(&name("ext.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(result.answers.len(), 2);
        assert_eq!(
            result.answers[1].data,
            AnswerData::A("93.184.216.34".parse().unwrap())
        );
        assert_eq!(h.resolver.counters().snapshot().upstream_forwards, 1);
    }

    #[test]
    fn cname_query_returns_the_cname_itself() {
        let h = Harness::new(StubUpstream::default());
        h.bind("alias.xxx.ddns", &cname_file("www.xxx.ddns"));
        let result = h.resolver.resolve(&name("alias.xxx.ddns"), RecordType::Cname);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(result.answers.len(), 1);
        assert_eq!(result.answers[0].rtype, RecordType::Cname);
    }

    #[test]
    fn cname_loop_terminates_with_servfail() {
        let h = Harness::new(StubUpstream::default());
        h.bind("a.xxx.ddns", &cname_file("b.xxx.ddns"));
        h.bind("b.xxx.ddns", &cname_file("a.xxx.ddns"));
        let result = h.resolver.resolve(&name("a.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::ServFail);
        // Chain bounded by the chase limit (8 chases = 9 names).
        assert!(result.cname_chain.len() <= 9);
    }

    #[test]
    fn second_query_is_served_from_cache_with_zero_backend_reads() {
        let h = Harness::new(StubUpstream::default());
        h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        let first = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        let before = h.resolver.counters().snapshot();
        let second = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        let after = h.resolver.counters().snapshot();
        assert_eq!(first, second);
        assert_eq!(after.ledger_reads, before.ledger_reads);
        assert_eq!(after.store_fetches, before.store_fetches);
        assert_eq!(after.cache_hits, before.cache_hits + 1);
    }

    #[test]
    fn invalidate_forces_a_fresh_read() {
        let h = Harness::new(StubUpstream::default());
        h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        let first = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        assert_eq!(first.answers[0].data, AnswerData::A("1.2.3.4".parse().unwrap()));

        // Rebind to a new record; the cached answer would be stale.
        let file = a_file("5.6.7.8");
        let cid = h.store.put(&file.encode()).unwrap();
        {
            let mut ledger = h.ledger.lock().unwrap();
            let path = name("www.xxx.ddns").to_asset_path("ddns").unwrap();
            ledger
                .set_binding(&path, Binding::Active(cid), &h.keypair)
                .unwrap();
            let height = ledger.height();
            ledger.produce_block(height + 1).unwrap();
        }
        let stale = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        assert_eq!(stale.answers[0].data, AnswerData::A("1.2.3.4".parse().unwrap()));

        h.resolver.invalidate(&name("www.xxx.ddns"));
        let fresh = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        assert_eq!(fresh.answers[0].data, AnswerData::A("5.6.7.8".parse().unwrap()));

        // Invalidating something uncached is a no-op.
        h.resolver.invalidate(&name("never.seen.ddns"));
    }

    #[test]
    fn zero_ttl_answers_are_never_served_from_cache() {
        // Only MX records carry a persisted TTL, so TTL=0 arrives via MX.
        let h = Harness::new(StubUpstream::default());
        let file = RecordFile::new(vec![DnsRecord::Mx {
            mail_server: "mail.example.com".into(),
            ttl: 0,
            priority: 10,
        }])
        .unwrap();
        h.bind("mail.xxx.ddns", &file);
        let first = h.resolver.resolve(&name("mail.xxx.ddns"), RecordType::Mx);
        let second = h.resolver.resolve(&name("mail.xxx.ddns"), RecordType::Mx);
        assert_eq!(first, second);
        let counters = h.resolver.counters().snapshot();
        assert_eq!(counters.cache_hits, 0);
        assert_eq!(counters.ledger_reads, 2);
        assert_eq!(counters.store_fetches, 2);
    }

    #[test]
    fn corrupted_object_yields_servfail_not_wrong_data() {
        let h = Harness::new(StubUpstream::default());
        let cid = h.bind("www.xxx.ddns", &a_file("1.2.3.4"));
        let path = h._dir.path().join("objects").join(cid.as_str());
        std::fs::write(&path, br#"{"Type":"A","Address":"6.6.6.6"}"#).unwrap();
        let result = h.resolver.resolve(&name("www.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::ServFail);
        assert!(result.answers.is_empty());
    }

    #[test]
    fn malformed_record_file_is_servfail() {
        let h = Harness::new(StubUpstream::default());
        let cid = h.store.put(b"not json at all").unwrap();
        h.bind_cid("bad.xxx.ddns", Binding::Active(cid));
        let result = h.resolver.resolve(&name("bad.xxx.ddns"), RecordType::A);
        assert_eq!(result.rcode, Rcode::ServFail);
    }

    #[test]
    fn mx_answers_carry_their_own_ttl_and_preference() {
        let h = Harness::new(StubUpstream::default());
        let file = RecordFile::new(vec![DnsRecord::Mx {
            mail_server: "mail.example.com".into(),
            ttl: 3600,
            priority: 10,
        }])
        .unwrap();
        h.bind("mail.xxx.ddns", &file);
        let result = h.resolver.resolve(&name("mail.xxx.ddns"), RecordType::Mx);
        assert_eq!(result.rcode, Rcode::NoError);
        assert_eq!(result.answers[0].ttl, 3600);
        assert_eq!(
            result.answers[0].data,
            AnswerData::Mx { preference: 10, exchange: name("mail.example.com") }
        );
    }

    #[test]
    fn multiple_records_return_in_file_order() {
        let h = Harness::new(StubUpstream::default());
        let file = RecordFile::new(vec![
            DnsRecord::A { address: "10.0.0.1".parse().unwrap() },
            DnsRecord::A { address: "10.0.0.2".parse().unwrap() },
        ])
        .unwrap();
        h.bind("multi.xxx.ddns", &file);
        let result = h.resolver.resolve(&name("multi.xxx.ddns"), RecordType::A);
        assert_eq!(result.answers.len(), 2);
        assert_eq!(result.answers[0].data, AnswerData::A("10.0.0.1".parse().unwrap()));
        assert_eq!(result.answers[1].data, AnswerData::A("10.0.0.2".parse().unwrap()));
    }

    #[test]
    fn cache_capacity_is_bounded_lru() {
        let cfg = ResolverConfig { cache_capacity: 2, ..ResolverConfig::default() };
        let h = Harness::with_config(StubUpstream::default(), cfg);
        h.bind("a.xxx.ddns", &a_file("10.0.0.1"));
        h.bind("b.xxx.ddns", &a_file("10.0.0.2"));
        h.bind("c.xxx.ddns", &a_file("10.0.0.3"));
        h.resolver.resolve(&name("a.xxx.ddns"), RecordType::A);
        h.resolver.resolve(&name("b.xxx.ddns"), RecordType::A);
        h.resolver.resolve(&name("c.xxx.ddns"), RecordType::A); // evicts a
        let before = h.resolver.counters().snapshot();
        h.resolver.resolve(&name("a.xxx.ddns"), RecordType::A);
        let after = h.resolver.counters().snapshot();
        assert_eq!(after.cache_misses, before.cache_misses + 1);
    }
}
