//! `ddnsd`: the DNS proxy daemon plus the registration, lookup, bench,
//! and monitoring commands around it.
//!
//! Every command reads one JSON config (flag `--config` or env
//! `DDNS_CONFIG`, defaults otherwise), prints machine-readable output on
//! stdout, and reserves stderr for logs. One-shot registration commands
//! seal a block before exiting so their effect is immediately resolvable.

use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};

use ddns_core::config::{Config, ConfigError};
use ddns_core::domain::{DomainName, RecordFile, RecordType};
use ddns_core::ledger::{capacity_tps, Amount, KeyPair, Ledger};
use ddns_core::node::{Node, NodeError};
use ddns_core::resolver::{Answer, AnswerData};
use ddns_core::rpc::RpcEnvelope;
use ddns_core::wire::{self, ServeOptions, WireQuery};
use ddns_core::{AssetPath, Binding, ContentId};

mod exit_code {
    pub const GENERAL: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const KEY: u8 = 3;
    pub const LEDGER: u8 = 4;
    pub const STORE: u8 = 5;
    pub const RESOLUTION: u8 = 6;
    pub const BIND: u8 = 7;
    pub const LOCKED: u8 = 8;
    pub const RECORD: u8 = 9;
}

#[derive(Parser)]
#[command(
    name = "ddnsd",
    version,
    about = "blockchain-backed DNS: proxy daemon, registrar, and tools"
)]
struct Cli {
    /// JSON config file; the DDNS_CONFIG env var works too.
    #[arg(long, global = true, env = "DDNS_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the DNS proxy daemon until interrupted.
    Serve {
        /// UDP port to answer on (overrides the config).
        #[arg(long)]
        port: Option<u16>,
        /// Upstream resolver for traditional names, host[:port].
        #[arg(long)]
        upstream: Option<String>,
        /// Name suffix treated as on-chain (overrides the config).
        #[arg(long)]
        root_suffix: Option<String>,
    },
    /// Generate a signing key and write it to a file.
    Keygen {
        #[arg(long, value_name = "FILE")]
        key_file: PathBuf,
    },
    /// Claim a new top-level domain.
    RegisterTld {
        tld: String,
        #[arg(long, value_name = "FILE")]
        key_file: Option<PathBuf>,
    },
    /// Create a subdomain under a tld the key owns.
    AddSubdomain {
        tld: String,
        sub: String,
        /// Owner address for the new subdomain (defaults to the key's).
        #[arg(long)]
        owner: Option<String>,
        #[arg(long, value_name = "FILE")]
        key_file: Option<PathBuf>,
    },
    /// Upload a record file and point a domain at it.
    SetRecord {
        domain: String,
        /// Path to the JSON record file.
        records: PathBuf,
        #[arg(long, value_name = "FILE")]
        key_file: Option<PathBuf>,
    },
    /// Deactivate a domain; it resolves as NXDOMAIN afterwards.
    Disable {
        domain: String,
        #[arg(long, value_name = "FILE")]
        key_file: Option<PathBuf>,
    },
    /// Look a name up, in process by default.
    Resolve {
        name: String,
        /// Record type: A, AAAA, CNAME, MX, TLSA, NS, or a number.
        #[arg(default_value = "A")]
        rtype: String,
        /// Ask a running server over wire DNS instead, host:port.
        #[arg(long, value_name = "ADDR")]
        via_server: Option<String>,
        #[arg(long)]
        upstream: Option<String>,
        #[arg(long)]
        root_suffix: Option<String>,
    },
    /// Pack calibrated transactions into simulated blocks and report
    /// throughput against the configured capacity.
    Bench {
        /// Number of full blocks to pack.
        #[arg(long, default_value_t = 3)]
        blocks: u64,
    },
    /// Print the latest stats snapshot written by the daemon.
    Stats,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(exit_code::CONFIG, e.to_string())
    }
}

impl From<NodeError> for CliError {
    fn from(e: NodeError) -> Self {
        let code = match &e {
            NodeError::Config(_) => exit_code::CONFIG,
            NodeError::Ledger(_) => exit_code::LEDGER,
            NodeError::Store(_) => exit_code::STORE,
            NodeError::Locked(_) => exit_code::LOCKED,
            NodeError::Domain(_) | NodeError::Record(_) => exit_code::RECORD,
            NodeError::Io(_) => exit_code::GENERAL,
        };
        Self::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ddnsd: {}", e.message);
            println!("{}", RpcEnvelope::failure(1, &e.message).render());
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { port, upstream, root_suffix } => {
            cmd_serve(override_net(config, port, upstream, root_suffix))
        }
        Command::Keygen { key_file } => cmd_keygen(&key_file),
        Command::RegisterTld { tld, key_file } => {
            with_session(config, key_file, |node, session| {
                let txid = session.register_tld(&tld)?;
                node.advance_block()?;
                Ok(RpcEnvelope::txid(1, &txid))
            })
        }
        Command::AddSubdomain { tld, sub, owner, key_file } => {
            with_session(config, key_file, |node, session| {
                let owner = match owner {
                    Some(text) => ddns_core::Address::parse(&text).map_err(|e| {
                        CliError::new(exit_code::CONFIG, format!("--owner: {e}"))
                    })?,
                    None => session.owner_address().clone(),
                };
                let txid = session.add_subdomain(&tld, &sub, &owner)?;
                node.advance_block()?;
                Ok(RpcEnvelope::txid(1, &txid))
            })
        }
        Command::SetRecord { domain, records, key_file } => {
            let bytes = std::fs::read(&records).map_err(|e| {
                CliError::new(exit_code::RECORD, format!("{}: {e}", records.display()))
            })?;
            let file = RecordFile::decode(&bytes).map_err(|e| {
                CliError::new(exit_code::RECORD, format!("{}: {e}", records.display()))
            })?;
            let name = parse_name(&domain)?;
            with_session(config, key_file, |node, session| {
                let (cid, txid) = session.set_record(&name, &file)?;
                node.advance_block()?;
                Ok(RpcEnvelope::success(
                    1,
                    serde_json::json!([{ "cid": cid.as_str(), "txid": txid }]),
                ))
            })
        }
        Command::Disable { domain, key_file } => {
            let name = parse_name(&domain)?;
            with_session(config, key_file, |node, session| {
                let txid = session.disable_subdomain(&name)?;
                node.advance_block()?;
                Ok(RpcEnvelope::txid(1, &txid))
            })
        }
        Command::Resolve { name, rtype, via_server, upstream, root_suffix } => {
            cmd_resolve(
                override_net(config, None, upstream, root_suffix),
                &name,
                &rtype,
                via_server.as_deref(),
            )
        }
        Command::Bench { blocks } => cmd_bench(&config, blocks),
        Command::Stats => cmd_stats(&config),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(path) => Ok(Config::load(path)?),
        None => Ok(Config::default()),
    }
}

fn override_net(
    mut config: Config,
    port: Option<u16>,
    upstream: Option<String>,
    root_suffix: Option<String>,
) -> Config {
    if let Some(port) = port {
        config.port = port;
    }
    if let Some(upstream) = upstream {
        config.upstream = upstream;
    }
    if let Some(root_suffix) = root_suffix {
        config.root_suffix = root_suffix;
    }
    config
}

fn parse_name(text: &str) -> Result<DomainName, CliError> {
    DomainName::parse(text).map_err(|e| CliError::new(exit_code::RECORD, format!("{text}: {e}")))
}

fn load_key(config: &Config, flag: Option<PathBuf>) -> Result<KeyPair, CliError> {
    let path = flag
        .or_else(|| config.key_file.clone())
        .ok_or_else(|| CliError::new(exit_code::KEY, "no key file: pass --key-file or set key_file in the config"))?;
    KeyPair::load(&path)
        .map_err(|e| CliError::new(exit_code::KEY, format!("{}: {e}", path.display())))
}

fn with_session(
    config: Config,
    key_file: Option<PathBuf>,
    action: impl FnOnce(&Node, &ddns_core::RegistrarSession) -> Result<RpcEnvelope, CliError>,
) -> Result<(), CliError> {
    let keypair = load_key(&config, key_file)?;
    let node = Node::open(config)?;
    let session = node.session(keypair);
    let envelope = action(&node, &session)?;
    println!("{}", envelope.render());
    Ok(())
}

fn cmd_keygen(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        return Err(CliError::new(
            exit_code::KEY,
            format!("{} already exists, refusing to overwrite a key", path.display()),
        ));
    }
    let keypair = KeyPair::generate();
    keypair
        .save(path)
        .map_err(|e| CliError::new(exit_code::KEY, format!("{}: {e}", path.display())))?;
    println!(
        "{}",
        RpcEnvelope::success(1, serde_json::json!([{ "address": keypair.address() }])).render()
    );
    Ok(())
}

fn cmd_serve(config: Config) -> Result<(), CliError> {
    let bind = config.bind_addr()?;
    let workers = config.workers;
    let interval = config.ledger.block_interval_s;
    let node = Arc::new(Node::open(config)?);
    let mut timer = node.start_block_timer();
    let server = wire::serve(node.resolver(), ServeOptions { bind, workers })
        .map_err(|e| CliError::new(exit_code::BIND, format!("bind {bind}: {e}")))?;
    let addr = server.local_addr();
    node.write_stats()?;
    log::info!("block interval {interval}s, upstream {}", node.config().upstream);
    println!(
        "{}",
        RpcEnvelope::success(1, serde_json::json!([{ "serving": addr.to_string() }])).render()
    );

    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed))
        .map_err(|e| CliError::new(exit_code::GENERAL, format!("signal handler: {e}")))?;
    let mut last_stats = Instant::now();
    while !stop.load(Ordering::Relaxed) {
        std::thread::sleep(Duration::from_millis(100));
        if last_stats.elapsed() >= Duration::from_secs(1) {
            last_stats = Instant::now();
            if let Err(e) = node.write_stats() {
                log::warn!("stats write failed: {e}");
            }
        }
    }
    log::info!("shutting down");
    drop(server);
    timer.stop();
    node.write_stats()?;
    Ok(())
}

fn parse_rtype(text: &str) -> Result<RecordType, CliError> {
    if let Some(rtype) = RecordType::from_name(&text.to_ascii_uppercase()) {
        return Ok(rtype);
    }
    text.parse::<u16>()
        .map(RecordType::from_code)
        .map_err(|_| CliError::new(exit_code::CONFIG, format!("unknown record type {text}")))
}

fn cmd_resolve(
    config: Config,
    name: &str,
    rtype: &str,
    via_server: Option<&str>,
) -> Result<(), CliError> {
    let name = parse_name(name)?;
    let rtype = parse_rtype(rtype)?;
    let (rcode_text, answers) = match via_server {
        Some(addr) => {
            let (rcode, answers) = wire_lookup(addr, &name, rtype)?;
            (rcode_name(rcode), answers)
        }
        None => {
            let node = Node::open(config)?;
            let result = node.resolver().resolve(&name, rtype);
            (result.rcode.to_string(), result.answers)
        }
    };

    println!(";; question: {name}. IN {rtype}");
    for answer in &answers {
        println!("{}", dig_line(answer));
    }
    println!(";; status: {rcode_text}, answers: {}", answers.len());
    if rcode_text == "SERVFAIL" {
        return Err(CliError::new(exit_code::RESOLUTION, format!("{name}: server failure")));
    }
    Ok(())
}

fn wire_lookup(
    addr: &str,
    name: &DomainName,
    rtype: RecordType,
) -> Result<(u8, Vec<Answer>), CliError> {
    let fail = |m: String| CliError::new(exit_code::RESOLUTION, m);
    let socket = UdpSocket::bind("0.0.0.0:0").map_err(|e| fail(e.to_string()))?;
    socket
        .set_read_timeout(Some(Duration::from_secs(3)))
        .map_err(|e| fail(e.to_string()))?;
    let query = WireQuery::new(rand::random(), name.clone(), rtype.code());
    socket
        .send_to(&wire::encode_query(&query), addr)
        .map_err(|e| fail(format!("send to {addr}: {e}")))?;
    let mut buf = [0u8; 4096];
    let (n, _) = socket
        .recv_from(&mut buf)
        .map_err(|e| fail(format!("no reply from {addr}: {e}")))?;
    let response = wire::decode_response(&buf[..n]).map_err(|e| fail(e.to_string()))?;
    Ok((response.rcode, response.answers))
}

fn rcode_name(code: u8) -> String {
    match code {
        0 => "NOERROR".to_string(),
        2 => "SERVFAIL".to_string(),
        3 => "NXDOMAIN".to_string(),
        other => format!("RCODE{other}"),
    }
}

fn dig_line(answer: &Answer) -> String {
    let rdata = match &answer.data {
        AnswerData::A(ip) => ip.to_string(),
        AnswerData::Aaaa(ip) => ip.to_string(),
        AnswerData::Cname(target) => format!("{target}."),
        AnswerData::Mx { preference, exchange } => format!("{preference} {exchange}."),
        AnswerData::Tlsa { usage, selector, matching_type, cert } => {
            format!("{usage} {selector} {matching_type} {}", hex::encode(cert))
        }
        AnswerData::Raw(bytes) => format!("\\# {} {}", bytes.len(), hex::encode(bytes)),
    };
    format!("{}.\t{}\tIN\t{}\t{}", answer.name, answer.ttl, answer.rtype, rdata)
}

fn cmd_bench(config: &Config, blocks: u64) -> Result<(), CliError> {
    let params = config.ledger_params()?;
    let capacity = capacity_tps(&params);
    let keypair = KeyPair::generate();
    let genesis = std::collections::BTreeMap::from([(
        keypair.address(),
        Amount::from_milli(
            (capacity.txs_per_block * blocks + 100).saturating_mul(params.modification_fee.milli())
                + 1_000,
        ),
    )]);
    let mut ledger =
        Ledger::new(params.clone(), genesis).map_err(|e| CliError::new(exit_code::LEDGER, e.to_string()))?;
    // Path text "BEN/LD1" keeps every transaction at exactly the
    // calibrated average size, so full blocks pack the advertised count.
    let root = AssetPath::root_only("BEN").expect("static path");
    let path = root.child("LD1").expect("static path");
    ledger
        .create_root_asset(&root, &keypair.address(), &keypair)
        .and_then(|_| ledger.create_sub_asset(&root, "LD1", &keypair.address(), &keypair))
        .and_then(|_| ledger.produce_block(0).map(drop))
        .map_err(|e| CliError::new(exit_code::LEDGER, e.to_string()))?;

    let total = capacity.txs_per_block * blocks + 100;
    log::info!("signing and queueing {total} calibrated transactions");
    let fill_started = Instant::now();
    for i in 0..total {
        let mut digest = [0u8; 32];
        digest[..8].copy_from_slice(&i.to_le_bytes());
        ledger
            .set_binding(&path, Binding::Active(ContentId::from_digest(&digest)), &keypair)
            .map_err(|e| CliError::new(exit_code::LEDGER, e.to_string()))?;
    }
    let fill_seconds = fill_started.elapsed().as_secs_f64();

    let pack_started = Instant::now();
    let mut packed = Vec::new();
    for b in 1..=blocks {
        let block =
            ledger.produce_block(b).map_err(|e| CliError::new(exit_code::LEDGER, e.to_string()))?;
        packed.push(block.txs.len() as u64);
    }
    let pack_seconds = pack_started.elapsed().as_secs_f64();
    let total_packed: u64 = packed.iter().sum();
    let measured_tps = total_packed as f64 / (blocks * params.block_interval_s) as f64;

    let report = serde_json::json!([{
        "capacity_tps": capacity.tps,
        "capacity_tps_floor": capacity.tps_floor(),
        "txs_per_block": capacity.txs_per_block,
        "blocks": blocks,
        "packed_per_block": packed,
        "measured_tps": measured_tps,
        "fill_seconds": fill_seconds,
        "pack_seconds": pack_seconds,
    }]);
    println!("{}", RpcEnvelope::success(1, report).render());
    Ok(())
}

fn cmd_stats(config: &Config) -> Result<(), CliError> {
    let path = config.data_dir.join("stats.json");
    let bytes = std::fs::read(&path).map_err(|e| {
        CliError::new(
            exit_code::GENERAL,
            format!("{}: {e} (is the daemon running with this config?)", path.display()),
        )
    })?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::new(exit_code::GENERAL, format!("{}: {e}", path.display())))?;
    println!("{}", RpcEnvelope::success(1, serde_json::json!([value])).render());
    Ok(())
}
