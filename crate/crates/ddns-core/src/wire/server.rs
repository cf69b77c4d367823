//! UDP front-end: datagram in, resolver call, datagram out.
//!
//! A small worker pool shares one bound socket; responses can leave out of
//! order (ids pair them up). Shutdown raises a flag and joins the workers,
//! so in-flight queries finish before the handle returns.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crate::domain::RecordType;
use crate::resolver::Resolver;

use super::{decode_query, encode_error, encode_response, rcode, WireError, MAX_DATAGRAM};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub bind: SocketAddr,
    pub workers: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { bind: "127.0.0.1:5553".parse().expect("static addr"), workers: 4 }
    }
}

/// Running server. Dropping it shuts the workers down.
pub struct ServerHandle {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting datagrams and drains in-flight queries.
    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds the socket and starts the worker pool. A busy port surfaces here
/// as the bind error.
pub fn serve(resolver: Arc<Resolver>, options: ServeOptions) -> io::Result<ServerHandle> {
    let socket = UdpSocket::bind(options.bind)?;
    socket.set_read_timeout(Some(Duration::from_millis(200)))?;
    let local_addr = socket.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let workers = (0..options.workers.max(1))
        .map(|_| {
            let socket = socket.try_clone().expect("udp socket clones");
            let resolver = Arc::clone(&resolver);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || worker_loop(socket, resolver, stop))
        })
        .collect();
    log::info!("dns server listening on udp {local_addr}");
    Ok(ServerHandle { local_addr, stop, workers })
}

fn worker_loop(socket: UdpSocket, resolver: Arc<Resolver>, stop: Arc<AtomicBool>) {
    let mut buf = [0u8; MAX_DATAGRAM];
    while !stop.load(Ordering::Relaxed) {
        let (len, peer) = match socket.recv_from(&mut buf) {
            Ok(received) => received,
            Err(e)
                if e.kind() == io::ErrorKind::WouldBlock
                    || e.kind() == io::ErrorKind::TimedOut =>
            {
                continue
            }
            Err(e) => {
                log::error!("udp receive failed: {e}");
                break;
            }
        };
        if let Some(reply) = handle_datagram(&resolver, &buf[..len], peer) {
            if let Err(e) = socket.send_to(&reply, peer) {
                log::warn!("udp send to {peer} failed: {e}");
            }
        }
    }
}

/// One datagram, one optional reply. Undecodable input gets an error
/// response when an id is recoverable and silence otherwise; it never
/// takes the worker down.
fn handle_datagram(resolver: &Resolver, bytes: &[u8], peer: SocketAddr) -> Option<Vec<u8>> {
    match decode_query(bytes) {
        Ok(query) => {
            let qtype = RecordType::from_code(query.qtype);
            let result = resolver.resolve(&query.name, qtype);
            log::info!(
                "query {peer} {} {} -> {} ({} answers)",
                query.name,
                qtype,
                result.rcode,
                result.answers.len()
            );
            Some(encode_response(&query, &result))
        }
        Err(error) => {
            let id = match bytes.get(..2) {
                Some(prefix) => u16::from_be_bytes([prefix[0], prefix[1]]),
                None => return None,
            };
            let code = match error {
                WireError::UnsupportedOpcode(_) => rcode::NOTIMP,
                WireError::FormErr(_) => rcode::FORMERR,
                // Header shorter than 12 bytes: id may be garbage, stay quiet.
                WireError::Truncated => return None,
            };
            log::info!("query {peer} undecodable -> rcode {code} ({error})");
            Some(encode_error(id, code))
        }
    }
}
