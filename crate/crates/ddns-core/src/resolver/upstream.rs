//! DNS-over-UDP forwarding to the configured public resolver.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::Duration;

use rand::Rng;

use crate::domain::{DomainName, RecordType};
use crate::wire;

use super::{Answer, Rcode, Upstream, UpstreamError};

/// Stub forwarder: one query datagram, a bounded wait for the matching
/// response id, one retry, then ServFail at the resolver.
pub struct UdpForwarder {
    upstream: SocketAddr,
    timeout: Duration,
    attempts: u32,
}

impl UdpForwarder {
    pub fn new(upstream: SocketAddr) -> Self {
        Self { upstream, timeout: Duration::from_secs(2), attempts: 2 }
    }

    /// Accepts "1.1.1.1:53" style text (a bare host gets port 53).
    pub fn from_addr_text(text: &str) -> Result<Self, String> {
        let candidate = if text.contains(':') {
            text.to_string()
        } else {
            format!("{text}:53")
        };
        let addr = candidate
            .to_socket_addrs()
            .map_err(|e| format!("bad upstream address {text:?}: {e}"))?
            .next()
            .ok_or_else(|| format!("upstream address {text:?} resolves to nothing"))?;
        Ok(Self::new(addr))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn attempt(&self, query_bytes: &[u8], id: u16) -> Result<wire::DecodedResponse, String> {
        let socket = UdpSocket::bind(("0.0.0.0", 0)).map_err(|e| e.to_string())?;
        socket
            .set_read_timeout(Some(self.timeout))
            .map_err(|e| e.to_string())?;
        socket
            .send_to(query_bytes, self.upstream)
            .map_err(|e| e.to_string())?;
        let deadline = std::time::Instant::now() + self.timeout;
        let mut buf = [0u8; wire::MAX_DATAGRAM];
        loop {
            if std::time::Instant::now() >= deadline {
                return Err("upstream timed out".into());
            }
            let (n, from) = socket.recv_from(&mut buf).map_err(|e| e.to_string())?;
            if from != self.upstream {
                continue;
            }
            match wire::decode_response(&buf[..n]) {
                Ok(response) if response.id == id => return Ok(response),
                // Stale or foreign datagram: keep waiting for our id.
                Ok(_) | Err(_) => continue,
            }
        }
    }
}

impl Upstream for UdpForwarder {
    fn forward(
        &self,
        name: &DomainName,
        qtype: RecordType,
    ) -> Result<(Rcode, Vec<Answer>), UpstreamError> {
        let mut last_error = String::new();
        for _ in 0..self.attempts {
            let id: u16 = rand::thread_rng().gen();
            let query = wire::WireQuery::new(id, name.clone(), qtype.code());
            let bytes = wire::encode_query(&query);
            match self.attempt(&bytes, id) {
                Ok(response) => {
                    let rcode = match response.rcode {
                        wire::rcode::NOERROR => Rcode::NoError,
                        wire::rcode::NXDOMAIN => Rcode::NxDomain,
                        _ => Rcode::ServFail,
                    };
                    return Ok((rcode, response.answers));
                }
                Err(e) => last_error = e,
            }
        }
        Err(UpstreamError(last_error))
    }
}
