//! In-process stand-in for the pinning service, used by tests and demos so
//! no real endpoint or credentials are ever needed. Speaks just enough
//! HTTP/1.1 to satisfy the client: one POST, multipart body, JSON reply.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::compute_cid;

/// How the fake answers a pin upload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakeBehavior {
    /// Respond with the correct hash of the uploaded bytes.
    EchoHash,
    /// Respond with a hash that cannot match, to exercise mismatch handling.
    WrongHash,
}

/// Handle to the running fake; shuts down when dropped.
pub struct FakePinningServer {
    endpoint: String,
    stop: Arc<AtomicBool>,
    names: Arc<Mutex<Vec<String>>>,
    thread: Option<JoinHandle<()>>,
}

impl FakePinningServer {
    /// Starts on an ephemeral localhost port. When `api_key` is set,
    /// requests must carry `Authorization: Bearer <api_key>`.
    pub fn start(api_key: Option<String>) -> Self {
        Self::start_with_behavior(api_key, FakeBehavior::EchoHash)
    }

    pub fn start_with_behavior(api_key: Option<String>, behavior: FakeBehavior) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("fake pinning server binds");
        listener.set_nonblocking(true).expect("nonblocking listener");
        let endpoint = format!("http://{}", listener.local_addr().expect("local addr"));
        let stop = Arc::new(AtomicBool::new(false));
        let names = Arc::new(Mutex::new(Vec::new()));
        let thread = {
            let stop = Arc::clone(&stop);
            let names = Arc::clone(&names);
            std::thread::spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, _)) => handle_connection(stream, api_key.as_deref(), behavior, &names),
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            std::thread::sleep(Duration::from_millis(5));
                        }
                        Err(_) => break,
                    }
                }
            })
        };
        Self { endpoint, stop, names, thread: Some(thread) }
    }

    /// Base URL, e.g. `http://127.0.0.1:PORT`.
    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Names received so far via the multipart file part.
    pub fn seen_names(&self) -> Vec<String> {
        self.names.lock().expect("names lock").clone()
    }
}

impl Drop for FakePinningServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

fn handle_connection(
    mut stream: TcpStream,
    api_key: Option<&str>,
    behavior: FakeBehavior,
    names: &Mutex<Vec<String>>,
) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let request = match read_request(&mut stream) {
        Some(r) => r,
        None => return,
    };
    let response = respond(&request, api_key, behavior, names);
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

struct Request {
    head: String,
    body: Vec<u8>,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        if let Some(pos) = find(&buf, b"\r\n\r\n") {
            break pos + 4;
        }
        if buf.len() > 64 * 1024 {
            return None;
        }
        match stream.read(&mut chunk) {
            Ok(0) => return None,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(_) => return None,
        }
    };
    let head = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = head
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.eq_ignore_ascii_case("content-length")
                .then(|| v.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    let mut body = buf[header_end..].to_vec();
    while body.len() < content_length {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => body.extend_from_slice(&chunk[..n]),
            Err(_) => return None,
        }
    }
    body.truncate(content_length);
    Some(Request { head, body })
}

fn respond(
    request: &Request,
    api_key: Option<&str>,
    behavior: FakeBehavior,
    names: &Mutex<Vec<String>>,
) -> String {
    if !request.head.starts_with("POST ") || !request.head.contains("/pinning/pinFileToIPFS") {
        return http_response(404, r#"{"error":"unknown route"}"#);
    }
    if let Some(key) = api_key {
        let expected = format!("Bearer {key}");
        let authorized = request.head.lines().any(|l| {
            l.split_once(':')
                .map(|(k, v)| k.eq_ignore_ascii_case("authorization") && v.trim() == expected)
                .unwrap_or(false)
        });
        if !authorized {
            return http_response(401, r#"{"error":"unauthorized"}"#);
        }
    }
    let boundary = match request.head.lines().find_map(|l| {
        let (k, v) = l.split_once(':')?;
        if !k.eq_ignore_ascii_case("content-type") {
            return None;
        }
        v.split("boundary=").nth(1).map(|b| b.trim().trim_matches('"').to_string())
    }) {
        Some(b) => b,
        None => return http_response(400, r#"{"error":"no multipart boundary"}"#),
    };
    let (file_name, payload) = match extract_file_part(&request.body, &boundary) {
        Some(p) => p,
        None => return http_response(400, r#"{"error":"no file part"}"#),
    };
    if let Some(name) = file_name {
        names.lock().expect("names lock").push(name);
    }
    let hash = match behavior {
        FakeBehavior::EchoHash => match compute_cid(&payload) {
            Ok(cid) => cid.as_str().to_string(),
            Err(_) => return http_response(400, r#"{"error":"empty payload"}"#),
        },
        FakeBehavior::WrongHash => compute_cid(b"somebody else's bytes")
            .expect("nonempty")
            .as_str()
            .to_string(),
    };
    http_response(200, &format!(r#"{{"IpfsHash":"{hash}","PinSize":{}}}"#, payload.len()))
}

/// Pulls the body of the part whose Content-Disposition names `file`,
/// returning its filename (if any) and raw bytes.
fn extract_file_part(body: &[u8], boundary: &str) -> Option<(Option<String>, Vec<u8>)> {
    let delim = format!("--{boundary}");
    let mut pos = 0;
    loop {
        let start = find(&body[pos..], delim.as_bytes())? + pos + delim.len();
        if body[start..].starts_with(b"--") {
            return None; // closing delimiter
        }
        let head_end = find(&body[start..], b"\r\n\r\n")? + start;
        let part_head = String::from_utf8_lossy(&body[start..head_end]).to_string();
        let content_start = head_end + 4;
        let content_end = find(&body[content_start..], delim.as_bytes())? + content_start;
        if part_head.contains("name=\"file\"") {
            let file_name = part_head
                .split("filename=\"")
                .nth(1)
                .and_then(|rest| rest.split('"').next())
                .map(str::to_string);
            // The part content ends with a CRLF that belongs to the delimiter.
            let trimmed_end = content_end.saturating_sub(2).max(content_start);
            return Some((file_name, body[content_start..trimmed_end].to_vec()));
        }
        pos = content_end;
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn http_response(status: u16, body: &str) -> String {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        401 => "Unauthorized",
        404 => "Not Found",
        _ => "Error",
    };
    format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
}
