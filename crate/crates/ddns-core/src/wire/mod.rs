//! RFC 1035 wire codec subset: queries with one question, responses with
//! typed answer records, UDP-sized. Compression pointers are understood on
//! decode (backwards-only, bounded jumps); encoding never compresses,
//! which is legal and keeps offsets trivial.

mod server;

pub use server::{serve, ServeOptions, ServerHandle};

use std::net::{Ipv4Addr, Ipv6Addr};

use thiserror::Error;

use crate::domain::{DomainName, RecordType};
use crate::resolver::{Answer, AnswerData, Rcode, ResolutionResult};

/// Classic UDP payload bound; larger responses are truncated with TC set.
pub const MAX_UDP_PAYLOAD: usize = 512;
/// Largest datagram the server will look at.
pub const MAX_DATAGRAM: usize = 4096;

pub const CLASS_IN: u16 = 1;

const FLAG_QR: u16 = 0x8000;
const FLAG_TC: u16 = 0x0200;
const FLAG_RD: u16 = 0x0100;
const FLAG_RA: u16 = 0x0080;

/// Response-code field values, including the error codes the server sends
/// for undecodable queries.
pub mod rcode {
    pub const NOERROR: u8 = 0;
    pub const FORMERR: u8 = 1;
    pub const SERVFAIL: u8 = 2;
    pub const NXDOMAIN: u8 = 3;
    pub const NOTIMP: u8 = 4;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("datagram truncated")]
    Truncated,
    #[error("malformed message: {0}")]
    FormErr(&'static str),
    #[error("unsupported opcode {0}")]
    UnsupportedOpcode(u8),
}

/// A decoded question. `raw_question` holds the original question-section
/// bytes so responses echo them verbatim (case and all).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireQuery {
    pub id: u16,
    pub flags: u16,
    pub name: DomainName,
    pub qtype: u16,
    pub qclass: u16,
    raw_question: Vec<u8>,
}

impl WireQuery {
    /// Builds a recursion-desired query, the shape a stub client sends.
    pub fn new(id: u16, name: DomainName, qtype: u16) -> Self {
        let mut raw = Vec::new();
        encode_name(&name, &mut raw);
        raw.extend_from_slice(&qtype.to_be_bytes());
        raw.extend_from_slice(&CLASS_IN.to_be_bytes());
        Self { id, flags: FLAG_RD, name, qtype, qclass: CLASS_IN, raw_question: raw }
    }
}

fn encode_name(name: &DomainName, out: &mut Vec<u8>) {
    for label in name.labels() {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

/// Parses a possibly compressed name. Pointers must aim strictly backwards
/// and at most 8 jumps are followed, so decoding always terminates.
/// Returns the labels, the offset just past the name in the original
/// stream, and whether compression was used.
fn parse_name(bytes: &[u8], start: usize) -> Result<(Vec<String>, usize, bool), WireError> {
    let mut labels = Vec::new();
    let mut pos = start;
    let mut end_after = None;
    let mut jumps = 0u32;
    let mut compressed = false;
    let mut total_len = 0usize;
    loop {
        let len_byte = *bytes.get(pos).ok_or(WireError::Truncated)?;
        if len_byte & 0xC0 == 0xC0 {
            let low = *bytes.get(pos + 1).ok_or(WireError::Truncated)?;
            let target = (((len_byte & 0x3F) as usize) << 8) | low as usize;
            if end_after.is_none() {
                end_after = Some(pos + 2);
            }
            if target >= pos {
                return Err(WireError::FormErr("forward compression pointer"));
            }
            jumps += 1;
            if jumps > 8 {
                return Err(WireError::FormErr("too many compression jumps"));
            }
            compressed = true;
            pos = target;
        } else if len_byte == 0 {
            if end_after.is_none() {
                end_after = Some(pos + 1);
            }
            break;
        } else if len_byte & 0xC0 != 0 {
            return Err(WireError::FormErr("reserved label type"));
        } else {
            let len = len_byte as usize;
            let label = bytes
                .get(pos + 1..pos + 1 + len)
                .ok_or(WireError::Truncated)?;
            total_len += len + 1;
            if total_len > 255 {
                return Err(WireError::FormErr("name too long"));
            }
            let text = std::str::from_utf8(label)
                .map_err(|_| WireError::FormErr("label is not utf-8"))?;
            labels.push(text.to_ascii_lowercase());
            pos += 1 + len;
        }
    }
    Ok((labels, end_after.expect("set before break"), compressed))
}

fn read_u16(bytes: &[u8], pos: usize) -> Result<u16, WireError> {
    let pair = bytes.get(pos..pos + 2).ok_or(WireError::Truncated)?;
    Ok(u16::from_be_bytes([pair[0], pair[1]]))
}

fn read_u32(bytes: &[u8], pos: usize) -> Result<u32, WireError> {
    let quad = bytes.get(pos..pos + 4).ok_or(WireError::Truncated)?;
    Ok(u32::from_be_bytes([quad[0], quad[1], quad[2], quad[3]]))
}

/// Decodes a query datagram: header plus exactly one question. Extra
/// sections (e.g. EDNS additional records) are tolerated and ignored.
pub fn decode_query(bytes: &[u8]) -> Result<WireQuery, WireError> {
    if bytes.len() < 12 {
        return Err(WireError::Truncated);
    }
    let id = read_u16(bytes, 0)?;
    let flags = read_u16(bytes, 2)?;
    if flags & FLAG_QR != 0 {
        return Err(WireError::FormErr("message is a response"));
    }
    let opcode = ((flags >> 11) & 0xF) as u8;
    if opcode != 0 {
        return Err(WireError::UnsupportedOpcode(opcode));
    }
    let qdcount = read_u16(bytes, 4)?;
    if qdcount != 1 {
        return Err(WireError::FormErr("expected exactly one question"));
    }
    let (labels, after_name, compressed) = parse_name(bytes, 12)?;
    let name = DomainName::from_labels(labels)
        .map_err(|_| WireError::FormErr("invalid query name"))?;
    let qtype = read_u16(bytes, after_name)?;
    let qclass = read_u16(bytes, after_name + 2)?;
    let raw_question = if compressed {
        let mut raw = Vec::new();
        encode_name(&name, &mut raw);
        raw.extend_from_slice(&qtype.to_be_bytes());
        raw.extend_from_slice(&qclass.to_be_bytes());
        raw
    } else {
        bytes[12..after_name + 4].to_vec()
    };
    Ok(WireQuery { id, flags, name, qtype, qclass, raw_question })
}

/// Encodes a query datagram (used by the upstream forwarder and tests).
pub fn encode_query(query: &WireQuery) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + query.raw_question.len());
    out.extend_from_slice(&query.id.to_be_bytes());
    out.extend_from_slice(&query.flags.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes()); // qdcount
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&query.raw_question);
    out
}

fn encode_rdata(data: &AnswerData, out: &mut Vec<u8>) {
    match data {
        AnswerData::A(addr) => out.extend_from_slice(&addr.octets()),
        AnswerData::Aaaa(addr) => out.extend_from_slice(&addr.octets()),
        AnswerData::Cname(target) => encode_name(target, out),
        AnswerData::Mx { preference, exchange } => {
            out.extend_from_slice(&preference.to_be_bytes());
            encode_name(exchange, out);
        }
        AnswerData::Tlsa { usage, selector, matching_type, cert } => {
            out.push(*usage);
            out.push(*selector);
            out.push(*matching_type);
            out.extend_from_slice(cert);
        }
        AnswerData::Raw(bytes) => out.extend_from_slice(bytes),
    }
}

fn encode_answer(answer: &Answer, out: &mut Vec<u8>) {
    encode_name(&answer.name, out);
    out.extend_from_slice(&answer.rtype.code().to_be_bytes());
    out.extend_from_slice(&CLASS_IN.to_be_bytes());
    out.extend_from_slice(&answer.ttl.to_be_bytes());
    let mut rdata = Vec::new();
    encode_rdata(&answer.data, &mut rdata);
    out.extend_from_slice(&(rdata.len() as u16).to_be_bytes());
    out.extend_from_slice(&rdata);
}

/// Encodes the response to `query`. Oversize answer sections are truncated
/// a whole record at a time and flagged with TC.
pub fn encode_response(query: &WireQuery, result: &ResolutionResult) -> Vec<u8> {
    let mut encoded: Vec<Vec<u8>> = Vec::with_capacity(result.answers.len());
    for answer in &result.answers {
        let mut one = Vec::new();
        encode_answer(answer, &mut one);
        encoded.push(one);
    }
    let base_len = 12 + query.raw_question.len();
    let mut kept = encoded.len();
    let mut total: usize = base_len + encoded.iter().map(Vec::len).sum::<usize>();
    while total > MAX_UDP_PAYLOAD && kept > 0 {
        kept -= 1;
        total -= encoded[kept].len();
    }
    let truncated = kept < encoded.len();

    let mut flags = FLAG_QR | FLAG_RA | (query.flags & FLAG_RD);
    if truncated {
        flags |= FLAG_TC;
    }
    flags |= u16::from(rcode_to_u8(result.rcode));

    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&query.id.to_be_bytes());
    out.extend_from_slice(&flags.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&(kept as u16).to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&query.raw_question);
    for one in &encoded[..kept] {
        out.extend_from_slice(one);
    }
    out
}

/// Minimal error response for datagrams that did not decode to a usable
/// query: header only, echoing the id.
pub fn encode_error(id: u16, error_rcode: u8) -> Vec<u8> {
    let flags = FLAG_QR | FLAG_RA | u16::from(error_rcode);
    let mut out = Vec::with_capacity(12);
    out.extend_from_slice(&id.to_be_bytes());
    out.extend_from_slice(&flags.to_be_bytes());
    out.extend_from_slice(&[0u8; 8]);
    out
}

pub fn rcode_to_u8(rcode: Rcode) -> u8 {
    match rcode {
        Rcode::NoError => rcode::NOERROR,
        Rcode::ServFail => rcode::SERVFAIL,
        Rcode::NxDomain => rcode::NXDOMAIN,
    }
}

/// A parsed response message (used by the forwarder and test clients).
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedResponse {
    pub id: u16,
    pub flags: u16,
    pub rcode: u8,
    pub truncated: bool,
    pub question: Option<(DomainName, u16, u16)>,
    pub answers: Vec<Answer>,
}

/// Decodes a response: header, question(s) skipped over, answers parsed
/// into the typed model (unknown rdata kept raw).
pub fn decode_response(bytes: &[u8]) -> Result<DecodedResponse, WireError> {
    if bytes.len() < 12 {
        return Err(WireError::Truncated);
    }
    let id = read_u16(bytes, 0)?;
    let flags = read_u16(bytes, 2)?;
    if flags & FLAG_QR == 0 {
        return Err(WireError::FormErr("message is a query"));
    }
    let qdcount = read_u16(bytes, 4)?;
    let ancount = read_u16(bytes, 6)?;
    let mut pos = 12;
    let mut question = None;
    for i in 0..qdcount {
        let (labels, after, _) = parse_name(bytes, pos)?;
        let qtype = read_u16(bytes, after)?;
        let qclass = read_u16(bytes, after + 2)?;
        if i == 0 {
            if let Ok(name) = DomainName::from_labels(labels) {
                question = Some((name, qtype, qclass));
            }
        }
        pos = after + 4;
    }
    let mut answers = Vec::with_capacity(ancount as usize);
    for _ in 0..ancount {
        let (labels, after, _) = parse_name(bytes, pos)?;
        let name = DomainName::from_labels(labels)
            .map_err(|_| WireError::FormErr("invalid answer name"))?;
        let rtype = read_u16(bytes, after)?;
        let _class = read_u16(bytes, after + 2)?;
        let ttl = read_u32(bytes, after + 4)?;
        let rdlen = read_u16(bytes, after + 8)? as usize;
        let rdata_start = after + 10;
        let data = decode_rdata(bytes, rdata_start, rdlen, rtype)?;
        answers.push(Answer {
            name,
            rtype: RecordType::from_code(rtype),
            ttl,
            data,
        });
        pos = rdata_start + rdlen;
    }
    Ok(DecodedResponse {
        id,
        flags,
        rcode: (flags & 0xF) as u8,
        truncated: flags & FLAG_TC != 0,
        question,
        answers,
    })
}

fn decode_rdata(
    message: &[u8],
    start: usize,
    len: usize,
    rtype: u16,
) -> Result<AnswerData, WireError> {
    let slice = message.get(start..start + len).ok_or(WireError::Truncated)?;
    match RecordType::from_code(rtype) {
        RecordType::A if len == 4 => {
            Ok(AnswerData::A(Ipv4Addr::new(slice[0], slice[1], slice[2], slice[3])))
        }
        RecordType::Aaaa if len == 16 => {
            let octets: [u8; 16] = slice.try_into().expect("len checked");
            Ok(AnswerData::Aaaa(Ipv6Addr::from(octets)))
        }
        RecordType::Cname => {
            let (labels, _, _) = parse_name(message, start)?;
            let target = DomainName::from_labels(labels)
                .map_err(|_| WireError::FormErr("invalid cname target"))?;
            Ok(AnswerData::Cname(target))
        }
        RecordType::Mx if len >= 3 => {
            let preference = u16::from_be_bytes([slice[0], slice[1]]);
            let (labels, _, _) = parse_name(message, start + 2)?;
            let exchange = DomainName::from_labels(labels)
                .map_err(|_| WireError::FormErr("invalid mx exchange"))?;
            Ok(AnswerData::Mx { preference, exchange })
        }
        RecordType::Tlsa if len >= 3 => Ok(AnswerData::Tlsa {
            usage: slice[0],
            selector: slice[1],
            matching_type: slice[2],
            cert: slice[3..].to_vec(),
        }),
        _ => Ok(AnswerData::Raw(slice.to_vec())),
    }
}
