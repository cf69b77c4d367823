//! Names, asset paths, content identifiers, and the record-file schema.
//!
//! A domain under the configured root suffix (`www.xxx.ddns`) mirrors an
//! uppercase asset path on the ledger (`XXX/WWW`); both directions of that
//! mapping live here, together with the JSON record-file codec.

use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Root suffix that marks a name as ledger-resolved.
pub const DEFAULT_ROOT_SUFFIX: &str = "ddns";

/// TTL applied to records that carry no TTL field of their own.
pub const DEFAULT_RECORD_TTL: u32 = 60;

/// Maximum rendered length of a domain name.
pub const MAX_NAME_LEN: usize = 253;
/// Maximum length of a single label.
pub const MAX_LABEL_LEN: usize = 63;
/// Maximum length of a root asset name.
pub const MAX_ROOT_LEN: usize = 32;
/// Maximum combined length of all subpath segments (separators not counted).
pub const MAX_SUBPATH_LEN: usize = 30;

/// On-ledger text of a freshly created, never-configured binding: 64 zeros.
pub const INITIAL_BINDING_TEXT: &str =
    "0000000000000000000000000000000000000000000000000000000000000000";
/// On-ledger text of a deactivated binding: "Qm" followed by 44 zeros.
pub const DEACTIVATION_TEXT: &str = "Qm00000000000000000000000000000000000000000000";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("empty label")]
    EmptyLabel,
    #[error("illegal character {ch:?} in {what}")]
    IllegalCharacter { what: &'static str, ch: char },
    #[error("name exceeds {MAX_NAME_LEN} characters")]
    TooLong,
    #[error("label exceeds {MAX_LABEL_LEN} characters")]
    LabelTooLong,
    #[error("name is not under root suffix {suffix:?}")]
    NotDdnsName { suffix: String },
    #[error("asset root exceeds {MAX_ROOT_LEN} characters")]
    RootTooLong,
    #[error("asset subpath exceeds {MAX_SUBPATH_LEN} characters")]
    SubpathTooLong,
}

/// A DNS name as an ordered list of lowercase labels, most-specific first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainName {
    labels: Vec<String>,
}

impl DomainName {
    /// Parses dotted text: labels are lowercased, one trailing dot is
    /// stripped, and each label must be 1-63 chars of `[a-z0-9-]` with no
    /// leading or trailing hyphen.
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let trimmed = text.strip_suffix('.').unwrap_or(text);
        let labels: Vec<String> = trimmed
            .split('.')
            .map(|l| l.to_ascii_lowercase())
            .collect();
        Self::from_labels(labels)
    }

    /// Builds a name from pre-split labels, applying the same validation
    /// as [`DomainName::parse`].
    pub fn from_labels(labels: Vec<String>) -> Result<Self, DomainError> {
        if labels.is_empty() {
            return Err(DomainError::EmptyLabel);
        }
        let mut total = labels.len() - 1; // separating dots
        for label in &labels {
            if label.is_empty() {
                return Err(DomainError::EmptyLabel);
            }
            if label.len() > MAX_LABEL_LEN {
                return Err(DomainError::LabelTooLong);
            }
            if label.starts_with('-') || label.ends_with('-') {
                return Err(DomainError::IllegalCharacter { what: "label", ch: '-' });
            }
            if let Some(ch) = label
                .chars()
                .find(|c| !(c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '-'))
            {
                return Err(DomainError::IllegalCharacter { what: "label", ch });
            }
            total += label.len();
        }
        if total > MAX_NAME_LEN {
            return Err(DomainError::TooLong);
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Least-specific label (the would-be TLD).
    pub fn last_label(&self) -> &str {
        self.labels.last().expect("names are never empty")
    }

    /// True when the name's last label equals `root_suffix`.
    pub fn is_under(&self, root_suffix: &str) -> bool {
        self.last_label() == root_suffix
    }

    /// Maps a name under `root_suffix` to its ledger asset path: the suffix
    /// is dropped, the next label (uppercased) becomes the root, and the
    /// remaining labels become subpath segments most-specific-last.
    ///
    /// `www.xxx.ddns` maps to `XXX/WWW`.
    pub fn to_asset_path(&self, root_suffix: &str) -> Result<AssetPath, DomainError> {
        if !self.is_under(root_suffix) || self.labels.len() < 2 {
            return Err(DomainError::NotDdnsName { suffix: root_suffix.to_string() });
        }
        let n = self.labels.len();
        let root = self.labels[n - 2].to_ascii_uppercase();
        let subpath: Vec<String> = self.labels[..n - 2]
            .iter()
            .rev()
            .map(|l| l.to_ascii_uppercase())
            .collect();
        AssetPath::new(root, subpath)
    }

    /// Exact inverse of [`DomainName::to_asset_path`]; all segments are
    /// lowercased. Fails when a segment contains characters that are legal
    /// in asset paths but not in labels (`.` or `_`).
    pub fn from_asset_path(path: &AssetPath, root_suffix: &str) -> Result<Self, DomainError> {
        let mut labels: Vec<String> = path
            .subpath
            .iter()
            .rev()
            .map(|s| s.to_ascii_lowercase())
            .collect();
        labels.push(path.root.to_ascii_lowercase());
        labels.push(root_suffix.to_string());
        Self::from_labels(labels)
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.labels.join("."))
    }
}

impl FromStr for DomainName {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for DomainName {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DomainName {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Ledger-side identifier of a domain asset: uppercase root plus subpath
/// segments, rendered `ROOT/SEG1/SEG2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssetPath {
    root: String,
    subpath: Vec<String>,
}

impl AssetPath {
    pub fn new(root: String, subpath: Vec<String>) -> Result<Self, DomainError> {
        let path = Self { root, subpath };
        path.validate()?;
        Ok(path)
    }

    pub fn root_only(root: &str) -> Result<Self, DomainError> {
        Self::new(root.to_string(), Vec::new())
    }

    /// Parses a rendered path like `XXX/WWW`.
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let mut parts = text.split('/').map(str::to_string);
        let root = parts.next().unwrap_or_default();
        Self::new(root, parts.collect())
    }

    /// Checks the asset rules: root 1-32 chars, segments non-empty, all from
    /// `[A-Z0-9._]`, and subpath segment text totalling at most 30 chars
    /// (separators not counted).
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.root.is_empty() {
            return Err(DomainError::EmptyLabel);
        }
        if self.root.len() > MAX_ROOT_LEN {
            return Err(DomainError::RootTooLong);
        }
        check_asset_chars(&self.root)?;
        let mut total = 0;
        for seg in &self.subpath {
            if seg.is_empty() {
                return Err(DomainError::EmptyLabel);
            }
            check_asset_chars(seg)?;
            total += seg.len();
        }
        if total > MAX_SUBPATH_LEN {
            return Err(DomainError::SubpathTooLong);
        }
        Ok(())
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn subpath(&self) -> &[String] {
        &self.subpath
    }

    /// True for a pTLD asset (no subpath).
    pub fn is_root(&self) -> bool {
        self.subpath.is_empty()
    }

    /// The path one level up, or `None` for a root asset.
    pub fn parent(&self) -> Option<AssetPath> {
        if self.subpath.is_empty() {
            return None;
        }
        let mut subpath = self.subpath.clone();
        subpath.pop();
        Some(Self { root: self.root.clone(), subpath })
    }

    /// Extends the path by one segment, re-validating the result.
    pub fn child(&self, segment: &str) -> Result<AssetPath, DomainError> {
        let mut subpath = self.subpath.clone();
        subpath.push(segment.to_string());
        Self::new(self.root.clone(), subpath)
    }

    pub fn render(&self) -> String {
        let mut out = self.root.clone();
        for seg in &self.subpath {
            out.push('/');
            out.push_str(seg);
        }
        out
    }
}

fn check_asset_chars(text: &str) -> Result<(), DomainError> {
    match text
        .chars()
        .find(|c| !(c.is_ascii_uppercase() || c.is_ascii_digit() || *c == '.' || *c == '_'))
    {
        Some(ch) => Err(DomainError::IllegalCharacter { what: "asset path", ch }),
        None => Ok(()),
    }
}

impl fmt::Display for AssetPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl FromStr for AssetPath {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for AssetPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for AssetPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContentIdError {
    #[error("content id must be 46 characters, got {0}")]
    BadLength(usize),
    #[error("content id must start with Qm")]
    BadPrefix,
    #[error("content id is not valid base58")]
    NotBase58,
    #[error("content id does not decode to a sha2-256 multihash")]
    BadMultihash,
    #[error("text is a reserved sentinel, not a content id")]
    Sentinel,
}

/// 46-character base58 content address of a stored payload: the encoding of
/// a 34-byte multihash (0x12 0x20 prefix + sha2-256 digest), so every value
/// starts with "Qm". Reserved sentinel strings are rejected here and live
/// in [`Binding`] instead.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentId(String);

impl ContentId {
    pub const LEN: usize = 46;

    pub fn parse(text: &str) -> Result<Self, ContentIdError> {
        if is_initial_sentinel(text) || is_deactivation_sentinel(text) {
            return Err(ContentIdError::Sentinel);
        }
        if text.len() != Self::LEN {
            return Err(ContentIdError::BadLength(text.len()));
        }
        if !text.starts_with("Qm") {
            return Err(ContentIdError::BadPrefix);
        }
        let bytes = bs58::decode(text)
            .into_vec()
            .map_err(|_| ContentIdError::NotBase58)?;
        if bytes.len() != 34 || bytes[0] != 0x12 || bytes[1] != 0x20 {
            return Err(ContentIdError::BadMultihash);
        }
        Ok(Self(text.to_string()))
    }

    /// Encodes a sha2-256 digest as a content id.
    pub fn from_digest(digest: &[u8; 32]) -> Self {
        let mut multihash = [0u8; 34];
        multihash[0] = 0x12;
        multihash[1] = 0x20;
        multihash[2..].copy_from_slice(digest);
        Self(bs58::encode(multihash).into_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ContentId {
    type Err = ContentIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// True for the 64-zero initial-binding sentinel.
pub fn is_initial_sentinel(text: &str) -> bool {
    text == INITIAL_BINDING_TEXT
}

/// True for the "Qm" + 44-zero deactivation sentinel.
pub fn is_deactivation_sentinel(text: &str) -> bool {
    text == DEACTIVATION_TEXT
}

/// The on-ledger association between an asset and its record file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Binding {
    /// Created but never configured; stored as 64 zeros.
    Initial,
    /// Bound to a record file.
    Active(ContentId),
    /// Explicitly taken out of service; stored as "Qm" + 44 zeros.
    Deactivated,
}

impl Binding {
    pub fn to_ledger_text(&self) -> String {
        match self {
            Binding::Initial => INITIAL_BINDING_TEXT.to_string(),
            Binding::Active(cid) => cid.as_str().to_string(),
            Binding::Deactivated => DEACTIVATION_TEXT.to_string(),
        }
    }

    pub fn from_ledger_text(text: &str) -> Result<Self, ContentIdError> {
        if is_initial_sentinel(text) {
            return Ok(Binding::Initial);
        }
        if is_deactivation_sentinel(text) {
            return Ok(Binding::Deactivated);
        }
        Ok(Binding::Active(ContentId::parse(text)?))
    }
}

impl From<Binding> for String {
    fn from(b: Binding) -> String {
        b.to_ledger_text()
    }
}

impl TryFrom<String> for Binding {
    type Error = ContentIdError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Binding::from_ledger_text(&s)
    }
}

/// DNS record type codes used on the wire and for record selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordType {
    A,
    Ns,
    Cname,
    Mx,
    Aaaa,
    Tlsa,
    Other(u16),
}

impl RecordType {
    pub fn code(self) -> u16 {
        match self {
            RecordType::A => 1,
            RecordType::Ns => 2,
            RecordType::Cname => 5,
            RecordType::Mx => 15,
            RecordType::Aaaa => 28,
            RecordType::Tlsa => 52,
            RecordType::Other(code) => code,
        }
    }

    pub fn from_code(code: u16) -> Self {
        match code {
            1 => RecordType::A,
            2 => RecordType::Ns,
            5 => RecordType::Cname,
            15 => RecordType::Mx,
            28 => RecordType::Aaaa,
            52 => RecordType::Tlsa,
            other => RecordType::Other(other),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Some(RecordType::A),
            "NS" => Some(RecordType::Ns),
            "CNAME" => Some(RecordType::Cname),
            "MX" => Some(RecordType::Mx),
            "AAAA" => Some(RecordType::Aaaa),
            "TLSA" => Some(RecordType::Tlsa),
            _ => None,
        }
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordType::A => f.write_str("A"),
            RecordType::Ns => f.write_str("NS"),
            RecordType::Cname => f.write_str("CNAME"),
            RecordType::Mx => f.write_str("MX"),
            RecordType::Aaaa => f.write_str("AAAA"),
            RecordType::Tlsa => f.write_str("TLSA"),
            RecordType::Other(code) => write!(f, "TYPE{code}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("malformed record json: {0}")]
    MalformedJson(String),
    #[error("record object is missing the \"Type\" key")]
    MissingTypeKey,
    #[error("bad address syntax: {0}")]
    BadAddressSyntax(String),
    #[error("record is missing field {0:?}")]
    MissingField(&'static str),
    #[error("field {0:?} is out of range")]
    FieldOutOfRange(&'static str),
    #[error("unexpected field {0:?} on a typed record")]
    UnexpectedField(String),
    #[error("record file must contain at least one record")]
    Empty,
}

/// One typed resolution record. Unknown `"Type"` values are preserved as
/// [`DnsRecord::Extension`] so newer record kinds pass through untouched.
#[derive(Debug, Clone, PartialEq)]
pub enum DnsRecord {
    A { address: Ipv4Addr },
    Aaaa { address: Ipv6Addr },
    Cname { target: String },
    Mx { mail_server: String, ttl: u32, priority: u16 },
    Tlsa { usage: u8, selector: u8, matching_type: u8, cert_data: String },
    Extension { type_name: String, fields: Vec<(String, Value)> },
}

impl DnsRecord {
    /// The wire type this record answers, `None` for extension records
    /// (which the resolver skips).
    pub fn record_type(&self) -> Option<RecordType> {
        match self {
            DnsRecord::A { .. } => Some(RecordType::A),
            DnsRecord::Aaaa { .. } => Some(RecordType::Aaaa),
            DnsRecord::Cname { .. } => Some(RecordType::Cname),
            DnsRecord::Mx { .. } => Some(RecordType::Mx),
            DnsRecord::Tlsa { .. } => Some(RecordType::Tlsa),
            DnsRecord::Extension { .. } => None,
        }
    }

    fn write_canonical(&self, out: &mut String) {
        fn push_json(out: &mut String, v: &Value) {
            out.push_str(&serde_json::to_string(v).expect("json value serializes"));
        }
        out.push_str("{\"Type\":");
        match self {
            DnsRecord::A { address } => {
                out.push_str("\"A\",\"Address\":");
                push_json(out, &Value::from(address.to_string()));
            }
            DnsRecord::Aaaa { address } => {
                out.push_str("\"AAAA\",\"Address\":");
                push_json(out, &Value::from(address.to_string()));
            }
            DnsRecord::Cname { target } => {
                out.push_str("\"CNAME\",\"Target\":");
                push_json(out, &Value::from(target.as_str()));
            }
            DnsRecord::Mx { mail_server, ttl, priority } => {
                out.push_str("\"MX\",\"MailServer\":");
                push_json(out, &Value::from(mail_server.as_str()));
                out.push_str(",\"TTL\":");
                push_json(out, &Value::from(*ttl));
                out.push_str(",\"Priority\":");
                push_json(out, &Value::from(*priority));
            }
            DnsRecord::Tlsa { usage, selector, matching_type, cert_data } => {
                out.push_str("\"TLSA\",\"Usage\":");
                push_json(out, &Value::from(*usage));
                out.push_str(",\"Selector\":");
                push_json(out, &Value::from(*selector));
                out.push_str(",\"MatchingType\":");
                push_json(out, &Value::from(*matching_type));
                out.push_str(",\"CertData\":");
                push_json(out, &Value::from(cert_data.as_str()));
            }
            DnsRecord::Extension { type_name, fields } => {
                push_json(out, &Value::from(type_name.as_str()));
                for (key, value) in fields {
                    out.push(',');
                    push_json(out, &Value::from(key.as_str()));
                    out.push(':');
                    push_json(out, value);
                }
            }
        }
        out.push('}');
    }

    fn from_json(value: &Value) -> Result<Self, RecordError> {
        let obj = value
            .as_object()
            .ok_or_else(|| RecordError::MalformedJson("record is not a JSON object".into()))?;
        let type_name = obj
            .get("Type")
            .and_then(Value::as_str)
            .ok_or(RecordError::MissingTypeKey)?;

        fn get_str<'a>(
            obj: &'a serde_json::Map<String, Value>,
            key: &'static str,
        ) -> Result<&'a str, RecordError> {
            obj.get(key)
                .and_then(Value::as_str)
                .ok_or(RecordError::MissingField(key))
        }
        fn get_uint(
            obj: &serde_json::Map<String, Value>,
            key: &'static str,
            max: u64,
        ) -> Result<u64, RecordError> {
            let n = obj
                .get(key)
                .and_then(Value::as_u64)
                .ok_or(RecordError::MissingField(key))?;
            if n > max {
                return Err(RecordError::FieldOutOfRange(key));
            }
            Ok(n)
        }
        fn no_extras(
            obj: &serde_json::Map<String, Value>,
            allowed: &[&str],
        ) -> Result<(), RecordError> {
            for key in obj.keys() {
                if key != "Type" && !allowed.contains(&key.as_str()) {
                    return Err(RecordError::UnexpectedField(key.clone()));
                }
            }
            Ok(())
        }

        match type_name {
            "A" => {
                no_extras(obj, &["Address"])?;
                let text = get_str(obj, "Address")?;
                let address: Ipv4Addr = text
                    .parse()
                    .map_err(|_| RecordError::BadAddressSyntax(text.to_string()))?;
                Ok(DnsRecord::A { address })
            }
            "AAAA" => {
                no_extras(obj, &["Address"])?;
                let text = get_str(obj, "Address")?;
                let address: Ipv6Addr = text
                    .parse()
                    .map_err(|_| RecordError::BadAddressSyntax(text.to_string()))?;
                Ok(DnsRecord::Aaaa { address })
            }
            "CNAME" => {
                no_extras(obj, &["Target"])?;
                Ok(DnsRecord::Cname { target: get_str(obj, "Target")?.to_string() })
            }
            "MX" => {
                no_extras(obj, &["MailServer", "TTL", "Priority"])?;
                Ok(DnsRecord::Mx {
                    mail_server: get_str(obj, "MailServer")?.to_string(),
                    ttl: get_uint(obj, "TTL", u64::from(u32::MAX))? as u32,
                    priority: get_uint(obj, "Priority", u64::from(u16::MAX))? as u16,
                })
            }
            "TLSA" => {
                no_extras(obj, &["Usage", "Selector", "MatchingType", "CertData"])?;
                let cert_data = get_str(obj, "CertData")?.to_string();
                if cert_data.is_empty()
                    || cert_data.len() % 2 != 0
                    || !cert_data.chars().all(|c| c.is_ascii_hexdigit())
                {
                    return Err(RecordError::FieldOutOfRange("CertData"));
                }
                Ok(DnsRecord::Tlsa {
                    usage: get_uint(obj, "Usage", 255)? as u8,
                    selector: get_uint(obj, "Selector", 255)? as u8,
                    matching_type: get_uint(obj, "MatchingType", 255)? as u8,
                    cert_data,
                })
            }
            other => {
                // Forward compatibility: keep the payload, sorted by key so
                // re-encoding is canonical.
                let mut fields: Vec<(String, Value)> = obj
                    .iter()
                    .filter(|(k, _)| k.as_str() != "Type")
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                fields.sort_by(|a, b| a.0.cmp(&b.0));
                Ok(DnsRecord::Extension { type_name: other.to_string(), fields })
            }
        }
    }
}

/// The JSON document bound to a domain: one or more typed records plus the
/// TTL handed to records without one.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub records: Vec<DnsRecord>,
    pub default_ttl: u32,
}

impl RecordFile {
    pub fn new(records: Vec<DnsRecord>) -> Result<Self, RecordError> {
        Self::with_ttl(records, DEFAULT_RECORD_TTL)
    }

    pub fn with_ttl(records: Vec<DnsRecord>, default_ttl: u32) -> Result<Self, RecordError> {
        if records.is_empty() {
            return Err(RecordError::Empty);
        }
        Ok(Self { records, default_ttl })
    }

    /// Canonical bytes: a single record becomes one JSON object, several
    /// become a JSON array, keys in fixed order with no whitespace. Equal
    /// files encode to identical bytes, so content ids are deterministic.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = String::new();
        if self.records.len() == 1 {
            self.records[0].write_canonical(&mut out);
        } else {
            out.push('[');
            for (i, rec) in self.records.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                rec.write_canonical(&mut out);
            }
            out.push(']');
        }
        out.into_bytes()
    }

    /// Decodes one record object or an array of them, with the stock
    /// default TTL.
    pub fn decode(bytes: &[u8]) -> Result<Self, RecordError> {
        Self::decode_with_ttl(bytes, DEFAULT_RECORD_TTL)
    }

    pub fn decode_with_ttl(bytes: &[u8], default_ttl: u32) -> Result<Self, RecordError> {
        let value: Value = serde_json::from_slice(bytes)
            .map_err(|e| RecordError::MalformedJson(e.to_string()))?;
        let records = match &value {
            Value::Array(items) => items
                .iter()
                .map(DnsRecord::from_json)
                .collect::<Result<Vec<_>, _>>()?,
            Value::Object(_) => vec![DnsRecord::from_json(&value)?],
            _ => {
                return Err(RecordError::MalformedJson(
                    "expected a record object or an array of them".into(),
                ))
            }
        };
        Self::with_ttl(records, default_ttl)
    }

    /// TTL for one record: MX carries its own, everything else uses the
    /// file default.
    pub fn ttl_for(&self, record: &DnsRecord) -> u32 {
        match record {
            DnsRecord::Mx { ttl, .. } => *ttl,
            _ => self.default_ttl,
        }
    }
}
