//! Checksummed artifact container shared by datasets, models and optimizer state.
//!
//! Layout: a UTF-8 header of `key value` lines opened by `<kind> <version>`
//! and closed by `sha256 <hex>`, followed by a raw little-endian payload.
//! The digest covers every header line before it plus the payload.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub version: u32,
    fields: Vec<(String, String)>,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn new(kind: &str, version: u32) -> Self {
        Container { kind: kind.to_string(), version, fields: Vec::new(), payload: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let value = value.to_string();
        debug_assert!(!key.contains(char::is_whitespace) && !value.contains('\n'));
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| Error::config(format!("{} header lacks `{key}`", self.kind)))?;
        raw.parse().map_err(|_| Error::config(format!("{} header field `{key}` has invalid value `{raw}`", self.kind)))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut head = format!("{} {}\n", self.kind, self.version);
        for (k, v) in &self.fields {
            head.push_str(k);
            head.push(' ');
            head.push_str(v);
            head.push('\n');
        }
        let mut hasher = Sha256::new();
        hasher.update(head.as_bytes());
        hasher.update(&self.payload);
        let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let mut out = head.into_bytes();
        out.extend_from_slice(format!("sha256 {digest}\n").as_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8], kind: &str, version: u32) -> std::result::Result<Self, String> {
        let mut fields = Vec::new();
        let mut pos = 0;
        let mut first = true;
        loop {
            let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or("truncated header")?;
            let line = std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| "header is not UTF-8")?;
            let line_start = pos;
            pos += end + 1;
            let (key, value) = line.split_once(' ').ok_or_else(|| format!("malformed header line `{line}`"))?;
            if first {
                if key != kind {
                    return Err(format!("expected a {kind} file, found `{key}`"));
                }
                if value != version.to_string() {
                    return Err(format!("unsupported {kind} version {value} (expected {version})"));
                }
                first = false;
                continue;
            }
            if key == "sha256" {
                let mut hasher = Sha256::new();
                hasher.update(&bytes[..line_start]);
                hasher.update(&bytes[pos..]);
                let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
                if digest != value {
                    return Err("checksum mismatch".into());
                }
                break;
            }
            fields.push((key.to_string(), value.to_string()));
        }
        Ok(Container { kind: kind.to_string(), version, fields, payload: bytes[pos..].to_vec() })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path, kind: &str, version: u32) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Container::decode(&bytes, kind, version).map_err(|reason| Error::format(path, reason))
    }
}

pub fn push_f32(buf: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn push_f64(buf: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Sequential little-endian reader over a payload.
pub struct PayloadReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        PayloadReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let chunk = self.bytes.get(self.pos..self.pos + n).ok_or("payload too short")?;
        self.pos += n;
        Ok(chunk)
    }

    pub fn f32s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let chunk = self.take(n.checked_mul(4).ok_or("payload size overflow")?)?;
        Ok(chunk.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect())
    }

    pub fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let chunk = self.take(n.checked_mul(8).ok_or("payload size overflow")?)?;
        Ok(chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn finish(self) -> std::result::Result<(), String> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(format!("{} trailing payload bytes", self.bytes.len() - self.pos))
        }
    }
}
