use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const HEADER: &str = "# ris lookup table v1";

/// A solved objective: the amplitudes and the SLNR they achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupEntry {
    pub beams: Vec<f64>,
    pub nulls: Vec<f64>,
    pub slnr_db: f64,
    pub w: Vec<f64>,
    pub fingerprint: String,
}

/// Sorted, deduplicated directions with `-0.0` folded into `0.0`.
pub(crate) fn normalize(dirs: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = dirs.iter().map(|d| d + 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

impl LookupEntry {
    pub fn new(beams: &[f64], nulls: &[f64], slnr_db: f64, w: Vec<f64>, fingerprint: impl Into<String>) -> Self {
        LookupEntry { beams: normalize(beams), nulls: normalize(nulls), slnr_db, w, fingerprint: fingerprint.into() }
    }

    fn key(&self) -> Key {
        (self.fingerprint.clone(), bits(&self.beams), bits(&self.nulls))
    }

    fn to_line(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "beams={} nulls={} slnr={} fp={} w={}",
            list(&self.beams),
            list(&self.nulls),
            self.slnr_db,
            self.fingerprint,
            list(&self.w)
        )
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for part in line.split_whitespace() {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("`{part}` is not key=value"))?;
            if fields.insert(k, v).is_some() {
                return Err(format!("duplicate field `{k}`"));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing field `{k}`"));
        let list = |k: &str| -> std::result::Result<Vec<f64>, String> {
            let v = get(k)?;
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| x.parse::<f64>().map_err(|_| format!("bad number `{x}` in {k}"))).collect()
        };
        if fields.len() != 5 {
            return Err(format!("expected 5 fields, found {}", fields.len()));
        }
        let slnr: f64 = get("slnr")?.parse().map_err(|_| "bad slnr".to_string())?;
        let entry = LookupEntry::new(&list("beams")?, &list("nulls")?, slnr, list("w")?, get("fp")?);
        if entry.beams.is_empty() || entry.w.is_empty() {
            return Err("entry needs beams and amplitudes".into());
        }
        if !slnr.is_finite() || entry.w.iter().any(|x| !x.is_finite()) {
            return Err("non-finite value".into());
        }
        Ok(entry)
    }
}

type Key = (String, Vec<u64>, Vec<u64>);

/// Solved objectives keyed by backend and direction sets.
#[derive(Debug, Clone, Default)]
pub struct LookupTable {
    entries: Vec<LookupEntry>,
    index: HashMap<Key, usize>,
}

impl PartialEq for LookupTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl LookupTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LookupEntry] {
        &self.entries
    }

    /// Stores the entry unless one with the same key has a higher SLNR.
    /// Returns whether the table changed.
    pub fn insert(&mut self, entry: LookupEntry) -> bool {
        match self.index.get(&entry.key()) {
            Some(&i) if self.entries[i].slnr_db >= entry.slnr_db => false,
            Some(&i) => {
                self.entries[i] = entry;
                true
            }
            None => {
                self.index.insert(entry.key(), self.entries.len());
                self.entries.push(entry);
                true
            }
        }
    }

    pub fn exact(&self, beams: &[f64], nulls: &[f64], fingerprint: &str) -> Option<&LookupEntry> {
        let key = (fingerprint.to_string(), bits(&normalize(beams)), bits(&normalize(nulls)));
        self.index.get(&key).map(|&i| &self.entries[i])
    }

    /// Entry whose beams form the largest subset of `beams`, ties going to the
    /// higher SLNR and then to the earlier entry.
    pub fn query(&self, beams: &[f64], fingerprint: &str) -> Option<&LookupEntry> {
        let want = normalize(beams);
        let mut best: Option<&LookupEntry> = None;
        for e in self.entries.iter().filter(|e| e.fingerprint == fingerprint) {
            if !e.beams.iter().all(|b| want.contains(b)) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => (e.beams.len(), e.slnr_db) > (b.beams.len(), b.slnr_db),
            };
            if better {
                best = Some(e);
            }
        }
        best
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for e in &self.entries {
            writeln!(out, "{}", e.to_line()).unwrap();
        }
        out
    }

    /// Parses a table. With `fingerprint` set, entries for other backends are
    /// skipped and reported in the returned warnings.
    pub fn parse(text: &str, fingerprint: Option<&str>, path: &Path) -> Result<(Self, Vec<String>)> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(Error::format(path, "missing lookup table header")),
        }
        let mut table = LookupTable::new();
        let mut warnings = Vec::new();
        for (n, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry =
                LookupEntry::parse_line(line).map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
            match fingerprint {
                Some(fp) if entry.fingerprint != fp => warnings.push(format!(
                    "line {}: skipped entry for backend {} (expected {fp})",
                    n + 1,
                    entry.fingerprint
                )),
                _ => {
                    table.insert(entry);
                }
            }
        }
        Ok((table, warnings))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path, fingerprint: Option<&str>) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, fingerprint, path)
    }
}
