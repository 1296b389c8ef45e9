//! Named-entry binary container shared by pair records (`PMAP`) and detector
//! checkpoints (`PRM1`).
//!
//! ```text
//! magic      4 bytes
//! version    u32 LE (= 1)
//! count      u32 LE
//! entries    count x {
//!     name_len u8, name [u8; name_len] (ASCII),
//!     dtype    u8 (0 = f32 LE),
//!     ndim     u8, dims [u32 LE; ndim],
//!     payload  prod(dims) x f32 LE, row-major
//! }
//! ```

use super::FormatError;

pub const CONTAINER_VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Entry {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        Self { name: name.into(), dims, data }
    }

    fn check(&self) -> Result<(), FormatError> {
        if self.name.is_empty() || self.name.len() > u8::MAX as usize || !self.name.is_ascii() {
            return Err(FormatError::InvalidName { name: self.name.clone(), offset: None });
        }
        if self.dims.len() > u8::MAX as usize || self.dims.iter().any(|d| *d > u32::MAX as usize) {
            return Err(FormatError::DimMismatch {
                entry: self.name.clone(),
                expected: "at most 255 dims, each < 2^32".into(),
                found: self.dims.clone(),
            });
        }
        let n: usize = self.dims.iter().product();
        if n != self.data.len() {
            return Err(FormatError::DimMismatch {
                entry: self.name.clone(),
                expected: format!("{} values", self.data.len()),
                found: self.dims.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub magic: [u8; 4],
    pub entries: Vec<Entry>,
}

impl Container {
    pub fn new(magic: [u8; 4]) -> Self {
        Self { magic, entries: Vec::new() }
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Entry, FormatError> {
        self.get(name).ok_or_else(|| FormatError::MissingEntry { name: name.to_string() })
    }

    pub fn encode(&self) -> Result<Vec<u8>, FormatError> {
        let mut seen = std::collections::HashSet::new();
        let payload: usize = self.entries.iter().map(|e| e.data.len() * 4 + e.name.len() + 16).sum();
        let mut out = Vec::with_capacity(12 + payload);
        out.extend_from_slice(&self.magic);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            e.check()?;
            if !seen.insert(e.name.as_str()) {
                return Err(FormatError::DuplicateEntry { name: e.name.clone(), offset: out.len() });
            }
            out.push(e.name.len() as u8);
            out.extend_from_slice(e.name.as_bytes());
            out.push(DTYPE_F32);
            out.push(e.dims.len() as u8);
            for d in &e.dims {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &e.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parses `bytes`, requiring the given magic.
    pub fn decode(bytes: &[u8], magic: [u8; 4]) -> Result<Self, FormatError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let found: [u8; 4] = cur.take(4, "header")?.try_into().unwrap();
        if found != magic {
            return Err(FormatError::BadMagic { expected: magic, found });
        }
        let version = cur.u32("header")?;
        if version != CONTAINER_VERSION {
            return Err(FormatError::UnsupportedVersion { version, offset: 4 });
        }
        let count = cur.u32("header")?;
        let mut entries: Vec<Entry> = Vec::new();
        for _ in 0..count {
            let start = cur.pos;
            let name_len = cur.u8("entry header")? as usize;
            let raw = cur.take(name_len, "entry name")?;
            let name = match std::str::from_utf8(raw) {
                Ok(s) if s.is_ascii() && !s.is_empty() => s.to_string(),
                _ => {
                    return Err(FormatError::InvalidName {
                        name: String::from_utf8_lossy(raw).into_owned(),
                        offset: Some(start),
                    })
                }
            };
            if entries.iter().any(|e| e.name == name) {
                return Err(FormatError::DuplicateEntry { name, offset: start });
            }
            let dtype_offset = cur.pos;
            let dtype = cur.u8(&name)?;
            if dtype != DTYPE_F32 {
                return Err(FormatError::UnsupportedDtype { entry: name, dtype, offset: dtype_offset });
            }
            let ndim = cur.u8(&name)? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(cur.u32(&name)? as usize);
            }
            let n = dims
                .iter()
                .try_fold(1usize, |acc, d| acc.checked_mul(*d))
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| FormatError::Truncated { entry: name.clone(), offset: cur.pos })?;
            let raw = cur.take(n, &name)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            entries.push(Entry { name, dims, data });
        }
        if cur.pos != bytes.len() {
            return Err(FormatError::TrailingBytes { offset: cur.pos });
        }
        Ok(Self { magic, entries })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, entry: &str) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(FormatError::Truncated { entry: entry.to_string(), offset: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, entry: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, entry)?[0])
    }

    fn u32(&mut self, entry: &str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, entry)?.try_into().unwrap()))
    }
}
