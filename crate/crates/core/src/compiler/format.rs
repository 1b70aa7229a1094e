//! Byte-level layout of corpus images. See the format chapter of the guide
//! for the normative description.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"FABRIC01";
pub const FORMAT_VERSION: u16 = 1;

/// magic + version + section count
pub const PREAMBLE_LEN: usize = 12;
/// id u16, reserved u16, offset u64, length u64, crc32 u32
pub const DIR_ENTRY_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u16)]
pub enum SectionId {
    Meta = 1,
    Text = 2,
    Slots = 3,
    Otypes = 4,
    Nodes = 5,
    MonadPool = 6,
    Canonical = 7,
    Edges = 8,
    Features = 9,
}

impl SectionId {
    pub const ALL: [SectionId; 9] = [
        SectionId::Meta,
        SectionId::Text,
        SectionId::Slots,
        SectionId::Otypes,
        SectionId::Nodes,
        SectionId::MonadPool,
        SectionId::Canonical,
        SectionId::Edges,
        SectionId::Features,
    ];

    pub fn from_u16(v: u16) -> Option<Self> {
        SectionId::ALL.iter().copied().find(|s| *s as u16 == v)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SectionId::Meta => "meta",
            SectionId::Text => "text",
            SectionId::Slots => "slots",
            SectionId::Otypes => "otypes",
            SectionId::Nodes => "nodes",
            SectionId::MonadPool => "monad_pool",
            SectionId::Canonical => "canonical",
            SectionId::Edges => "edges",
            SectionId::Features => "features",
        }
    }
}

impl fmt::Display for SectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a problem in an image was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Place {
    Preamble,
    Directory,
    Section(SectionId),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Preamble => f.write_str("preamble"),
            Place::Directory => f.write_str("section directory"),
            Place::Section(s) => write!(f, "section `{s}`"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("NOT_A_FABRIC_IMAGE: bad magic bytes")]
    NotAFabricImage,
    #[error("unsupported image version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },
    #[error("image truncated in {0}")]
    Truncated(Place),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(Place),
    #[error("corrupt {place}: {detail}")]
    Corrupt { place: Place, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ImageError {
    /// The section the error was found in, if it is section-specific.
    pub fn section(&self) -> Option<SectionId> {
        match self {
            ImageError::Truncated(Place::Section(s))
            | ImageError::ChecksumMismatch(Place::Section(s))
            | ImageError::Corrupt {
                place: Place::Section(s),
                ..
            } => Some(*s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirEntry {
    pub id: SectionId,
    pub offset: u64,
    pub length: u64,
    pub crc: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directory {
    pub version: u16,
    pub entries: Vec<DirEntry>,
    /// Length of preamble + directory + directory checksum.
    pub header_len: usize,
    fingerprint: String,
}

impl Directory {
    /// Parses and checks the preamble and directory at the start of `bytes`.
    /// `bytes` may be just a prefix of the image.
    pub fn parse(bytes: &[u8]) -> Result<Directory, ImageError> {
        if bytes.len() < PREAMBLE_LEN {
            if bytes.len() >= 8 && &bytes[..8] != MAGIC {
                return Err(ImageError::NotAFabricImage);
            }
            return Err(ImageError::Truncated(Place::Preamble));
        }
        if &bytes[..8] != MAGIC {
            return Err(ImageError::NotAFabricImage);
        }
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != FORMAT_VERSION {
            return Err(ImageError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let count = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
        let dir_end = PREAMBLE_LEN + count * DIR_ENTRY_LEN;
        let header_len = dir_end + 4;
        if bytes.len() < header_len {
            return Err(ImageError::Truncated(Place::Directory));
        }
        let stored = u32::from_le_bytes(bytes[dir_end..header_len].try_into().unwrap());
        if crc32fast::hash(&bytes[..dir_end]) != stored {
            return Err(ImageError::ChecksumMismatch(Place::Directory));
        }
        let mut entries = Vec::with_capacity(count);
        for i in 0..count {
            let e = &bytes[PREAMBLE_LEN + i * DIR_ENTRY_LEN..][..DIR_ENTRY_LEN];
            let raw_id = u16::from_le_bytes([e[0], e[1]]);
            let id = SectionId::from_u16(raw_id).ok_or_else(|| ImageError::Corrupt {
                place: Place::Directory,
                detail: format!("unknown section id {raw_id}"),
            })?;
            entries.push(DirEntry {
                id,
                offset: u64::from_le_bytes(e[4..12].try_into().unwrap()),
                length: u64::from_le_bytes(e[12..20].try_into().unwrap()),
                crc: u32::from_le_bytes(e[20..24].try_into().unwrap()),
            });
        }
        for s in SectionId::ALL {
            if !entries.iter().any(|e| e.id == s) {
                return Err(ImageError::Corrupt {
                    place: Place::Directory,
                    detail: format!("missing section `{s}`"),
                });
            }
        }
        let fingerprint = {
            let digest = Sha256::digest(&bytes[..header_len]);
            digest.iter().map(|b| format!("{b:02x}")).collect()
        };
        Ok(Directory {
            version,
            entries,
            header_len,
            fingerprint,
        })
    }

    pub fn entry(&self, id: SectionId) -> DirEntry {
        *self
            .entries
            .iter()
            .find(|e| e.id == id)
            .expect("presence checked in parse")
    }

    /// SHA-256 of the preamble and directory. The directory holds every
    /// section checksum, so any content change changes the fingerprint.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// The bytes of one section, checked against its checksum.
    pub fn section<'a>(&self, bytes: &'a [u8], id: SectionId) -> Result<&'a [u8], ImageError> {
        let e = self.entry(id);
        let start = e.offset as usize;
        let end = start
            .checked_add(e.length as usize)
            .ok_or(ImageError::Truncated(Place::Section(id)))?;
        if end > bytes.len() {
            return Err(ImageError::Truncated(Place::Section(id)));
        }
        let data = &bytes[start..end];
        if crc32fast::hash(data) != e.crc {
            return Err(ImageError::ChecksumMismatch(Place::Section(id)));
        }
        Ok(data)
    }
}

/// Little-endian section encoder.
#[derive(Default)]
pub struct Enc {
    pub buf: Vec<u8>,
}

impl Enc {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u32s(&mut self, vs: impl IntoIterator<Item = u32>) {
        for v in vs {
            self.u32(v);
        }
    }
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    pub fn strs<'a>(&mut self, ss: impl ExactSizeIterator<Item = &'a str>) {
        self.u32(ss.len() as u32);
        for s in ss {
            self.str(s);
        }
    }
    pub fn varint(&mut self, mut v: u32) {
        while v >= 0x80 {
            self.buf.push((v as u8) | 0x80);
            v >>= 7;
        }
        self.buf.push(v as u8);
    }
}

/// Bounds-checked decoder over one section.
pub struct Dec<'a> {
    data: &'a [u8],
    pos: usize,
    section: SectionId,
}

impl<'a> Dec<'a> {
    pub fn new(data: &'a [u8], section: SectionId) -> Self {
        Dec {
            data,
            pos: 0,
            section,
        }
    }

    pub fn corrupt(&self, detail: impl Into<String>) -> ImageError {
        ImageError::Corrupt {
            place: Place::Section(self.section),
            detail: detail.into(),
        }
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], ImageError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.corrupt(format!("read past end at byte {}", self.pos)))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, ImageError> {
        Ok(self.bytes(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16, ImageError> {
        Ok(u16::from_le_bytes(self.bytes(2)?.try_into().unwrap()))
    }
    pub fn u32(&mut self) -> Result<u32, ImageError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }
    pub fn u32s(&mut self, n: usize) -> Result<Vec<u32>, ImageError> {
        let raw = self.bytes(n.checked_mul(4).ok_or_else(|| self.corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    pub fn str(&mut self) -> Result<&'a str, ImageError> {
        let n = self.u32()? as usize;
        let raw = self.bytes(n)?;
        std::str::from_utf8(raw).map_err(|_| self.corrupt("invalid UTF-8 string"))
    }
    pub fn strs(&mut self) -> Result<Vec<String>, ImageError> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n.min(self.data.len()));
        for _ in 0..n {
            out.push(self.str()?.to_string());
        }
        Ok(out)
    }
    pub fn varint(&mut self) -> Result<u32, ImageError> {
        let mut v: u32 = 0;
        for shift in (0..35).step_by(7) {
            let b = self.u8()?;
            v |= ((b & 0x7f) as u32)
                .checked_shl(shift)
                .ok_or_else(|| self.corrupt("varint overflow"))?;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(self.corrupt("varint too long"))
    }
    pub fn rest(&self) -> &'a [u8] {
        &self.data[self.pos..]
    }
    pub fn finish(&self) -> Result<(), ImageError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(self.corrupt(format!("{} trailing bytes", self.data.len() - self.pos)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn varints_round_trip(vs in prop::collection::vec(any::<u32>(), 0..50)) {
            let mut e = Enc::default();
            for &v in &vs { e.varint(v); }
            let mut d = Dec::new(&e.buf, SectionId::MonadPool);
            for &v in &vs { prop_assert_eq!(d.varint().unwrap(), v); }
            prop_assert!(d.finish().is_ok());
        }
    }
}
