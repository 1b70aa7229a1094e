use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use serde::Serialize;

use super::format::{Directory, ImageError, SectionId, DIR_ENTRY_LEN, PREAMBLE_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionStatus {
    Ok,
    Truncated,
    ChecksumMismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionCheck {
    pub section: &'static str,
    #[serde(skip)]
    pub id: SectionId,
    pub offset: u64,
    pub length: u64,
    pub status: SectionStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub version: u16,
    pub fingerprint: String,
    pub sections: Vec<SectionCheck>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.sections.iter().all(|s| s.status == SectionStatus::Ok)
    }

    /// First failing section in file order.
    pub fn first_bad(&self) -> Option<&SectionCheck> {
        self.sections.iter().find(|s| s.status != SectionStatus::Ok)
    }
}

/// Checks magic, version, directory and every section checksum of the image
/// at `path`, reading one section at a time.
///
/// Problems in the preamble or directory are returned as errors; section
/// problems are recorded in the report.
pub fn verify(path: impl AsRef<Path>) -> Result<VerifyReport, ImageError> {
    let path = path.as_ref();
    let io_err = |source| ImageError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = File::open(path).map_err(io_err)?;
    let file_len = file.metadata().map_err(io_err)?.len();

    let mut preamble = [0u8; PREAMBLE_LEN];
    let n = read_up_to(&mut file, &mut preamble).map_err(io_err)?;
    if n < PREAMBLE_LEN {
        // let Directory::parse classify short files
        Directory::parse(&preamble[..n])?;
    }
    let count = u16::from_le_bytes([preamble[10], preamble[11]]) as usize;
    let mut head = vec![0u8; PREAMBLE_LEN + count * DIR_ENTRY_LEN + 4];
    file.seek(SeekFrom::Start(0)).map_err(io_err)?;
    let n = read_up_to(&mut file, &mut head).map_err(io_err)?;
    let dir = Directory::parse(&head[..n])?;

    let mut sections = Vec::with_capacity(dir.entries.len());
    let mut entries = dir.entries.clone();
    entries.sort_by_key(|e| e.offset);
    for e in entries {
        let status = if e.offset.saturating_add(e.length) > file_len {
            SectionStatus::Truncated
        } else {
            let mut buf = vec![0u8; e.length as usize];
            file.seek(SeekFrom::Start(e.offset)).map_err(io_err)?;
            file.read_exact(&mut buf).map_err(io_err)?;
            if crc32fast::hash(&buf) == e.crc {
                SectionStatus::Ok
            } else {
                SectionStatus::ChecksumMismatch
            }
        };
        sections.push(SectionCheck {
            section: e.id.name(),
            id: e.id,
            offset: e.offset,
            length: e.length,
            status,
        });
    }
    Ok(VerifyReport {
        version: dir.version,
        fingerprint: dir.fingerprint().to_string(),
        sections,
    })
}

/// Same checks over an in-memory image.
pub fn verify_bytes(bytes: &[u8]) -> Result<VerifyReport, ImageError> {
    let dir = Directory::parse(bytes)?;
    let mut entries = dir.entries.clone();
    entries.sort_by_key(|e| e.offset);
    let sections = entries
        .into_iter()
        .map(|e| {
            let status = match dir.section(bytes, e.id) {
                Ok(_) => SectionStatus::Ok,
                Err(ImageError::Truncated(_)) => SectionStatus::Truncated,
                Err(_) => SectionStatus::ChecksumMismatch,
            };
            SectionCheck {
                section: e.id.name(),
                id: e.id,
                offset: e.offset,
                length: e.length,
                status,
            }
        })
        .collect();
    Ok(VerifyReport {
        version: dir.version,
        fingerprint: dir.fingerprint().to_string(),
        sections,
    })
}

fn read_up_to(f: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match f.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}
