//! Length-prefixed, checksummed framing shared by the write log and the
//! snapshot file: `[len: u32 LE][crc32(payload): u32 LE][payload]`.

use std::fs::{File, OpenOptions};
use std::io::{self, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::Entity;

const HEADER: usize = 8;

pub(crate) fn frame(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

/// Split `bytes` into frames. Returns the payloads of every intact frame
/// and the byte length of that intact prefix.
pub(crate) fn read_frames(bytes: &[u8]) -> (Vec<&[u8]>, usize) {
    let mut out = Vec::new();
    let mut pos = 0;
    while bytes.len() - pos >= HEADER {
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap());
        let start = pos + HEADER;
        let Some(end) = start.checked_add(len).filter(|&e| e <= bytes.len()) else { break };
        let payload = &bytes[start..end];
        if crc32fast::hash(payload) != crc {
            break;
        }
        out.push(payload);
        pos = end;
    }
    (out, pos)
}

/// One atomic commit: every record written plus the allocator state after it.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Batch {
    pub alloc: [u64; 5],
    pub puts: Vec<Entity>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SnapshotHeader {
    pub alloc: [u64; 5],
    pub records: usize,
    pub dump_created_date: Option<chrono::NaiveDate>,
}

pub(crate) struct Wal {
    file: File,
    len: u64,
    sync: bool,
}

impl Wal {
    /// Open the log, truncated to `valid_len` (anything after it was torn).
    pub fn open(path: &Path, valid_len: u64, sync: bool) -> io::Result<Self> {
        let mut file = OpenOptions::new().create(true).read(true).write(true).truncate(false).open(path)?;
        if file.metadata()?.len() != valid_len {
            file.set_len(valid_len)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::Start(valid_len))?;
        Ok(Self { file, len: valid_len, sync })
    }

    pub fn append(&mut self, payload: &[u8]) -> io::Result<()> {
        let bytes = frame(payload);
        if let Err(e) = self.file.write_all(&bytes).and_then(|_| if self.sync { self.file.sync_data() } else { Ok(()) }) {
            // Drop a partial frame so later appends stay readable.
            let _ = self.file.set_len(self.len);
            let _ = self.file.seek(SeekFrom::Start(self.len));
            return Err(e);
        }
        self.len += bytes.len() as u64;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn reset(&mut self) -> io::Result<()> {
        self.file.set_len(0)?;
        self.file.seek(SeekFrom::Start(0))?;
        self.file.sync_all()?;
        self.len = 0;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.file.sync_data()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_truncation_keeps_a_frame_prefix() {
        let mut log = Vec::new();
        for p in [&b"alpha"[..], b"", b"gamma-gamma"] {
            log.extend(frame(p));
        }
        let full = read_frames(&log);
        assert_eq!(full.0.len(), 3);
        assert_eq!(full.1, log.len());
        let mut boundaries = vec![0];
        boundaries.extend([8 + 5, 8 + 5 + 8, log.len()]);
        for cut in 0..=log.len() {
            let (frames, valid) = read_frames(&log[..cut]);
            let expected = boundaries.iter().filter(|&&b| b > 0 && b <= cut).count();
            assert_eq!(frames.len(), expected, "cut at {cut}");
            assert!(boundaries.contains(&valid));
        }
    }

    #[test]
    fn flipped_byte_stops_the_scan() {
        let mut log = frame(b"one");
        log.extend(frame(b"two"));
        log[8 + 3 + 9] ^= 0x01;
        assert_eq!(read_frames(&log).0, vec![&b"one"[..]]);
    }
}
