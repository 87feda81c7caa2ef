//! Lossless FIFO overflow store for frontier entries that do not fit the
//! resident queue. Lives outside the budgeted arena.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::graph::Vertex;

/// `(vertex, slot)`.
pub type FrontierEntry = (Vertex, u32);

const RECORD_BYTES: usize = 8;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SpillBackend {
    #[default]
    Memory,
    /// Anonymous temporary files created in this directory.
    File(PathBuf),
}

#[derive(Debug)]
enum Store {
    Memory(VecDeque<FrontierEntry>),
    File {
        file: File,
        read_pos: u64,
        write_pos: u64,
    },
}

#[derive(Debug)]
pub struct SpillStore {
    store: Store,
    len: usize,
    spill_events: u64,
    spilled: u64,
    reloaded: u64,
    audit: Option<HashMap<FrontierEntry, i64>>,
}

impl SpillStore {
    pub fn new(backend: &SpillBackend, audit: bool) -> Result<Self> {
        let store = match backend {
            SpillBackend::Memory => Store::Memory(VecDeque::new()),
            SpillBackend::File(dir) => Store::File {
                file: tempfile::tempfile_in(dir).map_err(Error::SpillIo)?,
                read_pos: 0,
                write_pos: 0,
            },
        };
        Ok(SpillStore {
            store,
            len: 0,
            spill_events: 0,
            spilled: 0,
            reloaded: 0,
            audit: audit.then(HashMap::new),
        })
    }

    pub fn in_memory() -> Self {
        Self::new(&SpillBackend::Memory, false).expect("memory store cannot fail")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spill_events(&self) -> u64 {
        self.spill_events
    }

    pub fn spilled_total(&self) -> u64 {
        self.spilled
    }

    pub fn reloaded_total(&self) -> u64 {
        self.reloaded
    }

    /// With auditing on: the spilled and reloaded multisets agree once the
    /// store is empty. `None` when auditing is off.
    pub fn conservation_holds(&self) -> Option<bool> {
        self.audit
            .as_ref()
            .map(|a| a.values().all(|&c| c >= 0) && (self.len > 0 || a.values().all(|&c| c == 0)))
    }

    /// Append `entries` (oldest first) as one spill event.
    pub fn spill<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = FrontierEntry>,
    {
        let before = self.len;
        match &mut self.store {
            Store::Memory(q) => {
                for e in entries {
                    q.push_back(e);
                    self.len += 1;
                    if let Some(a) = &mut self.audit {
                        *a.entry(e).or_default() += 1;
                    }
                }
            }
            Store::File {
                file, write_pos, ..
            } => {
                let mut buf = Vec::new();
                for e in entries {
                    buf.extend_from_slice(&e.0.to_le_bytes());
                    buf.extend_from_slice(&e.1.to_le_bytes());
                    self.len += 1;
                    if let Some(a) = &mut self.audit {
                        *a.entry(e).or_default() += 1;
                    }
                }
                file.seek(SeekFrom::Start(*write_pos))
                    .map_err(Error::SpillIo)?;
                file.write_all(&buf).map_err(Error::SpillIo)?;
                *write_pos += buf.len() as u64;
            }
        }
        if self.len > before {
            self.spill_events += 1;
            self.spilled += (self.len - before) as u64;
        }
        Ok(())
    }

    /// Pop up to `max` of the oldest entries into `out`.
    pub fn reload(&mut self, max: usize, out: &mut Vec<FrontierEntry>) -> Result<usize> {
        let take = max.min(self.len);
        if take == 0 {
            return Ok(0);
        }
        let start = out.len();
        match &mut self.store {
            Store::Memory(q) => out.extend(q.drain(..take)),
            Store::File {
                file,
                read_pos,
                write_pos,
            } => {
                let mut buf = vec![0u8; take * RECORD_BYTES];
                file.seek(SeekFrom::Start(*read_pos))
                    .map_err(Error::SpillIo)?;
                file.read_exact(&mut buf).map_err(Error::SpillIo)?;
                *read_pos += buf.len() as u64;
                out.extend(buf.chunks_exact(RECORD_BYTES).map(|r| {
                    (
                        u32::from_le_bytes(r[..4].try_into().unwrap()),
                        u32::from_le_bytes(r[4..].try_into().unwrap()),
                    )
                }));
                if *read_pos == *write_pos {
                    file.set_len(0).map_err(Error::SpillIo)?;
                    *read_pos = 0;
                    *write_pos = 0;
                }
            }
        }
        if let Some(a) = &mut self.audit {
            for e in &out[start..] {
                *a.entry(*e).or_default() -= 1;
            }
        }
        self.len -= take;
        self.reloaded += take as u64;
        Ok(take)
    }

    /// Snapshot of the stored entries in FIFO order.
    pub fn peek_all(&mut self) -> Result<Vec<FrontierEntry>> {
        match &mut self.store {
            Store::Memory(q) => Ok(q.iter().copied().collect()),
            Store::File {
                file,
                read_pos,
                write_pos,
            } => {
                let mut buf = vec![0u8; (*write_pos - *read_pos) as usize];
                file.seek(SeekFrom::Start(*read_pos))
                    .map_err(Error::SpillIo)?;
                file.read_exact(&mut buf).map_err(Error::SpillIo)?;
                Ok(buf
                    .chunks_exact(RECORD_BYTES)
                    .map(|r| {
                        (
                            u32::from_le_bytes(r[..4].try_into().unwrap()),
                            u32::from_le_bytes(r[4..].try_into().unwrap()),
                        )
                    })
                    .collect())
            }
        }
    }
}
