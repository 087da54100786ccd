// SPDX-License-Identifier: Apache-2.0

//! Edge-list text input and the binary CSR cache.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Graph, GraphError, NodeId};

/// First eight bytes of a binary graph cache.
pub const CACHE_MAGIC: [u8; 8] = *b"LEDPCSR\0";
pub const CACHE_VERSION: u64 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GraphError + '_ {
    move |source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Graph {
    /// Loads a whitespace-separated edge list (SNAP style).
    ///
    /// Lines starting with `#` or `%` are comments, blank lines are skipped,
    /// and anything after the first two tokens (weights, timestamps) is ignored.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        Self::read_edge_list(BufReader::new(file)).map_err(|e| match e {
            GraphError::Io { source, .. } => GraphError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn read_edge_list(reader: impl BufRead) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| GraphError::Io {
                path: "<reader>".into(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let parsed = match (tokens.next(), tokens.next()) {
                (Some(a), Some(b)) => a.parse::<u64>().ok().zip(b.parse::<u64>().ok()),
                _ => None,
            };
            match parsed {
                Some(edge) => edges.push(edge),
                None => {
                    return Err(GraphError::Malformed {
                        line: idx + 1,
                        content: line,
                    })
                }
            }
        }
        Self::from_edges(edges)
    }

    /// Writes the graph as an edge list over original IDs, one line per undirected edge.
    pub fn write_edge_list(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# n={} m={}", self.n(), self.m())?;
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.original_id(u), self.original_id(v))?;
        }
        Ok(())
    }

    /// Writes the binary cache: magic, version, n, m, the `n + 1` offsets, the
    /// `2m` neighbor entries and finally the `n` original IDs, all as
    /// little-endian 64-bit integers after the magic.
    pub fn write_cache(&self, out: impl Write) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(&CACHE_MAGIC)?;
        let (offsets, neighbors) = self.raw_parts();
        let header = [CACHE_VERSION, self.n() as u64, self.m() as u64];
        for x in header
            .into_iter()
            .chain(offsets.iter().map(|&o| o as u64))
            .chain(neighbors.iter().map(|&v| v as u64))
            .chain(self.original_ids().iter().copied())
        {
            out.write_all(&x.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn save_cache(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(io_err(path))?;
        self.write_cache(file).map_err(io_err(path))
    }

    pub fn read_cache(input: impl Read) -> Result<Self, GraphError> {
        let mut input = BufReader::new(input);
        let bad = |msg: &str| GraphError::BadCache(msg.to_string());
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| bad("truncated header"))?;
        if magic != CACHE_MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut word = || -> Result<u64, GraphError> {
            let mut buf = [0u8; 8];
            input
                .read_exact(&mut buf)
                .map_err(|_| GraphError::BadCache("truncated body".into()))?;
            Ok(u64::from_le_bytes(buf))
        };
        let version = word()?;
        if version != CACHE_VERSION {
            return Err(GraphError::BadCache(format!("unsupported version {version}")));
        }
        let n = word()? as usize;
        let m = word()? as usize;
        if n > NodeId::MAX as usize {
            return Err(GraphError::TooLarge(n));
        }
        let offsets = (0..=n)
            .map(|_| word().map(|x| x as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let neighbors = (0..2 * m)
            .map(|_| {
                word().and_then(|x| {
                    NodeId::try_from(x).map_err(|_| GraphError::BadCache("neighbor overflow".into()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ids = (0..n).map(|_| word()).collect::<Result<Vec<_>, _>>()?;
        Graph::from_raw_parts(offsets, neighbors, ids)
    }

    pub fn load_cache(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        Self::read_cache(file)
    }

    /// Loads either format, picking the binary cache when the file starts with [`CACHE_MAGIC`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let mut head = [0u8; 8];
        let is_cache = File::open(path)
            .and_then(|mut f| f.read_exact(&mut head))
            .map(|_| head == CACHE_MAGIC)
            .unwrap_or(false);
        if is_cache {
            Self::load_cache(path)
        } else {
            Self::load_edge_list(path)
        }
    }
}
