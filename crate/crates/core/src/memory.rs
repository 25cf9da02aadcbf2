//! Memory pool of historical successful physical ops and the two
//! similarity retrievers used to pick demonstrations: Levenshtein ratio
//! for character-sensitive keys and cosine similarity over embeddings for
//! semantic keys.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Records kept per pool; the oldest are evicted beyond this.
pub const POOL_CAPACITY: usize = 10_000;

/// Default embedding dimension for the built-in trigram provider.
pub const EMBED_DIM: usize = 256;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("pool io error: {detail}")]
    Io { detail: String },
}

/// Levenshtein ratio: `1 - LED(a, b) / (|a| + |b|)` with unit-cost edits,
/// measured in characters; two empty strings have ratio 1.
pub fn lev_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / total as f64
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Cosine similarity of two non-zero vectors.
pub fn cosine(e1: &[f64], e2: &[f64]) -> Result<f64, MemoryError> {
    let dot: f64 = e1.iter().zip(e2).map(|(a, b)| a * b).sum();
    let n1: f64 = e1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n2: f64 = e2.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(MemoryError::ZeroVector);
    }
    Ok(dot / (n1 * n2))
}

/// Pluggable text encoder; the default is a hashed character-trigram bag.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f64>;
}

/// Hashed character-trigram bag, L2-normalized, dimension 256. Empty text
/// maps to the all-zero vector, which retrieval treats as similarity 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramEmbedder;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl EmbeddingProvider for TrigramEmbedder {
    fn embed(&self, text: &str) -> Vec<f64> {
        let chars: Vec<char> = text.chars().collect();
        let mut counts = vec![0f64; EMBED_DIM];
        let mut bump = |gram: &str| {
            let slot = (fnv1a(gram.as_bytes()) % EMBED_DIM as u64) as usize;
            counts[slot] += 1.0;
        };
        if chars.is_empty() {
            return counts;
        }
        if chars.len() < 3 {
            bump(&chars.iter().collect::<String>());
        } else {
            for window in chars.windows(3) {
                bump(&window.iter().collect::<String>());
            }
        }
        let norm: f64 = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            for c in &mut counts {
                *c /= norm;
            }
        }
        counts
    }
}

pub fn embed(text: &str) -> Vec<f64> {
    TrigramEmbedder.embed(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Succeeded,
    RepairedThenSucceeded,
}

/// One admitted demonstration: only ops whose final attempt had zero
/// failed cells are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    /// Retrieval key: op description, column name, and up to 3 sample
    /// values joined with " | ".
    pub key: String,
    /// Wire-encoded physical op.
    pub payload: String,
    pub outcome: Outcome,
    /// Unix seconds at admission; ordering ties are broken by insertion
    /// order, which recency follows in an append-only pool.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMode {
    Lexical,
    Semantic,
}

/// Append-only demonstration pool, bounded at [`POOL_CAPACITY`].
#[derive(Debug, Default)]
pub struct MemoryPool {
    records: VecDeque<MemoryRecord>,
}

impl MemoryPool {
    pub fn new() -> MemoryPool {
        MemoryPool::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn admit(&mut self, record: MemoryRecord) {
        self.records.push_back(record);
        while self.records.len() > POOL_CAPACITY {
            self.records.pop_front();
        }
    }

    /// Up to `k` records by similarity to the key, descending; ties break
    /// toward more recent records. Deterministic for fixed contents.
    pub fn retrieve(&self, key: &str, k: usize, mode: RetrievalMode) -> Vec<&MemoryRecord> {
        if k == 0 || self.records.is_empty() {
            return Vec::new();
        }
        let query_embedding = match mode {
            RetrievalMode::Semantic => Some(embed(key)),
            RetrievalMode::Lexical => None,
        };
        let mut scored: Vec<(f64, usize)> = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let sim = match mode {
                    RetrievalMode::Lexical => lev_ratio(key, &r.key),
                    RetrievalMode::Semantic => {
                        let q = query_embedding.as_ref().expect("semantic query embedding");
                        cosine(q, &embed(&r.key)).unwrap_or(0.0)
                    }
                };
                (sim, i)
            })
            .collect();
        scored.sort_by(|(sa, ia), (sb, ib)| {
            sb.partial_cmp(sa)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| {
                    let ta = self.records[*ia].timestamp;
                    let tb = self.records[*ib].timestamp;
                    tb.cmp(&ta).then(ib.cmp(ia))
                })
        });
        scored
            .into_iter()
            .take(k)
            .map(|(_, i)| &self.records[i])
            .collect()
    }

    /// Load a pool from a JSON-lines file, keeping the newest
    /// [`POOL_CAPACITY`] records.
    pub fn load(path: &Path) -> Result<MemoryPool, MemoryError> {
        let text = std::fs::read_to_string(path).map_err(|e| MemoryError::Io {
            detail: format!("{}: {e}", path.display()),
        })?;
        let mut pool = MemoryPool::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: MemoryRecord =
                serde_json::from_str(line).map_err(|e| MemoryError::Io {
                    detail: format!("{} line {}: {e}", path.display(), i + 1),
                })?;
            pool.admit(record);
        }
        Ok(pool)
    }

    /// Write the pool as JSON-lines. Single-writer contract per pool file.
    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("memory records serialize"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| MemoryError::Io {
            detail: format!("{}: {e}", path.display()),
        })
    }
}
