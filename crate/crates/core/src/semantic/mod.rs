//! Semantic index ordering.
//!
//! Decoding errors on the fiber land mostly on neighbouring symbol indices.
//! Re-indexing the vocabulary so that neighbouring indices hold tokens with
//! similar embeddings turns those near-miss errors into near-synonyms.

mod files;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub use files::{
    read_embeddings, read_permutation, write_embeddings, write_permutation, EMBEDDING_FORMAT,
};

/// Token strings with one embedding vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if tokens.len() != vectors.len() {
            return Err(Error::LengthMismatch {
                expected: tokens.len(),
                got: vectors.len(),
            });
        }
        if tokens.len() < 2 {
            return Err(Error::invalid("embeddings", "at least two tokens required"));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::invalid("embeddings", "dimension must be at least 1"));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::invalid("embeddings", format!("bad token `{t}`")));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::invalid(
                    "embeddings",
                    format!("duplicate token `{t}`"),
                ));
            }
        }
        let mut norms = Vec::with_capacity(vectors.len());
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("embeddings", "non-finite component"));
            }
            let n = norm(v);
            if n == 0.0 {
                return Err(Error::ZeroVector);
            }
            norms.push(n);
        }
        Ok(EmbeddingTable {
            tokens,
            vectors,
            norms,
        })
    }

    /// Builds a table with tokens named `t0, t1, ...`.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let tokens = (0..vectors.len()).map(|i| format!("t{i}")).collect();
        EmbeddingTable::new(tokens, vectors)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    fn cosine_between(&self, a: usize, b: usize) -> f64 {
        let d: f64 = self.vectors[a]
            .iter()
            .zip(&self.vectors[b])
            .map(|(x, y)| x * y)
            .sum();
        (d / (self.norms[a] * self.norms[b])).clamp(-1.0, 1.0)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity `u.v / (|u| |v|)`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let d: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

/// `order[p]` is the original token index transmitted as symbol `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPermutation {
    order: Vec<usize>,
}

impl IndexPermutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= order.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: order.len(),
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("permutation", format!("index {i} repeated")));
            }
        }
        Ok(IndexPermutation { order })
    }

    pub fn identity(size: usize) -> Self {
        IndexPermutation {
            order: (0..size).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Token at symbol position `p`.
    pub fn token_at(&self, position: usize) -> usize {
        self.order[position]
    }

    /// `inverse()[token]` is the symbol position of `token`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.order.len()];
        for (p, &t) in self.order.iter().enumerate() {
            inv[t] = p;
        }
        inv
    }
}

/// Nearest-neighbour chain: starting from `start`, repeatedly append the
/// unplaced token with the highest cosine similarity to the last placed one.
/// Ties go to the smallest original index.
pub fn greedy_order(table: &EmbeddingTable, start: usize) -> Result<IndexPermutation> {
    let v = table.len();
    if start >= v {
        return Err(Error::IndexOutOfRange {
            index: start,
            size: v,
        });
    }
    let mut placed = vec![false; v];
    let mut order = Vec::with_capacity(v);
    let mut current = start;
    placed[current] = true;
    order.push(current);
    while order.len() < v {
        let mut best = usize::MAX;
        let mut best_sim = f64::NEG_INFINITY;
        for (cand, _) in placed.iter().enumerate().filter(|(_, &p)| !p) {
            let sim = table.cosine_between(current, cand);
            if sim > best_sim {
                best = cand;
                best_sim = sim;
            }
        }
        placed[best] = true;
        order.push(best);
        current = best;
    }
    Ok(IndexPermutation { order })
}

/// Mean cosine similarity over the `V - 1` adjacent pairs of `perm`.
pub fn adjacency_mean(perm: &IndexPermutation, table: &EmbeddingTable) -> Result<f64> {
    if perm.len() != table.len() {
        return Err(Error::LengthMismatch {
            expected: table.len(),
            got: perm.len(),
        });
    }
    let sum: f64 = perm
        .order
        .windows(2)
        .map(|w| table.cosine_between(w[0], w[1]))
        .sum();
    Ok(sum / (perm.len() - 1) as f64)
}

/// Channel abstraction: each symbol errs with `error_rate`; an erring symbol
/// moves by `+-d` where `d` in `1..=offset_weights.len()` is drawn with the
/// given weights and the sign is a fair coin.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetErrorModel {
    error_rate: f64,
    offset_weights: Vec<f64>,
}

/// Offset weights for `|d| = 1..4`, shaped after a channel histogram in
/// which most errors fall on the adjacent index.
pub const DEFAULT_OFFSET_WEIGHTS: [f64; 4] = [0.70, 0.15, 0.10, 0.05];

impl OffsetErrorModel {
    pub fn new(error_rate: f64, offset_weights: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(Error::invalid("error_rate", "must lie in [0, 1]"));
        }
        if offset_weights.is_empty() {
            return Err(Error::invalid("offset_weights", "need at least one offset"));
        }
        if offset_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("offset_weights", "weights must be positive"));
        }
        let total: f64 = offset_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("offset_weights", "weights must sum to 1"));
        }
        Ok(OffsetErrorModel {
            error_rate,
            offset_weights,
        })
    }

    pub fn with_default_weights(error_rate: f64) -> Result<Self> {
        OffsetErrorModel::new(error_rate, DEFAULT_OFFSET_WEIGHTS.to_vec())
    }

    /// Fits offset weights to observed `|offset|` counts (`counts[d - 1]` for
    /// offset `d`). Offsets never observed are dropped from the tail and
    /// interior gaps get a single pseudo-count so every weight stays positive.
    pub fn from_offset_counts(error_rate: f64, counts: &[u64]) -> Result<Self> {
        let last = counts
            .iter()
            .rposition(|&c| c > 0)
            .ok_or_else(|| Error::invalid("counts", "no errors observed"))?;
        let adj: Vec<f64> = counts[..=last]
            .iter()
            .map(|&c| if c == 0 { 1.0 } else { c as f64 })
            .collect();
        let total: f64 = adj.iter().sum();
        let mut weights: Vec<f64> = adj.iter().map(|c| c / total).collect();
        // Absorb rounding so the sum is 1 to machine precision.
        let s: f64 = weights.iter().sum();
        weights[0] += 1.0 - s;
        OffsetErrorModel::new(error_rate, weights)
    }

    pub fn error_rate(&self) -> f64 {
        self.error_rate
    }

    pub fn offset_weights(&self) -> &[f64] {
        &self.offset_weights
    }

    pub fn max_offset(&self) -> usize {
        self.offset_weights.len()
    }
}

/// Positions selected for error by `perturb` with the same arguments.
pub fn error_mask(len: usize, error_rate: f64, seed: u64) -> Vec<bool> {
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    (0..len).map(|_| rng.random::<f64>() < error_rate).collect()
}

/// Applies the offset error model to a symbol sequence. Results are clamped
/// to `[0, vocab_size)`.
pub fn perturb(
    seq: &[usize],
    model: &OffsetErrorModel,
    vocab_size: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if let Some(&bad) = seq.iter().find(|&&s| s >= vocab_size) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            size: vocab_size,
        });
    }
    let mask = error_mask(seq.len(), model.error_rate, seed);
    let picker = WeightedIndex::new(&model.offset_weights)
        .map_err(|e| Error::invalid("offset_weights", e.to_string()))?;
    let mut rng = rng_from_seed(derive_seed(seed, &[1]));
    let top = vocab_size as i64 - 1;
    Ok(seq
        .iter()
        .zip(mask)
        .map(|(&s, err)| {
            if !err {
                return s;
            }
            let d = picker.sample(&mut rng) as i64 + 1;
            let signed = if rng.random::<bool>() { d } else { -d };
            (s as i64 + signed).clamp(0, top) as usize
        })
        .collect())
}
