//! Embedding and permutation text files.
//!
//! Embedding file: first line `V d`, then `V` lines of `token x1 ... xd`.
//! Permutation file: `V` lines, one original token index per line.

use std::fmt::Write as _;
use std::path::Path;

use super::{EmbeddingTable, IndexPermutation};
use crate::error::{Error, Result};

pub const EMBEDDING_FORMAT: &str = "V d, then V lines: token x1 .. xd";

impl EmbeddingTable {
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim());
        for (t, v) in self.tokens.iter().zip(&self.vectors) {
            out.push_str(t);
            for x in v {
                let _ = write!(out, " {x:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty embedding file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::parse(ln, "header must be `V d`"));
        }
        let v: usize = num(ln, head[0])?;
        let d: usize = num(ln, head[1])?;
        let mut tokens = Vec::with_capacity(v);
        let mut vectors = Vec::with_capacity(v);
        for (ln, line) in lines {
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default();
            let vec = fields
                .map(|s| num::<f64>(ln, s))
                .collect::<Result<Vec<_>>>()?;
            if vec.len() != d {
                return Err(Error::parse(
                    ln,
                    format!("expected {d} components, found {}", vec.len()),
                ));
            }
            tokens.push(token.to_string());
            vectors.push(vec);
        }
        if tokens.len() != v {
            return Err(Error::parse(
                ln,
                format!("header declares {v} tokens, file has {}", tokens.len()),
            ));
        }
        EmbeddingTable::new(tokens, vectors)
    }
}

impl IndexPermutation {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in self.order() {
            let _ = writeln!(out, "{i}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let order = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| num::<usize>(i + 1, l.trim()))
            .collect::<Result<Vec<_>>>()?;
        IndexPermutation::new(order)
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{s}`")))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::from_text(&text)
}

pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_permutation(path: &Path) -> Result<IndexPermutation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    IndexPermutation::from_text(&text)
}

pub fn write_permutation(perm: &IndexPermutation, path: &Path) -> Result<()> {
    std::fs::write(path, perm.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_token_file() {
        let t = EmbeddingTable::from_text("3 2\nA 1 0\nB 0 1\nC 0.8 0.6\n").unwrap();
        assert_eq!(t.tokens(), &["A", "B", "C"]);
        assert_eq!(t.vector(2), &[0.8, 0.6]);
        assert_eq!(EmbeddingTable::from_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            EmbeddingTable::from_text("3\nA 1 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            EmbeddingTable::from_text("2 2\nA 1 0\nB 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(EmbeddingTable::from_text("3 2\nA 1 0\nB 0 1\n").is_err());
        assert!(EmbeddingTable::from_text("2 1\nA x\nB 1\n").is_err());
        assert!(IndexPermutation::from_text("0\n0\n").is_err());
        assert!(IndexPermutation::from_text("0\nz\n").is_err());
    }

    #[test]
    fn permutation_round_trip() {
        let p = IndexPermutation::new(vec![3, 0, 2, 1]).unwrap();
        assert_eq!(IndexPermutation::from_text(&p.to_text()).unwrap(), p);
    }
}
