//! Corpus file: first line `N vocab_size`, then `N` lines `label idx1 .. idxk`.
//! Classifier file: first line `d`, then `d` weights and the bias, one per line.

use std::fmt::Write as _;
use std::path::Path;

use super::{LabeledCorpus, LinearClassifier, Sample};
use crate::error::{Error, Result};

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{s}`")))
}

impl LabeledCorpus {
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.vocab_size());
        for s in self.samples() {
            let _ = write!(out, "{}", s.label);
            for t in &s.tokens {
                let _ = write!(out, " {t}");
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
            .ok_or_else(|| Error::parse(1, "empty corpus file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::parse(ln, "header must be `N vocab_size`"));
        }
        let n: usize = num(ln, head[0])?;
        let vocab: usize = num(ln, head[1])?;
        let mut samples = Vec::with_capacity(n);
        for (ln, line) in lines {
            let mut f = line.split_whitespace();
            let label: u8 = num(ln, f.next().unwrap_or_default())?;
            let tokens = f.map(|s| num(ln, s)).collect::<Result<Vec<usize>>>()?;
            samples.push(Sample { tokens, label });
        }
        if samples.len() != n {
            return Err(Error::parse(
                ln,
                format!("header declares {n} samples, file has {}", samples.len()),
            ));
        }
        LabeledCorpus::new(samples, vocab)
    }
}

impl LinearClassifier {
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.weights.len());
        for w in self.weights.iter().chain(std::iter::once(&self.bias)) {
            let _ = writeln!(out, "{w:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        let (ln, d) = tokens
            .next()
            .ok_or_else(|| Error::parse(1, "empty classifier file"))?;
        let d: usize = num(ln, d)?;
        let values = tokens
            .map(|(ln, t)| num::<f64>(ln, t))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != d + 1 {
            return Err(Error::parse(
                ln,
                format!("expected {} values, found {}", d + 1, values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(ln, "non-finite classifier parameter"));
        }
        Ok(LinearClassifier {
            weights: values[..d].to_vec(),
            bias: values[d],
        })
    }
}

pub fn read_corpus(path: &Path) -> Result<LabeledCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LabeledCorpus::from_text(&text)
}

pub fn write_corpus(corpus: &LabeledCorpus, path: &Path) -> Result<()> {
    std::fs::write(path, corpus.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_classifier(path: &Path) -> Result<LinearClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    LinearClassifier::from_text(&text)
}

pub fn write_classifier(clf: &LinearClassifier, path: &Path) -> Result<()> {
    std::fs::write(path, clf.to_text()).map_err(|e| Error::io(path, e))
}
