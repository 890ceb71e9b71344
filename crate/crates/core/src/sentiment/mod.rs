//! Synthetic sentiment corpus and a mean-pooled logistic-regression classifier.
//!
//! Each token has a latent polarity along a hidden sentiment axis; a sample
//! is labeled by the sign of the mean projection of its token embeddings on
//! that axis. Token indices are assigned in shuffled order, so the original
//! index order carries no semantic structure.

mod files;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::semantic::EmbeddingTable;

pub use files::{read_classifier, read_corpus, write_classifier, write_corpus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub tokens: Vec<usize>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    samples: Vec<Sample>,
    vocab_size: usize,
}

impl LabeledCorpus {
    pub fn new(samples: Vec<Sample>, vocab_size: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("corpus", "no samples"));
        }
        let mut seen = [false; 2];
        for s in &samples {
            if s.tokens.is_empty() {
                return Err(Error::invalid("corpus", "empty token sequence"));
            }
            if s.label > 1 {
                return Err(Error::invalid(
                    "corpus",
                    format!("label {} not in {{0,1}}", s.label),
                ));
            }
            seen[s.label as usize] = true;
            if let Some(&bad) = s.tokens.iter().find(|&&t| t >= vocab_size) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    size: vocab_size,
                });
            }
        }
        if !(seen[0] && seen[1]) {
            return Err(Error::invalid("corpus", "both labels must be present"));
        }
        Ok(LabeledCorpus {
            samples,
            vocab_size,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.samples.iter().filter(|s| s.label == 1).count() as f64 / self.len() as f64
    }
}

/// Sizes and seed of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub vocab_size: usize,
    pub dim: usize,
    pub train_n: usize,
    pub test_n: usize,
    pub seq_len: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            vocab_size: 512,
            dim: 16,
            train_n: 2000,
            test_n: 500,
            seq_len: 20,
            seed: 7,
        }
    }
}

/// Per-component standard deviation of the off-axis embedding noise.
const EMBEDDING_NOISE: f64 = 0.1;
/// Probability that a token is drawn from the sample's leaning polarity.
const LEANING: f64 = 0.65;

/// Everything produced by [`synth_corpus`].
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub table: EmbeddingTable,
    pub train: LabeledCorpus,
    pub test: LabeledCorpus,
    /// Unit sentiment axis.
    pub axis: Vec<f64>,
    /// Latent polarity of each token, in `[-1, 1]`.
    pub polarity: Vec<f64>,
}

impl SyntheticCorpus {
    /// Mean projection of a sample's embeddings on the sentiment axis.
    pub fn projection(&self, tokens: &[usize]) -> f64 {
        let m = mean_embedding(tokens, &self.table);
        m.iter().zip(&self.axis).map(|(a, b)| a * b).sum()
    }
}

/// Generates an embedding table plus train and test corpora.
pub fn synth_corpus(spec: &CorpusSpec) -> Result<SyntheticCorpus> {
    if spec.vocab_size < 8 {
        return Err(Error::invalid("vocab_size", "must be at least 8"));
    }
    if spec.dim < 2 {
        return Err(Error::invalid("dim", "must be at least 2"));
    }
    if spec.train_n < 2 || spec.test_n < 2 || spec.seq_len < 1 {
        return Err(Error::invalid(
            "corpus",
            "need at least two train and test samples and non-empty sequences",
        ));
    }
    let mut rng = rng_from_seed(spec.seed);
    let v = spec.vocab_size;

    let mut axis: Vec<f64> = (0..spec.dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    axis.iter_mut().for_each(|x| *x /= n);

    // Evenly spread polarities, then shuffle so index order says nothing.
    let mut polarity: Vec<f64> = (0..v)
        .map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / v as f64)
        .collect();
    polarity.shuffle(&mut rng);

    let noise = Normal::new(0.0, EMBEDDING_NOISE).expect("valid sigma");
    let vectors: Vec<Vec<f64>> = polarity
        .iter()
        .map(|&s| {
            axis.iter()
                .map(|a| s * a + noise.sample(&mut rng))
                .collect()
        })
        .collect();
    let tokens = (0..v).map(|i| format!("w{i}")).collect();
    let table = EmbeddingTable::new(tokens, vectors)?;

    let positive: Vec<usize> = (0..v).filter(|&t| polarity[t] > 0.0).collect();
    let negative: Vec<usize> = (0..v).filter(|&t| polarity[t] <= 0.0).collect();

    let make = |count: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<usize>> {
        (0..count)
            .map(|_| {
                let leans_positive = rng.random::<bool>();
                (0..spec.seq_len)
                    .map(|_| {
                        let with_lean = rng.random::<f64>() < LEANING;
                        let pool = if with_lean == leans_positive {
                            &positive
                        } else {
                            &negative
                        };
                        pool[rng.random_range(0..pool.len())]
                    })
                    .collect()
            })
            .collect()
    };
    let train_seqs = make(spec.train_n, &mut rng);
    let test_seqs = make(spec.test_n, &mut rng);

    let label = |seq: Vec<usize>| {
        let m = mean_embedding(&seq, &table);
        let p: f64 = m.iter().zip(&axis).map(|(a, b)| a * b).sum();
        Sample {
            tokens: seq,
            label: u8::from(p > 0.0),
        }
    };
    let train = LabeledCorpus::new(train_seqs.into_iter().map(label).collect(), v)?;
    let test = LabeledCorpus::new(test_seqs.into_iter().map(label).collect(), v)?;
    Ok(SyntheticCorpus {
        table,
        train,
        test,
        axis,
        polarity,
    })
}

/// Mean of the embeddings of `tokens`.
pub fn mean_embedding(tokens: &[usize], table: &EmbeddingTable) -> Vec<f64> {
    let mut m = vec![0.0; table.dim()];
    for &t in tokens {
        for (acc, x) in m.iter_mut().zip(table.vector(t)) {
            *acc += x;
        }
    }
    let n = tokens.len().max(1) as f64;
    m.iter_mut().for_each(|x| *x /= n);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearClassifier {
    pub fn zeros(dim: usize) -> Self {
        LinearClassifier {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    fn logit(&self, features: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }

    pub fn probability(&self, features: &[f64]) -> f64 {
        sigmoid(self.logit(features))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 4.0,
            epochs: 400,
            l2: 0.001,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2", "must be >= 0"));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_corpus(corpus: &LabeledCorpus, table: &EmbeddingTable) -> Result<()> {
    if corpus.vocab_size() > table.len() {
        return Err(Error::invalid(
            "corpus",
            format!(
                "vocabulary of {} exceeds embedding table of {}",
                corpus.vocab_size(),
                table.len()
            ),
        ));
    }
    Ok(())
}

/// Mean logistic loss plus `l2 * |w|^2`.
fn objective(clf: &LinearClassifier, x: &[Vec<f64>], y: &[f64], l2: f64) -> f64 {
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let z = clf.logit(xi);
            softplus(z) - yi * z
        })
        .sum::<f64>()
        / x.len() as f64;
    data + l2 * clf.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Full-batch gradient descent on the L2-penalized logistic loss over
/// mean-pooled embeddings. Returns the classifier and the objective before
/// each epoch's update followed by the final objective.
///
/// The penalty is applied as a proximal shrink, `w <- (w - lr*g) / (1 + 2*lr*l2)`,
/// which stays stable for any penalty strength. The bias is not penalized.
pub fn train_with_history(
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<(LinearClassifier, Vec<f64>)> {
    cfg.validate()?;
    check_corpus(corpus, table)?;
    let x: Vec<Vec<f64>> = corpus
        .samples()
        .iter()
        .map(|s| mean_embedding(&s.tokens, table))
        .collect();
    let y: Vec<f64> = corpus.samples().iter().map(|s| s.label as f64).collect();
    let n = x.len() as f64;
    let d = table.dim();
    let mut clf = LinearClassifier::zeros(d);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let shrink = 1.0 / (1.0 + 2.0 * cfg.learning_rate * cfg.l2);
    for _ in 0..cfg.epochs {
        history.push(objective(&clf, &x, &y, cfg.l2));
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (xi, &yi) in x.iter().zip(&y) {
            let r = clf.probability(xi) - yi;
            for (g, v) in gw.iter_mut().zip(xi) {
                *g += r * v;
            }
            gb += r;
        }
        for (w, g) in clf.weights.iter_mut().zip(&gw) {
            *w = (*w - cfg.learning_rate * g / n) * shrink;
        }
        clf.bias -= cfg.learning_rate * gb / n;
    }
    history.push(objective(&clf, &x, &y, cfg.l2));
    Ok((clf, history))
}

pub fn train(
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    cfg: &TrainConfig,
) -> Result<LinearClassifier> {
    train_with_history(corpus, table, cfg).map(|(c, _)| c)
}

/// Probability of the positive class for one token sequence.
pub fn predict(clf: &LinearClassifier, seq: &[usize], table: &EmbeddingTable) -> Result<f64> {
    if let Some(&bad) = seq.iter().find(|&&t| t >= table.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            size: table.len(),
        });
    }
    if clf.weights.len() != table.dim() {
        return Err(Error::LengthMismatch {
            expected: table.dim(),
            got: clf.weights.len(),
        });
    }
    Ok(clf.probability(&mean_embedding(seq, table)))
}

/// Fraction of samples whose thresholded prediction (`p >= 0.5` means 1)
/// differs from the label.
pub fn evaluate(
    clf: &LinearClassifier,
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
) -> Result<f64> {
    check_corpus(corpus, table)?;
    let mut wrong = 0usize;
    for s in corpus.samples() {
        let p = predict(clf, &s.tokens, table)?;
        if u8::from(p >= 0.5) != s.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / corpus.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (EmbeddingTable, LabeledCorpus) {
        let table = EmbeddingTable::from_vectors(vec![vec![1.0, 0.2], vec![-1.0, 0.3]]).unwrap();
        let samples = vec![
            Sample {
                tokens: vec![0],
                label: 1,
            },
            Sample {
                tokens: vec![1],
                label: 0,
            },
            Sample {
                tokens: vec![0, 0, 1],
                label: 1,
            },
            Sample {
                tokens: vec![1, 1, 0],
                label: 0,
            },
        ];
        (table, LabeledCorpus::new(samples, 2).unwrap())
    }

    #[test]
    fn separable_corpus_is_learned() {
        let (table, corpus) = separable();
        let clf = train(&corpus, &table, &TrainConfig::default()).unwrap();
        assert_eq!(evaluate(&clf, &corpus, &table).unwrap(), 0.0);
    }

    #[test]
    fn strong_penalty_shrinks_weights() {
        let (table, corpus) = separable();
        let cfg = TrainConfig {
            l2: 1e6,
            ..TrainConfig::default()
        };
        let clf = train(&corpus, &table, &cfg).unwrap();
        let norm = clf.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "norm {norm}");
    }

    #[test]
    fn predict_basics() {
        let table = EmbeddingTable::from_vectors(vec![vec![0.5, -1.0], vec![2.0, 1.0]]).unwrap();
        let zero = LinearClassifier::zeros(2);
        assert_eq!(predict(&zero, &[0, 1], &table).unwrap(), 0.5);

        let mut clf = LinearClassifier {
            weights: vec![0.3, -0.7],
            bias: -0.2,
        };
        let p0 = predict(&clf, &[1], &table).unwrap();
        clf.bias += 0.1;
        let p1 = predict(&clf, &[1], &table).unwrap();
        assert!(p1 > p0);

        let x = [0.4, -1.3];
        let c = LinearClassifier {
            weights: vec![0.9, 0.2],
            bias: 0.15,
        };
        let neg = LinearClassifier {
            weights: vec![-0.9, -0.2],
            bias: -0.15,
        };
        assert!((c.probability(&x) + neg.probability(&x) - 1.0).abs() < 1e-15);
        assert!(predict(&zero, &[2], &table).is_err());
    }

    #[test]
    fn constant_classifier_on_balanced_corpus() {
        let synth = synth_corpus(&CorpusSpec::default()).unwrap();
        let always_pos = LinearClassifier {
            weights: vec![0.0; 16],
            bias: 1.0,
        };
        let err = evaluate(&always_pos, &synth.test, &synth.table).unwrap();
        assert!((err - 0.5).abs() <= 0.1);
    }

    #[test]
    fn corpus_validation() {
        let s = |t: Vec<usize>, l| Sample {
            tokens: t,
            label: l,
        };
        assert!(LabeledCorpus::new(vec![s(vec![0], 1), s(vec![1], 1)], 2).is_err());
        assert!(LabeledCorpus::new(vec![s(vec![0], 1), s(vec![], 0)], 2).is_err());
        assert!(LabeledCorpus::new(vec![s(vec![0], 1), s(vec![2], 0)], 2).is_err());
        assert!(LabeledCorpus::new(vec![s(vec![0], 2), s(vec![1], 0)], 2).is_err());
        assert!(synth_corpus(&CorpusSpec {
            vocab_size: 4,
            ..CorpusSpec::default()
        })
        .is_err());
    }
}
