//! Simulator and codec for frequency-encoded transmission over a multimode
//! fiber, with the semantic index-ordering experiments built on top of it.
//!
//! * [`channel`]: parametric fiber model producing per-core intensity traces.
//! * [`modulation`]: I/Q modulator transfer and single-sideband tone check.
//! * [`codec`]: fingerprint bank, correlation decoding, PAM, multi-core fusion.
//! * [`semantic`]: cosine-similarity index ordering and the offset error model.
//! * [`sentiment`]: synthetic labeled corpus and a logistic-regression classifier.
//! * [`harness`]: seeded Monte Carlo sweeps, result tables and configuration.

pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod modulation;
pub mod rng;
pub mod semantic;
pub mod sentiment;

pub use channel::{
    delay_spread, propagate, spectral_correlation, synthesize_channel, ChannelInstance, FiberSpec,
    IntensityTrace, ReceiverSpec,
};
pub use codec::{
    build_bank, decode_frequency, decode_level, fuse_decode, pearson, spectral_efficiency,
    FingerprintBank, FrequencyAlphabet, PamScheme,
};
pub use error::{Error, Result};
pub use harness::{Experiment, OutputFormat, ResultTable, SweepAxis, SweepConfig};
pub use modulation::{iq_output, ssb_spectrum, ssb_tone, IqDrive, ToneCommand};
pub use semantic::{greedy_order, perturb, EmbeddingTable, IndexPermutation, OffsetErrorModel};
pub use sentiment::{LabeledCorpus, LinearClassifier, TrainConfig};
