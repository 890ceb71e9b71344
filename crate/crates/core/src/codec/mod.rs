//! Symbol/frequency mapping, fingerprint bank, correlation decoding and
//! PAM level recovery.

mod alphabet;
mod bank;
mod correlate;
mod decode;

pub use alphabet::{
    ascii_decode, ascii_encode, spectral_efficiency, FrequencyAlphabet, PamScheme, Symbol,
    SymbolStream,
};
pub use bank::{build_bank, read_bank, write_bank, FingerprintBank, BANK_MAGIC, BANK_VERSION};
pub use correlate::pearson;
pub use decode::{decode_frequency, decode_level, fuse_decode, Decision};
