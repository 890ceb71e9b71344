//! Fingerprint bank: one noiseless unit-level trace per (core, symbol).
//!
//! On disk the bank is a text file:
//!
//! ```text
//! MMFBANK 1 <S> <K> <trace_len> <sample_rate_hz>
//! fiber.length_m=1000
//! ...                       (provenance, one key=value per line)
//! <sample> <sample> ...     (S*K lines, core-major: core 0 symbols 0..S, core 1, ...)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::alphabet::FrequencyAlphabet;
use super::correlate::normalize_centered;
use crate::channel::{
    detect, noise_reference, noise_sigma, synthesize_channel, ChannelInstance, FiberSpec,
    IntensityTrace, ModeEnvelopes, ReceiverSpec,
};
use crate::error::{Error, Result};

pub const BANK_MAGIC: &str = "MMFBANK";
pub const BANK_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct FingerprintBank {
    alphabet: FrequencyAlphabet,
    rx: ReceiverSpec,
    fiber: FiberSpec,
    core_count: usize,
    trace_len: usize,
    /// `traces[core][symbol]`
    traces: Vec<Vec<Vec<f64>>>,
    /// Centred, unit-norm copy of each core's traces, flattened symbol-major.
    normalized: Vec<Vec<f64>>,
    /// `<fp, fp>` per core and symbol, for level estimation.
    energy: Vec<Vec<f64>>,
    /// Per-core noise reference intensity.
    noise_ref: Vec<f64>,
}

impl PartialEq for FingerprintBank {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.rx == other.rx
            && self.fiber == other.fiber
            && self.core_count == other.core_count
            && self.traces == other.traces
    }
}

/// Stores the noiseless unit-level trace of every alphabet frequency at
/// every core of `channel`.
pub fn build_bank(
    channel: &ChannelInstance,
    alphabet: &FrequencyAlphabet,
    rx: &ReceiverSpec,
) -> Result<FingerprintBank> {
    alphabet.validate()?;
    rx.validate()?;
    let jobs: Vec<(usize, usize)> = (0..channel.core_count)
        .flat_map(|k| (0..alphabet.size).map(move |i| (k, i)))
        .collect();
    let envelopes = ModeEnvelopes::new(channel, rx)?;
    let flat: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(k, i)| envelopes.unit_trace(channel, k, alphabet.frequency(i)))
        .collect();
    let traces = flat
        .chunks(alphabet.size)
        .map(|c| c.to_vec())
        .collect::<Vec<_>>();
    FingerprintBank::from_parts(alphabet.clone(), rx.clone(), channel, traces)
}

impl FingerprintBank {
    fn from_parts(
        alphabet: FrequencyAlphabet,
        rx: ReceiverSpec,
        channel: &ChannelInstance,
        traces: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let core_count = channel.core_count;
        let trace_len = traces
            .first()
            .and_then(|c| c.first())
            .map(|t| t.len())
            .unwrap_or(0);
        if traces.len() != core_count {
            return Err(Error::LengthMismatch {
                expected: core_count,
                got: traces.len(),
            });
        }
        for core in &traces {
            if core.len() != alphabet.size {
                return Err(Error::LengthMismatch {
                    expected: alphabet.size,
                    got: core.len(),
                });
            }
            for t in core {
                if t.len() != trace_len {
                    return Err(Error::LengthMismatch {
                        expected: trace_len,
                        got: t.len(),
                    });
                }
            }
        }
        let normalized = traces
            .iter()
            .map(|core| {
                let mut flat = Vec::with_capacity(alphabet.size * trace_len);
                for t in core {
                    flat.extend(normalize_centered(t)?);
                }
                Ok(flat)
            })
            .collect::<Result<Vec<_>>>()?;
        let energy = traces
            .iter()
            .map(|core| core.iter().map(|t| t.iter().map(|v| v * v).sum()).collect())
            .collect();
        let noise_ref = (0..core_count)
            .map(|k| noise_reference(channel, k, &rx))
            .collect::<Result<_>>()?;
        Ok(FingerprintBank {
            alphabet,
            rx,
            fiber: channel.spec.clone(),
            core_count,
            trace_len,
            traces,
            normalized,
            energy,
            noise_ref,
        })
    }

    pub fn alphabet(&self) -> &FrequencyAlphabet {
        &self.alphabet
    }

    pub fn rx(&self) -> &ReceiverSpec {
        &self.rx
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn core_count(&self) -> usize {
        self.core_count
    }

    pub fn symbol_count(&self) -> usize {
        self.alphabet.size
    }

    pub fn trace_len(&self) -> usize {
        self.trace_len
    }

    pub fn fingerprint(&self, core: usize, symbol: usize) -> &[f64] {
        &self.traces[core][symbol]
    }

    pub(crate) fn normalized_row(&self, core: usize, symbol: usize) -> &[f64] {
        let n = self.trace_len;
        &self.normalized[core][symbol * n..(symbol + 1) * n]
    }

    pub(crate) fn energy(&self, core: usize, symbol: usize) -> f64 {
        self.energy[core][symbol]
    }

    pub(crate) fn check_core(&self, core: usize) -> Result<()> {
        if core >= self.core_count {
            return Err(Error::CoreOutOfRange {
                core,
                cores: self.core_count,
            });
        }
        Ok(())
    }

    /// Regenerates the channel this bank was measured on.
    pub fn channel(&self) -> Result<ChannelInstance> {
        synthesize_channel(&self.fiber, self.core_count)
    }

    /// Rebuilds the bank from its recorded provenance.
    pub fn rebuild(&self) -> Result<FingerprintBank> {
        build_bank(&self.channel()?, &self.alphabet, &self.rx)
    }

    /// Noise reference intensity of `core` (see [`crate::channel::noise_reference`]).
    pub fn noise_reference(&self, core: usize) -> f64 {
        self.noise_ref[core]
    }

    /// Detected trace for `symbol` sent at `level` through `core`, with noise
    /// drawn from `noise_seed`.
    ///
    /// Bit-identical to [`crate::channel::propagate`] at the symbol's
    /// frequency, since both scale the same unit-level samples.
    pub fn transmit(
        &self,
        core: usize,
        symbol: usize,
        level: f64,
        snr_db: f64,
        noise_seed: u64,
    ) -> IntensityTrace {
        let unit = &self.traces[core][symbol];
        let sigma = noise_sigma(self.noise_ref[core], snr_db);
        IntensityTrace {
            samples: detect(unit, level, sigma, noise_seed),
            sample_rate_hz: self.rx.sample_rate_hz,
            core_index: core,
        }
    }

    fn provenance(&self) -> Vec<(&'static str, String)> {
        let f = &self.fiber;
        let r = &self.rx;
        let a = &self.alphabet;
        vec![
            ("fiber.length_m", format!("{:e}", f.length_m)),
            ("fiber.n_avg", format!("{:e}", f.n_avg)),
            ("fiber.delta_n", format!("{:e}", f.delta_n)),
            ("fiber.modes", f.mode_count.to_string()),
            ("fiber.theta_spread_s", format!("{:e}", f.theta_spread_s)),
            ("fiber.rng_seed", f.rng_seed.to_string()),
            ("cores", self.core_count.to_string()),
            ("rx.sample_rate_hz", format!("{:e}", r.sample_rate_hz)),
            ("rx.symbol_period_s", format!("{:e}", r.symbol_period_s)),
            ("rx.pulse_width_s", format!("{:e}", r.pulse_width_s)),
            ("rx.snr_db", format!("{:e}", r.snr_db)),
            ("rx.oversample", r.oversample.to_string()),
            (
                "alphabet.start_offset_hz",
                format!("{:e}", a.start_offset_hz),
            ),
            ("alphabet.spacing_hz", format!("{:e}", a.spacing_hz)),
            ("alphabet.size", a.size.to_string()),
        ]
    }

    /// Serializes the bank in the `MMFBANK` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{BANK_MAGIC} {BANK_VERSION} {} {} {} {:e}",
            self.alphabet.size, self.core_count, self.trace_len, self.rx.sample_rate_hz
        );
        for (k, v) in self.provenance() {
            let _ = writeln!(out, "{k}={v}");
        }
        for core in &self.traces {
            for t in core {
                let mut first = true;
                for s in t {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{s:e}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parses the `MMFBANK` text format.
    pub fn from_text(text: &str) -> Result<FingerprintBank> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty bank file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.first() != Some(&BANK_MAGIC) {
            return Err(Error::parse(ln, format!("expected `{BANK_MAGIC}` header")));
        }
        let version = fields
            .get(1)
            .ok_or_else(|| Error::parse(ln, "missing version"))?;
        if *version != BANK_VERSION.to_string() {
            return Err(Error::UnsupportedVersion(version.to_string()));
        }
        if fields.len() != 6 {
            return Err(Error::parse(ln, "header needs 6 fields"));
        }
        let symbols: usize = parse_field(ln, fields[2])?;
        let cores: usize = parse_field(ln, fields[3])?;
        let trace_len: usize = parse_field(ln, fields[4])?;
        let header_rate: f64 = parse_field(ln, fields[5])?;

        let mut kv = std::collections::BTreeMap::new();
        let mut traces: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(symbols); cores];
        let mut row = 0usize;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                if row > 0 {
                    return Err(Error::parse(ln, "provenance after trace data"));
                }
                kv.insert(k.trim().to_string(), (ln, v.trim().to_string()));
                continue;
            }
            if row >= symbols * cores {
                return Err(Error::parse(ln, "more trace lines than header declares"));
            }
            let t = line
                .split_whitespace()
                .map(|s| parse_field::<f64>(ln, s))
                .collect::<Result<Vec<_>>>()?;
            if t.len() != trace_len {
                return Err(Error::parse(
                    ln,
                    format!("trace has {} samples, expected {trace_len}", t.len()),
                ));
            }
            traces[row / symbols].push(t);
            row += 1;
        }
        if row != symbols * cores {
            return Err(Error::parse(
                text.lines().count(),
                format!("expected {} trace lines, found {row}", symbols * cores),
            ));
        }

        let get = |key: &str| -> Result<(usize, &str)> {
            kv.get(key)
                .map(|(l, v)| (*l, v.as_str()))
                .ok_or_else(|| Error::parse(0, format!("missing provenance key `{key}`")))
        };
        fn val<T: std::str::FromStr>(e: Result<(usize, &str)>) -> Result<T> {
            let (l, v) = e?;
            parse_field(l, v)
        }
        let fiber = FiberSpec {
            length_m: val(get("fiber.length_m"))?,
            n_avg: val(get("fiber.n_avg"))?,
            delta_n: val(get("fiber.delta_n"))?,
            mode_count: val(get("fiber.modes"))?,
            theta_spread_s: val(get("fiber.theta_spread_s"))?,
            rng_seed: val(get("fiber.rng_seed"))?,
        };
        let rx = ReceiverSpec {
            sample_rate_hz: val(get("rx.sample_rate_hz"))?,
            symbol_period_s: val(get("rx.symbol_period_s"))?,
            pulse_width_s: val(get("rx.pulse_width_s"))?,
            snr_db: val(get("rx.snr_db"))?,
            oversample: val(get("rx.oversample"))?,
        };
        let alphabet = FrequencyAlphabet {
            start_offset_hz: val(get("alphabet.start_offset_hz"))?,
            spacing_hz: val(get("alphabet.spacing_hz"))?,
            size: val(get("alphabet.size"))?,
        };
        let core_count: usize = val(get("cores"))?;
        if alphabet.size != symbols || core_count != cores || rx.sample_rate_hz != header_rate {
            return Err(Error::parse(1, "header disagrees with provenance block"));
        }
        rx.validate()?;
        alphabet.validate()?;
        let channel = synthesize_channel(&fiber, core_count)?;
        FingerprintBank::from_parts(alphabet, rx, &channel, traces)
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{s}`")))
}

pub fn write_bank(bank: &FingerprintBank, path: &Path) -> Result<()> {
    std::fs::write(path, bank.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_bank(path: &Path) -> Result<FingerprintBank> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FingerprintBank::from_text(&text)
}
