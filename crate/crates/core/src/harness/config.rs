//! Flat `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Keys, with the base defaults shared by every experiment:
//!
//! | key | default |
//! |---|---|
//! | `seed` | 1 |
//! | `trials` | 10000 |
//! | `cores` | 7 |
//! | `workers` | 0 (all available threads) |
//! | `fusion` | true |
//! | `axis` | `spacing_hz`, `sample_rate_hz`, `snr_db` or `error_rate` |
//! | `axis.values` | comma list, experiment dependent |
//! | `fiber.length_m` | 1000 |
//! | `fiber.n_avg` | 1.45 |
//! | `fiber.delta_n` | 0.0085 |
//! | `fiber.modes` | 4096 |
//! | `fiber.theta_spread_s` | 2e-6 |
//! | `fiber.rng_seed` | 1 |
//! | `rx.sample_rate_hz` | 10e9 |
//! | `rx.symbol_period_s` | 20e-9 |
//! | `rx.pulse_width_s` | 0.05e-9 |
//! | `rx.snr_db` | 25 |
//! | `rx.oversample` | 8 |
//! | `alphabet.start_offset_hz` | 0 |
//! | `alphabet.spacing_hz` | 600e3 |
//! | `alphabet.size` | 128 |
//! | `pam.levels` | 0.25, 0.5, 0.75, 1 |
//! | `offsets.grid_hz` | 100, 300, 1000, 3000, 10000, 30000 |
//! | `offsets.probe_trials` | 200 |
//! | `offsets.target_low`, `offsets.target_high` | 0.38, 0.48 |
//! | `offsets.max_steps` | 24 |
//! | `semantic.vocab_size`, `semantic.dim` | 512, 16 |
//! | `semantic.train`, `semantic.test`, `semantic.seq_len` | 2000, 500, 20 |
//! | `semantic.corpus_seed` | 7 |
//! | `semantic.learning_rate`, `semantic.epochs`, `semantic.l2` | 4, 400, 0.001 |
//! | `semantic.seeds`, `semantic.sequences` | 20, 50 |
//! | `semantic.start` | 0 |
//! | `semantic.offset_weights` | 0.7, 0.15, 0.1, 0.05 |
//!
//! Experiment presets change a few of these:
//!
//! * `ser-spacing`: `axis = spacing_hz`, values 100, 200, 400, 700, 600e3.
//! * `ser-rate`: `alphabet.spacing_hz = 2000`, `axis = sample_rate_hz`, 6e9 to 11e9 in 1 GHz steps.
//! * `pam`: `axis = snr_db`, values 25, 0.
//! * `offsets`: `axis = spacing_hz` set to the tuning grid (the axis is not swept).
//! * `semantic`: `alphabet.spacing_hz = 1000`, `alphabet.size = 512`, `axis = sample_rate_hz`,
//!   values 2.2e9, 2.4e9, 3e9, 4e9, 6e9, 8e9. `axis = error_rate` selects the offset-model fast path.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{FiberSpec, ReceiverSpec};
use crate::codec::{FrequencyAlphabet, PamScheme};
use crate::error::{Error, Result};
use crate::semantic::DEFAULT_OFFSET_WEIGHTS;
use crate::sentiment::{CorpusSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    SpacingHz(Vec<f64>),
    SampleRateHz(Vec<f64>),
    SnrDb(Vec<f64>),
    /// Symbol error rates for the semantic fast path.
    ErrorRate(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SpacingHz(_) => "spacing_hz",
            SweepAxis::SampleRateHz(_) => "sample_rate_hz",
            SweepAxis::SnrDb(_) => "snr_db",
            SweepAxis::ErrorRate(_) => "error_rate",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::SpacingHz(v)
            | SweepAxis::SampleRateHz(v)
            | SweepAxis::SnrDb(v)
            | SweepAxis::ErrorRate(v) => v,
        }
    }

    fn with_name(name: &str, values: Vec<f64>) -> Result<Self> {
        Ok(match name {
            "spacing_hz" => SweepAxis::SpacingHz(values),
            "sample_rate_hz" => SweepAxis::SampleRateHz(values),
            "snr_db" => SweepAxis::SnrDb(values),
            "error_rate" => SweepAxis::ErrorRate(values),
            _ => return Err(Error::Config(format!("unknown axis `{name}`"))),
        })
    }
}

/// Settings for the spacing search behind the error-offset histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetTuning {
    pub grid_hz: Vec<f64>,
    pub probe_trials: usize,
    pub target_low: f64,
    pub target_high: f64,
    pub max_steps: usize,
}

impl Default for OffsetTuning {
    fn default() -> Self {
        OffsetTuning {
            grid_hz: vec![100.0, 300.0, 1e3, 3e3, 1e4, 3e4],
            probe_trials: 200,
            target_low: 0.38,
            target_high: 0.48,
            max_steps: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticSettings {
    pub corpus: CorpusSpec,
    pub train: TrainConfig,
    pub seeds: usize,
    pub sequences: usize,
    pub start: usize,
    pub offset_weights: Vec<f64>,
}

impl Default for SemanticSettings {
    fn default() -> Self {
        SemanticSettings {
            corpus: CorpusSpec::default(),
            train: TrainConfig::default(),
            seeds: 20,
            sequences: 50,
            start: 0,
            offset_weights: DEFAULT_OFFSET_WEIGHTS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SerSpacing,
    SerRate,
    Pam,
    Offsets,
    Semantic,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SerSpacing => "ser-spacing",
            Experiment::SerRate => "ser-rate",
            Experiment::Pam => "pam",
            Experiment::Offsets => "offsets",
            Experiment::Semantic => "semantic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub fiber: FiberSpec,
    pub rx: ReceiverSpec,
    pub alphabet: FrequencyAlphabet,
    pub pam: PamScheme,
    pub cores: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub axis: SweepAxis,
    pub fusion: bool,
    /// Worker threads; 0 uses every available thread. Never affects results.
    pub workers: usize,
    pub offsets: OffsetTuning,
    pub semantic: SemanticSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fiber: FiberSpec::default(),
            rx: ReceiverSpec::default(),
            alphabet: FrequencyAlphabet::default(),
            pam: PamScheme::pam4(),
            cores: 7,
            trials: 10_000,
            master_seed: 1,
            axis: SweepAxis::SpacingHz(vec![100.0, 200.0, 400.0, 700.0, 600e3]),
            fusion: true,
            workers: 0,
            offsets: OffsetTuning::default(),
            semantic: SemanticSettings::default(),
        }
    }
}

impl SweepConfig {
    /// Calibrated default configuration of each experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let base = SweepConfig::default();
        match experiment {
            Experiment::SerSpacing => base,
            Experiment::SerRate => SweepConfig {
                alphabet: FrequencyAlphabet {
                    spacing_hz: 2e3,
                    ..base.alphabet
                },
                axis: SweepAxis::SampleRateHz(vec![6e9, 7e9, 8e9, 9e9, 10e9, 11e9]),
                ..base
            },
            Experiment::Pam => SweepConfig {
                axis: SweepAxis::SnrDb(vec![25.0, 0.0]),
                ..base
            },
            Experiment::Offsets => SweepConfig {
                axis: SweepAxis::SpacingHz(OffsetTuning::default().grid_hz),
                ..base
            },
            Experiment::Semantic => SweepConfig {
                alphabet: FrequencyAlphabet {
                    spacing_hz: 1e3,
                    size: 512,
                    ..base.alphabet
                },
                axis: SweepAxis::SampleRateHz(vec![2.2e9, 2.4e9, 3e9, 4e9, 6e9, 8e9]),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.rx.validate()?;
        self.alphabet.validate()?;
        if self.cores < 1 {
            return Err(Error::Config("cores must be at least 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let values = self.axis.values();
        if values.is_empty() {
            return Err(Error::Config("axis.values must not be empty".into()));
        }
        let ok = match &self.axis {
            SweepAxis::SpacingHz(v) | SweepAxis::SampleRateHz(v) => {
                v.iter().all(|x| *x > 0.0 && x.is_finite())
            }
            SweepAxis::SnrDb(v) => v.iter().all(|x| !x.is_nan() && *x != f64::NEG_INFINITY),
            SweepAxis::ErrorRate(v) => v.iter().all(|x| (0.0..=1.0).contains(x)),
        };
        if !ok {
            return Err(Error::Config(format!(
                "axis.values out of range for axis {}",
                self.axis.name()
            )));
        }
        let o = &self.offsets;
        if o.grid_hz.len() < 2 || o.grid_hz.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Config(
                "offsets.grid_hz needs at least two positive spacings".into(),
            ));
        }
        if o.probe_trials < 1
            || !(0.0 < o.target_low && o.target_low < o.target_high && o.target_high < 1.0)
        {
            return Err(Error::Config(
                "offsets needs probe_trials >= 1 and 0 < target_low < target_high < 1".into(),
            ));
        }
        let s = &self.semantic;
        s.train.validate()?;
        if s.seeds < 1 || s.sequences < 1 {
            return Err(Error::Config(
                "semantic.seeds and semantic.sequences must be >= 1".into(),
            ));
        }
        if s.sequences > s.corpus.test_n {
            return Err(Error::Config(format!(
                "semantic.sequences ({}) exceeds the test corpus size ({})",
                s.sequences, s.corpus.test_n
            )));
        }
        if s.start >= s.corpus.vocab_size {
            return Err(Error::Config(
                "semantic.start must be below semantic.vocab_size".into(),
            ));
        }
        Ok(())
    }

    /// Full `key = value` listing of this configuration. Parsing it back
    /// with [`SweepConfig::from_text`] reproduces the configuration exactly,
    /// except `workers`, which is left out because it never changes results.
    pub fn to_config_text(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", self.master_seed.to_string());
        kv("trials", self.trials.to_string());
        kv("cores", self.cores.to_string());
        kv("fusion", self.fusion.to_string());
        kv("axis", self.axis.name().to_string());
        kv("axis.values", list(self.axis.values()));
        let f = &self.fiber;
        kv("fiber.length_m", format!("{:?}", f.length_m));
        kv("fiber.n_avg", format!("{:?}", f.n_avg));
        kv("fiber.delta_n", format!("{:?}", f.delta_n));
        kv("fiber.modes", f.mode_count.to_string());
        kv("fiber.theta_spread_s", format!("{:?}", f.theta_spread_s));
        kv("fiber.rng_seed", f.rng_seed.to_string());
        let r = &self.rx;
        kv("rx.sample_rate_hz", format!("{:?}", r.sample_rate_hz));
        kv("rx.symbol_period_s", format!("{:?}", r.symbol_period_s));
        kv("rx.pulse_width_s", format!("{:?}", r.pulse_width_s));
        kv("rx.snr_db", format!("{:?}", r.snr_db));
        kv("rx.oversample", r.oversample.to_string());
        let a = &self.alphabet;
        kv(
            "alphabet.start_offset_hz",
            format!("{:?}", a.start_offset_hz),
        );
        kv("alphabet.spacing_hz", format!("{:?}", a.spacing_hz));
        kv("alphabet.size", a.size.to_string());
        kv("pam.levels", list(self.pam.levels()));
        let o = &self.offsets;
        kv("offsets.grid_hz", list(&o.grid_hz));
        kv("offsets.probe_trials", o.probe_trials.to_string());
        kv("offsets.target_low", format!("{:?}", o.target_low));
        kv("offsets.target_high", format!("{:?}", o.target_high));
        kv("offsets.max_steps", o.max_steps.to_string());
        let s = &self.semantic;
        kv("semantic.vocab_size", s.corpus.vocab_size.to_string());
        kv("semantic.dim", s.corpus.dim.to_string());
        kv("semantic.train", s.corpus.train_n.to_string());
        kv("semantic.test", s.corpus.test_n.to_string());
        kv("semantic.seq_len", s.corpus.seq_len.to_string());
        kv("semantic.corpus_seed", s.corpus.seed.to_string());
        kv(
            "semantic.learning_rate",
            format!("{:?}", s.train.learning_rate),
        );
        kv("semantic.epochs", s.train.epochs.to_string());
        kv("semantic.l2", format!("{:?}", s.train.l2));
        kv("semantic.seeds", s.seeds.to_string());
        kv("semantic.sequences", s.sequences.to_string());
        kv("semantic.start", s.start.to_string());
        kv("semantic.offset_weights", list(&s.offset_weights));
        out
    }

    /// Applies `key = value` lines on top of `base` and validates the result.
    pub fn from_text(text: &str, base: SweepConfig) -> Result<SweepConfig> {
        let mut cfg = base;
        let mut seen = BTreeSet::new();
        let mut axis_name: Option<String> = None;
        let mut axis_values: Option<Vec<f64>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    i + 1
                )));
            }
            let at = |e: Error| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            };
            match key {
                "axis" => axis_name = Some(value.to_string()),
                "axis.values" => axis_values = Some(list(key, value).map_err(at)?),
                _ => cfg.set(key, value).map_err(at)?,
            }
        }
        if axis_name.is_some() || axis_values.is_some() {
            let name = axis_name.unwrap_or_else(|| cfg.axis.name().to_string());
            let values = axis_values.unwrap_or_else(|| cfg.axis.values().to_vec());
            cfg.axis = SweepAxis::with_name(&name, values)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, base: SweepConfig) -> Result<SweepConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SweepConfig::from_text(&text, base)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.master_seed = num(key, v)?,
            "trials" => self.trials = num(key, v)?,
            "cores" => self.cores = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "fusion" => {
                self.fusion = match v {
                    "true" | "on" => true,
                    "false" | "off" => false,
                    _ => return Err(Error::Config(format!("`{key}` expects true or false"))),
                }
            }
            "fiber.length_m" => self.fiber.length_m = num(key, v)?,
            "fiber.n_avg" => self.fiber.n_avg = num(key, v)?,
            "fiber.delta_n" => self.fiber.delta_n = num(key, v)?,
            "fiber.modes" => self.fiber.mode_count = num(key, v)?,
            "fiber.theta_spread_s" => self.fiber.theta_spread_s = num(key, v)?,
            "fiber.rng_seed" => self.fiber.rng_seed = num(key, v)?,
            "rx.sample_rate_hz" => self.rx.sample_rate_hz = num(key, v)?,
            "rx.symbol_period_s" => self.rx.symbol_period_s = num(key, v)?,
            "rx.pulse_width_s" => self.rx.pulse_width_s = num(key, v)?,
            "rx.snr_db" => self.rx.snr_db = num(key, v)?,
            "rx.oversample" => self.rx.oversample = num(key, v)?,
            "alphabet.start_offset_hz" => self.alphabet.start_offset_hz = num(key, v)?,
            "alphabet.spacing_hz" => self.alphabet.spacing_hz = num(key, v)?,
            "alphabet.size" => self.alphabet.size = num(key, v)?,
            "pam.levels" => {
                self.pam = PamScheme::new(list(key, v)?)
                    .map_err(|e| Error::Config(format!("`{key}`: {e}")))?
            }
            "offsets.grid_hz" => self.offsets.grid_hz = list(key, v)?,
            "offsets.probe_trials" => self.offsets.probe_trials = num(key, v)?,
            "offsets.target_low" => self.offsets.target_low = num(key, v)?,
            "offsets.target_high" => self.offsets.target_high = num(key, v)?,
            "offsets.max_steps" => self.offsets.max_steps = num(key, v)?,
            "semantic.vocab_size" => self.semantic.corpus.vocab_size = num(key, v)?,
            "semantic.dim" => self.semantic.corpus.dim = num(key, v)?,
            "semantic.train" => self.semantic.corpus.train_n = num(key, v)?,
            "semantic.test" => self.semantic.corpus.test_n = num(key, v)?,
            "semantic.seq_len" => self.semantic.corpus.seq_len = num(key, v)?,
            "semantic.corpus_seed" => self.semantic.corpus.seed = num(key, v)?,
            "semantic.learning_rate" => self.semantic.train.learning_rate = num(key, v)?,
            "semantic.epochs" => self.semantic.train.epochs = num(key, v)?,
            "semantic.l2" => self.semantic.train.l2 = num(key, v)?,
            "semantic.seeds" => self.semantic.seeds = num(key, v)?,
            "semantic.sequences" => self.semantic.sequences = num(key, v)?,
            "semantic.start" => self.semantic.start = num(key, v)?,
            "semantic.offset_weights" => self.semantic.offset_weights = list(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips_every_preset() {
        for e in [
            Experiment::SerSpacing,
            Experiment::SerRate,
            Experiment::Pam,
            Experiment::Offsets,
            Experiment::Semantic,
        ] {
            let mut cfg = SweepConfig::preset(e);
            cfg.rx.snr_db = f64::INFINITY;
            cfg.fiber.theta_spread_s = 1.0 / 3.0 * 1e-6;
            cfg.workers = 0;
            let back =
                SweepConfig::from_text(&cfg.to_config_text(), SweepConfig::default()).unwrap();
            assert_eq!(back, cfg, "{}", e.name());
        }
    }

    #[test]
    fn overlay_and_errors() {
        let cfg = SweepConfig::from_text(
            "# comment\n\ntrials = 50\naxis = snr_db\naxis.values = 25, 0\npam.levels = 0.5, 1\n",
            SweepConfig::default(),
        )
        .unwrap();
        assert_eq!(cfg.trials, 50);
        assert_eq!(cfg.axis, SweepAxis::SnrDb(vec![25.0, 0.0]));
        assert_eq!(cfg.pam.levels(), &[0.5, 1.0]);

        for bad in [
            "trials = 0",
            "trials = many",
            "bogus = 1",
            "trials = 1\ntrials = 2",
            "no equals sign",
            "axis = wavelength",
            "axis.values = ",
            "fiber.delta_n = 2",
            "pam.levels = 0.5, 0.4",
            "fusion = maybe",
        ] {
            let err = SweepConfig::from_text(bad, SweepConfig::default()).unwrap_err();
            assert!(err.is_config_error(), "{bad}: {err}");
        }
    }
}
