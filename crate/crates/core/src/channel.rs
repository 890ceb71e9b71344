//! Parametric multimode-fiber channel.
//!
//! A launched pulse splits into one sub-pulse per guided mode. Each mode `m`
//! arrives with a group delay `tau_m` and picks up a frequency-dependent
//! phase `2*pi*f*theta_m`; at a receiving core `k` the modes superpose with
//! complex weights `w[k][m]`. The detected intensity over one symbol window
//! is the temporal "dispersion curve" that identifies the launched frequency.
//!
//! Detection is integrate-and-dump: the intensity is evaluated on a fine
//! grid and averaged over each receiver bin, then white Gaussian noise is
//! added per receiver sample. The noise level is set relative to a per-core
//! intensity reference ([`noise_reference`]) that does not move with the
//! receiver rate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::codec::pearson;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Gaussian envelopes are evaluated out to this many pulse widths from
/// their centre; beyond it the amplitude is below 5e-13.
const ENVELOPE_CUTOFF_WIDTHS: f64 = 3.2;

/// Finest fine-grid spacing as a fraction of the pulse width.
const MIN_POINTS_PER_PULSE: f64 = 8.0;

/// Physical parameters of the fiber and the seed of its random realization.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberSpec {
    pub length_m: f64,
    pub n_avg: f64,
    pub delta_n: f64,
    pub mode_count: usize,
    /// Spread of the per-mode spectral phase sensitivities, seconds.
    /// Fingerprints decorrelate over frequency offsets of roughly
    /// `1 / theta_spread_s`.
    pub theta_spread_s: f64,
    pub rng_seed: u64,
}

impl Default for FiberSpec {
    fn default() -> Self {
        FiberSpec {
            length_m: 1000.0,
            n_avg: 1.45,
            delta_n: 0.0085,
            mode_count: 4096,
            theta_spread_s: 2e-6,
            rng_seed: 1,
        }
    }
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::invalid("fiber.length_m", "must be positive"));
        }
        if !(self.n_avg > 1.0 && self.n_avg.is_finite()) {
            return Err(Error::invalid("fiber.n_avg", "must exceed 1"));
        }
        if !(self.delta_n > 0.0 && self.delta_n < self.n_avg) {
            return Err(Error::invalid("fiber.delta_n", "must lie in (0, n_avg)"));
        }
        if self.mode_count < 2 {
            return Err(Error::invalid("fiber.modes", "at least two modes required"));
        }
        if !(self.theta_spread_s > 0.0 && self.theta_spread_s.is_finite()) {
            return Err(Error::invalid("fiber.theta_spread_s", "must be positive"));
        }
        Ok(())
    }
}

/// Maximum intermodal pulse broadening `(L / c) * (delta_n / n)`, seconds.
pub fn delay_spread(spec: &FiberSpec) -> f64 {
    (spec.length_m / SPEED_OF_LIGHT) * (spec.delta_n / spec.n_avg)
}

/// A frozen random realization of the fiber as seen by `core_count` cores.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    pub spec: FiberSpec,
    pub core_count: usize,
    /// Group delay of each mode, seconds.
    pub delays_s: Vec<f64>,
    /// Spectral phase sensitivity of each mode, seconds.
    pub spectral_phases_s: Vec<f64>,
    /// `coupling[k][m]`: weight of mode `m` at core `k`. Each row has unit power.
    pub coupling: Vec<Vec<Complex64>>,
}

impl ChannelInstance {
    pub fn mode_count(&self) -> usize {
        self.delays_s.len()
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
}

/// Draws a channel realization. Deterministic in `spec.rng_seed`.
pub fn synthesize_channel(spec: &FiberSpec, core_count: usize) -> Result<ChannelInstance> {
    spec.validate()?;
    if core_count < 1 {
        return Err(Error::invalid("cores", "at least one core required"));
    }
    let spread = delay_spread(spec);
    let modes = spec.mode_count;
    let mut rng = rng_from_seed(spec.rng_seed);

    let delays_s: Vec<f64> = (0..modes).map(|_| rng.random::<f64>() * spread).collect();
    let spectral_phases_s: Vec<f64> = (0..modes)
        .map(|_| rng.random::<f64>() * spec.theta_spread_s)
        .collect();
    let coupling = (0..core_count)
        .map(|_| {
            let row: Vec<Complex64> = (0..modes).map(|_| complex_normal(&mut rng)).collect();
            let norm = row.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
            row.into_iter().map(|w| w / norm).collect()
        })
        .collect();

    Ok(ChannelInstance {
        spec: spec.clone(),
        core_count,
        delays_s,
        spectral_phases_s,
        coupling,
    })
}

/// Receiver timing, detector bandwidth and noise settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSpec {
    pub sample_rate_hz: f64,
    pub symbol_period_s: f64,
    /// Full width at half maximum of the launched pulse envelope, seconds.
    pub pulse_width_s: f64,
    /// Ratio of the unit-level reference intensity (see [`noise_reference`])
    /// to the per-sample noise standard deviation, in dB. `+inf` disables noise.
    pub snr_db: f64,
    pub oversample: usize,
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        ReceiverSpec {
            sample_rate_hz: 10e9,
            symbol_period_s: 20e-9,
            pulse_width_s: 0.05e-9,
            snr_db: 25.0,
            oversample: 8,
        }
    }
}

impl ReceiverSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid("rx.sample_rate_hz", "must be positive"));
        }
        if !(self.symbol_period_s > 0.0 && self.symbol_period_s.is_finite()) {
            return Err(Error::invalid("rx.symbol_period_s", "must be positive"));
        }
        if !(self.pulse_width_s > 0.0 && self.pulse_width_s.is_finite()) {
            return Err(Error::invalid("rx.pulse_width_s", "must be positive"));
        }
        if self.snr_db.is_nan() {
            return Err(Error::invalid("rx.snr_db", "must be a number"));
        }
        if self.oversample < 4 {
            return Err(Error::invalid("rx.oversample", "must be at least 4"));
        }
        if self.samples_per_symbol() < 2 {
            return Err(Error::invalid(
                "rx.sample_rate_hz",
                "fewer than two samples per symbol",
            ));
        }
        Ok(())
    }

    /// Receiver samples per symbol window, `floor(T * fs)`.
    pub fn samples_per_symbol(&self) -> usize {
        // Guard against products like 199.99999999999997.
        (self.symbol_period_s * self.sample_rate_hz * (1.0 + 1e-12)).floor() as usize
    }

    /// Fine-grid points per receiver bin. At least `oversample`, and enough
    /// that the pulse envelope is resolved at low receiver rates.
    pub fn fine_points_per_sample(&self) -> usize {
        let bin = 1.0 / self.sample_rate_hz;
        let needed = (bin * MIN_POINTS_PER_PULSE / self.pulse_width_s).ceil() as usize;
        self.oversample.max(needed)
    }

    fn check_window(&self, spread_s: f64) -> Result<()> {
        let window = self.samples_per_symbol() as f64 / self.sample_rate_hz;
        if window < spread_s + self.pulse_width_s {
            return Err(Error::WindowOverlap {
                window_s: window,
                spread_s,
                pulse_s: self.pulse_width_s,
            });
        }
        Ok(())
    }
}

/// Detected intensity over one symbol window at one core.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTrace {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub core_index: usize,
}

impl IntensityTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> IntensityTrace {
        IntensityTrace {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            ..self.clone()
        }
    }
}

/// Unit-level intensity on the detector's fine time grid.
#[derive(Debug, Clone)]
pub struct FineIntensity {
    pub dt_s: f64,
    pub points_per_sample: usize,
    pub intensity: Vec<f64>,
}

/// Sampled Gaussian envelope of every mode's sub-pulse on the fine grid.
///
/// Envelopes do not depend on the launched frequency, so a bank build
/// computes them once and reuses them for every alphabet symbol.
#[derive(Debug, Clone)]
pub(crate) struct ModeEnvelopes {
    n_fine: usize,
    dt_s: f64,
    points_per_sample: usize,
    /// `(first fine index, samples)` per mode.
    segments: Vec<(usize, Vec<f64>)>,
}

impl ModeEnvelopes {
    /// The earliest possible sub-pulse is centred half a pulse width into
    /// the window, so its half-maximum edge sits at `t = 0`. Fine-grid
    /// points sit at bin midpoints.
    pub(crate) fn new(channel: &ChannelInstance, rx: &ReceiverSpec) -> Result<Self> {
        rx.validate()?;
        rx.check_window(delay_spread(&channel.spec))?;
        let per_sample = rx.fine_points_per_sample();
        let n_fine = rx.samples_per_symbol() * per_sample;
        let dt = 1.0 / (rx.sample_rate_hz * per_sample as f64);
        let width = rx.pulse_width_s;
        let lead = 0.5 * width;
        let shape = 4.0 * std::f64::consts::LN_2 / (width * width);
        let reach = ENVELOPE_CUTOFF_WIDTHS * width;

        let segments = channel
            .delays_s
            .iter()
            .map(|&tau| {
                let centre = lead + tau;
                let lo = ((centre - reach) / dt - 0.5).floor().max(0.0) as usize;
                let hi = ((((centre + reach) / dt - 0.5).ceil()) as usize + 1).min(n_fine);
                let env = (lo..hi.max(lo))
                    .map(|j| {
                        let t = (j as f64 + 0.5) * dt - centre;
                        (-shape * t * t).exp()
                    })
                    .collect();
                (lo, env)
            })
            .collect();
        Ok(ModeEnvelopes {
            n_fine,
            dt_s: dt,
            points_per_sample: per_sample,
            segments,
        })
    }

    /// `|e_k(t)|^2` at unit launch level on the fine grid.
    pub(crate) fn fine_intensity(
        &self,
        channel: &ChannelInstance,
        core: usize,
        freq_offset_hz: f64,
    ) -> Vec<f64> {
        let mut field = vec![Complex64::new(0.0, 0.0); self.n_fine];
        let weights = &channel.coupling[core];
        for (((lo, env), &theta), &w) in self
            .segments
            .iter()
            .zip(&channel.spectral_phases_s)
            .zip(weights)
        {
            let phase = std::f64::consts::TAU * freq_offset_hz * theta;
            let c = w * Complex64::from_polar(1.0, phase);
            for (f, &g) in field[*lo..*lo + env.len()].iter_mut().zip(env) {
                *f += c * g;
            }
        }
        field.iter().map(|e| e.norm_sqr()).collect()
    }

    /// Fine-grid intensity averaged over each receiver bin.
    pub(crate) fn unit_trace(
        &self,
        channel: &ChannelInstance,
        core: usize,
        freq_offset_hz: f64,
    ) -> Vec<f64> {
        let p = self.points_per_sample;
        self.fine_intensity(channel, core, freq_offset_hz)
            .chunks_exact(p)
            .map(|bin| bin.iter().sum::<f64>() / p as f64)
            .collect()
    }
}

/// Evaluates `|e_k(t)|^2` at unit launch level on the detector's fine grid.
pub fn fine_intensity(
    channel: &ChannelInstance,
    core: usize,
    freq_offset_hz: f64,
    rx: &ReceiverSpec,
) -> Result<FineIntensity> {
    channel.check_core(core)?;
    let env = ModeEnvelopes::new(channel, rx)?;
    Ok(FineIntensity {
        dt_s: env.dt_s,
        points_per_sample: env.points_per_sample,
        intensity: env.fine_intensity(channel, core, freq_offset_hz),
    })
}

/// Noiseless unit-level receiver samples: fine-grid intensity averaged per bin.
pub fn unit_trace(
    channel: &ChannelInstance,
    core: usize,
    freq_offset_hz: f64,
    rx: &ReceiverSpec,
) -> Result<Vec<f64>> {
    channel.check_core(core)?;
    Ok(ModeEnvelopes::new(channel, rx)?.unit_trace(channel, core, freq_offset_hz))
}

/// Per-core intensity reference for the noise level: the peak of the mean
/// (frequency-independent) intensity envelope `sum_m |w_km|^2 g(t - tau_m)^2`,
/// evaluated on a grid of one sixteenth of a pulse width across the window.
///
/// It depends on neither the launched frequency nor the receiver rate, so a
/// given `snr_db` means the same detector noise at every sweep point.
pub fn noise_reference(channel: &ChannelInstance, core: usize, rx: &ReceiverSpec) -> Result<f64> {
    channel.check_core(core)?;
    rx.validate()?;
    let width = rx.pulse_width_s;
    let dt = width / 16.0;
    let window = rx.samples_per_symbol() as f64 / rx.sample_rate_hz;
    let n = (window / dt).ceil() as usize;
    let shape = 4.0 * std::f64::consts::LN_2 / (width * width);
    let reach = ENVELOPE_CUTOFF_WIDTHS * width;
    let lead = 0.5 * width;
    let mut envelope = vec![0.0; n];
    for (&tau, w) in channel.delays_s.iter().zip(&channel.coupling[core]) {
        let centre = lead + tau;
        let lo = ((centre - reach) / dt).floor().max(0.0) as usize;
        let hi = (((centre + reach) / dt).ceil() as usize + 1).min(n);
        let p = w.norm_sqr();
        for (j, e) in envelope.iter_mut().enumerate().take(hi).skip(lo) {
            let t = j as f64 * dt - centre;
            *e += p * (-2.0 * shape * t * t).exp();
        }
    }
    Ok(envelope.into_iter().fold(0.0, f64::max))
}

/// Noise standard deviation for an intensity reference and SNR in dB.
pub fn noise_sigma(reference: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    reference / 10f64.powf(snr_db / 10.0)
}

/// Builds a detected trace from unit-level samples: scale by `intensity_level`,
/// then add white Gaussian noise of standard deviation `sigma` drawn from
/// `noise_seed`.
pub fn detect(unit: &[f64], intensity_level: f64, sigma: f64, noise_seed: u64) -> Vec<f64> {
    let mut out: Vec<f64> = unit.iter().map(|u| intensity_level * u).collect();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        let mut rng = rng_from_seed(noise_seed);
        for s in out.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }
    out
}

/// Transmits one pulse at `freq_offset_hz` (relative to the carrier) with
/// the given intensity level and returns the detected trace at `core`.
pub fn propagate(
    channel: &ChannelInstance,
    core: usize,
    freq_offset_hz: f64,
    intensity_level: f64,
    rx: &ReceiverSpec,
    noise_seed: u64,
) -> Result<IntensityTrace> {
    if !(intensity_level >= 0.0 && intensity_level.is_finite()) {
        return Err(Error::invalid("intensity_level", "must be finite and >= 0"));
    }
    let unit = unit_trace(channel, core, freq_offset_hz, rx)?;
    let sigma = noise_sigma(noise_reference(channel, core, rx)?, rx.snr_db);
    Ok(IntensityTrace {
        samples: detect(&unit, intensity_level, sigma, noise_seed),
        sample_rate_hz: rx.sample_rate_hz,
        core_index: core,
    })
}

/// Pearson correlation between the noiseless traces at two frequency offsets.
pub fn spectral_correlation(
    channel: &ChannelInstance,
    core: usize,
    f1_hz: f64,
    f2_hz: f64,
    rx: &ReceiverSpec,
) -> Result<f64> {
    let a = unit_trace(channel, core, f1_hz, rx)?;
    let b = unit_trace(channel, core, f2_hz, rx)?;
    pearson(&a, &b)
}

/// Circular complex normal draw with unit variance per component.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}
