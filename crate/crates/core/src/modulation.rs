//! Null-biased I/Q modulator and its single-sideband tone approximation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Drive voltages of the I and Q arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqDrive {
    pub v1: f64,
    pub v2: f64,
    pub v_pi: f64,
    pub e_in: Complex64,
}

impl IqDrive {
    pub fn new(v1: f64, v2: f64, v_pi: f64, e_in: Complex64) -> Result<Self> {
        check_v_pi(v_pi)?;
        Ok(IqDrive { v1, v2, v_pi, e_in })
    }
}

/// Linearized single-tone command: carrier `f0_hz` shifted by `fm_hz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneCommand {
    pub e0: f64,
    pub v0: f64,
    pub v_pi: f64,
    pub f0_hz: f64,
    pub fm_hz: f64,
}

impl ToneCommand {
    pub fn new(e0: f64, v0: f64, v_pi: f64, f0_hz: f64, fm_hz: f64) -> Result<Self> {
        check_v_pi(v_pi)?;
        if v0.is_nan() || v0 < 0.0 {
            return Err(Error::invalid("v0", "must be >= 0"));
        }
        Ok(ToneCommand {
            e0,
            v0,
            v_pi,
            f0_hz,
            fm_hz,
        })
    }
}

fn check_v_pi(v_pi: f64) -> Result<()> {
    if v_pi > 0.0 && v_pi.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("v_pi", "must be positive and finite"))
    }
}

/// Output field of the modulator biased at null:
/// `e_in/2 * (sin(pi v1/v_pi) + i sin(pi v2/v_pi))`.
pub fn iq_output(d: &IqDrive) -> Complex64 {
    let i = (PI * d.v1 / d.v_pi).sin();
    let q = (PI * d.v2 / d.v_pi).sin();
    d.e_in * Complex64::new(i, q) * 0.5
}

/// Frequency and amplitude of the linearized single-sideband output.
pub fn ssb_tone(c: &ToneCommand) -> (f64, f64) {
    (c.f0_hz + c.fm_hz, PI * c.v0 * c.e0 / (2.0 * c.v_pi))
}

/// One discrete line of a baseband output spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    /// Offset from the optical carrier.
    pub frequency_hz: f64,
    /// Complex line magnitude for unit input field.
    pub amplitude: f64,
    /// Power relative to the strongest line.
    pub power_db: f64,
}

/// Lines weaker than this (relative to the strongest) are treated as
/// rounding residue and dropped.
const LINE_FLOOR: f64 = 1e-12;

/// Which arms are driven when sampling the modulator spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmDrive {
    /// `v1 = v0 cos`, `v2 = v0 sin`: single sideband at `+fm`.
    Quadrature,
    /// `v1 = v0 cos`, `v2 = 0`.
    InPhaseOnly,
}

/// Spectrum of the exact modulator output under a quadrature tone drive,
/// with unit input field. See [`modulator_spectrum`].
pub fn ssb_spectrum(
    v0: f64,
    v_pi: f64,
    fm_hz: f64,
    duration_s: f64,
    rate_hz: f64,
) -> Result<Vec<SpectralLine>> {
    modulator_spectrum(v0, v_pi, fm_hz, duration_s, rate_hz, ArmDrive::Quadrature)
}

/// Samples the exact modulator output over `duration_s` at `rate_hz` and
/// returns the non-negligible DFT lines sorted by frequency. The window
/// must hold a whole number of drive periods and samples so every line
/// falls on a bin centre; no taper is applied.
pub fn modulator_spectrum(
    v0: f64,
    v_pi: f64,
    fm_hz: f64,
    duration_s: f64,
    rate_hz: f64,
    arms: ArmDrive,
) -> Result<Vec<SpectralLine>> {
    check_v_pi(v_pi)?;
    if !(fm_hz > 0.0 && fm_hz.is_finite()) {
        return Err(Error::invalid("fm_hz", "must be positive"));
    }
    if rate_hz.is_nan() || rate_hz <= 4.0 * fm_hz || !rate_hz.is_finite() {
        return Err(Error::invalid("rate_hz", "must exceed 4 * fm_hz"));
    }
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid("duration_s", "must be positive"));
    }
    let periods = duration_s * fm_hz;
    let samples = duration_s * rate_hz;
    let whole = |x: f64| (x - x.round()).abs() <= 1e-9 * x.max(1.0) && x.round() >= 1.0;
    if !whole(periods) {
        return Err(Error::invalid(
            "duration_s",
            format!("holds {periods} drive periods, need a whole number"),
        ));
    }
    if !whole(samples) {
        return Err(Error::invalid(
            "duration_s",
            format!("holds {samples} samples at rate_hz, need a whole number"),
        ));
    }
    let n = samples.round() as usize;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let phase = 2.0 * PI * fm_hz * j as f64 / rate_hz;
            let v2 = match arms {
                ArmDrive::Quadrature => v0 * phase.sin(),
                ArmDrive::InPhaseOnly => 0.0,
            };
            iq_output(&IqDrive {
                v1: v0 * phase.cos(),
                v2,
                v_pi,
                e_in: Complex64::new(1.0, 0.0),
            })
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bin_hz = rate_hz / n as f64;
    let amps: Vec<f64> = buf.iter().map(|c| c.norm() / n as f64).collect();
    let peak = amps.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Vec::new());
    }
    let mut lines: Vec<SpectralLine> = amps
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > LINE_FLOOR * peak)
        .map(|(k, &a)| {
            let signed = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            SpectralLine {
                frequency_hz: signed * bin_hz,
                amplitude: a,
                power_db: 20.0 * (a / peak).log10(),
            }
        })
        .collect();
    lines.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    Ok(lines)
}

/// Amplitude of the line at `frequency_hz`, or 0 if it was below the floor.
pub fn line_amplitude(lines: &[SpectralLine], frequency_hz: f64, tol_hz: f64) -> f64 {
    lines
        .iter()
        .find(|l| (l.frequency_hz - frequency_hz).abs() <= tol_hz)
        .map_or(0.0, |l| l.amplitude)
}

/// Ratio in dB of the `+fm` line to the mirror image at `-fm`.
/// Infinite when the image is below the numerical floor.
pub fn image_suppression_db(lines: &[SpectralLine], fm_hz: f64) -> f64 {
    let tol = fm_hz * 1e-6;
    let wanted = line_amplitude(lines, fm_hz, tol);
    let image = line_amplitude(lines, -fm_hz, tol);
    20.0 * (wanted / image).log10()
}

/// Ratio in dB of the `+fm` line to the strongest other line.
pub fn spur_suppression_db(lines: &[SpectralLine], fm_hz: f64) -> f64 {
    let tol = fm_hz * 1e-6;
    let wanted = line_amplitude(lines, fm_hz, tol);
    let spur = lines
        .iter()
        .filter(|l| (l.frequency_hz - fm_hz).abs() > tol)
        .map(|l| l.amplitude)
        .fold(0.0, f64::max);
    20.0 * (wanted / spur).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FM: f64 = 1e6;
    const T: f64 = 20e-6;
    const FS: f64 = 64e6;

    fn drive(v1: f64, v2: f64, e: Complex64) -> IqDrive {
        IqDrive::new(v1, v2, 1.0, e).unwrap()
    }

    #[test]
    fn null_bias_and_single_arms() {
        let e = Complex64::new(0.7, -0.2);
        assert_eq!(iq_output(&drive(0.0, 0.0, e)), Complex64::new(0.0, 0.0));
        assert_relative_eq!(
            (iq_output(&drive(0.5, 0.0, e)) - e / 2.0).norm(),
            0.0,
            epsilon = 1e-15
        );
        let i = Complex64::new(0.0, 1.0);
        assert_relative_eq!(
            (iq_output(&drive(0.0, 0.5, e)) - i * e / 2.0).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert!(IqDrive::new(0.0, 0.0, 0.0, e).is_err());
    }

    #[test]
    fn linear_tone() {
        let c = ToneCommand::new(1.0, 0.1, 1.0, 193e12, 0.0).unwrap();
        let (f, a) = ssb_tone(&c);
        assert_eq!(f, 193e12);
        assert_relative_eq!(a, PI * 0.05, max_relative = 1e-15);
        let dark = ToneCommand::new(1.0, 0.0, 1.0, 0.0, 5e6).unwrap();
        assert_eq!(ssb_tone(&dark), (5e6, 0.0));
        assert!(ToneCommand::new(1.0, -0.1, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn quadrature_drive_gives_upper_sideband() {
        let lines = ssb_spectrum(0.05, 1.0, FM, T, FS).unwrap();
        let strongest = lines
            .iter()
            .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
            .unwrap();
        assert_relative_eq!(strongest.frequency_hz, FM, max_relative = 1e-9);
        assert!(image_suppression_db(&lines, FM) >= 30.0);
        assert!(spur_suppression_db(&lines, FM) >= 30.0);
    }

    #[test]
    fn small_drive_matches_linear_amplitude() {
        let lines = ssb_spectrum(0.01, 1.0, FM, T, FS).unwrap();
        let a = line_amplitude(&lines, FM, 1.0);
        let (_, linear) = ssb_tone(&ToneCommand::new(1.0, 0.01, 1.0, 0.0, FM).unwrap());
        assert_relative_eq!(a, linear, max_relative = 0.01);
    }

    #[test]
    fn suppression_grows_as_drive_shrinks() {
        let s: Vec<f64> = [0.5, 0.2, 0.1, 0.05]
            .iter()
            .map(|&v0| spur_suppression_db(&ssb_spectrum(v0, 1.0, FM, T, FS).unwrap(), FM))
            .collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]), "{s:?}");
    }

    #[test]
    fn single_arm_is_symmetric() {
        let lines = modulator_spectrum(0.1, 1.0, FM, T, FS, ArmDrive::InPhaseOnly).unwrap();
        let up = line_amplitude(&lines, FM, 1.0);
        let down = line_amplitude(&lines, -FM, 1.0);
        assert!(up > 0.0);
        assert_relative_eq!(up, down, max_relative = 1e-9);
    }

    #[test]
    fn rejects_partial_periods_and_low_rates() {
        assert!(ssb_spectrum(0.1, 1.0, FM, 20.5e-6, FS).is_err());
        assert!(ssb_spectrum(0.1, 1.0, FM, T, 3.9e6).is_err());
    }

    proptest! {
        #[test]
        fn output_is_bounded(v1 in -10.0..10.0f64, v2 in -10.0..10.0f64,
                             re in -3.0..3.0f64, im in -3.0..3.0f64, vpi in 0.1..5.0f64) {
            let e = Complex64::new(re, im);
            let out = iq_output(&IqDrive::new(v1, v2, vpi, e).unwrap());
            prop_assert!(out.norm() <= e.norm() * 2f64.sqrt() / 2.0 * (1.0 + 1e-12));
        }
    }
}
