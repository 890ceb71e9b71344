use crate::error::{Error, Result};

/// Uniform grid of frequency offsets; symbol `i` is sent at
/// `start_offset_hz + i * spacing_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyAlphabet {
    pub start_offset_hz: f64,
    pub spacing_hz: f64,
    pub size: usize,
}

impl Default for FrequencyAlphabet {
    fn default() -> Self {
        FrequencyAlphabet {
            start_offset_hz: 0.0,
            spacing_hz: 600e3,
            size: 128,
        }
    }
}

impl FrequencyAlphabet {
    pub fn new(start_offset_hz: f64, spacing_hz: f64, size: usize) -> Result<Self> {
        let a = FrequencyAlphabet {
            start_offset_hz,
            spacing_hz,
            size,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_hz > 0.0 && self.spacing_hz.is_finite()) {
            return Err(Error::invalid("alphabet.spacing_hz", "must be positive"));
        }
        if !self.start_offset_hz.is_finite() {
            return Err(Error::invalid("alphabet.start_offset_hz", "must be finite"));
        }
        if self.size < 2 {
            return Err(Error::invalid(
                "alphabet.size",
                "at least two symbols required",
            ));
        }
        Ok(())
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.start_offset_hz + index as f64 * self.spacing_hz
    }

    /// Bits carried by the frequency choice alone.
    pub fn bits_per_symbol(&self) -> f64 {
        (self.size as f64).log2()
    }
}

/// Intensity multipliers for pulse-amplitude modulation, strictly increasing
/// and topping out at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PamScheme {
    levels: Vec<f64>,
}

impl PamScheme {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("pam.levels", "no levels given"));
        }
        if levels.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::invalid("pam.levels", "levels must lie in (0, 1]"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "pam.levels",
                "levels must be strictly increasing",
            ));
        }
        if *levels.last().unwrap() != 1.0 {
            return Err(Error::invalid("pam.levels", "top level must be 1"));
        }
        Ok(PamScheme { levels })
    }

    /// Single full-intensity level (no amplitude modulation).
    pub fn on_off() -> Self {
        PamScheme { levels: vec![1.0] }
    }

    pub fn pam4() -> Self {
        PamScheme {
            levels: vec![0.25, 0.5, 0.75, 1.0],
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, index: usize) -> f64 {
        self.levels[index]
    }

    /// Index of the level nearest to `amplitude`; ties go to the lower level.
    pub fn nearest(&self, amplitude: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &l) in self.levels.iter().enumerate() {
            let d = (amplitude - l).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.levels.len() as f64).log2()
    }
}

impl Default for PamScheme {
    fn default() -> Self {
        PamScheme::pam4()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub symbol_index: usize,
    pub level_index: usize,
}

pub type SymbolStream = Vec<Symbol>;

/// Maps 7-bit ASCII bytes one-to-one onto symbol indices at the top level.
pub fn ascii_encode(text: &[u8], pam: &PamScheme) -> Result<SymbolStream> {
    text.iter()
        .map(|&b| {
            if b >= 128 {
                Err(Error::NonAscii(b))
            } else {
                Ok(Symbol {
                    symbol_index: b as usize,
                    level_index: pam.top(),
                })
            }
        })
        .collect()
}

pub fn ascii_decode(stream: &[Symbol]) -> Result<Vec<u8>> {
    stream
        .iter()
        .map(|s| {
            if s.symbol_index < 128 {
                Ok(s.symbol_index as u8)
            } else {
                Err(Error::IndexOutOfRange {
                    index: s.symbol_index,
                    size: 128,
                })
            }
        })
        .collect()
}

/// Delivered bit rate over occupied bandwidth, bits/s/Hz.
pub fn spectral_efficiency(
    symbol_rate_hz: f64,
    bits_per_symbol: f64,
    spacing_hz: f64,
    channels: usize,
) -> f64 {
    (symbol_rate_hz * bits_per_symbol) / (spacing_hz * channels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn efficiency_values() {
        assert!((spectral_efficiency(50e6, 7.0, 600e3, 128) - 4.56).abs() < 0.01);
        assert!((spectral_efficiency(50e6, 14.0, 600e3, 128) - 9.12).abs() < 0.01);
        assert_eq!(spectral_efficiency(1.0, 1.0, 1.0, 1), 1.0);
    }

    #[test]
    fn alphabet_grid() {
        let a = FrequencyAlphabet::new(-1e6, 600e3, 128).unwrap();
        assert_eq!(a.frequency(0), -1e6);
        assert_eq!(a.frequency(2), -1e6 + 1.2e6);
        assert_eq!(a.bits_per_symbol(), 7.0);
        assert!(FrequencyAlphabet::new(0.0, 0.0, 4).is_err());
        assert!(FrequencyAlphabet::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn pam_validation_and_nearest() {
        assert!(PamScheme::new(vec![0.5, 0.25, 1.0]).is_err());
        assert!(PamScheme::new(vec![0.25, 0.5]).is_err());
        assert!(PamScheme::new(vec![0.0, 1.0]).is_err());
        let p = PamScheme::pam4();
        assert_eq!(p.nearest(0.49), 1);
        assert_eq!(p.nearest(0.375), 0);
        assert_eq!(p.nearest(3.0), 3);
        assert_eq!(p.bits_per_symbol(), 2.0);
    }

    #[test]
    fn ascii_basics() {
        let pam = PamScheme::pam4();
        assert_eq!(
            ascii_encode(b"A", &pam).unwrap(),
            vec![Symbol {
                symbol_index: 65,
                level_index: 3
            }]
        );
        assert!(ascii_encode(b"", &pam).unwrap().is_empty());
        assert!(matches!(
            ascii_encode(&[0x41, 0xc3], &pam),
            Err(Error::NonAscii(0xc3))
        ));
    }

    proptest! {
        #[test]
        fn ascii_round_trip(text in proptest::collection::vec(0u8..128, 0..64)) {
            let s = ascii_encode(&text, &PamScheme::on_off()).unwrap();
            prop_assert_eq!(ascii_decode(&s).unwrap(), text);
        }
    }
}
