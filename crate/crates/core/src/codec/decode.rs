use super::alphabet::PamScheme;
use super::bank::FingerprintBank;
use super::correlate::normalize_centered;
use crate::channel::IntensityTrace;
use crate::error::{Error, Result};

/// Hard decision with its correlation score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub symbol_index: usize,
    pub score: f64,
}

fn check_geometry(trace: &IntensityTrace, bank: &FingerprintBank) -> Result<()> {
    if trace.len() != bank.trace_len() {
        return Err(Error::LengthMismatch {
            expected: bank.trace_len(),
            got: trace.len(),
        });
    }
    if trace.sample_rate_hz != bank.rx().sample_rate_hz {
        return Err(Error::invalid(
            "trace.sample_rate_hz",
            "does not match the bank's receiver rate",
        ));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Adds the Pearson score of `x` (already centred and unit-norm) against
/// every fingerprint of `core` into `scores`.
fn accumulate_scores(x: &[f64], bank: &FingerprintBank, core: usize, scores: &mut [f64]) {
    for (i, s) in scores.iter_mut().enumerate() {
        *s += dot(x, bank.normalized_row(core, i)).clamp(-1.0, 1.0);
    }
}

/// First index of the maximum; ties resolve to the smallest index.
fn argmax(scores: &[f64]) -> Decision {
    let mut best = Decision {
        symbol_index: 0,
        score: f64::NEG_INFINITY,
    };
    for (i, &s) in scores.iter().enumerate() {
        if s > best.score {
            best = Decision {
                symbol_index: i,
                score: s,
            };
        }
    }
    best
}

/// Picks the fingerprint of `core` with the highest Pearson correlation.
pub fn decode_frequency(
    trace: &IntensityTrace,
    bank: &FingerprintBank,
    core: usize,
) -> Result<Decision> {
    bank.check_core(core)?;
    check_geometry(trace, bank)?;
    let x = normalize_centered(&trace.samples)?;
    let mut scores = vec![0.0; bank.symbol_count()];
    accumulate_scores(&x, bank, core, &mut scores);
    Ok(argmax(&scores))
}

/// Least-squares intensity scale against the unit-level fingerprint of
/// `symbol_index`, snapped to the nearest PAM level.
pub fn decode_level(
    trace: &IntensityTrace,
    bank: &FingerprintBank,
    core: usize,
    symbol_index: usize,
    pam: &PamScheme,
) -> Result<usize> {
    bank.check_core(core)?;
    check_geometry(trace, bank)?;
    if symbol_index >= bank.symbol_count() {
        return Err(Error::IndexOutOfRange {
            index: symbol_index,
            size: bank.symbol_count(),
        });
    }
    let fp = bank.fingerprint(core, symbol_index);
    let scale = dot(&trace.samples, fp) / bank.energy(core, symbol_index);
    Ok(pam.nearest(scale))
}

/// Joint decision over all cores: argmax of the summed per-core Pearson scores.
/// `traces[k]` must come from core `k`.
pub fn fuse_decode(traces: &[IntensityTrace], bank: &FingerprintBank) -> Result<Decision> {
    if traces.len() != bank.core_count() {
        return Err(Error::LengthMismatch {
            expected: bank.core_count(),
            got: traces.len(),
        });
    }
    let mut scores = vec![0.0; bank.symbol_count()];
    for (k, t) in traces.iter().enumerate() {
        if t.core_index != k {
            return Err(Error::invalid("traces", "traces must be ordered by core"));
        }
        check_geometry(t, bank)?;
        let x = normalize_centered(&t.samples)?;
        accumulate_scores(&x, bank, k, &mut scores);
    }
    Ok(argmax(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synthesize_channel, FiberSpec, ReceiverSpec};
    use crate::codec::{build_bank, FrequencyAlphabet};

    fn bank(cores: usize) -> FingerprintBank {
        let ch = synthesize_channel(&FiberSpec::default(), cores).unwrap();
        build_bank(&ch, &FrequencyAlphabet::default(), &ReceiverSpec::default()).unwrap()
    }

    fn noiseless(bank: &FingerprintBank, core: usize, sym: usize, level: f64) -> IntensityTrace {
        bank.transmit(core, sym, level, f64::INFINITY, 0)
    }

    #[test]
    fn self_match_and_scale_invariance() {
        let b = bank(1);
        let t = noiseless(&b, 0, 17, 1.0);
        let d = decode_frequency(&t, &b, 0).unwrap();
        assert_eq!(d.symbol_index, 17);
        assert!((d.score - 1.0).abs() < 1e-12);
        let d3 = decode_frequency(&t.scaled(3.0), &b, 0).unwrap();
        assert_eq!(d3.symbol_index, 17);
    }

    #[test]
    fn exact_levels_on_noiseless_traces() {
        let b = bank(1);
        let pam = PamScheme::pam4();
        for (li, &level) in pam.levels().iter().enumerate() {
            let t = noiseless(&b, 0, 40, level);
            assert_eq!(decode_level(&t, &b, 0, 40, &pam).unwrap(), li);
        }
    }

    #[test]
    fn fusion_degenerates_and_saturates() {
        let b1 = bank(1);
        let t = b1.transmit(0, 5, 1.0, 5.0, 77);
        let single = decode_frequency(&t, &b1, 0).unwrap();
        let fused = fuse_decode(std::slice::from_ref(&t), &b1).unwrap();
        assert_eq!(single.symbol_index, fused.symbol_index);
        assert!((single.score - fused.score).abs() < 1e-12);

        let b7 = bank(7);
        let traces: Vec<_> = (0..7).map(|k| noiseless(&b7, k, 99, 1.0)).collect();
        let d = fuse_decode(&traces, &b7).unwrap();
        assert_eq!(d.symbol_index, 99);
        assert!((d.score - 7.0).abs() < 1e-9);
        assert!(fuse_decode(&traces[..6], &b7).is_err());
    }

    #[test]
    fn geometry_errors() {
        let b = bank(1);
        let mut t = noiseless(&b, 0, 1, 1.0);
        t.samples.pop();
        assert!(matches!(
            decode_frequency(&t, &b, 0),
            Err(Error::LengthMismatch { .. })
        ));
        let t = noiseless(&b, 0, 1, 1.0);
        assert!(decode_frequency(&t, &b, 3).is_err());
        assert!(decode_level(&t, &b, 0, 500, &PamScheme::pam4()).is_err());
    }
}
