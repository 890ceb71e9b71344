//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::Instant;

use mmf_core::harness::*;
use mmf_core::modulation::{
    image_suppression_db, line_amplitude, spur_suppression_db, ssb_spectrum, ssb_tone, ToneCommand,
};
use mmf_core::rng::derive_seed;
use mmf_core::*;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_spectral_efficiency() -> Check {
    let a = spectral_efficiency(50e6, 7.0, 600e3, 128);
    let b = spectral_efficiency(50e6, 14.0, 600e3, 128);
    ensure(
        (a - 4.56).abs() <= 0.01 && (b - 9.12).abs() <= 0.01,
        format!("7 bits: {a:.4} bits/s/Hz, 14 bits: {b:.4} bits/s/Hz"),
    )
}

fn c2_delay_spread() -> Check {
    const C: f64 = 299_792_458.0;
    let mut worst: f64 = 0.0;
    for (l, n, dn) in [
        (1000.0, 1.45, 0.001),
        (5000.0, 1.47, 0.012),
        (20.0, 1.444, 0.0003),
    ] {
        let spec = FiberSpec {
            length_m: l,
            n_avg: n,
            delta_n: dn,
            ..FiberSpec::default()
        };
        let hand = (l / C) * (dn / n);
        worst = worst.max(((delay_spread(&spec) - hand) / hand).abs());
    }
    ensure(
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e} over 3 sets"),
    )
}

fn c3_ssb() -> Check {
    let (fm, dur, fs) = (1e6, 20e-6, 64e6);
    let lines = ssb_spectrum(0.05, 1.0, fm, dur, fs).map_err(|e| e.to_string())?;
    let image = image_suppression_db(&lines, fm);
    let spur = spur_suppression_db(&lines, fm);
    let strongest = lines
        .iter()
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .map(|l| l.frequency_hz)
        .unwrap_or(f64::NAN);
    let small = ssb_spectrum(0.01, 1.0, fm, dur, fs).map_err(|e| e.to_string())?;
    let (_, linear) =
        ssb_tone(&ToneCommand::new(1.0, 0.01, 1.0, 0.0, fm).map_err(|e| e.to_string())?);
    let rel = (line_amplitude(&small, fm, 1.0) - linear).abs() / linear;
    ensure(
        (strongest - fm).abs() <= 1e-6 * fm && image >= 30.0 && spur >= 30.0 && rel <= 0.01,
        format!(
            "strongest line {strongest:e} Hz, image suppression {image:.1} dB, strongest spur {spur:.1} dB down, linear amplitude error {:.3}%",
            rel * 100.0
        ),
    )
}

fn c4_decoder() -> Check {
    let ch = synthesize_channel(&FiberSpec::default(), 1).map_err(|e| e.to_string())?;
    let bank = build_bank(
        &ch,
        &FrequencyAlphabet::new(0.0, 400.0, 128).unwrap(),
        &ReceiverSpec::default(),
    )
    .map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    let mut scale_breaks = 0;
    for t in 0..100u64 {
        let sym = (derive_seed(21, &[t]) % 128) as usize;
        let trace = bank.transmit(0, sym, 1.0, 20.0, derive_seed(22, &[t]));
        let oracle = (0..128)
            .map(|i| (i, pearson(&trace.samples, bank.fingerprint(0, i)).unwrap()))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let d = decode_frequency(&trace, &bank, 0).map_err(|e| e.to_string())?;
        if d.symbol_index != oracle.0 {
            mismatches += 1;
        }
        let scaled = decode_frequency(&trace.scaled(4.0), &bank, 0).map_err(|e| e.to_string())?;
        if scaled.symbol_index != d.symbol_index {
            scale_breaks += 1;
        }
    }
    ensure(
        mismatches == 0 && scale_breaks == 0,
        format!("{mismatches}/100 oracle mismatches, {scale_breaks}/100 scale-invariance breaks"),
    )
}

fn col(t: &ResultTable, name: &str) -> Vec<f64> {
    t.column(name).unwrap_or_default()
}

fn c5_ser_vs_spacing() -> Check {
    let t = run_ser_vs_spacing(&SweepConfig::preset(Experiment::SerSpacing))
        .map_err(|e| e.to_string())?;
    let ser = col(&t, "ser");
    let trials = col(&t, "trials");
    ensure(
        ser.len() == 5
            && ser.windows(2).all(|w| w[1] <= w[0])
            && ser.last() == Some(&0.0)
            && trials.iter().all(|&n| n >= 10_000.0),
        format!("spacings {:?} Hz, SER {ser:?}", col(&t, "spacing_hz")),
    )
}

fn c6_pam() -> Check {
    let t = run_pam(&SweepConfig::preset(Experiment::Pam)).map_err(|e| e.to_string())?;
    let snr = col(&t, "snr_db");
    let f = col(&t, "freq_ser");
    let l = col(&t, "level_ser");
    let at = |db: f64| snr.iter().position(|&s| s == db);
    let (Some(hi), Some(lo)) = (at(25.0), at(0.0)) else {
        return Err(format!("sweep lacks 25 dB or 0 dB rows: {snr:?}"));
    };
    ensure(
        f[hi] == 0.0 && l[hi] == 0.0 && l[lo] > 0.0,
        format!(
            "25 dB: freq SER {}, level SER {} over {} trials; 0 dB: level SER {}",
            f[hi],
            l[hi],
            col(&t, "trials")[hi],
            l[lo]
        ),
    )
}

fn c7_offsets() -> Check {
    let t =
        run_offset_hist(&SweepConfig::preset(Experiment::Offsets)).map_err(|e| e.to_string())?;
    let ser: f64 = t
        .meta("ser")
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN);
    let offsets = col(&t, "offset");
    let frac = col(&t, "fraction");
    let unit: f64 = offsets
        .iter()
        .zip(&frac)
        .filter(|(o, _)| o.abs() == 1.0)
        .map(|(_, f)| f)
        .sum();
    let max = offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    ensure(
        (0.38..=0.48).contains(&ser) && unit > 0.5 && max <= 4.0,
        format!(
            "spacing {} Hz, SER {ser}, |offset|=1 share {unit:.3}, max |offset| {max}",
            t.meta("tuned_spacing_hz").unwrap_or("?")
        ),
    )
}

fn c8_fusion() -> Check {
    let cfg = SweepConfig::preset(Experiment::SerRate);
    let t = run_ser_vs_rate(&cfg).map_err(|e| e.to_string())?;
    let fused = col(&t, "ser_fused");
    let cores: Vec<Vec<f64>> = (0..cfg.cores)
        .map(|k| col(&t, &format!("ser_core{k}")))
        .collect();
    let mut dominated = true;
    let mut rescued = Vec::new();
    for (p, &f) in fused.iter().enumerate() {
        let per: Vec<f64> = cores.iter().map(|c| c[p]).collect();
        let min = per.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = per.iter().cloned().fold(0.0, f64::max);
        dominated &= f <= min;
        if max > 0.0 && f == 0.0 {
            rescued.push(col(&t, "sample_rate_hz")[p]);
        }
    }
    let top_clean = cores.iter().all(|c| c.last() == Some(&0.0));
    ensure(
        !fused.is_empty() && dominated && !rescued.is_empty() && top_clean,
        format!(
            "fused <= min core at every rate: {dominated}; core errors fully corrected by fusion at {rescued:?} Hz; all cores error-free at the top rate: {top_clean}"
        ),
    )
}

fn c9_semantic() -> Check {
    let cfg = SweepConfig::preset(Experiment::Semantic);
    if cfg.semantic.seeds < 20 {
        return Err(format!("only {} seeds", cfg.semantic.seeds));
    }
    let t = run_semantic(&cfg).map_err(|e| e.to_string())?;
    let ser = col(&t, "symbol_error_rate");
    let g = col(&t, "class_error_greedy");
    let b = col(&t, "class_error_baseline");
    let ok = !ser.is_empty()
        && ser.iter().cloned().fold(0.0, f64::max) >= 0.40
        && (0..ser.len()).all(|i| g[i] < ser[i] && g[i] < b[i]);
    let points: Vec<String> = (0..ser.len())
        .map(|i| {
            format!(
                "SER {:.3}: greedy {:.3} / baseline {:.3}",
                ser[i], g[i], b[i]
            )
        })
        .collect();
    ensure(ok, points.join("; "))
}

fn c10_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = "trials = 300\nsemantic.seeds = 3\nsemantic.sequences = 20";
    let mut compared = 0;
    for e in [
        Experiment::SerSpacing,
        Experiment::Pam,
        Experiment::SerRate,
        Experiment::Offsets,
        Experiment::Semantic,
    ] {
        let base =
            SweepConfig::from_text(text, SweepConfig::preset(e)).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for (run_id, workers) in [1usize, 2, 4].into_iter().enumerate() {
            let cfg = SweepConfig {
                workers,
                ..base.clone()
            };
            let table = run(e, &cfg).map_err(|e| e.to_string())?;
            for format in [OutputFormat::Csv, OutputFormat::Json] {
                let path = dir.path().join(format!("{}-{run_id}-{format:?}", e.name()));
                table.write(&path, format).map_err(|e| e.to_string())?;
                files.push((format, std::fs::read(&path).map_err(|e| e.to_string())?));
            }
        }
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let group: Vec<&Vec<u8>> = files
                .iter()
                .filter(|f| f.0 == format)
                .map(|f| &f.1)
                .collect();
            if group.windows(2).any(|w| w[0] != w[1]) {
                return Err(format!(
                    "{} {format:?} output differs across worker counts",
                    e.name()
                ));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} experiment/format pairs identical across 1, 2 and 4 workers"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("spectral efficiency formula", c1_spectral_efficiency),
        ("delay spread formula", c2_delay_spread),
        ("single-sideband tone", c3_ssb),
        ("decoder equals brute-force argmax", c4_decoder),
        ("SER vs spacing shape", c5_ser_vs_spacing),
        ("PAM-4 levels", c6_pam),
        ("error-offset histogram", c7_offsets),
        ("multi-core fusion", c8_fusion),
        ("semantic ordering robustness", c9_semantic),
        ("determinism across worker counts", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
