//! Seeded Monte Carlo sweeps producing [`ResultTable`]s.
//!
//! Every random draw comes from a seed that is a pure function of the
//! master seed and the (experiment, point, trial, ...) coordinates, and
//! parallel results are gathered in index order, so tables do not depend on
//! the worker count.

mod config;
mod table;

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{synthesize_channel, ChannelInstance, ReceiverSpec};
use crate::codec::{
    build_bank, decode_frequency, decode_level, fuse_decode, FingerprintBank, FrequencyAlphabet,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::semantic::{
    greedy_order, perturb, read_embeddings, write_permutation, IndexPermutation, OffsetErrorModel,
};
use crate::sentiment::{
    evaluate, predict, synth_corpus, train, LinearClassifier, Sample, SyntheticCorpus,
};

pub use config::{Experiment, OffsetTuning, SemanticSettings, SweepAxis, SweepConfig};
pub use table::{Cell, OutputFormat, ResultTable};

const TAG_SPACING: u64 = 1;
const TAG_PAM: u64 = 2;
const TAG_RATE: u64 = 3;
const TAG_OFFSETS: u64 = 4;
const TAG_SEMANTIC: u64 = 5;

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

fn new_table<S: Into<String>>(
    cfg: &SweepConfig,
    experiment: Experiment,
    columns: impl IntoIterator<Item = S>,
) -> ResultTable {
    let mut t = ResultTable::new(columns);
    t.set_meta("experiment", experiment.name());
    t.set_meta("artifact_version", env!("CARGO_PKG_VERSION"));
    t.set_meta("seed", cfg.master_seed);
    t.set_meta("config", cfg.to_config_text());
    t
}

fn expect_axis<'a>(cfg: &'a SweepConfig, want: &str) -> Result<&'a [f64]> {
    if cfg.axis.name() != want {
        return Err(Error::Config(format!(
            "this experiment sweeps `{want}`, config sets axis `{}`",
            cfg.axis.name()
        )));
    }
    Ok(cfg.axis.values())
}

fn uniform_index(seed: u64, n: usize) -> usize {
    rng_from_seed(seed).random_range(0..n)
}

/// Transmits `trials` uniformly random symbols on core 0 and returns the
/// signed decoding offsets (0 when correct), in trial order.
fn offsets_on_core0(
    bank: &FingerprintBank,
    snr_db: f64,
    trials: usize,
    seed_path: &[u64],
    master: u64,
) -> Result<Vec<i64>> {
    let s = bank.symbol_count();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut path = seed_path.to_vec();
            path.push(t as u64);
            let sym = uniform_index(derive_seed(master, &path), s);
            path.push(1);
            let trace = bank.transmit(0, sym, 1.0, snr_db, derive_seed(master, &path));
            let d = decode_frequency(&trace, bank, 0)?;
            Ok(d.symbol_index as i64 - sym as i64)
        })
        .collect()
}

fn single_core_channel(cfg: &SweepConfig) -> Result<ChannelInstance> {
    synthesize_channel(&cfg.fiber, 1)
}

fn bank_at_spacing(
    channel: &ChannelInstance,
    cfg: &SweepConfig,
    spacing_hz: f64,
) -> Result<FingerprintBank> {
    let alphabet = FrequencyAlphabet {
        spacing_hz,
        ..cfg.alphabet.clone()
    };
    alphabet.validate()?;
    build_bank(channel, &alphabet, &cfg.rx)
}

/// Symbol error rate against frequency spacing on one core.
pub fn run_ser_vs_spacing(cfg: &SweepConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let spacings = expect_axis(cfg, "spacing_hz")?;
    let mut table = new_table(
        cfg,
        Experiment::SerSpacing,
        ["spacing_hz", "trials", "errors", "ser"],
    );
    pool(cfg.workers)?.install(|| -> Result<()> {
        let channel = single_core_channel(cfg)?;
        for (p, &spacing) in spacings.iter().enumerate() {
            let bank = bank_at_spacing(&channel, cfg, spacing)?;
            let offs = offsets_on_core0(
                &bank,
                cfg.rx.snr_db,
                cfg.trials,
                &[TAG_SPACING, p as u64],
                cfg.master_seed,
            )?;
            let errors = offs.iter().filter(|&&o| o != 0).count();
            table.push_row(vec![
                spacing.into(),
                cfg.trials.into(),
                errors.into(),
                (errors as f64 / cfg.trials as f64).into(),
            ]);
        }
        Ok(())
    })?;
    Ok(table)
}

/// Joint frequency and PAM level decoding against SNR on one core.
pub fn run_pam(cfg: &SweepConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let snrs = expect_axis(cfg, "snr_db")?;
    let mut table = new_table(
        cfg,
        Experiment::Pam,
        [
            "snr_db",
            "trials",
            "freq_errors",
            "freq_ser",
            "level_errors",
            "level_ser",
        ],
    );
    pool(cfg.workers)?.install(|| -> Result<()> {
        let bank = build_bank(&single_core_channel(cfg)?, &cfg.alphabet, &cfg.rx)?;
        let s = bank.symbol_count();
        let pam = &cfg.pam;
        for (p, &snr) in snrs.iter().enumerate() {
            let outcomes: Vec<(bool, bool)> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let base = [TAG_PAM, p as u64, t as u64];
                    let mut rng = rng_from_seed(derive_seed(cfg.master_seed, &base));
                    let sym = rng.random_range(0..s);
                    let li = rng.random_range(0..pam.len());
                    let noise = derive_seed(cfg.master_seed, &[TAG_PAM, p as u64, t as u64, 1]);
                    let trace = bank.transmit(0, sym, pam.level(li), snr, noise);
                    let d = decode_frequency(&trace, &bank, 0)?;
                    let level = decode_level(&trace, &bank, 0, d.symbol_index, pam)?;
                    Ok((d.symbol_index != sym, level != li))
                })
                .collect::<Result<_>>()?;
            let fe = outcomes.iter().filter(|o| o.0).count();
            let le = outcomes.iter().filter(|o| o.1).count();
            let n = cfg.trials as f64;
            table.push_row(vec![
                snr.into(),
                cfg.trials.into(),
                fe.into(),
                (fe as f64 / n).into(),
                le.into(),
                (le as f64 / n).into(),
            ]);
        }
        Ok(())
    })?;
    Ok(table)
}

/// Per-core and fused symbol error rate against receiver sampling rate.
pub fn run_ser_vs_rate(cfg: &SweepConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let rates = expect_axis(cfg, "sample_rate_hz")?;
    let k = cfg.cores;
    let mut columns = vec!["sample_rate_hz".to_string(), "trials".to_string()];
    columns.extend((0..k).map(|c| format!("ser_core{c}")));
    if cfg.fusion {
        columns.push("ser_fused".to_string());
    }
    let mut table = new_table(cfg, Experiment::SerRate, columns);
    pool(cfg.workers)?.install(|| -> Result<()> {
        let channel = synthesize_channel(&cfg.fiber, k)?;
        for (p, &rate) in rates.iter().enumerate() {
            let rx = ReceiverSpec {
                sample_rate_hz: rate,
                ..cfg.rx.clone()
            };
            let bank = build_bank(&channel, &cfg.alphabet, &rx)?;
            let s = bank.symbol_count();
            let outcomes: Vec<(Vec<bool>, bool)> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let base = [TAG_RATE, p as u64, t as u64];
                    let sym = uniform_index(derive_seed(cfg.master_seed, &base), s);
                    let traces: Vec<_> = (0..k)
                        .map(|c| {
                            let noise = derive_seed(
                                cfg.master_seed,
                                &[TAG_RATE, p as u64, t as u64, 1 + c as u64],
                            );
                            bank.transmit(c, sym, 1.0, rx.snr_db, noise)
                        })
                        .collect();
                    let per_core = traces
                        .iter()
                        .enumerate()
                        .map(|(c, tr)| Ok(decode_frequency(tr, &bank, c)?.symbol_index != sym))
                        .collect::<Result<Vec<bool>>>()?;
                    let fused = cfg.fusion && fuse_decode(&traces, &bank)?.symbol_index != sym;
                    Ok((per_core, fused))
                })
                .collect::<Result<_>>()?;
            let n = cfg.trials as f64;
            let mut row: Vec<Cell> = vec![rate.into(), cfg.trials.into()];
            for c in 0..k {
                let e = outcomes.iter().filter(|o| o.0[c]).count();
                row.push((e as f64 / n).into());
            }
            if cfg.fusion {
                let e = outcomes.iter().filter(|o| o.1).count();
                row.push((e as f64 / n).into());
            }
            table.push_row(row);
        }
        Ok(())
    })?;
    Ok(table)
}

/// Outcome of the spacing search for a target symbol error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedSpacing {
    pub spacing_hz: f64,
    pub ser: f64,
    pub offsets: Vec<i64>,
}

/// Searches for a spacing whose single-core SER lands in
/// `[target_low, target_high]`: probes the coarse grid, then bisects the
/// bracketing interval geometrically. Probes use `probe_trials` trials; the
/// candidate is then confirmed with the full trial count, and bisection
/// continues on full-length runs if the confirmation misses the band.
pub fn tune_spacing(cfg: &SweepConfig) -> Result<TunedSpacing> {
    cfg.validate()?;
    let o = &cfg.offsets;
    let mid = 0.5 * (o.target_low + o.target_high);
    let in_band = |ser: f64| ser >= o.target_low && ser <= o.target_high;
    pool(cfg.workers)?.install(|| {
        let channel = single_core_channel(cfg)?;
        let mut probe_id = 0u64;
        let mut run = |spacing: f64, trials: usize| -> Result<(f64, Vec<i64>)> {
            let bank = bank_at_spacing(&channel, cfg, spacing)?;
            let offs = offsets_on_core0(
                &bank,
                cfg.rx.snr_db,
                trials,
                &[TAG_OFFSETS, probe_id],
                cfg.master_seed,
            )?;
            probe_id += 1;
            let ser = offs.iter().filter(|&&x| x != 0).count() as f64 / trials as f64;
            Ok((ser, offs))
        };

        let mut grid = o.grid_hz.clone();
        grid.sort_by(f64::total_cmp);
        let mut probes = Vec::with_capacity(grid.len());
        for &g in &grid {
            probes.push(run(g, o.probe_trials)?.0);
        }
        let bracket = (0..grid.len() - 1)
            .find(|&i| probes[i] >= mid && probes[i + 1] <= mid)
            .ok_or_else(|| {
                Error::Calibration(format!(
                    "no grid interval brackets SER {mid}; probe SERs {probes:?} over {grid:?}"
                ))
            })?;
        let (mut lo, mut hi) = (grid[bracket], grid[bracket + 1]);
        let mut full = false;
        for _ in 0..=o.max_steps {
            let x = (lo * hi).sqrt();
            let trials = if full { cfg.trials } else { o.probe_trials };
            let (ser, offs) = run(x, trials)?;
            if in_band(ser) {
                if full || trials == cfg.trials {
                    return Ok(TunedSpacing {
                        spacing_hz: x,
                        ser,
                        offsets: offs,
                    });
                }
                let (ser_full, offs_full) = run(x, cfg.trials)?;
                if in_band(ser_full) {
                    return Ok(TunedSpacing {
                        spacing_hz: x,
                        ser: ser_full,
                        offsets: offs_full,
                    });
                }
                full = true;
                if ser_full > mid {
                    lo = x;
                } else {
                    hi = x;
                }
                continue;
            }
            if ser > mid {
                lo = x;
            } else {
                hi = x;
            }
        }
        Err(Error::Calibration(format!(
            "no spacing in [{lo}, {hi}] Hz reached SER in [{}, {}]",
            o.target_low, o.target_high
        )))
    })
}

/// Histogram of decoding offsets (decoded minus true index) among errors,
/// at a spacing tuned to the configured SER band.
pub fn run_offset_hist(cfg: &SweepConfig) -> Result<ResultTable> {
    let tuned = tune_spacing(cfg)?;
    let mut table = new_table(cfg, Experiment::Offsets, ["offset", "count", "fraction"]);
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for &o in tuned.offsets.iter().filter(|&&o| o != 0) {
        *counts.entry(o).or_default() += 1;
    }
    let errors: usize = counts.values().sum();
    for (&offset, &count) in &counts {
        table.push_row(vec![
            offset.into(),
            count.into(),
            (count as f64 / errors as f64).into(),
        ]);
    }
    table.set_meta("tuned_spacing_hz", format!("{:?}", tuned.spacing_hz));
    table.set_meta("ser", format!("{:?}", tuned.ser));
    table.set_meta("errors", errors);
    table.set_meta("trials", tuned.offsets.len());
    Ok(table)
}

/// Classification outcome of one transmitted test sequence.
struct SequenceOutcome {
    symbol_errors: [usize; 2],
    wrong: [bool; 2],
    clean_wrong: bool,
}

fn classify(
    clf: &LinearClassifier,
    tokens: &[usize],
    synth: &SyntheticCorpus,
    label: u8,
) -> Result<bool> {
    Ok(u8::from(predict(clf, tokens, &synth.table)? >= 0.5) != label)
}

/// Classification robustness of greedy semantic ordering against the
/// original (shuffled) ordering. The axis is either receiver sampling rate,
/// for transmission through the simulated channel, or symbol error rate,
/// for the offset-error fast path.
pub fn run_semantic(cfg: &SweepConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let fast = match &cfg.axis {
        SweepAxis::SampleRateHz(_) => false,
        SweepAxis::ErrorRate(_) => true,
        other => {
            return Err(Error::Config(format!(
                "semantic sweeps `sample_rate_hz` or `error_rate`, config sets axis `{}`",
                other.name()
            )))
        }
    };
    let st = &cfg.semantic;
    let v = st.corpus.vocab_size;
    let synth = synth_corpus(&st.corpus)?;
    let clf = train(&synth.train, &synth.table, &st.train)?;
    let clean_test_error = evaluate(&clf, &synth.test, &synth.table)?;
    let greedy = greedy_order(&synth.table, st.start)?;
    let orders = [greedy, IndexPermutation::identity(v)];
    let inverses = [orders[0].inverse(), orders[1].inverse()];

    // Test sequences evaluated under each seed.
    let picks: Vec<(u64, usize, &Sample)> = (0..st.seeds)
        .flat_map(|s| {
            let mut rng = rng_from_seed(derive_seed(cfg.master_seed, &[TAG_SEMANTIC, 0, s as u64]));
            sample(&mut rng, synth.test.len(), st.sequences)
                .into_iter()
                .enumerate()
                .map(move |(j, idx)| (s as u64, j, idx))
                .collect::<Vec<_>>()
        })
        .map(|(s, j, idx)| (s, j, &synth.test.samples()[idx]))
        .collect();

    let mut table = new_table(
        cfg,
        Experiment::Semantic,
        [
            cfg.axis.name(),
            "sequences",
            "symbol_error_rate",
            "class_error_greedy",
            "class_error_baseline",
            "class_error_clean",
        ],
    );
    table.set_meta("clean_test_error", format!("{clean_test_error:?}"));

    pool(cfg.workers)?.install(|| -> Result<()> {
        let channel = if fast {
            None
        } else {
            Some(single_core_channel(cfg)?)
        };
        for (p, &x) in cfg.axis.values().iter().enumerate() {
            let mut bank = None;
            let mut model = None;
            if fast {
                model = Some(OffsetErrorModel::new(x, st.offset_weights.clone())?);
            } else {
                let rx = ReceiverSpec {
                    sample_rate_hz: x,
                    ..cfg.rx.clone()
                };
                let alphabet = FrequencyAlphabet {
                    size: v,
                    ..cfg.alphabet.clone()
                };
                bank = Some(build_bank(
                    channel.as_ref().expect("channel path"),
                    &alphabet,
                    &rx,
                )?);
            }
            let outcomes: Vec<SequenceOutcome> = picks
                .par_iter()
                .map(|&(s, j, smp)| {
                    let seq_seed =
                        derive_seed(cfg.master_seed, &[TAG_SEMANTIC, 1, p as u64, s, j as u64]);
                    let mut out = SequenceOutcome {
                        symbol_errors: [0; 2],
                        wrong: [false; 2],
                        clean_wrong: classify(&clf, &smp.tokens, &synth, smp.label)?,
                    };
                    for o in 0..2 {
                        let sent: Vec<usize> = smp.tokens.iter().map(|&t| inverses[o][t]).collect();
                        let received = match (&model, &bank) {
                            (Some(m), _) => perturb(&sent, m, v, seq_seed)?,
                            (None, Some(b)) => sent
                                .iter()
                                .enumerate()
                                .map(|(pos, &sym)| {
                                    let noise = derive_seed(seq_seed, &[pos as u64]);
                                    let tr = b.transmit(0, sym, 1.0, b.rx().snr_db, noise);
                                    Ok(decode_frequency(&tr, b, 0)?.symbol_index)
                                })
                                .collect::<Result<Vec<usize>>>()?,
                            (None, None) => unreachable!("one transmission path is always set"),
                        };
                        out.symbol_errors[o] =
                            sent.iter().zip(&received).filter(|(a, b)| a != b).count();
                        let tokens: Vec<usize> =
                            received.iter().map(|&q| orders[o].token_at(q)).collect();
                        out.wrong[o] = classify(&clf, &tokens, &synth, smp.label)?;
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let n = outcomes.len() as f64;
            let symbols: usize = picks.iter().map(|p| p.2.tokens.len()).sum::<usize>() * 2;
            let sym_err: usize = outcomes
                .iter()
                .map(|o| o.symbol_errors[0] + o.symbol_errors[1])
                .sum();
            let frac = |f: &dyn Fn(&SequenceOutcome) -> bool| {
                outcomes.iter().filter(|o| f(o)).count() as f64 / n
            };
            table.push_row(vec![
                x.into(),
                outcomes.len().into(),
                (sym_err as f64 / symbols as f64).into(),
                frac(&|o| o.wrong[0]).into(),
                frac(&|o| o.wrong[1]).into(),
                frac(&|o| o.clean_wrong).into(),
            ]);
        }
        Ok(())
    })?;
    Ok(table)
}

/// Reads an embedding file, orders it greedily from `start`, and writes the
/// permutation file.
pub fn run_order(embeddings: &Path, start: usize, out: &Path) -> Result<IndexPermutation> {
    let table = read_embeddings(embeddings)?;
    let perm = greedy_order(&table, start)?;
    write_permutation(&perm, out)?;
    Ok(perm)
}

/// Runs the experiment selected by `experiment`.
pub fn run(experiment: Experiment, cfg: &SweepConfig) -> Result<ResultTable> {
    match experiment {
        Experiment::SerSpacing => run_ser_vs_spacing(cfg),
        Experiment::SerRate => run_ser_vs_rate(cfg),
        Experiment::Pam => run_pam(cfg),
        Experiment::Offsets => run_offset_hist(cfg),
        Experiment::Semantic => run_semantic(cfg),
    }
}
