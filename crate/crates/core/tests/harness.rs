use mmf_core::harness::*;
use mmf_core::semantic::{read_permutation, IndexPermutation};

fn quick(e: Experiment, text: &str) -> SweepConfig {
    SweepConfig::from_text(text, SweepConfig::preset(e)).unwrap()
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = SweepConfig::preset(Experiment::SerSpacing);
    cfg.trials = 0;
    assert!(run_ser_vs_spacing(&cfg).unwrap_err().is_config_error());
    let cfg = SweepConfig::preset(Experiment::Pam);
    assert!(run_ser_vs_spacing(&cfg).unwrap_err().is_config_error());
    let cfg = quick(Experiment::Semantic, "axis = snr_db\naxis.values = 10");
    assert!(run_semantic(&cfg).unwrap_err().is_config_error());
}

#[test]
fn noiseless_pam_is_error_free() {
    let cfg = quick(Experiment::Pam, "trials = 300\naxis.values = inf");
    let t = run_pam(&cfg).unwrap();
    assert_eq!(t.column("freq_ser").unwrap(), vec![0.0]);
    assert_eq!(t.column("level_ser").unwrap(), vec![0.0]);
}

#[test]
fn spacing_sweep_values_are_rates() {
    let cfg = quick(Experiment::SerSpacing, "trials = 400");
    let t = run_ser_vs_spacing(&cfg).unwrap();
    assert_eq!(t.rows().len(), 5);
    let ser = t.column("ser").unwrap();
    let errors = t.column("errors").unwrap();
    for (s, e) in ser.iter().zip(&errors) {
        assert!((0.0..=1.0).contains(s));
        assert_eq!(*s, e / 400.0);
    }
}

#[test]
fn fast_path_semantic() {
    let cfg = quick(
        Experiment::Semantic,
        "axis = error_rate\naxis.values = 0, 0.2, 0.43\nsemantic.seeds = 4",
    );
    let t = run_semantic(&cfg).unwrap();
    let ser = t.column("symbol_error_rate").unwrap();
    let greedy = t.column("class_error_greedy").unwrap();
    let baseline = t.column("class_error_baseline").unwrap();
    let clean = t.column("class_error_clean").unwrap();
    assert_eq!(ser[0], 0.0);
    assert_eq!(greedy[0], clean[0]);
    assert_eq!(baseline[0], clean[0]);
    for i in 1..3 {
        assert!((ser[i] - cfg.axis.values()[i]).abs() < 0.05);
        assert!(
            greedy[i] < ser[i] && greedy[i] < baseline[i],
            "{greedy:?} {baseline:?}"
        );
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let text = "trials = 150\nsemantic.seeds = 2\nsemantic.sequences = 10\naxis.values = 3e9";
    for e in [Experiment::SerRate, Experiment::Semantic] {
        let mut a = quick(e, text);
        let mut b = a.clone();
        a.workers = 1;
        b.workers = 3;
        let ta = run(e, &a).unwrap();
        let tb = run(e, &b).unwrap();
        assert_eq!(ta.to_json(), tb.to_json(), "{}", e.name());
        assert_eq!(ta.to_csv(), tb.to_csv(), "{}", e.name());
    }
}

#[test]
fn config_echo_reproduces_the_run() {
    let cfg = quick(Experiment::SerSpacing, "trials = 200\nseed = 99");
    let first = run_ser_vs_spacing(&cfg).unwrap();
    let echoed =
        SweepConfig::from_text(first.meta("config").unwrap(), SweepConfig::default()).unwrap();
    assert_eq!(run_ser_vs_spacing(&echoed).unwrap(), first);
}

#[test]
fn order_files() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb.txt");
    let out = dir.path().join("perm.txt");
    std::fs::write(&emb, "3 2\nA 1 0\nB 0 1\nC 0.8 0.6\n").unwrap();
    let perm = run_order(&emb, 0, &out).unwrap();
    assert_eq!(perm, IndexPermutation::new(vec![0, 2, 1]).unwrap());
    assert_eq!(read_permutation(&out).unwrap(), perm);

    std::fs::write(&emb, "three 2\nA 1 0\n").unwrap();
    assert!(run_order(&emb, 0, &out).unwrap_err().is_config_error());
}
