#![allow(clippy::field_reassign_with_default)]

mod common;

use common::c;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_anm::channel::{Path, PathSet, DEFAULT_GAIN_CAL_DB};
use ris_anm::harness::{
    apply_sweep_point, calibrate_gain_db, emit_results, median, nmse, read_json_records, run_point, run_sweep,
    run_trial, run_trial_opts, sample_scenario, sample_ue_position, selftest, snr_db, summarize, write_csv, Metric,
    OutputFormat, SimConfig, SweepRecord, SweepSpec, SweepTable, SweepVariable, CSV_HEADER, TARGET_MEAN_SNR_DB,
};
use ris_anm::{AnmMode, CMatrix, Error};

fn single(gain: f64) -> PathSet<f64> {
    PathSet { paths: vec![Path { gain: c(gain, 0.0), aod: 60.0, aoa: 60.0 }], los: true }
}

fn noiseless_two_path() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.pilot.sigma = 0.0;
    cfg.channel.l_ru_range = [2, 2];
    cfg.channel.min_cos_separation = Some(2.0 / cfg.dims.m_r as f64);
    cfg
}

fn record(value: f64, mean: f64) -> SweepRecord {
    SweepRecord {
        variable: "tx_power_dbm".into(),
        value,
        mode: AnmMode::TwoDMmv,
        metric: Metric::Nmse,
        mean,
        ci_lo: mean * 0.9,
        ci_hi: mean * 1.1,
        trials: 5,
        seed0: 9,
    }
}

#[test]
fn nmse_examples() {
    let h = CMatrix::from_fn(4, 16, |i, j| c(i as f64 - 1.5, j as f64 * 0.1));
    assert_eq!(nmse(&h, &h).unwrap(), 0.0);
    assert_eq!(nmse(&CMatrix::zeros(4, 16), &h).unwrap(), 1.0);
    assert!((nmse(&(&h * c(2.0, 0.0)), &h).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(nmse(&CMatrix::zeros(4, 15), &h), Err(Error::InvalidDimension(_))));
    assert!(matches!(nmse(&h, &CMatrix::zeros(4, 16)), Err(Error::DegenerateInput(_))));
}

#[test]
fn snr_examples() {
    let mut cfg = SimConfig::default();
    cfg.pilot.p_tx_mw = 1.0;
    cfg.pilot.sigma = 1.0;
    assert!(snr_db(&single(1.0), &single(1.0), &cfg).abs() < 1e-12);
    cfg.pilot.p_tx_mw = 10.0;
    assert!((snr_db(&single(1.0), &single(1.0), &cfg) - 10.0).abs() < 1e-12);
    // Gains add coherently across paths.
    let two = PathSet { paths: vec![single(1.0).paths[0], single(1.0).paths[0]], los: true };
    cfg.pilot.p_tx_mw = 1.0;
    assert!((snr_db(&single(1.0), &two, &cfg) - 20.0 * 2f64.log10()).abs() < 1e-12);
    cfg.pilot.sigma = 0.0;
    assert_eq!(snr_db(&single(1.0), &single(1.0), &cfg), f64::INFINITY);
}

#[test]
fn trials_are_deterministic_per_seed() {
    let cfg = SimConfig::default();
    for mode in [AnmMode::OneDMmv, AnmMode::TwoDMmv] {
        let a = run_trial(&cfg, mode, 42).unwrap();
        let b = run_trial(&cfg, mode, 42).unwrap();
        assert_eq!(a, b);
        let other = run_trial(&cfg, mode, 43).unwrap();
        assert_ne!(a.nmse, other.nmse);
        assert!(a.nmse.unwrap() >= 0.0);
    }
}

#[test]
fn noiseless_two_path_trials_recover_the_channel() {
    let cfg = noiseless_two_path();
    for mode in [AnmMode::OneDMmv, AnmMode::TwoDMmv] {
        for seed in 0..3 {
            let r = run_trial(&cfg, mode, seed).unwrap();
            assert_eq!(r.l_ru, 2);
            assert_eq!(r.ebt_db, f64::INFINITY);
            let e = r.nmse.unwrap();
            assert!(e < 1e-3, "{mode} seed {seed}: NMSE {e}");
        }
    }
}

#[test]
fn mode_budgets_are_enforced() {
    let mut cfg = SimConfig::default();
    // 64 symbols give B = 16 = M_R frames, which the adapted codebook forbids.
    cfg.symbols.one_d = 64;
    assert!(matches!(run_trial(&cfg, AnmMode::OneDMmv, 1), Err(Error::InvalidConfig(_))));
    // The full codebook needs exactly M_R frames.
    cfg.symbols.two_d = 24;
    assert!(matches!(run_trial(&cfg, AnmMode::TwoDMmv, 1), Err(Error::InvalidConfig(_))));
    cfg.symbols.three_d = 40;
    assert!(matches!(run_trial(&cfg, AnmMode::ThreeDSmv, 1), Err(Error::InvalidConfig(_))));
}

#[test]
fn estimation_can_be_skipped() {
    let cfg = SimConfig::default();
    let full = run_trial(&cfg, AnmMode::OneDMmv, 5).unwrap();
    let quick = run_trial_opts(&cfg, AnmMode::OneDMmv, 5, false).unwrap();
    assert_eq!(quick.nmse, None);
    assert_eq!(quick.stats, None);
    assert_eq!(quick.ebt_db, full.ebt_db);
    assert_eq!(quick.snr_db, full.snr_db);
}

#[test]
fn config_json_round_trip_and_strictness() {
    let mut cfg = SimConfig::default();
    cfg.trials = 7;
    cfg.symbols.three_d = 24;
    cfg.sweep = Some(SweepSpec::new(SweepVariable::TxPowerDbm, vec![10.0, 20.0]));
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(SimConfig::from_json_str(&text).unwrap(), cfg);
    // Partial configs fill in defaults.
    let partial = SimConfig::from_json_str(r#"{"trials": 3, "pilot": {"sigma": 2e-5}}"#).unwrap();
    assert_eq!(partial.trials, 3);
    assert_eq!(partial.pilot.sigma, 2e-5);
    assert_eq!(partial.pilot.d_samples, 100);
    assert!(SimConfig::from_json_str(r#"{"trails": 3}"#).is_err());
    assert!(SimConfig::from_json_str(r#"{"pilot": {"sigmaa": 1.0}}"#).is_err());
}

#[test]
fn config_validation() {
    assert!(SimConfig::default().validate().is_ok());
    let mut cfg = SimConfig::default();
    cfg.trials = 0;
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    let mut cfg = SimConfig::default();
    cfg.dims.n_b = 3;
    assert!(cfg.validate().is_err());
    let mut cfg = SimConfig::default();
    cfg.pilot.sigma = -1.0;
    assert!(cfg.validate().is_err());
    let mut cfg = SimConfig::default();
    cfg.sweep = Some(SweepSpec::new(SweepVariable::NumSymbols, vec![]));
    assert!(cfg.validate().is_err());
    assert!(matches!(SimConfig::from_json_file(std::path::Path::new("/nonexistent/cfg.json")), Err(Error::Io(_))));
}

#[test]
fn sweep_spec_validation() {
    let ok = |v: SweepVariable, g: Vec<f64>| SweepSpec::new(v, g).validate();
    assert!(ok(SweepVariable::TxPowerDbm, vec![10.0, 20.0, 30.0]).is_ok());
    assert!(ok(SweepVariable::RisUeDistanceM, vec![70.0, 40.0]).is_ok());
    assert!(ok(SweepVariable::TxPowerDbm, vec![]).is_err());
    assert!(ok(SweepVariable::TxPowerDbm, vec![10.0, 10.0]).is_err());
    assert!(ok(SweepVariable::TxPowerDbm, vec![10.0, 30.0, 20.0]).is_err());
    assert!(ok(SweepVariable::TxPowerDbm, vec![10.0, f64::NAN]).is_err());
    assert!(ok(SweepVariable::NumSymbols, vec![16.0, 24.5]).is_err());
    assert!(ok(SweepVariable::MR, vec![0.0, 16.0]).is_err());
    let mut s = SweepSpec::new(SweepVariable::TxPowerDbm, vec![10.0]);
    s.trials = Some(0);
    assert!(s.validate().is_err());
    s.trials = Some(1);
    s.metrics.clear();
    assert!(s.validate().is_err());
}

#[test]
fn sweep_points_set_the_swept_quantity() {
    let cfg = SimConfig::default();
    let p = apply_sweep_point(&cfg, SweepVariable::TxPowerDbm, 20.0).unwrap();
    assert!((p.pilot.p_tx_mw - 100.0).abs() < 1e-12);
    let p = apply_sweep_point(&cfg, SweepVariable::NumSymbols, 24.0).unwrap();
    assert_eq!((p.symbols.one_d, p.symbols.two_d, p.symbols.three_d), (24, 24, 24));
    let p = apply_sweep_point(&cfg, SweepVariable::MR, 32.0).unwrap();
    assert_eq!(p.dims.m_r, 32);
    assert_eq!(p.frames(AnmMode::TwoDMmv).unwrap(), 32);
    let p = apply_sweep_point(&cfg, SweepVariable::RisUeDistanceM, 70.0).unwrap();
    assert_eq!(p.geometry.ue_distance, Some(70.0));
    let p = apply_sweep_point(&cfg, SweepVariable::AodErrorDeg, 5.0).unwrap();
    assert_eq!(p.aod_error_deg, 5.0);
}

#[test]
fn distance_placement_is_exact_and_crosses_the_los_cutoff() {
    let mut cfg = SimConfig::default();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for (d, los) in [(40.0, true), (59.0, true), (61.0, false), (70.0, false)] {
        cfg.geometry.ue_distance = Some(d);
        let ue = sample_ue_position(&cfg.geometry, &mut r).unwrap();
        let ris = cfg.geometry.ris;
        assert!(((ue[0] - ris[0]).hypot(ue[1] - ris[1]) - d).abs() < 1e-9);
        // Same side of the RIS as the UE disc, away from the BS.
        assert!(ue[0] > ris[0] && ue[1] < ris[1]);
        let scen = sample_scenario(&cfg, &mut r).unwrap();
        assert_eq!(scen.ru.los, los, "d = {d}");
    }
}

#[test]
fn disc_sampling_stays_in_the_disc() {
    let cfg = SimConfig::default();
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let g = &cfg.geometry;
    for _ in 0..2000 {
        let ue = sample_ue_position(g, &mut r).unwrap();
        assert!((ue[0] - g.ue_center[0]).hypot(ue[1] - g.ue_center[1]) <= g.ue_radius);
    }
}

#[test]
fn calibration_reproduces_the_default_offset() {
    let cfg = SimConfig::default();
    let cal = calibrate_gain_db(&cfg, 200_000, 1_000_000).unwrap();
    // Independent 200k-trial estimates scatter by about 2e-3 dB.
    assert!((cal - DEFAULT_GAIN_CAL_DB).abs() < 0.01, "calibrated {cal}");
    assert!(matches!(calibrate_gain_db(&cfg, 0, 0), Err(Error::InvalidConfig(_))));
}

#[test]
fn default_scenario_averages_the_target_snr() {
    let cfg = SimConfig::default();
    let trials = run_point(&cfg, AnmMode::OneDMmv, 50_000, 7_000_000, false).unwrap();
    let mean = trials.iter().map(|t| t.snr_db).sum::<f64>() / trials.len() as f64;
    assert!((mean - TARGET_MEAN_SNR_DB).abs() < 0.15, "mean SNR {mean}");
}

#[test]
fn summaries_are_deterministic_and_bracket_the_mean() {
    let values: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 + 1.0).collect();
    let a = summarize(&values, 5);
    let b = summarize(&values, 5);
    assert_eq!(a, b);
    assert!(a.ci_lo <= a.mean && a.mean <= a.ci_hi);
    assert!(a.ci_lo < a.ci_hi);
    assert_eq!(a.median, median(&values));
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(&[]).is_nan());
    let inf = summarize(&[1.0, f64::INFINITY], 1);
    assert_eq!((inf.mean, inf.ci_lo, inf.ci_hi), (f64::INFINITY, f64::INFINITY, f64::INFINITY));
}

#[test]
fn small_sweep_produces_a_record_per_point_mode_and_metric() {
    let mut cfg = SimConfig::default();
    cfg.seed = 3;
    let mut spec = SweepSpec::new(SweepVariable::NumSymbols, vec![16.0, 32.0]);
    spec.trials = Some(4);
    spec.metrics = vec![Metric::EbtDb, Metric::SnrDb];
    let table = run_sweep(&cfg, &spec, &[AnmMode::OneDMmv, AnmMode::TwoDMmv]).unwrap();
    // 2D cannot run on 16 symbols (it needs M_R frames of P_U symbols).
    assert_eq!(table.skipped.len(), 1);
    assert_eq!((table.skipped[0].value, table.skipped[0].mode), (16.0, AnmMode::TwoDMmv));
    assert_eq!(table.records.len(), 3 * 2);
    for r in &table.records {
        assert_eq!((r.trials, r.seed0, r.variable.as_str()), (4, 3, "num_symbols"));
        assert!(r.ci_lo <= r.mean && r.mean <= r.ci_hi);
    }
    assert_eq!(table.series(AnmMode::OneDMmv, Metric::EbtDb).len(), 2);
    let again = run_sweep(&cfg, &spec, &[AnmMode::OneDMmv, AnmMode::TwoDMmv]).unwrap();
    assert_eq!(table, again);
}

#[test]
fn empty_table_emits_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit_results(&SweepTable::default(), &path, OutputFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    assert_eq!(CSV_HEADER.join(","), "variable,value,mode,metric,mean,ci_lo,ci_hi,trials,seed0");
}

#[test]
fn json_round_trip_including_non_finite_values() {
    let table = SweepTable {
        records: vec![
            record(10.0, 0.5),
            record(20.0, 0.1234567890123),
            record(30.0, f64::INFINITY),
            record(40.0, f64::NAN),
        ],
        skipped: vec![],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    emit_results(&table, &path, OutputFormat::Json).unwrap();
    let back = read_json_records(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.len(), 4);
    assert_eq!(back[..3], table.records[..3]);
    assert!(back[3].mean.is_nan());
}

#[test]
fn csv_rows_have_constant_width_and_are_bit_stable() {
    let table = SweepTable {
        records: vec![record(10.0, 0.5), record(20.0, f64::INFINITY), record(30.0, 1e-300)],
        skipped: vec![],
    };
    let mut a = Vec::new();
    write_csv(&table.records, &mut a).unwrap();
    let mut b = Vec::new();
    write_csv(&table.records, &mut b).unwrap();
    assert_eq!(a, b);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(a.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == CSV_HEADER.len()));
    assert_eq!(&rows[1][4], "inf");
    assert_eq!(rows[2][4].parse::<f64>().unwrap(), 1e-300);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let path = std::path::Path::new("/nonexistent-dir/out.csv");
    for f in [OutputFormat::Csv, OutputFormat::Json] {
        assert!(matches!(emit_results(&SweepTable::default(), path, f), Err(Error::Io(_))));
    }
}

#[test]
fn output_format_parsing() {
    assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
    assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
    assert!("xml".parse::<OutputFormat>().is_err());
    assert_eq!("ebt_db".parse::<Metric>().unwrap(), Metric::EbtDb);
    assert!("bogus".parse::<Metric>().is_err());
}

#[test]
fn selftest_passes() {
    let checks = selftest();
    assert!(!checks.is_empty());
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}
