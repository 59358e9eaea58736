use coexist_core::scheduler::Policy;
use coexist_sim::config::{ScenarioConfig, SchemeSelector};
use coexist_sim::experiment::{jobs, run_experiment, run_records, ResultRow};
use coexist_sim::output::{read_csv, write_csv, HEADER};
use coexist_sim::SimError;

fn small() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.sim.seeds = 3;
    cfg.sim.ttis = 10;
    cfg.sim.sweep_urllc = vec![5, 20];
    cfg
}

#[test]
fn default_text_keeps_table_values() {
    let text = ScenarioConfig::default().to_toml_string().unwrap();
    for line in [
        "noise_dbm = -97.5",
        "bandwidth_mhz = 5.0",
        "carrier_ghz = 2.0",
        "embb_tx_power_mw = 0.01",
        "packet_bytes = 100",
        "tti_ms = 1.0",
        "mini_slot_ms = 0.125",
        "radius_m = 1000.0",
        "error_target = 0.00001",
    ] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
    let back = ScenarioConfig::from_toml_str(&text).unwrap();
    assert_eq!(back, ScenarioConfig::default());
    assert_eq!(back.to_toml_string().unwrap(), text);
}

#[test]
fn empty_file_is_default() {
    assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
}

#[test]
fn overrides_apply() {
    let cfg = ScenarioConfig::from_toml_str(
        "[radio]\ninterference = \"urllc-gain\"\nerror_target = 1e-7\n[sim]\nscheme = \"puncture\"\nsweep_urllc = [5, 10]\n",
    )
    .unwrap();
    assert_eq!(cfg.sim.scheme, SchemeSelector::Puncture);
    assert_eq!(cfg.urllc_counts(), vec![5, 10]);
    assert_eq!(cfg.epsilons(), vec![1e-7]);
}

#[test]
fn unknown_keys_rejected() {
    assert!(matches!(ScenarioConfig::from_toml_str("[radio]\nnoise = 1.0\n"), Err(SimError::Parse(_))));
    assert!(matches!(ScenarioConfig::from_toml_str("[extra]\nx = 1\n"), Err(SimError::Parse(_))));
}

#[test]
fn invalid_field_is_named() {
    let err = ScenarioConfig::from_toml_str("[frame]\nrb_count = 0\n").unwrap_err();
    assert!(matches!(err, SimError::Config { ref field, .. } if field == "frame.rb_count"), "{err}");
    let err = ScenarioConfig::from_toml_str("[frame]\nmini_slot_ms = 0.3\n").unwrap_err();
    assert!(matches!(err, SimError::Config { ref field, .. } if field == "frame.mini_slot_ms"), "{err}");
    let err = ScenarioConfig::from_toml_str("[pricing]\nincentive_share = 1.5\n").unwrap_err();
    assert!(matches!(err, SimError::Config { ref field, .. } if field == "pricing.incentive_share"), "{err}");
}

#[test]
fn zero_load_rows_match_no_urllc() {
    let mut cfg = small();
    cfg.sim.seeds = 1;
    cfg.traffic.arrival_rate = 0.0;
    let rows = run_experiment(&cfg).unwrap();
    for n in [5, 20] {
        let pick = |p| *rows.iter().find(|r| r.scheme == p && r.n_urllc == n).unwrap();
        let none = pick(Policy::NoUrllc);
        for p in [Policy::Contract, Policy::Puncture] {
            let r = pick(p);
            assert_eq!(
                (r.embb_rate_bps, r.bs_profit, r.urllc_utility, r.drops),
                (none.embb_rate_bps, none.bs_profit, none.urllc_utility, none.drops)
            );
        }
    }
}

#[test]
fn row_count_and_order() {
    let mut cfg = small();
    cfg.sim.sweep_urllc = (5..=40).step_by(5).collect();
    cfg.sim.ttis = 2;
    assert_eq!(jobs(&cfg).len(), 8 * 3 * 3);
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 8 * 3 * 3);
    let keys: Vec<_> = rows.iter().map(|r| (r.scheme, r.n_urllc, r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn duplicate_sweep_points_rejected() {
    let mut cfg = small();
    cfg.sim.sweep_urllc = vec![5, 5];
    assert!(matches!(run_experiment(&cfg), Err(SimError::DuplicateRow(_))));
}

fn csv_bytes(rows: &[ResultRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).unwrap();
    buf
}

#[test]
fn csv_is_deterministic_and_round_trips() {
    let a = csv_bytes(&run_experiment(&small()).unwrap());
    let b = csv_bytes(&run_experiment(&small()).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    assert!(!text.contains('\r'));
    let rows = read_csv(a.as_slice()).unwrap();
    assert_eq!(rows, run_experiment(&small()).unwrap());
    assert_eq!(csv_bytes(&rows), a);
}

#[test]
fn csv_shapes_and_rejections() {
    let row = run_experiment(&small()).unwrap()[0];
    let one = String::from_utf8(csv_bytes(&[row])).unwrap();
    assert_eq!(one.lines().count(), 2);
    let mut buf = Vec::new();
    assert!(matches!(write_csv(&[row, row], &mut buf), Err(SimError::DuplicateRow(_))));
    assert!(matches!(write_csv(&[], &mut buf), Err(SimError::EmptyRows)));
    let mut bad = row;
    bad.bs_profit = f64::NAN;
    assert!(write_csv(&[bad], &mut buf).is_err());
}

#[test]
fn emit_to_unwritable_path_fails() {
    let row = run_experiment(&small()).unwrap()[0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    assert!(matches!(coexist_sim::output::emit_csv(&[row], &path), Err(SimError::Io(_))));
    let ok = dir.path().join("out.csv");
    coexist_sim::output::emit_csv(&[row], &ok).unwrap();
    assert_eq!(coexist_sim::output::parse_csv(&ok).unwrap(), vec![row]);
}

#[test]
fn standard_error_shrinks_with_seeds() {
    // arrivals per run is linear in the Poisson draws
    let se = |seeds: u64| {
        let mut cfg = ScenarioConfig::default();
        cfg.sim.scheme = SchemeSelector::Contract;
        cfg.sim.seeds = seeds;
        cfg.sim.ttis = 10;
        let recs = run_records(&cfg).unwrap().records;
        let xs: Vec<f64> = recs.iter().map(|r| r.metrics.arrivals as f64).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    let ratio = se(400) / se(25);
    assert!((0.15..0.35).contains(&ratio), "ratio {ratio}, expected about 0.25");
}
