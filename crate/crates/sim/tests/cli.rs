use std::process::{Command, Output};

use coexist_sim::output::parse_csv;

fn coexist(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coexist"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn coexist")
}

#[test]
fn validate_defaults() {
    let out = coexist(&["validate-config"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("noise_dbm = -97.5"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(coexist(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(coexist(&["run", "--bogus"], &[]).status.code(), Some(2));
    assert_eq!(coexist(&["run", "--scheme", "both"], &[]).status.code(), Some(2));
    assert_eq!(coexist(&[], &[]).status.code(), Some(2));
}

#[test]
fn bad_config_reports_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[topology]\nn_embb = 0\n").unwrap();
    let out = coexist(&["validate-config", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("topology.n_embb"));
}

#[test]
fn run_is_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "run".to_string(),
            "--scheme".into(),
            "all".into(),
            "--seeds".into(),
            "3".into(),
            "--sweep-urllc".into(),
            "5:15:5".into(),
            "--sweep-epsilon".into(),
            "1e-3,1e-5".into(),
            "--ttis".into(),
            "5".into(),
            "--out".into(),
            p.to_str().unwrap().to_string(),
        ]
    };
    let run = |p: &std::path::Path, threads: &str| {
        let a = args(p);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        coexist(&refs, &[("COEXIST_THREADS", threads)])
    };
    assert_eq!(run(&a, "1").status.code(), Some(0));
    assert_eq!(run(&b, "4").status.code(), Some(0));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(parse_csv(&a).unwrap().len(), 3 * 3 * 2 * 3);
    assert_eq!(run(&b, "zero").status.code(), Some(1));
}

#[test]
fn oracle_verb_reports_no_violations() {
    let out = coexist(&["oracle", "--instances", "5", "--seed", "3"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("instance,n_embb,n_urllc,rb_count,minislots,oracle_bits"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 dominance violations"));
}

#[test]
fn bundle_dump_lists_every_tier() {
    let out = coexist(&["bundle-dump"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("tier,type,outer_radius_m,promised_rate_bps,price,incentive,utility_item_1"));
    let field = |line: &str, i: usize| line.split(',').nth(i).unwrap().parse::<f64>().unwrap();
    let expected = [(1.0, 250.0, 7.36e6, 2.31), (0.75, 500.0, 7.04e6, 1.99), (0.5, 750.0, 6.72e6, 1.75), (0.25, 1000.0, 6.4e6, 1.59)];
    for (line, (ty, radius, rate, price)) in lines[1..].iter().zip(expected) {
        assert_eq!(field(line, 1), ty);
        assert_eq!(field(line, 2), radius);
        assert!((field(line, 3) - rate).abs() < 1e-3);
        assert!((field(line, 4) - price).abs() < 1e-9);
        assert_eq!(field(line, 5), 0.5);
    }
}
