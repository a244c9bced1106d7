use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sensordiff"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sensordiff")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn summary(o: &Output) -> Vec<(String, String)> {
    stdout(o)
        .split(' ')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .unwrap_or_else(|| panic!("not key=value: {kv}"));
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn value(o: &Output, key: &str) -> String {
    summary(o)
        .into_iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .unwrap_or_else(|| panic!("no `{key}` in `{}`", stdout(o)))
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two-feature series with a level shift halfway through.
fn two_feature_file(dir: &TempDir) -> PathBuf {
    let mut text = String::from("t,temp,load\n");
    let mut x = 0.0f64;
    for i in 0..120 {
        x += ((i * 37 % 11) as f64 - 5.0) * 0.1;
        let shift = if i >= 60 { 8.0 } else { 0.0 };
        text.push_str(&format!(
            "{i},{},{}\n",
            x + shift,
            (i as f64 * 0.7).sin() + shift
        ));
    }
    let path = p(dir, "two.csv");
    fs::write(&path, text).unwrap();
    path
}

fn brownian_file(dir: &TempDir, seed: u64) -> PathBuf {
    let path = p(dir, &format!("bm{seed}.csv"));
    let o = run(&[
        "simulate",
        "--out",
        s(&path),
        "--steps",
        "200",
        "--seed",
        &seed.to_string(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn normtest_prints_summary() {
    let dir = TempDir::new().unwrap();
    let input = brownian_file(&dir, 3);
    let o = run(&["normtest", "--in", s(&input), "--alpha", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let keys: Vec<String> = summary(&o).into_iter().map(|(k, _)| k).collect();
    assert_eq!(keys, ["w", "p", "reject", "n", "alpha"]);
    assert_eq!(value(&o, "n"), "200");
    let w: f64 = value(&o, "w").parse().unwrap();
    assert!(w > 0.0 && w <= 1.0);
}

#[test]
fn smooth_two_rows_keeps_first_value() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "two_rows.csv");
    fs::write(&input, "0,1.5\n1,2.5\n").unwrap();
    let out = p(&dir, "m.csv");
    let o = run(&["smooth", "--in", s(&input), "--out", s(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = sensordiff::load_series(&out, true).unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m.rows()[0][0], 1.5);
    assert_eq!(m.rows()[1][0], 2.0);
    assert_eq!(value(&o, "first"), "1.5");
}

#[test]
fn unknown_flag_and_subcommand_exit_one() {
    let o = run(&["normtest", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());

    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["smooth", "--in", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["normtest", "--in", s(&p(&dir, "absent.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = TempDir::new().unwrap();
    let input = brownian_file(&dir, 1);
    let out = dir.path().join("no_such_dir").join("m.csv");
    assert_eq!(
        run(&["smooth", "--in", s(&input), "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn validation_failures_write_nothing() {
    let dir = TempDir::new().unwrap();
    let input = brownian_file(&dir, 2);
    let bad = p(&dir, "bad.csv");
    fs::write(&bad, "0,5\n0,6\n").unwrap();
    let out = p(&dir, "out.file");
    let extra = p(&dir, "paths.csv");

    let cases: Vec<Vec<&str>> = vec![
        vec!["smooth", "--in", s(&bad), "--out", s(&out)],
        vec![
            "smooth",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--feature",
            "3",
        ],
        vec![
            "basis",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--feature",
            "1",
        ],
        vec![
            "train",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--alpha-cool",
            "1.5",
        ],
        vec!["train", "--in", s(&input), "--out", s(&out), "--t0", "0"],
        vec![
            "train",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--layers",
            "0",
        ],
        vec![
            "predict",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--horizon",
            "-1",
        ],
        vec![
            "predict",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--horizon",
            "5",
            "--paths",
            "3",
        ],
        vec![
            "predict",
            "--in",
            s(&input),
            "--out",
            s(&out),
            "--horizon",
            "5",
            "--paths",
            "3",
            "--steps",
            "0",
            "--paths-out",
            s(&extra),
        ],
        vec!["simulate", "--out", s(&out), "--steps", "0"],
        vec!["simulate", "--out", s(&out), "--dt", "-1"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!out.exists(), "{args:?} wrote {}", out.display());
        assert!(!extra.exists(), "{args:?} wrote {}", extra.display());
    }

    let o = run(&["simulate", "--exit-a", "1", "--exit-b", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["normtest", "--in", s(&input), "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classify_rejects_bad_tau_without_writing() {
    let dir = TempDir::new().unwrap();
    let input = two_feature_file(&dir);
    let model = p(&dir, "m.ebm");
    assert!(run(&[
        "train",
        "--in",
        s(&input),
        "--out",
        s(&model),
        "--layers",
        "8"
    ])
    .status
    .success());
    let rules = p(&dir, "r.rules");
    let o = run(&[
        "classify",
        "--in",
        s(&input),
        "--model",
        s(&model),
        "--out",
        s(&rules),
        "--tau",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!rules.exists());
    let o = run(&[
        "classify",
        "--in",
        s(&input),
        "--model",
        s(&model),
        "--out",
        s(&rules),
        "--k",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!rules.exists());
}

#[test]
fn full_pipeline() {
    let dir = TempDir::new().unwrap();
    let input = two_feature_file(&dir);

    let basis = p(&dir, "basis.csv");
    let o = run(&[
        "basis",
        "--in",
        s(&input),
        "--out",
        s(&basis),
        "--feature",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&basis).unwrap();
    assert!(text.starts_with("k,zt,zv,c,y,fourier,parity\n"));
    assert_eq!(text.lines().count() - 1, 119);

    let model = p(&dir, "m.ebm");
    let o = run(&[
        "train",
        "--in",
        s(&input),
        "--out",
        s(&model),
        "--layers",
        "16",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&o, "d"), "2");
    assert_eq!(value(&o, "rows"), "120");
    assert!(fs::read_to_string(&model)
        .unwrap()
        .starts_with("EBM,v1,16,2,4,"));

    let rules = p(&dir, "r.rules");
    let o = run(&[
        "classify",
        "--in",
        s(&input),
        "--model",
        s(&model),
        "--out",
        s(&rules),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&o, "k"), "4");
    let leaves: usize = value(&o, "leaves").parse().unwrap();
    assert!((1..=4).contains(&leaves));
    let parsed = sensordiff::read_rules(&rules).unwrap();
    assert_eq!(parsed.len(), leaves);
    assert_eq!(parsed.iter().map(|r| r.support).sum::<usize>(), 120);

    let o = run(&["rules-check", "--rules", s(&rules)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), format!("rules={leaves} s=2"));

    let o = run(&[
        "rules-check",
        "--rules",
        s(&rules),
        "--model",
        s(&model),
        "--point",
        "-1.5,0.25",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let class: usize = value(&o, "class").parse().unwrap();
    assert!(class < leaves);

    let o = run(&[
        "rules-check",
        "--rules",
        s(&rules),
        "--model",
        s(&model),
        "--point",
        "1,2,3",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let fc = p(&dir, "fc.csv");
    let paths = p(&dir, "paths.csv");
    let o = run(&[
        "predict",
        "--in",
        s(&input),
        "--out",
        s(&fc),
        "--horizon",
        "10",
        "--paths",
        "5",
        "--steps",
        "4",
        "--seed",
        "9",
        "--paths-out",
        s(&paths),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fc_text = fs::read_to_string(&fc).unwrap();
    assert!(fc_text.starts_with("horizon,mean,variance,sigma2\n"));
    let sigma2: f64 = value(&o, "sigma2").parse().unwrap();
    let variance: f64 = value(&o, "variance").parse().unwrap();
    assert!((variance - 10.0 * sigma2).abs() <= 1e-12 * variance);
    let path_text = fs::read_to_string(&paths).unwrap();
    assert!(path_text.starts_with("path,step,t,value\n"));
    assert_eq!(path_text.lines().count() - 1, 20);
}

#[test]
fn identical_invocations_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let input = two_feature_file(&dir);
    let mut outputs = Vec::new();
    for round in 0..2 {
        let sim = p(&dir, &format!("sim{round}.csv"));
        let model = p(&dir, &format!("m{round}.ebm"));
        let rules = p(&dir, &format!("r{round}.rules"));
        let fc = p(&dir, &format!("fc{round}.csv"));
        let paths = p(&dir, &format!("paths{round}.csv"));
        assert!(run(&["simulate", "--out", s(&sim), "--seed", "77"])
            .status
            .success());
        assert!(run(&[
            "train",
            "--in",
            s(&input),
            "--out",
            s(&model),
            "--seed",
            "5"
        ])
        .status
        .success());
        assert!(run(&[
            "classify",
            "--in",
            s(&input),
            "--model",
            s(&model),
            "--out",
            s(&rules)
        ])
        .status
        .success());
        assert!(run(&[
            "predict",
            "--in",
            s(&input),
            "--out",
            s(&fc),
            "--horizon",
            "3",
            "--paths",
            "4",
            "--seed",
            "1",
            "--paths-out",
            s(&paths),
        ])
        .status
        .success());
        outputs.push(
            [sim, model, rules, fc, paths]
                .iter()
                .map(|f| fs::read(f).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_check_summary() {
    let o = run(&[
        "simulate", "--exit-a", "-1", "--exit-b", "1", "--dt", "0.001", "--trials", "2000",
        "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&o, "sigma2"), "1");
    assert_eq!(value(&o, "p_b"), "0.5");
    let mean: f64 = value(&o, "mean_exit").parse().unwrap();
    assert!((mean - 1.0).abs() < 0.15, "{mean}");
}

#[test]
fn headerless_input_is_accepted() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "plain.csv");
    fs::write(&input, "0,1\n1,2\n2,3\n").unwrap();
    let out = p(&dir, "m.csv");
    assert!(run(&["smooth", "--in", s(&input), "--out", s(&out)])
        .status
        .success());
    let m = sensordiff::load_series(&out, true).unwrap();
    assert_eq!(m.feature_names(), ["v1"]);
    assert_eq!(m.len(), 3);
}

#[test]
fn in_process_run_matches_exit_codes() {
    use sensordiff::cli::run as run_cli;
    assert_eq!(run_cli(["sensordiff", "nope"]), 1);
    assert_eq!(
        run_cli(["sensordiff", "normtest", "--in", "/definitely/not/here.csv"]),
        2
    );
}
