use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kmjack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmjack")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> Option<String> {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .map(str::to_string)
}

fn dataset(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn estimate_uncensored() {
    let dir = tempfile::tempdir().unwrap();
    let f = dataset(dir.path(), "a.csv", "time,status\n1,1\n2,1\n3,1\n");
    let out = kmjack(&["estimate", &f]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "s_hat").as_deref(), Some("2"));
    assert_eq!(field(&text, "bias").as_deref(), Some("0"));
    assert_eq!(field(&text, "case").as_deref(), Some("(1, 1)"));
}

#[test]
fn estimate_zero_one_case() {
    let dir = tempfile::tempdir().unwrap();
    let f = dataset(dir.path(), "a.csv", "time,status\n4,1\n3,0\n2,1\n1,1\n");
    let text = stdout(&kmjack(&["estimate", &f]));
    assert_eq!(field(&text, "bias").as_deref(), Some("-1"));
    assert_eq!(field(&text, "s_tilde").as_deref(), Some("3.75"));
}

#[test]
fn estimate_censored_tail_without_imputation() {
    let dir = tempfile::tempdir().unwrap();
    let f = dataset(dir.path(), "a.csv", "time,status\n1,1\n2,1\n3,0\n4,0\n");
    let out = kmjack(&["estimate", &f]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(field(&text, "case").as_deref(), Some("(0, 0)"));
    assert!(field(&text, "modified_s_hat").is_none());

    let text = stdout(&kmjack(&["estimate", &f, "--impute", "nu", "--gap-fraction", "1"]));
    assert_eq!(field(&text, "imputed_time").as_deref(), Some("5"));
    assert_eq!(field(&text, "modified_bias").as_deref(), Some("-1.25"));
    assert_eq!(field(&text, "modified_s_hat").as_deref(), Some("4.5"));
    assert_eq!(field(&text, "modified_s_tilde").as_deref(), Some("5.75"));
}

#[test]
fn usage_and_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dataset(dir.path(), "bad.csv", "time,status\n1,1\n2,x\n");
    let out = kmjack(&["estimate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));

    let single = dataset(dir.path(), "one.csv", "time,status\n1,1\n");
    assert_eq!(kmjack(&["estimate", &single]).status.code(), Some(2));
    assert_eq!(kmjack(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(kmjack(&["kg-study", "--imputation", "resampled-mean"]).status.code(), Some(2));
}

#[test]
fn calibration_prints_one_number() {
    let out = kmjack(&["calibrate", "--lifetime", "exp:0.2", "--percent", "50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.trim().parse::<f64>().unwrap(), 0.2);
    assert_eq!(text.lines().count(), 1);

    let out = kmjack(&["calibrate", "--lifetime", "gamma:4,1", "--percent", "30"]);
    let a: f64 = stdout(&out).trim().parse().unwrap();
    assert!(a > 0.0);
}

#[test]
fn calibration_failure_exits_3() {
    let out = kmjack(&["calibrate", "--lifetime", "aft:-60", "--percent", "50"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn impute_writes_completed_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let f = dataset(dir.path(), "a.csv", "time,status\n1,1\n2,1\n3,1\n10,0\n");
    let out_path = dir.path().join("completed.csv");
    let out = kmjack(&[
        "impute",
        &f,
        "--method",
        "predicted-difference",
        "--gap-fraction",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "11");
    let written = fs::read_to_string(out_path).unwrap();
    assert_eq!(written.lines().last(), Some("11,1"));
}

fn study_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(study_files(&path));
        } else {
            files.push((path.strip_prefix(dir).unwrap().display().to_string(), fs::read(&path).unwrap()));
        }
    }
    files.sort();
    files
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = kmjack(&[
            "--threads",
            threads,
            "dist-study",
            "--n",
            "20,40",
            "--p",
            "0,30,70",
            "--replications",
            "200",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        study_files(&out)
    };
    let one = run("1", "one");
    let many = run("4", "many");
    assert_eq!(one.len(), 4 * 5);
    assert_eq!(one, many);
}

#[test]
fn dist_study_curves_have_one_series_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let status = kmjack(&[
        "dist-study",
        "--distributions",
        "weibull",
        "--n",
        "30",
        "--p",
        "10,50,90",
        "--replications",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let curves = fs::read_to_string(out.join("weibull").join("curves.csv")).unwrap();
    let mut series: Vec<&str> = curves.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series, ["S_hat", "S_tilde", "S_hat_star", "S_tilde_star"]);
    assert_eq!(curves.lines().count(), 1 + 4 * 3);
}

#[test]
fn config_file_drives_a_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kg.toml");
    fs::write(&cfg, "study = \"kg\"\nn_list = [25]\np_list = [40]\nreplications = 50\nseed = 3\n").unwrap();
    let out = dir.path().join("out");
    let status = kmjack(&["kg-study", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let bias = fs::read_to_string(out.join("bias.csv")).unwrap();
    assert_eq!(bias.lines().next(), Some("p_percent,n,estimator,value,replications,valid_count"));
    assert_eq!(bias.lines().count(), 5);
    let used = fs::read_to_string(out.join("config.used.toml")).unwrap();
    assert!(used.contains("seed = 3"));

    // a kg config handed to another study is a configuration error
    let wrong = kmjack(&["aft-study", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn tuning_flags_apply_to_the_default_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aft");
    let status = kmjack(&[
        "aft-study",
        "--n",
        "20",
        "--p",
        "30",
        "--replications",
        "5",
        "--resamples",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let used = fs::read_to_string(out.join("config.used.toml")).unwrap();
    assert!(used.contains("method = \"resampled-mean\""));
    assert!(used.contains("resamples = 7"));
}
