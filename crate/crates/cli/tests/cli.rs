use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn signlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signlab"))
        .current_dir(dir)
        .env_remove("SIGNLAB_CACHE_DIR")
        .args(args)
        .output()
        .expect("spawn signlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn coeffs_writes_csv_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &["coeffs", "--form", "delta", "--limit", "5", "--out", "o"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("o/coeffs_delta_5.csv")).unwrap();
    assert_eq!(csv, "n,a_n\n1,1\n2,-24\n3,252\n4,-1472\n5,4830\n");
    assert!(dir.path().join("o/cache/delta_5.tsv").exists());

    let again = signlab(
        dir.path(),
        &["coeffs", "--form", "delta", "--limit", "5", "--out", "o"],
    );
    assert_eq!(code(&again), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("o/coeffs_delta_5.csv")).unwrap(),
        csv
    );
}

#[test]
fn json_format_keeps_exact_integers() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &[
            "coeffs", "--form", "e26", "--limit", "50", "--format", "json",
        ],
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("coeffs_e26_50.json")).unwrap())
            .unwrap();
    assert_eq!(v["limit"], 50);
    let a50 = v["a_n"][49].as_str().unwrap();
    assert!(a50.trim_start_matches('-').len() > 17, "{a50}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["coeffs", "--form", "unknown"][..],
        &["signchanges", "--windows", "0"],
        &["signchanges", "--power", "7"],
        &["signchanges", "--window-mode", "cubic"],
        &["gmf", "--form", "delta", "--limit", "10"],
        &["verify", "--suite", "nothing"],
        &["bogus"],
    ] {
        let o = signlab(dir.path(), args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn capacity_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &["signchanges", "--x0", "1e7", "--windows", "2"],
    );
    assert_eq!(code(&o), 3);
    let o = signlab(dir.path(), &["coeffs", "--limit", "100000000"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn signchange_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &[
            "signchanges",
            "--form",
            "delta",
            "--power",
            "2",
            "--x0",
            "16",
            "--windows",
            "8",
            "--svg",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("signchanges_delta_j2.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "x,h,count,zeros_seen,first_pair,last_pair");
    assert_eq!(rows.len(), 9);
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert!(fields[2].parse::<u64>().unwrap() >= 1, "{row}");
    }
    let svg = fs::read_to_string(dir.path().join("signchanges_delta_j2.svg")).unwrap();
    assert!(svg.contains("<polyline") && svg.contains("reference slope 0.1818"));

    let o = signlab(
        dir.path(),
        &[
            "signchanges",
            "--form",
            "n11",
            "--series",
            "cprime",
            "--x0",
            "8",
            "--windows",
            "10",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("signchanges_n11_cprime.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    // (8,16]: c′(11) = 0 and c′(13) < 0
    assert_eq!(csv.lines().nth(1).unwrap(), "8,8,0,1,,");
}

#[test]
fn window_modes_change_h() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &[
            "signchanges",
            "--x0",
            "1024",
            "--windows",
            "2",
            "--window-mode",
            "power:0.5",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("signchanges_delta_j2.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("1024,32,"));
}

#[test]
fn primesums_gmf_and_fit_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(
        dir.path(),
        &[
            "primesums",
            "--form",
            "n11",
            "--x0",
            "1000",
            "--windows",
            "3",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("primesums_n11.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "x,S1,S2,C2,S1_over_x,S2_over_x,C2_logx_over_x"
    );
    assert_eq!(csv.lines().count(), 4);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').count() == 7 && !l.contains(",,")));

    let o = signlab(
        dir.path(),
        &[
            "primesums",
            "--form",
            "delta",
            "--x0",
            "100",
            "--windows",
            "2",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("primesums_delta.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(','));

    let o = signlab(dir.path(), &["gmf", "--form", "n11", "--limit", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("exponents_n11_4.csv")).unwrap(),
        "n,m_n,c_n_float\n1,-1,-1\n2,3,1.5\n3,2,0.666666666667\n4,-4,-1\n"
    );

    let o = signlab(
        dir.path(),
        &["fit", "--form", "delta", "--power", "2", "--windows", "8"],
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit_delta_j2.json")).unwrap())
            .unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 8);
    assert!(v["slope"].as_f64().unwrap() > 2.0 / 11.0);
    assert!((v["reference_exponent"].as_f64().unwrap() - 2.0 / 11.0).abs() < 1e-15);
    assert!(v["series"].is_string() && v["residual"].is_number());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# experiment\nform=n11\nlimit=6\nout=cfg_out\n",
    )
    .unwrap();
    let o = signlab(
        dir.path(),
        &["coeffs", "--config", "run.cfg", "--limit", "3"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(dir.path().join("cfg_out/coeffs_n11_3.csv")).unwrap(),
        "n,a_n\n1,1\n2,-2\n3,-1\n"
    );
    fs::write(dir.path().join("bad.cfg"), "colour=blue\n").unwrap();
    assert_eq!(
        code(&signlab(dir.path(), &["coeffs", "--config", "bad.cfg"])),
        2
    );
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_signlab"))
        .current_dir(dir.path())
        .env("SIGNLAB_CACHE_DIR", dir.path().join("envcache"))
        .args(["coeffs", "--form", "n14", "--limit", "20"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("envcache/n14_20.tsv").exists());
}

#[test]
fn verify_passes_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let o = signlab(dir.path(), &["verify", "--limit", "2000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(v["fail_count"], 0);
    let suite = v["suite"].as_array().unwrap();
    assert_eq!(v["pass_count"].as_u64().unwrap() as usize, suite.len());
    for prefix in ["numtheory.", "qseries.", "eigenforms.", "gmf.", "signlab."] {
        assert!(
            suite
                .iter()
                .any(|c| c["name"].as_str().unwrap().starts_with(prefix)),
            "{prefix}"
        );
    }
    assert!(suite
        .iter()
        .all(|c| c["detail"].is_string() && c["pass"].is_boolean()));

    let o = signlab(dir.path(), &["verify", "--suite", "gmf", "--limit", "2000"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let suite = v["suite"].as_array().unwrap();
    assert!(!suite.is_empty());
    assert!(suite
        .iter()
        .all(|c| c["name"].as_str().unwrap().starts_with("gmf.")));
}

/// Rewrites `a(n)` in a cache file.
fn corrupt(path: &Path, n: u64, value: &str) {
    let text = fs::read_to_string(path).unwrap();
    let prefix = format!("{n}\t");
    let out: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with(&prefix) {
                format!("{n}\t{value}")
            } else {
                l.to_string()
            }
        })
        .collect();
    fs::write(path, out.join("\n") + "\n").unwrap();
}

#[test]
fn verify_reports_corrupted_cache() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&signlab(
            dir.path(),
            &["verify", "--limit", "2000", "--form", "n11"]
        )),
        0
    );
    corrupt(&dir.path().join("cache/n11_2000.tsv"), 6, "0");
    let o = signlab(dir.path(), &["verify", "--limit", "2000", "--form", "n11"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let failed: Vec<&str> = v["suite"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(
        failed.contains(&"eigenforms.n11.multiplicativity"),
        "{failed:?}"
    );
    assert!(
        failed.contains(&"eigenforms.n11.matches_fresh_expansion"),
        "{failed:?}"
    );

    fs::write(
        dir.path().join("cache/n11_2000.tsv"),
        "# form=n11 weight=2 level=11 limit=2000\n1\t1\n",
    )
    .unwrap();
    let o = signlab(
        dir.path(),
        &[
            "verify",
            "--limit",
            "2000",
            "--form",
            "n11",
            "--suite",
            "eigenforms",
        ],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn gmf_reports_roundtrip_on_clean_data() {
    let dir = tempfile::tempdir().unwrap();
    for form in ["n11", "n14", "n15"] {
        let o = signlab(dir.path(), &["gmf", "--form", form, "--limit", "3000"]);
        assert_eq!(code(&o), 0, "{form}");
    }
}
