use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ionnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionnm"))
        .args(args)
        .env_remove("IONNM_CONFIG")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn repo(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p)
}

#[test]
fn default_curve_has_full_grid_and_starts_distinguishable() {
    let o = ionnm(&[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# n-ions = 100\n") && text.contains("# dt = 0.01\n"));
    assert!(text.lines().any(|l| l == "t,D_opt,A,B,V"));
    let r = rows(&text);
    assert_eq!(r.len(), 20001);
    assert_eq!(r[0], ["0", "1", "0", "0", "1"]);
    assert_eq!(r[20000][0], "200");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let run = |name: &str| {
            let out = dir.path().join(format!("{name}-{format}"));
            let args = ["--delta-list", "0.1,-0.02", "--beta-omega-max", "0.7,inf", "--t-max", "30", "--format", format];
            let mut v = args.to_vec();
            let out_s = out.to_str().unwrap().to_string();
            v.extend(["--out", &out_s]);
            assert_eq!(code(&ionnm(&v)), 0);
            let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>()
        };
        let (a, b) = (run("a"), run("b"));
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
    }
}

#[test]
fn json_curve_is_self_describing() {
    let o = ionnm(&["--t-max", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["delta"], "0.1");
    assert_eq!(v["columns"][1], "D_opt");
    assert_eq!(v["rows"].as_array().unwrap().len(), 101);
    assert_eq!(v["rows"][0][1], 1.0);
}

#[test]
fn sweep_rows_sorted_and_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str| {
        let out = dir.path().join(format!("s{jobs}.csv"));
        let o = ionnm(&[
            "--mode", "sweep", "--delta-list", "0.1,-0.01,0.01", "--beta-omega-max", "4.3,0.3,1.2,0.7",
            "--t-trunc", "40", "--jobs", jobs, "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        fs::read_to_string(out).unwrap()
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let r = rows(&one);
    assert_eq!(r.len(), 12);
    let keys: Vec<(f64, f64)> = r.iter().map(|x| (x[1].parse().unwrap(), x[0].parse().unwrap())).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "{keys:?}");
    assert!(r.iter().all(|x| x[3] == "40"));
}

#[test]
fn one_delta_four_temperatures_is_four_rows() {
    let o = ionnm(&["--mode", "sweep", "--delta-list", "0.1", "--beta-omega-max", "0.3,0.7,1.2,4.3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(rows(&String::from_utf8(o.stdout).unwrap()).len(), 4);
}

#[test]
fn partial_sweep_failure_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = ionnm(&[
        "--mode", "sweep", "--delta-list", "0.1,1e-7", "--beta-omega-max", "0.3", "--t-trunc", "10",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(rows(&fs::read_to_string(&out).unwrap()).len(), 1);
    let errors = fs::read_to_string(dir.path().join("sweep.errors.csv")).unwrap();
    let e = rows(&errors);
    assert_eq!(e.len(), 1);
    assert_eq!(e[0][0], "1e-7");
}

#[test]
fn zigzag_spectrum_has_one_translation_mode() {
    let o = ionnm(&["--mode", "spectrum", "--delta", "-0.01"]);
    assert_eq!(code(&o), 0);
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(r.len(), 200);
    assert_eq!(r.iter().filter(|x| x[2] == "0").count(), 1);
}

#[test]
fn linear_spectrum_band_edges() {
    let o = ionnm(&["--mode", "spectrum", "--delta", "0.1"]);
    let r = rows(&String::from_utf8(o.stdout).unwrap());
    let omega = |branch: &str, k: &str| -> f64 {
        r.iter().find(|x| x[0] == branch && x[1] == k).map(|x| x[2].parse().unwrap()).unwrap()
    };
    let nu_c = ionnm_core::lattice::critical_frequency(100).unwrap();
    assert!((omega("transverse_cos", "0") - 1.1 * nu_c).abs() < 1e-10);
    assert!((omega("transverse_cos", "50") - nu_c * (1.1f64 * 1.1 - 1.0).sqrt()).abs() < 1e-10);
}

#[test]
fn config_file_from_environment_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "mode = spectrum\nn-ions = 8\ndelta = 0.5\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ionnm"))
        .args(["--n-ions", "12"])
        .env("IONNM_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# mode = spectrum\n# n-ions = 12\n# delta-list = 0.5\n"));
    assert_eq!(rows(&text).len(), 24);
}

#[test]
fn shipped_recipes_resolve() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, extra) in [("fig1", "--t-max=2"), ("fig2", "--t-max=2"), ("fig3", "--t-trunc=2")] {
        let out = dir.path().join(cfg);
        let o = ionnm(&["--config", repo(&format!("configs/{cfg}.cfg")).to_str().unwrap(), extra, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read_dir(dir.path().join("fig1")).unwrap().count(), 4);
    assert!(dir.path().join("fig2/curve_delta_0.00001_bw_4.3.csv").exists());
    assert_eq!(rows(&fs::read_to_string(dir.path().join("fig3")).unwrap()).len(), 72);
}

#[test]
fn bad_parameters_exit_two() {
    for args in [
        &["--n-ions", "7"][..],
        &["--delta", "0"],
        &["--mode", "curve", "--beta-omega-max", "0.3,0.7"],
        &["--no-such-flag"],
        &["--config", "/nonexistent/run.cfg"],
        &["--mode", "validate", "--oracle-modes", "5"],
    ] {
        assert_eq!(code(&ionnm(args)), 2, "{args:?}");
    }
}

#[test]
fn validation_passes_on_small_instance() {
    let o = ionnm(&["--mode", "validate", "--oracle-modes", "2", "--beta-omega-max", "4.3"]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.lines().all(|l| l.starts_with("[PASS]")));
    assert!(text.contains("literal xi rejected"));
}

#[test]
fn starved_cutoff_fails_validation() {
    let o = ionnm(&["--mode", "validate", "--oracle-modes", "1", "--n-max", "2", "--beta-omega-max", "inf"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("[FAIL] oracle T=0"));
}
