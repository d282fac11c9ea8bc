use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn afc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn read_grid(p: &Path) -> Vec<(f64, f64, f64)> {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,density"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn sample_output_feeds_fit_unchanged() {
    let dir = TempDir::new().unwrap();
    let draws = path(&dir, "draws.csv");
    let o = afc(&["sample", "--n", "400", "--seed", "3", "--out", &draws]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("acceptance rate"));
    let text = fs::read_to_string(&draws).unwrap();
    assert!(text.starts_with("x,y\n"));
    assert_eq!(text.lines().count(), 401);

    let report = path(&dir, "fit.csv");
    let o = afc(&[
        "fit",
        &draws,
        "--family",
        "all",
        "--direction",
        "pos",
        "--out",
        &report,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    for family in ["logistic", "laplace", "cauchy", "gumbel"] {
        assert!(table.contains(family), "{table}");
    }
    assert_eq!(table.matches("**").count(), 2, "{table}");
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("family,method,alpha"));
    assert_eq!(
        csv.lines().filter(|l| l.contains(",true,ok")).count(),
        1,
        "{csv}"
    );
    // fixed order: logistic, laplace, cauchy, gumbel; no MME for cauchy
    let order: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        order,
        ["logistic", "logistic", "laplace", "laplace", "cauchy", "gumbel", "gumbel"]
    );
}

#[test]
fn sample_is_byte_identical_per_seed() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str, format: &str| {
        let p = path(&dir, name);
        let o = afc(&[
            "sample", "--n", "300", "--seed", seed, "--family", "cauchy", "--format", format,
            "--out", &p,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv", "11", "csv"), run("b.csv", "11", "csv"));
    assert_ne!(run("a.csv", "11", "csv"), run("c.csv", "12", "csv"));
    let json = run("a.json", "11", "json");
    assert_eq!(json, run("b.json", "11", "json"));
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 300);
}

#[test]
fn independent_sampling_accepts_every_proposal() {
    let o = afc(&["sample", "--tau", "0", "--n", "100", "--seed", "7"]);
    assert!(o.status.success());
    assert!(
        stderr(&o).contains("acceptance rate: 1\n"),
        "{}",
        stderr(&o)
    );
    assert_eq!(stdout(&o).lines().count(), 101);
}

#[test]
fn tau_outside_unit_interval_is_a_parse_error() {
    let o = afc(&["sample", "--tau", "1.5"]);
    assert!(!o.status.success());
    assert!(
        stderr(&o).contains("tau must lie in [0, 1]"),
        "{}",
        stderr(&o)
    );
}

fn weibull_density(x: f64, alpha: f64, lambda: f64) -> f64 {
    lambda * alpha * (alpha * x).powf(lambda - 1.0) * (-(alpha * x).powf(lambda)).exp()
}

fn logistic_density(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

#[test]
fn independent_grid_is_the_product_of_marginals() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "grid.csv");
    let o = afc(&[
        "grid",
        "--tau",
        "0",
        "--x-range",
        "0.1:2.5",
        "--y-range",
        "-12:4",
        "--nx",
        "7",
        "--ny",
        "9",
        "--out",
        &p,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cells = read_grid(Path::new(&p));
    assert_eq!(cells.len(), 63);
    // outer loop over x
    assert!(cells[..9].iter().all(|c| c.0 == 0.1));
    for &i in &[0usize, 10, 31, 47, 62] {
        let (x, y, d) = cells[i];
        let expected = weibull_density(x, 1.0, 3.0) * logistic_density((y + 4.0) / 2.0) / 2.0;
        assert!((d - expected).abs() <= 1e-12, "cell {i}: {d} vs {expected}");
    }
}

#[test]
fn grid_is_non_negative_and_integrates_to_one() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "grid.csv");
    let (nx, ny) = (240usize, 400usize);
    let o = afc(&[
        "grid",
        "--x-range",
        "0.001:3.2",
        "--y-range",
        "-40:40",
        "--nx",
        &nx.to_string(),
        "--ny",
        &ny.to_string(),
        "--out",
        &p,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cells = read_grid(Path::new(&p));
    assert!(cells.iter().all(|c| c.2 >= 0.0));
    let hx = (3.2 - 0.001) / (nx - 1) as f64;
    let hy = 80.0 / (ny - 1) as f64;
    let weight = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let total: f64 = cells
        .iter()
        .enumerate()
        .map(|(k, c)| weight(k / ny, nx) * weight(k % ny, ny) * c.2)
        .sum::<f64>()
        * hx
        * hy;
    assert!((total - 1.0).abs() <= 2e-2, "integral {total}");
}

#[test]
fn grid_rejects_non_positive_x() {
    let o = afc(&["grid", "--x-range", "0:2"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("(0, inf)"), "{}", stderr(&o));
    let o = afc(&["grid", "--nx", "1"]);
    assert!(!o.status.success());
}

#[test]
fn fit_reports_bad_input() {
    let dir = TempDir::new().unwrap();
    let empty = path(&dir, "empty.csv");
    fs::write(&empty, "").unwrap();
    let o = afc(&["fit", &empty]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));

    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "x,y\n1,2\n-0.5,1\n").unwrap();
    let o = afc(&["fit", &bad]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let short = path(&dir, "short.csv");
    fs::write(&short, "x,y\n1,2\n2,3\n3,1\n").unwrap();
    let o = afc(&["fit", &short]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 10"), "{}", stderr(&o));

    let o = afc(&["fit", &path(&dir, "missing.csv")]);
    assert!(!o.status.success());
}

#[test]
fn fit_drops_rows_only_on_request() {
    let dir = TempDir::new().unwrap();
    let draws = path(&dir, "d.csv");
    assert!(afc(&["sample", "--n", "60", "--out", &draws])
        .status
        .success());
    let mut text = fs::read_to_string(&draws).unwrap();
    text.push_str("NA,1.0\n");
    fs::write(&draws, text).unwrap();
    assert!(!afc(&["fit", &draws, "--family", "logistic"])
        .status
        .success());
    let o = afc(&["fit", &draws, "--family", "logistic", "--drop-bad-rows"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("dropped 1"));
}

#[test]
fn negative_dependence_skips_gumbel() {
    let dir = TempDir::new().unwrap();
    let draws = path(&dir, "neg.csv");
    let o = afc(&[
        "sample",
        "--family",
        "laplace",
        "--direction",
        "neg",
        "--lambda",
        "1",
        "--tau",
        "1",
        "--n",
        "500",
        "--seed",
        "5",
        "--out",
        &draws,
    ]);
    assert!(o.status.success());
    let o = afc(&["fit", &draws, "--family", "all", "--direction", "auto"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("direction resolved to neg"));
    assert!(
        stdout(&o).contains("skipped: negative correlation"),
        "{}",
        stdout(&o)
    );

    let o = afc(&["fit", &draws, "--family", "gumbel", "--direction", "neg"]);
    assert!(!o.status.success());
    assert!(
        stderr(&o).contains("cannot accommodate negative correlations"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn simstudy_design_errors() {
    let o = afc(&["simstudy", "--replicates", "1", "--sizes", "50"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 2"), "{}", stderr(&o));
    let o = afc(&[
        "simstudy",
        "--family",
        "cauchy",
        "--methods",
        "mme",
        "--sizes",
        "50",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no moment estimator"), "{}", stderr(&o));
}

#[test]
fn simstudy_files_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, format: &str| {
        let p = path(&dir, name);
        let o = afc(&[
            "simstudy",
            "--sizes",
            "40,80",
            "--replicates",
            "4",
            "--seed",
            "8",
            "--format",
            format,
            "--out",
            &p,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("n = 40"));
        fs::read(p).unwrap()
    };
    let a = run("a.csv", "csv");
    assert_eq!(a, run("b.csv", "csv"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("n,method,parameter,mean,se,ci_lo,ci_hi,pearson_mean,n_failed\n"));
    // 2 sizes × 2 methods × 6 parameters
    assert_eq!(text.lines().count(), 1 + 24);
    assert_eq!(run("a.json", "json"), run("b.json", "json"));
}

#[test]
fn check_passes_for_sim_params_and_fails_for_dependent_normal() {
    let o = afc(&["check"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(
        out.contains("PASS hoeffding") && out.contains("PASS shift_identity"),
        "{out}"
    );
    assert!(!out.contains("FAIL"));

    let o = afc(&["check", "--family", "normal", "--tau", "0.4"]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("FAIL constructor"), "{}", stdout(&o));

    let dir = TempDir::new().unwrap();
    let p = path(&dir, "check.json");
    let o = afc(&[
        "check", "--family", "gumbel", "--format", "json", "--out", &p,
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["status"] == "PASS"));
}
