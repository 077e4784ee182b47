use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_BASKET: &str = r#"
[model]
kind = "black_scholes"
r = 0.05
sigma = 0.3
S0 = 50.0
d = 2

[payoff]
kind = "basket"
T = 1.0
K = 50.0

[quantization]
N = 30
samples = 20000
sweeps = 10

[mc]
n = 20000
M = 1

[output]
cache_dir = "cache"
"#;

fn qis(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qis")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_theta_prices_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL_BASKET}\n[theta]\nvalues = [0.0, 0.0]\n");
    fs::write(dir.path().join("zero.toml"), cfg).unwrap();
    let o = qis(dir.path(), &["price", "--config", "zero.toml", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "config,estimator,price,variance,stderr,n,seed,theta");
    let crude: Vec<&str> = lines[1].split(',').collect();
    let qis_row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(crude[0], "zero");
    assert_eq!((crude[1], qis_row[1]), ("crude", "qis"));
    assert_eq!(crude[2..7], qis_row[2..7]);
    assert_eq!(crude[6], "4");
    assert!(stderr(&o).contains("variance ratio = 1.0000"));
}

#[test]
fn cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.toml"), SMALL_BASKET).unwrap();
    let built = qis(dir.path(), &["build-grid", "--config", "b.toml"]);
    assert!(built.status.success(), "{}", stderr(&built));
    let line = stdout(&built);
    let (path, digest) = line.trim().split_once(' ').unwrap();
    let stored = fs::read_to_string(dir.path().join(format!("{path}.sha256"))).unwrap();
    assert_eq!(stored.trim(), digest);

    let first = qis(dir.path(), &["price", "--config", "b.toml"]);
    let second = qis(dir.path(), &["price", "--config", "b.toml"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(!stderr(&first).contains("building"), "cache was not reused: {}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&second));

    // a tampered file is detected and rebuilt to the same grid
    let full = dir.path().join(path);
    let text = fs::read_to_string(&full).unwrap();
    fs::write(&full, text.replacen('e', "E", 1)).unwrap();
    let third = qis(dir.path(), &["price", "--config", "b.toml"]);
    assert!(stderr(&third).contains("checksum mismatch"), "{}", stderr(&third));
    assert_eq!(stdout(&first), stdout(&third));
    assert_eq!(fs::read_to_string(&full).unwrap(), text);
}

#[test]
fn optimize_constant_payoff_gives_zero_theta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_BASKET.replace("kind = \"basket\"", "kind = \"constant\"\nvalue = 1.0").replace("K = 50.0\n", "");
    fs::write(dir.path().join("c.toml"), cfg).unwrap();
    let o = qis(dir.path(), &["optimize", "--config", "c.toml", "--out", "theta.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("theta.csv")).unwrap();
    let values: Vec<f64> =
        text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 2);
    // the grid mean is only approximately zero
    assert!(values.iter().all(|v| v.abs() < 0.05), "{values:?}");
    assert!(stderr(&o).contains("converged = true"));
}

#[test]
fn path_optimize_exports_theta_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[model]
kind = "black_scholes"
r = 0.04
sigma = 0.5
S0 = 100.0

[payoff]
kind = "asian"
T = 1.0
K = 115.0
p = 20

[quantization]
decomposition = [6, 3, 2]

[basis]
kind = "haar"
m = 4

[mc]
n = 5000
M = 20
"#;
    fs::write(dir.path().join("a.toml"), cfg).unwrap();
    let o = qis(dir.path(), &["optimize", "--config", "a.toml", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# basis: haar m=4"));
    assert_eq!(text.lines().nth(1), Some("t,theta(t)"));
    assert_eq!(text.lines().count(), 2 + 21);
    let q = qis(dir.path(), &["build-quantizer", "--config", "a.toml"]);
    assert!(q.status.success(), "{}", stderr(&q));
    assert!(stdout(&q).contains("quantizer-brownian-T1-6x3x2.txt"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = qis(dir.path(), &["table", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("basket, spark, asian-bs"));

    fs::write(dir.path().join("bad.toml"), SMALL_BASKET.replace("K = 50.0", "K = 50.0\nstrike = 3")).unwrap();
    let o = qis(dir.path(), &["price", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));

    let o = qis(dir.path(), &["price", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qis(dir.path(), &["price"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spark_table_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let o = qis(dir.path(), &["table", "spark", "--seed", "2", "--out", "spark.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("spark.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "C,price_mc,variance_mc,price_qis,variance_qis");
    assert_eq!(lines.len(), 7);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[2] / v[4] > 6.0, "{l}");
    }
}
