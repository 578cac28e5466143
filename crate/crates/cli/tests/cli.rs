use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn shapsk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapsk"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = shapsk(args, out);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn manifest(path: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (head, rows)
}

#[test]
fn shaping_code_reports_its_bias() {
    let dir = TempDir::new().unwrap();
    let o = ok(&["shaping-code", "--ns", "4", "--ks", "2"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("p0 = 0.8125"));
    let m = manifest(&dir.path().join("shaping-code.manifest"));
    assert_eq!(m["result.p0"], "0.8125");
    let (head, rows) = table(&dir.path().join("shaping-code.csv"));
    assert_eq!(
        head,
        ["message", "codeword", "weight", "config_hash", "seed"]
    );
    assert_eq!(rows.len(), 4);
    let zeros: usize = rows.iter().map(|r| r[1].matches('0').count()).sum();
    assert_eq!(zeros as f64 / 16.0, 0.8125);
    assert!(rows.iter().all(|r| r[3] == m["config_hash"]));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "colour = 3\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["capacity", "--snr", ""],
        vec!["capacity", "--snr", "5:1:0.1"],
        vec!["capacity", "--m", "64"],
        vec!["capacity", "--gamma", "9"],
        vec!["capacity", "--gamma-values", "2.0,3.0"],
        vec!["shaping-code", "--ns", "4"],
        vec!["shaping-code", "--ns", "2", "--ks", "3"],
        vec!["ber", "--system", "qam"],
        vec!["ber", "--max-iters", "0"],
        vec!["gain", "--g", "0"],
        vec!["capacity", "--config", cfg.to_str().unwrap()],
    ];
    for args in cases {
        let out = dir.path().join("out");
        let o = shapsk(&args, &out);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.join("capacity.manifest").exists());
    }
}

#[test]
fn runtime_failures_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let o = shapsk(&["ber", "--alist", "/nonexistent/code.alist"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn capacity_sweep_crosses_three_bits_near_the_reference() {
    let dir = TempDir::new().unwrap();
    ok(
        &["capacity", "--m", "32", "--g", "1", "--snr", "6:12:0.05"],
        dir.path(),
    );
    let (head, rows) = table(&dir.path().join("capacity.csv"));
    assert_eq!(
        head,
        [
            "method",
            "M",
            "g",
            "p0",
            "gamma",
            "esn0_db",
            "ebn0_db",
            "bpcu",
            "config_hash",
            "seed"
        ]
    );
    let shaped: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[2] == "1")
        .map(|r| {
            assert_eq!(r[3], "0.8125");
            (r[6].parse().unwrap(), r[7].parse().unwrap())
        })
        .collect();
    assert_eq!(shaped.len(), 121);
    let i = shaped
        .windows(2)
        .position(|w| w[0].1 < 3.0 && w[1].1 >= 3.0)
        .unwrap();
    let ((e0, r0), (e1, r1)) = (shaped[i], shaped[i + 1]);
    let eb = e0 + (3.0 - r0) / (r1 - r0) * (e1 - e0);
    assert!((eb - 3.829).abs() <= 0.05, "{eb}");
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let args = [
        "ber",
        "--system",
        "shaped-standard",
        "--n",
        "3240",
        "--max-iters",
        "10",
        "--max-frames",
        "4",
        "--snr",
        "4.5,5.5",
        "--seed",
        "11",
    ];
    let (a, b, c) = (
        TempDir::new().unwrap(),
        TempDir::new().unwrap(),
        TempDir::new().unwrap(),
    );
    ok(&args, a.path());
    ok(&args, b.path());
    let read = |d: &TempDir| std::fs::read(d.path().join("ber.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let mut other = args.to_vec();
    other[12] = "12";
    ok(&other, c.path());
    assert_ne!(read(&a), read(&c));
    let (head, rows) = table(&a.path().join("ber.csv"));
    assert_eq!(
        head,
        [
            "snr_db_eb",
            "snr_db_es",
            "frames",
            "bit_errors",
            "ber",
            "fer",
            "mean_iters",
            "config_hash",
            "seed"
        ]
    );
    assert!(rows.iter().all(|r| r[2] == "4" && r[8] == "11"));
}

#[test]
fn config_file_flags_and_rerun_from_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("papr.toml");
    std::fs::write(&cfg, "m = 16\ng = 2\ngamma = 1\nseed = 4\n").unwrap();
    let first = dir.path().join("first");
    ok(
        &["papr", "--config", cfg.to_str().unwrap(), "--g", "1"],
        &first,
    );
    let m = manifest(&first.join("papr.manifest"));
    assert_eq!(m["config.order"], "16");
    assert_eq!(m["config.g"], "1");
    assert_eq!(m["seed"], "4");
    let (_, rows) = table(&first.join("papr.csv"));
    assert!(rows.iter().all(|r| r[1] == "1" && r[3] == "2.6"));
    assert_eq!(rows[0][4], "0.5");

    let again = dir.path().join("again");
    let emitted = first.join(&m["config_file"]);
    ok(&["papr", "--config", emitted.to_str().unwrap()], &again);
    assert_eq!(
        std::fs::read(first.join("papr.csv")).unwrap(),
        std::fs::read(again.join("papr.csv")).unwrap()
    );
}

#[test]
fn joint_search_outputs() {
    let dir = TempDir::new().unwrap();
    let args = ["--m", "16", "--g", "2", "--snr", "4:14:0.5"];
    ok(&[&["gain"], &args[..]].concat(), dir.path());
    ok(&[&["optimal-p0"], &args[..]].concat(), dir.path());
    let (head, rows) = table(&dir.path().join("gain-table.csv"));
    assert_eq!(
        &head[..9],
        ["M", "g", "rate", "ebn0_db", "gain_db", "p0", "ns", "ks", "gamma"]
    );
    assert_eq!(rows.len(), 1);
    let gain: f64 = rows[0][4].parse().unwrap();
    assert!(gain > 0.0 && gain < 1.0, "{gain}");
    let (head, rows) = table(&dir.path().join("optimal-p0.csv"));
    assert_eq!(head[2..5], ["esn0_db", "bpcu", "p0"]);
    assert_eq!(rows.len(), 21);
    let (_, gains) = table(&dir.path().join("gain.csv"));
    assert!(!gains.is_empty());
}

#[test]
fn exit_curves_and_degree_search() {
    let dir = TempDir::new().unwrap();
    ok(
        &[
            "exit",
            "--system",
            "shaped-optimized",
            "--snr",
            "4.73",
            "--samples",
            "20000",
            "--ia-points",
            "6",
        ],
        dir.path(),
    );
    let (head, rows) = table(&dir.path().join("exit.csv"));
    assert_eq!(
        head,
        ["context", "esn0_db", "ia", "ie", "config_hash", "seed"]
    );
    let count = |p: &str| rows.iter().filter(|r| r[0].starts_with(p)).count();
    assert_eq!(
        (count("detector"), count("vnd["), count("cnd[10]")),
        (6, 6, 6)
    );
    assert!(rows
        .iter()
        .filter(|r| r[0] == "cnd[10]")
        .all(|r| r[1].is_empty()));

    ok(
        &[
            "design-ldpc",
            "--system",
            "uniform-bicm-id",
            "--snr",
            "4.5:7.5:0.5",
            "--samples",
            "20000",
            "--ia-points",
            "11",
        ],
        dir.path(),
    );
    let (head, rows) = table(&dir.path().join("design-ldpc.csv"));
    assert_eq!(head[..5], ["dv2", "dv3", "a2", "a3", "threshold_db"]);
    assert!(rows.iter().any(|r| !r[4].is_empty()));
    let m = manifest(&dir.path().join("design-ldpc.manifest"));
    assert!(m["result.best.dv"].starts_with("2,"));
}

#[test]
fn iteration_sweep_uses_fixed_frame_counts() {
    let dir = TempDir::new().unwrap();
    ok(
        &[
            "iters",
            "--system",
            "uniform-bicm-id",
            "--n",
            "3240",
            "--max-iters",
            "15",
            "--max-frames",
            "3",
            "--snr",
            "6",
        ],
        dir.path(),
    );
    let (_, rows) = table(&dir.path().join("iters.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "3");
    let iters: f64 = rows[0][6].parse().unwrap();
    assert!((1.0..=15.0).contains(&iters));
}
