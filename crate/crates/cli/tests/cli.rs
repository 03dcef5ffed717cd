use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

/// 40 users in two taste groups rating 30 items, tab-separated with timestamps.
fn write_ratings(dir: &Path) -> PathBuf {
    let mut text = String::new();
    for u in 0..40u32 {
        for i in 0..30u32 {
            if (u * 7 + i * 3) % 5 == 0 {
                continue;
            }
            let liked = (i < 15) == (u < 20);
            let rating = if liked {
                4 + (u + i) % 2
            } else {
                1 + (u * i) % 2
            };
            text.push_str(&format!("{}\t{}\t{rating}\t0\n", u + 1, i + 1));
        }
    }
    let path = dir.join("ratings.tsv");
    fs::write(&path, text).unwrap();
    path
}

fn fcrec(dir: &Path, args: &[&str]) -> Output {
    let data = write_ratings(dir);
    Command::new(env!("CARGO_BIN_EXE_fcrec"))
        .current_dir(dir)
        .args(args)
        .args(["--dataset", "movielens", "--path"])
        .arg(&data)
        .args([
            "--tau",
            "5",
            "--clusters",
            "2",
            "--pca-components",
            "3",
            "--seed",
            "7",
        ])
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn run_writes_report_and_summary() {
    let dir = TempDir::new().unwrap();
    let out = fcrec(dir.path(), &["run", "--out-dir", "a"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("mean MAE"));
    let csv = fs::read_to_string(dir.path().join("a/run.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "axis,value,seed,mae,rmse,coverage");
    assert!(lines[1].starts_with("run,-,7,"));
    assert!(lines[2].starts_with("run,-,mean,"));
    // Nothing but the finished report is left behind.
    assert_eq!(fs::read_dir(dir.path().join("a")).unwrap().count(), 1);
}

#[test]
fn same_seed_same_bytes() {
    let dir = TempDir::new().unwrap();
    assert!(fcrec(dir.path(), &["run", "--out-dir", "a"])
        .status
        .success());
    assert!(fcrec(dir.path(), &["run", "--out-dir", "b"])
        .status
        .success());
    assert_eq!(
        fs::read(dir.path().join("a/run.csv")).unwrap(),
        fs::read(dir.path().join("b/run.csv")).unwrap()
    );
}

#[test]
fn missing_path_is_named() {
    let out = Command::new(env!("CARGO_BIN_EXE_fcrec"))
        .args(["run", "--dataset", "movielens"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`path`"), "{}", stderr(&out));
}

#[test]
fn config_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let data = write_ratings(dir.path());
    let config = dir.path().join("exp.conf");
    fs::write(
        &config,
        format!(
            "# small run\ndataset = movielens\npath = {}\ntau = 5\nclusters = 9\npca_components = 3\nseeds = 1,2\nout_dir = from-file\n",
            data.display()
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fcrec"))
        .current_dir(dir.path())
        .args(["run", "--config"])
        .arg(&config)
        .args(["--clusters", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("from-file/run.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    fs::write(&config, "dataset = movielens\nbogus = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fcrec"))
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn bad_input_fails_with_stage_label() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fcrec"))
        .current_dir(dir.path())
        .args(["run", "--dataset", "movielens", "--path", "absent.tsv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("load"), "{}", stderr(&out));
    assert!(!dir.path().join("reports").exists());
}

#[test]
fn sweep_groups_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let out = fcrec(
        dir.path(),
        &[
            "sweep",
            "--axis",
            "clusters",
            "--values",
            "2,3,4",
            "--out-dir",
            "s",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("s/sweep-clusters.csv")).unwrap();
    let mut groups: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    groups.dedup();
    assert_eq!(groups, ["2", "3", "4"]);
    assert!(stdout(&out).contains("best clusters"));

    let out = fcrec(dir.path(), &["sweep", "--axis", "gamma", "--values", ""]);
    assert_eq!(out.status.code(), Some(2));
    let out = fcrec(dir.path(), &["sweep", "--axis", "colour", "--values", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inspect_stages() {
    let dir = TempDir::new().unwrap();
    for stage in ["similarity", "adjacency", "ppr", "pca", "memberships"] {
        let out = fcrec(dir.path(), &["inspect", stage, "--out-dir", "dump"]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let d = dir.path().join("dump");

    let memberships = rows(&d.join("memberships.csv"));
    assert_eq!(memberships.len(), 40);
    for row in &memberships {
        assert_eq!(row.len(), 2);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    let ppr = rows(&d.join("ppr.csv"));
    assert_eq!(ppr.len(), 40);
    for row in &ppr {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    let edges: Vec<(u32, u32)> = fs::read_to_string(d.join("adjacency.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (a, b) = l.split_once(' ').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert!(!edges.is_empty());
    for &(a, b) in &edges {
        assert!(edges.contains(&(b, a)));
    }

    assert_eq!(rows(&d.join("pca.csv"))[0].len(), 3);
    let similarity = fs::read_to_string(d.join("similarity.csv")).unwrap();
    assert!(similarity.starts_with("i,j,count\n"));

    let out = fcrec(dir.path(), &["inspect", "eigenvalues"]);
    assert!(!out.status.success());
}
