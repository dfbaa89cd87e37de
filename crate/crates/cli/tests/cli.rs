use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dilates(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dilates"))
        .env_remove("DILATES_CACHE_DIR")
        .arg("--cache-dir")
        .arg(cache)
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn box_construction_writes_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dilates(
        &dir.path().join("cache"),
        &["construct", "box", "--d", "2", "--lambda", "9", "--gamma", "1/9", "--p", "10007", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let chain = json(&out.join("construct-box.chain.json"));
    assert_eq!(chain["grid_prediction"]["exact"], "4/9");
    assert_eq!(chain["torus_le_grid"], true);
    let record = json(&out.join("construct-box.json"));
    assert_eq!(record["kind"], "construct");
    assert_eq!(record["outputs"]["grid_cells"], 4);
    assert!(out.join("construct-box.meta.json").exists());
    let grid = fs::read_to_string(out.join("construct-box.grid.txt")).unwrap();
    assert!(grid.starts_with("n=2;lambda=9;"));
    let residues = fs::read_to_string(out.join("construct-box.residues.txt")).unwrap();
    assert!(residues.starts_with("p=10007;{"));
}

#[test]
fn simplex_measures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dilates(&dir.path().join("cache"), &["construct", "simplex", "--n", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let record = json(&out.join("construct-simplex.json"));
    assert_eq!(record["outputs"]["mu_b"]["exact"], "29/360");
    assert_eq!(record["outputs"]["mu_cc"]["exact"], "119/120");

    let o = dilates(
        &dir.path().join("cache"),
        &["construct", "simplex", "--n", "5", "--lambda", "12", "--p", "1009", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let chain = json(&out.join("construct-simplex.chain.json"));
    assert_eq!(chain["zp_le_torus"], true);
}

#[test]
fn empty_box_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dilates(
        &dir.path().join("cache"),
        &["construct", "box", "--d", "1", "--lambda", "9", "--gamma", "1/9", "--p", "10007", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert_eq!(json(&out.join("construct-box.json"))["outputs"]["empty"], true);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let o = dilates(&cache, &["verify", "cd", "--p", "101", "--cases", "10000", "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = json(&Path::new(out).join("verify-cd.json"));
    assert_eq!(summary["outputs"]["violations"], 0);

    let o = dilates(&cache, &["verify", "dilate-chain", "--lambda", "3", "--l", "2", "--cases", "200", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = dilates(&cache, &["verify", "cd", "--p", "100", "--cases", "10", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("composite"));

    let o = dilates(&cache, &["verify", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn search_is_cached_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let args = ["search", "--p", "7", "--lambda", "2", "--m", "2", "--mode", "exact", "--out", out.to_str().unwrap()];
    let o = dilates(&cache, &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read(out.join("search.json")).unwrap();
    let record: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(record["outputs"]["min_size"], 4);
    let digest = record["outputs"]["task_digest"].as_str().unwrap().to_string();
    assert!(cache.join("search").join(format!("{digest}.json")).exists());
    let entries: Vec<_> = fs::read_dir(cache.join("search")).unwrap().collect();
    assert_eq!(entries.len(), 1);

    let o = dilates(&cache, &args);
    assert!(stderr(&o).contains("cache hit"));
    assert_eq!(fs::read(out.join("search.json")).unwrap(), first);

    let h = ["search", "--p", "101", "--lambda", "3", "--m", "20", "--mode", "heuristic", "--seed", "5", "--budget", "500"];
    let a = dilates(&dir.path().join("c1"), &h);
    let b = dilates(&dir.path().join("c2"), &h);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn search_cap_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = dilates(&dir.path().join("cache"), &["search", "--p", "101", "--lambda", "2", "--m", "40", "--exact-cap", "1000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("heuristic"));
    let o = dilates(&dir.path().join("cache"), &["search", "--p", "9", "--lambda", "2", "--m", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let o = dilates(
        &cache,
        &["sweep", "--p", "5,7,11,13", "--lambda", "2,3", "--m-range", "2..5", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p,lambda,m,alpha,min_size,min_over_p,exact,witness");
    assert_eq!(lines.len(), 1 + 4 * 2 * 4);
    assert!(lines.contains(&"7,2,2,2/7,4,4/7,true,\"p=7;{0,1}\""));

    let plots = dir.path().join("plots");
    let o = dilates(&cache, &["report", "--out", plots.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(plots.join("sweep.csv")).unwrap().lines().count(), 33);
    let plot = fs::read_to_string(plots.join("plot.dat")).unwrap();
    let data: Vec<&str> = plot.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    assert_eq!(data.len(), 32);
    assert!(data.iter().all(|l| l.split_whitespace().count() == 2));
}

#[test]
fn sweep_records_cell_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = dilates(&dir.path().join("cache"), &["sweep", "--p", "7,9", "--lambda", "2", "--m", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let record = json(&out.join("sweep.json"));
    let cells = record["outputs"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert!(cells[0]["error"].is_null());
    assert!(cells[1]["error"].as_str().unwrap().contains("not prime"));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 2);
}

#[test]
fn report_on_empty_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let plots = dir.path().join("plots");
    let o = dilates(&cache, &["report", "--out", plots.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(plots.join("sweep.csv")).unwrap(),
        "p,lambda,m,alpha,min_size,min_over_p,exact,witness\n"
    );
    assert_eq!(fs::read_to_string(plots.join("plot.dat")).unwrap(), "");
    assert!(!cache.exists());
}

#[test]
fn gap_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();

    let r = dilates(&cache, &["gap", "find", "--set", "p=11;{0,2,4,6}", "--out", o]);
    assert_eq!(r.status.code(), Some(0), "{}", stderr(&r));
    assert_eq!(json(&out.join("gap-find.json"))["outputs"]["gap"], "p=11;a=0;v=[2];k=[4]");

    let r = dilates(&cache, &["gap", "expand", "--gap", "p=5;a=0;v=[1,2];k=[3,2]", "--out", o]);
    assert_eq!(r.status.code(), Some(0));
    let expanded = json(&out.join("gap-expand.json"));
    assert_eq!(expanded["outputs"]["proper"], false);
    assert_eq!(expanded["outputs"]["elements"], "p=5;{0,1,2,3,4}");

    let r = dilates(&cache, &["gap", "truncate", "--gap", "p=11;a=3;v=[1,5];k=[4,2]", "--lambda", "3", "--out", o]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(json(&out.join("gap-truncate.json"))["outputs"]["truncated"], "p=11;a=0;v=[1];k=[4]");

    let r = dilates(&cache, &["gap", "span", "--gap", "p=13;a=0;v=[1];k=[4]", "--lambda", "3", "--d", "1", "--out", o]);
    assert_eq!(r.status.code(), Some(0));
    let span = json(&out.join("gap-span.json"));
    assert_eq!(span["outputs"]["contained"], true);
    assert_eq!(span["outputs"]["lhs_size"], 13);

    let r = dilates(&cache, &["gap", "find", "--set", "p=103;{0,1}", "--out", o]);
    assert_eq!(r.status.code(), Some(4));
    let r = dilates(&cache, &["gap", "expand", "--gap", "p=5;a=0;v=[1]"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("env-cache");
    let o = Command::new(env!("CARGO_BIN_EXE_dilates"))
        .env("DILATES_CACHE_DIR", &cache)
        .args(["search", "--p", "11", "--lambda", "3", "--m", "3", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_dir(cache.join("search")).unwrap().count(), 1);
}

#[test]
fn failed_chain_maps_to_exit_three() {
    assert_eq!(dilates_cli::error::CliError::from(dilates_core::Error::ChainViolated("x".into())).code, 3);
    assert_eq!(
        dilates_cli::main_with(["dilates", "construct", "box", "--d", "2", "--lambda", "9", "--gamma", "2", "--p", "7"]),
        2
    );
}
