#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pput_fixtures::SyntheticFiles;

pub const BATTERY: &str = "[battery]\ncapital_cost = 300.0\ncycle_life = 3000.0\nround_trip_efficiency = 0.85\n";

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn pput(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_pput"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

/// Runs `cmd` with `config` written into `dir`, output to `dir/out`.
pub fn run_config(dir: &Path, cmd: &str, config: &str) -> Run {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    pput(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

pub fn dataset(market: &str, zone: &str, path: &Path) -> String {
    format!("[[datasets]]\nmarket = \"{market}\"\nzone = \"{zone}\"\npath = '{}'\n", path.display())
}

/// Dataset entries for every file of a synthetic year.
pub fn all_datasets(files: &SyntheticFiles, zone: &str) -> String {
    let mut s = String::new();
    for (m, p) in &files.prices {
        s.push_str(&dataset(m, zone, p));
    }
    s.push_str(&dataset("Reserve", zone, &files.reserve));
    s
}

/// Data rows of an output CSV (comment lines and header removed), split on commas.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file below `root` with its bytes, keyed by relative path.
pub fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<_> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}
