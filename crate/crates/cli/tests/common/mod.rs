//! Runs the built binary in a scratch directory.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// The CLI binary of whichever package compiles this module.
const BIN: &str = match (option_env!("CARGO_BIN_EXE_assetopt"), option_env!("CARGO_BIN_EXE_assetopt-suite")) {
    (Some(bin), _) | (None, Some(bin)) => bin,
    (None, None) => panic!("no CLI binary in this package"),
};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/tests/fixtures").join(name)
}

/// Runs `assetopt` in `dir` with an empty environment plus `env`.
pub fn assetopt(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).env_clear().args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = assetopt(dir, args, &[]);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`assetopt {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// ingest, build-assets, index, optimize (k = 3) and evaluate with the mock
/// judge, all with relative paths inside `dir`.
pub fn full_run(dir: &Path, seed: u64, prompts: &str) -> Result<(), String> {
    let train = fixture("train25.jsonl");
    let prompts = fixture(prompts);
    let seed = seed.to_string();
    ok(dir, &["ingest", "--input", train.to_str().unwrap(), "--format", "helpsteer-jsonl", "--corpus", "corpus.jsonl"])?;
    ok(dir, &["build-assets", "--corpus", "corpus.jsonl", "--provider", "mock", "--seed", &seed])?;
    ok(dir, &["index", "--corpus", "corpus.jsonl", "--index", "corpus.index"])?;
    ok(
        dir,
        &[
            "optimize", "--corpus", "corpus.jsonl", "--index", "corpus.index", "--prompts",
            prompts.to_str().unwrap(), "--k", "3", "--out", "results.jsonl", "--seed", &seed,
        ],
    )?;
    ok(dir, &["evaluate", "--results", "results.jsonl", "--judge", "mock", "--report", "report.json"])?;
    Ok(())
}

/// Manifest JSON with the wall-clock fields removed.
pub fn manifest_without_times(path: &Path) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let obj = v.as_object_mut().ok_or("manifest is not an object")?;
    obj.remove("started_at");
    obj.remove("finished_at");
    Ok(serde_json::to_string_pretty(&v).unwrap())
}

pub fn manifests(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    v.sort();
    v
}
