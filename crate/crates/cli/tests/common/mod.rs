//! Helpers for driving the `docrestore` binary from tests.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_docrestore");

/// Overrides for a small, fast corpus and network geometry.
pub const SMALL: &[&str] = &["synth.size=64", "patch.size=32", "patch.stride=16", "train.epochs=1", "train.batch=4"];

pub fn run(args: &[&str], settings: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for s in settings {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("spawn docrestore")
}

/// Run and panic with stderr on failure.
pub fn ok(args: &[&str], settings: &[&str]) -> Output {
    let out = run(args, settings);
    assert!(out.status.success(), "docrestore {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).expect("readable file");
                out.push((path.strip_prefix(dir).expect("under dir").to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}
