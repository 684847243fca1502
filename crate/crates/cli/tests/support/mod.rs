#![allow(dead_code)]

#[path = "../../../core/tests/support/fixtures.rs"]
pub mod fixtures;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fallstream::ingest::Sample;

/// Writes samples as a positional `t,ax,ay,az,label` trial file.
pub fn write_trial(path: &Path, samples: &[Sample]) {
    let mut text = String::new();
    for s in samples {
        let code = s.label.as_ref().map_or("", |l| l.code.as_str());
        writeln!(text, "{},{},{},{},{}", s.t_ms, s.ax, s.ay, s.az, code).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

/// A directory of labeled synthetic trials, alternating fall and ADL.
pub fn synthetic_dataset(dir: &Path, trials: usize, len: usize) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    (0..trials)
        .map(|k| {
            let fall = k % 2 == 0;
            let name = format!("{}_{k:03}.csv", if fall { "FOL" } else { "WAL" });
            let path = dir.join(name);
            let samples = fixtures::synthetic_trial(&format!("t{k}"), len, fall, k as u64 + 100);
            write_trial(&path, &samples);
            path
        })
        .collect()
}
