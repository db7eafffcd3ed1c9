//! Committed reference draws of the random streams.

use std::path::{Path as FsPath, PathBuf};

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stochastic::RngKey;

/// Seed documented in the fixture file.
pub const REFERENCE_SEED: u64 = 20_240_611;

/// Draws recorded per stream.
pub const REFERENCE_DRAWS: usize = 4;

pub fn default_fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/rng_reference.csv")
}

/// Streams covered by the fixture.
pub fn reference_keys() -> Vec<RngKey> {
    let root = RngKey::root(REFERENCE_SEED);
    vec![
        root.clone(),
        root.child("path", 0),
        root.child("path", 7),
        root.child("experiment", 3).child("path", 1_000_000),
    ]
}

fn encode_labels(key: &RngKey) -> String {
    key.labels
        .iter()
        .map(|(n, i)| format!("{n}:{i}"))
        .collect::<Vec<_>>()
        .join("/")
}

/// Fixture text for the current generator.
pub fn generate_fixture() -> String {
    let mut s = String::from("seed,labels,draw,uniform\n");
    for key in reference_keys() {
        let mut r = key.rng();
        for d in 0..REFERENCE_DRAWS {
            let u: f64 = r.random();
            s.push_str(&format!("{},{},{d},{u:?}\n", key.seed, encode_labels(&key)));
        }
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Outcome of comparing the generator with the fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCheck {
    pub sha256: String,
    pub mismatches: Vec<String>,
}

impl FixtureCheck {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn check_fixture(path: &FsPath) -> Result<FixtureCheck> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let want = generate_fixture();
    let mut mismatches = Vec::new();
    let got_lines: Vec<&str> = text.lines().collect();
    let want_lines: Vec<&str> = want.lines().collect();
    if got_lines.len() != want_lines.len() {
        mismatches.push(format!(
            "fixture has {} lines, generator produces {}",
            got_lines.len(),
            want_lines.len()
        ));
    }
    for (no, (g, w)) in got_lines.iter().zip(&want_lines).enumerate() {
        if g.trim_end() != *w {
            mismatches.push(format!("line {}: fixture '{g}' vs generator '{w}'", no + 1));
        }
    }
    Ok(FixtureCheck {
        sha256: sha256_hex(&bytes),
        mismatches,
    })
}

/// Hash of the fixture file, or `None` when it cannot be read.
pub fn fixture_hash(path: &FsPath) -> Option<String> {
    std::fs::read(path).ok().map(|b| sha256_hex(&b))
}
