//! Run manifests: what was run, on which input, by which version.
//!
//! The manifest hash covers everything that determines the outputs
//! (command, resolved flags, input digests, version) and nothing that
//! does not (wall time, thread count, output location), so replaying a
//! manifest yields the same hash and byte-identical outputs.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    /// Resolved flag values, in a fixed order.
    pub flags: Vec<(String, String)>,
    /// (path as given, sha256 of contents)
    pub inputs: Vec<(String, String)>,
    pub threads: usize,
    pub wall_time: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), flags: Vec::new(), inputs: Vec::new(), threads: 1, wall_time: 0.0 }
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) {
        self.flags.push((name.into(), value.to_string()));
    }

    pub fn input(&mut self, path: &str, contents: &[u8]) {
        self.inputs.push((path.into(), sha256_hex(contents)));
    }

    fn seed(&self) -> Option<&str> {
        self.flags.iter().find(|(k, _)| k == "seed").map(|(_, v)| v.as_str())
    }

    /// The hashed part of the manifest.
    fn identity(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command\t{}", self.command);
        let _ = writeln!(out, "version\t{}", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed() {
            let _ = writeln!(out, "seed\t{seed}");
        }
        for (path, digest) in &self.inputs {
            let _ = writeln!(out, "input\t{path}\tsha256:{digest}");
        }
        for (k, v) in &self.flags {
            let _ = writeln!(out, "flag\t{k}\t{v}");
        }
        out
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.identity().as_bytes())
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# slpm run manifest\n");
        let _ = writeln!(out, "manifest_hash\t{}", self.hash());
        out.push_str(&self.identity());
        let _ = writeln!(out, "threads\t{}", self.threads);
        let _ = writeln!(out, "wall_time_seconds\t{:.6}", self.wall_time);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_timing_and_threads() {
        let mut a = RunManifest::new("fit");
        a.flag("seed", 3);
        a.input("x.csv", b"1,2\n");
        let mut b = a.clone();
        b.threads = 8;
        b.wall_time = 12.5;
        assert_eq!(a.hash(), b.hash());
        b.flag("dims", 4);
        assert_ne!(a.hash(), b.hash());
        assert!(a.render().contains(&a.hash()));
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
