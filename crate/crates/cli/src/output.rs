//! All-or-nothing output: files are staged in memory, written to hidden
//! temporaries next to their targets, and renamed into place only once
//! every temporary has been written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, String)>,
}

impl OutputSet {
    pub fn add(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<(), CliError> {
        let mut staged = Vec::with_capacity(self.files.len());
        let result = (|| {
            for (path, contents) in &self.files {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                }
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
                let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
                let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
                staged.push(tmp.clone());
                f.write_all(contents.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
                f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
            }
            for (tmp, (path, _)) in staged.iter().zip(&self.files) {
                fs::rename(tmp, path).map_err(|e| CliError::io(path, e))?;
            }
            Ok(())
        })();
        if result.is_err() {
            for tmp in &staged {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}
