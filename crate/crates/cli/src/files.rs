//! Reading inputs and writing result files.

use std::fs;
use std::path::{Path, PathBuf};

use cam::io::{format_matrix, parse_matrix};
use cam::Matrix64;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn read_matrix(path: &Path) -> CliResult<Matrix64> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize");
    s.push('\n');
    s
}

/// Files rendered in memory, written only once every one of them is ready.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn matrix(&mut self, path: PathBuf, m: &Matrix64) {
        self.files.push((path, format_matrix(m)));
    }

    pub fn json<T: Serialize>(&mut self, path: PathBuf, value: &T) {
        self.files.push((path, to_json(value)));
    }

    pub fn text(&mut self, path: PathBuf, text: String) {
        self.files.push((path, text));
    }

    pub fn write(self) -> CliResult<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (path, contents) in self.files {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}
