//! Output plumbing shared by every subcommand: digests, JSON and table
//! writers, and the per-command manifest. Nothing here embeds wall-clock
//! state, so identical inputs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
    Ok(digest_bytes(&bytes))
}

pub fn write_bytes(dir: &Path, file: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(dir.join(file), bytes)
        .map_err(|e| CliError::Input(format!("cannot write `{file}`: {e}")))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json(dir: &Path, file: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_bytes(dir, file, text.as_bytes())
}

/// Per-command record of inputs, flags, and output digests, written last as
/// `manifest.json`. Output paths are stored relative to the command
/// directory so reruns into different directories stay byte-identical.
pub struct Manifest {
    command: &'static str,
    dir: PathBuf,
    inputs: Value,
    flags: Value,
    outputs: Vec<Value>,
}

impl Manifest {
    pub fn new(command: &'static str, dir: &Path, inputs: Value, flags: Value) -> Self {
        Manifest {
            command,
            dir: dir.to_path_buf(),
            inputs,
            flags,
            outputs: Vec::new(),
        }
    }

    /// Record an already-written output file and its digest.
    pub fn add(&mut self, file: &str) -> Result<(), CliError> {
        let sha256 = digest_file(&self.dir.join(file))?;
        self.outputs.push(json!({ "file": file, "sha256": sha256 }));
        Ok(())
    }

    pub fn write(&self) -> Result<(), CliError> {
        write_json(
            &self.dir,
            "manifest.json",
            &json!({
                "command": self.command,
                "inputs": self.inputs,
                "flags": self.flags,
                "outputs": self.outputs,
            }),
        )
    }
}

/// Column-aligned text table: headers, a rule, then rows.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let rendered: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
            .collect();
        out.push_str(rendered.join("  ").trim_end());
        out.push('\n');
    };
    line(headers.iter().map(|h| h.to_string()).collect());
    line(widths.iter().map(|w| "-".repeat(*w)).collect());
    for row in rows {
        line(row.clone());
    }
    out
}

pub fn render_csv(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers).expect("csv row");
    for row in rows {
        writer.write_record(row).expect("csv row");
    }
    String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv is utf-8")
}
