use std::fs;
use std::io::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::commands::{InputInfo, Outcome, RandomInfo};
use crate::error::CliError;
use metaudit_core::pplot::Thresholds;

#[derive(Serialize)]
struct OutputFile {
    file: String,
    bytes: usize,
    sha256: String,
}

/// Everything needed to reproduce a run. Deliberately free of timestamps
/// and host details so reruns are byte-identical.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    command_line: String,
    parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<&'a Thresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    random: Option<&'a RandomInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<&'a InputInfo>,
    outputs: Vec<OutputFile>,
}

fn hex_sha256(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

fn quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./=:,+@".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

pub fn emit(cmd: &Command, outcome: Outcome) -> Result<(), CliError> {
    let Some(dir) = cmd.out_dir() else {
        if outcome.needs_out {
            return Err(CliError::Usage("--export-series requires --out".into()));
        }
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(outcome.stdout.as_bytes())
            .map_err(|e| CliError::Analysis(format!("writing to stdout: {e}")));
    };
    let write_err =
        |name: &str, e: std::io::Error| CliError::Analysis(format!("{}: cannot write: {e}", dir.join(name).display()));
    fs::create_dir_all(dir).map_err(|e| write_err("", e))?;

    let mut outputs = Vec::new();
    for (name, body) in &outcome.files {
        fs::write(dir.join(name), body).map_err(|e| write_err(name, e))?;
        outputs.push(OutputFile {
            file: name.clone(),
            bytes: body.len(),
            sha256: hex_sha256(body.as_bytes()),
        });
    }
    let command_line = std::iter::once("metaudit".to_string())
        .chain(std::env::args().skip(1).map(|a| quote(&a)))
        .collect::<Vec<_>>()
        .join(" ");
    let manifest = Manifest {
        tool: "metaudit",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        command_line,
        parameters: cmd.parameters(),
        thresholds: outcome.thresholds.as_ref(),
        random: outcome.random.as_ref(),
        input: outcome.input.as_ref(),
        outputs,
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(dir.join("manifest.json"), body).map_err(|e| write_err("manifest.json", e))?;

    let mut listing = String::new();
    for (name, _) in &outcome.files {
        listing.push_str(&dir.join(name).display().to_string());
        listing.push('\n');
    }
    listing.push_str(&dir.join("manifest.json").display().to_string());
    listing.push('\n');
    std::io::stdout()
        .lock()
        .write_all(listing.as_bytes())
        .map_err(|e| CliError::Analysis(format!("writing to stdout: {e}")))
}
