//! Channel and distribution file formats.
//!
//! CSV: one row per input symbol, cells are conditional probabilities.
//! JSON: `{"m": .., "n": .., "rows": [[..], ..], "name": optional}` where
//! the declared sizes must match the row data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dmcap::{Channel, Distribution};

use crate::emit::to_json;
use crate::{CmdError, FileFormat};

#[derive(Serialize, Deserialize)]
pub struct ChannelFile {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn infer_format(path: &Path, explicit: Option<FileFormat>) -> FileFormat {
    explicit.unwrap_or_else(|| {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
        {
            Some(ref e) if e == "json" => FileFormat::Json,
            _ => FileFormat::Csv,
        }
    })
}

pub fn read_channel(
    path: &Path,
    format: Option<FileFormat>,
) -> Result<(Channel, Option<String>), CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::io(format!("reading {}: {e}", path.display())))?;
    match infer_format(path, format) {
        FileFormat::Csv => {
            let rows = parse_csv_matrix(&text)?;
            Ok((Channel::from_rows(&rows)?, None))
        }
        FileFormat::Json => {
            let file: ChannelFile = serde_json::from_str(&text)
                .map_err(|e| CmdError::malformed(format!("{}: {e}", path.display())))?;
            if file.rows.len() != file.m {
                return Err(CmdError::dimension(format!(
                    "declared m = {} but got {} rows",
                    file.m,
                    file.rows.len()
                )));
            }
            for (i, row) in file.rows.iter().enumerate() {
                if row.len() != file.n {
                    return Err(CmdError::dimension(format!(
                        "declared n = {} but row {} has {} cells",
                        file.n,
                        i,
                        row.len()
                    )));
                }
            }
            Ok((Channel::from_rows(&file.rows)?, file.name))
        }
    }
}

fn parse_csv_matrix(text: &str) -> Result<Vec<Vec<f64>>, CmdError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| CmdError::malformed(format!("line {}: bad cell {cell:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>, CmdError>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CmdError::malformed("channel file has no rows"));
    }
    Ok(rows)
}

#[cfg_attr(not(test), allow(dead_code))]
pub fn write_channel_json(channel: &Channel, name: Option<&str>) -> String {
    let file = ChannelFile {
        m: channel.input_size(),
        n: channel.output_size(),
        rows: channel.rows().map(|r| r.to_vec()).collect(),
        name: name.map(str::to_owned),
    };
    to_json(&file)
}

/// One CSV line of probabilities.
pub fn read_distribution(path: &Path) -> Result<Distribution, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::io(format!("reading {}: {e}", path.display())))?;
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| CmdError::malformed("distribution file is empty"))?;
    let probs = line
        .split(',')
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .map_err(|_| CmdError::malformed(format!("bad cell {cell:?}")))
        })
        .collect::<Result<Vec<f64>, CmdError>>()?;
    Ok(Distribution::new(probs)?)
}
