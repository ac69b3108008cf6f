//! Output formatting. Every float in a report or trace is written with 17
//! significant digits so files round-trip 64-bit values exactly and repeated
//! runs are byte-identical.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::CmdError;

pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Compact JSON with f64 fields rendered at 17 significant digits.
struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, SigDigits);
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("reports are utf-8")
}

/// Writes to the path, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CmdError> {
    match path {
        Some(p) => {
            std::fs::write(p, content)
                .map_err(|e| CmdError::io(format!("writing {}: {e}", p.display())))?;
        }
        None => {
            print!("{content}");
        }
    }
    Ok(())
}

pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    pub fn new(header: &str) -> Self {
        Self {
            buf: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
