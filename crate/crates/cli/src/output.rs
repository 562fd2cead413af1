use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use parvol::engine::fmt17;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

/// Compact JSON with every float written to 17 significant digits.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Where artifacts go: files under a directory, or nowhere (the command
/// then prints its report on stdout).
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Sink {
            dir: dir.map(Path::to_path_buf),
            written: Vec::new(),
        })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        if let Some(d) = &self.dir {
            let path = d.join(name);
            fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.enabled() {
            self.bytes(name, &to_json(value)?)?;
        }
        Ok(())
    }

    /// CSV from a header and rows of already formatted cells.
    pub fn csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl Iterator<Item = Vec<String>>,
    ) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        let mut out = String::from(header);
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.bytes(name, out.as_bytes())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(&to_json(value)?)?;
    out.flush()?;
    Ok(())
}
