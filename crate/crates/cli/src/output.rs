use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// Destination for one run: a file or stdout. CSV rows are flushed as they
/// are written so that a failing sweep leaves its finished rows behind.
pub struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self { inner })
    }

    pub fn line(&mut self, s: &str) -> io::Result<()> {
        self.inner.write_all(s.as_bytes())?;
        self.inner.write_all(b"\n")?;
        self.inner.flush()
    }

    pub fn json<T: Serialize>(&mut self, doc: &T) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut self.inner, doc)?;
        self.inner.write_all(b"\n")?;
        self.inner.flush()
    }
}

/// Every JSON output carries the version and the full config.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub version: &'a str,
    pub command: &'a str,
    pub config: &'a C,
    pub result: R,
}

/// 17 significant digits, `.` decimal point.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# key=value` header lines for CSV output, sorted by key.
pub fn csv_preamble<C: Serialize>(sink: &mut Sink, command: &str, config: &C) -> io::Result<()> {
    sink.line(&format!("# cxhyp {}", cxhyp::VERSION))?;
    sink.line(&format!("# command={command}"))?;
    if let serde_json::Value::Object(map) = serde_json::to_value(config)? {
        for (k, v) in map {
            sink.line(&format!("# {k}={v}"))?;
        }
    }
    Ok(())
}
