//! Result files.
//!
//! JSON output is `{"schema_version", "config_echo", "results"}` plus an
//! optional `"generated_at"` unix timestamp. Every float is written with 17
//! significant digits; non-finite values become `null`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::model::TestOutcome;
use crate::simulation::{ConvergenceReport, SizePowerTable};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty printer that writes floats via [`format_f64`].
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(format_f64(value).as_bytes())
        } else {
            CompactFormatter.write_null(w)
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub config_echo: &'a C,
    pub results: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

/// Serialize `value` as pretty JSON with full-precision floats.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Results that also have a flat CSV form.
pub trait Tabular: Serialize {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()>;
}

impl Tabular for SizePowerTable {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(["delta", "test", "rate", "se", "reps"])?;
        for r in &self.rows {
            w.write_record([
                format_f64(r.delta),
                r.test.name().to_string(),
                format_f64(r.rate),
                format_f64(r.se),
                r.reps.to_string(),
            ])?;
        }
        Ok(())
    }
}

impl Tabular for Vec<(String, TestOutcome)> {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(["name", "statistic", "pvalue", "method", "kernel"])?;
        for (name, o) in self {
            let method = serde_json::to_value(o.method)?;
            w.write_record([
                name.clone(),
                format_f64(o.statistic),
                format_f64(o.pvalue),
                method.as_str().unwrap_or_default().to_string(),
                o.kernel.map(|k| k.to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(())
    }
}

impl Tabular for ConvergenceReport {
    fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(["n", "p", "distance"])?;
        for c in &self.cells {
            w.write_record([c.n.to_string(), c.p.to_string(), format_f64(c.distance)])?;
        }
        Ok(())
    }
}

/// Write `results` to `path` (stdout when `None`). The JSON form wraps them
/// in an [`Envelope`] echoing `config`.
pub fn emit_results<C: Serialize, R: Tabular>(
    results: &R,
    config: &C,
    format: OutputFormat,
    path: Option<&Path>,
    timestamp: bool,
) -> Result<()> {
    let bytes = match format {
        OutputFormat::Json => {
            let generated_at = timestamp.then(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
            to_json_string(&Envelope {
                schema_version: SCHEMA_VERSION,
                config_echo: config,
                results,
                generated_at,
            })?
            .into_bytes()
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            results.write_csv(&mut w)?;
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::File {
                path: p.to_path_buf(),
                source,
            })?;
            let mut out = BufWriter::new(file);
            out.write_all(&bytes)?;
            out.flush()?;
        }
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}
