//! CSV tables and raw field dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::solvers::IterRecord;

/// Fixed-precision scientific notation used in every CSV.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `header` and `rows` to `path`, creating parent directories.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_iterates(path: &Path, log: &[IterRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> =
        log.iter().map(|r| vec![r.iteration.to_string(), num(r.energy), num(r.grad_norm), num(r.h1_norm)]).collect();
    write_csv(path, &["iteration", "J", "grad_norm", "h1_norm"], &rows)
}

/// `<name>.bin` holds little-endian `f64` values in row-major order (`x`
/// slowest, `z` fastest); `<name>.hdr` describes it.
pub fn write_field(dir: &Path, name: &str, field: &Field) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(format!("{name}.bin")), bytes)?;
    let g = field.grid();
    let mut hdr = fs::File::create(dir.join(format!("{name}.hdr")))?;
    writeln!(hdr, "field = {name}")?;
    writeln!(hdr, "half_width = {}", num(g.half_width()))?;
    writeln!(hdr, "points = {}", g.n())?;
    writeln!(hdr, "dtype = float64-le")?;
    writeln!(hdr, "order = row-major (x, y, z)")?;
    Ok(())
}

/// Reads a dump written by [`write_field`] back as raw values.
pub fn read_field_values(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(std::io::Error::other("field dump length is not a multiple of 8")));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}
