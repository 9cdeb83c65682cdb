//! Output helpers shared by the command-line front end.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Current with an SI prefix, e.g. `7.870 uA`.
pub fn human_current(amps: f64) -> String {
    const PREFIXES: [(f64, &str); 6] = [
        (1.0, "A"),
        (1e-3, "mA"),
        (1e-6, "uA"),
        (1e-9, "nA"),
        (1e-12, "pA"),
        (1e-15, "fA"),
    ];
    if amps == 0.0 || !amps.is_finite() {
        return format!("{amps} A");
    }
    let mag = amps.abs();
    let (scale, unit) = PREFIXES
        .iter()
        .find(|(s, _)| mag >= *s)
        .copied()
        .unwrap_or(PREFIXES[PREFIXES.len() - 1]);
    format!("{:.3} {unit}", amps / scale)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Renders `rows` under `header` as CSV. Fields are written verbatim.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
