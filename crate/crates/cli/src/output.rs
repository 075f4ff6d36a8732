use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use widthslab::swidths::{Certainty, WidthCurve, WidthKind};

use crate::CliError;

/// Full-precision float text: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn curve_csv(curve: &WidthCurve) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::usage(format!("csv: {e}"));
    w.write_record(["kind", "k", "value", "certainty"]).map_err(io)?;
    for (k, v) in curve.ks.iter().zip(&curve.values) {
        w.write_record([curve.kind.tag(), &k.to_string(), &fmt_f64(*v), curve.certainty.tag()]).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))
}

/// Reads `kind,k,value,certainty` rows back into a curve.
pub fn read_curve_csv(path: &Path) -> Result<WidthCurve, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    let mut kind = None;
    let mut certainty = None;
    let (mut ks, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let bad = |what: &str| CliError::parse(format!("{} row {}: bad {what}", path.display(), line + 2));
        if rec.len() != 4 {
            return Err(bad("column count"));
        }
        let kd: WidthKind = serde_json::from_value(rec[0].into()).map_err(|_| bad("kind"))?;
        let c: Certainty = serde_json::from_value(rec[3].into()).map_err(|_| bad("certainty"))?;
        kind.get_or_insert(kd);
        certainty.get_or_insert(c);
        ks.push(rec[1].parse::<u64>().map_err(|_| bad("k"))?);
        values.push(rec[2].parse::<f64>().map_err(|_| bad("value"))?);
    }
    let kind = kind.ok_or_else(|| CliError::parse(format!("{}: empty curve", path.display())))?;
    Ok(WidthCurve { kind, ks, values, certainty: certainty.unwrap() })
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::usage(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// `<out>.meta.json` next to a data file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| CliError::usage(format!("stdout: {e}"))),
    }
}
