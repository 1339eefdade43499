//! CSV tables with JSON sidecars. Each sidecar records the SHA-256 of its CSV
//! so that downstream stages can cite their inputs.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::effpot::{Anchor, CurveKind, EffectivePotentialCurve, ForcePolynomial};
use crate::error::{Error, Result};
use crate::pimd::ForceTable;
use crate::series::{CorrelationSeries, LineKind, SeriesKind, SpectralLine, SpectralLines};
use crate::spectra::SpectrumEstimate;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// `table.csv` -> `table.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

fn write_sidecar(csv: &Path, sha256: &str, mut meta: Value) -> Result<()> {
    meta["csv"] = json!(csv.file_name().map(|n| n.to_string_lossy().into_owned()));
    meta["sha256"] = json!(sha256);
    fs::write(
        sidecar_path(csv),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

fn read_sidecar(csv: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&fs::read_to_string(sidecar_path(
        csv,
    ))?)?)
}

fn field<T: for<'de> Deserialize<'de>>(meta: &Value, key: &str) -> Result<T> {
    let v = meta.get(key).cloned().unwrap_or(Value::Null);
    serde_json::from_value(v)
        .map_err(|e| Error::InvalidParameter(format!("sidecar field `{key}`: {e}")))
}

#[derive(Serialize, Deserialize)]
struct ForceRow {
    q_c: f64,
    force: f64,
    stderr: f64,
    n_samples: usize,
}

/// Writes the table and returns the CSV hash.
pub fn write_force_table(path: &Path, table: &ForceTable) -> Result<String> {
    table.validate()?;
    let rows = (0..table.len()).map(|i| ForceRow {
        q_c: table.q_c[i],
        force: table.force[i],
        stderr: table.stderr[i],
        n_samples: table.n_samples[i],
    });
    let hash = write_csv(path, rows)?;
    write_sidecar(
        path,
        &hash,
        json!({ "beta": table.beta, "trotter": table.trotter, "seed": table.seed }),
    )?;
    Ok(hash)
}

pub fn read_force_table(path: &Path) -> Result<ForceTable> {
    let rows: Vec<ForceRow> = read_csv(path)?;
    let meta = read_sidecar(path)?;
    let table = ForceTable {
        beta: field(&meta, "beta")?,
        trotter: field(&meta, "trotter")?,
        seed: field(&meta, "seed")?,
        q_c: rows.iter().map(|r| r.q_c).collect(),
        force: rows.iter().map(|r| r.force).collect(),
        stderr: rows.iter().map(|r| r.stderr).collect(),
        n_samples: rows.iter().map(|r| r.n_samples).collect(),
    };
    table.validate()?;
    Ok(table)
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    abscissa: f64,
    value: f64,
    slope: f64,
    stderr: f64,
}

/// Curve CSV with kind, anchor, fitted force and the hash of the input it came from.
pub fn write_curve(
    path: &Path,
    curve: &EffectivePotentialCurve,
    input_sha256: Option<&str>,
) -> Result<String> {
    let rows = (0..curve.len()).map(|i| CurveRow {
        abscissa: curve.abscissae[i],
        value: curve.values[i],
        slope: curve.slopes[i],
        stderr: curve.stderr[i],
    });
    let hash = write_csv(path, rows)?;
    let anchor_note = match curve.anchor {
        Anchor::ZeroAt(q) => format!("V = 0 at q = {q}"),
        Anchor::ZeroAtMinimum => "V = 0 at the minimum".to_string(),
    };
    write_sidecar(
        path,
        &hash,
        json!({
            "kind": curve.kind,
            "beta": curve.beta,
            "anchor": curve.anchor,
            "anchor_note": anchor_note,
            "symmetric": curve.symmetric,
            "force": curve.force,
            "input_sha256": input_sha256,
        }),
    )?;
    Ok(hash)
}

pub fn read_curve(path: &Path) -> Result<EffectivePotentialCurve> {
    let rows: Vec<CurveRow> = read_csv(path)?;
    let meta = read_sidecar(path)?;
    Ok(EffectivePotentialCurve {
        kind: field::<CurveKind>(&meta, "kind")?,
        beta: field(&meta, "beta")?,
        abscissae: rows.iter().map(|r| r.abscissa).collect(),
        values: rows.iter().map(|r| r.value).collect(),
        slopes: rows.iter().map(|r| r.slope).collect(),
        stderr: rows.iter().map(|r| r.stderr).collect(),
        force: field::<Option<ForcePolynomial>>(&meta, "force")?,
        anchor: field(&meta, "anchor")?,
        symmetric: field(&meta, "symmetric")?,
    })
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    t: f64,
    re: f64,
    im: f64,
    stderr: f64,
}

/// Columns `t, re, im, stderr` (stderr zero when unknown).
pub fn write_series(path: &Path, series: &CorrelationSeries) -> Result<String> {
    let rows = (0..series.len()).map(|i| SeriesRow {
        t: series.times[i],
        re: series.values[i].re,
        im: series.values[i].im,
        stderr: series.stderr.as_ref().map_or(0.0, |s| s[i]),
    });
    let hash = write_csv(path, rows)?;
    write_sidecar(
        path,
        &hash,
        json!({ "kind": series.kind, "beta": series.beta, "has_stderr": series.stderr.is_some() }),
    )?;
    Ok(hash)
}

pub fn read_series(path: &Path) -> Result<CorrelationSeries> {
    let rows: Vec<SeriesRow> = read_csv(path)?;
    let meta = read_sidecar(path)?;
    let series = CorrelationSeries::new(
        field::<SeriesKind>(&meta, "kind")?,
        field(&meta, "beta")?,
        rows.iter().map(|r| r.t).collect(),
        rows.iter().map(|r| Complex64::new(r.re, r.im)).collect(),
    );
    Ok(if field::<bool>(&meta, "has_stderr")? {
        series.with_stderr(rows.iter().map(|r| r.stderr).collect())
    } else {
        series
    })
}

#[derive(Serialize, Deserialize)]
struct LineRow {
    omega: f64,
    weight: f64,
    kind: String,
}

/// Impulse spectrum as `omega, weight, kind` rows.
pub fn write_lines(path: &Path, lines: &SpectralLines) -> Result<String> {
    let rows = lines.lines.iter().map(|l| LineRow {
        omega: l.frequency,
        weight: l.weight,
        kind: lines.kind.label().to_string(),
    });
    let hash = write_csv(path, rows)?;
    write_sidecar(
        path,
        &hash,
        json!({ "kind": lines.kind, "beta": lines.beta }),
    )?;
    Ok(hash)
}

pub fn read_lines(path: &Path) -> Result<SpectralLines> {
    let rows: Vec<LineRow> = read_csv(path)?;
    let meta = read_sidecar(path)?;
    Ok(SpectralLines {
        kind: field::<LineKind>(&meta, "kind")?,
        beta: field(&meta, "beta")?,
        lines: rows
            .iter()
            .map(|r| SpectralLine {
                frequency: r.omega,
                weight: r.weight,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct SpectrumRow {
    omega: f64,
    re: f64,
    im: f64,
}

pub fn write_spectrum(path: &Path, spec: &SpectrumEstimate) -> Result<String> {
    let rows = spec
        .frequencies
        .iter()
        .zip(&spec.values)
        .map(|(&omega, v)| SpectrumRow {
            omega,
            re: v.re,
            im: v.im,
        });
    let hash = write_csv(path, rows)?;
    write_sidecar(
        path,
        &hash,
        json!({
            "window": spec.window,
            "dt": spec.dt,
            "span": spec.span,
            "n": spec.n,
            "bin_width": spec.bin_width(),
            "beta": spec.beta,
        }),
    )?;
    Ok(hash)
}

/// Pretty JSON of any serializable record, newline-terminated.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, &text)?;
    Ok(sha256_hex(text.as_bytes()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_table_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forces.csv");
        let table = ForceTable {
            beta: 10.0,
            trotter: 64,
            seed: 7,
            q_c: vec![-0.1, 0.0, 0.1 + 1e-17],
            force: vec![0.1 / 3.0, 0.0, -std::f64::consts::PI],
            stderr: vec![1e-3, 2e-3, 3e-3],
            n_samples: vec![10, 20, 30],
        };
        let hash = write_force_table(&path, &table).unwrap();
        assert_eq!(hash, sha256_file(&path).unwrap());
        assert_eq!(read_force_table(&path).unwrap(), table);
        let meta = read_sidecar(&path).unwrap();
        assert_eq!(meta["sha256"], json!(hash));
    }

    #[test]
    fn series_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let s = CorrelationSeries::new(
            SeriesKind::Epac,
            Some(1.0),
            vec![0.0, 0.5],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.2)],
        );
        write_series(&path, &s).unwrap();
        assert_eq!(read_series(&path).unwrap(), s);
    }
}
