//! File formats and atomic writes. Every CSV has a header and a reader.

use std::io::Write;
use std::path::{Path, PathBuf};

use breedsim_core::protocol::{CurveRow, EventKind, TimelineEvent};
use breedsim_core::tomography::{DatasetMetadata, HomodyneDataset, HomodyneSample};
use breedsim_core::wigner::WignerGrid;
use breedsim_core::{CMatrix, Complex64, DensityOperator, FockCutoff};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn csv_bytes<F>(header: &[&str], fill: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .and_then(|_| fill(&mut w))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Parses a headed numeric CSV, checking the header exactly.
fn read_numeric_csv(path: &Path, header: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| CliError::format(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::format(
            path,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::format(path, e))?;
        let line = i + 2;
        let row = record
            .iter()
            .zip(header)
            .map(|(field, name)| {
                field.parse::<f64>().map_err(|_| {
                    CliError::format(
                        path,
                        format!("line {line}, column `{name}`: not a number: `{field}`"),
                    )
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub const DATASET_HEADER: [&str; 2] = ["theta", "x"];

pub fn write_dataset(path: &Path, data: &HomodyneDataset) -> CliResult<()> {
    let bytes = csv_bytes(&DATASET_HEADER, |w| {
        for s in data.samples() {
            w.write_record([s.theta().to_string(), s.x().to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_dataset(path: &Path) -> CliResult<HomodyneDataset> {
    let rows = read_numeric_csv(path, &DATASET_HEADER)?;
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            HomodyneSample::new(r[0], r[1])
                .map_err(|e| CliError::format(path, format!("line {}: {e}", i + 2)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if samples.is_empty() {
        return Err(CliError::format(path, "dataset has no samples"));
    }
    Ok(HomodyneDataset::new(
        samples,
        DatasetMetadata {
            source: path.display().to_string(),
            seed: None,
        },
    ))
}

/// Structured-text companion of a density-matrix CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMetadata {
    pub cutoff: usize,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionMetadata>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionMetadata {
    pub samples: usize,
    pub iterations: usize,
    pub stop_reason: String,
    pub log_likelihood: f64,
    pub final_likelihood_gain: f64,
    pub efficiency_model: String,
    /// Total transmission folded into the measurement operators.
    pub efficiency: f64,
    pub diluted_steps: usize,
    pub zero_probability_cells: usize,
    pub phases: Vec<f64>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("toml")
}

fn density_header(d: usize) -> Vec<String> {
    (0..d)
        .flat_map(|j| [format!("re_{j}"), format!("im_{j}")])
        .collect()
}

/// Writes `rho` as rows of interleaved real and imaginary parts, plus the
/// metadata sidecar.
pub fn write_density(path: &Path, rho: &DensityOperator, meta: &DensityMetadata) -> CliResult<()> {
    let d = rho.dim();
    let header = density_header(d);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let m = rho.matrix();
    let bytes = csv_bytes(&header, |w| {
        for i in 0..d {
            w.write_record(
                (0..d).flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()]),
            )?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)?;
    let meta = DensityMetadata {
        cutoff: rho.cutoff().n_max(),
        ..meta.clone()
    };
    write_toml(&sidecar_path(path), &meta)
}

/// Reads a density matrix; the sidecar is optional.
pub fn read_density(path: &Path) -> CliResult<(DensityOperator, Option<DensityMetadata>)> {
    let text = read_text(path)?;
    let first = text.lines().next().unwrap_or("");
    let columns = first.split(',').count();
    if first.is_empty() || columns % 2 != 0 {
        return Err(CliError::format(
            path,
            "header must list re_j,im_j column pairs",
        ));
    }
    let d = columns / 2;
    let header = density_header(d);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_numeric_csv(path, &header)?;
    if rows.len() != d {
        return Err(CliError::format(
            path,
            format!("expected {d} rows, found {}", rows.len()),
        ));
    }
    let mut m = CMatrix::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..d {
            m[(i, j)] = Complex64::new(row[2 * j], row[2 * j + 1]);
        }
    }
    let cutoff = FockCutoff::new(d - 1).map_err(|e| CliError::format(path, e))?;
    let rho = DensityOperator::new(m, cutoff).map_err(|e| CliError::format(path, e))?;
    let sidecar = sidecar_path(path);
    let meta = if sidecar.exists() {
        let meta: DensityMetadata = read_toml(&sidecar)?;
        if meta.cutoff != cutoff.n_max() {
            return Err(CliError::format(
                &sidecar,
                format!("cutoff {} disagrees with the {d}x{d} matrix", meta.cutoff),
            ));
        }
        Some(meta)
    } else {
        None
    };
    Ok((rho, meta))
}

pub const CURVE_HEADER: [&str; 4] = [
    "n_max",
    "rate_hz",
    "fidelity_at_creation",
    "fidelity_after_readout",
];

pub fn write_curve(path: &Path, rows: &[CurveRow]) -> CliResult<()> {
    let bytes = csv_bytes(&CURVE_HEADER, |w| {
        for r in rows {
            w.write_record([
                r.n_max.to_string(),
                r.rate_hz.to_string(),
                r.fidelity_at_creation.to_string(),
                r.fidelity_after_readout.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_curve(path: &Path) -> CliResult<Vec<CurveRow>> {
    read_numeric_csv(path, &CURVE_HEADER)?
        .into_iter()
        .map(|r| {
            if r[0] < 0.0 || r[0].fract() != 0.0 {
                return Err(CliError::format(
                    path,
                    format!("n_max must be a whole number, got {}", r[0]),
                ));
            }
            Ok(CurveRow {
                n_max: r[0] as u32,
                rate_hz: r[1],
                fidelity_at_creation: r[2],
                fidelity_after_readout: r[3],
            })
        })
        .collect()
}

pub const WIGNER_HEADER: [&str; 3] = ["x", "p", "w"];

/// Grid rows in `p`-major order, matching [`WignerGrid::values`].
pub fn write_wigner(path: &Path, grid: &WignerGrid) -> CliResult<()> {
    let bytes = csv_bytes(&WIGNER_HEADER, |w| {
        for (ip, p) in grid.ps.iter().enumerate() {
            for (ix, x) in grid.xs.iter().enumerate() {
                w.write_record([x.to_string(), p.to_string(), grid.at(ix, ip).to_string()])?;
            }
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_wigner(path: &Path) -> CliResult<WignerGrid> {
    let rows = read_numeric_csv(path, &WIGNER_HEADER)?;
    let mut xs: Vec<f64> = Vec::new();
    for r in &rows {
        if xs.first() == Some(&r[0]) {
            break;
        }
        xs.push(r[0]);
    }
    if xs.is_empty() || rows.len() % xs.len() != 0 {
        return Err(CliError::format(
            path,
            "rows do not form a rectangular grid",
        ));
    }
    let ps: Vec<f64> = rows.iter().step_by(xs.len()).map(|r| r[1]).collect();
    for (i, r) in rows.iter().enumerate() {
        if r[0] != xs[i % xs.len()] || r[1] != ps[i / xs.len()] {
            return Err(CliError::format(
                path,
                format!("line {}: grid point out of order", i + 2),
            ));
        }
    }
    Ok(WignerGrid {
        xs,
        ps,
        values: rows.iter().map(|r| r[2]).collect(),
    })
}

pub const HISTOGRAM_HEADER: [&str; 2] = ["storage_trips", "successes"];

pub fn write_histogram(path: &Path, histogram: &[u64]) -> CliResult<()> {
    let bytes = csv_bytes(&HISTOGRAM_HEADER, |w| {
        for (n, c) in histogram.iter().enumerate() {
            w.write_record([n.to_string(), c.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_histogram(path: &Path) -> CliResult<Vec<u64>> {
    read_numeric_csv(path, &HISTOGRAM_HEADER)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r[0] != i as f64 || r[1] < 0.0 || r[1].fract() != 0.0 {
                return Err(CliError::format(
                    path,
                    format!("line {}: malformed row", i + 2),
                ));
            }
            Ok(r[1] as u64)
        })
        .collect()
}

/// Generic headed table of numbers.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let bytes = csv_bytes(header, |w| {
        for r in rows {
            w.write_record(r.iter().map(f64::to_string))?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

/// Reads a table written by [`write_table`], returning header and rows.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_text(path)?;
    let header: Vec<String> = text
        .lines()
        .next()
        .unwrap_or("")
        .split(',')
        .map(str::to_owned)
        .collect();
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = read_numeric_csv(path, &names)?;
    Ok((header, rows))
}

pub const LIKELIHOOD_HEADER: [&str; 2] = ["iteration", "log_likelihood"];

pub fn write_likelihood(path: &Path, trace: &[f64]) -> CliResult<()> {
    let bytes = csv_bytes(&LIKELIHOOD_HEADER, |w| {
        for (i, l) in trace.iter().enumerate() {
            w.write_record([i.to_string(), l.to_string()])?;
        }
        Ok(())
    })?;
    write_atomic(path, &bytes)
}

pub fn read_likelihood(path: &Path) -> CliResult<Vec<f64>> {
    Ok(read_numeric_csv(path, &LIKELIHOOD_HEADER)?
        .into_iter()
        .map(|r| r[1])
        .collect())
}

/// One `key=value` record per line: `pulse=.. kind=.. [storage_trips=..]`.
pub fn format_event(e: &TimelineEvent) -> String {
    match e.storage_trips {
        Some(n) => format!(
            "pulse={} kind={} storage_trips={n}",
            e.pulse_index,
            e.kind.as_str()
        ),
        None => format!("pulse={} kind={}", e.pulse_index, e.kind.as_str()),
    }
}

pub fn parse_event(line: &str) -> Result<TimelineEvent, String> {
    let mut pulse = None;
    let mut kind = None;
    let mut storage_trips = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("`{field}` is not key=value"))?;
        match key {
            "pulse" => pulse = Some(value.parse::<u64>().map_err(|e| format!("pulse: {e}"))?),
            "kind" => {
                kind =
                    Some(EventKind::parse(value).ok_or_else(|| format!("unknown kind `{value}`"))?)
            }
            "storage_trips" => {
                storage_trips = Some(
                    value
                        .parse::<u32>()
                        .map_err(|e| format!("storage_trips: {e}"))?,
                )
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
    }
    Ok(TimelineEvent {
        kind: kind.ok_or("missing kind")?,
        pulse_index: pulse.ok_or("missing pulse")?,
        storage_trips,
    })
}

pub fn write_events(path: &Path, events: &[TimelineEvent]) -> CliResult<()> {
    let mut out = String::with_capacity(events.len() * 32);
    for e in events {
        out.push_str(&format_event(e));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_events(path: &Path) -> CliResult<Vec<TimelineEvent>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_event(l).map_err(|m| CliError::format(path, format!("line {}: {m}", i + 1)))
        })
        .collect()
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = toml::to_string(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    toml::from_str(&read_text(path)?).map_err(|e| CliError::format(path, e.to_string().trim_end()))
}
