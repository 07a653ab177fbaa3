//! CSV outputs. Column orders are fixed; floats are written with 17
//! significant digits in scientific notation so every value reads back
//! bit-exactly.

use std::path::Path;

use num_complex::Complex64;

use crate::diagnostics::DiagnosticsRecord;
use crate::disorder::SigmaSchedule;
use crate::error::{Error, Result};
use crate::field::{Grid1D, WaveField};

pub const TIMESERIES_HEADER: [&str; 6] = ["t", "power", "height_x0", "centroid", "peak_pos", "peak_height"];
pub const SNAPSHOTS_HEADER: [&str; 5] = ["t", "x", "re", "im", "density"];
pub const SIGMA_HEADER: [&str; 4] = ["segment", "t_start", "x", "sigma"];
pub const SUMMARY_HEADER: [&str; 11] = [
    "kind",
    "epsilon",
    "seed",
    "power_error",
    "signed_mean",
    "mean_abs",
    "rms",
    "l_inf",
    "min_peak_height",
    "final_centroid",
    "status",
];

/// `{:.16e}`: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub kind: String,
    pub epsilon: f64,
    pub seed: u64,
    pub power_error: f64,
    pub signed_mean: f64,
    pub mean_abs: f64,
    pub rms: f64,
    pub l_inf: f64,
    pub min_peak_height: f64,
    pub final_centroid: f64,
    /// `ok`, or the failure reason.
    pub status: String,
}

impl SummaryRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fields(&self) -> [String; 11] {
        [
            self.kind.clone(),
            format_float(self.epsilon),
            self.seed.to_string(),
            format_float(self.power_error),
            format_float(self.signed_mean),
            format_float(self.mean_abs),
            format_float(self.rms),
            format_float(self.l_inf),
            format_float(self.min_peak_height),
            format_float(self.final_centroid),
            self.status.clone(),
        ]
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_timeseries(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::contract("no diagnostics records to write"));
    }
    write_rows(
        path,
        &TIMESERIES_HEADER,
        records.iter().map(|r| {
            [r.t, r.power, r.height_x0, r.centroid, r.peak_pos, r.peak_height].map(format_float)
        }),
    )
}

/// Rows grouped by snapshot, in the given order.
pub fn write_snapshots(path: &Path, snapshots: &[(f64, WaveField)]) -> Result<()> {
    if snapshots.is_empty() {
        return Err(Error::contract("no snapshots to write"));
    }
    write_rows(
        path,
        &SNAPSHOTS_HEADER,
        snapshots.iter().flat_map(|(t, field)| {
            let grid = *field.grid();
            field.values().iter().enumerate().map(move |(i, v)| {
                [*t, grid.x(i), v.re, v.im, v.norm_sqr()].map(format_float)
            })
        }),
    )
}

pub fn write_sigma(path: &Path, schedule: &SigmaSchedule) -> Result<()> {
    let grid = *schedule.grid();
    write_rows(
        path,
        &SIGMA_HEADER,
        schedule.segments().iter().enumerate().flat_map(|(k, seg)| {
            seg.sigma.iter().enumerate().map(move |(i, &s)| {
                [
                    k.to_string(),
                    format_float(seg.t_start),
                    format_float(grid.x(i)),
                    format_float(s),
                ]
            })
        }),
    )
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, &SUMMARY_HEADER, rows.iter().map(SummaryRow::fields))
}

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::contract(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    Ok(r)
}

fn float_at(record: &csv::StringRecord, i: usize, path: &Path) -> Result<f64> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::contract(format!("{}: bad number in column {i}", path.display())))
}

/// Reads a snapshot file back into fields on `grid`.
pub fn read_snapshots(path: &Path, grid: &Grid1D) -> Result<Vec<(f64, WaveField)>> {
    let mut r = reader(path, &SNAPSHOTS_HEADER)?;
    let mut out: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let t = float_at(&rec, 0, path)?;
        let v = Complex64::new(float_at(&rec, 2, path)?, float_at(&rec, 3, path)?);
        match out.last_mut() {
            Some((last_t, values)) if last_t.to_bits() == t.to_bits() && values.len() < grid.len() => {
                values.push(v)
            }
            _ => out.push((t, vec![v])),
        }
    }
    out.into_iter()
        .map(|(t, values)| Ok((t, WaveField::new(*grid, values)?)))
        .collect()
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = reader(path, &TIMESERIES_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let f = |i| float_at(&rec, i, path);
            Ok(DiagnosticsRecord {
                t: f(0)?,
                power: f(1)?,
                height_x0: f(2)?,
                centroid: f(3)?,
                peak_pos: f(4)?,
                peak_height: f(5)?,
            })
        })
        .collect()
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = reader(path, &SUMMARY_HEADER)?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let f = |i| float_at(&rec, i, path);
            Ok(SummaryRow {
                kind: rec.get(0).unwrap_or_default().to_string(),
                epsilon: f(1)?,
                seed: rec
                    .get(2)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::contract("bad seed column"))?,
                power_error: f(3)?,
                signed_mean: f(4)?,
                mean_abs: f(5)?,
                rms: f(6)?,
                l_inf: f(7)?,
                min_peak_height: f(8)?,
                final_centroid: f(9)?,
                status: rec.get(10).unwrap_or_default().to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::record;
    use crate::field::soliton_initial;

    #[test]
    fn single_record_timeseries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("timeseries.csv");
        let grid = Grid1D::new(-5.0, 5.0, 0.5).unwrap();
        let rec = record(0.0, &soliton_initial(&grid, 0.0));
        write_timeseries(&path, &[rec]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "t,power,height_x0,centroid,peak_pos,peak_height");
        assert_eq!(read_timeseries(&path).unwrap(), vec![rec]);
        assert!(write_timeseries(&path, &[]).is_err());
    }

    #[test]
    fn zero_snapshot_has_zero_density() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snapshots.csv");
        let grid = Grid1D::new(0.0, 1.0, 0.25).unwrap();
        write_snapshots(&path, &[(0.0, WaveField::zeros(grid))]).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        for rec in r.records() {
            assert_eq!(rec.unwrap()[4].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn missing_directory_reports_path() {
        let err = write_summary(Path::new("/nonexistent/dir/summary.csv"), &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/summary.csv"));
    }
}
