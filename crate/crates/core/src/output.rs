//! CSV and metadata files written by a run.
//!
//! Every number is written as `{:.16e}` (17 significant digits), which
//! reads back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rhs::State;
use crate::spatial::Grid;

pub const SERIES_FILE: &str = "series.csv";
pub const META_FILE: &str = "run_meta.txt";
pub const SNAPSHOT_COLUMNS: [&str; 7] = ["x", "h", "q", "gamma", "phi", "chi", "s"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `snapshot_t<t>.csv`, with `t` in shortest round-trip notation.
pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t}.csv")
}

fn csv_write_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, e.into())
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Streams diagnostics rows to a `series.csv`-style file.
pub struct SeriesWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl SeriesWriter {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut inner = create(&path)?;
        inner
            .write_record(DiagnosticsRecord::COLUMNS)
            .map_err(|e| csv_write_err(&path, e))?;
        Ok(SeriesWriter { path, inner })
    }

    pub fn write(&mut self, row: &DiagnosticsRecord) -> Result<()> {
        self.inner
            .write_record(row.values().map(fmt_f64))
            .map_err(|e| csv_write_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes a table with a fixed header; every row must match its width.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(header).map_err(|e| csv_write_err(path, e))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.into_iter().map(fmt_f64))
            .map_err(|e| csv_write_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a numeric table, checking the header exactly.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let found = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(bad(format!(
            "header `{}` differs from `{}`",
            found.iter().collect::<Vec<_>>().join(","),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("data row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_series(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    Ok(read_table(path, &DiagnosticsRecord::COLUMNS)?
        .into_iter()
        .map(|r| DiagnosticsRecord::from_values(r.try_into().expect("width checked by csv reader")))
        .collect())
}

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub q: Vec<f64>,
    pub gamma: Vec<f64>,
    pub phi: Vec<f64>,
    pub chi: Vec<f64>,
    pub s: Vec<f64>,
}

impl Snapshot {
    pub fn capture(state: &State, params: &ModelParams, grid: &Grid) -> Result<Self> {
        let (phi, chi) = state.phi_chi(params)?;
        Ok(Snapshot {
            x: grid.x().to_vec(),
            h: state.h.clone(),
            q: state.q.clone(),
            gamma: state.gamma.clone(),
            phi,
            chi,
            s: state.s.clone(),
        })
    }

    pub fn state(&self) -> State {
        State {
            h: self.h.clone(),
            q: self.q.clone(),
            s: self.s.clone(),
            gamma: self.gamma.clone(),
        }
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let rows = (0..snap.x.len()).map(|j| {
        vec![
            snap.x[j],
            snap.h[j],
            snap.q[j],
            snap.gamma[j],
            snap.phi[j],
            snap.chi[j],
            snap.s[j],
        ]
    });
    write_table(path, &SNAPSHOT_COLUMNS, rows)
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let rows = read_table(path, &SNAPSHOT_COLUMNS)?;
    if rows.is_empty() {
        return Err(Error::Snapshot {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    Ok(Snapshot {
        x: col(0),
        h: col(1),
        q: col(2),
        gamma: col(3),
        phi: col(4),
        chi: col(5),
        s: col(6),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
