//! CSV and JSON artifacts, with readers for every format written.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interface::InterfaceMode;
use crate::numerics::SpectrumSample;
use crate::supercell::BandDiagram;
use crate::superspace::SuperspaceMode;
use crate::transfermap::ScanSample;

/// Twelve significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// A rectangular table of text cells with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| fmt_f64(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Io(format!("missing column '{name}'")))
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|e| Error::Io(format!("column '{name}': {e}")))
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(enc)?;
        for r in &self.rows {
            w.write_record(r).map_err(enc)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_csv_str(s: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(s.as_bytes());
        let enc = |e: csv::Error| Error::Io(e.to_string());
        let header = r.headers().map_err(enc)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(enc)?;
        Ok(Self { header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| io_err(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_csv_str(&s)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&s).map_err(|e| io_err(path, e))
}

/// `alpha,band_0,band_1,...`
pub fn band_table(bd: &BandDiagram) -> CsvTable {
    let mut t =
        CsvTable::new(std::iter::once("alpha".to_string()).chain((0..bd.n_bands()).map(|b| format!("band_{b}"))));
    for (a, row) in bd.alphas.iter().zip(&bd.bands) {
        let mut r = vec![*a];
        r.extend(row);
        t.push_floats(&r);
    }
    t
}

/// Band diagram back from its table; only `alphas` and `bands` are restored.
pub fn read_band_table(t: &CsvTable) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let alphas = t.column_f64("alpha")?;
    let cols = (0..t.header.len() - 1)
        .map(|b| t.column_f64(&format!("band_{b}")))
        .collect::<Result<Vec<_>>>()?;
    let bands = (0..alphas.len()).map(|j| cols.iter().map(|c| c[j]).collect()).collect();
    Ok((alphas, bands))
}

/// `index,eigenvalue`
pub fn spectrum_table(s: &SpectrumSample) -> CsvTable {
    let mut t = CsvTable::new(["index", "eigenvalue"]);
    for (k, e) in s.eigenvalues.iter().enumerate() {
        t.push(vec![k.to_string(), fmt_f64(*e)]);
    }
    t
}

/// `alpha,index,eigenvalue` for a sweep.
pub fn sweep_table(alphas: &[f64], spectra: &[SpectrumSample]) -> CsvTable {
    let mut t = CsvTable::new(["alpha", "index", "eigenvalue"]);
    for (a, s) in alphas.iter().zip(spectra) {
        for (k, e) in s.eigenvalues.iter().enumerate() {
            t.push(vec![fmt_f64(*a), k.to_string(), fmt_f64(*e)]);
        }
    }
    t
}

/// `x,y,re_u,im_u`
pub fn superspace_mode_table(m: &SuperspaceMode) -> CsvTable {
    let mut t = CsvTable::new(["x", "y", "re_u", "im_u"]);
    for (x, y, u) in m.grid() {
        t.push_floats(&[x, y, u.re, u.im]);
    }
    t
}

/// `x,u`
pub fn interface_mode_table(m: &InterfaceMode) -> CsvTable {
    let mut t = CsvTable::new(["x", "u"]);
    for (x, u) in m.x.iter().zip(&m.u) {
        t.push_floats(&[*x, *u]);
    }
    t
}

/// `omega,x1,...,xn,certified,N`; `N` is empty when not certified.
pub fn scan_table(samples: &[ScanSample]) -> CsvTable {
    let n = samples.first().map_or(0, |s| s.traces.len());
    let header = std::iter::once("omega".to_string())
        .chain((1..=n).map(|k| format!("x{k}")))
        .chain(["certified".to_string(), "N".to_string()]);
    let mut t = CsvTable::new(header);
    for s in samples {
        let mut r = vec![fmt_f64(s.traces.omega)];
        r.extend(s.traces.values.iter().map(|&x| fmt_f64(x)));
        r.push(s.certificate.is_some().to_string());
        r.push(s.certificate.map_or(String::new(), |c| c.index.to_string()));
        t.push(r);
    }
    t
}
