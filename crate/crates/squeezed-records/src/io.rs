//! Deterministic CSV and JSON output.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! so that a value survives a round trip and repeated runs diff cleanly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{wigner_gaussian, PhaseGrid, TwoPointSet};

/// `{:.16e}`, with `nan`, `inf` and `-inf` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// A header line followed by one record per row.
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row of numbers.
    pub fn push(&mut self, row: &[f64]) {
        self.rows
            .push(row.iter().map(|&x| format_float(x)).collect());
    }

    /// Appends a row whose leading cells are labels.
    pub fn push_labeled(&mut self, labels: &[&str], row: &[f64]) {
        let mut cells: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        cells.extend(row.iter().map(|&x| format_float(x)));
        self.rows.push(cells);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.header.len() {
                return Err(Error::Serialize(format!(
                    "row {i} has {} cells, header has {}",
                    r.len(),
                    self.header.len()
                )));
            }
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Serialize(format!("{other:?}")),
    }
}

/// Pretty JSON with object keys sorted, ending in a newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    // Going through `Value` sorts every map by key.
    let v = serde_json::to_value(value).map_err(|e| Error::Serialize(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// One-sigma ellipse of a single-mode Wigner function in the scaled
/// variables `(φk^{3/2}, πk^{−3/2})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerEllipse {
    pub time: f64,
    /// Angle of the major axis from the `φ` axis.
    pub theta: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub axes_ratio: f64,
    /// `√det Σ = area/π`; one half for a pure state.
    pub sqrt_det: f64,
}

impl WignerEllipse {
    pub const HEADER: [&'static str; 6] = [
        "time",
        "theta",
        "semi_major",
        "semi_minor",
        "axes_ratio",
        "sqrt_det",
    ];

    pub fn new(time: f64, k: f64, tp: &TwoPointSet) -> Result<Self> {
        tp.check_positive()?;
        if !(k > 0.0) {
            return Err(crate::error::domain("k must be positive"));
        }
        let k3 = k * k * k;
        let (a, b, c) = (tp.phi_phi * k3, tp.pi_pi / k3, tp.phi_pi);
        let det = tp.determinant();
        if !(det > 0.0) {
            return Err(Error::NotPositiveDefinite(format!("{tp:?}")));
        }
        let half_tr = 0.5 * (a + b);
        let rad = (0.25 * (a - b) * (a - b) + c * c).sqrt();
        let lmax = half_tr + rad;
        let lmin = det / lmax;
        Ok(Self {
            time,
            theta: 0.5 * (2.0 * c).atan2(a - b),
            semi_major: lmax.sqrt(),
            semi_minor: lmin.sqrt(),
            axes_ratio: (lmax / lmin).sqrt(),
            sqrt_det: det.sqrt(),
        })
    }

    pub fn row(&self) -> [f64; 6] {
        [
            self.time,
            self.theta,
            self.semi_major,
            self.semi_minor,
            self.axes_ratio,
            self.sqrt_det,
        ]
    }
}

/// Writes Wigner values for each time slice to `path` and the matching
/// one-sigma ellipses next to it as `<stem>_ellipses.csv`.
pub fn emit_wigner_contours(
    k: f64,
    series: &[(f64, TwoPointSet)],
    grid: PhaseGrid,
    path: &Path,
) -> Result<(PathBuf, Vec<WignerEllipse>)> {
    let mut values = CsvTable::new(&["time", "phi", "pi", "wigner"]);
    let mut ellipses = CsvTable::new(&WignerEllipse::HEADER);
    let mut out = Vec::with_capacity(series.len());
    for (t, tp) in series {
        let w = wigner_gaussian(tp, grid)?;
        for (i, &phi) in w.phi.iter().enumerate() {
            for (j, &pi) in w.pi.iter().enumerate() {
                values.push(&[*t, phi, pi, w.at(i, j)]);
            }
        }
        let e = WignerEllipse::new(*t, k, tp)?;
        ellipses.push(&e.row());
        out.push(e);
    }
    values.write(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("wigner");
    let epath = path.with_file_name(format!("{stem}_ellipses.csv"));
    ellipses.write(&epath)?;
    Ok((epath, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{closed_form_a_inflation, two_point_from_a};

    #[test]
    fn float_format() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.25), "-2.5000000000000000e-1");
        assert_eq!(format_float(f64::INFINITY), "inf");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_round_trip_and_shape_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(&[1.0, 2.0]);
        t.write(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "a,b\n1.0000000000000000e0,2.0000000000000000e0\n"
        );
        t.push(&[1.0]);
        assert!(t.write(&p).is_err());
    }

    #[test]
    fn json_keys_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let s = to_json_string(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }

    #[test]
    fn vacuum_ellipse_is_circular() {
        let k: f64 = 2.0;
        let tp = TwoPointSet::new(0.5 / k.powi(3), 0.5 * k.powi(3), 0.0).unwrap();
        let e = WignerEllipse::new(0.0, k, &tp).unwrap();
        assert!((e.axes_ratio - 1.0).abs() < 1e-6);
        assert!((e.sqrt_det - 0.5).abs() < 1e-12);
    }

    #[test]
    fn superhorizon_axes_ratio() {
        let tp = two_point_from_a(closed_form_a_inflation(1.0, -0.01).unwrap()).unwrap();
        let e = WignerEllipse::new(-0.01, 1.0, &tp).unwrap();
        assert!((e.axes_ratio / 1e4 - 1.0).abs() < 1e-3, "{}", e.axes_ratio);
        assert!((e.sqrt_det - 0.5).abs() < 1e-9);
    }

    #[test]
    fn contour_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let series: Vec<_> = [-10.0, -1.0, -0.1]
            .iter()
            .map(|&t| {
                (
                    t,
                    two_point_from_a(closed_form_a_inflation(1.0, t).unwrap()).unwrap(),
                )
            })
            .collect();
        let (ep, es) = emit_wigner_contours(1.0, &series, PhaseGrid::default(), &p).unwrap();
        assert_eq!(es.len(), 3);
        assert!(es.iter().all(|e| (e.sqrt_det - 0.5).abs() < 1e-9));
        let text = std::fs::read_to_string(ep).unwrap();
        assert_eq!(text.lines().count(), 4);
        let grid = std::fs::read_to_string(p).unwrap();
        assert_eq!(grid.lines().count(), 1 + 3 * 129 * 129);
    }
}
