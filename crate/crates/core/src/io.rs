//! File formats.
//!
//! * Trajectory CSV: `k,x0,...,x{d-1},choice`, one row per state.
//! * Histogram CSV: `dim,bin_lo,bin_hi,proportion`.
//! * JSON documents (problems, reports, diagnostics).
//!
//! Every float is written with 17 significant digits, and every file is
//! written to a temporary sibling and renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::ergodics::EmpiricalMeasure;
use crate::error::{Error, Result};
use crate::ifs::{StateVector, Trajectory};

/// `{:.16e}`: 17 significant digits, exact round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON formatter that prints floats with 17 significant digits.
struct SigFigFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SigFigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(format_float(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
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

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Write `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let d = traj.dim();
    let mut header = vec!["k".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.push("choice".into());
    w.write_record(&header).map_err(|e| csv_err(Path::new("<trajectory>"), e))?;
    for (k, s) in traj.states.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(s.as_slice().iter().map(|&v| format_float(v)));
        // The choice column holds the map applied to reach this state.
        let choice = match (&traj.selections, k) {
            (Some(sel), k) if k > 0 => sel[k - 1].to_string(),
            _ => String::new(),
        };
        row.push(choice);
        w.write_record(&row).map_err(|e| csv_err(Path::new("<trajectory>"), e))?;
    }
    w.into_inner().map_err(|e| csv_err(Path::new("<trajectory>"), e))
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, &trajectory_csv(traj)?)
}

/// Parse a trajectory CSV. The seed is not part of the format and is set to 0.
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let n = header.len();
    if n < 3 || &header[0] != "k" || &header[n - 1] != "choice" {
        return Err(csv_err(path, "expected header k,x0,...,choice"));
    }
    let d = n - 2;
    let mut states = Vec::new();
    let mut choices = Vec::new();
    for (row_index, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let k: usize = rec[0].parse().map_err(|e| csv_err(path, e))?;
        if k != row_index {
            return Err(csv_err(path, format!("row {row_index} has k = {k}")));
        }
        let coords = (1..=d)
            .map(|i| rec[i].parse::<f64>().map_err(|e| csv_err(path, e)))
            .collect::<Result<Vec<_>>>()?;
        states.push(StateVector::new(coords)?);
        let c = &rec[n - 1];
        if !c.is_empty() {
            choices.push(c.parse::<usize>().map_err(|e| csv_err(path, e))?);
        }
    }
    let mut traj = Trajectory::from_states(states, 0)?;
    if choices.len() + 1 == traj.len() {
        traj.selections = Some(choices);
    } else if !choices.is_empty() {
        return Err(csv_err(path, "choice column is partially filled"));
    }
    Ok(traj)
}

pub fn histogram_csv(m: &EmpiricalMeasure, dims: impl IntoIterator<Item = usize>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| csv_err(Path::new("<histogram>"), e);
    w.write_record(["dim", "bin_lo", "bin_hi", "proportion"]).map_err(e)?;
    for dim in dims {
        for (bin, p) in m.proportions(dim).iter().enumerate() {
            let (lo, hi) = m.bin_bounds(dim, bin);
            w.write_record([dim.to_string(), format_float(lo), format_float(hi), format_float(*p)])
                .map_err(e)?;
        }
    }
    w.into_inner().map_err(|err| csv_err(Path::new("<histogram>"), err))
}

pub fn write_histogram_csv(path: &Path, m: &EmpiricalMeasure) -> Result<()> {
    write_atomic(path, &histogram_csv(m, 0..m.dims())?)
}

/// Histogram CSV restricted to one dimension.
pub fn write_histogram_dim_csv(path: &Path, m: &EmpiricalMeasure, dim: usize) -> Result<()> {
    write_atomic(path, &histogram_csv(m, [dim])?)
}

/// Parse a histogram CSV. Dimensions must appear in ascending, contiguous
/// blocks; the sample count is not stored and is reported as 0.
pub fn read_histogram_csv(path: &Path) -> Result<Vec<(usize, Vec<f64>, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["dim", "bin_lo", "bin_hi", "proportion"] {
        return Err(csv_err(path, "expected header dim,bin_lo,bin_hi,proportion"));
    }
    let mut out: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let dim: usize = rec[0].parse().map_err(|e| csv_err(path, e))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|e| csv_err(path, e));
        let (lo, hi, p) = (f(1)?, f(2)?, f(3)?);
        match out.last_mut() {
            Some((d, edges, props)) if *d == dim => {
                if *edges.last().expect("non-empty") != lo {
                    return Err(csv_err(path, "bins are not contiguous"));
                }
                edges.push(hi);
                props.push(p);
            }
            _ => out.push((dim, vec![lo, hi], vec![p])),
        }
    }
    if out.is_empty() {
        return Err(csv_err(path, "no rows"));
    }
    for (_, edges, props) in &out {
        EmpiricalMeasure::from_parts(vec![edges.clone()], vec![props.clone()], 0).map_err(|e| csv_err(path, e))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodics::{build_histogram, BinRange};
    use crate::ifs::{bernoulli_ifs, simulate};

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, -7.25e-300, 6.02e23] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_floats_round_trip() {
        let v = vec![0.1, 2.0 / 3.0, -1e-9];
        let s = to_json_string(&v).unwrap();
        assert!(s.contains("6.6666666666666663e-1"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn trajectory_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = simulate(&bernoulli_ifs(), &StateVector::scalar(0.3).unwrap(), 50, 1).unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory_csv(&path, &t).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,x0,choice\n0,2.9999999999999999e-1,\n"));
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.states, t.states);
        assert_eq!(back.selections, t.selections);
    }

    #[test]
    fn histogram_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = simulate(&bernoulli_ifs(), &StateVector::scalar(0.3).unwrap(), 500, 1).unwrap();
        let m = build_histogram(&t, 10, &BinRange::Auto).unwrap();
        let path = dir.path().join("h.csv");
        write_histogram_csv(&path, &m).unwrap();
        let back = read_histogram_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].1, m.edges(0));
        assert_eq!(back[0].2, m.proportions(0));
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.json");
        write_json(&p, &vec![1.0]).unwrap();
        write_json(&p, &vec![2.0]).unwrap();
        let entries: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(entries.len(), 1);
        let v: Vec<f64> = read_json(&p).unwrap();
        assert_eq!(v, vec![2.0]);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_trajectory_csv(&p).is_err());
        assert!(read_histogram_csv(&p).is_err());
    }
}
