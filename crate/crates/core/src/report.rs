//! JSON and CSV serialization with reproducible number formatting.
//!
//! JSON objects are written with sorted keys and every float with 17
//! significant digits, so reports for a fixed configuration are byte-identical.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::birkhoff::BirkhoffGrid;
use crate::error::{Error, Result};
use crate::geodesic::Trajectory;
use crate::metric::MetricModel;

struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_f64(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Pretty JSON with sorted keys; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Digits17(PrettyFormatter::with_indent(b"  ")),
    );
    v.serialize(&mut ser)
        .map_err(|e| Error::InternalConsistency(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::InternalConsistency(e.to_string()))
}

fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::InternalConsistency(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| format_f64(*v)))
            .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InternalConsistency(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InternalConsistency(e.to_string()))
}

/// Columns `x, y, X, Y, tau`, one row per node.
pub fn grid_csv(grid: &BirkhoffGrid) -> Result<String> {
    let g = grid.grid;
    csv_table(
        &["x", "y", "X", "Y", "tau"],
        grid.nodes
            .iter()
            .enumerate()
            .map(|(k, d)| vec![g.x(k / g.ny), g.y(k % g.ny), d.big_x, d.big_y, d.tau]),
    )
}

/// Columns `t, theta, phi, dir1, dir2`, one row per accepted step.
pub fn trajectory_csv(m: &MetricModel, traj: &Trajectory) -> Result<String> {
    csv_table(
        &["t", "theta", "phi", "dir1", "dir2"],
        traj.chart_rows(m).into_iter().map(|r| r.to_vec()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_seventeen_digits() {
        let s =
            to_json(&json!({"b": 1.0/3.0, "a": [1, f64::NAN], "c": {"z": 2, "y": 0.1}})).unwrap();
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.contains("3.3333333333333331e-1"));
        assert!(s.contains("null"));
        assert!(s.contains("1.0000000000000001e-1"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn float_round_trip() {
        for v in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
