//! Canonical JSON and CSV emission.
//!
//! JSON keys are sorted and every float is written with 17 significant
//! digits, so equal reports produce equal bytes.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::homotopy::SweepReport;
use crate::index::IndexReport;

/// Pretty layout with floats as `d.ddddddddddddddddde±x`.
struct Canonical<'a>(PrettyFormatter<'a>);

impl Formatter for Canonical<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
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

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Canonical JSON text, newline-terminated.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // Going through Value sorts object keys.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Rows (left:i, σ_i) then (right:i, σ_i), each side descending.
pub fn singular_values_csv(report: &IndexReport) -> String {
    let mut s = String::from("label,value\n");
    for (side, values) in [("left", &report.singular_values_l), ("right", &report.singular_values_r)] {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(s, "{side}:{},{v:.16e}", i + 1);
        }
    }
    s
}

/// Rows (s, index); the index field is empty where it is undefined.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut s = String::from("s,index\n");
    for step in &report.steps {
        let index = step.report.index.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{:.16e},{index}", step.s);
    }
    s
}
