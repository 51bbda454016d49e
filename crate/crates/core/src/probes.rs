//! Current and voltage probes and their CSV output.

use std::io::Write;

use crate::grid::{h_circulation, FieldSet};
use crate::wires::Edge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeKind {
    /// Ampère-loop current through one edge.
    Current,
    /// Line integral of E along an edge chain.
    Voltage,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Current => "current",
            ProbeKind::Voltage => "voltage",
        }
    }
}

/// An edge traversed along (`+1`) or against (`−1`) its axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedEdge {
    pub edge: Edge,
    pub dir: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub name: String,
    /// One edge for current probes, a contiguous chain for voltage probes.
    pub path: Vec<DirectedEdge>,
}

impl ProbeSpec {
    pub fn measure(&self, fields: &FieldSet, delta: f64) -> f64 {
        match self.kind {
            ProbeKind::Current => measure_current(fields, &self.path[0], delta),
            ProbeKind::Voltage => measure_voltage(fields, &self.path, delta),
        }
    }
}

/// Circulation of H around the edge times Δ, in the edge direction.
pub fn measure_current(fields: &FieldSet, e: &DirectedEdge, delta: f64) -> f64 {
    e.dir * h_circulation(fields, e.edge.axis, e.edge.at) * delta
}

/// `−Σ E·Δ` along the chain: potential at the end of the path minus the
/// potential at its start.
pub fn measure_voltage(fields: &FieldSet, path: &[DirectedEdge], delta: f64) -> f64 {
    let d = fields.dims;
    -path
        .iter()
        .map(|e| {
            let [i, j, k] = e.edge.at;
            e.dir * fields.e(e.edge.axis)[d.idx(i, j, k)]
        })
        .sum::<f64>()
        * delta
}

/// Probe values at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

/// Writes records as CSV, flushing after every row so an interrupted run
/// leaves a readable prefix.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    /// Writes the comment and header lines. Current probes read H half a
    /// step before the row time; the comment states that offset.
    pub fn new(mut out: W, names: &[String], dt: f64) -> std::io::Result<Self> {
        writeln!(out, "# current columns lag the time column by dt/2 = {:.9e} s", dt / 2.0)?;
        write!(out, "time")?;
        for n in names {
            write!(out, ",{n}")?;
        }
        writeln!(out)?;
        out.flush()?;
        Ok(CsvWriter { out })
    }

    pub fn write(&mut self, rec: &ProbeRecord) -> std::io::Result<()> {
        write!(self.out, "{:.9e}", rec.time)?;
        for v in &rec.values {
            write!(self.out, ",{v:.9e}")?;
        }
        writeln!(self.out)?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
