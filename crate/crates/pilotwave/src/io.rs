//! Artifact encoding. CSV files are UTF-8 with a header row and `.` as the
//! decimal mark; floats use the shortest round-trip representation.

use std::fmt::Write as _;

use pilotwave_core::pilot::{Ensemble, EquivarianceStat};
use pilotwave_core::wavefields::ComplexField;
use serde::Serialize;

/// One output file, relative to the run directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: Vec<Artifact>,
}

impl Artifacts {
    pub fn csv<R: Serialize>(&mut self, path: &str, rows: impl IntoIterator<Item = R>) {
        self.push(path, csv_bytes(rows));
    }

    pub fn json<T: Serialize>(&mut self, path: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
        bytes.push(b'\n');
        self.push(path, bytes);
    }

    pub fn push(&mut self, path: &str, bytes: Vec<u8>) {
        self.files.push(Artifact { path: path.to_string(), bytes });
    }

    pub fn get(&self, path: &str) -> Option<&Artifact> {
        self.files.iter().find(|a| a.path == path)
    }
}

pub fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

#[derive(Serialize)]
struct FieldRow {
    i0: usize,
    i1: usize,
    x: f64,
    y: f64,
    re: f64,
    im: f64,
}

/// Field snapshot: `#`-prefixed `key=value` header lines (dims, extents,
/// n, time, hbar, mass), then one CSV row per node in row-major order
/// (`i1` fastest) with lab coordinates and lab-frame amplitudes.
pub fn field_snapshot(psi: &ComplexField) -> Vec<u8> {
    let lab = psi.to_lab();
    let grid = lab.grid();
    let mut head = String::new();
    let axes = &grid.axes()[..grid.dims()];
    let extents: Vec<String> = axes.iter().map(|a| format!("{},{}", a.min, a.max)).collect();
    let n: Vec<String> = axes.iter().map(|a| a.n.to_string()).collect();
    writeln!(head, "# dims={}", grid.dims()).unwrap();
    writeln!(head, "# extents={}", extents.join(";")).unwrap();
    writeln!(head, "# n={}", n.join(",")).unwrap();
    writeln!(head, "# time={}", lab.time()).unwrap();
    writeln!(head, "# hbar={}", lab.hbar()).unwrap();
    writeln!(head, "# mass={}", lab.mass()).unwrap();
    let rows = lab.amplitudes().iter().enumerate().map(|(idx, z)| {
        let (i0, i1) = grid.unravel(idx);
        let p = grid.node(idx);
        FieldRow { i0, i1, x: p[0], y: p[1], re: z.re, im: z.im }
    });
    let mut bytes = head.into_bytes();
    bytes.extend(csv_bytes(rows));
    bytes
}

#[derive(Serialize)]
struct TrajRow {
    traj_id: usize,
    t: f64,
    x: f64,
    y: f64,
    flag: &'static str,
}

/// `traj_id,t,x,y,flag`; the flag is the trajectory's final state.
pub fn trajectories(ens: &Ensemble) -> Vec<u8> {
    csv_bytes(ens.trajectories.iter().enumerate().flat_map(|(id, tr)| {
        tr.times
            .iter()
            .zip(&tr.positions)
            .map(move |(&t, p)| TrajRow { traj_id: id, t, x: p[0], y: p[1], flag: tr.flag.as_str() })
    }))
}

#[derive(Serialize)]
struct EquivarianceRow {
    t: f64,
    n: usize,
    bins: usize,
    chi2: f64,
    dof: usize,
    p_value: f64,
    passed: bool,
}

pub fn equivariance(stats: &[EquivarianceStat]) -> Vec<u8> {
    csv_bytes(stats.iter().map(|s| EquivarianceRow {
        t: s.time,
        n: s.n,
        bins: s.bins,
        chi2: s.chi2,
        dof: s.dof,
        p_value: s.p_value,
        passed: s.passed,
    }))
}
