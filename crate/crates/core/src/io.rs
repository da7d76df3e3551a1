//! CSV formats for trajectories, convergence traces and kernel dumps.
//!
//! Floats are written with 17 significant digits so values round-trip exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{GmeError, Result};
use crate::kernels::TwoTimeKernel;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Populations table: `t, n1, …, n_modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTable {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
}

impl PopulationTable {
    pub fn new(times: Vec<f64>, populations: Vec<Vec<f64>>) -> Self {
        Self { times, populations }
    }

    pub fn n_modes(&self) -> usize {
        self.populations.first().map_or(0, Vec::len)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n_modes()).map(|k| format!("n{k}")));
        w.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.populations) {
            let mut rec = vec![fmt(*t)];
            rec.extend(row.iter().map(|&p| fmt(p)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(GmeError::Format(format!("unexpected trajectory header {headers:?}")));
        }
        for (k, h) in headers.iter().enumerate().skip(1) {
            if h != format!("n{k}") {
                return Err(GmeError::Format(format!("unexpected column {h:?}")));
            }
        }
        let mut times = Vec::new();
        let mut pops = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| GmeError::Format(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            times.push(vals[0]);
            pops.push(vals[1..].to_vec());
        }
        Ok(Self { times, populations: pops })
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

/// Convergence trace: `k, delta`.
pub fn write_convergence<W: Write>(deltas: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "delta"])?;
    for (k, d) in deltas.iter().enumerate() {
        w.write_record([(k + 1).to_string(), fmt(*d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let d = rec.get(1).ok_or_else(|| GmeError::Format("missing delta column".into()))?;
        out.push(d.parse().map_err(|e| GmeError::Format(format!("{d:?}: {e}")))?);
    }
    Ok(out)
}

/// Kernel dump: `i, j, alpha, beta, re, im` with `alpha, beta ∈ {1, 2}`.
/// Only stored components are written.
pub fn write_kernel<W: Write>(kernel: &TwoTimeKernel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "alpha", "beta", "re", "im"])?;
    for a in 0..2 {
        for b in 0..2 {
            if let Some(c) = kernel.component(a, b) {
                for ((i, j), z) in c.indexed_iter() {
                    w.write_record([
                        i.to_string(),
                        j.to_string(),
                        (a + 1).to_string(),
                        (b + 1).to_string(),
                        fmt(z.re),
                        fmt(z.im),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
