//! Model JSON and pulse/spectrum CSV formats.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major. CSV
//! numbers are written with 17 significant digits so files diff cleanly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::operator::Operator;
use crate::pulse::{Pulse, Spectrum};
use crate::slh::{Coupling, SlhModel};
use crate::transfer::FrequencyResponse;

type Pair = [f64; 2];

/// On-disk model layout. Either `theta` with `L0`, or the per-channel list
/// `L` for couplings without a common operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub levels: usize,
    pub channels: usize,
    #[serde(rename = "S")]
    pub scattering: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Pair>>,
    #[serde(rename = "L0", default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<Vec<Vec<Pair>>>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<Vec<Vec<Pair>>>>,
    #[serde(rename = "H0")]
    pub h0: Vec<Vec<Pair>>,
}

fn to_c(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn to_pair(z: &Complex64) -> Pair {
    [z.re, z.im]
}

fn matrix_from(rows: &[Vec<Pair>], n: usize, what: &str) -> Result<DMatrix<Complex64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{what} must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| to_c(&rows[i][j])))
}

fn rows_of(m: &DMatrix<Complex64>) -> Vec<Vec<Pair>> {
    m.row_iter().map(|r| r.iter().map(to_pair).collect()).collect()
}

impl ModelFile {
    pub fn from_model(m: &SlhModel) -> Self {
        let (theta, l0, couplings) = match m.coupling() {
            Coupling::Factored { theta, l0 } => (Some(theta.iter().map(to_pair).collect()), Some(rows_of(l0.matrix())), None),
            Coupling::General(ls) => (None, None, Some(ls.iter().map(|l| rows_of(l.matrix())).collect())),
        };
        Self {
            levels: m.levels(),
            channels: m.channels(),
            scattering: rows_of(m.scattering()),
            theta,
            l0,
            couplings,
            h0: rows_of(m.hamiltonian().matrix()),
        }
    }

    pub fn to_model(&self) -> Result<SlhModel> {
        let (n, k) = (self.levels, self.channels);
        if n == 0 || k == 0 {
            return Err(Error::Parse("levels and channels must be positive".into()));
        }
        let s = matrix_from(&self.scattering, k, "S")?;
        let h0 = Operator::new(matrix_from(&self.h0, n, "H0")?)?;
        let coupling = match (&self.theta, &self.l0, &self.couplings) {
            (Some(theta), Some(l0), None) => {
                if theta.len() != k {
                    return Err(Error::Parse(format!("theta must have {k} entries")));
                }
                Coupling::Factored {
                    theta: DVector::from_iterator(k, theta.iter().map(to_c)),
                    l0: Operator::new(matrix_from(l0, n, "L0")?)?,
                }
            }
            (None, None, Some(ls)) => {
                if ls.len() != k {
                    return Err(Error::Parse(format!("L must list {k} operators")));
                }
                Coupling::General(
                    ls.iter()
                        .map(|l| Operator::new(matrix_from(l, n, "L entry")?))
                        .collect::<Result<_>>()?,
                )
            }
            _ => return Err(Error::Parse("give either theta and L0, or L".into())),
        };
        SlhModel::with_coupling(s, coupling, h0)
    }
}

pub fn model_from_json(text: &str) -> Result<SlhModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.to_model()
}

pub fn model_to_json(m: &SlhModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(m)).expect("model serializes");
    s.push('\n');
    s
}

pub fn read_model(path: &Path) -> Result<SlhModel> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn write_model(path: &Path, m: &SlhModel) -> Result<()> {
    fs::write(path, model_to_json(m))?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows `t,ch,re,im`, time-major, channels numbered from 0.
pub fn write_pulse_csv<W: Write>(w: W, p: &Pulse) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "ch", "re", "im"])?;
    for (j, t) in p.grid().points().enumerate() {
        for (k, c) in p.channels().iter().enumerate() {
            out.write_record([num(t), k.to_string(), num(c[j].re), num(c[j].im)])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PulseRow {
    t: f64,
    ch: usize,
    re: f64,
    im: f64,
}

/// Reads the layout written by [`write_pulse_csv`]. Times must be uniformly
/// spaced and every (time, channel) pair present.
pub fn read_pulse_csv<R: Read>(r: R) -> Result<Pulse> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: PulseRow = row?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("pulse file has no samples".into()));
    }
    let n_channels = rows.iter().map(|r| r.ch).max().unwrap_or(0) + 1;
    let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let n = times.len();
    if rows.len() != n * n_channels {
        return Err(Error::Parse(format!(
            "expected {} rows for {n} times and {n_channels} channels, found {}",
            n * n_channels,
            rows.len()
        )));
    }
    if n < 2 {
        return Err(Error::Parse("pulse needs at least two time samples".into()));
    }
    let step = (times[n - 1] - times[0]) / (n - 1) as f64;
    let grid = UniformGrid::new(times[0], step, n)?;
    let mut channels = vec![vec![None; n]; n_channels];
    for row in &rows {
        let pos = (row.t - times[0]) / step;
        let j = pos.round();
        if (pos - j).abs() > 1e-6 {
            return Err(Error::Parse(format!("time {} is off the uniform grid", row.t)));
        }
        let slot = &mut channels[row.ch][j as usize];
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicate sample at t={}, ch={}", row.t, row.ch)));
        }
        *slot = Some(Complex64::new(row.re, row.im));
    }
    let channels = channels
        .into_iter()
        .map(|c| c.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Parse("missing samples".into()))?;
    Pulse::sampled(grid, channels)
}

/// Rows `omega,ch,re,im`.
pub fn write_spectrum_csv<W: Write>(w: W, s: &Spectrum) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["omega", "ch", "re", "im"])?;
    for (i, omega) in s.omegas.points().enumerate() {
        for (k, c) in s.channels.iter().enumerate() {
            out.write_record([num(omega), k.to_string(), num(c[i].re), num(c[i].im)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows `omega,i,j,re,im,abs2` for every matrix element.
pub fn write_response_csv<W: Write>(w: W, r: &FrequencyResponse) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["omega", "i", "j", "re", "im", "abs2"])?;
    for (omega, g) in r.omegas.points().zip(&r.values) {
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let z = g[(i, j)];
                out.write_record([num(omega), i.to_string(), j.to_string(), num(z.re), num(z.im), num(z.norm_sqr())])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
