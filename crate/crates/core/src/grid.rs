use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniformly spaced, strictly increasing sample points `start + k·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument("grid must have at least one point".into()));
        }
        if !start.is_finite() || !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite start and positive step, got start={start}, step={step}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `len` points from `first` to `last` inclusive.
    pub fn linspace(first: f64, last: f64, len: usize) -> Result<Self> {
        if len == 1 {
            return Self::new(first, 1.0, 1);
        }
        if !(last > first) {
            return Err(Error::InvalidArgument(format!("empty range {first}:{last}")));
        }
        Self::new(first, (last - first) / (len - 1) as f64, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `len · step`, the extent covered when each point owns one cell.
    pub fn span(&self) -> f64 {
        self.len as f64 * self.step
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.at(k))
    }
}

/// Parses `first:last:len`.
impl FromStr for UniformGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("expected first:last:count, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let first: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let last: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let len: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::linspace(first, last, len)
    }
}

impl fmt::Display for UniformGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.at(self.len - 1), self.len)
    }
}
