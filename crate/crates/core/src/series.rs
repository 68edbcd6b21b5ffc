//! Named time series and parameter sweeps, the currency between solvers,
//! scenarios and the output layer.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};

/// Grids are considered identical when every time agrees to this absolute tolerance (ns).
const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Time grid plus named real-valued channels of equal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    t: Vec<f64>,
    channels: Vec<Channel>,
    metadata: BTreeMap<String, serde_json::Value>,
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::invalid(
            name,
            format!("non-finite value at index {k}"),
        )),
        None => Ok(()),
    }
}

impl TimeSeries {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        check_finite("t", &t)?;
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("t", "times must increase strictly"));
        }
        Ok(Self {
            t,
            channels: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn from_grid(grid: &TimeGrid) -> Self {
        Self {
            t: grid.times(),
            channels: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Add or replace a channel.
    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.t.len() {
            return Err(Error::DimensionMismatch {
                context: "time-series channel",
                expected: self.t.len(),
                found: values.len(),
            });
        }
        check_finite(&name, &values)?;
        match self.channels.iter_mut().find(|c| c.name == name) {
            Some(c) => c.values = values,
            None => self.channels.push(Channel { name, values }),
        }
        Ok(())
    }

    pub fn with_channel(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.insert(name, values)?;
        Ok(self)
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    pub fn metadata(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<serde_json::Value>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.t.len() == other.t.len()
            && self
                .t
                .iter()
                .zip(&other.t)
                .all(|(a, b)| (a - b).abs() <= GRID_TOL)
    }

    pub fn ensure_same_grid(&self, other: &TimeSeries) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} points on [{:?}, {:?}] vs {} points on [{:?}, {:?}]",
                self.len(),
                self.t.first(),
                self.t.last(),
                other.len(),
                other.t.first(),
                other.t.last()
            )))
        }
    }

    /// CSV with a `t` column followed by every channel in insertion order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.channels {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (k, t) in self.t.iter().enumerate() {
            write!(out, "{}", fmt_value(*t)).unwrap();
            for c in &self.channels {
                write!(out, ",{}", fmt_value(c.values[k])).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed 17 significant digits, enough to round-trip any f64.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// y(x) over a strictly monotone parameter grid, with optional error bars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub x_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
}

impl SweepCurve {
    pub fn new(
        x_label: impl Into<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        y_err: Option<Vec<f64>>,
    ) -> Result<Self> {
        let x_label = x_label.into();
        if y.len() != x.len() {
            return Err(Error::DimensionMismatch {
                context: "sweep curve",
                expected: x.len(),
                found: y.len(),
            });
        }
        if let Some(e) = &y_err {
            if e.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    context: "sweep curve errors",
                    expected: x.len(),
                    found: e.len(),
                });
            }
            check_finite("y_err", e)?;
        }
        check_finite(&x_label, &x)?;
        check_finite("y", &y)?;
        let increasing = x.windows(2).all(|w| w[1] > w[0]);
        let decreasing = x.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid(
                x_label,
                "sweep grid must be strictly monotone",
            ));
        }
        Ok(Self {
            x_label,
            x,
            y,
            y_err,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},y", self.x_label);
        if self.y_err.is_some() {
            out.push_str(",y_err");
        }
        out.push('\n');
        for k in 0..self.x.len() {
            write!(out, "{},{}", fmt_value(self.x[k]), fmt_value(self.y[k])).unwrap();
            if let Some(e) = &self.y_err {
                write!(out, ",{}", fmt_value(e[k])).unwrap();
            }
            out.push('\n');
        }
        out
    }
}
