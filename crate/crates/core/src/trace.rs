//! Time series of the emitter amplitude and their file formats.
//!
//! CSV columns are fixed as `t,re_ca,im_ca,survival,norm`. Floats are
//! written in shortest round-trip form so a re-read trace is bit-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LatticeModel;

pub const TRACE_HEADER: &str = "t,re_ca,im_ca,survival,norm";
pub const FORCING_HEADER: &str = "t,re_F,im_F";
pub const KERNEL_HEADER: &str = "tau,re_G,im_G";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub solver: String,
    pub model: Option<LatticeModel>,
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub gamma_r: Option<f64>,
    pub gamma_i: Option<f64>,
    pub delta_t: Option<f64>,
    pub epsilon: Option<f64>,
    pub c_a0_sq_exact: Option<f64>,
    pub c_a0_sq_closed_form: Option<f64>,
    pub edge_horizon: Option<f64>,
    pub max_norm_drift: Option<f64>,
    pub max_energy_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub c_a: Vec<C64>,
    pub survival: Vec<f64>,
    /// `||psi(t)||`, or NaN for solvers that do not carry the photon field.
    pub norm: Vec<f64>,
    pub metadata: TraceMetadata,
    pub field_snapshots: Option<Vec<Vec<C64>>>,
}

impl DecayTrace {
    pub fn new(times: Vec<f64>, c_a: Vec<C64>, norm: Vec<f64>, metadata: TraceMetadata) -> Self {
        debug_assert_eq!(times.len(), c_a.len());
        debug_assert_eq!(times.len(), norm.len());
        let survival = c_a.iter().map(|c| c.norm_sqr()).collect();
        DecayTrace {
            times,
            c_a,
            survival,
            norm,
            metadata,
            field_snapshots: None,
        }
    }

    /// Trace from a reduced solver, which has no photon field to normalize.
    pub fn from_amplitudes(times: Vec<f64>, c_a: Vec<C64>, metadata: TraceMetadata) -> Self {
        let norm = vec![f64::NAN; times.len()];
        Self::new(times, c_a, norm, metadata)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let c = self.c_a[i];
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(self.times[i]),
                fmt_f64(c.re),
                fmt_f64(c.im),
                fmt_f64(self.survival[i]),
                fmt_f64(self.norm[i])
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == TRACE_HEADER => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header `{TRACE_HEADER}`, found {other:?}"
                )))
            }
        }
        let (mut times, mut c_a, mut norm) = (Vec::new(), Vec::new(), Vec::new());
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))?;
            if cols.len() != 5 {
                return Err(Error::Parse(format!("row {}: expected 5 columns", row + 2)));
            }
            times.push(cols[0]);
            c_a.push(C64::new(cols[1], cols[2]));
            norm.push(cols[4]);
        }
        Ok(Self::new(times, c_a, norm, TraceMetadata::default()))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    /// Largest `| ||psi|| - 1 |` over the samples, ignoring NaN entries.
    pub fn max_norm_deviation(&self) -> f64 {
        self.norm
            .iter()
            .filter(|n| !n.is_nan())
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of the survival probability at `t`.
    pub fn survival_at(&self, t: f64) -> Option<f64> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        if t < first || t > last {
            return None;
        }
        let idx = self.times.partition_point(|&x| x < t);
        if idx < self.len() && self.times[idx] == t {
            return Some(self.survival[idx]);
        }
        let (a, b) = (idx - 1, idx);
        let w = (t - self.times[a]) / (self.times[b] - self.times[a]);
        Some(self.survival[a] * (1.0 - w) + self.survival[b] * w)
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Three-column complex series, e.g. `t,re_F,im_F` or `tau,re_G,im_G`.
pub fn complex_series_csv(header: &str, xs: &[f64], values: &[C64]) -> String {
    let mut out = String::with_capacity(48 * (xs.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (x, v) in xs.iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(*x), fmt_f64(v.re), fmt_f64(v.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_header_and_rows() {
        let t = DecayTrace::new(
            vec![0.0, 0.5],
            vec![C64::new(1.0, 0.0), C64::new(0.6, -0.8)],
            vec![1.0, 1.0],
            TraceMetadata::default(),
        );
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert_eq!(lines.next(), Some("0.0,1.0,0.0,1.0,1.0"));
        assert!(lines.next().unwrap().starts_with("0.5,0.6,-0.8,"));
    }

    #[test]
    fn reduced_trace_writes_nan_norm() {
        let t = DecayTrace::from_amplitudes(vec![0.0], vec![C64::new(1.0, 0.0)], TraceMetadata::default());
        assert!(t.to_csv().ends_with(",NaN\n"));
        assert_eq!(t.max_norm_deviation(), 0.0);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(DecayTrace::from_csv("t,x\n0,1\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec((any::<f64>(), any::<f64>(), 0.0f64..2.0), 1..20)
        ) {
            let times: Vec<f64> = (0..rows.len()).map(|i| i as f64 * 0.1).collect();
            let c_a: Vec<C64> = rows.iter()
                .map(|(a, b, _)| C64::new(if a.is_finite() { *a } else { 0.0 }, if b.is_finite() { *b } else { 0.0 }))
                .collect();
            let norm: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let t = DecayTrace::new(times, c_a, norm, TraceMetadata::default());
            let back = DecayTrace::from_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(back.to_csv(), t.to_csv());
            for i in 0..t.len() {
                prop_assert_eq!(back.c_a[i].re.to_bits(), t.c_a[i].re.to_bits());
                prop_assert_eq!(back.c_a[i].im.to_bits(), t.c_a[i].im.to_bits());
                prop_assert_eq!(back.norm[i].to_bits(), t.norm[i].to_bits());
            }
        }
    }
}
