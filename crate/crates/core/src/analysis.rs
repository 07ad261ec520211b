//! Numbers extracted from decay traces: exponential rates, plateau
//! diagnostics and trace-to-trace deviations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::DecayTrace;

pub const SURVIVAL_FLOOR: f64 = 1e-12;
pub const MIN_FIT_SAMPLES: usize = 20;
/// Relative rise above the running minimum tolerated inside a fit window.
pub const RIPPLE_TOLERANCE: f64 = 0.1;
/// Earliest default fit time, past the short-time transient.
pub const DEFAULT_FIT_START: f64 = 5.0;

/// Least-squares line through `ln |c_a|^2`. The probability rate is the
/// negated slope; the amplitude rate is half of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate_probability: f64,
    pub rate_amplitude: f64,
    pub intercept: f64,
    pub window: [f64; 2],
    pub residual_rms: f64,
    pub n_samples: usize,
}

pub fn fit_exponential_rate(trace: &DecayTrace, window: [f64; 2]) -> Result<RateFit> {
    fit_exponential_rate_slices(&trace.times, &trace.survival, window)
}

pub fn fit_exponential_rate_slices(times: &[f64], survival: &[f64], window: [f64; 2]) -> Result<RateFit> {
    let [lo, hi] = window;
    if !(lo < hi) {
        return Err(Error::param("window", format!("empty window [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut first_dropped = None;
    let mut running_min = f64::INFINITY;
    for (&t, &s) in times.iter().zip(survival) {
        if t < lo || t > hi {
            continue;
        }
        if !(s > SURVIVAL_FLOOR) {
            first_dropped.get_or_insert(t);
            continue;
        }
        if s > running_min * (1.0 + RIPPLE_TOLERANCE) {
            return Err(Error::NotDecaying {
                t,
                ripple: s / running_min - 1.0,
            });
        }
        running_min = running_min.min(s);
        xs.push(t);
        ys.push(s.ln());
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(match first_dropped {
            Some(t) => Error::NonPositiveSurvival { t },
            None => Error::InsufficientSamples {
                needed: MIN_FIT_SAMPLES,
                found: xs.len(),
            },
        });
    }

    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residual_rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        rate_probability: -slope,
        rate_amplitude: -0.5 * slope,
        intercept,
        window,
        residual_rms,
        n_samples: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauMetric {
    /// Largest `|P(t) - P(0)| / P(0)` over `[0, 0.9 delta_t]`.
    pub max_rel_dev: f64,
    /// First sample time where `P(t) < 0.9 P(0)`, if any.
    pub plateau_end_est: Option<f64>,
}

pub fn plateau_metric(trace: &DecayTrace, delta_t: f64) -> Result<PlateauMetric> {
    if !(delta_t > 0.0) {
        return Err(Error::param("delta_t", "must be > 0"));
    }
    let t_end = trace.times.last().copied().unwrap_or(f64::NEG_INFINITY);
    let needed = 1.5 * delta_t;
    if t_end < needed {
        return Err(Error::TraceTooShort { t_end, needed });
    }
    let p0 = trace.survival[0];
    let max_rel_dev = trace
        .times
        .iter()
        .zip(&trace.survival)
        .take_while(|(t, _)| **t <= 0.9 * delta_t)
        .map(|(_, p)| (p - p0).abs() / p0)
        .fold(0.0, f64::max);
    let plateau_end_est = trace
        .times
        .iter()
        .zip(&trace.survival)
        .find(|(_, p)| **p < 0.9 * p0)
        .map(|(t, _)| *t);
    Ok(PlateauMetric {
        max_rel_dev,
        plateau_end_est,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceComparison {
    pub max_abs_dev: f64,
    pub rms_dev: f64,
    pub n_samples: usize,
    pub resampled: bool,
}

/// Survival-probability deviation between two traces. With differing time
/// grids, `b` is linearly interpolated onto the times of `a` inside its span
/// when `resample` is set.
pub fn compare_traces(a: &DecayTrace, b: &DecayTrace, resample: bool) -> Result<TraceComparison> {
    let pairs: Vec<(f64, f64)> = if a.times == b.times {
        a.survival.iter().copied().zip(b.survival.iter().copied()).collect()
    } else if resample {
        a.times
            .iter()
            .zip(&a.survival)
            .filter_map(|(&t, &p)| b.survival_at(t).map(|q| (p, q)))
            .collect()
    } else {
        return Err(Error::GridMismatch);
    };
    if pairs.is_empty() {
        return Err(Error::GridMismatch);
    }
    let (mut max_abs_dev, mut sum_sq) = (0.0f64, 0.0);
    for (p, q) in &pairs {
        let d = (p - q).abs();
        max_abs_dev = max_abs_dev.max(d);
        sum_sq += d * d;
    }
    Ok(TraceComparison {
        max_abs_dev,
        rms_dev: (sum_sq / pairs.len() as f64).sqrt(),
        n_samples: pairs.len(),
        resampled: a.times != b.times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rate_amplitude: Option<f64>,
    pub rate_probability: Option<f64>,
    pub residual_rms: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub plateau: Option<PlateauMetric>,
    pub verdicts: Vec<Verdict>,
}

impl AnalysisReport {
    pub fn from_fit(fit: Option<&RateFit>) -> Self {
        AnalysisReport {
            rate_amplitude: fit.map(|f| f.rate_amplitude),
            rate_probability: fit.map(|f| f.rate_probability),
            residual_rms: fit.map(|f| f.residual_rms),
            window: fit.map(|f| f.window),
            plateau: None,
            verdicts: Vec::new(),
        }
    }

    /// Adds a verdict on `|value - target| <= rel_tol |target|`.
    pub fn check_relative(&mut self, name: &str, value: f64, target: f64, rel_tol: f64) {
        let passed = (value - target).abs() <= rel_tol * target.abs();
        self.verdicts.push(Verdict {
            name: name.to_string(),
            passed,
            detail: format!("{value:.6} vs {target:.6} (tolerance {:.1}%)", 100.0 * rel_tol),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
