//! Reduced emitter dynamics.
//!
//! The exact amplitude equation is the Volterra integro-differential problem
//!
//! ```text
//! dc/dt = F(t) - int_0^t G(t - s) c(s) ds
//! ```
//!
//! and its Markovian limit replaces the memory integral by `gamma c(t)`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::bessel::{bessel_j_orders, negligible_order};
use crate::error::{Error, Result};
use crate::model::{ContinuumModel, LatticeModel};
use crate::state::SpectralAmplitude;

/// Uniform grid `t_n = n * step`, `n = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("step", format!("must be > 0, got {step}")));
        }
        if len < 1 {
            return Err(Error::param("len", "time grid needs at least one point"));
        }
        Ok(TimeGrid { step, len })
    }

    /// Grid covering `[0, t_max]` with the step rounded to the nearest
    /// integer number of points.
    pub fn covering(step: f64, t_max: f64) -> Result<Self> {
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::param("t_max", format!("must be >= 0, got {t_max}")));
        }
        Self::new(step, (t_max / step).round() as usize + 1)
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|n| self.t(n)).collect()
    }
}

/// Drive on the emitter amplitude from the initial photon field. Vanishes
/// for `t < 0` in every variant.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingFunction {
    Zero,
    /// `gamma c_a0` on `[0, delta_t)`, zero afterwards.
    Stepwise {
        gamma: C64,
        c_a0: C64,
        delta_t: f64,
    },
    /// `gamma c_a0 exp(-epsilon t)`.
    Exponential {
        gamma: C64,
        c_a0: C64,
        epsilon: f64,
    },
    /// Bessel series of a Wannier-space photon profile on a lattice.
    FromState {
        photon: Vec<C64>,
        model: LatticeModel,
    },
    /// Uniform samples from `t = 0`, linearly interpolated; zero past the
    /// last sample.
    Tabulated {
        step: f64,
        values: Vec<C64>,
    },
}

impl ForcingFunction {
    pub fn eval(&self, t: f64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        if t < 0.0 {
            return zero;
        }
        match self {
            ForcingFunction::Zero => zero,
            ForcingFunction::Stepwise { gamma, c_a0, delta_t } => {
                if t < *delta_t {
                    gamma * c_a0
                } else {
                    zero
                }
            }
            ForcingFunction::Exponential { gamma, c_a0, epsilon } => gamma * c_a0 * (-epsilon * t).exp(),
            ForcingFunction::FromState { photon, model } => forcing_bessel(photon, model, t),
            ForcingFunction::Tabulated { step, values } => {
                let x = t / step;
                let i = x.floor() as usize;
                if i + 1 < values.len() {
                    let w = x - i as f64;
                    values[i] * (1.0 - w) + values[i + 1] * w
                } else if i + 1 == values.len() && x == i as f64 {
                    values[i]
                } else {
                    zero
                }
            }
        }
    }

    pub fn sample(&self, grid: TimeGrid) -> Vec<C64> {
        (0..grid.len).map(|n| self.eval(grid.t(n))).collect()
    }
}

/// `F(t) = G0 exp(-i (omega_c - omega0) t) sum_l Q_l J_l(2 J t) i^(l-1)`.
///
/// At resonance `i^(l-1) = exp(i k0 (l-1))` with `k0 = pi/2`. The sum runs
/// over the support of `Q` cut at the order where `|J_l(2Jt)| < 1e-16`.
pub fn forcing_bessel(photon: &[C64], model: &LatticeModel, t: f64) -> C64 {
    if t < 0.0 {
        return C64::new(0.0, 0.0);
    }
    let n = (photon.len() / 2) as i64;
    let x = 2.0 * model.hop_j * t;
    let support = photon
        .iter()
        .enumerate()
        .filter(|(_, q)| q.norm_sqr() > 0.0)
        .map(|(i, _)| (i as i64 - n).unsigned_abs() as usize)
        .max();
    let Some(support) = support else {
        return C64::new(0.0, 0.0);
    };
    let cut = support.min(negligible_order(x));
    let bessel = bessel_j_orders(x, cut);

    // i^(l-1) cycles with period 4.
    const I_POW: [C64; 4] = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    let cut = cut as i64;
    let mut acc = C64::new(0.0, 0.0);
    for l in -cut.min(n)..=cut.min(n) {
        let order = l.unsigned_abs() as usize;
        let mut j = bessel[order];
        if l < 0 && order % 2 == 1 {
            j = -j;
        }
        acc += photon[(l + n) as usize] * (I_POW[(l - 1).rem_euclid(4) as usize] * j);
    }
    acc * model.g0_coupling * C64::from_polar(1.0, -model.detuning() * t)
}

/// `F(t) = -i int dk g(k) phi_0(k) exp(-i Omega(k) t)` by the trapezoid rule
/// on the grid of `phi`.
pub fn forcing_quadrature(phi: &SpectralAmplitude, model: &ContinuumModel, t: f64) -> C64 {
    if t < 0.0 {
        return C64::new(0.0, 0.0);
    }
    let dk = phi.dk();
    let sum: C64 = crate::model::k_grid(phi.grid_size())
        .into_iter()
        .zip(&phi.samples)
        .map(|(k, p)| model.coupling(k) * p * C64::from_polar(1.0, -model.offset(k) * t))
        .sum();
    -C64::i() * sum * dk
}

/// Centered moving average over `window` of uniformly sampled `F` starting
/// at `t = 0`.
///
/// The samples are integrated as a piecewise-linear function. Before `t = 0`
/// the forcing is zero, so the full window length is kept there; at the far
/// end the window is truncated to the covered range.
pub fn time_average_forcing(samples: &[C64], step: f64, window: f64) -> Result<Vec<C64>> {
    if !(step > 0.0 && window > 0.0) {
        return Err(Error::param("window", "step and window must be positive"));
    }
    if step >= window / 8.0 {
        return Err(Error::param(
            "step",
            format!("sample spacing {step} must be below window/8 = {}", window / 8.0),
        ));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let mut prefix = Vec::with_capacity(samples.len());
    let mut acc = C64::new(0.0, 0.0);
    prefix.push(acc);
    for pair in samples.windows(2) {
        acc += (pair[0] + pair[1]) * (0.5 * step);
        prefix.push(acc);
    }
    let t_end = (samples.len() - 1) as f64 * step;

    // Integral of the interpolant from 0 to t, t in [0, t_end].
    let integral = |t: f64| -> C64 {
        if t <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let x = t / step;
        let i = (x.floor() as usize).min(samples.len() - 1);
        if i + 1 >= samples.len() {
            return prefix[samples.len() - 1];
        }
        let w = x - i as f64;
        let end_value = samples[i] * (1.0 - w) + samples[i + 1] * w;
        prefix[i] + (samples[i] + end_value) * (0.5 * w * step)
    };

    let half = 0.5 * window;
    Ok((0..samples.len())
        .map(|n| {
            let t = n as f64 * step;
            let lo = t - half;
            let hi = (t + half).min(t_end);
            let length = hi - lo;
            (integral(hi) - integral(lo.max(0.0))) / length
        })
        .collect())
}

/// Solves the memory-kernel equation on a uniform grid.
///
/// The convolution is discretized with the trapezoid rule and each step is
/// one Euler predictor followed by one trapezoidal corrector, giving second
/// order overall. Kernel and forcing values are cached on the grid, so the
/// cost is `O(n^2)` kernel multiplies.
pub fn volterra_solve<K>(kernel: K, forcing: &ForcingFunction, c_a0: C64, grid: TimeGrid) -> Result<Vec<C64>>
where
    K: Fn(f64) -> C64,
{
    let h = grid.step;
    let kern: Vec<C64> = (0..grid.len).map(|n| kernel(grid.t(n))).collect();
    let guard = h * kern[0].norm().sqrt();
    if guard > 0.1 {
        return Err(Error::StepTooLarge { value: guard });
    }
    let drive = forcing.sample(grid);

    let mut c = Vec::with_capacity(grid.len);
    c.push(c_a0);
    // conv_n = h [K_n c_0 / 2 + sum_{j=1}^{n-1} K_{n-j} c_j + K_0 c_n / 2]
    let mut conv = C64::new(0.0, 0.0);
    for n in 0..grid.len - 1 {
        let slope = drive[n] - conv;
        let predicted = c[n] + slope * h;

        let mut history = kern[n + 1] * c_a0 * 0.5;
        for j in 1..=n {
            history += kern[n + 1 - j] * c[j];
        }
        let conv_pred = (history + kern[0] * predicted * 0.5) * h;
        let slope_pred = drive[n + 1] - conv_pred;
        let next = c[n] + (slope + slope_pred) * (0.5 * h);

        conv = (history + kern[0] * next * 0.5) * h;
        c.push(next);
    }
    Ok(c)
}

// Five-point Gauss-Legendre on [-1, 1].
const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Solves `dc/dt = F(t) - gamma c` by the integrating factor
/// `c(t) = exp(-gamma t) [c_a0 + int_0^t exp(gamma s) F(s) ds]`.
///
/// Closed-form drives are integrated analytically. Sampled drives use an
/// exponential integrator with five-point Gauss-Legendre quadrature per step.
pub fn markov_solve(forcing: &ForcingFunction, gamma: C64, c_a0: C64, grid: TimeGrid) -> Result<Vec<C64>> {
    if gamma.re < 0.0 {
        return Err(Error::param(
            "gamma",
            format!("Re gamma must be >= 0, got {}", gamma.re),
        ));
    }
    let decay = |t: f64| (-gamma * t).exp();
    match forcing {
        ForcingFunction::Zero => Ok(grid.times().into_iter().map(|t| c_a0 * decay(t)).collect()),
        ForcingFunction::Stepwise {
            gamma: gf,
            c_a0: cf,
            delta_t,
        } => {
            // c = A/gamma + (c_a0 - A/gamma) e^{-gamma t} while driven, A = gf cf.
            let level = if *gf == gamma { *cf } else { gf * cf / gamma };
            let at_switch = level + (c_a0 - level) * decay(*delta_t);
            Ok(grid
                .times()
                .into_iter()
                .map(|t| {
                    if t < *delta_t {
                        if gamma == C64::new(0.0, 0.0) {
                            c_a0 + gf * cf * t
                        } else {
                            level + (c_a0 - level) * decay(t)
                        }
                    } else if gamma == C64::new(0.0, 0.0) {
                        c_a0 + gf * cf * *delta_t
                    } else {
                        at_switch * decay(t - delta_t)
                    }
                })
                .collect())
        }
        ForcingFunction::Exponential {
            gamma: gf,
            c_a0: cf,
            epsilon,
        } => {
            let amp = gf * cf;
            let rate_gap = gamma - *epsilon;
            let confluent = rate_gap.norm() < 1e-9 * gamma.norm().max(*epsilon);
            Ok(grid
                .times()
                .into_iter()
                .map(|t| {
                    let driven = if confluent {
                        amp * t * decay(t)
                    } else {
                        amp * ((-epsilon * t).exp() - decay(t)) / rate_gap
                    };
                    c_a0 * decay(t) + driven
                })
                .collect())
        }
        ForcingFunction::FromState { .. } | ForcingFunction::Tabulated { .. } => {
            let h = grid.step;
            let step_decay = decay(h);
            let mut out = Vec::with_capacity(grid.len);
            let mut c = c_a0;
            out.push(c);
            for n in 0..grid.len - 1 {
                let t0 = grid.t(n);
                let mut inc = C64::new(0.0, 0.0);
                for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    let s = 0.5 * h * (x + 1.0);
                    inc += forcing.eval(t0 + s) * decay(h - s) * w;
                }
                c = c * step_decay + inc * (0.5 * h);
                out.push(c);
            }
            Ok(out)
        }
    }
}

/// Markovian amplitude for the exponential drive `gamma c_a0 exp(-eps t)`:
/// `c_a0 [eps/(eps-gamma) e^{-gamma t} + gamma/(gamma-eps) e^{-eps t}]`,
/// switching to `c_a0 e^{-gamma t} (1 + gamma t)` when `eps ~ gamma`.
pub fn analytic_slow_decay(c_a0: C64, gamma: C64, epsilon: f64, t: f64) -> C64 {
    let gap = C64::new(epsilon, 0.0) - gamma;
    if gap.norm() < 1e-9 * gamma.norm() {
        return c_a0 * (-gamma * t).exp() * (1.0 + gamma * t);
    }
    c_a0 * (epsilon / gap * (-gamma * t).exp() - gamma / gap * (-epsilon * t).exp())
}

/// Closed-form Markovian prediction for a virtual bound state: frozen on
/// `[0, delta_t)`, then `c_a0 exp(-gamma (t - delta_t))`.
pub fn analytic_virtual_bound(c_a0: C64, gamma: C64, delta_t: f64, t: f64) -> C64 {
    if t < delta_t {
        c_a0
    } else {
        c_a0 * (-gamma * (t - delta_t)).exp()
    }
}

/// Default averaging window, one period `2 pi / J` of the band.
pub fn default_window(hop_j: f64) -> f64 {
    TAU / hop_j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Waveguide;
    use crate::state::{make_slow_decay_state, make_virtual_bound_state, wannier_to_spectral};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn forcing_vanishes_before_zero() {
        let m = LatticeModel::resonant(0.3, 10).unwrap();
        let kinds = [
            ForcingFunction::Zero,
            ForcingFunction::Stepwise {
                gamma: c(0.1),
                c_a0: c(1.0),
                delta_t: 2.0,
            },
            ForcingFunction::Exponential {
                gamma: c(0.1),
                c_a0: c(1.0),
                epsilon: 0.1,
            },
            ForcingFunction::FromState {
                photon: vec![c(1.0); 21],
                model: m,
            },
            ForcingFunction::Tabulated {
                step: 0.1,
                values: vec![c(1.0); 5],
            },
        ];
        for f in kinds {
            assert_eq!(f.eval(-1e-9), c(0.0));
        }
    }

    #[test]
    fn bessel_forcing_at_origin() {
        let m = LatticeModel::resonant(0.3, 4).unwrap();
        let photon: Vec<C64> = (0..9).map(|i| C64::new(0.1 * i as f64, -0.05)).collect();
        let f0 = forcing_bessel(&photon, &m, 0.0);
        let want = photon[4] * 0.3 * C64::new(0.0, -1.0);
        assert!((f0 - want).norm() < 1e-16);
    }

    #[test]
    fn bessel_forcing_onset_equals_golden_rule_drive() {
        let m = LatticeModel::resonant(0.3, 800).unwrap();
        let s = make_virtual_bound_state(&m, 60).unwrap();
        let f0 = forcing_bessel(&s.photon, &m, 0.0);
        assert!((f0 - s.c_a * 0.045).norm() < 1e-15);
    }

    #[test]
    fn bessel_forcing_matches_quadrature_for_random_profile() {
        // Deterministic pseudo-random profile on |l| <= 8.
        let m = LatticeModel::new(0.0, 0.2, 1.0, 0.3, 8).unwrap();
        let mut seed = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let photon: Vec<C64> = (0..17).map(|_| C64::new(next(), next())).collect();
        let phi = wannier_to_spectral(&photon, 256).unwrap();
        let cm = ContinuumModel::from_lattice(&m, 256).unwrap();
        for &t in &[0.0, 0.7, 3.0, 11.0, 40.0] {
            let a = forcing_bessel(&photon, &m, t);
            let b = forcing_quadrature(&phi, &cm, t);
            assert!((a - b).norm() < 1e-10, "t {t}: {a} vs {b}");
        }
    }

    #[test]
    fn quadrature_forcing_zero_and_single_mode() {
        let m = LatticeModel::resonant(0.3, 10).unwrap();
        let cm = ContinuumModel::from_lattice(&m, 64).unwrap();
        let zero = SpectralAmplitude {
            samples: vec![c(0.0); 64],
        };
        assert_eq!(forcing_quadrature(&zero, &cm, 3.0), c(0.0));

        // k_48 = -pi + 2 pi 48/64 = pi/2 = k0, where Omega vanishes.
        let mut samples = vec![c(0.0); 64];
        samples[48] = C64::new(0.7, 0.2);
        let phi = SpectralAmplitude { samples };
        let want = -C64::i() * cm.coupling(std::f64::consts::FRAC_PI_2) * samples_at(&phi, 48) * phi.dk();
        for &t in &[0.0, 5.0, 50.0] {
            assert!((forcing_quadrature(&phi, &cm, t) - want).norm() < 1e-14);
        }
    }

    fn samples_at(phi: &SpectralAmplitude, i: usize) -> C64 {
        phi.samples[i]
    }

    #[test]
    fn average_of_constant_and_oscillation() {
        let step = 0.05;
        let window = TAU;
        let grid = TimeGrid::covering(step, 40.0).unwrap();
        let constant = vec![C64::new(0.3, 0.1); grid.len];
        let avg = time_average_forcing(&constant, step, window).unwrap();
        for (n, v) in avg.iter().enumerate() {
            let t = grid.t(n);
            if t > window && t < 40.0 - window {
                assert!((v - constant[0]).norm() < 1e-12, "t {t}: {}", (v - constant[0]).norm());
            }
        }
        for harmonic in [1.0, 2.0, -3.0] {
            let wave: Vec<C64> = grid
                .times()
                .iter()
                .map(|t| C64::from_polar(1.0, harmonic * t))
                .collect();
            let avg = time_average_forcing(&wave, step, window).unwrap();
            for (n, v) in avg.iter().enumerate() {
                let t = grid.t(n);
                if t > window && t < 40.0 - window {
                    assert!(v.norm() < 1e-2, "n={harmonic} t={t}: {}", v.norm());
                }
            }
        }
    }

    #[test]
    fn average_rejects_coarse_sampling() {
        assert!(time_average_forcing(&[c(1.0); 10], 1.0, TAU).is_err());
    }

    #[test]
    fn averaged_bessel_forcing_has_plateau() {
        let m = LatticeModel::resonant(0.3, 800).unwrap();
        let s = make_virtual_bound_state(&m, 60).unwrap();
        let grid = TimeGrid::covering(0.05, 40.0).unwrap();
        let raw = ForcingFunction::FromState {
            photon: s.photon.clone(),
            model: m,
        }
        .sample(grid);
        let avg = time_average_forcing(&raw, grid.step, TAU).unwrap();
        let target = s.c_a * 0.045;
        for (n, v) in avg.iter().enumerate() {
            let t = grid.t(n);
            // Windows straddling t = 0 or the end of the plateau are excluded.
            if (0.5 * TAU + 0.5..=30.0 - 0.5 * TAU - 0.5).contains(&t) {
                assert!((v - target).norm() < 0.1 * target.norm(), "t {t}: {v}");
            }
        }
    }

    #[test]
    fn volterra_trivial() {
        let grid = TimeGrid::new(0.1, 50).unwrap();
        let out = volterra_solve(|_| c(0.0), &ForcingFunction::Zero, C64::new(0.6, 0.8), grid).unwrap();
        assert!(out.iter().all(|v| *v == C64::new(0.6, 0.8)));
    }

    #[test]
    fn volterra_step_guard() {
        let grid = TimeGrid::new(0.5, 10).unwrap();
        let err = volterra_solve(|_| c(0.09), &ForcingFunction::Zero, c(1.0), grid).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn volterra_weak_coupling_follows_golden_rule() {
        let m = LatticeModel::resonant(0.1, 10).unwrap();
        let gamma = m.golden_rule_constants().unwrap().gamma_r;
        let grid = TimeGrid::covering(0.02, 50.0).unwrap();
        let out = volterra_solve(|t| m.memory_kernel(t), &ForcingFunction::Zero, c(1.0), grid).unwrap();
        // Quadratic onset first, then golden-rule decay from a shifted level.
        let i10 = grid.len / 5;
        for (n, v) in out.iter().enumerate() {
            let t = grid.t(n);
            let bound = if t < 5.0 { 2e-3 } else { 1e-3 };
            assert!((v.norm() - (-gamma * t).exp()).abs() < bound, "t {t}: {}", v.norm());
            if n > i10 {
                let ratio = v.norm() / out[i10].norm();
                let want = (-gamma * (t - grid.t(i10))).exp();
                assert!((ratio - want).abs() < 1e-3, "t {t}: {ratio} vs {want}");
            }
        }
    }

    #[test]
    fn volterra_second_order() {
        let m = LatticeModel::resonant(0.3, 10).unwrap();
        let t_end = 20.0;
        let solve = |h: f64| {
            let grid = TimeGrid::covering(h, t_end).unwrap();
            *volterra_solve(|t| m.memory_kernel(t), &ForcingFunction::Zero, c(1.0), grid)
                .unwrap()
                .last()
                .unwrap()
        };
        let reference = solve(0.0025);
        let e1 = (solve(0.08) - reference).norm();
        let e2 = (solve(0.04) - reference).norm();
        let e3 = (solve(0.02) - reference).norm();
        for ratio in [e1 / e2, e2 / e3] {
            assert!((ratio - 4.0).abs() < 0.8, "ratios {} {}", e1 / e2, e2 / e3);
        }
    }

    #[test]
    fn volterra_narrow_kernel_approaches_markov() {
        let gamma = 0.045;
        let grid = TimeGrid::covering(0.005, 30.0).unwrap();
        let c0 = c(0.5);
        let drive = ForcingFunction::Exponential {
            gamma: c(gamma),
            c_a0: c0,
            epsilon: 0.01,
        };
        let markov = markov_solve(&drive, c(gamma), c0, grid).unwrap();
        let mut errors = Vec::new();
        for width in [0.4, 0.2, 0.1] {
            // Half-Gaussian of area gamma on tau >= 0.
            let amp = 2.0 * gamma / (width * TAU.sqrt());
            let kernel = move |tau: f64| c(amp * (-0.5 * (tau / width).powi(2)).exp());
            let out = volterra_solve(kernel, &drive, c0, grid).unwrap();
            let err = out.iter().zip(&markov).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            errors.push(err);
        }
        // The leading correction is proportional to the kernel's mean delay.
        for pair in errors.windows(2) {
            assert!((pair[0] / pair[1] - 2.0).abs() < 0.1, "{errors:?}");
        }
        assert!(errors[2] < 2e-3, "{errors:?}");
    }

    #[test]
    fn markov_free_decay() {
        let g = C64::new(0.045, 0.01);
        let grid = TimeGrid::covering(0.5, 100.0).unwrap();
        let out = markov_solve(&ForcingFunction::Zero, g, c(1.0), grid).unwrap();
        for (n, v) in out.iter().enumerate() {
            assert!((v - (-g * grid.t(n)).exp()).norm() < 1e-15);
        }
    }

    #[test]
    fn markov_stepwise_freezes_then_decays() {
        let g = c(0.045);
        let c0 = C64::new(0.4, 0.3);
        let f = ForcingFunction::Stepwise {
            gamma: g,
            c_a0: c0,
            delta_t: 30.0,
        };
        let grid = TimeGrid::covering(0.1, 100.0).unwrap();
        let out = markov_solve(&f, g, c0, grid).unwrap();
        for (n, v) in out.iter().enumerate() {
            let t = grid.t(n);
            if t < 30.0 {
                assert_eq!(*v, c0);
            } else {
                assert!((v - c0 * (-g * (t - 30.0)).exp()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn markov_exponential_equals_closed_form() {
        let g = C64::new(0.045, 0.003);
        let c0 = C64::new(0.53, 0.0);
        let eps = 0.009;
        let f = ForcingFunction::Exponential {
            gamma: g,
            c_a0: c0,
            epsilon: eps,
        };
        let grid = TimeGrid::covering(0.1, 200.0).unwrap();
        let out = markov_solve(&f, g, c0, grid).unwrap();
        for (n, v) in out.iter().enumerate() {
            assert!((v - analytic_slow_decay(c0, g, eps, grid.t(n))).norm() < 1e-12);
        }
    }

    #[test]
    fn markov_sampled_matches_closed_form() {
        let g = c(0.045);
        let c0 = c(0.53);
        let closed = ForcingFunction::Exponential {
            gamma: g,
            c_a0: c0,
            epsilon: 0.009,
        };
        let grid = TimeGrid::covering(0.05, 100.0).unwrap();
        let table = ForcingFunction::Tabulated {
            step: 0.01,
            values: closed.sample(TimeGrid::covering(0.01, 100.0).unwrap()),
        };
        let a = markov_solve(&closed, g, c0, grid).unwrap();
        let b = markov_solve(&table, g, c0, grid).unwrap();
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn markov_rejects_gain() {
        let grid = TimeGrid::new(0.1, 3).unwrap();
        assert!(markov_solve(&ForcingFunction::Zero, c(-0.1), c(1.0), grid).is_err());
    }

    #[test]
    fn slow_decay_closed_form_limits() {
        let g = c(0.045);
        let c0 = C64::new(0.5, 0.1);
        assert!((analytic_slow_decay(c0, g, 0.009, 0.0) - c0).norm() < 1e-15);
        let t = 400.0;
        let late = analytic_slow_decay(c0, g, 0.009, t);
        let tail = c0 * 1.25 * (-0.009 * t).exp();
        assert!((late - tail).norm() < 1e-6 * tail.norm());
        // Confluent limit solves dc/dt = gamma c0 e^{-gamma t} - gamma c.
        for &t in &[0.0, 3.0, 40.0] {
            let want = c0 * (-g * t).exp() * (1.0 + g * t);
            assert!((analytic_slow_decay(c0, g, 0.045, t) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn markov_with_averaged_forcing_plateau() {
        let m = LatticeModel::resonant(0.3, 800).unwrap();
        let s = make_virtual_bound_state(&m, 60).unwrap();
        let gamma = m.golden_rule_constants().unwrap().gamma();
        let grid = TimeGrid::covering(0.05, 60.0).unwrap();
        let raw = ForcingFunction::FromState {
            photon: s.photon.clone(),
            model: m,
        }
        .sample(grid);
        let avg = time_average_forcing(&raw, grid.step, TAU).unwrap();
        let drive = ForcingFunction::Tabulated {
            step: grid.step,
            values: avg,
        };
        let out = markov_solve(&drive, gamma, s.c_a, grid).unwrap();
        let p0 = s.c_a.norm_sqr();
        let worst = out
            .iter()
            .enumerate()
            .filter(|(n, _)| grid.t(*n) <= 27.0)
            .map(|(_, v)| (v.norm_sqr() - p0).abs() / p0)
            .fold(0.0, f64::max);
        assert!(worst < 0.1, "{worst}");
    }

    #[test]
    fn slow_decay_bessel_forcing_tracks_target() {
        let eps = 0.009;
        let n_half = crate::state::min_n_half_for_tail(eps, 2.0);
        let m = LatticeModel::resonant(0.3, n_half).unwrap();
        let s = make_slow_decay_state(&m, eps).unwrap();
        let f0 = forcing_bessel(&s.photon, &m, 0.0);
        assert!((f0 - s.c_a * 0.045).norm() < 1e-15);
    }
}
