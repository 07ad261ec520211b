//! The verification suite behind `wgqed verify`: eight numbered criteria
//! covering decay rates, engineered states, oracle equivalences and
//! conservation laws.
//!
//! Independent simulations run concurrently; each simulation is itself
//! sequential.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{compare_traces, fit_exponential_rate, plateau_metric};
use crate::dynamics::{evolve, evolve_kspace, EvolutionConfig};
use crate::error::Result;
use crate::model::{ContinuumModel, LatticeModel, Waveguide};
use crate::reduced::{
    analytic_slow_decay, forcing_bessel, forcing_quadrature, markov_solve, volterra_solve, ForcingFunction, TimeGrid,
};
use crate::scenario::{run_scenario, ScenarioConfig, ScenarioKind, ScenarioOutput};
use crate::state::{make_slow_decay_state, make_virtual_bound_state, wannier_to_spectral, JointState};
use crate::trace::DecayTrace;

/// Overrides applied to every run of the suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceOptions {
    pub dt: f64,
    pub g0_over_j: f64,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        AcceptanceOptions {
            dt: 0.02,
            g0_over_j: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// The criterion has no content for these options (e.g. `G0 = 0`).
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str) -> Self {
        CriterionResult {
            id,
            name,
            status: Status::Pass,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            label: label.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn check_within(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        let passed = (value - target).abs() <= tol;
        self.check(label, passed, format!("{value:.6e} vs {target:.6e} (tol {tol:.1e})"));
    }

    fn check_below(&mut self, label: &str, value: f64, bound: f64) {
        self.check(label, value < bound, format!("{value:.3e} < {bound:.1e}"));
    }

    fn error(&mut self, label: &str, err: &crate::Error) {
        self.check(label, false, err.to_string());
    }

    fn skip(mut self, reason: &str) -> Self {
        self.status = Status::Skip;
        self.check("skipped", true, reason);
        self
    }

    fn finish(mut self) -> Self {
        if self.status != Status::Skip {
            self.status = if self.checks.iter().all(|c| c.passed) {
                Status::Pass
            } else {
                Status::Fail
            };
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// One summary line, e.g. `PASS  [1] golden-rule decay`.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!("{tag}  [{}] {}", self.id, self.name)
    }

    pub fn report(&self) -> String {
        let mut out = self.line();
        for c in &self.checks {
            let mark = if c.passed { "ok " } else { "BAD" };
            out.push_str(&format!("\n        {mark} {}: {}", c.label, c.detail));
        }
        out
    }
}

pub const CRITERIA: [&str; 8] = [
    "golden-rule decay of the bare emitter",
    "transient bound state plateau",
    "spontaneous emission slowdown",
    "normalization laws",
    "memory kernel oracle",
    "forcing oracle",
    "solver cross-validation",
    "conservation and determinism",
];

/// Exact-dynamics runs shared between criteria.
struct Runs {
    bare: Result<(ScenarioOutput, f64)>,
    bound: Result<ScenarioOutput>,
    slow: Result<ScenarioOutput>,
}

fn config(opts: &AcceptanceOptions, scenario: ScenarioKind) -> ScenarioConfig {
    ScenarioConfig {
        scenario,
        g0_over_j: opts.g0_over_j,
        dt: opts.dt,
        ..ScenarioConfig::default()
    }
}

fn timed_run(cfg: &ScenarioConfig) -> Result<(ScenarioOutput, f64)> {
    let start = Instant::now();
    let out = run_scenario(cfg)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn shared_runs(opts: &AcceptanceOptions) -> Runs {
    let needs_coupling = opts.g0_over_j > 0.0;
    let ((bare, bound), slow) = rayon::join(
        || {
            rayon::join(
                || timed_run(&config(opts, ScenarioKind::Bare)),
                || run_scenario(&config(opts, ScenarioKind::VirtualBound)),
            )
        },
        || {
            if needs_coupling {
                run_scenario(&config(opts, ScenarioKind::SlowDecay))
            } else {
                Err(crate::Error::param("g0_over_j", "slow decay needs G0 > 0"))
            }
        },
    );
    Runs { bare, bound, slow }
}

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionResult> {
    let runs = shared_runs(opts);
    (1..=8u8).into_par_iter().map(|id| evaluate(id, opts, &runs)).collect()
}

pub fn run_one(id: u8, opts: &AcceptanceOptions) -> CriterionResult {
    let runs = shared_runs(opts);
    evaluate(id, opts, &runs)
}

fn evaluate(id: u8, opts: &AcceptanceOptions, runs: &Runs) -> CriterionResult {
    let r = CriterionResult::new(id, CRITERIA[id as usize - 1]);
    let r = match id {
        1 => golden_rule(r, runs),
        2 => bound_state(r, opts, runs),
        3 => slowdown(r, opts, runs),
        4 => normalization(r, opts),
        5 => kernel_oracle(r, opts),
        6 => forcing_oracle(r, opts),
        7 => cross_validation(r, opts),
        8 => conservation(r, opts, runs),
        _ => unreachable!("criteria are numbered 1..=8"),
    };
    r.finish()
}

fn gamma_r(g0: f64) -> f64 {
    g0 * g0 / 2.0
}

fn golden_rule(mut r: CriterionResult, runs: &Runs) -> CriterionResult {
    match &runs.bare {
        Ok((out, secs)) => {
            let target = out.prepared.derived.gamma_r.unwrap_or(0.0);
            match fit_exponential_rate(&out.trace, [5.0, 60.0]) {
                Ok(fit) => r.check_within(
                    "amplitude rate on [5, 60]",
                    fit.rate_amplitude,
                    target,
                    0.03 * target + 1e-12,
                ),
                Err(e) => r.error("rate fit", &e),
            }
            r.check_below("runtime (s)", *secs, 10.0);
        }
        Err(e) => r.error("bare run", e),
    }
    r
}

fn bound_state(mut r: CriterionResult, opts: &AcceptanceOptions, runs: &Runs) -> CriterionResult {
    if opts.g0_over_j == 0.0 {
        return r.skip("no photon packet without coupling");
    }
    let out = match &runs.bound {
        Ok(out) => out,
        Err(e) => {
            r.error("virtual bound run", e);
            return r;
        }
    };
    let delta_t = out.prepared.derived.delta_t.unwrap_or(f64::NAN);
    match plateau_metric(&out.trace, delta_t) {
        Ok(p) => {
            r.check_below("plateau max relative deviation", p.max_rel_dev, 0.05);
            match p.plateau_end_est {
                Some(end) => r.check_within("plateau end", end, delta_t, 0.15 * delta_t),
                None => r.check("plateau end", false, "survival never fell below 90%"),
            }
        }
        Err(e) => r.error("plateau metric", &e),
    }
    let target = gamma_r(opts.g0_over_j);
    match fit_exponential_rate(&out.trace, [40.0, 100.0]) {
        Ok(fit) => r.check_within("amplitude rate on [40, 100]", fit.rate_amplitude, target, 0.15 * target),
        Err(e) => r.error("rate fit", &e),
    }
    r
}

/// Fit window for the slow decay. The first `40/J` are excluded: there the
/// fast `exp(-gamma t)` component of the two-exponential law still biases
/// the log-slope.
pub const SLOWDOWN_FIT_WINDOW: [f64; 2] = [40.0, 150.0];

fn slowdown(mut r: CriterionResult, opts: &AcceptanceOptions, runs: &Runs) -> CriterionResult {
    if opts.g0_over_j == 0.0 {
        return r.skip("epsilon = gamma_R / 5 vanishes without coupling");
    }
    let out = match &runs.slow {
        Ok(out) => out,
        Err(e) => {
            r.error("slow decay run", e);
            return r;
        }
    };
    let d = &out.prepared.derived;
    let (gamma, eps) = (d.gamma_r.unwrap_or(f64::NAN), d.epsilon.unwrap_or(f64::NAN));
    let c0 = out.prepared.state.c_a;
    let dev = out
        .trace
        .times
        .iter()
        .zip(&out.trace.survival)
        .map(|(&t, &p)| (p - analytic_slow_decay(c0, C64::new(gamma, 0.0), eps, t).norm_sqr()).abs())
        .fold(0.0, f64::max);
    r.check_below("max |P_exact - P_two-exponential|", dev, 0.03);
    let window = [SLOWDOWN_FIT_WINDOW[0], SLOWDOWN_FIT_WINDOW[1].min(out.config.t_max)];
    match fit_exponential_rate(&out.trace, window) {
        Ok(fit) => r.check_within(
            &format!("amplitude rate on [{}, {}]", window[0], window[1]),
            fit.rate_amplitude,
            eps,
            0.1 * eps,
        ),
        Err(e) => r.error("rate fit", &e),
    }
    r
}

fn normalization(mut r: CriterionResult, opts: &AcceptanceOptions) -> CriterionResult {
    if opts.g0_over_j == 0.0 {
        return r.skip("both laws reduce to |c_a(0)|^2 = 1 without coupling");
    }
    let model = match LatticeModel::resonant(opts.g0_over_j, 800) {
        Ok(m) => m,
        Err(e) => {
            r.error("model", &e);
            return r;
        }
    };
    match make_virtual_bound_state(&model, 60) {
        Ok(s) => {
            let approx = s.metadata.c_a0_sq_closed_form.unwrap_or(f64::NAN);
            let exact = s.metadata.c_a0_sq_exact;
            r.check_within("L = 60 |c_a(0)|^2", exact, approx, 0.02 * approx);
        }
        Err(e) => r.error("virtual bound state", &e),
    }
    let cfg = config(opts, ScenarioKind::SlowDecay);
    let state = cfg
        .model()
        .and_then(|m| make_slow_decay_state(&m, gamma_r(opts.g0_over_j) / 5.0));
    match state {
        Ok(s) => {
            let approx = s.metadata.c_a0_sq_closed_form.unwrap_or(f64::NAN);
            r.check_within(
                "eps = gamma_R/5 |c_a(0)|^2",
                s.metadata.c_a0_sq_exact,
                approx,
                0.02 * approx,
            );
        }
        Err(e) => r.error("slow decay state", &e),
    }
    r
}

fn kernel_oracle(mut r: CriterionResult, opts: &AcceptanceOptions) -> CriterionResult {
    let lattice = match LatticeModel::resonant(opts.g0_over_j, 800) {
        Ok(m) => m,
        Err(e) => {
            r.error("model", &e);
            return r;
        }
    };
    let continuum = match ContinuumModel::from_lattice(&lattice, 1 << 14) {
        Ok(c) => c,
        Err(e) => {
            r.error("continuum model", &e);
            return r;
        }
    };
    let dev = (0..=1000)
        .into_par_iter()
        .map(|i| {
            let tau = 0.05 * i as f64;
            (lattice.memory_kernel(tau) - continuum.memory_kernel(tau)).norm()
        })
        .reduce(|| 0.0, f64::max);
    r.check_below("max |closed form - 2^14-point quadrature| on [0, 50]", dev, 1e-8);

    // Composite Simpson on [0, 200] with spacing 0.005.
    let n = 40_000;
    let h = 200.0 / n as f64;
    let integral = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            lattice.memory_kernel(i as f64 * h) * w
        })
        .sum::<C64>()
        * (h / 3.0);
    let target = gamma_r(opts.g0_over_j);
    r.check(
        "int_0^200 G",
        (integral - target).norm() <= 2e-3,
        format!("{:.6e}{:+.2e}i vs {target:.6e} (tol 2.0e-3)", integral.re, integral.im),
    );
    r
}

fn forcing_oracle(mut r: CriterionResult, opts: &AcceptanceOptions) -> CriterionResult {
    if opts.g0_over_j == 0.0 {
        return r.skip("forcing vanishes identically without coupling");
    }
    let bound = LatticeModel::resonant(opts.g0_over_j, 800).and_then(|m| Ok((m, make_virtual_bound_state(&m, 60)?)));
    let slow = config(opts, ScenarioKind::SlowDecay)
        .model()
        .and_then(|m| Ok((m, make_slow_decay_state(&m, gamma_r(opts.g0_over_j) / 5.0)?)));
    for (label, built) in [("L = 60", bound), ("eps = gamma_R/5", slow)] {
        let (model, state) = match built {
            Ok(b) => b,
            Err(e) => {
                r.error(label, &e);
                continue;
            }
        };
        match series_vs_quadrature(&model, &state) {
            Ok(dev) => r.check_below(&format!("{label}: max |series - quadrature|, t <= 50"), dev, 1e-8),
            Err(e) => r.error(label, &e),
        }
        if label == "L = 60" {
            let f0 = forcing_bessel(&state.photon, &model, 0.0);
            let want = state.c_a * gamma_r(opts.g0_over_j);
            r.check_below("L = 60: |F(0) - gamma_R c_a(0)|", (f0 - want).norm(), 1e-10);
        }
    }
    r
}

fn series_vs_quadrature(model: &LatticeModel, state: &JointState) -> Result<f64> {
    let continuum = ContinuumModel::from_lattice(model, model.sites())?;
    let phi = wannier_to_spectral(&state.photon, model.sites())?;
    Ok((0..=100)
        .into_par_iter()
        .map(|i| {
            let t = 0.5 * i as f64;
            (forcing_bessel(&state.photon, model, t) - forcing_quadrature(&phi, &continuum, t)).norm()
        })
        .reduce(|| 0.0, f64::max))
}

fn cross_validation(mut r: CriterionResult, opts: &AcceptanceOptions) -> CriterionResult {
    let evo = EvolutionConfig {
        dt: opts.dt,
        t_max: 60.0,
        ..EvolutionConfig::default()
    };
    let unitary = || -> Result<f64> {
        let model = LatticeModel::resonant(opts.g0_over_j, 200)?;
        let state = if opts.g0_over_j > 0.0 {
            make_virtual_bound_state(&model, 60)?
        } else {
            JointState::bare(&model)
        };
        let lattice = evolve(&state, &model, &evo)?;
        let continuum = ContinuumModel::from_lattice(&model, model.sites())?;
        let phi = wannier_to_spectral(&state.photon, model.sites())?;
        let kspace = evolve_kspace(&phi, state.c_a, &continuum, &evo)?;
        Ok(compare_traces(&lattice, &kspace, false)?.max_abs_dev)
    };
    let memory = || -> Result<f64> {
        let model = LatticeModel::resonant(0.1, 800)?;
        let cfg = EvolutionConfig {
            dt: opts.dt,
            t_max: 150.0,
            sample_every: 1,
            ..EvolutionConfig::default()
        };
        let exact = evolve(&JointState::bare(&model), &model, &cfg)?;
        let grid = TimeGrid::new(opts.dt, exact.len())?;
        let c = volterra_solve(
            |t| model.memory_kernel(t),
            &ForcingFunction::Zero,
            C64::new(1.0, 0.0),
            grid,
        )?;
        Ok(exact
            .c_a
            .iter()
            .zip(&c)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max))
    };
    let closed_form = || -> Result<f64> {
        let gamma = C64::new(gamma_r(opts.g0_over_j), 0.0);
        let eps = gamma.re / 5.0;
        let c0 = C64::new((2.0f64 / 7.0).sqrt(), 0.0);
        let grid = TimeGrid::new(0.1, 1501)?;
        let f = ForcingFunction::Exponential {
            gamma,
            c_a0: c0,
            epsilon: eps,
        };
        let c = markov_solve(&f, gamma, c0, grid)?;
        Ok(c.iter()
            .enumerate()
            .map(|(n, v)| (v - analytic_slow_decay(c0, gamma, eps, grid.t(n))).norm())
            .fold(0.0, f64::max))
    };
    let (a, (b, c)) = rayon::join(unitary, || rayon::join(memory, closed_form));
    match a {
        Ok(d) => r.check_below("lattice vs Bloch-mode survival (N = 200)", d, 1e-8),
        Err(e) => r.error("lattice vs Bloch-mode", &e),
    }
    match b {
        Ok(d) => r.check_below("Volterra vs exact |c_a|, G0 = 0.1", d, 1e-3),
        Err(e) => r.error("Volterra vs exact", &e),
    }
    match c {
        Ok(d) => r.check_below("Markov exponential drive vs closed form", d, 1e-12),
        Err(e) => r.error("Markov vs closed form", &e),
    }
    r
}

fn drift_checks(r: &mut CriterionResult, label: &str, trace: &DecayTrace) {
    let m = &trace.metadata;
    r.check_below(
        &format!("{label}: norm drift"),
        m.max_norm_drift.unwrap_or(f64::NAN),
        1e-8,
    );
    r.check_below(
        &format!("{label}: energy drift"),
        m.max_energy_drift.unwrap_or(f64::NAN),
        1e-8,
    );
}

fn conservation(mut r: CriterionResult, opts: &AcceptanceOptions, runs: &Runs) -> CriterionResult {
    match &runs.bare {
        Ok((out, _)) => drift_checks(&mut r, "bare", &out.trace),
        Err(e) => r.error("bare run", e),
    }
    if opts.g0_over_j > 0.0 {
        for (label, run) in [("bound", &runs.bound), ("slow", &runs.slow)] {
            match run {
                Ok(out) => drift_checks(&mut r, label, &out.trace),
                Err(e) => r.error(label, e),
            }
        }
    }

    let cfg = ScenarioConfig {
        t_max: 100.0,
        ..config(opts, ScenarioKind::Bare)
    };
    let halved = ScenarioConfig {
        dt: 0.5 * opts.dt,
        sample_every: 2 * cfg.sample_every,
        ..cfg.clone()
    };
    let (first, (second, fine)) = rayon::join(
        || run_scenario(&cfg),
        || rayon::join(|| run_scenario(&cfg), || run_scenario(&halved)),
    );
    match (first, second, fine) {
        (Ok(first), Ok(second), Ok(fine)) => {
            let identical = first.trace.to_csv() == second.trace.to_csv();
            r.check(
                "repeated run output",
                identical,
                if identical { "byte-identical" } else { "differs" },
            );
            let p = |t: &DecayTrace| t.survival_at(100.0).unwrap_or(f64::NAN);
            r.check_below(
                "dt-halving change of P(100)",
                (p(&first.trace) - p(&fine.trace)).abs(),
                1e-6,
            );
        }
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => r.error("determinism runs", &e),
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let mut r = CriterionResult::new(3, CRITERIA[2]);
        r.check_below("x", 1.0, 2.0);
        let r = r.finish();
        assert_eq!(r.line(), "PASS  [3] spontaneous emission slowdown");
        let mut bad = CriterionResult::new(1, CRITERIA[0]);
        bad.check_below("x", 3.0, 2.0);
        assert_eq!(bad.finish().status, Status::Fail);
    }

    #[test]
    fn oversized_step_fails_exact_criteria() {
        let opts = AcceptanceOptions {
            dt: 0.5,
            ..AcceptanceOptions::default()
        };
        let r = cross_validation(CriterionResult::new(7, CRITERIA[6]), &opts).finish();
        assert_eq!(r.status, Status::Fail);
        assert!(
            r.checks.iter().any(|c| c.detail.contains("stability")),
            "{}",
            r.report()
        );
    }

    #[test]
    fn uncoupled_options_skip_packet_criteria() {
        let opts = AcceptanceOptions {
            g0_over_j: 0.0,
            ..AcceptanceOptions::default()
        };
        let r = normalization(CriterionResult::new(4, CRITERIA[3]), &opts).finish();
        assert_eq!(r.status, Status::Skip);
        assert!(r.passed());
        let k = kernel_oracle(CriterionResult::new(5, CRITERIA[4]), &opts).finish();
        assert_eq!(k.status, Status::Pass, "{}", k.report());
    }
}
