//! Scenario configuration and runners shared by the command-line tool and
//! the acceptance suite.
//!
//! A configuration is a flat `key = value` file (or the `config` object of a
//! metadata sidecar) with command-line overrides applied on top. Units are
//! `J = 1` and the emitter frequency is the frame origin, `omega0 = 0`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{edge_effect_horizon, evolve, evolve_kspace, EvolutionConfig};
use crate::error::{Error, Result};
use crate::model::{ContinuumModel, LatticeModel, Waveguide};
use crate::reduced::{
    analytic_slow_decay, analytic_virtual_bound, default_window, markov_solve, time_average_forcing, volterra_solve,
    ForcingFunction, TimeGrid,
};
use crate::state::{
    make_slow_decay_state, make_virtual_bound_state, min_n_half_for_tail, wannier_to_spectral, JointState,
};
use crate::trace::{DecayTrace, TraceMetadata};

pub const DEFAULT_N_HALF: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Bare,
    VirtualBound,
    SlowDecay,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Exact,
    Kspace,
    Volterra,
    Markov,
    Analytic,
}

/// Drive used by the reduced solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingMode {
    /// The closed form the state was engineered for.
    Target,
    /// Bessel series of the actual photon profile.
    Series,
    /// Series, locally time-averaged over `window`.
    Averaged,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Error::Parse(format!("unknown {key} `{value}`")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub g0_over_j: f64,
    pub omega_c_minus_omega0: f64,
    /// Lattice half-size; `None` picks 800, or enough sites for the
    /// exponential tail and the run time in the slow-decay scenario.
    pub n_half: Option<usize>,
    pub half_width: usize,
    pub epsilon_over_gamma_r: f64,
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub solver: Solver,
    /// `None` means `series` for Volterra and `target` for Markov.
    pub forcing: Option<ForcingMode>,
    pub window: Option<f64>,
    pub edge_guard: bool,
    /// JSON state file for the custom scenario.
    pub state: Option<PathBuf>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub meta: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: ScenarioKind::Bare,
            g0_over_j: 0.3,
            omega_c_minus_omega0: 0.0,
            n_half: None,
            half_width: 60,
            epsilon_over_gamma_r: 0.2,
            dt: 0.02,
            t_max: 150.0,
            sample_every: 5,
            solver: Solver::Exact,
            forcing: None,
            window: None,
            edge_guard: true,
            state: None,
            out: None,
            meta: None,
        }
    }
}

impl ScenarioConfig {
    /// Sets one field from its textual form. Keys are case-insensitive and
    /// accept `-` for `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        let real = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key} = {value}: {e}")))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{key} = {value}: {e}")))
        };
        match key.as_str() {
            "scenario" => self.scenario = parse_enum("scenario", value)?,
            "g0" | "g0_over_j" => self.g0_over_j = real()?,
            "detuning" | "omega_c_minus_omega0" => self.omega_c_minus_omega0 = real()?,
            "n_half" => self.n_half = Some(count()?),
            "l" | "half_width" => self.half_width = count()?,
            "eps_rel" | "epsilon_over_gamma_r" | "epsilon_over_gammar" => self.epsilon_over_gamma_r = real()?,
            "dt" => self.dt = real()?,
            "t_max" | "tmax" => self.t_max = real()?,
            "sample_every" => self.sample_every = count()?,
            "solver" => self.solver = parse_enum("solver", value)?,
            "forcing" => self.forcing = Some(parse_enum("forcing", value)?),
            "window" => self.window = Some(real()?),
            "edge_guard" => {
                self.edge_guard = value
                    .parse::<bool>()
                    .map_err(|e| Error::Parse(format!("{key} = {value}: {e}")))?
            }
            "state" => self.state = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "meta" => self.meta = Some(PathBuf::from(value)),
            _ => return Err(Error::Parse(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Reads either a key-value file or a metadata sidecar written by
    /// [`write_outputs`], whose `config` object is taken verbatim.
    pub fn from_text(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text)?;
            let config = value.get("config").cloned().unwrap_or(value);
            return Ok(serde_json::from_value(config)?);
        }
        let mut cfg = ScenarioConfig::default();
        cfg.apply_key_values(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            t_max: self.t_max,
            sample_every: self.sample_every,
            edge_guard: self.edge_guard,
            ..EvolutionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.evolution().validate()?;
        if !(self.g0_over_j >= 0.0 && self.g0_over_j.is_finite()) {
            return Err(Error::param("g0_over_j", "must be finite and >= 0"));
        }
        if !self.omega_c_minus_omega0.is_finite() {
            return Err(Error::param("omega_c_minus_omega0", "must be finite"));
        }
        if self.scenario == ScenarioKind::SlowDecay && !(self.epsilon_over_gamma_r > 0.0) {
            return Err(Error::param("epsilon_over_gamma_r", "must be > 0"));
        }
        if self.scenario == ScenarioKind::Custom && self.state.is_none() {
            return Err(Error::param("state", "custom scenario needs a state file"));
        }
        if let Some(w) = self.window {
            if !(w > 0.0) {
                return Err(Error::param("window", "must be > 0"));
            }
        }
        Ok(())
    }

    fn base_model(&self, n_half: usize) -> Result<LatticeModel> {
        LatticeModel::new(0.0, self.omega_c_minus_omega0, 1.0, self.g0_over_j, n_half)
    }

    /// Lattice with the configured or automatically chosen size.
    pub fn model(&self) -> Result<LatticeModel> {
        if let Some(n) = self.n_half {
            return self.base_model(n);
        }
        match self.scenario {
            ScenarioKind::SlowDecay => {
                let probe = self.base_model(1)?;
                let consts = probe.golden_rule_constants()?;
                let epsilon = self.epsilon_over_gamma_r * consts.gamma_r;
                if !(epsilon > 0.0) {
                    return Err(Error::param("epsilon", "vanishes; G0 must be > 0"));
                }
                let tail = min_n_half_for_tail(epsilon, consts.v_g);
                let travel = (2.0 * probe.hop_j * self.t_max).ceil() as usize;
                self.base_model(tail + travel + 1)
            }
            _ => self.base_model(DEFAULT_N_HALF),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub gamma_r: Option<f64>,
    pub gamma_i: Option<f64>,
    pub v_g: Option<f64>,
    pub n_half: usize,
    pub c_a0_sq_exact: f64,
    pub c_a0_sq_closed_form: Option<f64>,
    pub delta_t: Option<f64>,
    pub epsilon: Option<f64>,
    pub edge_horizon: f64,
    pub weak_coupling: bool,
}

impl DerivedConstants {
    pub fn lines(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
        vec![
            format!("gamma_R        = {}", opt(self.gamma_r)),
            format!("gamma_I        = {}", opt(self.gamma_i)),
            format!("n_half         = {}", self.n_half),
            format!("|c_a(0)|^2     = {:.6} (exact)", self.c_a0_sq_exact),
            format!(
                "|c_a(0)|^2     = {} (closed-form approximation)",
                opt(self.c_a0_sq_closed_form)
            ),
            format!("delta_t        = {}", opt(self.delta_t)),
            format!("epsilon        = {}", opt(self.epsilon)),
            format!("edge horizon   = {:.6}", self.edge_horizon),
        ]
    }
}

/// Model and initial state of a scenario, before any solver runs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: LatticeModel,
    pub state: JointState,
    pub derived: DerivedConstants,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (model, state) = match cfg.scenario {
        ScenarioKind::Custom => {
            let path = cfg.state.as_ref().expect("validated");
            let state = JointState::from_json(&fs::read_to_string(path)?)?;
            state.check_normalized()?;
            (cfg.base_model(state.n_half())?, state)
        }
        kind => {
            let model = cfg.model()?;
            let state = match kind {
                ScenarioKind::Bare => JointState::bare(&model),
                ScenarioKind::VirtualBound => make_virtual_bound_state(&model, cfg.half_width)?,
                _ => {
                    let gamma_r = model.golden_rule_constants()?.gamma_r;
                    make_slow_decay_state(&model, cfg.epsilon_over_gamma_r * gamma_r)?
                }
            };
            (model, state)
        }
    };
    let consts = model.golden_rule_constants().ok();
    let derived = DerivedConstants {
        gamma_r: consts.map(|c| c.gamma_r),
        gamma_i: consts.map(|c| c.gamma_i),
        v_g: consts.map(|c| c.v_g),
        n_half: model.n_half,
        c_a0_sq_exact: state.c_a.norm_sqr(),
        c_a0_sq_closed_form: state.metadata.c_a0_sq_closed_form,
        delta_t: state.metadata.delta_t,
        epsilon: state.metadata.epsilon,
        edge_horizon: edge_effect_horizon(&model, &state),
        weak_coupling: model.is_weak_coupling(),
    };
    Ok(Prepared { model, state, derived })
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub config: ScenarioConfig,
    pub prepared: Prepared,
    pub trace: DecayTrace,
}

fn complex_gamma(model: &LatticeModel) -> Result<C64> {
    let c = model.golden_rule_constants()?;
    Ok(C64::new(c.gamma_r, c.gamma_i))
}

/// Drive for the reduced solvers.
pub fn build_forcing(cfg: &ScenarioConfig, prepared: &Prepared, mode: ForcingMode) -> Result<ForcingFunction> {
    let Prepared { model, state, .. } = prepared;
    match mode {
        ForcingMode::Target => match cfg.scenario {
            ScenarioKind::Bare => Ok(ForcingFunction::Zero),
            ScenarioKind::VirtualBound => Ok(ForcingFunction::Stepwise {
                gamma: complex_gamma(model)?,
                c_a0: state.c_a,
                delta_t: state.metadata.delta_t.expect("virtual bound state carries delta_t"),
            }),
            ScenarioKind::SlowDecay => Ok(ForcingFunction::Exponential {
                gamma: complex_gamma(model)?,
                c_a0: state.c_a,
                epsilon: state.metadata.epsilon.expect("slow decay state carries epsilon"),
            }),
            ScenarioKind::Custom => Err(Error::param("forcing", "custom states have no target drive")),
        },
        ForcingMode::Series => Ok(ForcingFunction::FromState {
            photon: state.photon.clone(),
            model: *model,
        }),
        ForcingMode::Averaged => {
            let grid = reduced_grid(cfg)?;
            let raw = ForcingFunction::FromState {
                photon: state.photon.clone(),
                model: *model,
            }
            .sample(grid);
            let window = cfg.window.unwrap_or_else(|| default_window(model.hop_j));
            Ok(ForcingFunction::Tabulated {
                step: grid.step,
                values: time_average_forcing(&raw, grid.step, window)?,
            })
        }
    }
}

fn step_count(cfg: &ScenarioConfig) -> usize {
    ((cfg.t_max / cfg.dt).round() as usize).max(1)
}

fn reduced_grid(cfg: &ScenarioConfig) -> Result<TimeGrid> {
    TimeGrid::new(cfg.dt, step_count(cfg) + 1)
}

/// Keeps every `sample_every`-th point so reduced traces share the time
/// grid of the exact propagator.
fn downsample(cfg: &ScenarioConfig, grid: TimeGrid, values: Vec<C64>) -> (Vec<f64>, Vec<C64>) {
    let keep: Vec<usize> = (0..grid.len).step_by(cfg.sample_every).collect();
    let times = keep.iter().map(|&n| n as f64 * cfg.dt).collect();
    let c = keep.iter().map(|&n| values[n]).collect();
    (times, c)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let prepared = prepare(cfg)?;
    let trace = run_prepared(cfg, &prepared)?;
    Ok(ScenarioOutput {
        config: cfg.clone(),
        prepared,
        trace,
    })
}

pub fn run_prepared(cfg: &ScenarioConfig, prepared: &Prepared) -> Result<DecayTrace> {
    let Prepared { model, state, derived } = prepared;
    match cfg.solver {
        Solver::Exact => evolve(state, model, &cfg.evolution()),
        Solver::Kspace => {
            let continuum = ContinuumModel::from_lattice(model, model.sites())?;
            let phi = wannier_to_spectral(&state.photon, model.sites())?;
            let mut trace = evolve_kspace(&phi, state.c_a, &continuum, &cfg.evolution())?;
            trace.metadata.model = Some(*model);
            trace.metadata.delta_t = derived.delta_t;
            trace.metadata.epsilon = derived.epsilon;
            trace.metadata.c_a0_sq_closed_form = derived.c_a0_sq_closed_form;
            Ok(trace)
        }
        Solver::Volterra | Solver::Markov | Solver::Analytic => {
            let grid = reduced_grid(cfg)?;
            let values = match cfg.solver {
                Solver::Volterra => {
                    let f = build_forcing(cfg, prepared, cfg.forcing.unwrap_or(ForcingMode::Series))?;
                    volterra_solve(|tau| model.memory_kernel(tau), &f, state.c_a, grid)?
                }
                Solver::Markov => {
                    let f = build_forcing(cfg, prepared, cfg.forcing.unwrap_or(ForcingMode::Target))?;
                    markov_solve(&f, complex_gamma(model)?, state.c_a, grid)?
                }
                _ => analytic_series(cfg, prepared, grid)?,
            };
            let (times, c_a) = downsample(cfg, grid, values);
            let metadata = TraceMetadata {
                solver: format!("{:?}", cfg.solver).to_lowercase(),
                model: Some(*model),
                dt: cfg.dt,
                t_max: cfg.t_max,
                sample_every: cfg.sample_every,
                gamma_r: derived.gamma_r,
                gamma_i: derived.gamma_i,
                delta_t: derived.delta_t,
                epsilon: derived.epsilon,
                c_a0_sq_exact: Some(derived.c_a0_sq_exact),
                c_a0_sq_closed_form: derived.c_a0_sq_closed_form,
                edge_horizon: Some(derived.edge_horizon),
                ..TraceMetadata::default()
            };
            Ok(DecayTrace::from_amplitudes(times, c_a, metadata))
        }
    }
}

fn analytic_series(cfg: &ScenarioConfig, prepared: &Prepared, grid: TimeGrid) -> Result<Vec<C64>> {
    let gamma = complex_gamma(&prepared.model)?;
    let c0 = prepared.state.c_a;
    let times = grid.times();
    Ok(match cfg.scenario {
        ScenarioKind::Bare => times.iter().map(|t| c0 * (-gamma * t).exp()).collect(),
        ScenarioKind::VirtualBound => {
            let dt = prepared.derived.delta_t.expect("virtual bound state carries delta_t");
            times
                .iter()
                .map(|&t| analytic_virtual_bound(c0, gamma, dt, t))
                .collect()
        }
        ScenarioKind::SlowDecay => {
            let eps = prepared.derived.epsilon.expect("slow decay state carries epsilon");
            times.iter().map(|&t| analytic_slow_decay(c0, gamma, eps, t)).collect()
        }
        ScenarioKind::Custom => {
            return Err(Error::param("solver", "no closed form for custom states"));
        }
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ScenarioConfig,
    derived: &'a DerivedConstants,
    trace: &'a TraceMetadata,
}

pub fn metadata_json(output: &ScenarioOutput) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Sidecar {
        config: &output.config,
        derived: &output.prepared.derived,
        trace: &output.trace.metadata,
    })?)
}

/// Writes the trace CSV and, when a path is configured, the JSON sidecar.
/// Without an explicit `meta` path the sidecar goes next to the CSV.
pub fn write_outputs(output: &ScenarioOutput) -> Result<Option<(PathBuf, PathBuf)>> {
    let Some(out) = output.config.out.clone() else {
        return Ok(None);
    };
    output.trace.write_csv(&out)?;
    let meta = output.config.meta.clone().unwrap_or_else(|| out.with_extension("json"));
    fs::write(&meta, metadata_json(output)?)?;
    Ok(Some((out, meta)))
}

/// Raw and time-averaged forcing of the scenario's state on `[0, t_max]`.
pub fn forcing_series(cfg: &ScenarioConfig) -> Result<(Vec<f64>, Vec<C64>, Vec<C64>)> {
    let prepared = prepare(cfg)?;
    let grid = reduced_grid(cfg)?;
    let raw = ForcingFunction::FromState {
        photon: prepared.state.photon.clone(),
        model: prepared.model,
    }
    .sample(grid);
    let window = cfg.window.unwrap_or_else(|| default_window(prepared.model.hop_j));
    let avg = time_average_forcing(&raw, grid.step, window)?;
    let (times, raw) = downsample(cfg, grid, raw);
    let (_, avg) = downsample(cfg, grid, avg);
    Ok((times, raw, avg))
}

/// Memory kernel on `tau = n dt`, `n dt <= t_max`.
pub fn kernel_series(cfg: &ScenarioConfig) -> Result<(Vec<f64>, Vec<C64>)> {
    cfg.validate()?;
    let model = cfg.base_model(cfg.n_half.unwrap_or(DEFAULT_N_HALF))?;
    let grid = reduced_grid(cfg)?;
    let (taus, _) = downsample(cfg, grid, vec![C64::new(0.0, 0.0); grid.len]);
    let values = taus.iter().map(|&t| model.memory_kernel(t)).collect();
    Ok((taus, values))
}
