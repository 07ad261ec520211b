//! Exact single-excitation dynamics: the lattice Schrodinger equation and
//! the equivalent Bloch-mode (k-space) equations.
//!
//! Both are stepped with the classical fourth-order Runge-Kutta scheme. For
//! a linear generator one step is a fixed polynomial in `dt H`, so any two
//! unitarily equivalent Hamiltonians produce unitarily equivalent numerics.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianMatrix, EMITTER};
use crate::model::{ContinuumModel, LatticeModel, Waveguide};
use crate::state::{JointState, SpectralAmplitude};
use crate::trace::{DecayTrace, TraceMetadata};

/// Largest allowed `dt * (spectral bound)`.
pub const STABILITY_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub norm_tolerance: f64,
    pub store_field: bool,
    pub edge_guard: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: 0.02,
            t_max: 150.0,
            sample_every: 5,
            norm_tolerance: 1e-8,
            store_field: false,
            edge_guard: true,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::param("t_max", format!("must be > 0, got {}", self.t_max)));
        }
        if self.sample_every < 1 {
            return Err(Error::param("sample_every", "must be >= 1"));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::param("norm_tolerance", "must be > 0"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        ((self.t_max / self.dt).round() as usize).max(1)
    }

    fn check_stability(&self, spectral_bound: f64) -> Result<()> {
        let product = self.dt * spectral_bound;
        if product > STABILITY_LIMIT {
            return Err(Error::StabilityGuard { product });
        }
        Ok(())
    }
}

/// Earliest time a wavefront leaving the occupied region can reach the
/// lattice boundary, at the maximal group speed `2J` of the cosine band.
pub fn edge_effect_horizon(model: &LatticeModel, state: &JointState) -> f64 {
    let radius = state.support_radius().min(model.n_half);
    (model.n_half - radius) as f64 / (2.0 * model.hop_j)
}

trait Generator {
    fn dim(&self) -> usize;
    /// `out = H psi`.
    fn apply(&self, psi: &[C64], out: &mut [C64]);
}

impl Generator for HamiltonianMatrix {
    fn dim(&self) -> usize {
        HamiltonianMatrix::dim(self)
    }

    fn apply(&self, psi: &[C64], out: &mut [C64]) {
        HamiltonianMatrix::apply(self, psi, out)
    }
}

/// Bloch-mode Hamiltonian in the orthonormal coordinates
/// `u_m = sqrt(dk) phi(k_m)`: a diagonal `Omega(k_m)` block bordered by the
/// coupling vector `w_m = sqrt(dk) g*(k_m)`.
struct KspaceGenerator {
    offsets: Vec<f64>,
    coupling: Vec<C64>,
}

impl Generator for KspaceGenerator {
    fn dim(&self) -> usize {
        self.offsets.len() + 1
    }

    fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let c = psi[0];
        let mut drive = C64::new(0.0, 0.0);
        for ((o, (&omega, w)), u) in out[1..]
            .iter_mut()
            .zip(self.offsets.iter().zip(&self.coupling))
            .zip(&psi[1..])
        {
            drive += w.conj() * u;
            *o = u * omega + w * c;
        }
        out[0] = drive;
    }
}

struct Propagation {
    times: Vec<f64>,
    c_a: Vec<C64>,
    norm: Vec<f64>,
    fields: Option<Vec<Vec<C64>>>,
    max_norm_drift: f64,
    max_energy_drift: f64,
}

fn dot_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

// psi' = -i H psi, stepped with RK4. Samples every `sample_every` steps.
fn propagate<G: Generator>(gen: &G, mut psi: Vec<C64>, cfg: &EvolutionConfig) -> Result<Propagation> {
    let dim = gen.dim();
    debug_assert_eq!(psi.len(), dim);
    let zero = C64::new(0.0, 0.0);
    let mut k = [vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]];
    let mut stage = vec![zero; dim];
    let mut scratch = vec![zero; dim];

    let steps = cfg.steps();
    let samples = steps / cfg.sample_every + 1;
    let mut out = Propagation {
        times: Vec::with_capacity(samples),
        c_a: Vec::with_capacity(samples),
        norm: Vec::with_capacity(samples),
        fields: cfg.store_field.then(|| Vec::with_capacity(samples)),
        max_norm_drift: 0.0,
        max_energy_drift: 0.0,
    };

    gen.apply(&psi, &mut scratch);
    let energy0 = dot_re(&psi, &scratch);

    let dt = cfg.dt;
    let minus_i = C64::new(0.0, -1.0);
    for step in 0..=steps {
        if step % cfg.sample_every == 0 {
            let t = step as f64 * dt;
            let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            gen.apply(&psi, &mut scratch);
            let energy = dot_re(&psi, &scratch);
            out.max_norm_drift = out.max_norm_drift.max((norm - 1.0).abs());
            out.max_energy_drift = out.max_energy_drift.max((energy - energy0).abs());
            if (norm - 1.0).abs() > cfg.norm_tolerance {
                return Err(Error::NormDrift {
                    t,
                    norm,
                    tolerance: cfg.norm_tolerance,
                });
            }
            out.times.push(t);
            out.c_a.push(psi[EMITTER]);
            out.norm.push(norm);
            if let Some(fields) = out.fields.as_mut() {
                fields.push(psi[1..].to_vec());
            }
        }
        if step == steps {
            break;
        }

        let coeffs = [0.5 * dt, 0.5 * dt, dt];
        gen.apply(&psi, &mut k[0]);
        for s in 0..3 {
            for ((st, p), kv) in stage.iter_mut().zip(&psi).zip(&k[s]) {
                *st = p + minus_i * kv * coeffs[s];
            }
            let (_, rest) = k.split_at_mut(s + 1);
            gen.apply(&stage, &mut rest[0]);
        }
        let w = minus_i * (dt / 6.0);
        for i in 0..dim {
            psi[i] += w * (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]);
        }
    }
    Ok(out)
}

/// Propagates `state0` under the lattice Hamiltonian.
pub fn evolve(state0: &JointState, model: &LatticeModel, cfg: &EvolutionConfig) -> Result<DecayTrace> {
    model.validate()?;
    cfg.validate()?;
    if state0.photon.len() != model.sites() {
        return Err(Error::DimensionMismatch {
            expected: model.sites(),
            found: state0.photon.len(),
        });
    }
    state0.check_normalized()?;
    cfg.check_stability(model.spectral_bound())?;
    let horizon = edge_effect_horizon(model, state0);
    if cfg.edge_guard && cfg.t_max > horizon {
        return Err(Error::EdgeHorizonExceeded {
            t_max: cfg.t_max,
            horizon,
        });
    }

    let h = build_hamiltonian(model);
    let run = propagate(&h, state0.to_vector(), cfg)?;

    let consts = model.golden_rule_constants().ok();
    let metadata = TraceMetadata {
        solver: "exact".into(),
        model: Some(*model),
        dt: cfg.dt,
        t_max: cfg.t_max,
        sample_every: cfg.sample_every,
        gamma_r: consts.map(|c| c.gamma_r),
        gamma_i: consts.map(|c| c.gamma_i),
        delta_t: state0.metadata.delta_t,
        epsilon: state0.metadata.epsilon,
        c_a0_sq_exact: Some(state0.c_a.norm_sqr()),
        c_a0_sq_closed_form: state0.metadata.c_a0_sq_closed_form,
        edge_horizon: Some(horizon),
        max_norm_drift: Some(run.max_norm_drift),
        max_energy_drift: Some(run.max_energy_drift),
    };
    let mut trace = DecayTrace::new(run.times, run.c_a, run.norm, metadata);
    trace.field_snapshots = run.fields;
    Ok(trace)
}

/// Integrates the coupled amplitude equations on the discrete Bloch grid of
/// `phi0`:
///
/// ```text
/// i dc/dt   = sum_m dk g(k_m) phi_m
/// i dphi/dt = Omega(k_m) phi_m + g*(k_m) c
/// ```
///
/// Field snapshots, when stored, are `phi(k_m, t)`.
pub fn evolve_kspace(
    phi0: &SpectralAmplitude,
    c_a0: C64,
    model: &ContinuumModel,
    cfg: &EvolutionConfig,
) -> Result<DecayTrace> {
    cfg.validate()?;
    let m = model.k_grid_size;
    if phi0.grid_size() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: phi0.grid_size(),
        });
    }
    let norm_sq = c_a0.norm_sqr() + phi0.weight();
    if (norm_sq - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm_sq });
    }

    let dk = model.dk();
    let sqrt_dk = dk.sqrt();
    let grid = model.k_grid();
    let gen = KspaceGenerator {
        offsets: grid.iter().map(|&k| model.offset(k)).collect(),
        coupling: grid.iter().map(|&k| model.coupling(k).conj() * sqrt_dk).collect(),
    };
    let coupling_norm = gen.coupling.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    let max_offset = gen.offsets.iter().fold(0.0f64, |a, o| a.max(o.abs()));
    cfg.check_stability(max_offset + coupling_norm)?;

    let mut psi = Vec::with_capacity(m + 1);
    psi.push(c_a0);
    psi.extend(phi0.samples.iter().map(|p| p * sqrt_dk));
    let run = propagate(&gen, psi, cfg)?;

    let consts = model.golden_rule_constants().ok();
    let metadata = TraceMetadata {
        solver: "kspace".into(),
        model: None,
        dt: cfg.dt,
        t_max: cfg.t_max,
        sample_every: cfg.sample_every,
        gamma_r: consts.map(|c| c.gamma_r),
        gamma_i: consts.map(|c| c.gamma_i),
        c_a0_sq_exact: Some(c_a0.norm_sqr()),
        max_norm_drift: Some(run.max_norm_drift),
        max_energy_drift: Some(run.max_energy_drift),
        ..TraceMetadata::default()
    };
    let mut trace = DecayTrace::new(run.times, run.c_a, run.norm, metadata);
    trace.field_snapshots = run.fields.map(|snaps| {
        snaps
            .into_iter()
            .map(|u| u.into_iter().map(|v| v / sqrt_dk).collect())
            .collect()
    });
    Ok(trace)
}
