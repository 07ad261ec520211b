//! Physical models of the emitter plus waveguide, golden-rule constants and
//! the memory kernel.
//!
//! Everything is expressed in the frame rotating at the emitter frequency
//! `omega0`, so only the detuning `omega_c - omega0` and the mode offsets
//! `Omega(k) = omega(k) - omega0` ever enter the dynamics.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j0;
use crate::error::{Error, Result};

/// Emitter in the central cavity of a `2N+1` site coupled-resonator array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub omega0: f64,
    pub omega_c: f64,
    pub hop_j: f64,
    pub g0_coupling: f64,
    pub n_half: usize,
}

impl LatticeModel {
    pub fn new(omega0: f64, omega_c: f64, hop_j: f64, g0_coupling: f64, n_half: usize) -> Result<Self> {
        let model = LatticeModel {
            omega0,
            omega_c,
            hop_j,
            g0_coupling,
            n_half,
        };
        model.validate()?;
        Ok(model)
    }

    /// Resonant lattice (`omega_c = omega0 = 0`) in units of `J`.
    pub fn resonant(g0_over_j: f64, n_half: usize) -> Result<Self> {
        Self::new(0.0, 0.0, 1.0, g0_over_j, n_half)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hop_j > 0.0 && self.hop_j.is_finite()) {
            return Err(Error::param("hop_j", format!("must be > 0, got {}", self.hop_j)));
        }
        if !(self.g0_coupling >= 0.0 && self.g0_coupling.is_finite()) {
            return Err(Error::param(
                "g0_coupling",
                format!("must be >= 0, got {}", self.g0_coupling),
            ));
        }
        if !self.omega0.is_finite() || !self.omega_c.is_finite() {
            return Err(Error::param("omega", "frequencies must be finite"));
        }
        if self.n_half < 1 {
            return Err(Error::param("n_half", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_g0(self, g0_coupling: f64) -> Self {
        LatticeModel { g0_coupling, ..self }
    }

    pub fn with_n_half(self, n_half: usize) -> Self {
        LatticeModel { n_half, ..self }
    }

    pub fn detuning(&self) -> f64 {
        self.omega_c - self.omega0
    }

    pub fn sites(&self) -> usize {
        2 * self.n_half + 1
    }

    /// Reduced (memory-kernel and golden-rule) descriptions assume `G0 <= J`.
    pub fn is_weak_coupling(&self) -> bool {
        self.g0_coupling / self.hop_j <= 1.0
    }

    /// Gershgorin bound on the spectral radius of the rotating-frame Hamiltonian.
    pub fn spectral_bound(&self) -> f64 {
        2.0 * self.hop_j + self.g0_coupling + self.detuning().abs()
    }

    pub fn dispersion(&self, k: f64) -> f64 {
        self.omega_c - 2.0 * self.hop_j * k.cos()
    }

    pub fn coupling(&self) -> f64 {
        self.g0_coupling / TAU.sqrt()
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Generic single-band waveguide given by a dispersion `omega(k)` and a
/// spectral coupling `g(k)` on `k in [-pi, pi)`, sampled on `k_grid_size`
/// uniform points `k_m = -pi + 2 pi m / M`.
#[derive(Clone)]
pub struct ContinuumModel {
    dispersion: RealFn,
    coupling: ComplexFn,
    pub omega0: f64,
    pub k_grid_size: usize,
}

impl fmt::Debug for ContinuumModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumModel")
            .field("omega0", &self.omega0)
            .field("k_grid_size", &self.k_grid_size)
            .finish_non_exhaustive()
    }
}

impl ContinuumModel {
    pub fn new<D, G>(dispersion: D, coupling: G, omega0: f64, k_grid_size: usize) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if k_grid_size < 2 {
            return Err(Error::param("k_grid_size", "need at least 2 grid points"));
        }
        Ok(ContinuumModel {
            dispersion: Arc::new(dispersion),
            coupling: Arc::new(coupling),
            omega0,
            k_grid_size,
        })
    }

    /// Bloch-mode form of a lattice model: `omega(k) = omega_c - 2J cos k`,
    /// `g(k) = G0 / sqrt(2 pi)`.
    pub fn from_lattice(model: &LatticeModel, k_grid_size: usize) -> Result<Self> {
        let (wc, j) = (model.omega_c, model.hop_j);
        let g = model.coupling();
        Self::new(
            move |k| wc - 2.0 * j * k.cos(),
            move |_| C64::new(g, 0.0),
            model.omega0,
            k_grid_size,
        )
    }

    pub fn dispersion(&self, k: f64) -> f64 {
        (self.dispersion)(k)
    }

    pub fn coupling(&self, k: f64) -> C64 {
        (self.coupling)(k)
    }

    /// `Omega(k) = omega(k) - omega0`.
    pub fn offset(&self, k: f64) -> f64 {
        self.dispersion(k) - self.omega0
    }

    pub fn dk(&self) -> f64 {
        TAU / self.k_grid_size as f64
    }

    pub fn k_grid(&self) -> Vec<f64> {
        k_grid(self.k_grid_size)
    }

    /// Checks `omega(-k) = omega(k)` and `g(-k) = g(k)` on the grid.
    pub fn check_symmetry(&self) -> Result<()> {
        for k in self.k_grid() {
            let dw = (self.dispersion(k) - self.dispersion(-k)).abs();
            let dg = (self.coupling(k) - self.coupling(-k)).norm();
            if dw > 1e-12 || dg > 1e-12 {
                return Err(Error::param(
                    "continuum model",
                    format!("not symmetric under k -> -k at k = {k}"),
                ));
            }
        }
        Ok(())
    }
}

/// Uniform Bloch grid `k_m = -pi + 2 pi m / M`, `m = 0..M`.
pub fn k_grid(m: usize) -> Vec<f64> {
    let dk = TAU / m as f64;
    (0..m).map(|i| -PI + i as f64 * dk).collect()
}

/// Markovian constants: `gamma = gamma_r + i gamma_i`, group velocity and
/// resonant wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovConstants {
    pub gamma_r: f64,
    pub gamma_i: f64,
    pub v_g: f64,
    pub k0: f64,
}

impl MarkovConstants {
    pub fn gamma(&self) -> C64 {
        C64::new(self.gamma_r, self.gamma_i)
    }
}

/// Common interface of the lattice and continuum descriptions.
pub trait Waveguide {
    fn golden_rule_constants(&self) -> Result<MarkovConstants>;

    /// `G(tau) = int dk |g(k)|^2 exp(-i Omega(k) tau)`.
    fn memory_kernel(&self, tau: f64) -> C64;
}

impl Waveguide for LatticeModel {
    fn golden_rule_constants(&self) -> Result<MarkovConstants> {
        let j = self.hop_j;
        let cos_k0 = self.detuning() / (2.0 * j);
        if cos_k0.abs() >= 1.0 {
            return Err(Error::NoResonance);
        }
        let k0 = if self.detuning() == 0.0 {
            FRAC_PI_2
        } else {
            cos_k0.acos()
        };
        let v_g = 2.0 * j * k0.sin();
        // 2 pi |G0/sqrt(2 pi)|^2 / v_g. The in-band principal value
        // PV int dk / (a + b cos k), |a| < b, vanishes identically.
        let gamma_r = self.g0_coupling * self.g0_coupling / v_g;
        Ok(MarkovConstants {
            gamma_r,
            gamma_i: 0.0,
            v_g,
            k0,
        })
    }

    fn memory_kernel(&self, tau: f64) -> C64 {
        let g2 = self.g0_coupling * self.g0_coupling;
        let phase = C64::from_polar(1.0, -self.detuning() * tau);
        phase * (g2 * bessel_j0(2.0 * self.hop_j * tau))
    }
}

impl Waveguide for ContinuumModel {
    fn golden_rule_constants(&self) -> Result<MarkovConstants> {
        let k0 = bisect_root(|k| self.offset(k), 0.0, PI).ok_or(Error::NoResonance)?;
        let v_g = derivative(|k| self.dispersion(k), k0).abs();
        if v_g == 0.0 {
            return Err(Error::NoResonance);
        }
        let gamma_r = TAU * self.coupling(k0).norm_sqr() / v_g;
        let gamma_i = self.lamb_shift();
        Ok(MarkovConstants {
            gamma_r,
            gamma_i,
            v_g,
            k0,
        })
    }

    fn memory_kernel(&self, tau: f64) -> C64 {
        let dk = self.dk();
        self.k_grid()
            .into_iter()
            .map(|k| C64::from_polar(self.coupling(k).norm_sqr(), -self.offset(k) * tau))
            .sum::<C64>()
            * dk
    }
}

impl ContinuumModel {
    /// `PV int dk |g(k)|^2 / (omega0 - omega(k))` over one Brillouin zone.
    ///
    /// Each simple pole `k_r` of the integrand is removed by subtracting
    /// `a_r cot((k - k_r)/2) / 2`, whose principal value over a period is
    /// zero and whose residue matches. The smooth periodic remainder is then
    /// integrated with the trapezoid rule on the model grid.
    pub fn lamb_shift(&self) -> f64 {
        let f = |k: f64| self.coupling(k).norm_sqr() / (self.omega0 - self.dispersion(k));
        let poles: Vec<(f64, f64)> = self
            .resonances()
            .into_iter()
            .map(|r| {
                let slope = derivative(|k| self.dispersion(k), r);
                (r, -self.coupling(r).norm_sqr() / slope)
            })
            .collect();
        let remainder = |k: f64| {
            let singular: f64 = poles.iter().map(|&(r, a)| 0.5 * a / ((k - r) * 0.5).tan()).sum();
            f(k) - singular
        };
        let dk = self.dk();
        let near_pole = 1e-6;
        let eta = 1e-4;
        self.k_grid()
            .into_iter()
            .map(|k| {
                let close = poles.iter().any(|&(r, _)| wrap_angle(k - r).abs() < near_pole);
                if close {
                    0.5 * (remainder(k + eta) + remainder(k - eta))
                } else {
                    remainder(k)
                }
            })
            .sum::<f64>()
            * dk
    }

    /// All roots of `omega(k) = omega0` on `[-pi, pi)`.
    fn resonances(&self) -> Vec<f64> {
        let scan = 4 * self.k_grid_size.max(256);
        let h = TAU / scan as f64;
        let mut roots = Vec::new();
        for i in 0..scan {
            let a = -PI + i as f64 * h;
            let b = a + h;
            let (fa, fb) = (self.offset(a), self.offset(b));
            if fa == 0.0 {
                roots.push(a);
            } else if fa * fb < 0.0 {
                if let Some(r) = bisect_root(|k| self.offset(k), a, b) {
                    roots.push(r);
                }
            }
        }
        roots
    }
}

fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa * fb > 0.0 || !(fa * fb).is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Some(0.5 * (a + b))
}

// Five-point central difference, O(h^4).
fn derivative<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = 1e-3;
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}
