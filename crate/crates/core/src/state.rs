//! Engineered initial atom-photon states and the Wannier/Bloch transform.
//!
//! Photon amplitudes `Q_l` live on the lattice sites `l in [-N, N]`, stored
//! at vector index `l + N`. The spectral amplitude is sampled on the Bloch
//! grid `k_m = -pi + 2 pi m / M` and related to the Wannier amplitudes by
//!
//! ```text
//! phi(k_m) = (2 pi)^(-1/2) sum_l Q_l exp(-i k_m l)
//! Q_l      = (2 pi)^(-1/2) sum_m dk phi(k_m) exp(i k_m l),   dk = 2 pi / M
//! ```
//!
//! which is an exact pair (and an isometry) whenever `M >= 2N + 1`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LatticeModel, Waveguide};
use crate::reduced::ForcingFunction;

/// Amplitudes below this magnitude count as empty lattice sites.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Largest tail amplitude `exp(-eps N / v_g)` tolerated at the lattice edge.
pub const TAIL_LIMIT: f64 = 1e-8;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Bare,
    VirtualBound,
    SlowDecay,
    Packet,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMetadata {
    pub kind: StateKind,
    pub c_a0_sq_exact: f64,
    /// Closed-form continuum estimate of `|c_a(0)|^2`, when one exists.
    pub c_a0_sq_closed_form: Option<f64>,
    /// Predicted trapping time of a virtual bound state.
    pub delta_t: Option<f64>,
    pub epsilon: Option<f64>,
    pub half_width: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub c_a: C64,
    pub photon: Vec<C64>,
    pub frame_omega0: f64,
    pub metadata: StateMetadata,
}

impl JointState {
    /// Excited emitter, photon vacuum.
    pub fn bare(model: &LatticeModel) -> Self {
        JointState {
            c_a: C64::new(1.0, 0.0),
            photon: vec![C64::new(0.0, 0.0); model.sites()],
            frame_omega0: model.omega0,
            metadata: StateMetadata {
                kind: StateKind::Bare,
                c_a0_sq_exact: 1.0,
                c_a0_sq_closed_form: None,
                delta_t: None,
                epsilon: None,
                half_width: None,
            },
        }
    }

    /// Validates normalization and length; `photon` has `2N+1` entries.
    pub fn from_parts(c_a: C64, photon: Vec<C64>, frame_omega0: f64) -> Result<Self> {
        if photon.len().is_multiple_of(2) {
            return Err(Error::param("photon", "length must be odd (2N+1)"));
        }
        let state = JointState {
            c_a,
            photon,
            frame_omega0,
            metadata: StateMetadata {
                kind: StateKind::Custom,
                c_a0_sq_exact: c_a.norm_sqr(),
                c_a0_sq_closed_form: None,
                delta_t: None,
                epsilon: None,
                half_width: None,
            },
        };
        state.check_normalized()?;
        Ok(state)
    }

    pub fn n_half(&self) -> usize {
        self.photon.len() / 2
    }

    /// `Q_l` for `l in [-N, N]`.
    pub fn q(&self, l: i64) -> C64 {
        self.photon[(l + self.n_half() as i64) as usize]
    }

    pub fn norm_sq(&self) -> f64 {
        self.c_a.norm_sqr() + self.photon.iter().map(|q| q.norm_sqr()).sum::<f64>()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm_sq = self.norm_sq();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(())
    }

    /// Largest `|l|` carrying amplitude above [`SUPPORT_THRESHOLD`].
    pub fn support_radius(&self) -> usize {
        let n = self.n_half() as i64;
        (-n..=n)
            .filter(|&l| self.q(l).norm() > SUPPORT_THRESHOLD)
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Full state vector in the Hamiltonian basis (emitter first).
    pub fn to_vector(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.photon.len() + 1);
        v.push(self.c_a);
        v.extend_from_slice(&self.photon);
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&JointStateRepr::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: JointStateRepr = serde_json::from_str(text)?;
        repr.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct JointStateRepr {
    c_a_re: f64,
    c_a_im: f64,
    q_re: Vec<f64>,
    q_im: Vec<f64>,
    frame_omega0: f64,
    metadata: StateMetadata,
}

impl From<&JointState> for JointStateRepr {
    fn from(s: &JointState) -> Self {
        JointStateRepr {
            c_a_re: s.c_a.re,
            c_a_im: s.c_a.im,
            q_re: s.photon.iter().map(|q| q.re).collect(),
            q_im: s.photon.iter().map(|q| q.im).collect(),
            frame_omega0: s.frame_omega0,
            metadata: s.metadata.clone(),
        }
    }
}

impl TryFrom<JointStateRepr> for JointState {
    type Error = Error;

    fn try_from(r: JointStateRepr) -> Result<Self> {
        if r.q_re.len() != r.q_im.len() {
            return Err(Error::DimensionMismatch {
                expected: r.q_re.len(),
                found: r.q_im.len(),
            });
        }
        let photon = r.q_re.iter().zip(&r.q_im).map(|(&re, &im)| C64::new(re, im)).collect();
        let mut state = JointState::from_parts(C64::new(r.c_a_re, r.c_a_im), photon, r.frame_omega0)?;
        state.metadata = r.metadata;
        Ok(state)
    }
}

/// Two-sided plane-wave packet `Q_l = i c_a(0) (G0/2J) exp(-i k0 l)`, `|l| <= L`.
///
/// `c_a(0)` is real positive and fixed by exact normalization
/// `|c_a(0)|^2 (1 + (G0/2J)^2 (2L+1)) = 1`.
pub fn make_virtual_bound_state(model: &LatticeModel, half_width: usize) -> Result<JointState> {
    model.validate()?;
    if half_width < 1 {
        return Err(Error::param("L", "packet half-width must be >= 1"));
    }
    if half_width >= model.n_half {
        return Err(Error::PacketTooLarge {
            l: half_width,
            n_half: model.n_half,
        });
    }
    let consts = model.golden_rule_constants()?;
    let ratio = model.g0_coupling / (2.0 * model.hop_j);
    let c_a0 = (1.0 / (1.0 + ratio * ratio * (2 * half_width + 1) as f64)).sqrt();

    let n = model.n_half as i64;
    let lw = half_width as i64;
    let photon = (-n..=n)
        .map(|l| {
            if l.abs() <= lw {
                C64::i() * c_a0 * ratio * C64::from_polar(1.0, -consts.k0 * l as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();

    let g0 = model.g0_coupling;
    let j = model.hop_j;
    let closed_form = 1.0 / (1.0 + g0 * g0 * half_width as f64 / (2.0 * j * j));
    Ok(JointState {
        c_a: C64::new(c_a0, 0.0),
        photon,
        frame_omega0: model.omega0,
        metadata: StateMetadata {
            kind: StateKind::VirtualBound,
            c_a0_sq_exact: c_a0 * c_a0,
            c_a0_sq_closed_form: Some(closed_form),
            delta_t: Some(half_width as f64 / consts.v_g),
            epsilon: None,
            half_width: Some(half_width),
        },
    })
}

/// Smallest `N` whose edge amplitude `exp(-eps N / v_g)` is below [`TAIL_LIMIT`].
pub fn min_n_half_for_tail(epsilon: f64, v_g: f64) -> usize {
    (v_g * (1.0 / TAIL_LIMIT).ln() / epsilon).floor() as usize + 1
}

/// One-sided exponential packet
/// `Q_l = i c_a(0) (G0/2J) exp(-eps l / v_g - i k0 l)` for `l >= 0`.
pub fn make_slow_decay_state(model: &LatticeModel, epsilon: f64) -> Result<JointState> {
    model.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("must be > 0, got {epsilon}")));
    }
    let consts = model.golden_rule_constants()?;
    let v_g = consts.v_g;
    let tail = (-epsilon * model.n_half as f64 / v_g).exp();
    if tail >= TAIL_LIMIT {
        return Err(Error::TailTruncated {
            tail,
            min_n_half: min_n_half_for_tail(epsilon, v_g),
        });
    }
    let ratio = model.g0_coupling / (2.0 * model.hop_j);
    let n = model.n_half as i64;
    let profile: Vec<C64> = (-n..=n)
        .map(|l| {
            if l >= 0 {
                let lf = l as f64;
                C64::i() * ratio * C64::from_polar((-epsilon * lf / v_g).exp(), -consts.k0 * lf)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let photon_weight: f64 = profile.iter().map(|q| q.norm_sqr()).sum();
    let c_a0 = (1.0 / (1.0 + photon_weight)).sqrt();
    let photon = profile.into_iter().map(|q| q * c_a0).collect();

    let closed_form = 1.0 / (1.0 + consts.gamma_r / (2.0 * epsilon));
    Ok(JointState {
        c_a: C64::new(c_a0, 0.0),
        photon,
        frame_omega0: model.omega0,
        metadata: StateMetadata {
            kind: StateKind::SlowDecay,
            c_a0_sq_exact: c_a0 * c_a0,
            c_a0_sq_closed_form: Some(closed_form),
            delta_t: None,
            epsilon: Some(epsilon),
            half_width: None,
        },
    })
}

/// Right-moving packet on the left of the emitter with envelope
/// `Q_l ~ i F(-l / v_g) exp(i k0 l)` for `l <= 0`, rescaled so that
/// `|c_a0|^2 + sum |Q_l|^2 = 1`.
///
/// The phase `i` makes the packet reproduce the target `F` through the
/// Bessel-series forcing for slowly varying envelopes. A vanishing forcing
/// gives the zero packet.
pub fn realspace_packet_from_forcing(forcing: &ForcingFunction, model: &LatticeModel, c_a0: C64) -> Result<Vec<C64>> {
    model.validate()?;
    let photon_weight = 1.0 - c_a0.norm_sqr();
    if photon_weight < -NORM_TOLERANCE {
        return Err(Error::param("c_a0", "|c_a0| must not exceed 1"));
    }
    let consts = model.golden_rule_constants()?;
    let n = model.n_half as i64;
    let raw: Vec<C64> = (-n..=n)
        .map(|l| {
            if l <= 0 {
                let t = -(l as f64) / consts.v_g;
                C64::i() * forcing.eval(t) * C64::from_polar(1.0, consts.k0 * l as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    let raw_weight: f64 = raw.iter().map(|q| q.norm_sqr()).sum();
    if raw_weight == 0.0 {
        return Ok(raw);
    }
    let scale = (photon_weight.max(0.0) / raw_weight).sqrt();
    Ok(raw.into_iter().map(|q| q * scale).collect())
}

/// Samples of `phi_0(k)` on the uniform Bloch grid of `samples.len()` points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    pub samples: Vec<C64>,
}

impl SpectralAmplitude {
    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn dk(&self) -> f64 {
        TAU / self.samples.len() as f64
    }

    /// `sum_m |phi(k_m)|^2 dk`.
    pub fn weight(&self) -> f64 {
        self.samples.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dk()
    }
}

fn check_grid(grid: usize, sites: usize) -> Result<()> {
    if sites.is_multiple_of(2) {
        return Err(Error::param("photon", "length must be odd (2N+1)"));
    }
    if grid < sites {
        return Err(Error::GridTooSmall { grid, sites });
    }
    Ok(())
}

/// `phi(k_m) = (2 pi)^(-1/2) sum_l Q_l exp(-i k_m l)` on an `M`-point grid.
pub fn wannier_to_spectral(photon: &[C64], grid_size: usize) -> Result<SpectralAmplitude> {
    check_grid(grid_size, photon.len())?;
    let n = (photon.len() / 2) as i64;
    let m = grid_size as i64;
    // exp(-i k_m l) = (-1)^l exp(-2 pi i m l / M): an M-point forward DFT
    // of (-1)^l Q_l with l folded modulo M.
    let mut buf = vec![C64::new(0.0, 0.0); grid_size];
    for (idx, q) in photon.iter().enumerate() {
        let l = idx as i64 - n;
        let sign = if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[l.rem_euclid(m) as usize] += q * sign;
    }
    FftPlanner::new().plan_fft_forward(grid_size).process(&mut buf);
    let scale = 1.0 / TAU.sqrt();
    Ok(SpectralAmplitude {
        samples: buf.into_iter().map(|v| v * scale).collect(),
    })
}

/// Inverse of [`wannier_to_spectral`], returning `Q_l` for `l in [-N, N]`.
pub fn spectral_to_wannier(phi: &SpectralAmplitude, n_half: usize) -> Result<Vec<C64>> {
    let sites = 2 * n_half + 1;
    check_grid(phi.grid_size(), sites)?;
    let m = phi.grid_size() as i64;
    let mut buf = phi.samples.clone();
    FftPlanner::new().plan_fft_inverse(phi.grid_size()).process(&mut buf);
    let scale = phi.dk() / TAU.sqrt();
    let n = n_half as i64;
    Ok((-n..=n)
        .map(|l| {
            let sign = if l.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[l.rem_euclid(m) as usize] * (sign * scale)
        })
        .collect())
}
