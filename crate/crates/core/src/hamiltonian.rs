//! Single-excitation Hamiltonian of the resonator array in the rotating frame.
//!
//! Basis ordering: index 0 is the excited emitter `|e,0>`, index `1 + (l + N)`
//! is one photon in cavity `l in [-N, N]`.

use num_complex::Complex64 as C64;

use crate::model::LatticeModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix {
    n_half: usize,
    detuning: f64,
    hop: f64,
    g0: f64,
}

pub const EMITTER: usize = 0;

/// Basis index of cavity `l`.
pub fn site_index(n_half: usize, l: i64) -> usize {
    (1 + n_half as i64 + l) as usize
}

pub fn build_hamiltonian(model: &LatticeModel) -> HamiltonianMatrix {
    HamiltonianMatrix {
        n_half: model.n_half,
        detuning: model.detuning(),
        hop: model.hop_j,
        g0: model.g0_coupling,
    }
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        2 * self.n_half + 2
    }

    pub fn n_half(&self) -> usize {
        self.n_half
    }

    /// Nonzero entries `(row, col, value)`, row-major. At most three per row
    /// off the diagonal.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_half as i64;
        let centre = site_index(self.n_half, 0);
        let mut out = Vec::with_capacity(4 * self.dim());
        if self.g0 != 0.0 {
            out.push((EMITTER, centre, self.g0));
        }
        for l in -n..=n {
            let i = site_index(self.n_half, l);
            if l > -n {
                out.push((i, i - 1, -self.hop));
            }
            if self.detuning != 0.0 {
                out.push((i, i, self.detuning));
            }
            if l < n {
                out.push((i, i + 1, -self.hop));
            }
            if l == 0 && self.g0 != 0.0 {
                out.push((i, EMITTER, self.g0));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut m = vec![vec![0.0; d]; d];
        for (i, j, v) in self.entries() {
            m[i][j] += v;
        }
        m
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let d = self.dim();
        debug_assert_eq!(psi.len(), d);
        debug_assert_eq!(out.len(), d);
        let centre = site_index(self.n_half, 0);
        let (hop, det) = (self.hop, self.detuning);

        out[EMITTER] = psi[centre] * self.g0;
        let sites = &psi[1..];
        let last = sites.len() - 1;
        for i in 0..=last {
            let left = if i > 0 { sites[i - 1] } else { C64::new(0.0, 0.0) };
            let right = if i < last { sites[i + 1] } else { C64::new(0.0, 0.0) };
            out[i + 1] = sites[i] * det - (left + right) * hop;
        }
        out[centre] += psi[EMITTER] * self.g0;
    }

    /// `out = -i H psi`, the Schrodinger right-hand side.
    pub fn apply_generator(&self, psi: &[C64], out: &mut [C64]) {
        self.apply(psi, out);
        for v in out.iter_mut() {
            *v = C64::new(v.im, -v.re);
        }
    }

    pub fn expectation(&self, psi: &[C64], scratch: &mut [C64]) -> f64 {
        self.apply(psi, scratch);
        psi.iter().zip(scratch.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Number of eigenvalues strictly below `x`.
    ///
    /// The coupling graph is a chain with one pendant vertex (the emitter)
    /// on the centre site, i.e. a tree. Eliminating leaves first gives an
    /// `L D L^T` factorization of `H - x`, and by Sylvester's law of inertia
    /// the count of negative pivots equals the count of eigenvalues below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.n_half;
        let diag = self.detuning - x;
        let hop2 = self.hop * self.hop;
        let mut negatives = 0usize;

        let arm = |negatives: &mut usize| -> f64 {
            // Sites N, N-1, ..., 1 (or the mirror arm); returns the last pivot.
            let mut d = 0.0f64;
            for step in 0..n {
                d = if step == 0 { diag } else { diag - hop2 / d };
                if d == 0.0 {
                    d = f64::EPSILON * (1.0 + hop2);
                }
                if d < 0.0 {
                    *negatives += 1;
                }
            }
            d
        };
        let left = arm(&mut negatives);
        let right = arm(&mut negatives);

        let mut emitter = -x;
        if emitter == 0.0 {
            emitter = f64::EPSILON;
        }
        if emitter < 0.0 {
            negatives += 1;
        }
        let centre = diag - hop2 / left - hop2 / right - self.g0 * self.g0 / emitter;
        if centre < 0.0 {
            negatives += 1;
        }
        negatives
    }

    /// Interval guaranteed to hold the spectrum (Gershgorin).
    pub fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.hop + self.g0;
        let lo = (self.detuning - r).min(-self.g0);
        let hi = (self.detuning + r).max(self.g0);
        (lo, hi)
    }

    /// The `index`-th eigenvalue in ascending order, by bisection on
    /// [`count_below`](Self::count_below).
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        lo -= 1e-9;
        hi += 1e-9;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.eigenvalue(i)).collect()
    }

    pub fn spectral_range(&self) -> (f64, f64) {
        (self.eigenvalue(0), self.eigenvalue(self.dim() - 1))
    }
}
