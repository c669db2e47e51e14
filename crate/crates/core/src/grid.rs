//! Discretization of the periodic box.
//!
//! Coefficients live on the full square of retained wavevectors
//! `|k|_inf <= kmax`, stored lexicographically in `(k1, k2)` with `k1`
//! varying slowest. The mean mode `(0, 0)` sits at the centre of the square
//! and the conjugate partner of index `i` is `len - 1 - i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DealiasRule {
    /// Keep `|k| < N/3`; products are evaluated on the `N x N` grid.
    TwoThirds,
    /// Keep `|k| < N/2`; products are evaluated on a `3N/2` padded grid.
    ThreeHalvesPad,
}

impl DealiasRule {
    pub fn id(self) -> u32 {
        match self {
            DealiasRule::TwoThirds => 0,
            DealiasRule::ThreeHalvesPad => 1,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(DealiasRule::TwoThirds),
            1 => Ok(DealiasRule::ThreeHalvesPad),
            other => Err(Error::Format(format!("unknown dealias rule id {other}"))),
        }
    }
}

/// Evaluation grid refinement relative to `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pad {
    One,
    ThreeHalves,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    rule: DealiasRule,
    box_size: f64,
}

impl SpectralGrid {
    pub fn new(n: usize, rule: DealiasRule) -> Result<Self> {
        Self::with_box(2, n, rule, 2.0 * PI)
    }

    pub fn with_box(dim: usize, n: usize, rule: DealiasRule, box_size: f64) -> Result<Self> {
        if dim != 2 {
            return Err(Error::Grid(format!(
                "only the two-dimensional torus is implemented (dim = {dim})"
            )));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "modes per axis must be even and >= 4, got {n}"
            )));
        }
        if rule == DealiasRule::ThreeHalvesPad && !(3 * n / 2).is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "3/2 padding of N = {n} gives an odd grid; use N divisible by 4"
            )));
        }
        if !(box_size.is_finite() && box_size > 0.0) {
            return Err(Error::Grid(format!("box size must be positive, got {box_size}")));
        }
        Ok(SpectralGrid {
            dim,
            n,
            rule,
            box_size,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> DealiasRule {
        self.rule
    }

    pub fn box_size(&self) -> f64 {
        self.box_size
    }

    /// Largest retained integer wavenumber per axis.
    pub fn kmax(&self) -> usize {
        match self.rule {
            // largest k with 3k < N
            DealiasRule::TwoThirds => (self.n - 1) / 3,
            DealiasRule::ThreeHalvesPad => self.n / 2 - 1,
        }
    }

    pub fn side(&self) -> usize {
        2 * self.kmax() + 1
    }

    /// Number of stored modes, including the mean.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean_index(&self) -> usize {
        self.len() / 2
    }

    pub fn conj_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn index(&self, k1: i32, k2: i32) -> Option<usize> {
        let kmax = self.kmax() as i32;
        if k1.abs() > kmax || k2.abs() > kmax {
            return None;
        }
        let side = self.side() as i32;
        Some(((k1 + kmax) * side + (k2 + kmax)) as usize)
    }

    /// Integer wavevector stored at `idx`.
    pub fn wavenumber(&self, idx: usize) -> (i32, i32) {
        let side = self.side();
        let kmax = self.kmax() as i32;
        ((idx / side) as i32 - kmax, (idx % side) as i32 - kmax)
    }

    /// Physical wavevector `2 pi k / L`.
    pub fn k_vec(&self, idx: usize) -> [f64; 2] {
        let (k1, k2) = self.wavenumber(idx);
        let s = self.k_scale();
        [s * k1 as f64, s * k2 as f64]
    }

    pub fn k_sq(&self, idx: usize) -> f64 {
        let [a, b] = self.k_vec(idx);
        a * a + b * b
    }

    pub fn k_scale(&self) -> f64 {
        2.0 * PI / self.box_size
    }

    /// Sup-norm of the integer wavevector, used by the Galerkin cutoff.
    pub fn k_inf(&self, idx: usize) -> usize {
        let (k1, k2) = self.wavenumber(idx);
        k1.unsigned_abs().max(k2.unsigned_abs()) as usize
    }

    pub fn volume(&self) -> f64 {
        self.box_size * self.box_size
    }

    /// Padding used for pseudo-spectral products under this grid's rule.
    pub fn nonlinear_pad(&self) -> Pad {
        match self.rule {
            DealiasRule::TwoThirds => Pad::One,
            DealiasRule::ThreeHalvesPad => Pad::ThreeHalves,
        }
    }

    /// Points per axis of the evaluation grid for `pad`.
    pub fn eval_size(&self, pad: Pad) -> Result<usize> {
        let m = match pad {
            Pad::One => self.n,
            Pad::Two => 2 * self.n,
            Pad::ThreeHalves => {
                if !(3 * self.n).is_multiple_of(2) {
                    return Err(Error::Grid("3/2 padding needs an even product".into()));
                }
                3 * self.n / 2
            }
        };
        self.check_eval_size(m)?;
        Ok(m)
    }

    /// Validates an explicit evaluation size (used by refined-grid oracles).
    pub fn check_eval_size(&self, m: usize) -> Result<()> {
        if !m.is_multiple_of(2) {
            return Err(Error::Grid(format!("padded grid size {m} is not even")));
        }
        if m <= 2 * self.kmax() {
            return Err(Error::Grid(format!(
                "evaluation grid {m} cannot represent |k| <= {}",
                self.kmax()
            )));
        }
        Ok(())
    }

    /// Same box and rule with a different resolution.
    pub fn resized(&self, n: usize) -> Result<Self> {
        Self::with_box(self.dim, n, self.rule, self.box_size)
    }
}
