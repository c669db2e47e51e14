use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent regime of the p-structure stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `1 < p <= 2` (shear thinning).
    PLe2,
    /// `2 < p <= (2n + 6) / (n + 2)` (shear thickening).
    PGt2,
}

/// Physical data of the model.
///
/// `kappa0` scales the p-structure stress, `kappa1` the bipolar
/// (bi-Laplacian) viscosity, `mu` the magnetic coupling, `s` the magnetic
/// diffusivity, `epsilon` the regularization of the stress and `p` its
/// growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub kappa0: f64,
    pub kappa1: f64,
    pub mu: f64,
    pub s: f64,
    pub epsilon: f64,
    pub p: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            kappa0: 0.5,
            kappa1: 1.0,
            mu: 1.0,
            s: 1.0,
            epsilon: 1.0,
            p: 2.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(kappa0: f64, kappa1: f64, mu: f64, s: f64, epsilon: f64, p: f64) -> Result<Self> {
        let params = PhysicalParams {
            kappa0,
            kappa1,
            mu,
            s,
            epsilon,
            p,
        };
        params.validate(2)?;
        Ok(params)
    }

    /// Upper end of the admissible exponent range in dimension `n`.
    pub fn p_max(n: usize) -> f64 {
        (2.0 * n as f64 + 6.0) / (n as f64 + 2.0)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let finite = [
            self.kappa0,
            self.kappa1,
            self.mu,
            self.s,
            self.epsilon,
            self.p,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("all physical constants must be finite".into()));
        }
        // kappa0 = 0 switches the stress off and mu = 0 decouples the
        // magnetic field; both are admissible degenerate cases.
        if self.kappa0 < 0.0 || self.mu < 0.0 {
            return Err(Error::Parameter("kappa0 and mu must be non-negative".into()));
        }
        if self.kappa1 <= 0.0 || self.s <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::Parameter(
                "kappa1, S and epsilon must be positive".into(),
            ));
        }
        let pmax = Self::p_max(n);
        if !(self.p > 1.0 && self.p <= pmax + 1e-15) {
            return Err(Error::Parameter(format!(
                "p = {} outside (1, {pmax}]",
                self.p
            )));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.p <= 2.0 {
            Regime::PLe2
        } else {
            Regime::PGt2
        }
    }

    /// `q = 2p - 2`.
    pub fn q(&self) -> f64 {
        2.0 * self.p - 2.0
    }

    /// `q a = (q (2 + n) - 2n) / 4`, the Gagliardo-Nirenberg product exponent.
    pub fn qa(&self, n: usize) -> f64 {
        let n = n as f64;
        (self.q() * (2.0 + n) - 2.0 * n) / 4.0
    }

    /// Interpolation exponent `a`; meaningful in the `p > 2` regime only.
    pub fn a(&self, n: usize) -> f64 {
        self.qa(n) / self.q()
    }

    /// True when `q a` reaches 2, i.e. at the upper end of the exponent range.
    pub fn qa_at_boundary(&self, n: usize) -> bool {
        self.regime() == Regime::PGt2 && (self.qa(n) - 2.0).abs() < 1e-12
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
}
