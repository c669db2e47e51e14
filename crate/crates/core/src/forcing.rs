//! Time-dependent body forces `g(t)` built from divergence-free Fourier modes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;
use crate::state::{dual_norm_sq, DualElement, ModeField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "u")]
    Velocity,
    #[serde(rename = "b")]
    Magnetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    #[default]
    Constant,
    /// `cos(omega t + phase)`
    Sinusoid { omega: f64, phase: f64 },
    /// `exp(-rate t)`
    Decaying { rate: f64 },
    /// Piecewise-linear through `samples[i]` at `t0 + i dt`.
    Tabulated { t0: f64, dt: f64, samples: Vec<f64> },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> Result<f64> {
        match self {
            TimeProfile::Constant => Ok(1.0),
            TimeProfile::Sinusoid { omega, phase } => Ok((omega * t + phase).cos()),
            TimeProfile::Decaying { rate } => Ok((-rate * t).exp()),
            TimeProfile::Tabulated { t0, dt, samples } => {
                let n = samples.len();
                let end = t0 + dt * (n.saturating_sub(1)) as f64;
                if n == 0 || t < *t0 || t > end {
                    return Err(Error::Extrapolation { t });
                }
                if n == 1 {
                    return Ok(samples[0]);
                }
                let x = (t - t0) / dt;
                let i = (x.floor() as usize).min(n - 2);
                let w = x - i as f64;
                Ok((1.0 - w) * samples[i] + w * samples[i + 1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            TimeProfile::Constant => true,
            TimeProfile::Sinusoid { omega, phase } => omega.is_finite() && phase.is_finite(),
            TimeProfile::Decaying { rate } => rate.is_finite(),
            TimeProfile::Tabulated { t0, dt, samples } => {
                t0.is_finite()
                    && *dt > 0.0
                    && !samples.is_empty()
                    && samples.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid forcing profile {self:?}")))
        }
    }
}

/// One real forcing mode: `amplitude * (k_perp / |k|) e^{i k.x}` plus its
/// conjugate at `-k`, scaled by the time profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingTerm {
    pub k: [i32; 2],
    pub component: Component,
    /// `[re, im]`
    pub amplitude: [f64; 2],
    #[serde(default)]
    pub profile: TimeProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    #[serde(default)]
    pub terms: Vec<ForcingTerm>,
    /// `g(t)` evaluates the profiles at `t + time_offset`.
    #[serde(default)]
    pub time_offset: f64,
    /// If set, amplitudes are rescaled so that the profile-free force has
    /// this `V*` norm.
    #[serde(default)]
    pub dual_norm: Option<f64>,
}

impl Forcing {
    pub fn zero() -> Self {
        Forcing::default()
    }

    pub fn constant(terms: Vec<ForcingTerm>) -> Self {
        Forcing {
            terms,
            ..Forcing::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() || self.dual_norm == Some(0.0)
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.profile == TimeProfile::Constant)
    }

    /// The translate `s -> g(s + t)`.
    pub fn shifted(&self, t: f64) -> Forcing {
        Forcing {
            time_offset: self.time_offset + t,
            ..self.clone()
        }
    }

    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        for term in &self.terms {
            let [k1, k2] = term.k;
            if k1 == 0 && k2 == 0 {
                return Err(Error::Config("forcing on the mean mode is not allowed".into()));
            }
            if grid.index(k1, k2).is_none() {
                return Err(Error::Config(format!(
                    "forcing mode ({k1}, {k2}) exceeds the retained cutoff {}",
                    grid.kmax()
                )));
            }
            if !(term.amplitude[0].is_finite() && term.amplitude[1].is_finite()) {
                return Err(Error::Config("forcing amplitude must be finite".into()));
            }
            term.profile.validate()?;
        }
        if let Some(n) = self.dual_norm {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::Config("forcing dual_norm must be non-negative".into()));
            }
        }
        if !self.time_offset.is_finite() {
            return Err(Error::Config("forcing time_offset must be finite".into()));
        }
        Ok(())
    }

    fn assemble<F: Fn(&ForcingTerm) -> Result<f64>>(
        &self,
        grid: &SpectralGrid,
        weight: F,
    ) -> Result<DualElement> {
        let mut u = ModeField::zeros(grid);
        let mut b = ModeField::zeros(grid);
        for term in &self.terms {
            let [k1, k2] = term.k;
            let idx = grid.index(k1, k2).ok_or_else(|| {
                Error::Config(format!("forcing mode ({k1}, {k2}) is not retained"))
            })?;
            if idx == grid.mean_index() {
                return Err(Error::Config("forcing on the mean mode is not allowed".into()));
            }
            let w = weight(term)?;
            let [a, c] = grid.k_vec(idx);
            let kk = (a * a + c * c).sqrt();
            let amp = Complex64::new(term.amplitude[0], term.amplitude[1]) * w;
            let m = [amp * (-c / kk), amp * (a / kk)];
            let target = match term.component {
                Component::Velocity => &mut u,
                Component::Magnetic => &mut b,
            };
            let j = grid.conj_index(idx);
            let d = target.data_mut();
            d[idx][0] += m[0];
            d[idx][1] += m[1];
            d[j][0] += m[0].conj();
            d[j][1] += m[1].conj();
        }
        DualElement::new(u, b)
    }

    fn scale(&self, grid: &SpectralGrid, params: &PhysicalParams) -> Result<f64> {
        match self.dual_norm {
            None => Ok(1.0),
            Some(target) => {
                let raw = dual_norm_sq(&self.assemble(grid, |_| Ok(1.0))?, params)?.sqrt();
                if raw == 0.0 {
                    if target == 0.0 {
                        Ok(0.0)
                    } else {
                        Err(Error::Config("cannot rescale a zero forcing".into()))
                    }
                } else {
                    Ok(target / raw)
                }
            }
        }
    }

    /// `g(t)` as a dual element.
    pub fn eval(&self, grid: &SpectralGrid, params: &PhysicalParams, t: f64) -> Result<DualElement> {
        let s = self.scale(grid, params)?;
        let tt = t + self.time_offset;
        self.assemble(grid, |term| Ok(s * term.profile.value(tt)?))
    }

    pub fn dual_norm_sq_at(&self, grid: &SpectralGrid, params: &PhysicalParams, t: f64) -> Result<f64> {
        dual_norm_sq(&self.eval(grid, params, t)?, params)
    }

    /// Largest `|t|` at which every profile can be evaluated.
    pub fn valid_until(&self) -> f64 {
        let mut end = f64::INFINITY;
        for term in &self.terms {
            if let TimeProfile::Tabulated { t0, dt, samples } = &term.profile {
                end = end.min(t0 + dt * (samples.len().saturating_sub(1)) as f64 - self.time_offset);
            }
        }
        end
    }
}

/// Free-function form of [`Forcing::eval`].
pub fn eval_forcing(
    g: &Forcing,
    grid: &SpectralGrid,
    params: &PhysicalParams,
    t: f64,
) -> Result<DualElement> {
    g.eval(grid, params, t)
}
