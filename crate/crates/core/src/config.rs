//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! n = 32
//! rule = "three_halves_pad"
//!
//! [params]
//! kappa0 = 0.5
//! kappa1 = 1.0
//! mu = 1.0
//! s = 1.0
//! epsilon = 1.0
//! p = 1.5
//!
//! [[forcing.terms]]
//! k = [1, 0]
//! component = "u"
//! amplitude = [1.0, 0.0]
//!
//! [solver]
//! dt = 0.005
//! scheme = "if_rk4"
//! t_end = 5.0
//! record_stride = 4
//! seed = 42
//!
//! [solver.initial]
//! kind = "random"
//! amplitude = 1.0
//! ```

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::OmegaSearch;
use crate::error::{Error, Result};
use crate::forcing::{Component, Forcing};
use crate::grid::{DealiasRule, SpectralGrid};
use crate::params::PhysicalParams;
use crate::random::{random_state, RandomSpec};
use crate::solver::{GalerkinConfig, Scheme};
use crate::state::{ModeField, SpectralState};

fn default_box() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub rule: DealiasRule,
    #[serde(default = "default_box")]
    pub box_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    Zero,
    Random,
    /// One real divergence-free Fourier mode.
    Mode,
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

fn unit_k() -> [i32; 2] {
    [1, 0]
}

fn velocity() -> Component {
    Component::Velocity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    #[serde(default)]
    pub kind: InitialKind,
    /// Target `|y0|`.
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "four")]
    pub kmax: usize,
    #[serde(default = "one")]
    pub slope: f64,
    #[serde(default = "unit_k")]
    pub k: [i32; 2],
    #[serde(default = "velocity")]
    pub component: Component,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            kind: InitialKind::Zero,
            amplitude: 1.0,
            kmax: 4,
            slope: 1.0,
            k: unit_k(),
            component: velocity(),
        }
    }
}

fn if_rk4() -> Scheme {
    Scheme::IfRk4
}

fn stride_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Mode cutoff; defaults to the grid's `kmax`.
    #[serde(default)]
    pub m: Option<usize>,
    pub dt: f64,
    #[serde(default = "if_rk4")]
    pub scheme: Scheme,
    pub t_end: f64,
    #[serde(default = "stride_one")]
    pub record_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Overrides the Poincare constant.
    pub lambda: Option<f64>,
    /// Horizon of the `Omega_lambda` search; defaults to `t_end`.
    pub omega_horizon: Option<f64>,
    pub h_points: usize,
    pub samples_per_unit: usize,
    /// Spacing of the `t` grid of the search; defaults to the record interval.
    pub t_stride: Option<f64>,
    /// Relative tolerance on the windowed energy budget.
    pub energy_tol: f64,
    /// Samples per property in `props operators`.
    pub samples: usize,
    pub delta: f64,
    pub window: f64,
    pub spacing: f64,
    pub cutoff: f64,
    /// `|y0|` of the absorbing-ball ensemble members.
    pub ensemble_amplitudes: Vec<f64>,
    /// Samples for the fitted operator constants.
    pub fit_samples: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let o = OmegaSearch::default();
        AnalysisSection {
            lambda: None,
            omega_horizon: None,
            h_points: o.h_points,
            samples_per_unit: o.samples_per_unit,
            t_stride: None,
            energy_tol: 1e-3,
            samples: 200,
            delta: 0.25,
            window: 1.0,
            spacing: 1.0,
            cutoff: 2.0,
            ensemble_amplitudes: vec![1.0, 10.0, 100.0],
            fit_samples: 100,
        }
    }
}

impl AnalysisSection {
    pub fn omega_search(&self, record_dt: f64) -> OmegaSearch {
        OmegaSearch {
            h_points: self.h_points,
            samples_per_unit: self.samples_per_unit,
            t_stride: self.t_stride.unwrap_or(record_dt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub params: PhysicalParams,
    #[serde(default)]
    pub forcing: Forcing,
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid()?;
        self.params.validate(g.dim())?;
        self.forcing.validate(&g)?;
        self.galerkin()?.validate(&g)?;
        let ic = &self.solver.initial;
        if !(ic.amplitude.is_finite() && ic.amplitude >= 0.0) {
            return Err(Error::Config("initial amplitude must be non-negative".into()));
        }
        if ic.kind == InitialKind::Mode {
            let [k1, k2] = ic.k;
            if (k1, k2) == (0, 0) || g.index(k1, k2).is_none() {
                return Err(Error::Config(format!("initial mode ({k1}, {k2}) is not retained")));
            }
        }
        let a = &self.analysis;
        if !(0.0..0.5).contains(&a.delta) {
            return Err(Error::Config(format!("delta {} outside [0, 1/2)", a.delta)));
        }
        if a.h_points < 2 || a.samples_per_unit < 2 || a.t_stride.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("invalid Omega search resolution".into()));
        }
        if let Some(l) = a.lambda {
            if !(l > 0.0) {
                return Err(Error::Config("lambda must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::with_box(2, self.grid.n, self.grid.rule, self.grid.box_size)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn galerkin(&self) -> Result<GalerkinConfig> {
        let g = self.grid()?;
        Ok(GalerkinConfig {
            m: self.solver.m.unwrap_or(g.kmax()),
            dt: self.solver.dt,
            scheme: self.solver.scheme,
            t_end: self.solver.t_end,
            record_stride: self.solver.record_stride,
        })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.solver.seed)
    }

    /// Initial state drawn with the configured seed, scaled to `amplitude`.
    pub fn initial_state(&self) -> Result<SpectralState> {
        initial_state(&self.grid()?, &self.solver.initial, &mut self.rng())
    }
}

pub fn initial_state(
    grid: &SpectralGrid,
    ic: &InitialCondition,
    rng: &mut ChaCha8Rng,
) -> Result<SpectralState> {
    match ic.kind {
        InitialKind::Zero => Ok(SpectralState::zeros(grid)),
        InitialKind::Random => {
            let spec = RandomSpec {
                amplitude: ic.amplitude,
                kmax: ic.kmax,
                slope: ic.slope,
                ..RandomSpec::default()
            };
            Ok(random_state(grid, rng, &spec))
        }
        InitialKind::Mode => {
            let [k1, k2] = ic.k;
            let idx = grid
                .index(k1, k2)
                .ok_or_else(|| Error::Config(format!("initial mode ({k1}, {k2}) is not retained")))?;
            let [a, b] = grid.k_vec(idx);
            let kk = (a * a + b * b).sqrt();
            let c = ic.amplitude / (2.0 * grid.volume()).sqrt();
            let m = [Complex64::new(-b / kk * c, 0.0), Complex64::new(a / kk * c, 0.0)];
            let mut f = ModeField::zeros(grid);
            f.data_mut()[idx] = m;
            f.data_mut()[grid.conj_index(idx)] = m;
            let zero = ModeField::zeros(grid);
            match ic.component {
                Component::Velocity => SpectralState::new(f, zero),
                Component::Magnetic => SpectralState::new(zero, f),
            }
        }
    }
}
