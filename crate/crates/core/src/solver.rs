//! Galerkin time integration with integrating-factor Runge-Kutta schemes.
//!
//! The diagonal operator `A` is integrated exactly through the per-mode
//! factors `exp(-lambda_k dt)`; `A_p`, `B` and the forcing are explicit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bilinear::apply_b;
use crate::constitutive::apply_ap;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::SpectralGrid;
use crate::linear::{apply_a, magnetic_eigenvalue, velocity_eigenvalue};
use crate::params::PhysicalParams;
use crate::state::SpectralState;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    IfRk2,
    IfRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinConfig {
    /// Keep modes with `|k|_inf <= m`.
    pub m: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    pub record_stride: usize,
}

impl GalerkinConfig {
    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {}", self.dt)));
        }
        if self.m < 1 || self.m > grid.kmax() {
            return Err(Error::Parameter(format!(
                "mode cutoff {} outside [1, {}]",
                self.m,
                grid.kmax()
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Parameter("record_stride must be at least 1".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Parameter("t_end must be non-negative".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn record_dt(&self) -> f64 {
        self.dt * self.record_stride as f64
    }
}

/// Largest admissible `|y|` before a run is declared unstable.
pub const BLOW_UP_LIMIT: f64 = 1e12;

/// `P_m Phi`: zero every mode with `|k|_inf > m`.
pub fn project_pm(phi: &SpectralState, m: usize) -> SpectralState {
    phi.truncated(m)
}

/// `P_m [g(t) - A_p Phi - B(Phi, Phi)]`, identified with a state.
pub fn explicit_tendency(
    phi: &SpectralState,
    t: f64,
    g: &Forcing,
    params: &PhysicalParams,
    m: usize,
) -> Result<SpectralState> {
    let grid = phi.grid();
    let mut f = apply_ap(phi, params)?.add_scaled(1.0, &apply_b(phi, phi, params)?)?.scaled(-1.0);
    if !g.is_zero() {
        f = f.add_scaled(1.0, &g.eval(grid, params, t)?)?;
    }
    Ok(f.truncated(m).to_state())
}

/// Full tendency `P_m [g - A Phi - A_p Phi - B(Phi, Phi)]`.
pub fn rhs(
    phi: &SpectralState,
    t: f64,
    g: &Forcing,
    params: &PhysicalParams,
    m: usize,
) -> Result<SpectralState> {
    let e = explicit_tendency(phi, t, g, params, m)?;
    e.sub(&apply_a(phi, params).truncated(m).to_state())
}

/// Time stepper with precomputed integrating factors.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: SpectralGrid,
    params: PhysicalParams,
    forcing: Forcing,
    config: GalerkinConfig,
    full_u: Vec<f64>,
    full_b: Vec<f64>,
    half_u: Vec<f64>,
    half_b: Vec<f64>,
}

impl Integrator {
    pub fn new(
        grid: &SpectralGrid,
        params: &PhysicalParams,
        forcing: &Forcing,
        config: &GalerkinConfig,
    ) -> Result<Self> {
        params.validate(grid.dim())?;
        config.validate(grid)?;
        forcing.validate(grid)?;
        let dt = config.dt;
        let f = |lam: f64, h: f64| (-lam * h).exp();
        let n = grid.len();
        let lu: Vec<f64> = (0..n).map(|i| velocity_eigenvalue(grid, params, i)).collect();
        let lb: Vec<f64> = (0..n).map(|i| magnetic_eigenvalue(grid, params, i)).collect();
        Ok(Integrator {
            grid: *grid,
            params: *params,
            forcing: forcing.clone(),
            config: *config,
            full_u: lu.iter().map(|&l| f(l, dt)).collect(),
            full_b: lb.iter().map(|&l| f(l, dt)).collect(),
            half_u: lu.iter().map(|&l| f(l, 0.5 * dt)).collect(),
            half_b: lb.iter().map(|&l| f(l, 0.5 * dt)).collect(),
        })
    }

    pub fn config(&self) -> &GalerkinConfig {
        &self.config
    }

    fn full(&self, s: &SpectralState) -> SpectralState {
        let u = s.u().weighted(|i| self.full_u[i]);
        let b = s.b().weighted(|i| self.full_b[i]);
        SpectralState::from_parts_unchecked(u, b).expect("same grid")
    }

    fn half(&self, s: &SpectralState) -> SpectralState {
        let u = s.u().weighted(|i| self.half_u[i]);
        let b = s.b().weighted(|i| self.half_b[i]);
        SpectralState::from_parts_unchecked(u, b).expect("same grid")
    }

    fn n(&self, s: &SpectralState, t: f64) -> Result<SpectralState> {
        explicit_tendency(s, t, &self.forcing, &self.params, self.config.m)
    }

    /// Advances `phi` from `t` to `t + dt`.
    pub fn step(&self, phi: &SpectralState, t: f64) -> Result<SpectralState> {
        let dt = self.config.dt;
        let next = match self.config.scheme {
            Scheme::IfRk2 => {
                let k1 = self.n(phi, t)?;
                let pred = self.full(&phi.add_scaled(dt, &k1)?);
                let k2 = self.n(&pred, t + dt)?;
                self.full(&phi.add_scaled(0.5 * dt, &k1)?)
                    .add_scaled(0.5 * dt, &k2)?
            }
            Scheme::IfRk4 => {
                let th = t + 0.5 * dt;
                let k1 = self.n(phi, t)?;
                let hphi = self.half(phi);
                let k2 = self.n(&self.half(&phi.add_scaled(0.5 * dt, &k1)?), th)?;
                let k3 = self.n(&hphi.add_scaled(0.5 * dt, &k2)?, th)?;
                let k4 = self.n(&self.full(phi).add_scaled(dt, &self.half(&k3))?, t + dt)?;
                let mid = self.half(&k2.add_scaled(1.0, &k3)?);
                self.full(phi)
                    .add_scaled(dt / 6.0, &self.full(&k1))?
                    .add_scaled(dt / 3.0, &mid)?
                    .add_scaled(dt / 6.0, &k4)?
            }
        };
        let (u, b) = next.into_parts();
        let out = project_pm(&SpectralState::project(u, b)?, self.config.m);
        if !out.is_finite() {
            return Err(blow_up(t + dt, "non-finite coefficients", &self.grid, &self.params));
        }
        let h = out.h_norm();
        if h > BLOW_UP_LIMIT {
            return Err(blow_up(
                t + dt,
                &format!("|y| = {h:e} exceeds {BLOW_UP_LIMIT:e}"),
                &self.grid,
                &self.params,
            ));
        }
        Ok(out)
    }

    /// Integrates from `t0`, recording every `record_stride` steps.
    pub fn run(&self, phi0: &SpectralState, t0: f64) -> Result<Trajectory> {
        if phi0.grid() != &self.grid {
            return Err(Error::Shape("initial state does not live on the solver grid".into()));
        }
        phi0.check_invariants(crate::state::STATE_TOL)?;
        let cfg = &self.config;
        let mut traj = Trajectory::new(self.grid, self.params, self.forcing.clone(), cfg.record_dt());
        let mut phi = project_pm(phi0, cfg.m);
        traj.push(t0, phi.clone())?;
        for n in 1..=cfg.steps() {
            let t = t0 + (n - 1) as f64 * cfg.dt;
            phi = match self.step(&phi, t) {
                Ok(s) => s,
                Err(Error::BlowUp { time, reason, .. }) => {
                    return Err(Error::BlowUp {
                        time,
                        reason,
                        partial: Box::new(traj),
                    })
                }
                Err(e) => return Err(e),
            };
            if n % cfg.record_stride == 0 {
                traj.push(t0 + n as f64 * cfg.dt, phi.clone())?;
            }
        }
        Ok(traj)
    }
}

fn blow_up(time: f64, reason: &str, grid: &SpectralGrid, params: &PhysicalParams) -> Error {
    Error::BlowUp {
        time,
        reason: reason.to_string(),
        partial: Box::new(Trajectory::new(*grid, *params, Forcing::zero(), 1.0)),
    }
}

/// One step of the configured scheme.
pub fn step(
    phi: &SpectralState,
    t: f64,
    g: &Forcing,
    params: &PhysicalParams,
    config: &GalerkinConfig,
) -> Result<SpectralState> {
    Integrator::new(phi.grid(), params, g, config)?.step(phi, t)
}

/// Solves from `t = 0`, starting at `P_m Phi0`.
pub fn simulate(
    phi0: &SpectralState,
    g: &Forcing,
    params: &PhysicalParams,
    config: &GalerkinConfig,
) -> Result<Trajectory> {
    Integrator::new(phi0.grid(), params, g, config)?.run(phi0, 0.0)
}

/// Independent runs from several initial states; results keep input order.
pub fn simulate_ensemble(
    ics: &[SpectralState],
    g: &Forcing,
    params: &PhysicalParams,
    config: &GalerkinConfig,
) -> Vec<Result<Trajectory>> {
    ics.par_iter()
        .map(|phi0| simulate(phi0, g, params, config))
        .collect()
}
