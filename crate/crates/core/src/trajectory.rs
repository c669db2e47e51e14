use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;
use crate::state::SpectralState;

/// Uniformly spaced record of a solution together with the data that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: SpectralGrid,
    params: PhysicalParams,
    forcing: Forcing,
    record_dt: f64,
    times: Vec<f64>,
    states: Vec<SpectralState>,
}

impl Trajectory {
    pub fn new(grid: SpectralGrid, params: PhysicalParams, forcing: Forcing, record_dt: f64) -> Self {
        Trajectory {
            grid,
            params,
            forcing,
            record_dt,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    /// Builds a trajectory from frames, checking spacing and state invariants.
    pub fn from_frames(
        grid: SpectralGrid,
        params: PhysicalParams,
        forcing: Forcing,
        record_dt: f64,
        times: Vec<f64>,
        states: Vec<SpectralState>,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Shape("times and states differ in length".into()));
        }
        let mut t = Trajectory::new(grid, params, forcing, record_dt);
        for (time, s) in times.into_iter().zip(states) {
            s.check_invariants(crate::state::STATE_TOL)?;
            t.push(time, s)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, time: f64, state: SpectralState) -> Result<()> {
        if state.grid() != &self.grid {
            return Err(Error::Shape("state does not live on the trajectory grid".into()));
        }
        if let Some(&last) = self.times.last() {
            if !(time > last) {
                return Err(Error::NonMonotoneTime(self.times.len()));
            }
            let gap = time - last;
            if (gap - self.record_dt).abs() > 1e-9 * self.record_dt.max(1.0) {
                return Err(Error::Invariant(format!(
                    "frame spacing {gap} differs from the record interval {}",
                    self.record_dt
                )));
            }
        }
        self.times.push(time);
        self.states.push(state);
        Ok(())
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn set_forcing(&mut self, forcing: Forcing) {
        self.forcing = forcing;
    }

    pub fn record_dt(&self) -> f64 {
        self.record_dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    pub fn end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }

    /// Frames `lo..hi` as a new trajectory with the same data.
    pub fn slice(&self, lo: usize, hi: usize) -> Trajectory {
        Trajectory {
            grid: self.grid,
            params: self.params,
            forcing: self.forcing.clone(),
            record_dt: self.record_dt,
            times: self.times[lo..hi].to_vec(),
            states: self.states[lo..hi].to_vec(),
        }
    }

    /// Index of the recorded frame closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        if self.is_empty() {
            return 0;
        }
        let x = ((t - self.start()) / self.record_dt).round();
        (x.max(0.0) as usize).min(self.len() - 1)
    }

    pub(crate) fn with_frames(&self, times: Vec<f64>, states: Vec<SpectralState>) -> Trajectory {
        Trajectory {
            grid: self.grid,
            params: self.params,
            forcing: self.forcing.clone(),
            record_dt: self.record_dt,
            times,
            states,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DealiasRule;

    #[test]
    fn frames_must_be_uniform_and_increasing() {
        let g = SpectralGrid::new(8, DealiasRule::ThreeHalvesPad).unwrap();
        let mut t = Trajectory::new(g, PhysicalParams::default(), Forcing::zero(), 0.1);
        t.push(0.0, SpectralState::zeros(&g)).unwrap();
        t.push(0.1, SpectralState::zeros(&g)).unwrap();
        assert!(t.push(0.1, SpectralState::zeros(&g)).is_err());
        assert!(t.push(0.35, SpectralState::zeros(&g)).is_err());
        assert_eq!(t.len(), 2);
        assert!((t.span() - 0.1).abs() < 1e-15);
        assert_eq!(t.nearest_index(0.09), 1);
    }
}
