//! Fourier-space vector fields, the state pair `(u; B)`, dual elements and
//! the Hilbert-space structure (inner products, norms, duality pairing).
//!
//! All integrals carry the box volume: for coefficients `c` of a field `f`,
//! `int |f|^2 dx = vol * sum_k |c(k)|^2`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;
use crate::sum::pairwise;

/// Two complex vector components at one wavevector.
pub type Mode = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A vector field given by its coefficients on the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    grid: SpectralGrid,
    data: Vec<Mode>,
}

impl ModeField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        ModeField {
            grid: *grid,
            data: vec![[ZERO; 2]; grid.len()],
        }
    }

    pub fn from_data(grid: &SpectralGrid, data: Vec<Mode>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} modes, grid expects {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(ModeField { grid: *grid, data })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn data(&self) -> &[Mode] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Mode] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Mode> {
        self.data
    }

    pub fn component(&self, c: usize) -> Vec<Complex64> {
        self.data.iter().map(|m| m[c]).collect()
    }

    pub fn from_components(
        grid: &SpectralGrid,
        c0: &[Complex64],
        c1: &[Complex64],
    ) -> Result<Self> {
        if c0.len() != grid.len() || c1.len() != grid.len() {
            return Err(Error::Shape("component arrays do not match the grid".into()));
        }
        Ok(ModeField {
            grid: *grid,
            data: c0.iter().zip(c1).map(|(&a, &b)| [a, b]).collect(),
        })
    }

    fn same_grid(&self, other: &ModeField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Orthogonal projection onto divergence-free fields, `v - k (k.v) / |k|^2`.
    /// The mean mode is removed.
    pub fn leray(&self) -> ModeField {
        let g = &self.grid;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let k2 = g.k_sq(idx);
                if k2 == 0.0 {
                    return [ZERO; 2];
                }
                let [k1, kk2] = g.k_vec(idx);
                let kv = v[0] * k1 + v[1] * kk2;
                [v[0] - kv * (k1 / k2), v[1] - kv * (kk2 / k2)]
            })
            .collect();
        ModeField { grid: *g, data }
    }

    /// Enforces `v(-k) = conj(v(k))` by averaging each conjugate pair.
    pub fn symmetrize(&mut self) {
        let n = self.data.len();
        for idx in 0..=n / 2 {
            let j = n - 1 - idx;
            for c in 0..2 {
                let avg = 0.5 * (self.data[idx][c] + self.data[j][c].conj());
                self.data[idx][c] = avg;
                self.data[j][c] = avg.conj();
            }
        }
    }

    pub fn scaled(&self, s: f64) -> ModeField {
        ModeField {
            grid: self.grid,
            data: self.data.iter().map(|m| [m[0] * s, m[1] * s]).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &ModeField) -> Result<ModeField> {
        self.same_grid(other)?;
        Ok(ModeField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| [a[0] + b[0] * s, a[1] + b[1] * s])
                .collect(),
        })
    }

    /// Per-mode multiplication by a real weight.
    pub fn weighted<F: Fn(usize) -> f64>(&self, w: F) -> ModeField {
        ModeField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let s = w(i);
                    [m[0] * s, m[1] * s]
                })
                .collect(),
        }
    }

    /// `sum_k w(k) |v(k)|^2` (no volume factor).
    pub fn weighted_mass<F: Fn(usize) -> f64>(&self, w: F) -> f64 {
        pairwise(self.data.len(), |i| {
            let m = &self.data[i];
            w(i) * (m[0].norm_sqr() + m[1].norm_sqr())
        })
    }

    /// `int |v|^2 dx`.
    pub fn l2_sq(&self) -> f64 {
        self.grid.volume() * self.weighted_mass(|_| 1.0)
    }

    /// `int v . w dx` for real fields.
    pub fn inner(&self, other: &ModeField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.volume()
            * pairwise(self.data.len(), |i| {
                let a = &self.data[i];
                let b = &other.data[i];
                (a[0] * b[0].conj() + a[1] * b[1].conj()).re
            }))
    }

    /// `int |grad v|^2 + |v|^2 dx`.
    pub fn h1_sq(&self) -> f64 {
        let g = self.grid;
        g.volume() * self.weighted_mass(|i| 1.0 + g.k_sq(i))
    }

    /// Largest relative divergence `|k.v| / (|k| |v|_max)` over all modes.
    pub fn divergence_defect(&self) -> f64 {
        let g = &self.grid;
        let scale = self
            .data
            .iter()
            .map(|m| (m[0].norm_sqr() + m[1].norm_sqr()).sqrt())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for (idx, v) in self.data.iter().enumerate() {
            let k2 = g.k_sq(idx);
            if k2 == 0.0 {
                continue;
            }
            let [k1, kk2] = g.k_vec(idx);
            worst = worst.max((v[0] * k1 + v[1] * kk2).norm() / k2.sqrt());
        }
        worst / scale
    }

    /// Largest relative violation of the reality condition.
    pub fn reality_defect(&self) -> f64 {
        let n = self.data.len();
        let scale = self
            .data
            .iter()
            .map(|m| m[0].norm().max(m[1].norm()))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for idx in 0..n {
            let j = n - 1 - idx;
            for c in 0..2 {
                worst = worst.max((self.data[idx][c] - self.data[j][c].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn mean(&self) -> Mode {
        self.data[self.grid.mean_index()]
    }

    /// Zeroes every mode with `|k|_inf > m`.
    pub fn truncated(&self, m: usize) -> ModeField {
        let g = self.grid;
        ModeField {
            grid: g,
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(i, v)| if g.k_inf(i) > m { [ZERO; 2] } else { *v })
                .collect(),
        }
    }

    /// Zero-pads (or checks-and-truncates) the coefficients onto `target`.
    pub fn embed(&self, target: &SpectralGrid) -> Result<ModeField> {
        if (target.box_size() - self.grid.box_size()).abs() > 0.0 {
            return Err(Error::Shape("cannot embed across different box sizes".into()));
        }
        let mut out = ModeField::zeros(target);
        for (idx, v) in self.data.iter().enumerate() {
            let (k1, k2) = self.grid.wavenumber(idx);
            match target.index(k1, k2) {
                Some(j) => out.data[j] = *v,
                None => {
                    if v[0] != ZERO || v[1] != ZERO {
                        return Err(Error::Shape(format!(
                            "mode ({k1}, {k2}) is not representable on the target grid"
                        )));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Leray projection of raw per-mode coefficients.
pub fn leray_project(grid: &SpectralGrid, raw: &[Mode]) -> Result<ModeField> {
    Ok(ModeField::from_data(grid, raw.to_vec())?.leray())
}

/// The state `Phi = (u; B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    u: ModeField,
    b: ModeField,
}

/// Tolerance used when validating states.
pub const STATE_TOL: f64 = 1e-12;

impl SpectralState {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        SpectralState {
            u: ModeField::zeros(grid),
            b: ModeField::zeros(grid),
        }
    }

    /// Builds a state after checking divergence, reality and mean invariants.
    pub fn new(u: ModeField, b: ModeField) -> Result<Self> {
        let s = Self::from_parts_unchecked(u, b)?;
        s.check_invariants(STATE_TOL)?;
        Ok(s)
    }

    /// Builds a state by projecting arbitrary fields onto the admissible set.
    pub fn project(u: ModeField, b: ModeField) -> Result<Self> {
        let mut u = u.leray();
        let mut b = b.leray();
        u.symmetrize();
        b.symmetrize();
        Self::from_parts_unchecked(u, b)
    }

    pub(crate) fn from_parts_unchecked(u: ModeField, b: ModeField) -> Result<Self> {
        if u.grid != b.grid {
            return Err(Error::Shape("u and B live on different grids".into()));
        }
        Ok(SpectralState { u, b })
    }

    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for (name, f) in [("u", &self.u), ("B", &self.b)] {
            let m = f.mean();
            if m[0] != ZERO || m[1] != ZERO {
                return Err(Error::Invariant(format!("{name} has a nonzero mean mode")));
            }
            let d = f.divergence_defect();
            if d > tol {
                return Err(Error::Invariant(format!(
                    "{name} is not divergence-free (relative defect {d:e})"
                )));
            }
            let r = f.reality_defect();
            if r > tol {
                return Err(Error::Invariant(format!(
                    "{name} violates the reality condition (relative defect {r:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }

    pub fn u(&self) -> &ModeField {
        &self.u
    }

    pub fn b(&self) -> &ModeField {
        &self.b
    }

    pub fn into_parts(self) -> (ModeField, ModeField) {
        (self.u, self.b)
    }

    pub fn scaled(&self, s: f64) -> SpectralState {
        SpectralState {
            u: self.u.scaled(s),
            b: self.b.scaled(s),
        }
    }

    pub fn add_scaled(&self, s: f64, other: &SpectralState) -> Result<SpectralState> {
        Ok(SpectralState {
            u: self.u.add_scaled(s, &other.u)?,
            b: self.b.add_scaled(s, &other.b)?,
        })
    }

    pub fn sub(&self, other: &SpectralState) -> Result<SpectralState> {
        self.add_scaled(-1.0, other)
    }

    /// L^2 inner product `(Phi, Psi)`.
    pub fn inner(&self, other: &SpectralState) -> Result<f64> {
        Ok(self.u.inner(&other.u)? + self.b.inner(&other.b)?)
    }

    /// `|Phi|^2`.
    pub fn h_norm_sq(&self) -> f64 {
        self.u.l2_sq() + self.b.l2_sq()
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    /// `||Phi||^2 = 2 kappa1 ||u||_1^2 + S ||B||_2^2`.
    pub fn v_norm_sq(&self, params: &PhysicalParams) -> f64 {
        let n = state_norms(self, params);
        n.v_norm * n.v_norm
    }

    pub fn truncated(&self, m: usize) -> SpectralState {
        SpectralState {
            u: self.u.truncated(m),
            b: self.b.truncated(m),
        }
    }

    pub fn embed(&self, target: &SpectralGrid) -> Result<SpectralState> {
        Ok(SpectralState {
            u: self.u.embed(target)?,
            b: self.b.embed(target)?,
        })
    }

    /// Identifies the state with an element of the dual through the H inner product.
    pub fn to_dual(&self) -> DualElement {
        DualElement {
            u: self.u.clone(),
            b: self.b.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .data
            .iter()
            .chain(self.b.data.iter())
            .all(|m| m[0].is_finite() && m[1].is_finite())
    }
}

/// Norms of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateNorms {
    /// `|Phi|`
    pub h_norm: f64,
    /// `||Phi||`
    pub v_norm: f64,
    /// `||u||_1`
    pub u1_norm: f64,
    /// `||B||_2`
    pub b2_norm: f64,
}

pub fn state_norms(phi: &SpectralState, params: &PhysicalParams) -> StateNorms {
    let g = phi.grid();
    let vol = g.volume();
    let u1_sq = vol * phi.u.weighted_mass(|i| 0.5 * g.k_sq(i) * g.k_sq(i));
    let b2_sq = vol * phi.b.weighted_mass(|i| g.k_sq(i));
    let h_sq = phi.h_norm_sq();
    StateNorms {
        h_norm: h_sq.sqrt(),
        v_norm: (2.0 * params.kappa1 * u1_sq + params.s * b2_sq).sqrt(),
        u1_norm: u1_sq.sqrt(),
        b2_norm: b2_sq.sqrt(),
    }
}

/// A functional on `V` in spectral coordinates, paired through Parseval.
#[derive(Debug, Clone, PartialEq)]
pub struct DualElement {
    u: ModeField,
    b: ModeField,
}

impl DualElement {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        DualElement {
            u: ModeField::zeros(grid),
            b: ModeField::zeros(grid),
        }
    }

    pub fn new(u: ModeField, b: ModeField) -> Result<Self> {
        if u.grid != b.grid {
            return Err(Error::Shape("components live on different grids".into()));
        }
        Ok(DualElement { u, b })
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.u.grid()
    }

    pub fn u(&self) -> &ModeField {
        &self.u
    }

    pub fn b(&self) -> &ModeField {
        &self.b
    }

    pub fn into_parts(self) -> (ModeField, ModeField) {
        (self.u, self.b)
    }

    pub fn scaled(&self, s: f64) -> DualElement {
        DualElement {
            u: self.u.scaled(s),
            b: self.b.scaled(s),
        }
    }

    pub fn add_scaled(&self, s: f64, other: &DualElement) -> Result<DualElement> {
        Ok(DualElement {
            u: self.u.add_scaled(s, &other.u)?,
            b: self.b.add_scaled(s, &other.b)?,
        })
    }

    /// Leray-projected representative.
    pub fn projected(&self) -> DualElement {
        let mut u = self.u.leray();
        let mut b = self.b.leray();
        u.symmetrize();
        b.symmetrize();
        DualElement { u, b }
    }

    pub fn truncated(&self, m: usize) -> DualElement {
        DualElement {
            u: self.u.truncated(m),
            b: self.b.truncated(m),
        }
    }

    /// Riesz identification through the H inner product (same coefficients).
    pub fn to_state(&self) -> SpectralState {
        SpectralState {
            u: self.u.clone(),
            b: self.b.clone(),
        }
    }
}

/// `<f, Phi> = Re sum_k (f_u . conj(u) + f_b . conj(B)) vol`.
pub fn pair_dual(f: &DualElement, phi: &SpectralState) -> Result<f64> {
    if f.grid() != phi.grid() {
        return Err(Error::Shape("dual element and state live on different grids".into()));
    }
    Ok(f.u.inner(&phi.u)? + f.b.inner(&phi.b)?)
}

/// `||f||_{V*}`, the norm dual to `||.||` restricted to divergence-free fields.
pub fn dual_norm(f: &DualElement, params: &PhysicalParams) -> Result<f64> {
    Ok(dual_norm_sq(f, params)?.sqrt())
}

pub fn dual_norm_sq(f: &DualElement, params: &PhysicalParams) -> Result<f64> {
    let mean = f.u.mean()[0].norm() + f.u.mean()[1].norm() + f.b.mean()[0].norm()
        + f.b.mean()[1].norm();
    if mean != 0.0 {
        return Err(Error::NonzeroMean(mean));
    }
    let g = *f.grid();
    let vol = g.volume();
    let ku = |i: usize| {
        let k2 = g.k_sq(i);
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / (params.kappa1 * k2 * k2)
        }
    };
    let kb = |i: usize| {
        let k2 = g.k_sq(i);
        if k2 == 0.0 {
            0.0
        } else {
            1.0 / (params.s * k2)
        }
    };
    Ok(vol * (f.u.weighted_mass(ku) + f.b.weighted_mass(kb)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DealiasRule;
    use crate::random::{random_state, RandomSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(16, DealiasRule::ThreeHalvesPad).unwrap()
    }

    #[test]
    fn gradient_fields_project_to_zero() {
        let g = grid();
        let mut data = vec![[ZERO; 2]; g.len()];
        for (idx, m) in data.iter_mut().enumerate() {
            let (k1, k2) = g.wavenumber(idx);
            // v = i k phi with phi(k) = 1 / (1 + |k|^2)
            let phi = Complex64::new(1.0 / (1.0 + g.k_sq(idx)), 0.0);
            let [a, b] = g.k_vec(idx);
            let _ = (k1, k2);
            *m = [Complex64::new(0.0, a) * phi, Complex64::new(0.0, b) * phi];
        }
        let p = leray_project(&g, &data).unwrap();
        let worst = p
            .data()
            .iter()
            .map(|m| m[0].norm().max(m[1].norm()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-16);
    }

    #[test]
    fn leray_is_idempotent_and_shape_checked() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_state(&g, &mut rng, &RandomSpec::default());
        let once = phi.u().leray();
        let d = once.add_scaled(-1.0, phi.u()).unwrap().l2_sq().sqrt();
        assert!(d <= 1e-15 * phi.u().l2_sq().sqrt());
        let twice = once.leray();
        assert!(twice.add_scaled(-1.0, &once).unwrap().l2_sq().sqrt() <= 1e-15 * once.l2_sq().sqrt());
        assert!(leray_project(&g, &[[ZERO; 2]; 3]).is_err());
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let g = grid();
        let n = state_norms(&SpectralState::zeros(&g), &PhysicalParams::default());
        assert_eq!(n.h_norm, 0.0);
        assert_eq!(n.v_norm, 0.0);
        assert_eq!(n.u1_norm, 0.0);
        assert_eq!(n.b2_norm, 0.0);
    }

    #[test]
    fn norms_are_absolutely_homogeneous() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = PhysicalParams::default();
        let phi = random_state(&g, &mut rng, &RandomSpec::default());
        let a = state_norms(&phi, &params);
        let b = state_norms(&phi.scaled(-3.0), &params);
        for (x, y) in [
            (a.h_norm, b.h_norm),
            (a.v_norm, b.v_norm),
            (a.u1_norm, b.u1_norm),
            (a.b2_norm, b.b2_norm),
        ] {
            assert!((3.0 * x - y).abs() <= 1e-13 * y);
        }
    }

    #[test]
    fn dual_norm_of_single_velocity_mode() {
        let g = grid();
        let params = PhysicalParams::default();
        let mut u = ModeField::zeros(&g);
        let amp = Complex64::new(0.7, -0.2);
        u.data_mut()[g.index(1, 0).unwrap()] = [ZERO, amp];
        u.data_mut()[g.index(-1, 0).unwrap()] = [ZERO, amp.conj()];
        let f = DualElement::new(u, ModeField::zeros(&g)).unwrap();
        // kappa1 |k|^4 = 1 on both conjugate modes
        let expected = (2.0 * amp.norm_sqr() * g.volume()).sqrt();
        let got = dual_norm(&f, &params).unwrap();
        assert!((got - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn dual_norm_rejects_mean_mode() {
        let g = grid();
        let mut u = ModeField::zeros(&g);
        u.data_mut()[g.mean_index()] = [Complex64::new(1.0, 0.0), ZERO];
        let f = DualElement::new(u, ModeField::zeros(&g)).unwrap();
        assert!(matches!(
            dual_norm(&f, &PhysicalParams::default()),
            Err(Error::NonzeroMean(_))
        ));
    }

    #[test]
    fn invariant_checks_catch_violations() {
        let g = grid();
        let mut u = ModeField::zeros(&g);
        u.data_mut()[g.index(1, 0).unwrap()] = [Complex64::new(1.0, 0.0), ZERO];
        u.data_mut()[g.index(-1, 0).unwrap()] = [Complex64::new(1.0, 0.0), ZERO];
        assert!(SpectralState::new(u, ModeField::zeros(&g)).is_err());
        let mut u = ModeField::zeros(&g);
        u.data_mut()[g.index(1, 0).unwrap()] = [ZERO, Complex64::new(1.0, 0.0)];
        assert!(SpectralState::new(u, ModeField::zeros(&g)).is_err());
    }

    #[test]
    fn embedding_preserves_norms() {
        let g16 = SpectralGrid::new(16, DealiasRule::ThreeHalvesPad).unwrap();
        let g32 = g16.resized(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = RandomSpec {
            kmax: 7,
            ..RandomSpec::default()
        };
        let phi = random_state(&g16, &mut rng, &spec);
        let big = phi.embed(&g32).unwrap();
        let params = PhysicalParams::default();
        let a = state_norms(&phi, &params);
        let b = state_norms(&big, &params);
        assert!((a.h_norm - b.h_norm).abs() <= 1e-14 * a.h_norm);
        assert!((a.v_norm - b.v_norm).abs() <= 1e-14 * a.v_norm);
        assert!(big.embed(&g16).is_ok());
    }
}
