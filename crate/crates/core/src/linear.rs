//! The diagonal dissipation operator `A = diag(A_1, A_2)`, its fractional
//! powers and eigen-tables.
//!
//! `A_1` comes from the form `2 kappa1 int dE:dE`, which on divergence-free
//! Fourier modes is multiplication by `kappa1 |k|^4`; `A_2` is multiplication
//! by `S |k|^2`.

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;
use crate::state::{DualElement, SpectralState};

/// Velocity eigenvalue at mode index `idx` (zero at the mean mode).
pub fn velocity_eigenvalue(grid: &SpectralGrid, params: &PhysicalParams, idx: usize) -> f64 {
    let k2 = grid.k_sq(idx);
    params.kappa1 * k2 * k2
}

pub fn magnetic_eigenvalue(grid: &SpectralGrid, params: &PhysicalParams, idx: usize) -> f64 {
    params.s * grid.k_sq(idx)
}

pub fn apply_a(phi: &SpectralState, params: &PhysicalParams) -> DualElement {
    let g = *phi.grid();
    let u = phi.u().weighted(|i| velocity_eigenvalue(&g, params, i));
    let b = phi.b().weighted(|i| magnetic_eigenvalue(&g, params, i));
    DualElement::new(u, b).expect("components share a grid")
}

/// `A^delta Phi` for `|delta| < 1/2`. The mean mode is mapped to zero.
pub fn apply_a_fractional(
    phi: &SpectralState,
    delta: f64,
    params: &PhysicalParams,
) -> Result<SpectralState> {
    if !(delta.abs() < 0.5) {
        return Err(Error::Parameter(format!(
            "fractional exponent {delta} outside (-1/2, 1/2)"
        )));
    }
    let g = *phi.grid();
    let pow = |e: f64| if e == 0.0 { 0.0 } else { e.powf(delta) };
    let u = phi.u().weighted(|i| pow(velocity_eigenvalue(&g, params, i)));
    let b = phi.b().weighted(|i| pow(magnetic_eigenvalue(&g, params, i)));
    SpectralState::from_parts_unchecked(u, b)
}

/// `|A^delta Phi|^2`, the squared norm of `D(A^delta)`.
pub fn fractional_norm_sq(phi: &SpectralState, delta: f64, params: &PhysicalParams) -> Result<f64> {
    Ok(apply_a_fractional(phi, delta, params)?.h_norm_sq())
}

/// Smallest Rayleigh quotient `||Phi||^2 / |Phi|^2` over the retained modes.
pub fn poincare_constant(params: &PhysicalParams, grid: &SpectralGrid) -> f64 {
    let mut lambda = f64::INFINITY;
    for idx in 0..grid.len() {
        if idx == grid.mean_index() {
            continue;
        }
        lambda = lambda
            .min(velocity_eigenvalue(grid, params, idx))
            .min(magnetic_eigenvalue(grid, params, idx));
    }
    lambda
}

/// Real basis function attached to a half-plane wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// `(k_perp / |k|) cos(k.x)`
    Cos,
    /// `(k_perp / |k|) sin(k.x)`
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub k: (i32, i32),
    pub polarization: Polarization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTables {
    pub velocity: Vec<Eigenpair>,
    pub magnetic: Vec<Eigenpair>,
}

/// True for the representative of each `{k, -k}` pair.
pub fn in_half_plane(k1: i32, k2: i32) -> bool {
    k1 > 0 || (k1 == 0 && k2 > 0)
}

pub fn spectrum_tables(grid: &SpectralGrid, params: &PhysicalParams) -> SpectrumTables {
    let mut velocity = Vec::new();
    let mut magnetic = Vec::new();
    for idx in 0..grid.len() {
        let k = grid.wavenumber(idx);
        if !in_half_plane(k.0, k.1) {
            continue;
        }
        for polarization in [Polarization::Cos, Polarization::Sin] {
            velocity.push(Eigenpair {
                value: velocity_eigenvalue(grid, params, idx),
                k,
                polarization,
            });
            magnetic.push(Eigenpair {
                value: magnetic_eigenvalue(grid, params, idx),
                k,
                polarization,
            });
        }
    }
    let key = |e: &Eigenpair| (e.value, e.k, e.polarization == Polarization::Sin);
    velocity.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    magnetic.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    SpectrumTables { velocity, magnetic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DealiasRule;
    use crate::random::{random_state, RandomSpec};
    use crate::state::{pair_dual, state_norms, ModeField};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(16, DealiasRule::ThreeHalvesPad).unwrap()
    }

    fn single_mode(g: &SpectralGrid, k: (i32, i32), magnetic: bool) -> SpectralState {
        let mut f = ModeField::zeros(g);
        let norm = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
        let pol = [
            Complex64::new(-k.1 as f64 / norm, 0.0),
            Complex64::new(k.0 as f64 / norm, 0.0),
        ];
        f.data_mut()[g.index(k.0, k.1).unwrap()] = pol;
        f.data_mut()[g.index(-k.0, -k.1).unwrap()] = pol;
        let z = ModeField::zeros(g);
        if magnetic {
            SpectralState::new(z, f).unwrap()
        } else {
            SpectralState::new(f, z).unwrap()
        }
    }

    #[test]
    fn eigenmodes_have_the_expected_eigenvalues() {
        let g = grid();
        let params = PhysicalParams {
            kappa1: 1.7,
            s: 0.3,
            ..PhysicalParams::default()
        };
        let u = single_mode(&g, (1, 0), false);
        let au = apply_a(&u, &params).to_state();
        let err = au.add_scaled(-1.7, &u).unwrap().h_norm();
        assert!(err < 1e-14);
        let b = single_mode(&g, (1, 1), true);
        let ab = apply_a(&b, &params).to_state();
        let err = ab.add_scaled(-2.0 * 0.3, &b).unwrap().h_norm();
        assert!(err < 1e-14);
    }

    #[test]
    fn a_pairing_reproduces_the_v_norm() {
        let g = grid();
        let params = PhysicalParams {
            kappa1: 0.8,
            s: 2.0,
            ..PhysicalParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let phi = random_state(&g, &mut rng, &RandomSpec::default());
            let lhs = pair_dual(&apply_a(&phi, &params), &phi).unwrap();
            let v = state_norms(&phi, &params).v_norm;
            assert!((lhs - v * v).abs() <= 1e-12 * v * v);
        }
    }

    #[test]
    fn fractional_powers_invert_and_match_closed_form() {
        let g = grid();
        let params = PhysicalParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random_state(&g, &mut rng, &RandomSpec::default());
        let id = apply_a_fractional(&phi, 0.0, &params).unwrap();
        assert!(id.sub(&phi).unwrap().h_norm() <= 1e-15 * phi.h_norm());
        let there = apply_a_fractional(&phi, 0.25, &params).unwrap();
        let back = apply_a_fractional(&there, -0.25, &params).unwrap();
        assert!(back.sub(&phi).unwrap().h_norm() <= 1e-13 * phi.h_norm());
        assert!(apply_a_fractional(&phi, 0.5, &params).is_err());

        // u-mode at k = (2, 1): eigenvalue kappa1 * 25
        let m = single_mode(&g, (2, 1), false);
        let n = fractional_norm_sq(&m, -0.3, &params).unwrap().sqrt();
        let expected = 25f64.powf(-0.3) * m.h_norm();
        assert!((n - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn log_fractional_norm_is_convex_in_delta() {
        let g = grid();
        let params = PhysicalParams {
            kappa1: 0.5,
            s: 3.0,
            ..PhysicalParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_state(&g, &mut rng, &RandomSpec::default());
        let d = [-0.4, -0.2, 0.0, 0.2, 0.4];
        let l: Vec<f64> = d
            .iter()
            .map(|&x| fractional_norm_sq(&phi, x, &params).unwrap().sqrt().ln())
            .collect();
        for i in 1..4 {
            assert!(l[i - 1] + l[i + 1] - 2.0 * l[i] >= -1e-12);
        }
    }

    #[test]
    fn poincare_constant_values_and_sharpness() {
        let g = grid();
        let p = PhysicalParams::default();
        assert_eq!(poincare_constant(&p, &g), 1.0);
        let p = PhysicalParams {
            kappa1: 10.0,
            s: 0.5,
            ..PhysicalParams::default()
        };
        let lambda = poincare_constant(&p, &g);
        assert_eq!(lambda, 0.5);
        let m = single_mode(&g, (0, 1), true);
        let q = m.v_norm_sq(&p) / m.h_norm_sq();
        assert!((q - lambda).abs() <= 1e-12 * lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let phi = random_state(&g, &mut rng, &RandomSpec::default());
            assert!(phi.v_norm_sq(&p) / phi.h_norm_sq() >= lambda * (1.0 - 1e-12));
        }
    }

    #[test]
    fn spectrum_tables_are_sorted_and_complete() {
        let g = grid();
        let p = PhysicalParams {
            kappa1: 2.0,
            s: 3.0,
            ..PhysicalParams::default()
        };
        let t = spectrum_tables(&g, &p);
        assert_eq!(t.velocity.len(), g.len() - 1);
        assert_eq!(t.velocity[0].value, 2.0);
        assert_eq!(t.magnetic[0].value, 3.0);
        assert!(t.velocity.windows(2).all(|w| w[0].value <= w[1].value));
        assert!(t.magnetic.windows(2).all(|w| w[0].value <= w[1].value));

        // lattice count of |k|^2 <= 10 inside the square |k|_inf <= 7
        let kmax = g.kmax() as i32;
        let mut brute = 0;
        for a in -kmax..=kmax {
            for b in -kmax..=kmax {
                let r = a * a + b * b;
                if r > 0 && r <= 10 {
                    brute += 1;
                }
            }
        }
        let counted = t.magnetic.iter().filter(|e| e.value <= 3.0 * 10.0).count();
        assert_eq!(counted, brute);
    }
}
