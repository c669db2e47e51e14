//! Convective trilinear forms and the bilinear coupling operator `B`.
//!
//! `b(u, v, w) = int u_i d_i v_j w_j dx`, and for `Phi_i = (u_i; B_i)`
//!
//! ```text
//! b0(Phi1, Phi2, Phi3) = b(u1, u2, u3) - mu b(B1, B2, u3)
//!                      + mu b(u1, B2, B3) - mu b(B1, u2, B3).
//! ```
//!
//! Products are formed on the dealiased evaluation grid, where every triple
//! product of retained modes is integrated exactly.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::PhysicalParams;
use crate::random::{random_state, RandomSpec};
use crate::state::{dual_norm, DualElement, ModeField, SpectralState};
use crate::sum::pairwise;
use crate::transform::{evaluate_pair_on, to_spectral_pair, PhysicalField};

fn eval_size(g: &SpectralGrid) -> Result<usize> {
    g.eval_size(g.nonlinear_pad())
}

fn values(f: &ModeField, m: usize) -> Result<[Vec<f64>; 2]> {
    let (a, b) = evaluate_pair_on(f.grid(), &f.component(0), &f.component(1), m)?;
    Ok([a.into_values(), b.into_values()])
}

/// `grad[i][j] = d_i v_j` on the `m x m` grid.
fn gradient(f: &ModeField, m: usize) -> Result<[[Vec<f64>; 2]; 2]> {
    let g = f.grid();
    let i = Complex64::new(0.0, 1.0);
    let d = |dir: usize, comp: usize| -> Vec<Complex64> {
        f.data()
            .iter()
            .enumerate()
            .map(|(idx, v)| i * g.k_vec(idx)[dir] * v[comp])
            .collect()
    };
    let (a, b) = evaluate_pair_on(g, &d(0, 0), &d(0, 1), m)?;
    let (c, e) = evaluate_pair_on(g, &d(1, 0), &d(1, 1), m)?;
    Ok([
        [a.into_values(), b.into_values()],
        [c.into_values(), e.into_values()],
    ])
}

/// Pointwise `(u . grad) v`.
fn advect(u: &[Vec<f64>; 2], gv: &[[Vec<f64>; 2]; 2]) -> [Vec<f64>; 2] {
    let n = u[0].len();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for j in 0..2 {
        for k in 0..n {
            out[j][k] = u[0][k] * gv[0][j][k] + u[1][k] * gv[1][j][k];
        }
    }
    out
}

fn grid_check(fields: &[&ModeField]) -> Result<()> {
    let g = fields[0].grid();
    if fields.iter().any(|f| f.grid() != g) {
        return Err(Error::Shape("fields live on different grids".into()));
    }
    Ok(())
}

pub fn trilinear_b(u: &ModeField, v: &ModeField, w: &ModeField) -> Result<f64> {
    grid_check(&[u, v, w])?;
    let m = eval_size(u.grid())?;
    trilinear_b_on(u, v, w, m)
}

/// `b(u, v, w)` by quadrature on an explicit `m x m` grid.
pub fn trilinear_b_on(u: &ModeField, v: &ModeField, w: &ModeField, m: usize) -> Result<f64> {
    grid_check(&[u, v, w])?;
    let uu = values(u, m)?;
    let gv = gradient(v, m)?;
    let ww = values(w, m)?;
    let a = advect(&uu, &gv);
    let vol = u.grid().volume();
    Ok(pairwise(m * m, |k| a[0][k] * ww[0][k] + a[1][k] * ww[1][k]) * vol / (m * m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrilinearReport {
    pub value: f64,
    /// `[b(u1,u2,u3), -mu b(B1,B2,u3), mu b(u1,B2,B3), -mu b(B1,u2,B3)]`
    pub parts: [f64; 4],
}

pub fn trilinear_b0(
    a: &SpectralState,
    b: &SpectralState,
    c: &SpectralState,
    params: &PhysicalParams,
) -> Result<TrilinearReport> {
    let mu = params.mu;
    let parts = [
        trilinear_b(a.u(), b.u(), c.u())?,
        -mu * trilinear_b(a.b(), b.b(), c.u())?,
        mu * trilinear_b(a.u(), b.b(), c.b())?,
        -mu * trilinear_b(a.b(), b.u(), c.b())?,
    ];
    Ok(TrilinearReport {
        value: parts.iter().sum(),
        parts,
    })
}

/// `B(Phi1, Phi2)`, the Riesz representative of `b0(Phi1, Phi2, .)`.
pub fn apply_b(a: &SpectralState, b: &SpectralState, params: &PhysicalParams) -> Result<DualElement> {
    let g = *a.grid();
    if b.grid() != &g {
        return Err(Error::Shape("states live on different grids".into()));
    }
    let m = eval_size(&g)?;
    let mu = params.mu;
    let u1 = values(a.u(), m)?;
    let gu2 = gradient(b.u(), m)?;
    let mut vel = advect(&u1, &gu2);
    let mut mag = [vec![0.0; m * m], vec![0.0; m * m]];
    if mu != 0.0 {
        let b1 = values(a.b(), m)?;
        let gb2 = gradient(b.b(), m)?;
        let bb = advect(&b1, &gb2);
        let ub = advect(&u1, &gb2);
        let bu = advect(&b1, &gu2);
        for j in 0..2 {
            for k in 0..m * m {
                vel[j][k] -= mu * bb[j][k];
                mag[j][k] = mu * (ub[j][k] - bu[j][k]);
            }
        }
    }
    let [v0, v1] = vel;
    let [m0, m1] = mag;
    let to_field = |x: Vec<f64>, y: Vec<f64>| -> Result<ModeField> {
        let (cx, cy) = to_spectral_pair(&g, &PhysicalField::new(m, x)?, &PhysicalField::new(m, y)?)?;
        let mut f = ModeField::from_components(&g, &cx, &cy)?.leray();
        f.symmetrize();
        Ok(f)
    };
    let fu = to_field(v0, v1)?;
    let fb = if mu != 0.0 {
        to_field(m0, m1)?
    } else {
        ModeField::zeros(&g)
    };
    DualElement::new(fu, fb)
}

/// Largest sampled `||B(Phi, Phi)||_{V*} / (|Phi| ||Phi||)`.
///
/// Samples are drawn in a grid-independent order within `|k|_inf <= kmax`,
/// so the estimate is comparable across resolutions.
pub fn fit_bilinear_constant<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    params: &PhysicalParams,
    n_samples: usize,
    kmax: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let slope: f64 = rng.random_range(0.0..2.0);
        let spec = RandomSpec {
            kmax,
            slope,
            ..RandomSpec::default()
        };
        let s = random_state(grid, rng, &spec);
        let f = apply_b(&s, &s, params)?;
        let r = dual_norm(&f, params)? / (s.h_norm() * s.v_norm_sq(params).sqrt());
        best = best.max(r);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    /// Largest `|b(u, v, v)|` over the product of `H^1` seminorms.
    pub b_vanishing: f64,
    /// Largest `|b(u, v, w) + b(u, w, v)|`, same normalization.
    pub b_antisymmetry: f64,
    /// Largest `|b0(Phi1, Phi2, Phi2)|` over the product of `H^1` seminorms.
    pub b0_vanishing: f64,
    /// Largest `|b0(Phi1, Phi2, Phi3) + b0(Phi1, Phi3, Phi2)|`.
    pub b0_antisymmetry: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.b_vanishing
            .max(self.b_antisymmetry)
            .max(self.b0_vanishing)
            .max(self.b0_antisymmetry)
    }
}

fn h1(f: &ModeField) -> f64 {
    f.h1_sq().sqrt()
}

fn state_h1(s: &SpectralState) -> f64 {
    (s.u().h1_sq() + s.b().h1_sq()).sqrt()
}

/// Samples the skew-symmetry identities of `b` and `b0` on random fields.
pub fn verify_identities<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    params: &PhysicalParams,
    n_samples: usize,
    tolerance: f64,
    rng: &mut R,
) -> Result<IdentityReport> {
    let mut rep = IdentityReport {
        samples: n_samples,
        b_vanishing: 0.0,
        b_antisymmetry: 0.0,
        b0_vanishing: 0.0,
        b0_antisymmetry: 0.0,
        tolerance,
        pass: true,
    };
    let kcap = grid.kmax().min(8);
    for _ in 0..n_samples {
        let state = |rng: &mut R| {
            let spec = RandomSpec {
                kmax: rng.random_range(1..=kcap),
                slope: rng.random_range(0.0..2.0),
                ..RandomSpec::default()
            };
            random_state(grid, rng, &spec)
        };
        let (a, b, c) = (state(rng), state(rng), state(rng));
        let (u, v, w) = (a.u(), b.u(), c.u());
        let s = h1(u) * h1(v) * h1(v);
        if s > 0.0 {
            rep.b_vanishing = rep.b_vanishing.max(trilinear_b(u, v, v)?.abs() / s);
        }
        let s = h1(u) * h1(v) * h1(w);
        if s > 0.0 {
            let d = trilinear_b(u, v, w)? + trilinear_b(u, w, v)?;
            rep.b_antisymmetry = rep.b_antisymmetry.max(d.abs() / s);
        }
        let s = state_h1(&a) * state_h1(&b).powi(2);
        if s > 0.0 {
            let x = trilinear_b0(&a, &b, &b, params)?.value;
            rep.b0_vanishing = rep.b0_vanishing.max(x.abs() / s);
        }
        let s = state_h1(&a) * state_h1(&b) * state_h1(&c);
        if s > 0.0 {
            let d = trilinear_b0(&a, &b, &c, params)?.value + trilinear_b0(&a, &c, &b, params)?.value;
            rep.b0_antisymmetry = rep.b0_antisymmetry.max(d.abs() / s);
        }
    }
    rep.pass = rep.worst() <= tolerance;
    Ok(rep)
}
