//! The p-structure stress `T(D) = 2 kappa0 (eps + |D|^2)^((p-2)/2) D`, its
//! potential `Sigma`, the operator `A_p` and empirical checks of the
//! structural hypotheses on `T`.
//!
//! Matrices are symmetric 2x2 and `|D|` is the Frobenius norm.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::params::{PhysicalParams, Regime};
use crate::random::{random_state, random_symmetric, RandomSpec};
use crate::state::{pair_dual, dual_norm_sq, DualElement, ModeField, SpectralState};
use crate::sum::{pairwise, trapezoid};
use crate::transform::{evaluate_on, evaluate_pair_on, to_spectral, to_spectral_pair};

pub type Tensor = [[f64; 2]; 2];

pub fn frob_sq(d: &Tensor) -> f64 {
    d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1]
}

pub fn frob_dot(a: &Tensor, b: &Tensor) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

fn axpy(d: &Tensor, h: f64, e: &Tensor) -> Tensor {
    [
        [d[0][0] + h * e[0][0], d[0][1] + h * e[0][1]],
        [d[1][0] + h * e[1][0], d[1][1] + h * e[1][1]],
    ]
}

/// Scalar factor `2 kappa0 (eps + |D|^2)^((p-2)/2)` as a function of `|D|^2`.
#[inline]
fn stress_factor(params: &PhysicalParams, d_sq: f64) -> f64 {
    if params.p == 2.0 {
        2.0 * params.kappa0
    } else {
        2.0 * params.kappa0 * (params.epsilon + d_sq).powf(0.5 * (params.p - 2.0))
    }
}

pub fn stress(d: &Tensor, params: &PhysicalParams) -> Tensor {
    let c = stress_factor(params, frob_sq(d));
    [[c * d[0][0], c * d[0][1]], [c * d[1][0], c * d[1][1]]]
}

pub fn potential(d: &Tensor, params: &PhysicalParams) -> f64 {
    let p = params.p;
    let e = params.epsilon;
    2.0 * params.kappa0 / p * ((e + frob_sq(d)).powf(0.5 * p) - e.powf(0.5 * p))
}

/// Symmetric gradient of a velocity field sampled on an `m x m` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField {
    pub m: usize,
    pub e11: Vec<f64>,
    pub e12: Vec<f64>,
    pub e22: Vec<f64>,
}

impl StrainField {
    pub fn at(&self, i: usize) -> Tensor {
        [[self.e11[i], self.e12[i]], [self.e12[i], self.e22[i]]]
    }

    pub fn len(&self) -> usize {
        self.e11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e11.is_empty()
    }

    pub fn max_trace(&self) -> f64 {
        self.e11
            .iter()
            .zip(&self.e22)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max)
    }
}

fn strain_coefficients(u: &ModeField) -> [Vec<Complex64>; 3] {
    let g = u.grid();
    let i = Complex64::new(0.0, 1.0);
    let n = g.len();
    let mut e11 = Vec::with_capacity(n);
    let mut e12 = Vec::with_capacity(n);
    let mut e22 = Vec::with_capacity(n);
    for (idx, v) in u.data().iter().enumerate() {
        let [k1, k2] = g.k_vec(idx);
        e11.push(i * k1 * v[0]);
        e22.push(i * k2 * v[1]);
        e12.push(0.5 * i * (k2 * v[0] + k1 * v[1]));
    }
    [e11, e12, e22]
}

/// Strain on the grid's nonlinear evaluation grid.
pub fn strain(u: &ModeField) -> Result<StrainField> {
    let g = u.grid();
    strain_on(u, g.eval_size(g.nonlinear_pad())?)
}

pub fn strain_on(u: &ModeField, m: usize) -> Result<StrainField> {
    let g = u.grid();
    let [c11, c12, c22] = strain_coefficients(u);
    let (e11, e12) = evaluate_pair_on(g, &c11, &c12, m)?;
    let e22 = evaluate_on(g, &c22, m)?;
    Ok(StrainField {
        m,
        e11: e11.into_values(),
        e12: e12.into_values(),
        e22: e22.into_values(),
    })
}

/// `A_p Phi` with products on the grid's nonlinear evaluation grid.
pub fn apply_ap(phi: &SpectralState, params: &PhysicalParams) -> Result<DualElement> {
    apply_ap_on(phi, params, ap_eval_size(phi.grid())?)
}

/// Stress sampling size: twice the product grid, which keeps the aliasing
/// of the non-polynomial stress well below `1e-9` for moderate strains.
pub fn ap_eval_size(grid: &SpectralGrid) -> Result<usize> {
    Ok(2 * grid.eval_size(grid.nonlinear_pad())?)
}

/// `A_p Phi` with the stress sampled on an explicit `m x m` grid.
pub fn apply_ap_on(phi: &SpectralState, params: &PhysicalParams, m: usize) -> Result<DualElement> {
    let g = *phi.grid();
    if params.kappa0 == 0.0 {
        return Ok(DualElement::zeros(&g));
    }
    let e = strain_on(phi.u(), m)?;
    let npts = e.len();
    let mut t11 = Vec::with_capacity(npts);
    let mut t12 = Vec::with_capacity(npts);
    let mut t22 = Vec::with_capacity(npts);
    for i in 0..npts {
        let (a, b, c) = (e.e11[i], e.e12[i], e.e22[i]);
        let f = stress_factor(params, a * a + 2.0 * b * b + c * c);
        t11.push(f * a);
        t12.push(f * b);
        t22.push(f * c);
    }
    use crate::transform::PhysicalField;
    let t11 = PhysicalField::new(m, t11)?;
    let t12 = PhysicalField::new(m, t12)?;
    let t22 = PhysicalField::new(m, t22)?;
    let (h11, h12) = to_spectral_pair(&g, &t11, &t12)?;
    let h22 = to_spectral(&g, &t22)?;
    let mi = Complex64::new(0.0, -1.0);
    let data = (0..g.len())
        .map(|idx| {
            let [k1, k2] = g.k_vec(idx);
            [
                mi * (k1 * h11[idx] + k2 * h12[idx]),
                mi * (k1 * h12[idx] + k2 * h22[idx]),
            ]
        })
        .collect();
    let mut u = ModeField::from_data(&g, data)?.leray();
    u.symmetrize();
    DualElement::new(u, ModeField::zeros(&g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Smallest `<A_p Phi1 - A_p Phi2, Phi1 - Phi2>`.
    pub min_pairing: f64,
    /// Smallest pairing divided by `(||Phi1|| + ||Phi2||)^2`.
    pub min_relative: f64,
    pub argmin: usize,
    pub pass: bool,
}

/// Samples random pairs with amplitudes spread over three decades.
pub fn verify_monotonicity<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    params: &PhysicalParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<MonotonicityReport> {
    if n_samples == 0 {
        return Err(Error::Parameter("at least one sample is required".into()));
    }
    let mut rep = MonotonicityReport {
        samples: n_samples,
        min_pairing: f64::INFINITY,
        min_relative: f64::INFINITY,
        argmin: 0,
        pass: true,
    };
    for s in 0..n_samples {
        let spec = |rng: &mut R| RandomSpec {
            amplitude: 10f64.powf(rng.random_range(-1.0..2.0)),
            kmax: rng.random_range(1..=grid.kmax().min(6)),
            slope: rng.random_range(0.0..2.0),
            velocity: true,
            magnetic: true,
        };
        let sa = spec(rng);
        let a = random_state(grid, rng, &sa);
        let sb = spec(rng);
        let b = random_state(grid, rng, &sb);
        let r = monotonicity_pairing(&a, &b, params)?;
        let scale = (a.v_norm_sq(params).sqrt() + b.v_norm_sq(params).sqrt()).powi(2);
        let rel = r / scale;
        if rel < rep.min_relative {
            rep.min_relative = rel;
            rep.argmin = s;
        }
        rep.min_pairing = rep.min_pairing.min(r);
    }
    rep.pass = rep.min_relative >= -1e-12;
    Ok(rep)
}

pub fn monotonicity_pairing(
    a: &SpectralState,
    b: &SpectralState,
    params: &PhysicalParams,
) -> Result<f64> {
    let fa = apply_ap(a, params)?;
    let fb = apply_ap(b, params)?;
    pair_dual(&fa.add_scaled(-1.0, &fb)?, &a.sub(b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorMonotonicityReport {
    pub samples: usize,
    /// Smallest `(T(D) - T(E)) : (D - E) / |D - E|^2`.
    pub min_ratio: f64,
    pub worst: (Tensor, Tensor),
    pub pass: bool,
}

pub fn verify_tensor_monotonicity<R: Rng + ?Sized>(
    params: &PhysicalParams,
    n_samples: usize,
    max_norm: f64,
    rng: &mut R,
) -> TensorMonotonicityReport {
    let mut rep = TensorMonotonicityReport {
        samples: n_samples,
        min_ratio: f64::INFINITY,
        worst: ([[0.0; 2]; 2], [[0.0; 2]; 2]),
        pass: true,
    };
    for _ in 0..n_samples {
        let d = random_symmetric(rng, max_norm);
        let e = random_symmetric(rng, max_norm);
        let diff = axpy(&d, -1.0, &e);
        let dd = frob_sq(&diff);
        if dd == 0.0 {
            continue;
        }
        let tdiff = axpy(&stress(&d, params), -1.0, &stress(&e, params));
        let val = frob_dot(&tdiff, &diff);
        let tol = 1e-12 * frob_sq(&tdiff).sqrt() * dd.sqrt();
        if val < -tol {
            rep.pass = false;
        }
        let ratio = val / dd;
        if ratio < rep.min_ratio {
            rep.min_ratio = ratio;
            rep.worst = (d, e);
        }
    }
    rep
}

/// Orthonormal basis of symmetric 2x2 matrices under the Frobenius product.
fn sym_basis() -> [Tensor; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
        [[0.0, s], [s, 0.0]],
    ]
}

/// Hessian of `Sigma` at `d` in the basis of [`sym_basis`], from central
/// differences of the gradient `T`.
fn hessian_with_step(d: &Tensor, params: &PhysicalParams, h: f64) -> [[f64; 3]; 3] {
    let basis = sym_basis();
    let mut out = [[0.0; 3]; 3];
    for (b, eb) in basis.iter().enumerate() {
        let tp = stress(&axpy(d, h, eb), params);
        let tm = stress(&axpy(d, -h, eb), params);
        let dt = axpy(&tp, -1.0, &tm);
        for (a, ea) in basis.iter().enumerate() {
            out[a][b] = frob_dot(&dt, ea) / (2.0 * h);
        }
    }
    for a in 0..3 {
        for b in a + 1..3 {
            let m = 0.5 * (out[a][b] + out[b][a]);
            out[a][b] = m;
            out[b][a] = m;
        }
    }
    out
}

pub const HESSIAN_STEP: f64 = 1e-5;
pub const HESSIAN_CHECK_STEP: f64 = 1e-4;

/// Finite-difference Hessian, cross-checked against a coarser step.
pub fn hessian(d: &Tensor, params: &PhysicalParams) -> Result<[[f64; 3]; 3]> {
    let fine = hessian_with_step(d, params, HESSIAN_STEP);
    let coarse = hessian_with_step(d, params, HESSIAN_CHECK_STEP);
    let scale = fine
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    for (x, y) in fine.iter().flatten().zip(coarse.iter().flatten()) {
        if !x.is_finite() || !y.is_finite() || (x - y).abs() > 1e-5 * (1.0 + scale) {
            return Err(Error::Sampling { d: *d });
        }
    }
    Ok(fine)
}

/// Eigenvalues of a symmetric 3x3 matrix in increasing order.
pub fn sym3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut e = [e1, e2, e3];
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

/// Second directional derivative `d^2 Sigma(D)[E, E]`.
pub fn hessian_form(h: &[[f64; 3]; 3], e: &Tensor) -> f64 {
    let basis = sym_basis();
    let c: Vec<f64> = basis.iter().map(|b| frob_dot(e, b)).collect();
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            s += c[a] * h[a][b] * c[b];
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstitutiveBounds {
    pub nu1_hat: f64,
    pub nu2_hat: f64,
    pub sample_count: usize,
    /// `(D, E)` attaining `nu1_hat`.
    pub worst_lower: (Tensor, Tensor),
    /// `D` attaining `nu2_hat`.
    pub worst_upper: Tensor,
}

impl ConstitutiveBounds {
    pub fn pass(&self) -> bool {
        self.nu1_hat.is_finite()
            && self.nu2_hat.is_finite()
            && self.nu1_hat > 0.0
            && self.nu2_hat > 0.0
            && self.nu1_hat <= self.nu2_hat
    }
}

/// Empirical constants in
/// `d^2 Sigma(D)[E, E] >= nu1 (1 + |D|)^(p-2) |E|^2` and
/// `|d^2 Sigma(D)| <= nu2 (1 + |D|^2)^(p-2)` (operator norm).
pub fn verify_constitutive_bounds<R: Rng + ?Sized>(
    params: &PhysicalParams,
    n_samples: usize,
    max_norm: f64,
    rng: &mut R,
) -> Result<ConstitutiveBounds> {
    if n_samples == 0 {
        return Err(Error::Parameter("at least one sample is required".into()));
    }
    let p = params.p;
    let mut out = ConstitutiveBounds {
        nu1_hat: f64::INFINITY,
        nu2_hat: 0.0,
        sample_count: n_samples,
        worst_lower: ([[0.0; 2]; 2], [[0.0; 2]; 2]),
        worst_upper: [[0.0; 2]; 2],
    };
    for _ in 0..n_samples {
        let d = random_symmetric(rng, max_norm);
        let e = random_symmetric(rng, 1.0);
        let ee = frob_sq(&e);
        if ee == 0.0 {
            continue;
        }
        let h = hessian(&d, params)?;
        let dn = frob_sq(&d).sqrt();
        let lower = hessian_form(&h, &e) / ((1.0 + dn).powf(p - 2.0) * ee);
        let eig = sym3_eigenvalues(&h);
        let op = eig[0].abs().max(eig[2].abs());
        let upper = op / (1.0 + dn * dn).powf(p - 2.0);
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Sampling { d });
        }
        if lower < out.nu1_hat {
            out.nu1_hat = lower;
            out.worst_lower = (d, e);
        }
        if upper > out.nu2_hat {
            out.nu2_hat = upper;
            out.worst_upper = d;
        }
    }
    Ok(out)
}

/// Fitted constant in `|T(D)|^2 <= nu3 (1 + |D|)^(2p - 2)`.
pub fn fit_nu3<R: Rng + ?Sized>(
    params: &PhysicalParams,
    n_samples: usize,
    max_norm: f64,
    rng: &mut R,
) -> f64 {
    let mut nu3: f64 = 0.0;
    for _ in 0..n_samples {
        let d = random_symmetric(rng, max_norm);
        let t = frob_sq(&stress(&d, params));
        let dn = frob_sq(&d).sqrt();
        nu3 = nu3.max(t / (1.0 + dn).powf(2.0 * params.p - 2.0));
    }
    nu3
}

/// Quadrature of `int |E(u)|^r` and of `||u||_{1,r}^r = int |u|^r + |grad u|^r`
/// on an `m x m` grid.
pub fn sobolev_integrals(u: &ModeField, r: f64, m: usize) -> Result<(f64, f64)> {
    let g = *u.grid();
    let i = Complex64::new(0.0, 1.0);
    let c0 = u.component(0);
    let c1 = u.component(1);
    let grad = |c: &[Complex64], j: usize| -> Vec<Complex64> {
        c.iter()
            .enumerate()
            .map(|(idx, v)| i * g.k_vec(idx)[j] * v)
            .collect()
    };
    let (u0, u1) = evaluate_pair_on(&g, &c0, &c1, m)?;
    let (d00, d01) = evaluate_pair_on(&g, &grad(&c0, 0), &grad(&c0, 1), m)?;
    let (d10, d11) = evaluate_pair_on(&g, &grad(&c1, 0), &grad(&c1, 1), m)?;
    let (u0, u1) = (u0.values(), u1.values());
    let (d00, d01, d10, d11) = (d00.values(), d01.values(), d10.values(), d11.values());
    let w = g.volume() / (m * m) as f64;
    let e_int = pairwise(m * m, |k| {
        let e12 = 0.5 * (d01[k] + d10[k]);
        (d00[k] * d00[k] + 2.0 * e12 * e12 + d11[k] * d11[k]).powf(0.5 * r)
    }) * w;
    let n_int = pairwise(m * m, |k| {
        let a = (u0[k] * u0[k] + u1[k] * u1[k]).powf(0.5 * r);
        let b = (d00[k] * d00[k] + d01[k] * d01[k] + d10[k] * d10[k] + d11[k] * d11[k])
            .powf(0.5 * r);
        a + b
    }) * w;
    Ok((e_int, n_int))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KornConstants {
    pub k1_hat: f64,
    pub k2_hat: f64,
    pub samples: usize,
}

/// Extremes of `(int |E(u)|^p)^(1/p) / ||u||_{1,p}` over random fields.
pub fn korn_ratio(u: &ModeField, p: f64) -> Result<Option<f64>> {
    let m = 2 * u.grid().n();
    let (e, n) = sobolev_integrals(u, p, m)?;
    if n == 0.0 {
        return Ok(None);
    }
    Ok(Some((e / n).powf(1.0 / p)))
}

pub fn estimate_korn_constants<R: Rng + ?Sized>(
    p: f64,
    grid: &SpectralGrid,
    n_samples: usize,
    rng: &mut R,
) -> Result<KornConstants> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("Korn exponent {p} must exceed 1")));
    }
    let mut out = KornConstants {
        k1_hat: f64::INFINITY,
        k2_hat: 0.0,
        samples: 0,
    };
    let spec = RandomSpec {
        kmax: grid.kmax().min(3),
        ..RandomSpec::default()
    };
    for _ in 0..n_samples {
        let s = random_state(grid, rng, &spec);
        if let Some(r) = korn_ratio(s.u(), p)? {
            out.k1_hat = out.k1_hat.min(r);
            out.k2_hat = out.k2_hat.max(r);
            out.samples += 1;
        }
    }
    Ok(out)
}

/// Constants of the windowed bound on `int ||A_p Phi||_{V*}^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApGrowthConstants {
    pub regime: Regime,
    pub c1: f64,
    pub c2: f64,
    pub q: f64,
    pub qa: f64,
    /// `qa = 2`, the endpoint where the Hölder step is an equality.
    pub boundary: bool,
}

/// Safety factor applied to fitted interpolation constants.
pub const FIT_SAFETY: f64 = 2.0;

/// Assembles the growth constants.
///
/// Both regimes start from `||A_p Phi||_{V*}^2 <= c_emb int |T(E(u))|^2`
/// with `c_emb = 1 / (2 kappa1 |k_min|^2)`. For `p <= 2` the closed form
/// `|T(D)|^2 <= 4 kappa0^2 eps^(p-2) |D|^2` finishes the estimate. For
/// `p > 2`, `|T(D)|^2 <= 4 kappa0^2 2^(p-2) (eps^(p-1) + |D|^q)` and the
/// interpolation constant in `int |E|^q <= K |Phi|^((1-a)q) ||Phi||^(qa)` is
/// fitted on random velocity fields.
pub fn ap_growth_constants<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    params: &PhysicalParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<ApGrowthConstants> {
    let kmin_sq = grid.k_scale() * grid.k_scale();
    let c_emb = 1.0 / (2.0 * params.kappa1 * kmin_sq);
    let k0sq = 4.0 * params.kappa0 * params.kappa0;
    let q = params.q();
    let qa = params.qa(grid.dim());
    match params.regime() {
        Regime::PLe2 => Ok(ApGrowthConstants {
            regime: Regime::PLe2,
            c1: c_emb * c_emb * k0sq * params.epsilon.powf(params.p - 2.0),
            c2: 0.0,
            q,
            qa,
            boundary: false,
        }),
        Regime::PGt2 => {
            let k_gn = fit_interpolation_constant(grid, params, n_samples, rng)?;
            let pre = c_emb * k0sq * 2f64.powf(params.p - 2.0);
            Ok(ApGrowthConstants {
                regime: Regime::PGt2,
                c1: pre * k_gn * FIT_SAFETY,
                c2: pre * params.epsilon.powf(params.p - 1.0) * grid.volume(),
                q,
                qa,
                boundary: params.qa_at_boundary(grid.dim()),
            })
        }
    }
}

/// Largest sampled `int |E(u)|^q / (|Phi|^((1-a)q) ||Phi||^(qa))`.
pub fn fit_interpolation_constant<R: Rng + ?Sized>(
    grid: &SpectralGrid,
    params: &PhysicalParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let q = params.q();
    let qa = params.qa(grid.dim());
    let m = 2 * grid.n();
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let spec = RandomSpec {
            amplitude: 1.0,
            kmax: rng.random_range(1..=grid.kmax()),
            slope: rng.random_range(0.0..3.0),
            velocity: true,
            magnetic: false,
        };
        let s = random_state(grid, rng, &spec);
        let (e, _) = sobolev_integrals(s.u(), q, m)?;
        let h = s.h_norm();
        let v = s.v_norm_sq(params).sqrt();
        best = best.max(e / (h.powf(q - qa) * v.powf(qa)));
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApGrowthReport {
    /// `int ||A_p Phi||_{V*}^2` over the window.
    pub lhs: f64,
    pub rhs: f64,
    pub boundary: bool,
    pub pass: bool,
}

/// Checks the windowed growth bound on states sampled at `times`.
pub fn ap_growth_bound(
    times: &[f64],
    states: &[SpectralState],
    params: &PhysicalParams,
    constants: &ApGrowthConstants,
) -> Result<ApGrowthReport> {
    if states.is_empty() || states.len() != times.len() {
        return Err(Error::Span("empty or inconsistent window".into()));
    }
    let mut ap = Vec::with_capacity(states.len());
    let mut v = Vec::with_capacity(states.len());
    let mut sup_h: f64 = 0.0;
    for s in states {
        ap.push(dual_norm_sq(&apply_ap(s, params)?, params)?);
        v.push(s.v_norm_sq(params));
        sup_h = sup_h.max(s.h_norm());
    }
    let (lhs, int_v) = if states.len() == 1 {
        (ap[0], v[0])
    } else {
        (trapezoid(times, &ap), trapezoid(times, &v))
    };
    let rhs = match constants.regime {
        Regime::PLe2 => constants.c1 * int_v + constants.c2,
        Regime::PGt2 => {
            let span = if times.len() > 1 {
                times[times.len() - 1] - times[0]
            } else {
                1.0
            };
            // Hölder on the window: int ||Phi||^qa <= span^(1 - qa/2) (int ||Phi||^2)^(qa/2)
            let holder = span.powf(1.0 - 0.5 * constants.qa) * int_v.powf(0.5 * constants.qa);
            constants.c1 * sup_h.powf(constants.q - constants.qa) * holder + constants.c2 * span
        }
    };
    Ok(ApGrowthReport {
        lhs,
        rhs,
        boundary: constants.boundary,
        pass: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DealiasRule;
    use crate::state::state_norms;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(16, DealiasRule::ThreeHalvesPad).unwrap()
    }

    fn params(p: f64) -> PhysicalParams {
        PhysicalParams {
            kappa0: 0.5,
            kappa1: 1.0,
            mu: 1.0,
            s: 1.0,
            epsilon: 1.0,
            p,
        }
    }

    /// `u = (sin x2, 0)`.
    fn shear(g: &SpectralGrid) -> SpectralState {
        let mut u = ModeField::zeros(g);
        let half = Complex64::new(0.0, -0.5);
        u.data_mut()[g.index(0, 1).unwrap()] = [half, Complex64::new(0.0, 0.0)];
        u.data_mut()[g.index(0, -1).unwrap()] = [half.conj(), Complex64::new(0.0, 0.0)];
        SpectralState::new(u, ModeField::zeros(g)).unwrap()
    }

    /// Direct quadrature of `int T(E(u)) : E(v)` on an `m x m` grid.
    fn weak_form(a: &SpectralState, b: &SpectralState, p: &PhysicalParams, m: usize) -> f64 {
        let ea = strain_on(a.u(), m).unwrap();
        let eb = strain_on(b.u(), m).unwrap();
        let w = a.grid().volume() / (m * m) as f64;
        pairwise(m * m, |i| frob_dot(&stress(&ea.at(i), p), &eb.at(i))) * w
    }

    #[test]
    fn strain_of_a_shear_flow() {
        let g = grid();
        let s = shear(&g);
        let e = strain(s.u()).unwrap();
        let m = e.m;
        for i1 in 0..m {
            for i2 in 0..m {
                let x2 = g.box_size() * i2 as f64 / m as f64;
                let k = i1 * m + i2;
                assert!(e.e11[k].abs() < 1e-12 && e.e22[k].abs() < 1e-12);
                assert!((e.e12[k] - 0.5 * x2.cos()).abs() < 1e-12);
            }
        }
        let z = strain(&ModeField::zeros(&g)).unwrap();
        assert!(z.e11.iter().chain(&z.e12).chain(&z.e22).all(|v| *v == 0.0));
    }

    #[test]
    fn strain_energy_is_half_the_gradient_energy() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_state(&g, &mut rng, &RandomSpec::default());
            let e = strain(s.u()).unwrap();
            assert!(e.max_trace() < 1e-10);
            let w = g.volume() / (e.m * e.m) as f64;
            let int_e = pairwise(e.len(), |i| frob_sq(&e.at(i))) * w;
            let grad = g.volume() * s.u().weighted_mass(|i| g.k_sq(i));
            assert!((int_e - 0.5 * grad).abs() <= 1e-10 * grad);
        }
    }

    #[test]
    fn stress_closed_forms() {
        let zero = [[0.0; 2]; 2];
        assert_eq!(stress(&zero, &params(1.5)), zero);
        let d = [[0.3, -1.2], [-1.2, 2.0]];
        assert_eq!(stress(&d, &params(2.0)), d);
        let t = stress(&[[1.0, 0.0], [0.0, -1.0]], &params(1.5));
        let c = 3f64.powf(-0.25);
        assert!((t[0][0] - c).abs() < 1e-15 && (t[1][1] + c).abs() < 1e-15);
        assert!((c - 0.7598).abs() < 1e-4);
    }

    #[test]
    fn stress_is_the_gradient_of_the_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let basis = sym_basis();
        for p in [1.2, 1.5, 2.5] {
            let par = params(p);
            assert_eq!(potential(&[[0.0; 2]; 2], &par), 0.0);
            for _ in 0..100 {
                let d = random_symmetric(&mut rng, 3.0);
                let t = stress(&d, &par);
                for e in &basis {
                    let h = 1e-5;
                    let fd = (potential(&axpy(&d, h, e), &par) - potential(&axpy(&d, -h, e), &par))
                        / (2.0 * h);
                    assert!((fd - frob_dot(&t, e)).abs() < 1e-7, "p={p}");
                }
            }
        }
        let d = [[0.4, 0.1], [0.1, -0.7]];
        let expect = 0.5 * frob_sq(&d);
        assert!((potential(&d, &params(2.0)) - expect).abs() < 1e-15);
    }

    #[test]
    fn stress_is_frame_indifferent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let d = random_symmetric(&mut rng, 5.0);
            let th: f64 = rng.random_range(0.0..6.3);
            let (c, s) = (th.cos(), th.sin());
            let q = [[c, -s], [s, c]];
            let rot = |m: &Tensor| {
                let mut out = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                out[i][j] += q[i][k] * m[k][l] * q[j][l];
                            }
                        }
                    }
                }
                out
            };
            let par = params(1.7);
            let a = stress(&rot(&d), &par);
            let b = rot(&stress(&d, &par));
            assert!(frob_sq(&axpy(&a, -1.0, &b)).sqrt() < 1e-13 * (1.0 + frob_sq(&a).sqrt()));
            assert!(frob_dot(&stress(&d, &par), &d) >= 0.0);
        }
    }

    #[test]
    fn ap_matches_refined_weak_form() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for p in [1.5, 2.0, 2.5] {
            let par = params(p);
            for _ in 0..5 {
                let a = random_state(&g, &mut rng, &RandomSpec::default());
                let b = random_state(&g, &mut rng, &RandomSpec::default());
                let lhs = pair_dual(&apply_ap(&a, &par).unwrap(), &b).unwrap();
                let rhs = weak_form(&a, &b, &par, 4 * g.n());
                let scale = weak_form(&a, &a, &par, 4 * g.n()).abs().max(lhs.abs());
                assert!((lhs - rhs).abs() <= 1e-9 * scale, "p={p}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn ap_has_no_magnetic_part_and_vanishes_at_zero() {
        let g = grid();
        let par = params(1.5);
        let z = apply_ap(&SpectralState::zeros(&g), &par).unwrap();
        assert_eq!(z, DualElement::zeros(&g));
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = random_state(&g, &mut rng, &RandomSpec::default());
        let f = apply_ap(&s, &par).unwrap();
        assert!(f.b().data().iter().all(|m| m[0].norm() == 0.0 && m[1].norm() == 0.0));
        assert!(pair_dual(&f, &s).unwrap() >= 0.0);
    }

    #[test]
    fn quadratic_case_shear_pairing_and_linearity() {
        let g = grid();
        let par = params(2.0);
        let s = shear(&g);
        let val = pair_dual(&apply_ap(&s, &par).unwrap(), &s).unwrap();
        let expect = 0.5 * g.volume() / 2.0;
        assert!((val - expect).abs() < 1e-12 * expect);

        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_state(&g, &mut rng, &RandomSpec::default());
        let b = random_state(&g, &mut rng, &RandomSpec::default());
        let combo = a.scaled(1.7).add_scaled(-0.4, &b).unwrap();
        let lhs = apply_ap(&combo, &par).unwrap();
        let rhs = apply_ap(&a, &par)
            .unwrap()
            .scaled(1.7)
            .add_scaled(-0.4, &apply_ap(&b, &par).unwrap())
            .unwrap();
        let diff = lhs.add_scaled(-1.0, &rhs).unwrap().to_state().h_norm();
        assert!(diff <= 1e-12 * lhs.to_state().h_norm());

        // monotonicity pairing equals int |E(u1 - u2)|^2
        let pair = monotonicity_pairing(&a, &b, &par).unwrap();
        let d = a.sub(&b).unwrap();
        let grad = g.volume() * d.u().weighted_mass(|i| g.k_sq(i));
        assert!((pair - 0.5 * grad).abs() <= 1e-12 * grad);
        let n = state_norms(&d, &par);
        assert!(pair <= n.v_norm * n.v_norm);
    }

    #[test]
    fn monotone_on_random_pairs() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [1.2, 2.5] {
            let rep = verify_monotonicity(&g, &params(p), 20, &mut rng).unwrap();
            assert!(rep.pass, "p={p}: {rep:?}");
        }
        let a = random_state(&g, &mut rng, &RandomSpec::default());
        assert_eq!(monotonicity_pairing(&a, &a, &params(1.5)).unwrap(), 0.0);
    }

    #[test]
    fn tensor_monotonicity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for p in [1.2, 1.5, 2.0, 2.5] {
            let rep = verify_tensor_monotonicity(&params(p), 2000, 10.0, &mut rng);
            assert!(rep.pass && rep.min_ratio > 0.0, "p={p}");
        }
    }

    #[test]
    fn hessian_of_quadratic_potential_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let b = verify_constitutive_bounds(&params(2.0), 200, 10.0, &mut rng).unwrap();
        assert!((b.nu1_hat - 1.0).abs() < 1e-6 && (b.nu2_hat - 1.0).abs() < 1e-6);
        let h = hessian(&[[0.3, 0.2], [0.2, -1.0]], &params(2.0)).unwrap();
        for (a, row) in h.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let id = if a == c { 1.0 } else { 0.0 };
                assert!((v - id).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hessian_bounds_are_scale_invariant_in_e() {
        let par = params(2.5);
        let d = [[1.0, 2.0], [2.0, -0.5]];
        let e = [[0.2, -0.1], [-0.1, 0.4]];
        let h = hessian(&d, &par).unwrap();
        let r1 = hessian_form(&h, &e) / frob_sq(&e);
        let e7 = [[1.4, -0.7], [-0.7, 2.8]];
        let r7 = hessian_form(&h, &e7) / frob_sq(&e7);
        assert!((r1 - r7).abs() < 1e-12 * r1.abs());
        // analytic Hessian: c (I + (p-2) D (x) D / (eps + |D|^2))
        let dd = frob_sq(&d);
        let c = (1.0 + dd).powf(0.25);
        let expect = c * (frob_sq(&e) + 0.5 * frob_dot(&d, &e).powi(2) / (1.0 + dd));
        assert!((hessian_form(&h, &e) - expect).abs() < 1e-8);
    }

    #[test]
    fn shear_thickening_lower_bound_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let b = verify_constitutive_bounds(&params(2.5), 2000, 10.0, &mut rng).unwrap();
        assert!(b.pass(), "{b:?}");
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        let a = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let e = sym3_eigenvalues(&a);
        for (x, y) in e.iter().zip([1.0, 3.0, 5.0]) {
            assert!((x - y).abs() < 1e-13);
        }
        assert_eq!(sym3_eigenvalues(&[[4.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 4.0]]), [4.0; 3]);
    }

    #[test]
    fn korn_ratio_for_a_single_mode() {
        let g = grid();
        let mut u = ModeField::zeros(&g);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        u.data_mut()[g.index(1, 0).unwrap()] = [zero, one];
        u.data_mut()[g.index(-1, 0).unwrap()] = [zero, one];
        let r = korn_ratio(&u, 2.0).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-13);
        let r5 = korn_ratio(&u.scaled(5.0), 1.5).unwrap().unwrap();
        let r1 = korn_ratio(&u, 1.5).unwrap().unwrap();
        assert!((r5 - r1).abs() < 1e-13 * r1);
        assert!(korn_ratio(&ModeField::zeros(&g), 2.0).unwrap().is_none());
    }

    #[test]
    fn korn_constants_are_ordered_and_stable_under_refinement() {
        let g8 = SpectralGrid::new(8, DealiasRule::ThreeHalvesPad).unwrap();
        let g16 = g8.resized(16).unwrap();
        let a = estimate_korn_constants(2.0, &g8, 30, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        let b = estimate_korn_constants(2.0, &g16, 30, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
        assert!(0.0 < a.k1_hat && a.k1_hat <= a.k2_hat);
        assert!((a.k1_hat / b.k1_hat - 1.0).abs() < 0.2);
        assert!((a.k2_hat / b.k2_hat - 1.0).abs() < 0.2);
    }

    #[test]
    fn nu3_bound_holds_on_fresh_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let par = params(2.5);
        let nu3 = fit_nu3(&par, 5000, 10.0, &mut rng);
        for _ in 0..1000 {
            let d = random_symmetric(&mut rng, 10.0);
            let dn = frob_sq(&d).sqrt();
            assert!(frob_sq(&stress(&d, &par)) <= 1.01 * nu3 * (1.0 + dn).powf(3.0));
        }
    }

    #[test]
    fn growth_bound_zero_window_and_closed_form() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let par = params(2.0);
        let c = ap_growth_constants(&g, &par, 0, &mut rng).unwrap();
        let zeros = vec![SpectralState::zeros(&g); 3];
        let t = [0.0, 0.5, 1.0];
        let r = ap_growth_bound(&t, &zeros, &par, &c).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);

        // steady shear, p = 2: ||A_p Phi||_{V*}^2 = ||A Phi||_{V*}^2 / 4 scaled
        let s = shear(&g);
        let states = vec![s.clone(); 3];
        let r = ap_growth_bound(&t, &states, &par, &c).unwrap();
        // A_p u = (1/2)|k|^2 u on the shear mode, V*-weight 1 / (kappa1 |k|^4)
        let expect = 0.25 * s.h_norm_sq();
        assert!((r.lhs - expect).abs() < 1e-12 * expect);
        assert!(r.pass && r.lhs < r.rhs);
        assert!(ap_growth_bound(&[], &[], &par, &c).is_err());
    }

    #[test]
    fn growth_bound_at_the_exponent_boundary() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let par = params(2.5);
        let c = ap_growth_constants(&g, &par, 40, &mut rng).unwrap();
        assert_eq!(c.q, 3.0);
        assert_eq!(c.qa, 2.0);
        assert!(c.boundary);
        let spec = RandomSpec {
            amplitude: 5.0,
            ..RandomSpec::default()
        };
        let states: Vec<_> = (0..5).map(|_| random_state(&g, &mut rng, &spec)).collect();
        let t: Vec<f64> = (0..5).map(|i| i as f64 * 0.25).collect();
        let r = ap_growth_bound(&t, &states, &par, &c).unwrap();
        assert!(r.pass && r.boundary, "{r:?}");
    }
}
