//! Energy balance, the exponential energy inequality and the a priori bound.
//!
//! Time integrals of quadratic quantities are formed mode by mode with a
//! logarithmic-mean rule between records, which is exact for exponentially
//! decaying modes. A plain trapezoid rule would over-integrate the fast
//! dissipative modes at any practical record interval.

use std::fmt::Write as _;

use crate::constitutive::apply_ap;
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::SpectralGrid;
use crate::linear::{magnetic_eigenvalue, velocity_eigenvalue};
use crate::params::PhysicalParams;
use crate::state::{pair_dual, SpectralState};
use crate::sum::{pairwise, trapezoid};
use crate::trajectory::Trajectory;

/// Logarithmic mean of two non-negative numbers; arithmetic mean if either is zero.
pub fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b);
    }
    let r = b / a;
    if (r - 1.0).abs() < 1e-6 {
        // series of (r - 1) / ln r around r = 1
        let x = r - 1.0;
        return a * (1.0 + x / 2.0 - x * x / 12.0);
    }
    (b - a) / r.ln()
}

/// `d/dt` of uniformly spaced samples: centered inside, one-sided second
/// order at the ends.
pub fn derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    match n {
        0 | 1 => Err(Error::Span("at least two samples are needed to differentiate".into())),
        2 => {
            let d = (values[1] - values[0]) / h;
            Ok(vec![d, d])
        }
        _ => {
            let mut out = Vec::with_capacity(n);
            out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
            for i in 1..n - 1 {
                out.push((values[i + 1] - values[i - 1]) / (2.0 * h));
            }
            out.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h));
            Ok(out)
        }
    }
}

/// Per-interval integrals `int_{t_j}^{t_j+1} e^{eta (s - t_j+1)} sum_k (w_k - eta) |c_k(s)|^2 ds`
/// where `sum_k w_k |c_k|^2 = ||y||^2` (volume included).
pub fn modal_interval_integrals(traj: &Trajectory, params: &PhysicalParams, eta: f64) -> Vec<f64> {
    let g = *traj.grid();
    let vol = g.volume();
    let n = g.len();
    let wu: Vec<f64> = (0..n).map(|i| velocity_eigenvalue(&g, params, i) - eta).collect();
    let wb: Vec<f64> = (0..n).map(|i| magnetic_eigenvalue(&g, params, i) - eta).collect();
    let times = traj.times();
    let states = traj.states();
    (0..states.len().saturating_sub(1))
        .map(|j| {
            let h = times[j + 1] - times[j];
            let damp = (-eta * h).exp();
            let (a, b) = (&states[j], &states[j + 1]);
            let mode = |i: usize| {
                if i == g.mean_index() {
                    return 0.0;
                }
                let au = a.u().data()[i];
                let bu = b.u().data()[i];
                let ab = a.b().data()[i];
                let bb = b.b().data()[i];
                let mu = |m: [num_complex::Complex64; 2]| m[0].norm_sqr() + m[1].norm_sqr();
                wu[i] * log_mean(damp * mu(au), mu(bu)) + wb[i] * log_mean(damp * mu(ab), mu(bb))
            };
            vol * h * pairwise(n, mode)
        })
        .collect()
}

/// `int ||g||_{V*}^2` over each record interval by composite Simpson.
pub fn forcing_interval_integrals(
    traj: &Trajectory,
    g: &Forcing,
    params: &PhysicalParams,
    sub: usize,
) -> Result<Vec<f64>> {
    let grid = traj.grid();
    let times = traj.times();
    let mut out = Vec::with_capacity(times.len().saturating_sub(1));
    if g.is_zero() {
        return Ok(vec![0.0; times.len().saturating_sub(1)]);
    }
    let sub = sub.max(1) * 2;
    for j in 0..times.len().saturating_sub(1) {
        let h = (times[j + 1] - times[j]) / sub as f64;
        let mut acc = 0.0;
        for i in 0..=sub {
            let w = if i == 0 || i == sub {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * g.dual_norm_sq_at(grid, params, times[j] + i as f64 * h)?;
        }
        out.push(acc * h / 3.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub h_norm_sq: Vec<f64>,
    pub v_norm_sq: Vec<f64>,
    pub ap_pairing: Vec<f64>,
    pub g_pairing: Vec<f64>,
    /// Pointwise budget from centered differences of `|y|^2 / 2`.
    pub residual: Vec<f64>,
    /// Budget integrated over each record interval: the change of `|y|^2 / 2`
    /// plus `int ||y||^2` (modal, exact for decaying modes) plus trapezoid
    /// integrals of `<A_p y, y> - <g, y>`.
    pub interval_residual: Vec<f64>,
}

impl EnergyReport {
    /// `int |r(t)| dt` over the whole record.
    pub fn residual_l1(&self) -> f64 {
        let a: Vec<f64> = self.residual.iter().map(|r| r.abs()).collect();
        trapezoid(&self.times, &a)
    }

    /// Largest `|sum of interval budgets|` over unit windows starting at record times.
    pub fn windowed_residual(&self) -> f64 {
        let n = self.times.len();
        if n < 2 {
            return 0.0;
        }
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + self.interval_residual[i - 1];
        }
        let mut worst: f64 = 0.0;
        let mut j = 0;
        for i in 0..n {
            while j + 1 < n && self.times[j] < self.times[i] + 1.0 - 1e-9 {
                j += 1;
            }
            if self.times[j] < self.times[i] + 1.0 - 1e-9 {
                break;
            }
            worst = worst.max((cum[j] - cum[i]).abs());
        }
        worst
    }

    /// Quadratic series are nonnegative and the windowed budget is at most
    /// `tol * max |y|^2`.
    pub fn passes(&self, tol: f64) -> bool {
        let nonneg = self
            .h_norm_sq
            .iter()
            .chain(&self.v_norm_sq)
            .chain(&self.ap_pairing)
            .all(|x| *x >= 0.0);
        let scale = self.h_norm_sq.iter().cloned().fold(0.0, f64::max);
        nonneg && self.windowed_residual() <= tol * scale
    }

    /// `sum_j |interval budget_j|`.
    pub fn interval_residual_l1(&self) -> f64 {
        self.interval_residual.iter().map(|r| r.abs()).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,h_norm_sq,v_norm_sq,ap_pairing,g_pairing,residual\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.h_norm_sq[i],
                self.v_norm_sq[i],
                self.ap_pairing[i],
                self.g_pairing[i],
                self.residual[i]
            );
        }
        s
    }
}

/// Energy budget `r = d/dt (|y|^2 / 2) + ||y||^2 + <A_p y, y> - <g, y>` at the records.
pub fn energy_series(traj: &Trajectory, g: &Forcing, params: &PhysicalParams) -> Result<EnergyReport> {
    if traj.len() < 2 {
        return Err(Error::Span("energy series needs at least two frames".into()));
    }
    let grid = traj.grid();
    let mut h = Vec::with_capacity(traj.len());
    let mut v = Vec::with_capacity(traj.len());
    let mut ap = Vec::with_capacity(traj.len());
    let mut gp = Vec::with_capacity(traj.len());
    for (t, s) in traj.times().iter().zip(traj.states()) {
        h.push(s.h_norm_sq());
        v.push(s.v_norm_sq(params));
        ap.push(pair_dual(&apply_ap(s, params)?, s)?);
        gp.push(if g.is_zero() {
            0.0
        } else {
            pair_dual(&g.eval(grid, params, *t)?, s)?
        });
    }
    let half: Vec<f64> = h.iter().map(|x| 0.5 * x).collect();
    let d = derivative(&half, traj.record_dt())?;
    let residual = (0..h.len()).map(|i| d[i] + v[i] + ap[i] - gp[i]).collect();
    let modal = modal_interval_integrals(traj, params, 0.0);
    let times = traj.times();
    let interval_residual = (0..h.len() - 1)
        .map(|j| {
            let dt = times[j + 1] - times[j];
            half[j + 1] - half[j] + modal[j] + 0.5 * dt * (ap[j] + ap[j + 1] - gp[j] - gp[j + 1])
        })
        .collect();
    Ok(EnergyReport {
        times: traj.times().to_vec(),
        h_norm_sq: h,
        v_norm_sq: v,
        ap_pairing: ap,
        g_pairing: gp,
        residual,
        interval_residual,
    })
}

/// Observed orders `log(e_i / e_{i+1}) / log(ratio)` of an error sequence.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / ratio.ln())
        .collect()
}

/// Resolution of the sup search defining `Omega_lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaSearch {
    /// Points in `h in [1, 2]`; `h_points - 1` must divide `samples_per_unit / 2`.
    pub h_points: usize,
    /// Quadrature samples per unit time (a multiple of 64).
    pub samples_per_unit: usize,
    /// Spacing of the `t` grid, rounded to the quadrature grid.
    pub t_stride: f64,
}

impl Default for OmegaSearch {
    fn default() -> Self {
        OmegaSearch {
            h_points: 33,
            samples_per_unit: 128,
            t_stride: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaLambda {
    pub value: f64,
    pub lambda: f64,
    pub t_attain: f64,
    pub h_attain: f64,
    pub search: OmegaSearch,
}

/// `sup_{h in [1,2]} sup_{t >= 0} lambda int_0^h ||g(s+t)||_{V*}^2 e^{lambda s} ds / (e^{lambda h} - 1)`
/// over a discrete `(t, h)` grid with `t <= t_max - 2`.
pub fn omega_lambda(
    g: &Forcing,
    grid: &SpectralGrid,
    params: &PhysicalParams,
    lambda: f64,
    t_max: f64,
    search: &OmegaSearch,
) -> Result<OmegaLambda> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(t_max >= 2.0) {
        return Err(Error::Span(format!("Omega horizon {t_max} is shorter than 2")));
    }
    let p = search.samples_per_unit;
    let hp = search.h_points;
    if p == 0 || !p.is_multiple_of(2) || hp < 2 || !(p / 2).is_multiple_of(hp - 1) {
        return Err(Error::Parameter(format!(
            "incompatible Omega search grid: {hp} h-points, {p} samples per unit"
        )));
    }
    let mut out = OmegaLambda {
        value: 0.0,
        lambda,
        t_attain: 0.0,
        h_attain: 1.0,
        search: *search,
    };
    if g.is_zero() {
        return Ok(out);
    }
    let ds = 1.0 / p as f64;
    let n_samples = (t_max * p as f64).floor() as usize + 1;
    let gv: Vec<f64> = (0..n_samples)
        .map(|i| g.dual_norm_sq_at(grid, params, i as f64 * ds))
        .collect::<Result<_>>()?;
    let stride = ((search.t_stride * p as f64).round() as usize).max(1);
    let t_last = ((t_max - 2.0) * p as f64).floor() as usize;
    let h_step = p / (hp - 1);
    let weights: Vec<f64> = (0..=2 * p).map(|i| (lambda * i as f64 * ds).exp()).collect();
    let mut start = 0;
    while start <= t_last {
        // cumulative Simpson over panel pairs
        let mut cum = 0.0;
        let mut at = 0;
        for j in 0..hp {
            let end = p + j * h_step;
            while at < end {
                let f = |i: usize| gv[start + i] * weights[i];
                cum += ds / 3.0 * (f(at) + 4.0 * f(at + 1) + f(at + 2));
                at += 2;
            }
            let h = end as f64 * ds;
            let val = lambda * cum / (lambda * h).exp_m1();
            if val > out.value {
                out.value = val;
                out.t_attain = start as f64 * ds;
                out.h_attain = h;
            }
        }
        start += stride;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub pass: bool,
    pub pairs: usize,
    /// Smallest `rhs - lhs` (scaled by `e^{-lambda t}`).
    pub worst_margin: f64,
    pub worst_pair: (f64, f64),
    pub tolerance: f64,
    /// Counts of margins in decades `<0, [0,1e-8), [1e-8,1e-6), ..., >=1`.
    pub histogram: [usize; 6],
    /// Smallest margin for each `t` (over admissible `tau`).
    pub margin_by_t: Vec<(f64, f64)>,
}

fn bucket(m: f64) -> usize {
    if m < 0.0 {
        0
    } else if m < 1e-8 {
        1
    } else if m < 1e-6 {
        2
    } else if m < 1e-4 {
        3
    } else if m < 1.0 {
        4
    } else {
        5
    }
}

/// Checks, for all recorded `t >= tau + 1`,
/// `e^{lt}|y(t)|^2 - e^{l tau}|y(tau)|^2 + int_tau^t e^{ls}(||y||^2 - l|y|^2) ds
///  <= (Omega / l)(e^{lt} - e^{l tau})`, evaluated after division by `e^{lt}`.
pub fn verify_energy_inequality(
    traj: &Trajectory,
    params: &PhysicalParams,
    omega: &OmegaLambda,
) -> Result<InequalityReport> {
    if traj.span() < 1.0 - 1e-9 {
        return Err(Error::Span(format!(
            "energy inequality needs a span of at least 1, got {}",
            traj.span()
        )));
    }
    let lam = omega.lambda;
    let times = traj.times();
    let n = times.len();
    let hsq: Vec<f64> = traj.states().iter().map(|s| s.h_norm_sq()).collect();
    let pieces = modal_interval_integrals(traj, params, lam);
    let r1 = omega.value / lam;
    let scale = hsq.iter().cloned().fold(r1, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-6 * scale;
    let mut rep = InequalityReport {
        pass: true,
        pairs: 0,
        worst_margin: f64::INFINITY,
        worst_pair: (0.0, 0.0),
        tolerance: tol,
        histogram: [0; 6],
        margin_by_t: Vec::new(),
    };
    let mut by_t = vec![f64::INFINITY; n];
    for i in 0..n {
        let mut j_int = 0.0;
        for j in i + 1..n {
            let h = times[j] - times[j - 1];
            j_int = (-lam * h).exp() * j_int + pieces[j - 1];
            let gap = times[j] - times[i];
            if gap < 1.0 - 1e-9 {
                continue;
            }
            let decay = (-lam * gap).exp();
            let lhs = hsq[j] - decay * hsq[i] + j_int;
            let rhs = r1 * (-(-lam * gap).exp_m1());
            let margin = rhs - lhs;
            rep.pairs += 1;
            rep.histogram[bucket(margin / scale)] += 1;
            by_t[j] = by_t[j].min(margin);
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.worst_pair = (times[i], times[j]);
            }
            if margin < -tol {
                rep.pass = false;
            }
        }
    }
    rep.margin_by_t = times
        .iter()
        .zip(by_t)
        .filter(|(_, m)| m.is_finite())
        .map(|(t, m)| (*t, m))
        .collect();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroenwallReport {
    pub pass: bool,
    /// Largest `f(t) - f(tau) e^{-eta (t - tau)} - int_tau^t chi(s) e^{eta (s - t)} ds`.
    pub worst_violation: f64,
    pub worst_pair: (f64, f64),
}

/// Checks `f(t)e^{eta t} - f(tau)e^{eta tau} <= int_tau^t chi(s) e^{eta s} ds`
/// on all sampled pairs, in the form divided by `e^{eta t}`.
pub fn groenwall_check(times: &[f64], f: &[f64], chi: &[f64], eta: f64, tol: f64) -> Result<GroenwallReport> {
    if times.len() != f.len() || times.len() != chi.len() {
        return Err(Error::Shape("sample arrays differ in length".into()));
    }
    for i in 1..times.len() {
        if !(times[i] > times[i - 1]) {
            return Err(Error::NonMonotoneTime(i));
        }
    }
    let n = times.len();
    let mut rep = GroenwallReport {
        pass: true,
        worst_violation: f64::NEG_INFINITY,
        worst_pair: (0.0, 0.0),
    };
    for i in 0..n {
        let mut acc = 0.0;
        for j in i + 1..n {
            let h = times[j] - times[j - 1];
            let d = (-eta * h).exp();
            acc = d * acc + 0.5 * h * (d * chi[j - 1] + chi[j]);
            let v = f[j] - f[i] * (-eta * (times[j] - times[i])).exp() - acc;
            if v > rep.worst_violation {
                rep.worst_violation = v;
                rep.worst_pair = (times[i], times[j]);
            }
            if v > tol {
                rep.pass = false;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub times: Vec<f64>,
    /// `|y0|^2 + int_0^t ||g||^2 - |y(t)|^2 - int_0^t ||y||^2`
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AprioriReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,margin\n");
        for (t, m) in self.times.iter().zip(&self.margins) {
            let _ = writeln!(s, "{t:.16e},{m:.16e}");
        }
        s
    }
}

/// `|y(t)|^2 + int_0^t ||y||^2 <= |y0|^2 + int_0^t ||g||_{V*}^2` at every record.
pub fn check_apriori_bound(traj: &Trajectory, g: &Forcing, params: &PhysicalParams) -> Result<AprioriReport> {
    if traj.is_empty() {
        return Err(Error::Span("empty trajectory".into()));
    }
    let y = modal_interval_integrals(traj, params, 0.0);
    let f = forcing_interval_integrals(traj, g, params, 4)?;
    let h0 = traj.states()[0].h_norm_sq();
    let mut iy = 0.0;
    let mut ig = 0.0;
    let mut margins = Vec::with_capacity(traj.len());
    let mut lhs_max: f64 = h0;
    for (j, s) in traj.states().iter().enumerate() {
        if j > 0 {
            iy += y[j - 1];
            ig += f[j - 1];
        }
        let lhs = s.h_norm_sq() + iy;
        lhs_max = lhs_max.max(lhs).max(h0 + ig);
        margins.push(h0 + ig - lhs);
    }
    let tol = 1e-6 * lhs_max;
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AprioriReport {
        times: traj.times().to_vec(),
        margins,
        min_margin,
        tolerance: tol,
        pass: min_margin >= -tol,
    })
}

/// `|y(t)|^2 <= |y(0)|^2 e^{-rate t}` for all recorded `t >= t_min`.
pub fn decay_envelope_holds(traj: &Trajectory, rate: f64, t_min: f64) -> bool {
    let Some(first) = traj.states().first() else {
        return true;
    };
    let h0 = first.h_norm_sq();
    let t0 = traj.start();
    traj.times()
        .iter()
        .zip(traj.states())
        .filter(|(t, _)| **t - t0 >= t_min)
        .all(|(t, s)| s.h_norm_sq() <= h0 * (-rate * (t - t0)).exp())
}

/// Squared norms `|y|^2` of a state sequence.
pub fn h_norm_sq_series(states: &[SpectralState]) -> Vec<f64> {
    states.iter().map(|s| s.h_norm_sq()).collect()
}
