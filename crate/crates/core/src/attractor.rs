//! Translation semigroup, translation-bounded trajectory norms, absorbing
//! ball estimates and omega-limit diagnostics.

use std::fmt::Write as _;

use crate::constitutive::ApGrowthConstants;
use crate::energy::{modal_interval_integrals, OmegaLambda};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::grid::SpectralGrid;
use crate::linear::fractional_norm_sq;
use crate::params::{PhysicalParams, Regime};
use crate::solver::{GalerkinConfig, Integrator};
use crate::state::{dual_norm_sq, SpectralState};
use crate::sum::trapezoid;
use crate::trajectory::Trajectory;

const TIME_TOL: f64 = 1e-9;

/// `S_t y = y(t + .)`, re-based so the result starts at the original start
/// time, with the forcing shifted accordingly.
pub fn shift(traj: &Trajectory, t: f64) -> Result<Trajectory> {
    if !(t >= 0.0) || t > traj.span() + TIME_TOL {
        return Err(Error::Span(format!(
            "shift {t} outside the recorded span [0, {}]",
            traj.span()
        )));
    }
    let i0 = traj.nearest_index(traj.start() + t);
    let exact = traj.times()[i0] - traj.start();
    if (exact - t).abs() > TIME_TOL * t.max(1.0) {
        return Err(Error::Span(format!(
            "shift {t} is not a multiple of the record interval {}",
            traj.record_dt()
        )));
    }
    let times = traj.times()[i0..].iter().map(|s| s - exact).collect();
    let states = traj.states()[i0..].to_vec();
    let mut out = traj.with_frames(times, states);
    out.set_forcing(traj.forcing().shifted(exact));
    Ok(out)
}

/// Largest relative mismatch between each recorded frame and a
/// re-integration of the previous frame over one record interval, using the
/// trajectory's own forcing.
pub fn step_residual(traj: &Trajectory, config: &GalerkinConfig, frames: usize) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::Span("need two frames to re-integrate".into()));
    }
    let stride = (traj.record_dt() / config.dt).round() as usize;
    if stride == 0 || ((stride as f64) * config.dt - traj.record_dt()).abs() > 1e-9 {
        return Err(Error::Parameter("record interval is not a multiple of dt".into()));
    }
    let integ = Integrator::new(traj.grid(), traj.params(), traj.forcing(), config)?;
    let mut worst: f64 = 0.0;
    for j in 0..frames.min(traj.len() - 1) {
        let mut s = traj.states()[j].clone();
        let t0 = traj.times()[j];
        for n in 0..stride {
            s = integ.step(&s, t0 + n as f64 * config.dt)?;
        }
        let target = &traj.states()[j + 1];
        let err = s.sub(target)?.h_norm() / target.h_norm().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryWindowNorms {
    /// `sup |y|`
    pub linf_b_h: f64,
    /// `sup_t int_t^{t+1} ||y||^2`
    pub l2_b_v: f64,
    /// `sup_t int_t^{t+1} ||dy/dt||_{V*}^2`
    pub l2_b_dual_dt: f64,
    /// `l2_b_v + linf_b_h^2 + l2_b_dual_dt`
    pub fa_norm: f64,
}

/// Unit-window quantities for every admissible window start.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub starts: Vec<f64>,
    /// Window norms of `S_t y` for `t` = each start.
    pub norms: Vec<TrajectoryWindowNorms>,
}

fn frames_per_unit(traj: &Trajectory) -> Result<usize> {
    if traj.len() < 2 || traj.span() < 1.0 - TIME_TOL {
        return Err(Error::Span(format!(
            "window norms need a span of at least 1, got {}",
            traj.span()
        )));
    }
    Ok(((1.0 / traj.record_dt()) - TIME_TOL).ceil() as usize)
}

/// Centered-difference time derivative of the recorded states.
pub fn state_derivatives(traj: &Trajectory) -> Result<Vec<SpectralState>> {
    let s = traj.states();
    let n = s.len();
    if n < 2 {
        return Err(Error::Span("need two frames to differentiate".into()));
    }
    let h = traj.record_dt();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let d = if n == 2 {
            s[1].sub(&s[0])?.scaled(1.0 / h)
        } else if j == 0 {
            s[0].scaled(-3.0).add_scaled(4.0, &s[1])?.add_scaled(-1.0, &s[2])?.scaled(0.5 / h)
        } else if j == n - 1 {
            s[n - 1]
                .scaled(3.0)
                .add_scaled(-4.0, &s[n - 2])?
                .add_scaled(1.0, &s[n - 3])?
                .scaled(0.5 / h)
        } else {
            s[j + 1].sub(&s[j - 1])?.scaled(0.5 / h)
        };
        out.push(d);
    }
    Ok(out)
}

/// Window norms of every shift `S_t y` with `t` on the record grid.
pub fn window_series(traj: &Trajectory, params: &PhysicalParams) -> Result<WindowSeries> {
    let w = frames_per_unit(traj)?;
    let n = traj.len();
    if w >= n {
        return Err(Error::Span("no complete unit window in the record".into()));
    }
    let pieces = modal_interval_integrals(traj, params, 0.0);
    let hsq: Vec<f64> = traj.states().iter().map(|s| s.h_norm_sq()).collect();
    let dsq: Vec<f64> = state_derivatives(traj)?
        .iter()
        .map(|d| dual_norm_sq(&d.to_dual(), params))
        .collect::<Result<_>>()?;
    let times = traj.times();
    let starts = n - w;
    let mut v = vec![0.0; starts];
    let mut hs = vec![0.0; starts];
    let mut ds = vec![0.0; starts];
    for i in 0..starts {
        v[i] = pieces[i..i + w].iter().sum();
        hs[i] = hsq[i..=i + w].iter().cloned().fold(0.0, f64::max);
        ds[i] = trapezoid(&times[i..=i + w], &dsq[i..=i + w]);
    }
    // suffix sups: the norms of S_t y see every window starting at or after t
    let mut norms = vec![
        TrajectoryWindowNorms {
            linf_b_h: 0.0,
            l2_b_v: 0.0,
            l2_b_dual_dt: 0.0,
            fa_norm: 0.0,
        };
        starts
    ];
    let (mut mv, mut mh, mut md) = (0.0f64, 0.0f64, 0.0f64);
    // frames past the last window start still count for the sup of |y|
    for x in &hsq[starts..] {
        mh = mh.max(*x);
    }
    for i in (0..starts).rev() {
        mv = mv.max(v[i]);
        mh = mh.max(hs[i]);
        md = md.max(ds[i]);
        norms[i] = TrajectoryWindowNorms {
            linf_b_h: mh.sqrt(),
            l2_b_v: mv,
            l2_b_dual_dt: md,
            fa_norm: mv + mh + md,
        };
    }
    Ok(WindowSeries {
        starts: times[..starts].iter().map(|t| t - traj.start()).collect(),
        norms,
    })
}

pub fn window_norms(traj: &Trajectory, params: &PhysicalParams) -> Result<TrajectoryWindowNorms> {
    Ok(window_series(traj, params)?.norms[0])
}

/// `sup_t int_t^{t+1} ||g||_{V*}^2` over `t in [0, t_max - 1]`, by Simpson
/// with `samples_per_unit` (even) points per unit time.
pub fn forcing_l2b_sq(
    g: &Forcing,
    grid: &SpectralGrid,
    params: &PhysicalParams,
    t_max: f64,
    samples_per_unit: usize,
) -> Result<f64> {
    if g.is_zero() {
        return Ok(0.0);
    }
    if g.is_time_independent() {
        return g.dual_norm_sq_at(grid, params, 0.0);
    }
    let p = samples_per_unit.max(2) / 2 * 2;
    let ds = 1.0 / p as f64;
    let n = (t_max.max(1.0) * p as f64).floor() as usize + 1;
    let v: Vec<f64> = (0..n)
        .map(|i| g.dual_norm_sq_at(grid, params, i as f64 * ds))
        .collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for s in 0..n.saturating_sub(p) {
        let mut acc = 0.0;
        let mut i = 0;
        while i < p {
            acc += ds / 3.0 * (v[s + i] + 4.0 * v[s + i + 1] + v[s + i + 2]);
            i += 2;
        }
        best = best.max(acc);
    }
    Ok(best)
}

/// Constants entering the absorbing estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingConstants {
    pub ap: ApGrowthConstants,
    /// Fitted `||B(Phi, Phi)||_{V*} <= c_b |Phi| ||Phi||`.
    pub c_b: f64,
    /// `||g||^2` in `L^2_b(V*)`.
    pub g_l2b_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingBall {
    pub r0: f64,
    pub c0: f64,
    pub regime: Regime,
    pub lambda: f64,
    pub q: f64,
    /// Decay rate of the transient term.
    pub rate: f64,
    /// The faster rate `q lambda / 2` stated for `p > 2`; informational only.
    pub nominal_rate: f64,
    /// `sup_{[0,1]} |y|^2`
    pub m0: f64,
    /// `Omega / lambda`
    pub r1: f64,
    /// First `t >= 1` at which the transient term is at most `r0`.
    pub entry_time: f64,
}

impl AbsorbingBall {
    /// `C0 m0 e^{-rate t} + R0`.
    pub fn bound(&self, t: f64) -> f64 {
        self.c0 * self.m0 * (-self.rate * t).exp() + self.r0
    }

    /// Right side of the `L^inf_b(H)` estimate: `m0 e^{-lambda t} + R1`.
    pub fn linf_bound(&self, t: f64) -> f64 {
        self.m0 * (-self.lambda * t).exp() + self.r1
    }

    pub fn scaled(&self, factor: f64) -> AbsorbingBall {
        AbsorbingBall {
            r0: self.r0 * factor,
            c0: self.c0 * factor,
            ..*self
        }
    }
}

/// Bound on `fa(S_t y)` as a function of `L = m0 e^{-lambda t}`:
/// `int ||y||^2 <= L + R1 + G`, `sup |y|^2 <= L + R1` and
/// `int ||y'||^2 <= 4 (G + int ||y||^2 + int ||A_p y||^2 + c_b^2 sup|y|^2 int ||y||^2)`.
fn fa_majorant(l: f64, r1: f64, k: &AbsorbingConstants) -> f64 {
    let h = l + r1;
    let v = l + r1 + k.g_l2b_sq;
    let ap = match k.ap.regime {
        Regime::PLe2 => k.ap.c1 * v + k.ap.c2,
        Regime::PGt2 => k.ap.c1 * h.powf(0.5 * (k.ap.q - k.ap.qa)) * v.powf(0.5 * k.ap.qa) + k.ap.c2,
    };
    let d = 4.0 * (k.g_l2b_sq + v + ap + k.c_b * k.c_b * h * v);
    v + h + d
}

/// Absorbing ball for a trajectory from its behaviour on `[start, start + 1]`.
pub fn absorbing_estimate(
    prefix: &Trajectory,
    params: &PhysicalParams,
    omega: Option<&OmegaLambda>,
    constants: &AbsorbingConstants,
) -> Result<AbsorbingBall> {
    let omega = omega.ok_or_else(|| Error::Parameter("Omega_lambda is required".into()))?;
    if prefix.is_empty() || prefix.span() < 1.0 - TIME_TOL {
        return Err(Error::Span("absorbing estimate needs the record on [0, 1]".into()));
    }
    let lambda = omega.lambda;
    let t0 = prefix.start();
    let m0 = prefix
        .times()
        .iter()
        .zip(prefix.states())
        .filter(|(t, _)| **t <= t0 + 1.0 + TIME_TOL)
        .map(|(_, s)| s.h_norm_sq())
        .fold(0.0, f64::max);
    let r1 = omega.value / lambda;
    let r0 = fa_majorant(0.0, r1, constants);
    // C0 = sup_{0 < L <= m0 e^{-lambda}} (P(L) - P(0)) / L, sampled densely
    let l1 = m0 * (-lambda).exp();
    let mut c0: f64 = 0.0;
    if l1 > 0.0 {
        let n = 2000;
        for i in 1..=n {
            let x = i as f64 / n as f64;
            for l in [l1 * x, l1 * 1e-12f64.powf(1.0 - x)] {
                c0 = c0.max((fa_majorant(l, r1, constants) - r0) / l);
            }
        }
        c0 *= 1.05;
    }
    let rate = lambda;
    let entry_time = if c0 * m0 == 0.0 {
        1.0
    } else if r0 == 0.0 {
        f64::INFINITY
    } else {
        ((c0 * m0 / r0).ln() / rate).max(1.0)
    };
    Ok(AbsorbingBall {
        r0,
        c0,
        regime: params.regime(),
        lambda,
        q: params.q(),
        rate,
        nominal_rate: match params.regime() {
            Regime::PLe2 => lambda,
            Regime::PGt2 => 0.5 * params.q() * lambda,
        },
        m0,
        r1,
        entry_time,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberReport {
    pub entry_time: f64,
    /// First sampled `t` after which `fa(S_t y) <= 2 R0` holds.
    pub observed_entry: Option<f64>,
    /// `max fa(S_t y) / bound(t)` over sampled `t >= 1`.
    pub max_ratio: f64,
    /// `max fa(S_t y) / (2 R0)` over sampled `t >= entry_time`.
    pub max_entry_ratio: f64,
    /// `L^inf_b(H)` estimate held at every sampled `t >= 1`.
    pub linf_ok: bool,
    pub pass: bool,
    pub curve: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingReport {
    pub members: Vec<MemberReport>,
    pub pass: bool,
}

impl AbsorbingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("member,t,fa_norm,bound\n");
        for (i, m) in self.members.iter().enumerate() {
            for (t, fa, b) in &m.curve {
                let _ = writeln!(s, "{i},{t:.16e},{fa:.16e},{b:.16e}");
            }
        }
        s
    }
}

/// Relative slack allowed against the assembled bounds.
pub const ABSORBING_SLACK: f64 = 1.1;

pub fn verify_absorbing(
    trajs: &[Trajectory],
    balls: &[AbsorbingBall],
    params: &PhysicalParams,
) -> Result<AbsorbingReport> {
    if trajs.len() != balls.len() {
        return Err(Error::Shape("one ball per trajectory is required".into()));
    }
    let mut members = Vec::with_capacity(trajs.len());
    for (tr, ball) in trajs.iter().zip(balls) {
        let ws = window_series(tr, params)?;
        let last = *ws.starts.last().unwrap();
        if ball.entry_time > last {
            return Err(Error::Span(format!(
                "trajectory windows end at {last}, before the predicted entry time {}",
                ball.entry_time
            )));
        }
        let mut m = MemberReport {
            entry_time: ball.entry_time,
            observed_entry: None,
            max_ratio: 0.0,
            max_entry_ratio: 0.0,
            linf_ok: true,
            pass: true,
            curve: Vec::new(),
        };
        // sup_{s >= t} |y(s)|^2 over every frame, for the L^inf_b check
        let hsq: Vec<f64> = tr.states().iter().map(|s| s.h_norm_sq()).collect();
        let mut suffix = hsq.clone();
        for i in (0..suffix.len().saturating_sub(1)).rev() {
            suffix[i] = suffix[i].max(suffix[i + 1]);
        }
        for (i, (t, w)) in ws.starts.iter().zip(&ws.norms).enumerate() {
            if *t < 1.0 - TIME_TOL {
                continue;
            }
            let b = ball.bound(*t);
            m.curve.push((*t, w.fa_norm, b));
            m.max_ratio = m.max_ratio.max(w.fa_norm / b);
            if *t >= ball.entry_time - TIME_TOL {
                m.max_entry_ratio = m.max_entry_ratio.max(w.fa_norm / (2.0 * ball.r0));
            }
            if suffix[i] > ball.linf_bound(*t) * (1.0 + 1e-9) {
                m.linf_ok = false;
            }
        }
        let mut entered = None;
        for (t, fa, _) in m.curve.iter().rev() {
            if *fa <= 2.0 * ball.r0 {
                entered = Some(*t);
            } else {
                break;
            }
        }
        m.observed_entry = entered;
        m.pass = m.linf_ok
            && m.max_ratio <= ABSORBING_SLACK
            && m.max_entry_ratio <= ABSORBING_SLACK;
        members.push(m);
    }
    let pass = members.iter().all(|m| m.pass);
    Ok(AbsorbingReport { members, pass })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionDistance {
    /// `max_t |A^{-delta}(a - b)|`
    pub dist_c_neg: f64,
    /// `(int |A^{delta}(a - b)|^2)^{1/2}`
    pub dist_l2_pos: f64,
}

/// Distances between two equally long windows of states sampled at `times`.
pub fn section_distance(
    a: &[SpectralState],
    b: &[SpectralState],
    times: &[f64],
    delta: f64,
    params: &PhysicalParams,
) -> Result<SectionDistance> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Parameter(format!("delta {delta} outside [0, 1/2)")));
    }
    if a.len() != b.len() || a.len() != times.len() || a.is_empty() {
        return Err(Error::Shape("windows must have equal, nonzero length".into()));
    }
    let mut cneg: f64 = 0.0;
    let mut pos = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let d = x.sub(y)?;
        cneg = cneg.max(fractional_norm_sq(&d, -delta, params)?.sqrt());
        pos.push(fractional_norm_sq(&d, delta, params)?);
    }
    let l2 = if times.len() == 1 { 0.0 } else { trapezoid(times, &pos) };
    Ok(SectionDistance {
        dist_c_neg: cneg,
        dist_l2_pos: l2.sqrt(),
    })
}

/// `max_{x in targets} min_{y in pool} d(x, y)`.
pub fn semidistance<F: Fn(usize, usize) -> f64>(targets: &[usize], pool: &[usize], d: F) -> f64 {
    targets
        .iter()
        .map(|&x| pool.iter().map(|&y| d(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorApprox {
    /// Start times of the collected windows (relative to the trajectory start).
    pub sections: Vec<f64>,
    pub window: f64,
    pub spacing: f64,
    pub cutoff: f64,
    pub delta: f64,
    /// `d_j = min_{i < j} dist_C_neg(W_j, W_i)` for `j >= 1`.
    pub series: Vec<f64>,
    /// Distance of each window to the zero section.
    pub to_zero: Vec<f64>,
    /// Roundoff floor `1e-12 * max |A^{-delta} W|`.
    pub noise: f64,
    /// Pairwise `dist_C_neg` matrix.
    pub distances: Vec<Vec<f64>>,
}

impl AttractorApprox {
    /// `d_{j+1} <= d_j + slack * noise` for all consecutive entries.
    pub fn series_nonincreasing(&self, slack: f64) -> bool {
        self.series
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * self.noise)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("window_start,semidistance,distance_to_zero\n");
        for (j, t) in self.sections.iter().enumerate() {
            let d = if j == 0 { f64::NAN } else { self.series[j - 1] };
            let _ = writeln!(s, "{t:.16e},{d:.16e},{:.16e}", self.to_zero[j]);
        }
        s
    }
}

/// Collects windows of length `window` starting at `cutoff + j spacing` and
/// measures how far each new window is from all earlier ones.
pub fn omega_limit_approx(
    traj: &Trajectory,
    window: f64,
    spacing: f64,
    cutoff: f64,
    delta: f64,
    params: &PhysicalParams,
) -> Result<AttractorApprox> {
    if !(window > 0.0 && spacing > 0.0 && cutoff >= 0.0) {
        return Err(Error::Parameter("window, spacing and cutoff must be positive".into()));
    }
    let h = traj.record_dt();
    let wlen = (window / h).round() as usize;
    let step = (spacing / h).round() as usize;
    let first = (cutoff / h).round() as usize;
    if wlen == 0 || step == 0 {
        return Err(Error::Parameter("window and spacing must cover at least one record".into()));
    }
    let mut starts = Vec::new();
    let mut i = first;
    while i + wlen < traj.len() {
        starts.push(i);
        i += step;
    }
    if starts.len() < 2 {
        return Err(Error::Span(format!(
            "span {} holds fewer than two windows after the cutoff {cutoff}",
            traj.span()
        )));
    }
    let times: Vec<f64> = (0..=wlen).map(|k| k as f64 * h).collect();
    let states = traj.states();
    let k = starts.len();
    let mut dist = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..a {
            let d = section_distance(
                &states[starts[a]..=starts[a] + wlen],
                &states[starts[b]..=starts[b] + wlen],
                &times,
                delta,
                params,
            )?
            .dist_c_neg;
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let zero = vec![SpectralState::zeros(traj.grid()); wlen + 1];
    let mut to_zero = Vec::with_capacity(k);
    for &s in &starts {
        to_zero.push(section_distance(&states[s..=s + wlen], &zero, &times, delta, params)?.dist_c_neg);
    }
    let scale = to_zero.iter().cloned().fold(0.0, f64::max);
    let series = (1..k)
        .map(|j| {
            let pool: Vec<usize> = (0..j).collect();
            semidistance(&[j], &pool, |x, y| dist[x][y])
        })
        .collect();
    Ok(AttractorApprox {
        sections: starts.iter().map(|&s| traj.times()[s] - traj.start()).collect(),
        window: wlen as f64 * h,
        spacing: step as f64 * h,
        cutoff,
        delta,
        series,
        to_zero,
        noise: 1e-12 * scale,
        distances: dist,
    })
}

/// Least-squares slope of `-ln d(t)` against `t`.
pub fn decay_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}
