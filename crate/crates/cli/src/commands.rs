use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bmhd_core::attractor::{
    absorbing_estimate, decay_rate, forcing_l2b_sq, omega_limit_approx, verify_absorbing,
    AbsorbingConstants,
};
use bmhd_core::bilinear::{fit_bilinear_constant, verify_identities};
use bmhd_core::config::{initial_state, InitialKind, RunConfig};
use bmhd_core::constitutive::{
    ap_growth_constants, estimate_korn_constants, fit_nu3, verify_constitutive_bounds,
    verify_monotonicity, verify_tensor_monotonicity, FIT_SAFETY,
};
use bmhd_core::energy::{
    check_apriori_bound, energy_series, omega_lambda, verify_energy_inequality, OmegaLambda,
};
use bmhd_core::io::{read_trajectory, write_trajectory};
use bmhd_core::linear::{poincare_constant, spectrum_tables};
use bmhd_core::solver::{simulate as run_solver, simulate_ensemble};
use bmhd_core::{Error, Trajectory};
use rand::SeedableRng;

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Stored trajectory with the configured forcing attached, after checking
/// that grid and parameters agree with the configuration.
fn load_run(file: &Path, config: &Path) -> Result<(RunConfig, Trajectory)> {
    let cfg = load_config(config)?;
    let mut traj = read_trajectory(file).with_context(|| format!("reading {}", file.display()))?;
    if traj.grid() != &cfg.grid()? {
        bail!("trajectory grid {:?} differs from the configured grid", traj.grid());
    }
    if traj.params() != &cfg.params {
        bail!("trajectory parameters {:?} differ from the configuration", traj.params());
    }
    traj.set_forcing(cfg.forcing.clone());
    Ok((cfg, traj))
}

fn omega_for(cfg: &RunConfig, record_dt: f64, span: f64) -> Result<OmegaLambda> {
    let g = cfg.grid()?;
    let lam = cfg
        .analysis
        .lambda
        .unwrap_or_else(|| poincare_constant(&cfg.params, &g));
    let horizon = cfg.analysis.omega_horizon.unwrap_or(span).max(2.0);
    Ok(omega_lambda(
        &cfg.forcing,
        &g,
        &cfg.params,
        lam,
        horizon,
        &cfg.analysis.omega_search(record_dt),
    )?)
}

pub fn simulate(config: &Path, output: &Path) -> Result<bool> {
    let cfg = load_config(config)?;
    let phi = cfg.initial_state()?;
    eprintln!("seed = {}", cfg.solver.seed);
    match run_solver(&phi, &cfg.forcing, &cfg.params, &cfg.galerkin()?) {
        Ok(traj) => {
            write_trajectory(&traj, output)?;
            eprintln!("wrote {} frames to {}", traj.len(), output.display());
            Ok(true)
        }
        Err(Error::BlowUp {
            time,
            reason,
            partial,
        }) => {
            if !partial.is_empty() {
                write_trajectory(&partial, output)?;
                eprintln!("partial trajectory ({} frames) written to {}", partial.len(), output.display());
            }
            Err(Error::BlowUp {
                time,
                reason,
                partial,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn verify_energy(file: &Path, config: &Path, output: Option<&Path>) -> Result<bool> {
    let (cfg, traj) = load_run(file, config)?;
    let rep = energy_series(&traj, &cfg.forcing, &cfg.params)?;
    if let Some(out) = output {
        write_text(out, &rep.to_csv())?;
    }
    let pass = rep.passes(cfg.analysis.energy_tol);
    eprintln!(
        "energy budget: windowed residual {:.6e}, tolerance {:.1e} x max|y|^2: {}",
        rep.windowed_residual(),
        cfg.analysis.energy_tol,
        verdict(pass)
    );
    Ok(pass)
}

pub fn verify_inequality(file: &Path, config: &Path, output: Option<&Path>) -> Result<bool> {
    let (cfg, traj) = load_run(file, config)?;
    let om = omega_for(&cfg, traj.record_dt(), traj.span())?;
    let rep = verify_energy_inequality(&traj, &cfg.params, &om)?;
    if let Some(out) = output {
        let mut s = String::from("t,margin\n");
        for (t, m) in &rep.margin_by_t {
            let _ = writeln!(s, "{t:.16e},{m:.16e}");
        }
        write_text(out, &s)?;
    }
    eprintln!(
        "energy inequality: lambda {:.6e}, Omega {:.6e}, {} pairs, worst margin {:.6e} at {:?}, tolerance {:.3e}: {}",
        om.lambda,
        om.value,
        rep.pairs,
        rep.worst_margin,
        rep.worst_pair,
        rep.tolerance,
        verdict(rep.pass)
    );
    eprintln!("margin histogram (<0, <1e-8, <1e-6, <1e-4, <1, >=1): {:?}", rep.histogram);
    Ok(rep.pass)
}

pub fn verify_apriori(file: &Path, config: &Path, output: Option<&Path>) -> Result<bool> {
    let (cfg, traj) = load_run(file, config)?;
    let rep = check_apriori_bound(&traj, &cfg.forcing, &cfg.params)?;
    if let Some(out) = output {
        write_text(out, &rep.to_csv())?;
    }
    eprintln!(
        "a priori bound: min margin {:.6e}, tolerance {:.3e}: {}",
        rep.min_margin,
        rep.tolerance,
        verdict(rep.pass)
    );
    Ok(rep.pass)
}

pub fn props_operators(
    config: &Path,
    samples: Option<usize>,
    seed: Option<u64>,
    output: Option<&Path>,
) -> Result<bool> {
    let cfg = load_config(config)?;
    let g = cfg.grid()?;
    let p = cfg.params;
    let n = samples.unwrap_or(cfg.analysis.samples).max(1);
    let seed = seed.unwrap_or(cfg.solver.seed);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::new();
    let _ = writeln!(s, "seed = {seed}");
    let _ = writeln!(s, "samples = {n}");
    let _ = writeln!(s, "grid = {} {:?}", g.n(), g.rule());
    let _ = writeln!(s, "p = {:.16e}", p.p);

    let id = verify_identities(&g, &p, n, 1e-11, &mut rng)?;
    let _ = writeln!(s, "b_vanishing = {:.16e}", id.b_vanishing);
    let _ = writeln!(s, "b_antisymmetry = {:.16e}", id.b_antisymmetry);
    let _ = writeln!(s, "b0_vanishing = {:.16e}", id.b0_vanishing);
    let _ = writeln!(s, "b0_antisymmetry = {:.16e}", id.b0_antisymmetry);
    let _ = writeln!(s, "identities = {}", verdict(id.pass));

    let mono = verify_monotonicity(&g, &p, n, &mut rng)?;
    let _ = writeln!(s, "monotonicity_min_relative = {:.16e}", mono.min_relative);
    let _ = writeln!(s, "monotonicity = {}", verdict(mono.pass));

    let tensor = verify_tensor_monotonicity(&p, 50 * n, 10.0, &mut rng);
    let _ = writeln!(s, "tensor_monotonicity_min_ratio = {:.16e}", tensor.min_ratio);
    let _ = writeln!(s, "tensor_monotonicity = {}", verdict(tensor.pass));

    let bounds = verify_constitutive_bounds(&p, 50 * n, 10.0, &mut rng)?;
    let _ = writeln!(s, "nu1_hat = {:.16e}", bounds.nu1_hat);
    let _ = writeln!(s, "nu2_hat = {:.16e}", bounds.nu2_hat);
    let _ = writeln!(s, "constitutive_bounds = {}", verdict(bounds.pass()));

    let nu3 = fit_nu3(&p, 50 * n, 10.0, &mut rng);
    let _ = writeln!(s, "nu3_hat = {nu3:.16e}");

    let korn = estimate_korn_constants(p.p, &g, (n / 10).max(1), &mut rng)?;
    let korn_ok = korn.k1_hat > 0.0 && korn.k1_hat <= korn.k2_hat && korn.k2_hat.is_finite();
    let _ = writeln!(s, "korn_k1_hat = {:.16e}", korn.k1_hat);
    let _ = writeln!(s, "korn_k2_hat = {:.16e}", korn.k2_hat);
    let _ = writeln!(s, "korn = {}", verdict(korn_ok));

    let pass = id.pass && mono.pass && tensor.pass && bounds.pass() && korn_ok;
    let _ = writeln!(s, "result = {}", verdict(pass));
    match output {
        Some(out) => write_text(out, &s)?,
        None => print!("{s}"),
    }
    Ok(pass)
}

pub fn absorbing(config: &Path, ensemble: usize, output: &Path) -> Result<bool> {
    let cfg = load_config(config)?;
    if ensemble == 0 {
        bail!("the ensemble needs at least one member");
    }
    let amps = &cfg.analysis.ensemble_amplitudes;
    if amps.is_empty() {
        bail!("analysis.ensemble_amplitudes is empty");
    }
    let g = cfg.grid()?;
    let p = cfg.params;
    let gal = cfg.galerkin()?;
    let mut rng = cfg.rng();
    let mut ic = cfg.solver.initial.clone();
    if ic.kind == InitialKind::Zero {
        ic.kind = InitialKind::Random;
    }
    let ics = (0..ensemble)
        .map(|i| {
            ic.amplitude = amps[i % amps.len()];
            initial_state(&g, &ic, &mut rng)
        })
        .collect::<bmhd_core::Result<Vec<_>>>()?;
    let trajs = simulate_ensemble(&ics, &cfg.forcing, &p, &gal)
        .into_iter()
        .collect::<bmhd_core::Result<Vec<_>>>()?;
    let om = omega_for(&cfg, gal.record_dt(), gal.t_end)?;
    let fit = cfg.analysis.fit_samples.max(1);
    let constants = AbsorbingConstants {
        ap: ap_growth_constants(&g, &p, fit, &mut rng)?,
        c_b: FIT_SAFETY * fit_bilinear_constant(&g, &p, fit, g.kmax().min(4), &mut rng)?,
        g_l2b_sq: forcing_l2b_sq(&cfg.forcing, &g, &p, gal.t_end, cfg.analysis.samples_per_unit)?,
    };
    let balls = trajs
        .iter()
        .map(|t| absorbing_estimate(t, &p, Some(&om), &constants))
        .collect::<bmhd_core::Result<Vec<_>>>()?;
    let rep = verify_absorbing(&trajs, &balls, &p)?;
    write_text(output, &rep.to_csv())?;
    eprintln!("seed = {}", cfg.solver.seed);
    for (i, (m, b)) in rep.members.iter().zip(&balls).enumerate() {
        eprintln!(
            "member {i}: |y0| = {:.3e}, R0 = {:.6e}, C0 = {:.6e}, predicted entry {:.4}, observed {:?}, max fa/bound {:.4}, after entry fa/2R0 {:.4}, L^inf_b bound {}: {}",
            ics[i].h_norm(),
            b.r0,
            b.c0,
            m.entry_time,
            m.observed_entry,
            m.max_ratio,
            m.max_entry_ratio,
            verdict(m.linf_ok),
            verdict(m.pass)
        );
    }
    Ok(rep.pass)
}

pub fn attractor(
    file: &Path,
    config: &Path,
    delta: Option<f64>,
    window: Option<f64>,
    output: &Path,
) -> Result<bool> {
    let (cfg, traj) = load_run(file, config)?;
    let a = &cfg.analysis;
    let approx = omega_limit_approx(
        &traj,
        window.unwrap_or(a.window),
        a.spacing,
        a.cutoff,
        delta.unwrap_or(a.delta),
        &cfg.params,
    )?;
    write_text(output, &approx.to_csv())?;
    let pass = if cfg.forcing.is_zero() {
        let lam = a
            .lambda
            .unwrap_or_else(|| poincare_constant(&cfg.params, traj.grid()));
        let rate = decay_rate(&approx.sections, &approx.to_zero).unwrap_or(f64::INFINITY);
        eprintln!("decay rate of the distance to zero {rate:.6e} (0.95 lambda = {:.6e})", 0.95 * lam);
        rate >= 0.95 * lam
    } else {
        approx.series_nonincreasing(3.0)
    };
    eprintln!(
        "{} windows, noise floor {:.3e}: {}",
        approx.sections.len(),
        approx.noise,
        verdict(pass)
    );
    Ok(pass)
}

pub fn spectrum(config: &Path, count: usize) -> Result<bool> {
    let cfg = load_config(config)?;
    let g = cfg.grid()?;
    let tables = spectrum_tables(&g, &cfg.params);
    let mut s = String::from("branch,k1,k2,polarization,eigenvalue\n");
    for (name, list) in [("u", &tables.velocity), ("b", &tables.magnetic)] {
        for e in list.iter().take(count) {
            let _ = writeln!(s, "{name},{},{},{:?},{:.16e}", e.k.0, e.k.1, e.polarization, e.value);
        }
    }
    print!("{s}");
    eprintln!("lambda = {:.16e}", poincare_constant(&cfg.params, &g));
    Ok(true)
}
