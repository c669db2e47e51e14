//! Simulation followed by the energy and attractor analyses.

use bmhd_core::attractor::{shift, step_residual, window_norms};
use bmhd_core::config::RunConfig;
use bmhd_core::energy::{check_apriori_bound, energy_series, omega_lambda, verify_energy_inequality, OmegaSearch};
use bmhd_core::io::{read_trajectory, write_trajectory};
use bmhd_core::linear::poincare_constant;
use bmhd_core::solver::simulate;
use bmhd_core::*;

const CONFIG: &str = r#"
[grid]
n = 8
rule = "three_halves_pad"

[params]
kappa0 = 0.5
kappa1 = 1.0
mu = 1.0
s = 1.0
epsilon = 1.0
p = 1.5

[[forcing.terms]]
k = [1, 1]
component = "u"
amplitude = [0.3, 0.0]

[[forcing.terms]]
k = [1, 0]
component = "b"
amplitude = [0.0, 0.2]
profile = { kind = "sinusoid", omega = 6.283185307179586, phase = 0.0 }

[solver]
dt = 0.01
t_end = 4.0
record_stride = 5
seed = 3

[solver.initial]
kind = "random"
amplitude = 2.0
kmax = 3
"#;

fn run() -> (RunConfig, Trajectory) {
    let cfg = RunConfig::from_toml_str(CONFIG).unwrap();
    let phi = cfg.initial_state().unwrap();
    let tr = simulate(&phi, &cfg.forcing, &cfg.params, &cfg.galerkin().unwrap()).unwrap();
    (cfg, tr)
}

#[test]
fn forced_run_satisfies_energy_estimates() {
    let (cfg, tr) = run();
    let g = cfg.grid().unwrap();
    let p = cfg.params;
    let lam = poincare_constant(&p, &g);
    let om = omega_lambda(&cfg.forcing, &g, &p, lam, cfg.solver.t_end, &OmegaSearch::default()).unwrap();
    assert!(om.value > 0.0);
    let ineq = verify_energy_inequality(&tr, &p, &om).unwrap();
    assert!(ineq.pass, "worst margin {}", ineq.worst_margin);
    let apr = check_apriori_bound(&tr, &cfg.forcing, &p).unwrap();
    assert!(apr.pass, "min margin {}", apr.min_margin);
    // the budget closes as the record interval shrinks
    let coarse = energy_series(&tr, &cfg.forcing, &p).unwrap().windowed_residual();
    let mut fine_cfg = cfg.galerkin().unwrap();
    fine_cfg.record_stride = 1;
    let fine_tr = simulate(tr.states().first().unwrap(), &cfg.forcing, &p, &fine_cfg).unwrap();
    let fine = energy_series(&fine_tr, &cfg.forcing, &p).unwrap().windowed_residual();
    assert!(fine < 0.25 * coarse);
}

#[test]
fn stored_runs_reload_and_shift_consistently() {
    let (cfg, tr) = run();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.bmhd");
    write_trajectory(&tr, &path).unwrap();
    let mut back = read_trajectory(&path).unwrap();
    assert_eq!(back.states(), tr.states());
    back.set_forcing(cfg.forcing.clone());
    let sh = shift(&back, 1.0).unwrap();
    assert!(step_residual(&sh, &cfg.galerkin().unwrap(), 10).unwrap() <= 1e-8);
    let w0 = window_norms(&back, &cfg.params).unwrap();
    let w1 = window_norms(&sh, &cfg.params).unwrap();
    // sups over a subset of windows
    assert!(w1.fa_norm <= w0.fa_norm);
}
