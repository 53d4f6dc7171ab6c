//! Subcommand execution.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dynamics::{actions, effective_energy, integrate, ExtendedState};
use crate::error::Result;
use crate::floquet::{FloquetOptions, FloquetSolver};
use crate::hannay::{hannay_closed_form, hannay_report, hannay_trajectory_estimate, HannayOptions, PerturbativeModel};
use crate::orbits::{find_periodic_orbit, OrbitOptions};
use crate::params::ParameterSchedule;

use super::config::RunConfig;
use super::output::{Artifact, Format, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Orbit,
    Hannay,
    Floquet,
    Sweep,
    Check,
}

fn orbit_options(cfg: &RunConfig) -> OrbitOptions {
    OrbitOptions {
        samples: cfg.orbit.samples,
        ..OrbitOptions::default()
    }
    .with_integrator(cfg.integrator)
}

fn floquet_options(cfg: &RunConfig, ensemble: usize) -> FloquetOptions {
    FloquetOptions {
        ensemble,
        integrator: cfg.integrator,
        orbit: orbit_options(cfg),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let s = &cfg.simulate;
    let sched = &cfg.schedule;
    let t_end = s.t_end.unwrap_or_else(|| sched.period());
    let times: Vec<f64> = (0..=s.samples)
        .map(|i| t_end * i as f64 / s.samples as f64)
        .collect();
    let state0 = ExtendedState::new(s.q, s.p, s.g, s.pi);
    let traj = integrate(&state0, t_end, sched, &cfg.constants, &cfg.integrator, &times)?;
    let mut art = Artifact::table(
        "trajectory",
        vec!["t", "q", "p", "G", "Pi", "lambda_G", "lambda_D", "I", "J", "H_eff"],
        Format::Csv,
    );
    for st in &traj.dense {
        let (i, j) = actions(st)?;
        let h = effective_energy(st, sched, &cfg.constants)?;
        art.push(vec![
            st.t.into(),
            st.q.into(),
            st.p.into(),
            st.g.into(),
            st.pi.into(),
            st.lambda_g.into(),
            st.lambda_d.into(),
            i.into(),
            j.into(),
            h.into(),
        ]);
    }
    Ok(vec![art])
}

pub fn orbit(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let guess = match (cfg.orbit.g_guess, cfg.orbit.pi_guess) {
        (None, None) => None,
        (g, pi) => Some((g.unwrap_or(0.5), pi.unwrap_or(0.0))),
    };
    let orb = find_periodic_orbit(&cfg.schedule, guess, &orbit_options(cfg))?;
    let mut table = Artifact::table("orbit", vec!["t", "G", "Pi"], Format::Csv);
    for s in &orb.samples {
        table.push(vec![s.t.into(), s.g.into(), s.pi.into()]);
    }
    let summary = Artifact::record(
        "orbit_summary",
        vec![
            ("G0", orb.g0.into()),
            ("Pi0", orb.pi0.into()),
            ("residual", orb.residual.into()),
            ("lambda_G", orb.lambda_g.into()),
            ("lambda_D", orb.lambda_d.into()),
        ],
    );
    Ok(vec![table, summary])
}

pub fn hannay(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let h = &cfg.hannay;
    let opts = HannayOptions {
        n_t: h.n_t,
        n_phi: h.n_phi,
        ensemble: h.ensemble,
        i_bar: h.i_bar,
        integrator: cfg.integrator,
    };
    let r = hannay_report(&cfg.schedule, &opts)?;
    Ok(vec![Artifact::record(
        "hannay",
        vec![
            ("theta_closed", r.theta_closed.into()),
            ("theta_quadrature", r.theta_quadrature.into()),
            ("theta_quadrature_full", r.theta_quadrature_full.into()),
            ("theta_traj", r.theta_trajectory.into()),
            ("rho", r.rho.into()),
            ("I_bar", r.i_bar.into()),
            ("n_t", r.n_t.into()),
            ("n_phi", r.n_phi.into()),
            ("ensemble", r.ensemble.into()),
        ],
    )])
}

pub fn floquet(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let solver = FloquetSolver::new(
        &cfg.schedule,
        cfg.constants,
        floquet_options(cfg, cfg.floquet.ensemble),
    )?;
    let mut art = Artifact::table(
        "floquet",
        vec![
            "n",
            "I_bar0",
            "hbar",
            "rho",
            "lambda_G_R",
            "lambda_D_R",
            "theta_H",
            "residual_45",
            "residual_total",
        ],
        Format::Json,
    );
    for &n in &cfg.floquet.n {
        let r = solver.report(n)?;
        art.push(vec![
            r.n.into(),
            r.i_bar0.into(),
            r.hbar.into(),
            r.rho.into(),
            r.lambda_g_r.into(),
            r.lambda_d_r.into(),
            r.theta_h.into(),
            r.residual_45.into(),
            r.residual_total.into(),
        ]);
    }
    Ok(vec![art])
}

fn sweep_point(cfg: &RunConfig, eps: f64, omega: f64) -> Result<Vec<Value>> {
    let sched = ParameterSchedule::standard(eps, omega)?;
    let opts = floquet_options(cfg, cfg.sweep.ensemble);
    let solver = FloquetSolver::new(&sched, cfg.constants, opts)?;
    let closed = hannay_closed_form(&PerturbativeModel { epsilon: eps, omega });
    let traj = hannay_trajectory_estimate(&sched, 1.0, cfg.sweep.ensemble, &cfg.integrator)?;
    let r0 = solver.report(0)?;
    Ok(vec![
        eps.into(),
        omega.into(),
        closed.into(),
        traj.theta.into(),
        solver.rho().into(),
        r0.lambda_g_r.into(),
        r0.residual_45.into(),
    ])
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let grid: Vec<(f64, f64)> = cfg
        .sweep
        .epsilon
        .iter()
        .flat_map(|&e| cfg.sweep.omega.iter().map(move |&w| (e, w)))
        .collect();
    let rows: Vec<Result<Vec<Value>>> = grid
        .par_iter()
        .map(|&(e, w)| sweep_point(cfg, e, w))
        .collect();
    let mut art = Artifact::table(
        "sweep",
        vec![
            "eps",
            "omega",
            "theta_closed",
            "theta_traj",
            "rho",
            "lambda_G_R_n0",
            "residual_45_n0",
        ],
        Format::Csv,
    );
    for row in rows {
        art.push(row?);
    }
    Ok(vec![art])
}

/// Artifacts of a data-producing subcommand. `Check` produces none.
pub fn artifacts(cmd: Command, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match cmd {
        Command::Simulate => simulate(cfg),
        Command::Orbit => orbit(cfg),
        Command::Hannay => hannay(cfg),
        Command::Floquet => floquet(cfg),
        Command::Sweep => sweep(cfg),
        Command::Check => Ok(Vec::new()),
    }
}

/// Writes artifacts into `dir` (created if missing); `format` overrides each
/// artifact's default.
pub fn write_artifacts(
    arts: &[Artifact],
    dir: &Path,
    format: Option<Format>,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for a in arts {
        let f = format.unwrap_or(a.default_format);
        let path = dir.join(a.file_name(f));
        fs::write(&path, a.render(f))?;
        paths.push(path);
    }
    Ok(paths)
}
