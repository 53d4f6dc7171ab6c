//! Built-in invariant suite run by the `check` subcommand.

use nalgebra::Vector2;

use crate::dynamics::{actions, covariance, integrate, ExtendedState};
use crate::error::Result;
use crate::floquet::{FloquetOptions, FloquetSolver};
use crate::hannay::{
    hannay_closed_form, hannay_quadrature, hannay_quadrature_with, hannay_trajectory_estimate,
    PerturbativeModel, QuadratureOrder,
};
use crate::integrator::IntegratorOptions;
use crate::monodromy::{compute_monodromy, ellipse_level, periodic_gaussian_oracle};
use crate::orbits::{find_periodic_orbit, first_order_orbit, OrbitOptions};
use crate::params::{Constants, ParameterSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

fn within(name: String, value: f64, bound: f64) -> CheckOutcome {
    CheckOutcome {
        passed: value.abs() <= bound,
        detail: format!("|{value:.3e}| <= {bound:.1e}"),
        name,
    }
}

fn tol() -> IntegratorOptions {
    IntegratorOptions::rk45(1e-12)
}

fn params_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let t = s.period();
    let worst = (0..64)
        .map(|i| {
            let x = 0.37 * i as f64;
            let (k0, k1) = (s.eval(x), s.eval(x + t));
            (k0.a - k1.a).abs().max((k0.b - k1.b).abs()).max((k0.c - k1.c).abs())
        })
        .fold(0.0, f64::max);
    out.push(within(format!("params.periodicity eps={eps}"), worst, 1e-12));
    let margin = s.ellipticity_margin(4096);
    out.push(CheckOutcome {
        name: format!("params.elliptic eps={eps}"),
        passed: margin > 0.0,
        detail: format!("min(ab - c^2) = {margin:.6}"),
    });
    Ok(())
}

fn dynamics_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let hbar = 0.7;
    let consts = Constants::new(hbar)?;
    let t_end = 10.0 * s.period();
    let state = ExtendedState::new(1.0, 0.3, 0.6, 0.1);
    let traj = integrate(&state, t_end, &s, &consts, &tol(), &[])?;
    let mut det_err: f64 = 0.0;
    for st in &traj.steps {
        let (qq, pp, qp) = covariance(st.g, st.pi, hbar)?;
        det_err = det_err.max((qq * pp - qp * qp - hbar * hbar / 4.0).abs());
    }
    out.push(within(format!("dynamics.covariance_determinant eps={eps}"), det_err, 1e-10));
    if eps == 0.0 {
        let (i0, j0) = actions(&state)?;
        let (i1, j1) = actions(traj.final_state())?;
        out.push(within(
            "dynamics.action_conservation eps=0".into(),
            (i1 - i0).abs().max((j1 - j0).abs()),
            1e-8,
        ));
    }
    Ok(())
}

fn monodromy_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let m = compute_monodromy(&s, &tol())?;
    out.push(within(format!("monodromy.determinant eps={eps}"), m.determinant() - 1.0, 1e-10));
    let x = Vector2::new(0.8, -0.3);
    let level = ellipse_level(&m.frame, &x) - ellipse_level(&m.frame, &m.map(&x));
    out.push(within(format!("monodromy.invariant_ellipse eps={eps}"), level, 1e-10));
    let model = PerturbativeModel { epsilon: eps, omega: 1.0 };
    out.push(within(
        format!("monodromy.rotation_number eps={eps}"),
        m.rho - model.averaged_rotation(),
        5.0 * eps.powi(3) + 1e-10,
    ));
    Ok(())
}

fn orbit_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let m = compute_monodromy(&s, &tol())?;
    let oracle = periodic_gaussian_oracle(&m.frame);
    let opts = OrbitOptions {
        newton_tol: 1e-11,
        ..OrbitOptions::default()
    };
    let orb = find_periodic_orbit(&s, None, &opts)?;
    out.push(within(format!("orbits.periodicity eps={eps}"), orb.residual, 1e-10));
    out.push(within(
        format!("orbits.oracle_agreement eps={eps}"),
        (orb.g0 - oracle.0).hypot(orb.pi0 - oracle.1),
        1e-8,
    ));
    out.push(within(
        format!("orbits.phase_forms eps={eps}"),
        orb.lambda_g - orb.lambda_g_alt,
        1e-8,
    ));
    let fam = s.standard_family().copied().expect("standard family");
    let dev = orb
        .samples
        .iter()
        .map(|p| {
            let (g, pi) = first_order_orbit(&fam, p.t);
            (p.g - g).abs().max((p.pi - pi).abs())
        })
        .fold(0.0, f64::max);
    out.push(within(format!("orbits.first_order eps={eps}"), dev, 3.0 * eps * eps + 1e-10));
    Ok(())
}

fn hannay_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let model = PerturbativeModel { epsilon: eps, omega: 1.0 };
    let closed = hannay_closed_form(&model);
    let q = hannay_quadrature(&model, 128, 128)?;
    out.push(within(format!("hannay.quadrature eps={eps}"), q - closed, 1e-5));
    let q2 = hannay_quadrature_with(&model, 128, 128, 2.0, QuadratureOrder::Consistent)?;
    out.push(within(format!("hannay.action_independence eps={eps}"), q2 - q, 1e-10));
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let est = hannay_trajectory_estimate(&s, 1.0, 128, &tol())?;
    out.push(within(
        format!("hannay.trajectory eps={eps}"),
        est.theta - closed,
        5.0 * eps.powi(3) + 1e-9,
    ));
    Ok(())
}

fn floquet_checks(eps: f64, out: &mut Vec<CheckOutcome>) -> Result<()> {
    let s = ParameterSchedule::standard(eps, 1.0)?;
    let opts = FloquetOptions {
        ensemble: 128,
        ..FloquetOptions::default()
    };
    let solver = FloquetSolver::new(&s, Constants::default(), opts)?;
    let bound = 5.0 * eps.powi(3) + 1e-9;
    for n in 0..4 {
        let r = solver.report(n)?;
        out.push(within(format!("floquet.relation n={n} eps={eps}"), r.residual_45, bound));
        out.push(within(format!("floquet.total_phase n={n} eps={eps}"), r.residual_total, bound));
    }
    let (g0, _) = solver.phases(0)?;
    out.push(CheckOutcome {
        name: format!("floquet.ground_state_reduction eps={eps}"),
        passed: g0 == solver.orbit().lambda_g,
        detail: format!("{g0:.6e}"),
    });
    let mut spread: f64 = 0.0;
    let base = solver.phases(2)?.0;
    for hbar in [0.5, 2.0] {
        let other = FloquetSolver::new(&s, Constants::new(hbar)?, opts)?;
        spread = spread.max((other.phases(2)?.0 - base).abs());
    }
    out.push(within(format!("floquet.hbar_invariance eps={eps}"), spread, 1e-8));
    Ok(())
}

/// Runs the full suite at `ε ∈ {0, 0.05}`, `ω = 1`. A numerical error inside a
/// group is reported as a failed check.
pub fn run_checks() -> Vec<CheckOutcome> {
    type Group = fn(f64, &mut Vec<CheckOutcome>) -> Result<()>;
    let groups: [(&str, Group); 6] = [
        ("params", params_checks),
        ("dynamics", dynamics_checks),
        ("monodromy", monodromy_checks),
        ("orbits", orbit_checks),
        ("hannay", hannay_checks),
        ("floquet", floquet_checks),
    ];
    let mut out = Vec::new();
    for eps in [0.0, 0.05] {
        for (name, group) in groups {
            if let Err(e) = group(eps, &mut out) {
                out.push(CheckOutcome {
                    name: format!("{name} eps={eps}"),
                    passed: false,
                    detail: e.to_string(),
                });
            }
        }
    }
    out
}
