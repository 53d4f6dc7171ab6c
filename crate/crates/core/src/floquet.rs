//! Geometric and dynamical phases of the Floquet cyclic states.
//!
//! The state labelled `n` is the squeezed state centred on the invariant torus
//! of action `Ī₀ = nħ`, with its fluctuation variables on the periodic orbit.
//! Per period,
//!
//! ```text
//! λ_G^R = (⟨∫ ½(p q̇ − q ṗ) dt⟩ − Ī₀ ρ)/ħ − ∮ G dΠ
//! λ_D^R = −⟨∫ H_cl dt⟩/ħ − ∫ H_fl dt
//! ```
//!
//! where `⟨·⟩` is the uniform average over an exact torus ensemble. Subtracting
//! `Ī₀ρ` removes the closing phase of the centroid, which comes back to the
//! torus rotated by `ρ` in the normal-form angle.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::hannay::{hannay_closed_form, hannay_trajectory_estimate, PerturbativeModel};
use crate::integrator::IntegratorOptions;
use crate::monodromy::{compute_monodromy, periodic_gaussian_oracle, torus_ensemble, Monodromy};
use crate::orbits::{find_periodic_orbit, OrbitOptions, PeriodicOrbit};
use crate::params::{Constants, ParameterSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetPhaseReport {
    pub n: u32,
    pub i_bar0: f64,
    pub hbar: f64,
    pub rho: f64,
    pub lambda_g_r: f64,
    pub lambda_d_r: f64,
    pub theta_h: f64,
    /// `λ_G^R + (n+½)Θ_H`.
    pub residual_45: f64,
    /// `λ_G^R + λ_D^R + (n+½)ρ`.
    pub residual_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    /// Torus ensemble size.
    pub ensemble: usize,
    pub integrator: IntegratorOptions,
    pub orbit: OrbitOptions,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            ensemble: 256,
            integrator: IntegratorOptions::rk45(1e-12),
            orbit: OrbitOptions::default(),
        }
    }
}

/// Monodromy and periodic orbit for one schedule, reused across `n`.
#[derive(Debug, Clone)]
pub struct FloquetSolver<'a> {
    sched: &'a ParameterSchedule,
    consts: Constants,
    opts: FloquetOptions,
    monodromy: Monodromy,
    orbit: PeriodicOrbit,
}

impl<'a> FloquetSolver<'a> {
    pub fn new(sched: &'a ParameterSchedule, consts: Constants, opts: FloquetOptions) -> Result<Self> {
        if opts.ensemble < 8 {
            return Err(Error::InvalidArgument(format!(
                "ensemble needs at least 8 points, got {}",
                opts.ensemble
            )));
        }
        let monodromy = compute_monodromy(sched, &opts.integrator)?;
        let guess = periodic_gaussian_oracle(&monodromy.frame);
        let orbit = find_periodic_orbit(sched, Some(guess), &opts.orbit)?;
        Ok(Self {
            sched,
            consts,
            opts,
            monodromy,
            orbit,
        })
    }

    pub fn monodromy(&self) -> &Monodromy {
        &self.monodromy
    }

    pub fn orbit(&self) -> &PeriodicOrbit {
        &self.orbit
    }

    pub fn rho(&self) -> f64 {
        self.monodromy.rho
    }

    /// `(λ_G^R, λ_D^R)` for state `n`.
    pub fn phases(&self, n: u32) -> Result<(f64, f64)> {
        if n == 0 {
            return Ok((self.orbit.lambda_g, self.orbit.lambda_d));
        }
        let hbar = self.consts.hbar;
        let i_bar0 = n as f64 * hbar;
        let ensemble = torus_ensemble(&self.monodromy.frame, i_bar0, self.opts.ensemble)?;
        let (area, energy) = ensemble.mean_cycle_integrals(self.sched, &self.opts.integrator)?;
        let lambda_g = (area - i_bar0 * self.monodromy.rho) / hbar + self.orbit.lambda_g;
        let lambda_d = -energy / hbar + self.orbit.lambda_d;
        Ok((lambda_g, lambda_d))
    }

    /// Hannay angle used for comparison: the closed form for the standard
    /// family, the trajectory estimate at `Ī₀ = max(n, 1)ħ` otherwise.
    pub fn theta_h(&self, n: u32) -> Result<f64> {
        match PerturbativeModel::from_schedule(self.sched) {
            Ok(model) => Ok(hannay_closed_form(&model)),
            Err(_) => {
                let i_bar0 = n.max(1) as f64 * self.consts.hbar;
                let est = hannay_trajectory_estimate(
                    self.sched,
                    i_bar0,
                    self.opts.ensemble.max(64),
                    &self.opts.integrator,
                )?;
                Ok(est.theta)
            }
        }
    }

    pub fn report(&self, n: u32) -> Result<FloquetPhaseReport> {
        let (lambda_g_r, lambda_d_r) = self.phases(n)?;
        let theta_h = self.theta_h(n)?;
        let weight = n as f64 + 0.5;
        let rho = self.monodromy.rho;
        Ok(FloquetPhaseReport {
            n,
            i_bar0: n as f64 * self.consts.hbar,
            hbar: self.consts.hbar,
            rho,
            lambda_g_r,
            lambda_d_r,
            theta_h,
            residual_45: lambda_g_r + weight * theta_h,
            residual_total: lambda_g_r + lambda_d_r + weight * rho,
        })
    }
}

pub fn floquet_geometric_phase(
    sched: &ParameterSchedule,
    n: u32,
    consts: &Constants,
    opts: &FloquetOptions,
) -> Result<f64> {
    Ok(FloquetSolver::new(sched, *consts, *opts)?.phases(n)?.0)
}

pub fn floquet_dynamical_phase(
    sched: &ParameterSchedule,
    n: u32,
    consts: &Constants,
    opts: &FloquetOptions,
) -> Result<f64> {
    Ok(FloquetSolver::new(sched, *consts, *opts)?.phases(n)?.1)
}

pub fn relation_check(
    sched: &ParameterSchedule,
    n: u32,
    consts: &Constants,
    opts: &FloquetOptions,
) -> Result<FloquetPhaseReport> {
    FloquetSolver::new(sched, *consts, *opts)?.report(n)
}

/// Second-order perturbative `(λ_G^R, λ_D^R)`; independent of `ħ`.
pub fn pert_floquet_phases(model: &PerturbativeModel, n: u32) -> (f64, f64) {
    let weight = n as f64 + 0.5;
    let k = model.omega + 2.0;
    let e2 = model.epsilon * model.epsilon;
    let period = TAU / model.omega;
    let lambda_g = -weight * hannay_closed_form(model);
    let lambda_d = -weight * (1.0 + (-2.0 / k + 2.0 / (k * k)) * e2) * period;
    (lambda_g, lambda_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::orbit_phases;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn solver(sched: &ParameterSchedule, hbar: f64) -> FloquetSolver<'_> {
        FloquetSolver::new(sched, Constants::new(hbar).unwrap(), FloquetOptions::default()).unwrap()
    }

    #[test]
    fn perturbative_examples() {
        let m = PerturbativeModel { epsilon: 0.1, omega: 1.0 };
        assert_abs_diff_eq!(pert_floquet_phases(&m, 0).0, -3.4907e-3, epsilon = 1e-7);
        assert_abs_diff_eq!(pert_floquet_phases(&m, 2).0, -1.74533e-2, epsilon = 1e-7);
        assert_abs_diff_eq!(pert_floquet_phases(&m, 0).1, -3.12763, epsilon = 1e-5);
        let m0 = PerturbativeModel { epsilon: 0.0, omega: 1.0 };
        assert_eq!(pert_floquet_phases(&m0, 3), (0.0, -3.5 * TAU));
    }

    #[test]
    fn ground_state_phases_match_examples() {
        let s = ParameterSchedule::standard(0.1, 1.0).unwrap();
        let sol = solver(&s, 1.0);
        let (g, d) = sol.phases(0).unwrap();
        assert!((g + PI * 0.01 / 9.0).abs() < 5e-3 * 0.1);
        assert_abs_diff_eq!(d, -3.12763, epsilon = 1e-2);
        let ph = orbit_phases(sol.orbit());
        assert_eq!((g, d), (ph.lambda_g, ph.lambda_d));
    }

    #[test]
    fn excited_state_phases_match_examples() {
        let s = ParameterSchedule::standard(0.1, 1.0).unwrap();
        let sol = solver(&s, 1.0);
        let (g, d) = sol.phases(1).unwrap();
        let eps3 = 1e-3;
        assert!((g + 1.5 * TAU * 0.01 / 9.0).abs() < 5.0 * eps3);
        assert!((d - 3.0 * sol.phases(0).unwrap().1).abs() < 5.0 * eps3 * TAU);
    }

    #[test]
    fn undriven_phases() {
        let s = ParameterSchedule::standard(0.0, 1.0).unwrap();
        let sol = solver(&s, 1.0);
        for n in 0..4 {
            let r = sol.report(n).unwrap();
            assert!(r.lambda_g_r.abs() < 1e-9);
            assert!(r.residual_45.abs() < 1e-9);
            assert!(r.residual_total.abs() < 1e-9);
        }
        let (_, d) = sol.phases(2).unwrap();
        assert_abs_diff_eq!(d, -5.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn relation_holds_for_low_states() {
        let s = ParameterSchedule::standard(0.05, 1.0).unwrap();
        let sol = solver(&s, 1.0);
        let bound = 5.0 * 0.05f64.powi(3);
        for n in 0..4 {
            let r = sol.report(n).unwrap();
            assert!(r.residual_45.abs() <= bound, "n={n} {r:?}");
            assert_eq!(r.i_bar0, n as f64);
        }
        assert!(sol.report(1).unwrap().residual_total.abs() <= bound);
    }

    #[test]
    fn geometric_phase_is_independent_of_hbar() {
        let s = ParameterSchedule::standard(0.1, 1.0).unwrap();
        let vals: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&h| solver(&s, h).phases(2).unwrap().0)
            .collect();
        assert!((vals[0] - vals[1]).abs() < 1e-8);
        assert!((vals[2] - vals[1]).abs() < 1e-8);
    }

    #[test]
    fn geometric_phase_is_affine_in_state_number() {
        let s = ParameterSchedule::standard(0.08, 1.0).unwrap();
        let sol = solver(&s, 1.0);
        let xs: Vec<f64> = (0..5).map(|n| n as f64 + 0.5).collect();
        let ys: Vec<f64> = (0..5).map(|n| sol.phases(n).unwrap().0).collect();
        // least squares through the origin
        let slope = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>()
            / xs.iter().map(|x| x * x).sum::<f64>();
        let theta = hannay_closed_form(&PerturbativeModel { epsilon: 0.08, omega: 1.0 });
        let bound = 5.0 * 0.08f64.powi(3);
        assert!((slope + theta).abs() < bound);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y - slope * x).abs() < bound);
        }
    }

    #[test]
    fn ensemble_size_converges() {
        let s = ParameterSchedule::standard(0.1, 1.0).unwrap();
        let consts = Constants::default();
        let g = |n_ens| {
            let opts = FloquetOptions { ensemble: n_ens, ..FloquetOptions::default() };
            FloquetSolver::new(&s, consts, opts).unwrap().phases(1).unwrap().0
        };
        assert!((g(256) - g(512)).abs() < 1e-8);
    }

    #[test]
    fn free_functions_agree_with_solver() {
        let s = ParameterSchedule::standard(0.05, 1.0).unwrap();
        let c = Constants::default();
        let o = FloquetOptions { ensemble: 64, ..FloquetOptions::default() };
        let r = relation_check(&s, 1, &c, &o).unwrap();
        assert_eq!(floquet_geometric_phase(&s, 1, &c, &o).unwrap(), r.lambda_g_r);
        assert_eq!(floquet_dynamical_phase(&s, 1, &c, &o).unwrap(), r.lambda_d_r);
    }
}
