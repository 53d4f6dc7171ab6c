//! The nonadiabatic Hannay angle of the driven oscillator.
//!
//! Three independent routes are provided:
//!
//! * the closed form `Θ_H = 2πε²/(ω+2)²` of the second-order Lie-transform
//!   solution for the standard family;
//! * a two-dimensional quadrature of the torus-averaged `∫₀ᵀ ∂A/∂Ī dt`, with
//!   `A = H̄(Ī) − H_cl(φ(φ̄, Ī, t), I(φ̄, Ī, t), t)` built from the explicit
//!   near-identity transform;
//! * a trajectory estimator `Θ̂ = ρ − ⟨∫₀ᵀ H_cl dt⟩ / Ī₀` over an exact
//!   invariant-torus ensemble, valid for any elliptic schedule.
//!
//! `H_cl` is quadratic in `(q, p)` and every transform involved is linear, so
//! at fixed new angle `H_cl` is proportional to the new action and
//! `∂A/∂Ī = A/Ī`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::IntegratorOptions;
use crate::monodromy::{compute_monodromy, torus_ensemble};
use crate::params::{ParameterSchedule, StandardFamily};

/// Second-order canonical perturbation solution for the standard family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeModel {
    pub epsilon: f64,
    pub omega: f64,
}

impl From<StandardFamily> for PerturbativeModel {
    fn from(f: StandardFamily) -> Self {
        Self {
            epsilon: f.epsilon,
            omega: f.omega,
        }
    }
}

impl PerturbativeModel {
    pub fn from_schedule(sched: &ParameterSchedule) -> Result<Self> {
        sched
            .standard_family()
            .map(|f| Self::from(*f))
            .ok_or_else(|| {
                Error::InvalidArgument(
                    "the perturbative model only exists for the standard family".into(),
                )
            })
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    fn divisor(&self) -> f64 {
        self.omega + 2.0
    }

    /// Old variables `(φ, I)` from new ones `(φ̄, Ī)` at time `t`.
    pub fn transform(&self, phi_bar: f64, i_bar: f64, t: f64) -> (f64, f64) {
        let k = self.divisor();
        let e = self.epsilon;
        let psi = self.omega * t + 2.0 * phi_bar;
        let phi = phi_bar - e * psi.sin() / k + e * e * (2.0 * psi).sin() / (2.0 * k * k);
        let i = i_bar + 2.0 * e * i_bar * psi.cos() / k + 2.0 * e * e * i_bar / (k * k);
        (phi, i)
    }

    /// `H̄(Ī) = Ī (1 − ε²/(ω+2))`.
    pub fn new_hamiltonian(&self, i_bar: f64) -> f64 {
        i_bar * (1.0 - self.epsilon * self.epsilon / self.divisor())
    }

    /// First-order generating function `w₁ = I sin(ωt + 2φ)/(ω+2)`; `w₂ = 0`.
    pub fn generating_function(&self, phi: f64, i: f64, t: f64) -> f64 {
        i * (self.omega * t + 2.0 * phi).sin() / self.divisor()
    }

    /// New-angle frequency `∂H̄/∂Ī` integrated over one period.
    pub fn averaged_rotation(&self) -> f64 {
        (1.0 - self.epsilon * self.epsilon / self.divisor()) * self.period()
    }

    /// `A(φ̄, Ī, t)` with the transform composed into `H_cl` at the model's `ε`.
    pub fn difference_function(&self, phi_bar: f64, i_bar: f64, t: f64) -> f64 {
        self.difference_at(Complex64::new(self.epsilon, 0.0), phi_bar, i_bar, t)
            .re
    }

    /// `A` as an analytic function of the perturbation parameter `eta`, which
    /// replaces `ε` everywhere (schedule, transform and new Hamiltonian).
    fn difference_at(&self, eta: Complex64, phi_bar: f64, i_bar: f64, t: f64) -> Complex64 {
        let k = self.divisor();
        let psi = self.omega * t + 2.0 * phi_bar;
        let (sin_psi, cos_psi) = psi.sin_cos();
        let phi = phi_bar - eta * sin_psi / k + eta * eta * (2.0 * psi).sin() / (2.0 * k * k);
        let i = i_bar * (1.0 + 2.0 * eta * cos_psi / k + 2.0 * eta * eta / (k * k));
        let (sin_wt, cos_wt) = (self.omega * t).sin_cos();
        let a = 1.0 + eta * cos_wt;
        let b = 1.0 - eta * cos_wt;
        let c = eta * sin_wt;
        let (s, co) = (phi.sin(), phi.cos());
        // H_cl in action-angle form: q = √(2I) sin φ, p = √(2I) cos φ.
        let h_cl = i * (a * s * s + b * co * co + 2.0 * c * s * co);
        let h_bar = i_bar * (1.0 - eta * eta / k);
        h_bar - h_cl
    }

    /// Taylor coefficients `[A₀, A₁, A₂]` of `A` in `ε`, from a discrete
    /// Cauchy integral on a circle in the complex `ε` plane.
    pub fn difference_coefficients(&self, phi_bar: f64, i_bar: f64, t: f64) -> [f64; 3] {
        const POINTS: usize = 16;
        const RADIUS: f64 = 0.5;
        let mut coef = [Complex64::new(0.0, 0.0); 3];
        for j in 0..POINTS {
            let zeta = Complex64::from_polar(1.0, TAU * j as f64 / POINTS as f64);
            let val = self.difference_at(zeta * RADIUS, phi_bar, i_bar, t);
            for (order, c) in coef.iter_mut().enumerate() {
                *c += val * zeta.powi(-(order as i32));
            }
        }
        let mut out = [0.0; 3];
        for (order, c) in coef.iter().enumerate() {
            out[order] = c.re / (POINTS as f64 * RADIUS.powi(order as i32));
        }
        out
    }

    /// `A` truncated at the model's order, `A₁ε + A₂ε²`. The zeroth-order
    /// term vanishes identically because `H̄₀ = H₀ = Ī`.
    pub fn truncated_difference(&self, phi_bar: f64, i_bar: f64, t: f64) -> f64 {
        let [_, a1, a2] = self.difference_coefficients(phi_bar, i_bar, t);
        a1 * self.epsilon + a2 * self.epsilon * self.epsilon
    }
}

/// `Θ_H = 2πε²/(ω+2)²`.
pub fn hannay_closed_form(model: &PerturbativeModel) -> f64 {
    let k = model.omega + 2.0;
    TAU * model.epsilon * model.epsilon / (k * k)
}

/// Which `A` the quadrature integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureOrder {
    /// `A` expanded to `O(ε²)`, the order to which the transform is valid.
    Consistent,
    /// The transform composed into `H_cl` without re-expansion; differs from
    /// the consistent value at `O(ε⁴)`.
    Full,
}

fn simpson_weights(n: usize, length: f64) -> Vec<f64> {
    let h = length / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Torus-averaged `∫₀ᵀ ∂A/∂Ī dt` by composite Simpson on an `n_t × n_phi`
/// grid, at action `i_bar`.
pub fn hannay_quadrature_with(
    model: &PerturbativeModel,
    n_t: usize,
    n_phi: usize,
    i_bar: f64,
    order: QuadratureOrder,
) -> Result<f64> {
    if n_t < 64 || n_phi < 64 || !n_t.is_multiple_of(2) || !n_phi.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "quadrature grids must be even and at least 64, got {n_t} x {n_phi}"
        )));
    }
    if !(i_bar > 0.0 && i_bar.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "action must be positive, got {i_bar}"
        )));
    }
    let period = model.period();
    let wt = simpson_weights(n_t, period);
    let wp = simpson_weights(n_phi, TAU);
    let mut total = 0.0;
    for (i, w_phi) in wp.iter().enumerate() {
        let phi_bar = TAU * i as f64 / n_phi as f64;
        let mut row = 0.0;
        for (j, w_t) in wt.iter().enumerate() {
            let t = period * j as f64 / n_t as f64;
            let a = match order {
                QuadratureOrder::Consistent => model.truncated_difference(phi_bar, i_bar, t),
                QuadratureOrder::Full => model.difference_function(phi_bar, i_bar, t),
            };
            row += w_t * a / i_bar;
        }
        total += w_phi * row;
    }
    Ok(total / TAU)
}

/// [`hannay_quadrature_with`] at `Ī = 1` and consistent order.
pub fn hannay_quadrature(model: &PerturbativeModel, n_t: usize, n_phi: usize) -> Result<f64> {
    hannay_quadrature_with(model, n_t, n_phi, 1.0, QuadratureOrder::Consistent)
}

/// Largest deviation of `A/Ī` between two actions over an `n × n` grid.
pub fn linearity_deviation(model: &PerturbativeModel, i1: f64, i2: f64, n: usize) -> f64 {
    let period = model.period();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let phi_bar = TAU * i as f64 / n as f64;
        for j in 0..n {
            let t = period * j as f64 / n as f64;
            let d = model.truncated_difference(phi_bar, i1, t) / i1
                - model.truncated_difference(phi_bar, i2, t) / i2;
            worst = worst.max(d.abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEstimate {
    pub theta: f64,
    pub rho: f64,
    /// `⟨∫₀ᵀ H_cl dt⟩ / Ī₀`.
    pub energy_per_action: f64,
    /// `⟨∫₀ᵀ ½(p q̇ − q ṗ) dt⟩ / Ī₀`.
    pub area_per_action: f64,
}

/// `Θ̂ = ρ − ⟨∫₀ᵀ H_cl dt⟩ / Ī₀` over an `n`-point invariant-torus ensemble.
pub fn hannay_trajectory_estimate(
    sched: &ParameterSchedule,
    i_bar0: f64,
    n: usize,
    opts: &IntegratorOptions,
) -> Result<TrajectoryEstimate> {
    if n < 64 {
        return Err(Error::InvalidArgument(format!(
            "trajectory estimate needs at least 64 ensemble points, got {n}"
        )));
    }
    let mono = compute_monodromy(sched, opts)?;
    let ensemble = torus_ensemble(&mono.frame, i_bar0, n)?;
    let (area, energy) = ensemble.mean_cycle_integrals(sched, opts)?;
    Ok(TrajectoryEstimate {
        theta: mono.rho - energy / i_bar0,
        rho: mono.rho,
        energy_per_action: energy / i_bar0,
        area_per_action: area / i_bar0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HannayOptions {
    pub n_t: usize,
    pub n_phi: usize,
    pub ensemble: usize,
    pub i_bar: f64,
    pub integrator: IntegratorOptions,
}

impl Default for HannayOptions {
    fn default() -> Self {
        Self {
            n_t: 512,
            n_phi: 512,
            ensemble: 256,
            i_bar: 1.0,
            integrator: IntegratorOptions::rk45(1e-12),
        }
    }
}

/// Every available route to the Hannay angle, plus diagnostics. The
/// perturbative routes are `None` for non-standard schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HannayResult {
    pub theta_closed: Option<f64>,
    pub theta_quadrature: Option<f64>,
    pub theta_quadrature_full: Option<f64>,
    pub theta_trajectory: f64,
    pub rho: f64,
    pub n_t: usize,
    pub n_phi: usize,
    pub ensemble: usize,
    pub i_bar: f64,
}

pub fn hannay_report(sched: &ParameterSchedule, opts: &HannayOptions) -> Result<HannayResult> {
    let traj = hannay_trajectory_estimate(sched, opts.i_bar, opts.ensemble, &opts.integrator)?;
    let (closed, quad, full) = match PerturbativeModel::from_schedule(sched) {
        Ok(model) => (
            Some(hannay_closed_form(&model)),
            Some(hannay_quadrature_with(
                &model,
                opts.n_t,
                opts.n_phi,
                opts.i_bar,
                QuadratureOrder::Consistent,
            )?),
            Some(hannay_quadrature_with(
                &model,
                opts.n_t,
                opts.n_phi,
                opts.i_bar,
                QuadratureOrder::Full,
            )?),
        ),
        Err(_) => (None, None, None),
    };
    Ok(HannayResult {
        theta_closed: closed,
        theta_quadrature: quad,
        theta_quadrature_full: full,
        theta_trajectory: traj.theta,
        rho: traj.rho,
        n_t: opts.n_t,
        n_phi: opts.n_phi,
        ensemble: opts.ensemble,
        i_bar: opts.i_bar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn model(epsilon: f64, omega: f64) -> PerturbativeModel {
        PerturbativeModel { epsilon, omega }
    }

    #[test]
    fn transform_examples() {
        let m0 = model(0.0, 1.0);
        assert_eq!(m0.transform(0.3, 1.7, 2.0), (0.3, 1.7));
        let m = model(0.1, 1.0);
        let (phi, i) = m.transform(0.0, 1.0, 0.0);
        assert_abs_diff_eq!(phi, 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(i, 1.0 + 0.2 / 3.0 + 0.02 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(i, 1.06889, epsilon = 1e-5);
        let (phi, _) = m.transform(FRAC_PI_4, 1.0, 0.0);
        assert_abs_diff_eq!(phi, FRAC_PI_4 - 0.1 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi, 0.75206, epsilon = 1e-5);
    }

    #[test]
    fn new_hamiltonian_examples() {
        assert_eq!(model(0.0, 1.0).new_hamiltonian(1.0), 1.0);
        assert_abs_diff_eq!(model(0.1, 1.0).new_hamiltonian(1.0), 1.0 - 0.01 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(model(0.2, 2.0).new_hamiltonian(2.0), 1.98, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(hannay_closed_form(&model(0.0, 1.0)), 0.0);
        assert_abs_diff_eq!(hannay_closed_form(&model(0.1, 1.0)), 6.9813e-3, epsilon = 1e-7);
        assert_abs_diff_eq!(hannay_closed_form(&model(0.05, 0.5)), 2.5133e-3, epsilon = 1e-7);
    }

    #[test]
    fn taylor_coefficients_match_hand_expansion() {
        // A/Ī = εω cos ψ/(ω+2) + ε² ω/(ω+2)² + O(ε³) with ψ = ωt + 2φ̄.
        let m = model(0.1, 1.3);
        let k = 3.3;
        for (phi_bar, t) in [(0.0, 0.0), (0.4, 1.1), (2.5, 3.7)] {
            let [a0, a1, a2] = m.difference_coefficients(phi_bar, 2.0, t);
            let psi = 1.3 * t + 2.0 * phi_bar;
            assert!(a0.abs() < 1e-14);
            assert_abs_diff_eq!(a1, 2.0 * 1.3 * psi.cos() / k, epsilon = 1e-12);
            assert_abs_diff_eq!(a2, 2.0 * 1.3 / (k * k), epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_vanishes_without_drive() {
        let q = hannay_quadrature(&model(0.0, 1.0), 64, 64).unwrap();
        assert_eq!(q, 0.0);
    }

    #[test]
    fn quadrature_reproduces_closed_form() {
        let m = model(0.1, 1.0);
        let q = hannay_quadrature(&m, 128, 128).unwrap();
        assert!((q - hannay_closed_form(&m)).abs() < 1e-10);
        let full = hannay_quadrature_with(&m, 128, 128, 1.0, QuadratureOrder::Full).unwrap();
        // the un-truncated composition carries O(eps^4) terms
        assert!((full - q).abs() < 10.0 * 0.1f64.powi(3));
        assert!((full - q).abs() > 1e-6);
    }

    #[test]
    fn quadrature_is_independent_of_action() {
        let m = model(0.1, 1.0);
        let vals: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&i| hannay_quadrature_with(&m, 64, 64, i, QuadratureOrder::Consistent).unwrap())
            .collect();
        assert!((vals[0] - vals[1]).abs() < 1e-10 && (vals[1] - vals[2]).abs() < 1e-10);
        assert!(linearity_deviation(&m, 0.5, 2.0, 32) < 1e-10);
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let m = model(0.07, 0.6);
        let a = hannay_quadrature(&m, 128, 128).unwrap();
        let b = hannay_quadrature(&m, 256, 256).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn quadrature_grid_validation() {
        assert!(hannay_quadrature(&model(0.1, 1.0), 32, 64).is_err());
        assert!(hannay_quadrature(&model(0.1, 1.0), 65, 64).is_err());
    }

    #[test]
    fn trajectory_estimate_vanishes_without_drive() {
        let s = ParameterSchedule::standard(0.0, 1.0).unwrap();
        let est = hannay_trajectory_estimate(&s, 1.0, 64, &IntegratorOptions::rk45(1e-12)).unwrap();
        assert!(est.theta.abs() < 1e-9);
    }

    #[test]
    fn trajectory_estimate_reproduces_closed_form() {
        let s = ParameterSchedule::standard(0.05, 1.0).unwrap();
        let o = IntegratorOptions::rk45(1e-12);
        let closed = hannay_closed_form(&model(0.05, 1.0));
        let est: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&i| hannay_trajectory_estimate(&s, i, 256, &o).unwrap().theta)
            .collect();
        let eps3 = 0.05f64.powi(3);
        assert!((est[1] - closed).abs() < 5.0 * eps3);
        assert!((est[0] - est[2]).abs() < 2.0 * eps3);
    }

    #[test]
    fn old_angle_advance_averages_to_rotation_number() {
        // ½(p q̇ − q ṗ) = H_cl for a quadratic Hamiltonian, and the mean
        // advance of the old angle over one period equals ρ.
        let s = ParameterSchedule::standard(0.2, 0.8).unwrap();
        let o = IntegratorOptions::rk45(1e-12);
        let est = hannay_trajectory_estimate(&s, 1.0, 64, &o).unwrap();
        assert!((est.area_per_action - est.energy_per_action).abs() < 1e-9);
    }

    #[test]
    fn rotation_residual_is_beyond_second_order() {
        let o = IntegratorOptions::rk45(1e-12);
        let resid = |eps: f64| {
            let s = ParameterSchedule::standard(eps, 1.0).unwrap();
            let m = compute_monodromy(&s, &o).unwrap();
            (m.rho - model(eps, 1.0).averaged_rotation()).abs()
        };
        let (a, c) = (resid(0.02), resid(0.08));
        let slope = (c / a).ln() / 4f64.ln();
        assert!(slope >= 3.0, "slope {slope}");
    }

    #[test]
    fn report_for_fourier_schedule_has_no_perturbative_values() {
        use crate::params::FourierSeries;
        let s = ParameterSchedule::fourier(
            3.0,
            FourierSeries { cos: vec![1.0, 0.1], sin: vec![0.05] },
            FourierSeries { cos: vec![1.2], sin: vec![] },
            FourierSeries { cos: vec![0.0, 0.0, 0.1], sin: vec![] },
        )
        .unwrap();
        let opts = HannayOptions { ensemble: 64, ..HannayOptions::default() };
        let r = hannay_report(&s, &opts).unwrap();
        assert!(r.theta_closed.is_none() && r.theta_quadrature.is_none());
        assert!(r.theta_trajectory.is_finite());
    }
}
