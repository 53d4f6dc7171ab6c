//! The `T`-periodic fluctuation orbit and its cycle phases.
//!
//! With the centroid at rest (`q = p = 0`) the squeezed state is cyclic
//! exactly when `(G, Π)` returns after one period. The orbit is found by a
//! damped Newton iteration on `F(x) = Φ_T(x) − x`, where `Φ_T` is the
//! stroboscopic map of the fluctuation flow.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};

use crate::dynamics::{fluctuation_rates, h_fl_unchecked, G_FLOOR};
use crate::error::{Error, Result};
use crate::integrator::{solve, IntegratorOptions, OdeSystem};
use crate::monodromy::{compute_monodromy, periodic_gaussian_oracle, shoelace_area};
use crate::params::{ParameterSchedule, StandardFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    /// Integrate the linearised fluctuation flow alongside the orbit.
    Variational,
    /// Central differences of the stroboscopic map.
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub integrator: IntegratorOptions,
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Dense samples per period stored on the orbit.
    pub samples: usize,
    pub jacobian: JacobianMethod,
    pub fd_step: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::rk45(1e-12),
            newton_tol: 1e-10,
            max_iterations: 25,
            max_halvings: 5,
            samples: 1024,
            jacobian: JacobianMethod::Variational,
            fd_step: 1e-6,
        }
    }
}

impl OrbitOptions {
    pub fn with_integrator(mut self, integrator: IntegratorOptions) -> Self {
        self.integrator = integrator;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub g: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub period: f64,
    pub g0: f64,
    pub pi0: f64,
    /// `|Φ_T(x₀) − x₀|` at the accepted fixed point.
    pub residual: f64,
    pub iterations: usize,
    /// `samples` points at `t = iT/samples`, `i = 0..samples`.
    pub samples: Vec<OrbitSample>,
    /// `−∮ Π̇ G dt`.
    pub lambda_g: f64,
    /// `∮ Π Ġ dt`; equal to `lambda_g` on a closed orbit.
    pub lambda_g_alt: f64,
    /// `−∮ H_fl dt`.
    pub lambda_d: f64,
}

/// Geometric and dynamical phase accumulated over one cycle of the orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePhases {
    pub lambda_g: f64,
    pub lambda_g_alt: f64,
    pub lambda_d: f64,
}

struct FluctuationFlow<'a> {
    sched: &'a ParameterSchedule,
}

impl OdeSystem<2> for FluctuationFlow<'_> {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let (g, pi) = fluctuation_rates(y[0], y[1], &self.sched.eval(t));
        [g, pi]
    }
    fn admissible(&self, y: &[f64; 2]) -> bool {
        y[0] > G_FLOOR
    }
}

struct VariationalFlow<'a> {
    sched: &'a ParameterSchedule,
}

impl OdeSystem<6> for VariationalFlow<'_> {
    // [G, Π, ∂G/∂G₀, ∂Π/∂G₀, ∂G/∂Π₀, ∂Π/∂Π₀]
    fn rhs(&self, t: f64, y: &[f64; 6]) -> [f64; 6] {
        let k = self.sched.eval(t);
        let (g, pi) = (y[0], y[1]);
        let (g_dot, pi_dot) = fluctuation_rates(g, pi, &k);
        let j00 = 4.0 * k.b * pi + 2.0 * k.c;
        let j01 = 4.0 * k.b * g;
        let j10 = -k.b / (4.0 * g * g * g);
        let j11 = -j00;
        [
            g_dot,
            pi_dot,
            j00 * y[2] + j01 * y[3],
            j10 * y[2] + j11 * y[3],
            j00 * y[4] + j01 * y[5],
            j10 * y[4] + j11 * y[5],
        ]
    }
    fn admissible(&self, y: &[f64; 6]) -> bool {
        y[0] > G_FLOOR
    }
}

struct PhaseFlow<'a> {
    sched: &'a ParameterSchedule,
}

impl OdeSystem<5> for PhaseFlow<'_> {
    // [G, Π, −∫Π̇G, ∫ΠĠ, −∫H_fl]
    fn rhs(&self, t: f64, y: &[f64; 5]) -> [f64; 5] {
        let k = self.sched.eval(t);
        let (g, pi) = (y[0], y[1]);
        let (g_dot, pi_dot) = fluctuation_rates(g, pi, &k);
        [g_dot, pi_dot, -pi_dot * g, pi * g_dot, -h_fl_unchecked(g, pi, &k)]
    }
    fn admissible(&self, y: &[f64; 5]) -> bool {
        y[0] > G_FLOOR
    }
}

fn check_point(x: (f64, f64)) -> Result<()> {
    if x.0 > 0.0 && x.0.is_finite() && x.1.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "fluctuation point must have finite values and G > 0, got ({}, {})",
            x.0, x.1
        )))
    }
}

/// Image of `(G, Π)` under the one-period fluctuation flow.
pub fn strob_map(
    x: (f64, f64),
    sched: &ParameterSchedule,
    opts: &IntegratorOptions,
) -> Result<(f64, f64)> {
    check_point(x)?;
    let sol = solve(
        &FluctuationFlow { sched },
        0.0,
        [x.0, x.1],
        sched.period(),
        opts,
        &[],
    )?;
    let y = sol.last().1;
    Ok((y[0], y[1]))
}

/// Image and Jacobian `DΦ_T` of the stroboscopic map.
pub fn strob_map_with_jacobian(
    x: (f64, f64),
    sched: &ParameterSchedule,
    opts: &IntegratorOptions,
) -> Result<((f64, f64), Matrix2<f64>)> {
    check_point(x)?;
    let sol = solve(
        &VariationalFlow { sched },
        0.0,
        [x.0, x.1, 1.0, 0.0, 0.0, 1.0],
        sched.period(),
        opts,
        &[],
    )?;
    let y = sol.last().1;
    Ok(((y[0], y[1]), Matrix2::new(y[2], y[4], y[3], y[5])))
}

fn fd_jacobian(
    x: (f64, f64),
    sched: &ParameterSchedule,
    opts: &IntegratorOptions,
    h: f64,
) -> Result<Matrix2<f64>> {
    let gp = strob_map((x.0 + h, x.1), sched, opts)?;
    let gm = strob_map((x.0 - h, x.1), sched, opts)?;
    let pp = strob_map((x.0, x.1 + h), sched, opts)?;
    let pm = strob_map((x.0, x.1 - h), sched, opts)?;
    Ok(Matrix2::new(
        (gp.0 - gm.0) / (2.0 * h),
        (pp.0 - pm.0) / (2.0 * h),
        (gp.1 - gm.1) / (2.0 * h),
        (pp.1 - pm.1) / (2.0 * h),
    ))
}

/// First-order periodic orbit of the standard family,
/// `G = ½ − ε cos ωt/(ω+2)`, `Π = −ε sin ωt/(ω+2)`.
pub fn first_order_orbit(family: &StandardFamily, t: f64) -> (f64, f64) {
    let k = family.omega + 2.0;
    let (s, c) = (family.omega * t).sin_cos();
    (0.5 - family.epsilon * c / k, -family.epsilon * s / k)
}

/// Starting point for the Newton iteration: the first-order orbit at `t = 0`
/// for the standard family, the monodromy oracle otherwise.
pub fn default_guess(sched: &ParameterSchedule, opts: &IntegratorOptions) -> Result<(f64, f64)> {
    match sched.standard_family() {
        Some(f) => Ok(first_order_orbit(f, 0.0)),
        None => {
            let m = compute_monodromy(sched, opts)?;
            Ok(periodic_gaussian_oracle(&m.frame))
        }
    }
}

fn residual(x: (f64, f64), image: (f64, f64)) -> f64 {
    (image.0 - x.0).hypot(image.1 - x.1)
}

/// Finds the `T`-periodic fluctuation orbit by damped Newton iteration and
/// evaluates its cycle phases.
pub fn find_periodic_orbit(
    sched: &ParameterSchedule,
    guess: Option<(f64, f64)>,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("orbit needs at least 2 samples".into()));
    }
    let integ = &opts.integrator;
    let mut x = match guess {
        Some(g) => g,
        None => default_guess(sched, integ)?,
    };
    check_point(x)?;
    let mut image = strob_map(x, sched, integ)?;
    let mut r = residual(x, image);
    let mut iterations = 0;

    while r >= opts.newton_tol {
        if iterations == opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: r,
            });
        }
        iterations += 1;
        let jac = match opts.jacobian {
            JacobianMethod::Variational => strob_map_with_jacobian(x, sched, integ)?.1,
            JacobianMethod::CentralDifference => fd_jacobian(x, sched, integ, opts.fd_step)?,
        };
        let a = jac - Matrix2::identity();
        let det = a.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::SingularJacobian { det: det.abs() });
        }
        let f = Vector2::new(image.0 - x.0, image.1 - x.1);
        let dx = -(a.try_inverse().ok_or(Error::SingularJacobian { det: det.abs() })? * f);

        let mut scale = 1.0;
        let mut accepted = None;
        let mut last_valid = None;
        for _ in 0..=opts.max_halvings {
            let trial = (x.0 + scale * dx[0], x.1 + scale * dx[1]);
            if trial.0 > G_FLOOR {
                if let Ok(img) = strob_map(trial, sched, integ) {
                    let rt = residual(trial, img);
                    if rt < r {
                        accepted = Some((trial, img, rt));
                        break;
                    }
                    last_valid = Some((trial, img, rt));
                }
            }
            scale *= 0.5;
        }
        match accepted.or(last_valid) {
            Some((trial, img, rt)) => {
                x = trial;
                image = img;
                r = rt;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: r,
                })
            }
        }
    }

    let phases = orbit_pass(sched, x, opts)?;
    Ok(PeriodicOrbit {
        period: sched.period(),
        g0: x.0,
        pi0: x.1,
        residual: r,
        iterations,
        samples: phases.0,
        lambda_g: phases.1.lambda_g,
        lambda_g_alt: phases.1.lambda_g_alt,
        lambda_d: phases.1.lambda_d,
    })
}

fn orbit_pass(
    sched: &ParameterSchedule,
    x: (f64, f64),
    opts: &OrbitOptions,
) -> Result<(Vec<OrbitSample>, CyclePhases)> {
    let period = sched.period();
    let times: Vec<f64> = (0..opts.samples)
        .map(|i| period * i as f64 / opts.samples as f64)
        .collect();
    let sol = solve(
        &PhaseFlow { sched },
        0.0,
        [x.0, x.1, 0.0, 0.0, 0.0],
        period,
        &opts.integrator,
        &times,
    )?;
    let samples = sol
        .dense
        .iter()
        .map(|(t, y)| OrbitSample {
            t: *t,
            g: y[0],
            pi: y[1],
        })
        .collect();
    let y = sol.last().1;
    Ok((
        samples,
        CyclePhases {
            lambda_g: y[2],
            lambda_g_alt: y[3],
            lambda_d: y[4],
        },
    ))
}

/// Cycle phases of a converged orbit: `λ_G = −∮Π̇G dt` (with the alternative
/// form `∮ΠĠ dt`) and `λ_D = −∮H_fl dt`.
///
/// The centroid stays at the origin, so neither depends on ħ.
pub fn orbit_phases(orbit: &PeriodicOrbit) -> CyclePhases {
    CyclePhases {
        lambda_g: orbit.lambda_g,
        lambda_g_alt: orbit.lambda_g_alt,
        lambda_d: orbit.lambda_d,
    }
}

/// Signed area enclosed by the sampled orbit in the `(Π, G)` plane.
pub fn fluctuation_area(orbit: &PeriodicOrbit) -> f64 {
    let pts: Vec<(f64, f64)> = orbit.samples.iter().map(|s| (s.pi, s.g)).collect();
    shoelace_area(&pts)
}

/// `−πε²/(ω+2)²`: leading-order geometric phase of the cyclic squeezed state.
pub fn cyclic_geometric_phase_leading(family: &StandardFamily) -> f64 {
    let k = family.omega + 2.0;
    -0.5 * TAU * family.epsilon * family.epsilon / (k * k)
}

/// `−½(1 + (−2/(ω+2) + 2/(ω+2)²)ε²) T`: leading-order dynamical phase.
pub fn cyclic_dynamical_phase_leading(family: &StandardFamily) -> f64 {
    let k = family.omega + 2.0;
    let e2 = family.epsilon * family.epsilon;
    -0.5 * (1.0 + (-2.0 / k + 2.0 / (k * k)) * e2) * family.period()
}
