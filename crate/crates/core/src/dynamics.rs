//! Squeezed-state dynamics on the extended phase space `(q, p, G, Π)`.
//!
//! The effective Hamiltonian is `H_eff = H_cl(q, p, t) + ħ H_fl(G, Π, t)`.
//! The centroid `(q, p)` follows the classical linear flow, the fluctuation
//! pair `(G, Π)` follows an ħ-independent nonlinear flow, and the geometric
//! and dynamical phases are carried as two extra state components so they are
//! accumulated in the same integrator pass as the state.

use crate::error::{Error, Result};
use crate::integrator::{solve, IntegratorOptions, OdeSystem};
use crate::params::{Coefficients, Constants, ParameterSchedule};

/// Steps producing `G` at or below this value are rejected.
pub const G_FLOOR: f64 = 1e-6;

/// A point of the extended phase space with its accumulated phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedState {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    /// Fluctuation width, `Δq² = ħG`; always positive.
    pub g: f64,
    /// Momentum conjugate to `G`.
    pub pi: f64,
    pub lambda_g: f64,
    pub lambda_d: f64,
}

impl ExtendedState {
    /// A state at `t = 0` with zero accumulated phase.
    pub fn new(q: f64, p: f64, g: f64, pi: f64) -> Self {
        Self {
            t: 0.0,
            q,
            p,
            g,
            pi,
            lambda_g: 0.0,
            lambda_d: 0.0,
        }
    }

    fn to_array(self) -> [f64; 6] {
        [self.q, self.p, self.g, self.pi, self.lambda_g, self.lambda_d]
    }

    fn from_array(t: f64, y: &[f64; 6]) -> Self {
        Self {
            t,
            q: y[0],
            p: y[1],
            g: y[2],
            pi: y[3],
            lambda_g: y[4],
            lambda_d: y[5],
        }
    }
}

/// Time derivatives of every [`ExtendedState`] component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub q: f64,
    pub p: f64,
    pub g: f64,
    pub pi: f64,
    pub lambda_g: f64,
    pub lambda_d: f64,
}

fn check_width(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("fluctuation width G must be positive, got {g}")))
    }
}

/// Classical energy `½(a q² + b p² + 2c q p)`.
pub fn h_cl(q: f64, p: f64, a: f64, b: f64, c: f64) -> f64 {
    0.5 * (a * q * q + b * p * p + 2.0 * c * q * p)
}

/// Fluctuation energy `½(a G + b(1/(4G) + 4Π²G) + 4c G Π)`.
pub fn h_fl(g: f64, pi: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    check_width(g)?;
    Ok(h_fl_unchecked(g, pi, &Coefficients { a, b, c }))
}

pub(crate) fn h_fl_unchecked(g: f64, pi: f64, k: &Coefficients) -> f64 {
    0.5 * (k.a * g + k.b * (0.25 / g + 4.0 * pi * pi * g) + 4.0 * k.c * g * pi)
}

/// `(Ġ, Π̇)`; independent of ħ.
pub(crate) fn fluctuation_rates(g: f64, pi: f64, k: &Coefficients) -> (f64, f64) {
    let g_dot = 4.0 * k.b * g * pi + 2.0 * k.c * g;
    let pi_dot = -0.5 * (k.a - k.b / (4.0 * g * g) + 4.0 * k.b * pi * pi + 4.0 * k.c * pi);
    (g_dot, pi_dot)
}

/// `(q̇, ṗ)` of the classical linear flow.
pub(crate) fn centroid_rates(q: f64, p: f64, k: &Coefficients) -> (f64, f64) {
    (k.b * p + k.c * q, -(k.a * q + k.c * p))
}

/// Right-hand side of the extended equations of motion.
pub fn eom_rhs(
    state: &ExtendedState,
    sched: &ParameterSchedule,
    consts: &Constants,
) -> Result<Rates> {
    check_width(state.g)?;
    Ok(rates(state, &sched.eval(state.t), consts.hbar))
}

fn rates(s: &ExtendedState, k: &Coefficients, hbar: f64) -> Rates {
    let (q_dot, p_dot) = centroid_rates(s.q, s.p, k);
    let (g_dot, pi_dot) = fluctuation_rates(s.g, s.pi, k);
    let h_eff = h_cl(s.q, s.p, k.a, k.b, k.c) + hbar * h_fl_unchecked(s.g, s.pi, k);
    Rates {
        q: q_dot,
        p: p_dot,
        g: g_dot,
        pi: pi_dot,
        lambda_g: (s.p * q_dot - s.q * p_dot) / (2.0 * hbar) - pi_dot * s.g,
        lambda_d: -h_eff / hbar,
    }
}

struct ExtendedFlow<'a> {
    sched: &'a ParameterSchedule,
    hbar: f64,
}

impl OdeSystem<6> for ExtendedFlow<'_> {
    fn rhs(&self, t: f64, y: &[f64; 6]) -> [f64; 6] {
        let s = ExtendedState::from_array(t, y);
        let r = rates(&s, &self.sched.eval(t), self.hbar);
        [r.q, r.p, r.g, r.pi, r.lambda_g, r.lambda_d]
    }

    fn admissible(&self, y: &[f64; 6]) -> bool {
        y[2] > G_FLOOR
    }
}

/// Samples of an extended-state integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at every accepted integrator step, starting with the initial state.
    pub steps: Vec<ExtendedState>,
    /// States at the requested output times.
    pub dense: Vec<ExtendedState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &ExtendedState {
        self.steps.last().expect("trajectory holds the initial state")
    }
}

/// Integrates the extended state (with both phases) from `state0.t` to `t1`.
pub fn integrate(
    state0: &ExtendedState,
    t1: f64,
    sched: &ParameterSchedule,
    consts: &Constants,
    opts: &IntegratorOptions,
    output_times: &[f64],
) -> Result<Trajectory> {
    check_width(state0.g)?;
    if !(t1 > state0.t) {
        return Err(Error::InvalidArgument(format!(
            "end time {t1} must exceed the initial time {}",
            state0.t
        )));
    }
    let flow = ExtendedFlow {
        sched,
        hbar: consts.hbar,
    };
    let sol = solve(&flow, state0.t, state0.to_array(), t1, opts, output_times)?;
    Ok(Trajectory {
        steps: sol
            .steps
            .iter()
            .map(|(t, y)| ExtendedState::from_array(*t, y))
            .collect(),
        dense: sol
            .dense
            .iter()
            .map(|(t, y)| ExtendedState::from_array(*t, y))
            .collect(),
    })
}

/// Actions `(I, J)` of the unperturbed oscillator: `I = (q² + p²)/2` and
/// `J = (G + 1/(4G) + 4Π²G − 1)/4`.
pub fn actions(state: &ExtendedState) -> Result<(f64, f64)> {
    check_width(state.g)?;
    let i = 0.5 * (state.q * state.q + state.p * state.p);
    let g = state.g;
    let j = (g + 0.25 / g + 4.0 * state.pi * state.pi * g - 1.0) / 4.0;
    Ok((i, j))
}

/// Second moments `(Δq², Δp², cov)` of the squeezed state.
pub fn covariance(g: f64, pi: f64, hbar: f64) -> Result<(f64, f64, f64)> {
    check_width(g)?;
    Ok((hbar * g, hbar * (0.25 / g + 4.0 * pi * pi * g), 2.0 * hbar * g * pi))
}

/// `H_eff = H_cl + ħ H_fl` at the state's time.
pub fn effective_energy(
    state: &ExtendedState,
    sched: &ParameterSchedule,
    consts: &Constants,
) -> Result<f64> {
    let k = sched.eval(state.t);
    Ok(h_cl(state.q, state.p, k.a, k.b, k.c) + consts.hbar * h_fl(state.g, state.pi, k.a, k.b, k.c)?)
}
