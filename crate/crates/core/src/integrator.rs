//! Explicit Runge–Kutta integration of small fixed-size ODE systems.
//!
//! Two methods are available: classical fixed-step RK4 and the adaptive
//! Dormand–Prince 5(4) pair with its 4th-order continuous extension. Both
//! produce the accepted step states and, on request, dense output at
//! caller-specified times.

use crate::error::{Error, Result};

/// Right-hand side of `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// States for which this returns `false` are rejected by the adaptive
    /// controller (the step is halved and retried).
    fn admissible(&self, _y: &[f64; N]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical RK4 with the given nominal step. The interval is split into
    /// `ceil(len / step)` equal steps.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4); `tol` is used as both absolute and relative tolerance.
    Rk45 { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    pub max_steps: usize,
    /// Upper bound on the adaptive step size.
    pub max_step: f64,
    /// Adaptive steps below this size abort the integration.
    pub min_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::rk45(1e-10)
    }
}

impl IntegratorOptions {
    pub fn rk45(tol: f64) -> Self {
        Self {
            method: Method::Rk45 { tol },
            max_steps: 2_000_000,
            max_step: f64::INFINITY,
            min_step: 1e-13,
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            ..Self::rk45(1e-10)
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { step } if !(step.is_finite() && step > 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "rk4 step must be positive, got {step}"
                )))
            }
            Method::Rk45 { tol } if !(tol.is_finite() && tol > 0.0) => {
                return Err(Error::InvalidArgument(format!(
                    "rk45 tolerance must be positive, got {tol}"
                )))
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one integration: accepted steps (including the initial state)
/// and dense samples at the requested output times.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub steps: Vec<(f64, [f64; N])>,
    pub dense: Vec<(f64, [f64; N])>,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> &(f64, [f64; N]) {
        self.steps.last().expect("solution always holds the initial state")
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let s = h * coef;
        for i in 0..N {
            out[i] += s * k[i];
        }
    }
    out
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates `sys` from `(t0, y0)` to `t1 > t0`.
///
/// `dense_times` must be non-decreasing and lie in `[t0, t1]`.
pub fn solve<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &IntegratorOptions,
    dense_times: &[f64],
) -> Result<Solution<N>> {
    opts.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "end time {t1} must exceed start time {t0}"
        )));
    }
    if dense_times.windows(2).any(|w| w[1] < w[0])
        || dense_times.iter().any(|&t| t < t0 || t > t1)
    {
        return Err(Error::InvalidArgument(
            "dense output times must be sorted and inside the integration interval".into(),
        ));
    }
    if !sys.admissible(&y0) || !all_finite(&y0) {
        return Err(Error::StepFailure {
            t: t0,
            reason: "initial state is not admissible".into(),
        });
    }
    match opts.method {
        Method::Rk4 { step } => solve_rk4(sys, t0, y0, t1, step, opts, dense_times),
        Method::Rk45 { tol } => solve_dopri(sys, t0, y0, t1, tol, opts, dense_times),
    }
}

fn solve_rk4<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    step: f64,
    opts: &IntegratorOptions,
    dense_times: &[f64],
) -> Result<Solution<N>> {
    let n = ((t1 - t0) / step - 1e-9).ceil().max(1.0) as usize;
    if n > opts.max_steps {
        return Err(Error::StepFailure {
            t: t0,
            reason: format!("rk4 would need {n} steps, more than max_steps"),
        });
    }
    let h = (t1 - t0) / n as f64;
    let mut steps = Vec::with_capacity(n + 1);
    let mut dense = Vec::with_capacity(dense_times.len());
    let mut next_dense = 0;
    let mut y = y0;
    let mut t = t0;
    let mut f = sys.rhs(t, &y);
    steps.push((t, y));
    while next_dense < dense_times.len() && dense_times[next_dense] <= t0 {
        dense.push((dense_times[next_dense], y0));
        next_dense += 1;
    }
    for i in 0..n {
        let k1 = f;
        let k2 = sys.rhs(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]));
        let k3 = sys.rhs(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]));
        let k4 = sys.rhs(t + h, &axpy(&y, h, &[(1.0, &k3)]));
        let y_new = axpy(
            &y,
            h,
            &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
        );
        let t_new = if i + 1 == n { t1 } else { t0 + (i + 1) as f64 * h };
        if !all_finite(&y_new) || !sys.admissible(&y_new) {
            return Err(Error::StepFailure {
                t,
                reason: "rk4 step produced an inadmissible state".into(),
            });
        }
        let f_new = sys.rhs(t_new, &y_new);
        // Cubic Hermite interpolation for dense output.
        while next_dense < dense_times.len() && dense_times[next_dense] <= t_new {
            let tau = dense_times[next_dense];
            let s = (tau - t) / h;
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            let mut out = [0.0; N];
            for j in 0..N {
                out[j] = h00 * y[j] + h10 * h * f[j] + h01 * y_new[j] + h11 * h * f_new[j];
            }
            dense.push((tau, out));
            next_dense += 1;
        }
        y = y_new;
        t = t_new;
        f = f_new;
        steps.push((t, y));
    }
    Ok(Solution { steps, dense })
}

fn error_norm<const N: usize>(y: &[f64; N], y_new: &[f64; N], err: &[f64; N], tol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = tol + tol * y[i].abs().max(y_new[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn solve_dopri<const N: usize, S: OdeSystem<N> + ?Sized>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: f64,
    opts: &IntegratorOptions,
    dense_times: &[f64],
) -> Result<Solution<N>> {
    let span = t1 - t0;
    let mut h = (0.1 * tol.powf(0.2)).min(span).min(opts.max_step);
    let mut steps = vec![(t0, y0)];
    let mut dense = Vec::with_capacity(dense_times.len());
    let mut next_dense = 0;
    while next_dense < dense_times.len() && dense_times[next_dense] <= t0 {
        dense.push((dense_times[next_dense], y0));
        next_dense += 1;
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut n_steps = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        if n_steps >= opts.max_steps {
            return Err(Error::StepFailure {
                t,
                reason: format!("exceeded max_steps = {}", opts.max_steps),
            });
        }
        n_steps += 1;
        let remaining = t1 - t;
        let is_last = h >= remaining * (1.0 - 1e-12);
        if is_last {
            h = remaining;
        }

        let k2 = sys.rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = sys.rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = sys.rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = sys.rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = sys.rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let t_new = if is_last { t1 } else { t + h };
        let admissible = all_finite(&y_new) && sys.admissible(&y_new);
        let k7 = if admissible {
            sys.rhs(t_new, &y_new)
        } else {
            [f64::NAN; N]
        };
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&y, &y_new, &err, tol);

        if !admissible || !en.is_finite() {
            h *= 0.5;
            last_rejected = true;
            if h < opts.min_step {
                return Err(Error::StepFailure {
                    t,
                    reason: "state left the admissible region and the step fell below min_step"
                        .into(),
                });
            }
            continue;
        }

        if en <= 1.0 {
            // Dense output over (t, t_new].
            if next_dense < dense_times.len() && dense_times[next_dense] <= t_new {
                let mut r5 = [0.0; N];
                let mut r2 = [0.0; N];
                let mut r3 = [0.0; N];
                let mut r4 = [0.0; N];
                for i in 0..N {
                    r2[i] = y_new[i] - y[i];
                    r3[i] = h * k1[i] - r2[i];
                    r4[i] = r2[i] - h * k7[i] - r3[i];
                    r5[i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                while next_dense < dense_times.len() && dense_times[next_dense] <= t_new {
                    let tau = dense_times[next_dense];
                    let s = (tau - t) / h;
                    let s1 = 1.0 - s;
                    let mut out = [0.0; N];
                    for i in 0..N {
                        out[i] = y[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
                    }
                    dense.push((tau, out));
                    next_dense += 1;
                }
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            steps.push((t, y));
            let mut fac = if en == 0.0 { 5.0 } else { 0.9 * en.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            last_rejected = true;
            if h < opts.min_step {
                return Err(Error::StepFailure {
                    t,
                    reason: format!("step size fell below min_step = {:e}", opts.min_step),
                });
            }
        }
    }
    Ok(Solution { steps, dense })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    struct Decay;
    impl OdeSystem<1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [-y[0]]
        }
        fn admissible(&self, y: &[f64; 1]) -> bool {
            y[0] > 0.0
        }
    }

    #[test]
    fn dopri_harmonic_period() {
        let sol = solve(
            &Oscillator,
            0.0,
            [0.0, 1.0],
            std::f64::consts::TAU,
            &IntegratorOptions::rk45(1e-11),
            &[],
        )
        .unwrap();
        let (t, y) = sol.last();
        assert_eq!(*t, std::f64::consts::TAU);
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        for opts in [IntegratorOptions::rk45(1e-11), IntegratorOptions::rk4(1e-3)] {
            let sol = solve(&Oscillator, 0.0, [0.0, 1.0], 10.0, &opts, &times).unwrap();
            assert_eq!(sol.dense.len(), times.len());
            for (t, y) in &sol.dense {
                assert!((y[0] - t.sin()).abs() < 1e-9, "t={t} q={} ", y[0]);
                assert!((y[1] - t.cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn steps_are_strictly_increasing() {
        let sol = solve(&Decay, 0.0, [1.0], 5.0, &IntegratorOptions::default(), &[]).unwrap();
        assert!(sol.steps.windows(2).all(|w| w[1].0 > w[0].0));
        assert_eq!(sol.steps[0], (0.0, [1.0]));
        assert!((sol.last().1[0] - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_requests() {
        let o = IntegratorOptions::default();
        assert!(solve(&Decay, 1.0, [1.0], 0.5, &o, &[]).is_err());
        assert!(solve(&Decay, 0.0, [1.0], 1.0, &o, &[0.5, 0.2]).is_err());
        assert!(solve(&Decay, 0.0, [-1.0], 1.0, &o, &[]).is_err());
        assert!(IntegratorOptions::rk45(0.0).validate().is_err());
        assert!(IntegratorOptions::rk4(-1.0).validate().is_err());
    }

    #[test]
    fn max_steps_is_enforced() {
        let mut o = IntegratorOptions::rk45(1e-12);
        o.max_steps = 3;
        let err = solve(&Oscillator, 0.0, [0.0, 1.0], 100.0, &o, &[]).unwrap_err();
        assert!(matches!(err, Error::StepFailure { .. }));
    }
}
