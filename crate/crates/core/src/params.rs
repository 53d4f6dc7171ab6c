//! Periodic coefficient schedules `a(t)`, `b(t)`, `c(t)` of the generalized
//! harmonic oscillator `H = ½(a q² + b p² + c (qp + pq))`, and global constants.
//!
//! Two schedule kinds are supported: the standard one-parameter family
//! `a = 1 + ε cos ωt`, `b = 1 − ε cos ωt`, `c = ε sin ωt`, and a user supplied
//! truncated Fourier series for each coefficient. Only the elliptic regime
//! `a b > c²` is accepted.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Number of samples used when validating a schedule's ellipticity.
pub const DEFAULT_MARGIN_SAMPLES: usize = 4096;

/// Coefficient triple at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    /// `a b − c²`; positive in the elliptic regime.
    pub fn discriminant(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }
}

/// The standard family with amplitude `epsilon` and drive frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardFamily {
    pub epsilon: f64,
    pub omega: f64,
}

impl StandardFamily {
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }
}

/// `Σ_k cos[k]·cos(kΩt) + Σ_k sin[k-1]·sin(kΩt)` with `Ω = 2π/T`.
///
/// `cos[0]` is the constant term; `sin[0]` multiplies the first harmonic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierSeries {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(value: f64) -> Self {
        Self {
            cos: vec![value],
            sin: Vec::new(),
        }
    }

    /// Evaluates the series at phase `theta = Ωt` (already reduced).
    fn eval(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for (k, coef) in self.cos.iter().enumerate() {
            acc += if k == 0 {
                *coef
            } else {
                coef * (k as f64 * theta).cos()
            };
        }
        for (k, coef) in self.sin.iter().enumerate() {
            acc += coef * ((k + 1) as f64 * theta).sin();
        }
        acc
    }

    fn is_finite(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSchedule {
    pub period: f64,
    pub a: FourierSeries,
    pub b: FourierSeries,
    pub c: FourierSeries,
}

/// A `T`-periodic coefficient schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSchedule {
    Standard(StandardFamily),
    Fourier(FourierSchedule),
}

impl ParameterSchedule {
    /// The standard family; requires `0 ≤ ε < 1` and `ω > 0`.
    pub fn standard(epsilon: f64, omega: f64) -> Result<Self> {
        if !epsilon.is_finite() || !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidSchedule(format!(
                "epsilon must satisfy 0 <= epsilon < 1, got {epsilon}"
            )));
        }
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "omega must be positive, got {omega}"
            )));
        }
        Ok(Self::Standard(StandardFamily { epsilon, omega }))
    }

    /// A Fourier schedule, validated by sampled ellipticity.
    pub fn fourier(
        period: f64,
        a: FourierSeries,
        b: FourierSeries,
        c: FourierSeries,
    ) -> Result<Self> {
        let sched = Self::fourier_unchecked(period, a, b, c)?;
        let margin = sched.ellipticity_margin(DEFAULT_MARGIN_SAMPLES);
        if margin <= 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "schedule is not elliptic: min(ab - c^2) = {margin}"
            )));
        }
        Ok(sched)
    }

    /// A Fourier schedule without the ellipticity check (the period and
    /// coefficients must still be finite). Useful for inspecting the margin of
    /// candidate schedules.
    pub fn fourier_unchecked(
        period: f64,
        a: FourierSeries,
        b: FourierSeries,
        c: FourierSeries,
    ) -> Result<Self> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "period must be positive, got {period}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidSchedule(
                "fourier coefficients must be finite".into(),
            ));
        }
        Ok(Self::Fourier(FourierSchedule { period, a, b, c }))
    }

    pub fn period(&self) -> f64 {
        match self {
            Self::Standard(s) => s.period(),
            Self::Fourier(f) => f.period,
        }
    }

    pub fn standard_family(&self) -> Option<&StandardFamily> {
        match self {
            Self::Standard(s) => Some(s),
            Self::Fourier(_) => None,
        }
    }

    /// Coefficients at time `t`. The argument is reduced modulo the period
    /// before any trigonometric evaluation, so the result is exactly periodic.
    pub fn eval(&self, t: f64) -> Coefficients {
        let period = self.period();
        let tau = t.rem_euclid(period);
        match self {
            Self::Standard(s) => {
                let (sin, cos) = (s.omega * tau).sin_cos();
                Coefficients {
                    a: 1.0 + s.epsilon * cos,
                    b: 1.0 - s.epsilon * cos,
                    c: s.epsilon * sin,
                }
            }
            Self::Fourier(f) => {
                let theta = TAU * tau / period;
                Coefficients {
                    a: f.a.eval(theta),
                    b: f.b.eval(theta),
                    c: f.c.eval(theta),
                }
            }
        }
    }

    /// Minimum of `a b − c²` over `n_samples` uniform samples of one period.
    /// A non-positive value means the schedule leaves the elliptic regime.
    pub fn ellipticity_margin(&self, n_samples: usize) -> f64 {
        let n = n_samples.max(16);
        let period = self.period();
        (0..n)
            .map(|i| self.eval(period * i as f64 / n as f64).discriminant())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Free-function form of [`ParameterSchedule::eval`].
pub fn schedule_eval(sched: &ParameterSchedule, t: f64) -> Coefficients {
    sched.eval(t)
}

/// Free-function form of [`ParameterSchedule::ellipticity_margin`].
pub fn ellipticity_margin(sched: &ParameterSchedule, n_samples: usize) -> f64 {
    sched.ellipticity_margin(n_samples)
}

/// Physical constants. Only `ħ` enters the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub hbar: f64,
}

impl Constants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !hbar.is_finite() || hbar <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(Self { hbar })
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}
