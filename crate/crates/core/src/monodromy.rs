//! Linear analysis of the centroid flow `q̇ = bp + cq`, `ṗ = −aq − cp`.
//!
//! The one-period fundamental matrix `M` is symplectic. In the elliptic regime
//! it is conjugate to a rotation, `W⁻¹ M W = R(σ)`, where
//! `R(σ) = [[cos σ, sin σ], [−sin σ, cos σ]]` advances the angle `φ` of
//! `(q, p) = √(2I) (sin φ, cos φ)` by `σ`. The continuous rotation number
//! `ρ = 2πk + σ` additionally counts the full turns made during one period.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::dynamics::{centroid_rates, h_cl};
use crate::error::{Error, Result};
use crate::integrator::{solve, IntegratorOptions, OdeSystem};
use crate::params::ParameterSchedule;

/// `2 − |tr M|` must exceed this for a non-trivial elliptic normal form.
pub const PARABOLIC_MARGIN: f64 = 1e-10;

/// Entry-wise distance below which `M` is treated as exactly `±1`.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Largest step used while tracking the rotation angle.
const TRACKING_MAX_STEP: f64 = 0.1;

/// Rotation advancing the oscillator angle by `sigma`.
pub fn rotation(sigma: f64) -> Matrix2<f64> {
    let (s, c) = sigma.sin_cos();
    Matrix2::new(c, s, -s, c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    /// Symplectic (`det W = 1`) matrix with `W⁻¹ M W = R(σ)`.
    pub w: Matrix2<f64>,
    pub sigma: f64,
}

impl NormalFrame {
    /// Normal form of an elliptic 2×2 symplectic matrix.
    ///
    /// `W` is chosen upper triangular with a positive `(0,0)` entry, which fixes
    /// the rotational freedom `W → W R(α)` deterministically.
    pub fn from_matrix(m: &Matrix2<f64>) -> Result<Self> {
        for sign in [1.0, -1.0] {
            let dist = (m - Matrix2::identity() * sign).amax();
            if dist < IDENTITY_TOL {
                return Ok(Self {
                    w: Matrix2::identity(),
                    sigma: if sign > 0.0 { 0.0 } else { PI },
                });
            }
        }
        let trace = m.trace();
        if trace.abs() >= 2.0 {
            return Err(Error::NonElliptic { trace });
        }
        let margin = 2.0 - trace.abs();
        if margin <= PARABOLIC_MARGIN {
            return Err(Error::NearParabolic { margin });
        }
        // (M − M⁻¹)/2 = sin σ · S J with S = W Wᵀ and J the symplectic unit.
        // Computing sin²σ from these small entries is accurate near M = ±1,
        // where 1 − (tr/2)² would cancel.
        let alpha = 0.5 * (m[(0, 0)] - m[(1, 1)]);
        let (b, c) = (m[(0, 1)], m[(1, 0)]);
        let sin2 = -alpha * alpha - b * c;
        if !(sin2 > 0.0) {
            return Err(Error::NonElliptic { trace });
        }
        let sin_sigma = b.signum() * sin2.sqrt();
        let s11 = b / sin_sigma;
        let s12 = -alpha / sin_sigma;
        let s22 = -c / sin_sigma;
        if !(s11 > 0.0 && s22 > 0.0) {
            return Err(Error::Numeric(
                "invariant form of the monodromy is not positive definite".into(),
            ));
        }
        // Normalise to det S = 1 exactly before factorising.
        let det = s11 * s22 - s12 * s12;
        let scale = det.sqrt();
        let (s11, s12, s22) = (s11 / scale, s12 / scale, s22 / scale);
        let w = Matrix2::new(
            (s11 - s12 * s12 / s22).sqrt(),
            s12 / s22.sqrt(),
            0.0,
            s22.sqrt(),
        );
        let sigma = sin_sigma.atan2(0.5 * trace).rem_euclid(TAU);
        Ok(Self { w, sigma })
    }

    /// The `M`-invariant positive symmetric form `S = W Wᵀ` (`det S = 1`).
    pub fn invariant_form(&self) -> Matrix2<f64> {
        self.w * self.w.transpose()
    }

    /// Normal-form angle of a phase-space point.
    pub fn angle_of(&self, x: &Vector2<f64>) -> f64 {
        let y = self.w_inverse() * x;
        y[0].atan2(y[1])
    }

    fn w_inverse(&self) -> Matrix2<f64> {
        let w = &self.w;
        Matrix2::new(w[(1, 1)], -w[(0, 1)], -w[(1, 0)], w[(0, 0)]) / w.determinant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monodromy {
    pub matrix: Matrix2<f64>,
    pub period: f64,
    pub frame: NormalFrame,
    /// `σ ∈ [0, 2π)`.
    pub sigma: f64,
    pub winding: i64,
    /// `ρ = 2π·winding + σ`, radians per period.
    pub rho: f64,
}

impl Monodromy {
    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Image of a phase-space point under the one-period flow.
    pub fn map(&self, x: &Vector2<f64>) -> Vector2<f64> {
        self.matrix * x
    }
}

struct MatrixFlow<'a> {
    sched: &'a ParameterSchedule,
}

impl OdeSystem<4> for MatrixFlow<'_> {
    // Row-major [m00, m01, m10, m11]; dM/dt = A M with A = [[c, b], [−a, −c]].
    fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let k = self.sched.eval(t);
        [
            k.c * y[0] + k.b * y[2],
            k.c * y[1] + k.b * y[3],
            -k.a * y[0] - k.c * y[2],
            -k.a * y[1] - k.c * y[3],
        ]
    }
}

/// Integrates the matrix variational equation over one period and extracts
/// the normal form and the continuous rotation number.
///
/// The winding is found by following the normal-frame angle of one
/// fundamental solution through every accepted step.
pub fn compute_monodromy(sched: &ParameterSchedule, opts: &IntegratorOptions) -> Result<Monodromy> {
    let period = sched.period();
    let opts = opts.with_max_step(opts.max_step.min(TRACKING_MAX_STEP));
    let sol = solve(
        &MatrixFlow { sched },
        0.0,
        [1.0, 0.0, 0.0, 1.0],
        period,
        &opts,
        &[],
    )?;
    let y = sol.last().1;
    let matrix = Matrix2::new(y[0], y[1], y[2], y[3]);
    let frame = NormalFrame::from_matrix(&matrix)?;
    let sigma = frame.sigma;

    // Follow y(t) = W⁻¹ Φ(t) W e₁, which starts at angle π/2.
    let w_inv = frame.w_inverse();
    let v0 = frame.w * Vector2::new(1.0, 0.0);
    let mut prev = PI / 2.0;
    let mut advance = 0.0;
    for (_, y) in sol.steps.iter().skip(1) {
        let phi = Matrix2::new(y[0], y[1], y[2], y[3]);
        let v = w_inv * (phi * v0);
        let angle = v[0].atan2(v[1]);
        let mut delta = angle - prev;
        delta -= TAU * (delta / TAU).round();
        if delta.abs() >= PI / 2.0 {
            return Err(Error::Numeric(
                "rotation angle changed by more than pi/2 in one step; cannot unwrap".into(),
            ));
        }
        advance += delta;
        prev = angle;
    }
    let winding = ((advance - sigma) / TAU).round();
    let rho = TAU * winding + sigma;
    if (advance - rho).abs() > 1e-6 {
        return Err(Error::Numeric(format!(
            "tracked rotation {advance} is inconsistent with normal-form angle {sigma}"
        )));
    }
    Ok(Monodromy {
        matrix,
        period,
        frame,
        sigma,
        winding: winding as i64,
        rho,
    })
}

/// Normal frame of a computed monodromy.
pub fn normal_form(m: &Monodromy) -> Result<NormalFrame> {
    NormalFrame::from_matrix(&m.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    /// Normal-form angle `φ̄₀`.
    pub angle: f64,
    pub x: Vector2<f64>,
}

/// Points uniformly spaced in normal-form angle on the invariant ellipse of
/// action `Ī₀` (enclosed area `2πĪ₀`).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusEnsemble {
    pub action: f64,
    pub points: Vec<TorusPoint>,
}

pub fn torus_ensemble(frame: &NormalFrame, action: f64, n: usize) -> Result<TorusEnsemble> {
    if !(action > 0.0 && action.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "torus action must be positive, got {action}"
        )));
    }
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "torus ensemble needs at least 8 points, got {n}"
        )));
    }
    let r = (2.0 * action).sqrt();
    let points = (0..n)
        .map(|j| {
            let angle = TAU * j as f64 / n as f64;
            let (s, c) = angle.sin_cos();
            TorusPoint {
                angle,
                x: frame.w * Vector2::new(r * s, r * c),
            }
        })
        .collect();
    Ok(TorusEnsemble { action, points })
}

/// Value of `xᵀ S⁻¹ x`; equals `2Ī₀` on the ensemble's ellipse.
pub fn ellipse_level(frame: &NormalFrame, x: &Vector2<f64>) -> f64 {
    let y = frame.w_inverse() * x;
    y.norm_squared()
}

/// `(G₀, Π₀)` of the exactly periodic pure-Gaussian fluctuation orbit.
///
/// The covariance `(ħ/2) S` with `S = W Wᵀ` is fixed by the return map
/// (`M S Mᵀ = S`); reading `G` and `Π` off `S` gives the orbit's initial point.
pub fn periodic_gaussian_oracle(frame: &NormalFrame) -> (f64, f64) {
    let s = frame.invariant_form();
    (0.5 * s[(0, 0)], s[(0, 1)] / (2.0 * s[(0, 0)]))
}

/// Integrals over one period along a centroid trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleIntegrals {
    /// `∫ ½(p q̇ − q ṗ) dt`.
    pub area: f64,
    /// `∫ H_cl dt`.
    pub energy: f64,
    pub end: Vector2<f64>,
}

struct CentroidFlow<'a> {
    sched: &'a ParameterSchedule,
}

impl OdeSystem<4> for CentroidFlow<'_> {
    fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let k = self.sched.eval(t);
        let (q, p) = (y[0], y[1]);
        let (q_dot, p_dot) = centroid_rates(q, p, &k);
        [
            q_dot,
            p_dot,
            0.5 * (p * q_dot - q * p_dot),
            h_cl(q, p, k.a, k.b, k.c),
        ]
    }
}

/// Integrates the centroid flow over one period from `x`, accumulating the
/// symplectic area and energy integrals.
pub fn cycle_integrals(
    sched: &ParameterSchedule,
    x: &Vector2<f64>,
    opts: &IntegratorOptions,
) -> Result<CycleIntegrals> {
    let sol = solve(
        &CentroidFlow { sched },
        0.0,
        [x[0], x[1], 0.0, 0.0],
        sched.period(),
        opts,
        &[],
    )?;
    let y = sol.last().1;
    Ok(CycleIntegrals {
        area: y[2],
        energy: y[3],
        end: Vector2::new(y[0], y[1]),
    })
}

impl TorusEnsemble {
    /// Period integrals for every ensemble point, in ensemble order.
    pub fn cycle_integrals(
        &self,
        sched: &ParameterSchedule,
        opts: &IntegratorOptions,
    ) -> Result<Vec<CycleIntegrals>> {
        self.points
            .par_iter()
            .map(|pt| cycle_integrals(sched, &pt.x, opts))
            .collect()
    }

    /// Uniform averages `(⟨area⟩, ⟨energy⟩)` over the ensemble, summed in
    /// index order so the result does not depend on scheduling.
    pub fn mean_cycle_integrals(
        &self,
        sched: &ParameterSchedule,
        opts: &IntegratorOptions,
    ) -> Result<(f64, f64)> {
        let all = self.cycle_integrals(sched, opts)?;
        let n = all.len() as f64;
        let area = all.iter().map(|c| c.area).sum::<f64>() / n;
        let energy = all.iter().map(|c| c.energy).sum::<f64>() / n;
        Ok((area, energy))
    }
}

/// Signed area of a closed polygon (shoelace); positive for counter-clockwise
/// traversal in the `(x, y)` plane.
pub fn shoelace_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (x0, y0) = points[i];
            let (x1, y1) = points[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum::<f64>()
        * 0.5
}
