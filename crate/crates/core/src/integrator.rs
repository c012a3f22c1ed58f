//! Stiff-capable initial-value-problem integrator with dense output.
//!
//! The stepper is a 4-stage linearly implicit Rosenbrock method (order 3 with
//! an embedded order-2 error companion, stiffly accurate, L-stable, γ = 1/2).
//! The Jacobian is formed by forward differences each step; one LU
//! factorization per step serves all four stages. Dense output between
//! accepted steps uses cubic Hermite interpolation, which matches the method
//! order for the sampling densities this crate needs.
//!
//! The stepper handles non-autonomous systems through a finite-difference
//! time-derivative term, but drivers integrating piecewise-defined right-hand
//! sides (pulsed pumping) should split at the discontinuities rather than
//! relying on step rejection.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// An initial value problem `y' = f(t, y)`, `y(t0) = y0` on `t_span`.
///
/// The right-hand side writes the derivative into its third argument.
pub struct IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub rhs: F,
    pub t_span: (f64, f64),
    pub y0: Vec<f64>,
    /// Relative tolerance of the local error control.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: Vec<f64>,
}

impl<F> IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn dimension(&self) -> usize {
        self.y0.len()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IntegratorError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid sample times: {0}")]
    InvalidSampleTimes(String),
    #[error("step size underflow at t = {t_last} (last accepted time)")]
    StepSizeUnderflow { t_last: f64 },
    #[error("non-finite derivative at t = {t}, component {component}")]
    NonFiniteDerivative { t: f64, component: usize },
}

// Transformed Rosenbrock tableau: order 3(2), stiffly accurate, L-stable.
// Stage vectors u_i solve (I/(h*GAMMA) - J) u_i = f(t + c_i h, y + sum a_ij u_j)
//                                              + sum (C_ij / h) u_j + h d_i f_t.
const GAMMA: f64 = 0.5;
const A31: f64 = 2.0;
const A41: f64 = 2.0;
const A43: f64 = 1.0;
const C21: f64 = 4.0;
const C31: f64 = 1.0;
const C32: f64 = -1.0;
const C41: f64 = 1.0;
const C42: f64 = -1.0;
const C43: f64 = -8.0 / 3.0;
const B1: f64 = 2.0;
const B3: f64 = 1.0;
const B4: f64 = 1.0;
const C_I: [f64; 4] = [0.0, 0.0, 1.0, 1.0];
const D_I: [f64; 4] = [0.5, 1.5, 0.0, 0.0];
// err = u4 exactly (b - bhat = e4); the embedded solution is order 2.
const ERR_ORDER: f64 = 2.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct Stepper<'a, F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    problem: &'a IvpProblem<F>,
    n: usize,
    scratch: Vec<f64>,
}

impl<'a, F> Stepper<'a, F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn new(problem: &'a IvpProblem<F>) -> Self {
        let n = problem.dimension();
        Self {
            problem,
            n,
            scratch: vec![0.0; n],
        }
    }

    fn eval(&mut self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>, IntegratorError> {
        (self.problem.rhs)(t, y.as_slice(), &mut self.scratch);
        for (component, v) in self.scratch.iter().enumerate() {
            if !v.is_finite() {
                return Err(IntegratorError::NonFiniteDerivative { t, component });
            }
        }
        Ok(DVector::from_column_slice(&self.scratch))
    }

    /// Forward-difference Jacobian. The perturbation floor uses both the
    /// per-component atol and the overall state scale so that components
    /// sitting at zero inside a large-scale system still get a usable column.
    fn jacobian(
        &mut self,
        t: f64,
        y: &DVector<f64>,
        f0: &DVector<f64>,
    ) -> Result<DMatrix<f64>, IntegratorError> {
        let sqrt_eps = f64::EPSILON.sqrt();
        let y_scale = y.amax();
        let mut jac = DMatrix::zeros(self.n, self.n);
        let mut yp = y.clone();
        for j in 0..self.n {
            let floor = self.problem.atol[j].max(sqrt_eps * y_scale);
            let dy = sqrt_eps * y[j].abs().max(floor);
            let perturbed = y[j] + dy;
            let actual = perturbed - y[j]; // representable step
            yp[j] = perturbed;
            let fj = self.eval(t, &yp)?;
            yp[j] = y[j];
            let inv = 1.0 / actual;
            for i in 0..self.n {
                jac[(i, j)] = (fj[i] - f0[i]) * inv;
            }
        }
        Ok(jac)
    }

    fn time_derivative(
        &mut self,
        t: f64,
        y: &DVector<f64>,
        f0: &DVector<f64>,
        h: f64,
    ) -> Result<DVector<f64>, IntegratorError> {
        let dt = f64::EPSILON.sqrt() * t.abs().max(h.abs());
        if dt == 0.0 {
            return Ok(DVector::zeros(self.n));
        }
        let ft = self.eval(t + dt, y)?;
        Ok((ft - f0) / dt)
    }

    fn error_norm(&self, err: &DVector<f64>, y: &DVector<f64>, y_new: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let sc = self.problem.atol[i] + self.problem.rtol * y[i].abs().max(y_new[i].abs());
            let r = err[i] / sc;
            acc += r * r;
        }
        (acc / self.n as f64).sqrt()
    }
}

/// One accepted step with everything dense output needs.
struct AcceptedStep {
    t0: f64,
    h: f64,
    y0: DVector<f64>,
    f0: DVector<f64>,
    y1: DVector<f64>,
    f1: DVector<f64>,
}

impl AcceptedStep {
    /// Cubic Hermite interpolation at `t` within the step.
    fn interpolate(&self, t: f64) -> DVector<f64> {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        &self.y0 * h00 + &self.f0 * (h10 * self.h) + &self.y1 * h01 + &self.f1 * (h11 * self.h)
    }
}

fn validate<F>(problem: &IvpProblem<F>, sample_times: &[f64]) -> Result<(), IntegratorError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = problem.t_span;
    if problem.y0.is_empty() {
        return Err(IntegratorError::InvalidProblem(
            "dimension must be >= 1".to_string(),
        ));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(IntegratorError::InvalidProblem(format!(
            "t_span must satisfy t1 > t0 (got ({t0}, {t1}))"
        )));
    }
    if !(problem.rtol.is_finite() && problem.rtol > 0.0) {
        return Err(IntegratorError::InvalidProblem(format!(
            "rtol must be positive (got {})",
            problem.rtol
        )));
    }
    if problem.atol.len() != problem.y0.len() {
        return Err(IntegratorError::InvalidProblem(format!(
            "atol length {} does not match dimension {}",
            problem.atol.len(),
            problem.y0.len()
        )));
    }
    if problem.atol.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(IntegratorError::InvalidProblem(
            "atol components must be positive".to_string(),
        ));
    }
    if !problem.y0.iter().all(|v| v.is_finite()) {
        return Err(IntegratorError::InvalidProblem(
            "y0 must be finite".to_string(),
        ));
    }
    let mut prev = f64::NEG_INFINITY;
    for &ts in sample_times {
        if !(ts >= t0 - 1e-12 * (t1 - t0) && ts <= t1 + 1e-12 * (t1 - t0)) {
            return Err(IntegratorError::InvalidSampleTimes(format!(
                "sample time {ts} outside t_span ({t0}, {t1})"
            )));
        }
        if ts < prev {
            return Err(IntegratorError::InvalidSampleTimes(
                "sample times must be ascending".to_string(),
            ));
        }
        prev = ts;
    }
    Ok(())
}

/// Starting step size, following the standard curvature probe.
fn initial_step<F>(
    stepper: &mut Stepper<'_, F>,
    t0: f64,
    t1: f64,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
) -> Result<f64, IntegratorError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let span = t1 - t0;
    let p = stepper.problem;
    let n = stepper.n;
    let scaled = move |v: &DVector<f64>, yref: &DVector<f64>| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let sc = p.atol[i] + p.rtol * yref[i].abs();
            let r = v[i] / sc;
            acc += r * r;
        }
        (acc / n as f64).sqrt()
    };
    let d0 = scaled(y0, y0);
    let d1 = scaled(f0, y0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let probe = y0 + f0 * h0;
    let f_probe = stepper.eval(t0 + h0, &probe)?;
    let d2 = scaled(&(&f_probe - f0), y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (ERR_ORDER + 1.0))
    };
    Ok(h1.min(100.0 * h0).min(span))
}

/// Integrates the problem and returns the states at `sample_times`.
///
/// Sample times must lie in `t_span` and be ascending; values between
/// accepted steps come from the dense-output interpolant. The result is
/// deterministic for identical inputs.
pub fn integrate<F>(
    problem: &IvpProblem<F>,
    sample_times: &[f64],
) -> Result<Vec<Vec<f64>>, IntegratorError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    validate(problem, sample_times)?;
    let (t0, t1) = problem.t_span;
    let span = t1 - t0;
    let mut stepper = Stepper::new(problem);
    let n = stepper.n;

    let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;

    let mut t = t0;
    let mut y = DVector::from_column_slice(&problem.y0);
    let mut f = stepper.eval(t, &y)?;

    // Samples at (or numerically at) t0 use the initial state directly.
    while next_sample < sample_times.len() && sample_times[next_sample] <= t {
        outputs.push(y.as_slice().to_vec());
        next_sample += 1;
    }

    let mut h = initial_step(&mut stepper, t0, t1, &y, &f)?;
    let identity = DMatrix::<f64>::identity(n, n);
    let min_step = 16.0 * f64::EPSILON * t1.abs().max(span);
    let done_eps = 4.0 * f64::EPSILON * t1.abs().max(span);

    while t1 - t > done_eps {
        let jac = stepper.jacobian(t, &y, &f)?;
        let ft = stepper.time_derivative(t, &y, &f, h)?;

        // h_try is this step's attempt; the controller value h survives
        // clipping against the interval end.
        let mut h_try = h.min(t1 - t);

        // Retry loop: shrink h_try on rejected steps or singular W.
        loop {
            if h_try <= min_step {
                return Err(IntegratorError::StepSizeUnderflow { t_last: t });
            }
            let w = &identity * (1.0 / (h_try * GAMMA)) - &jac;
            let lu = w.lu();

            let r1 = &f + &ft * (h_try * D_I[0]);
            let Some(u1) = lu.solve(&r1) else {
                h_try *= 0.5;
                continue;
            };

            // stage 2 shares the stage-1 evaluation point (a21 = 0, c2 = 0)
            let r2 = &f + &u1 * (C21 / h_try) + &ft * (h_try * D_I[1]);
            let Some(u2) = lu.solve(&r2) else {
                h_try *= 0.5;
                continue;
            };

            let y3 = &y + &u1 * A31;
            let f3 = stepper.eval(t + C_I[2] * h_try, &y3)?;
            let r3 = &f3 + &u1 * (C31 / h_try) + &u2 * (C32 / h_try);
            let Some(u3) = lu.solve(&r3) else {
                h_try *= 0.5;
                continue;
            };

            let y4 = &y + &u1 * A41 + &u3 * A43;
            let f4 = stepper.eval(t + C_I[3] * h_try, &y4)?;
            let r4 = &f4 + &u1 * (C41 / h_try) + &u2 * (C42 / h_try) + &u3 * (C43 / h_try);
            let Some(u4) = lu.solve(&r4) else {
                h_try *= 0.5;
                continue;
            };

            let candidate = &y + &u1 * B1 + &u3 * B3 + &u4 * B4;
            let err = stepper.error_norm(&u4, &y, &candidate);

            if err <= 1.0 && candidate.iter().all(|v| v.is_finite()) {
                let t_new = t + h_try;
                let f_new = stepper.eval(t_new, &candidate)?;
                let step = AcceptedStep {
                    t0: t,
                    h: h_try,
                    y0: y,
                    f0: f,
                    y1: candidate,
                    f1: f_new,
                };
                while next_sample < sample_times.len()
                    && sample_times[next_sample] <= t_new + done_eps
                {
                    outputs.push(
                        step.interpolate(sample_times[next_sample])
                            .as_slice()
                            .to_vec(),
                    );
                    next_sample += 1;
                }
                let factor = if err <= f64::MIN_POSITIVE {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-1.0 / (ERR_ORDER + 1.0))).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                h = (h_try * factor).min(span);
                t = t_new;
                y = step.y1;
                f = step.f1; // FSAL: reuse the end-point evaluation
                break;
            }

            let factor = if err.is_finite() && err > 0.0 {
                (SAFETY * err.powf(-1.0 / (ERR_ORDER + 1.0))).clamp(MIN_FACTOR, 0.9)
            } else {
                MIN_FACTOR
            };
            h_try *= factor;
        }
    }

    // Any trailing samples numerically at t1.
    while next_sample < sample_times.len() {
        outputs.push(y.as_slice().to_vec());
        next_sample += 1;
    }

    Ok(outputs)
}
