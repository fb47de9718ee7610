//! Adaptive second-order IMEX time stepping.
//!
//! The tendency is split as `F(U) = Λ·U + N(U)` where `Λ` is linear with
//! constant coefficients and therefore diagonal (2×2 block for `h`–`q`) in
//! Fourier space:
//!
//! ```text
//! h_t ⊃ −∂x q
//! q_t ⊃ (5/6)(Ka/Re)·h̄·∂xxx h − 5/(2εRe)·q + (9ε/2Re)·∂xx q
//! S_t ⊃ (ε/Pe_b)·∂xx S
//! Γ_t ⊃ (ε/Pe_s)·∂xx Γ
//! ```
//!
//! with `h̄` the spatial mean of `h` (invariant under the flow). `Λ` is
//! advanced with the trapezoidal rule and `N` with Heun's method:
//!
//! ```text
//! (I − dt/2·Λ)·U*  = (I + dt/2·Λ)·U⁰ + dt·N(U⁰)
//! (I − dt/2·Λ)·U¹  = (I + dt/2·Λ)·U⁰ + dt/2·[N(U⁰) + N(U*)]
//! ```
//!
//! `U¹` is second-order accurate; the first-order predictor `U*` provides the
//! embedded error estimate `U¹ − U*`. Both stages reproduce any fixed point
//! of `F` exactly, since there `N(U) = −Λ·U`.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};
use crate::rhs::{eval_rhs, State};
use crate::spatial::Grid;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub safety_factor: f64,
    pub max_steps: u64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.5,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            safety_factor: 0.9,
            max_steps: 100_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("dt_init", "need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("rel_tol", "tolerances must be > 0");
        }
        if !(self.safety_factor > 0.0 && self.safety_factor <= 1.0) {
            return bad("safety_factor", "must lie in (0, 1]");
        }
        if self.max_steps == 0 {
            return bad("max_steps", "must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Completed,
    BlowUp,
    MaxSteps,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUp => "blow-up",
            RunStatus::MaxSteps => "max-steps",
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::BlowUp => 2,
            RunStatus::MaxSteps => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Last accepted state; for a blow-up, the last finite one.
    pub state: State,
    pub t: f64,
    pub status: RunStatus,
    pub accepted: u64,
    pub rejected: u64,
    pub wall_time: Duration,
    pub last_dt: f64,
}

/// Outcome of a single trial step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: State,
    /// Componentwise difference between the second-order result and the
    /// first-order embedded predictor.
    pub error: State,
}

/// One IMEX step for a fixed model, variant and grid.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    params: ModelParams,
    variant: Variant,
    grid: Grid,
}

/// Per-bin coefficients of `Λ`.
#[derive(Debug, Clone, Copy)]
struct ModeOperator {
    /// `∂t ĥ ⊃ a·q̂`
    a: Complex64,
    /// `∂t q̂ ⊃ b·ĥ + r·q̂`
    b: Complex64,
    r: Complex64,
    d_s: f64,
    d_gamma: f64,
}

impl ModeOperator {
    fn apply(&self, u: [Complex64; 4]) -> [Complex64; 4] {
        [
            self.a * u[1],
            self.b * u[0] + u[1] * self.r,
            u[2] * self.d_s,
            u[3] * self.d_gamma,
        ]
    }

    /// Solves `(I − θ·Λ)·x = y`.
    fn solve(&self, theta: f64, y: [Complex64; 4]) -> [Complex64; 4] {
        let m11 = 1.0 - self.r * theta;
        let det = m11 - self.a * self.b * (theta * theta);
        let h = (y[0] * m11 + self.a * y[1] * theta) / det;
        let q = (self.b * y[0] * theta + y[1]) / det;
        [
            h,
            q,
            y[2] / (1.0 - theta * self.d_s),
            y[3] / (1.0 - theta * self.d_gamma),
        ]
    }
}

impl ImexStepper {
    pub fn new(params: ModelParams, variant: Variant, grid: Grid) -> Result<Self> {
        params.validate()?;
        Ok(ImexStepper {
            params,
            variant,
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `Λ` per bin: the flow-rate equation linearized about the mean state
    /// `(h̄, q̄)`, plus the surfactant diffusion operators.
    fn operators(&self, hbar: f64, qbar: f64) -> Vec<ModeOperator> {
        let p = &self.params;
        let n = self.grid.n();
        let cap = p.capillary_coefficient() * hbar;
        let visc = p.eps / p.re;
        let relax = p.relaxation_rate();
        let u = qbar / hbar;
        // Coefficients of ĥ and q̂ in ∂t q̂.
        let h_relax = relax * (p.nusselt_flow_rate() + 2.0 * u / (hbar * hbar));
        let q_relax = -relax / (hbar * hbar);
        let h_adv = 9.0 / 7.0 * u * u - 2.0 * p.hydrostatic_coefficient() * hbar;
        let q_adv = -17.0 / 7.0 * u;
        self.grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                // Odd derivatives drop the Nyquist bin.
                let k_odd = if j == n / 2 { 0.0 } else { k };
                let k2 = k * k;
                ModeOperator {
                    a: Complex64::new(0.0, -k_odd),
                    b: Complex64::new(
                        h_relax + 6.0 * visc * u * k2,
                        h_adv * k_odd - cap * k_odd * k_odd * k_odd,
                    ),
                    r: Complex64::new(q_relax - 4.5 * visc * k2, q_adv * k_odd),
                    d_s: -p.eps / p.pe_b * k2,
                    d_gamma: -p.eps / p.pe_s * k2,
                }
            })
            .collect()
    }

    fn spectra(&self, fields: [&[f64]; 4]) -> [Vec<Complex64>; 4] {
        fields.map(|f| self.grid.spectrum(f))
    }

    /// Explicit remainder `N̂ = F̂ − Λ·Û`, per bin.
    fn remainder(
        &self,
        ops: &[ModeOperator],
        u: &[Vec<Complex64>; 4],
        f: &[Vec<Complex64>; 4],
    ) -> Vec<[Complex64; 4]> {
        ops.iter()
            .enumerate()
            .map(|(j, op)| {
                let lu = op.apply([u[0][j], u[1][j], u[2][j], u[3][j]]);
                [f[0][j] - lu[0], f[1][j] - lu[1], f[2][j] - lu[2], f[3][j] - lu[3]]
            })
            .collect()
    }

    fn to_state(&self, spec: Vec<[Complex64; 4]>) -> State {
        let n = self.grid.n();
        let mut cols: [Vec<Complex64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
        for v in spec {
            for (c, x) in cols.iter_mut().zip(v) {
                c.push(x);
            }
        }
        State::from_fields(cols.map(|c| self.grid.physical(c)))
    }

    /// Advances `state` by `dt`. Errors from the right-hand side (non-finite
    /// values, `h ≤ 0`) propagate unchanged.
    pub fn step(&self, state: &State, dt: f64) -> Result<StepResult> {
        self.step_with(state, dt, |u| {
            let (t, _) = eval_rhs(u, &self.params, self.variant, &self.grid)?;
            Ok([t.dh_dt, t.dq_dt, t.ds_dt, t.dgamma_dt])
        })
    }

    fn step_with<F>(&self, state: &State, dt: f64, rhs: F) -> Result<StepResult>
    where
        F: Fn(&State) -> Result<[Vec<f64>; 4]>,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("{dt} is not a positive step"),
            });
        }
        let grid = &self.grid;
        let half = 0.5 * dt;
        let ops = self.operators(grid.mean(&state.h), grid.mean(&state.q));

        let f0 = rhs(state)?;
        let u0 = self.spectra(state.fields());
        let n0 = self.remainder(&ops, &u0, &self.spectra(f0.each_ref().map(|v| v.as_slice())));

        let base: Vec<[Complex64; 4]> = ops
            .iter()
            .enumerate()
            .map(|(j, op)| {
                let u = [u0[0][j], u0[1][j], u0[2][j], u0[3][j]];
                let lu = op.apply(u);
                std::array::from_fn(|i| u[i] + lu[i] * half)
            })
            .collect();

        let predictor = self.to_state(
            ops.iter()
                .zip(&base)
                .zip(&n0)
                .map(|((op, b), n)| op.solve(half, std::array::from_fn(|i| b[i] + n[i] * dt)))
                .collect(),
        );
        if !predictor.is_finite() {
            return Err(Error::NonFinite("predictor stage".into()));
        }

        let f1 = rhs(&predictor)?;
        let u1 = self.spectra(predictor.fields());
        let n1 = self.remainder(&ops, &u1, &self.spectra(f1.each_ref().map(|v| v.as_slice())));

        let corrected = self.to_state(
            ops.iter()
                .zip(&base)
                .zip(n0.iter().zip(&n1))
                .map(|((op, b), (na, nb))| {
                    op.solve(half, std::array::from_fn(|i| b[i] + (na[i] + nb[i]) * half))
                })
                .collect(),
        );
        if !corrected.is_finite() {
            return Err(Error::NonFinite("corrector stage".into()));
        }
        let error = State::from_fields(std::array::from_fn(|i| {
            corrected.fields()[i]
                .iter()
                .zip(predictor.fields()[i])
                .map(|(a, b)| a - b)
                .collect()
        }));
        Ok(StepResult {
            state: corrected,
            error,
        })
    }

    /// `Λ·U` in physical space for a fixed set of bin operators.
    #[cfg(test)]
    fn apply_operators(&self, ops: &[ModeOperator], state: &State) -> [Vec<f64>; 4] {
        let u = self.spectra(state.fields());
        let out: Vec<[Complex64; 4]> = ops
            .iter()
            .enumerate()
            .map(|(j, op)| op.apply([u[0][j], u[1][j], u[2][j], u[3][j]]))
            .collect();
        self.to_state(out).into_fields()
    }
}

/// Weighted max-norm of a local error estimate; `≤ 1` means acceptable.
pub fn error_norm(error: &State, before: &State, after: &State, control: &StepControl) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        let (e, a, b) = (error.fields()[i], before.fields()[i], after.fields()[i]);
        for j in 0..e.len() {
            let scale = control.abs_tol + control.rel_tol * a[j].abs().max(b[j].abs());
            worst = worst.max(e[j].abs() / scale);
        }
    }
    worst
}

/// Adaptive driver carrying step-size history between calls, so a run can be
/// advanced piecewise through a list of output times.
#[derive(Debug, Clone)]
pub struct Integrator {
    stepper: ImexStepper,
    control: StepControl,
    dt: f64,
    prev_err: f64,
    accepted: u64,
    rejected: u64,
    last_dt: f64,
}

impl Integrator {
    pub fn new(stepper: ImexStepper, control: StepControl) -> Result<Self> {
        control.validate()?;
        Ok(Integrator {
            stepper,
            dt: control.dt_init,
            control,
            prev_err: 1.0,
            accepted: 0,
            rejected: 0,
            last_dt: 0.0,
        })
    }

    pub fn stepper(&self) -> &ImexStepper {
        &self.stepper
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Size of the most recently accepted step.
    pub fn last_dt(&self) -> f64 {
        self.last_dt
    }

    /// Advances `state` from `*t` to exactly `t1`. `observer` sees every
    /// accepted step as `(t, state, dt)`. A rejected step leaves `state`
    /// untouched.
    pub fn advance<F>(&mut self, state: &mut State, t: &mut f64, t1: f64, mut observer: F) -> RunStatus
    where
        F: FnMut(f64, &State, f64),
    {
        let c = self.control;
        while *t < t1 {
            if self.accepted + self.rejected >= c.max_steps {
                return RunStatus::MaxSteps;
            }
            let remaining = t1 - *t;
            let (h, last) = if remaining <= self.dt * (1.0 + 1e-9) {
                (remaining, true)
            } else if remaining < 2.0 * self.dt {
                (0.5 * remaining, false)
            } else {
                (self.dt, false)
            };
            let clipped = h < self.dt;

            match self.stepper.step(state, h) {
                Ok(trial) => {
                    let err = error_norm(&trial.error, state, &trial.state, &c);
                    if err <= 1.0 || h <= c.dt_min {
                        *state = trial.state;
                        *t = if last { t1 } else { *t + h };
                        self.accepted += 1;
                        self.last_dt = h;
                        observer(*t, state, h);

                        let factor = if err == 0.0 {
                            5.0
                        } else {
                            c.safety_factor * err.powf(-0.35) * self.prev_err.powf(0.2)
                        }
                        .clamp(0.2, 5.0);
                        self.prev_err = err.max(1e-4);
                        if !(clipped && factor >= 1.0) {
                            self.dt = h * factor;
                        }
                    } else {
                        self.rejected += 1;
                        let factor = (c.safety_factor * err.powf(-0.5)).clamp(0.1, 0.9);
                        self.dt = h * factor;
                    }
                }
                Err(Error::NonFinite(_)) | Err(Error::NonPositiveThickness { .. }) | Err(Error::OutOfRange(_)) => {
                    if h <= c.dt_min {
                        return RunStatus::BlowUp;
                    }
                    self.rejected += 1;
                    self.dt = 0.25 * h;
                }
                Err(_) => return RunStatus::BlowUp,
            }
            self.dt = self.dt.clamp(c.dt_min, c.dt_max);
        }
        RunStatus::Completed
    }
}

/// Integrates from `t0` to `t1` with adaptive steps.
#[allow(clippy::too_many_arguments)]
pub fn integrate_to<F>(
    state: &State,
    t0: f64,
    t1: f64,
    params: &ModelParams,
    variant: Variant,
    grid: &Grid,
    control: &StepControl,
    observer: F,
) -> Result<RunResult>
where
    F: FnMut(f64, &State, f64),
{
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter {
            name: "t1",
            reason: format!("end time {t1} precedes start time {t0}"),
        });
    }
    state.check(grid)?;
    let started = Instant::now();
    let stepper = ImexStepper::new(*params, variant, grid.clone())?;
    let mut integrator = Integrator::new(stepper, *control)?;
    let mut current = state.clone();
    let mut t = t0;
    let status = integrator.advance(&mut current, &mut t, t1, observer);
    Ok(RunResult {
        state: current,
        t,
        status,
        accepted: integrator.accepted(),
        rejected: integrator.rejected(),
        wall_time: started.elapsed(),
        last_dt: integrator.last_dt(),
    })
}

/// Fixed-step integration, for convergence studies.
pub fn integrate_fixed(stepper: &ImexStepper, state: &State, t0: f64, t1: f64, steps: usize) -> Result<State> {
    let dt = (t1 - t0) / steps as f64;
    let mut u = state.clone();
    for _ in 0..steps {
        u = stepper.step(&u, dt)?.state;
    }
    Ok(u)
}
