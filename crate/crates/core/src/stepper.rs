//! Mean-reverting SAV-BDF2 time stepping.
//!
//! One step solves
//!
//! ```text
//! (3u' - 4u + u_)/(2k) + A u' + q' N(ubar) = F'
//! (3q' - 4q + q_)/(2k) + gamma q' - <N(ubar), u'> = gamma
//! ```
//!
//! with `ubar = 2u - u_`. Writing `u' = u1 + q' u2`, where
//! `(3/(2k) + A) u1 = F' + (4u - u_)/(2k)` and `(3/(2k) + A) u2 = -N(ubar)`,
//! leaves a scalar equation for `q'`. The operator `3/(2k) + A` is diagonal
//! in Fourier space and constant in time.

use crate::field::{FieldRole, SpectralField};
use crate::models::{nonlinear_term, Forcing, ModelSpec};
use crate::spectral::Spectral;
use crate::{Error, Result};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperParams {
    /// Time step `k`.
    pub dt: f64,
    /// Relaxation rate of the auxiliary variable; `0` disables mean reversion.
    pub gamma: f64,
    /// Apply the 2/3 rule to the Jacobian.
    pub dealias: bool,
}

impl StepperParams {
    pub fn new(dt: f64, gamma: f64) -> Result<Self> {
        let p = StepperParams {
            dt,
            gamma,
            dealias: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// How the nonlinear term is weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Auxiliary variable `q` solved from its relaxation equation.
    MeanRevertingSav,
    /// `q` frozen at one: the plain BDF2 / Gear-extrapolation IMEX scheme
    /// with an explicit advection term.
    FrozenAuxiliary,
}

/// Solver history `(u^n, u^{n-1}, q^n, q^{n-1})` at step `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLevelState {
    pub omega: SpectralField,
    pub omega_prev: SpectralField,
    pub q: f64,
    pub q_prev: f64,
    pub step: u64,
}

impl TwoLevelState {
    /// Single-level data at step zero; the previous level duplicates it.
    pub fn initial(omega: SpectralField, q: f64) -> Self {
        TwoLevelState {
            omega_prev: omega.clone(),
            omega,
            q,
            q_prev: q,
            step: 0,
        }
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite()
            && self.q_prev.is_finite()
            && self.omega.is_finite()
            && self.omega_prev.is_finite()
    }
}

/// `2 u^n - u^{n-1}`.
pub fn gear_extrapolate(u: &SpectralField, u_prev: &SpectralField) -> Result<SpectralField> {
    u.combine(2.0, u_prev, -1.0)
}

/// `[a, b] . G [a, b]` with `G = (1/4) [[5, -2], [-2, 1]]`, newest entry
/// first.
pub fn g_norm_sq(a: f64, b: f64) -> f64 {
    0.25 * (5.0 * a * a - 4.0 * a * b + b * b)
}

/// Field version of [`g_norm_sq`], cross terms taken in `L^2`.
pub fn g_norm_sq_fields(spectral: &Spectral, a: &SpectralField, b: &SpectralField) -> Result<f64> {
    let aa = spectral.inner_product_l2(a, a)?;
    let ab = spectral.inner_product_l2(a, b)?;
    let bb = spectral.inner_product_l2(b, b)?;
    Ok(0.25 * (5.0 * aa - 4.0 * ab + bb))
}

/// `q^{n+1}` from the BDF2 auxiliary equation given
/// `b1 = <N(ubar), u1>` and `b2 = <N(ubar), u2>`.
pub fn solve_auxiliary_scalar(
    q: f64,
    q_prev: f64,
    b1: f64,
    b2: f64,
    params: &StepperParams,
) -> Result<f64> {
    let k = params.dt;
    solve_scalar(1.5 / k, (4.0 * q - q_prev) / (2.0 * k), b1, b2, params.gamma)
}

/// `(sigma + gamma - b2) q = gamma + history + b1`.
fn solve_scalar(sigma: f64, history: f64, b1: f64, b2: f64, gamma: f64) -> Result<f64> {
    let reference = sigma + gamma;
    let denominator = reference - b2;
    if !(denominator.abs() >= 1e-12 * reference) {
        return Err(Error::SingularScalarSolve {
            step: 0,
            denominator,
            reference,
            b1,
            b2,
        });
    }
    Ok((gamma + history + b1) / denominator)
}

/// Observer invoked during [`Stepper::run_trajectory`] every `stride()`
/// steps. Observers only read the state.
pub trait Observer {
    fn stride(&self) -> u64 {
        1
    }

    fn observe(&mut self, step: u64, time: f64, state: &TwoLevelState);
}

/// Starting point of a trajectory.
#[derive(Clone, Debug)]
pub enum InitialData {
    /// `(u^0, q^0)`; bootstrapped with one first-order step.
    Single { omega: SpectralField, q: f64 },
    /// Full two-level history, e.g. from a checkpoint or exact seeding.
    History(TwoLevelState),
}

/// Time integrator for one model, forcing and parameter set.
#[derive(Debug)]
pub struct Stepper {
    spectral: Arc<Spectral>,
    model: ModelSpec,
    forcing: Forcing,
    params: StepperParams,
    scheme: Scheme,
    // 1 / (3/(2k) + A), fixed for the whole run
    bdf2_inverse: Vec<f64>,
}

impl Stepper {
    pub fn new(
        spectral: Arc<Spectral>,
        model: ModelSpec,
        forcing: Forcing,
        params: StepperParams,
        scheme: Scheme,
    ) -> Result<Self> {
        params.validate()?;
        model.validate(spectral.grid())?;
        if forcing.grid() != spectral.grid() {
            return Err(Error::GridMismatch);
        }
        let bdf2_inverse = spectral.helmholtz_inverse_symbol(1.5 / params.dt, &model);
        Ok(Stepper {
            spectral,
            model,
            forcing,
            params,
            scheme,
            bdf2_inverse,
        })
    }

    pub fn spectral(&self) -> &Arc<Spectral> {
        &self.spectral
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn params(&self) -> &StepperParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// `N(u)` with the stream function recovered from `u`.
    pub fn nonlinear(&self, u: &SpectralField) -> Result<SpectralField> {
        let psi = self.spectral.invert_elliptic(u, self.model.froude())?;
        nonlinear_term(&self.spectral, &psi, u, &self.model, self.params.dealias)
    }

    /// Solves `(sigma + A) u' + q' N = F(t') + history` together with
    /// `(sigma + gamma) q' - <N, u'> = gamma + q_history`, where `inverse`
    /// holds `1 / (sigma + A)`.
    ///
    /// With `u' = u1 + q' u2`, `u1 = inverse (F + history)` and
    /// `u2 = -inverse N`, the scalar equation only needs `<N, u1>` and
    /// `<N, u2>`; the field is then assembled as `inverse (F + history - q' N)`.
    fn implicit_solve(
        &self,
        sigma: f64,
        inverse: &[f64],
        history: SpectralField,
        q_history: f64,
        n_bar: &SpectralField,
        step: u64,
    ) -> Result<(SpectralField, f64)> {
        let time = step as f64 * self.params.dt;
        let mut rhs = history;
        rhs.add_scaled(1.0, &self.forcing.at(time))?;
        let n = n_bar.as_slice();
        let q = match self.scheme {
            Scheme::FrozenAuxiliary => 1.0,
            Scheme::MeanRevertingSav => {
                let (mut b1, mut b2) = (0.0, 0.0);
                for ((r, nm), &inv) in rhs.as_slice().iter().zip(n).zip(inverse) {
                    b1 += inv * (nm.re * r.re + nm.im * r.im);
                    b2 -= inv * nm.norm_sqr();
                }
                let volume = self.spectral.grid().volume();
                let (b1, b2) = (b1 * volume, b2 * volume);
                solve_scalar(sigma, q_history, b1, b2, self.params.gamma).map_err(|e| match e {
                    Error::SingularScalarSolve {
                        denominator,
                        reference,
                        b1,
                        b2,
                        ..
                    } => Error::SingularScalarSolve {
                        step,
                        denominator,
                        reference,
                        b1,
                        b2,
                    },
                    other => other,
                })?
            }
        };
        let mut u = rhs;
        for ((um, nm), &inv) in u.as_slice_mut().iter_mut().zip(n).zip(inverse) {
            *um = (*um - nm * q) * inv;
        }
        if !q.is_finite() || !u.is_finite() {
            return Err(Error::Divergence { step, time });
        }
        Ok((u.with_role(FieldRole::Vorticity), q))
    }

    /// Backward-Euler analogue used to bootstrap from single-level data.
    pub fn step_first_order(&self, omega: &SpectralField, q: f64) -> Result<TwoLevelState> {
        let k = self.params.dt;
        let n_bar = self.nonlinear(omega)?;
        let inverse = self.spectral.helmholtz_inverse_symbol(1.0 / k, &self.model);
        let (u, q_new) =
            self.implicit_solve(1.0 / k, &inverse, omega.scaled(1.0 / k), q / k, &n_bar, 1)?;
        Ok(TwoLevelState {
            omega: u,
            omega_prev: omega.clone().with_role(FieldRole::Vorticity),
            q: if self.scheme == Scheme::FrozenAuxiliary { 1.0 } else { q_new },
            q_prev: if self.scheme == Scheme::FrozenAuxiliary { 1.0 } else { q },
            step: 1,
        })
    }

    /// One mr-SAV-BDF2 step from `(u^n, u^{n-1}, q^n, q^{n-1})`.
    pub fn step_bdf2(&self, state: &TwoLevelState) -> Result<TwoLevelState> {
        let k = self.params.dt;
        let u_bar = gear_extrapolate(&state.omega, &state.omega_prev)?;
        let n_bar = self.nonlinear(&u_bar)?;
        let history = state
            .omega
            .combine(2.0 / k, &state.omega_prev, -0.5 / k)?;
        let q_history = (4.0 * state.q - state.q_prev) / (2.0 * k);
        let step = state.step + 1;
        let (u, q) =
            self.implicit_solve(1.5 / k, &self.bdf2_inverse, history, q_history, &n_bar, step)?;
        Ok(TwoLevelState {
            omega: u,
            omega_prev: state.omega.clone(),
            q,
            q_prev: state.q,
            step,
        })
    }

    /// Advances `n_steps` steps, bootstrapping with one first-order step when
    /// starting from single-level data.
    ///
    /// Observers see the state at every multiple of their stride, including
    /// step zero for single-level starts. A divergence aborts the run after
    /// all earlier observations have been delivered.
    pub fn run_trajectory(
        &self,
        initial: InitialData,
        n_steps: u64,
        observers: &mut [&mut dyn Observer],
    ) -> Result<TwoLevelState> {
        if n_steps == 0 {
            return Err(Error::Precondition("trajectory needs at least one step".into()));
        }
        let dt = self.params.dt;
        let notify = |observers: &mut [&mut dyn Observer], state: &TwoLevelState| {
            for obs in observers.iter_mut() {
                if state.step % obs.stride().max(1) == 0 {
                    obs.observe(state.step, state.time(dt), state);
                }
            }
        };
        let (mut state, mut remaining) = match initial {
            InitialData::Single { omega, q } => {
                if omega.grid() != self.spectral.grid() {
                    return Err(Error::GridMismatch);
                }
                notify(observers, &TwoLevelState::initial(omega.clone(), q));
                let s = self.step_first_order(&omega, q)?;
                notify(observers, &s);
                (s, n_steps - 1)
            }
            InitialData::History(s) => {
                if s.omega.grid() != self.spectral.grid() {
                    return Err(Error::GridMismatch);
                }
                (s, n_steps)
            }
        };
        while remaining > 0 {
            state = self.step_bdf2(&state)?;
            notify(observers, &state);
            remaining -= 1;
        }
        Ok(state)
    }
}
