//! Leapfrog integration of Hamilton's equations and the Metropolis-corrected
//! transition kernels built on it.
//!
//! Draw order inside [`hmc_transition`] is fixed: one standard normal for the
//! momentum, then one uniform for the accept test. The uniform is consumed
//! even when the trajectory leaves the support, so a particle stream stays
//! aligned regardless of the outcome.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::potential::{hamiltonian, MassMatrix, Potential};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState<T> {
    pub x: T,
    pub p: T,
}

impl<T: Real> PhaseState<T> {
    pub fn new(x: T, p: T) -> Self {
        Self { x, p }
    }

    pub fn flip_momentum(self) -> Self {
        Self { x: self.x, p: -self.p }
    }
}

/// Scaling of the energy difference in the acceptance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tempering {
    /// `exp((H_old - H_new) dt)` with `dt` the SDE grid step.
    #[default]
    DtScaled,
    /// `exp(H_old - H_new)`, the standard HMC ratio.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig<T> {
    step_size: T,
    n_steps: usize,
    mass: MassMatrix<T>,
    tempering: Tempering,
    dt: T,
}

impl<T: Real> FlowConfig<T> {
    pub fn new(step_size: T, n_steps: usize, mass: MassMatrix<T>, tempering: Tempering, dt: T) -> Result<Self> {
        if !(step_size > T::zero() && step_size.is_finite()) {
            return Err(Error::invalid("leapfrog_delta", "must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("leapfrog_steps", "must be at least 1"));
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        Ok(Self {
            step_size,
            n_steps,
            mass,
            tempering,
            dt,
        })
    }

    /// Unit mass, unit tempering; `dt` is irrelevant and set to one.
    pub fn unit(step_size: T, n_steps: usize) -> Result<Self> {
        Self::new(step_size, n_steps, MassMatrix::default(), Tempering::Unit, T::one())
    }

    pub fn step_size(&self) -> T {
        self.step_size
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn mass(&self) -> &MassMatrix<T> {
        &self.mass
    }
    pub fn tempering(&self) -> Tempering {
        self.tempering
    }
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn with_dt(mut self, dt: T) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_tempering(mut self, tempering: Tempering) -> Self {
        self.tempering = tempering;
        self
    }

    /// Multiplier applied to `H_old - H_new` in the acceptance exponent.
    pub fn energy_scale(&self) -> T {
        match self.tempering {
            Tempering::DtScaled => self.dt,
            Tempering::Unit => T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOutcome<T> {
    pub state: PhaseState<T>,
    pub accepted: bool,
    pub alpha: T,
    /// `H(proposal) - H(start)`; infinite when the trajectory left the support.
    pub delta_h: T,
}

#[inline]
fn kick_drift_kick<T: Real, P: Potential<T> + ?Sized>(
    s: PhaseState<T>,
    grad_x: T,
    step_size: T,
    inv_mass: T,
    potential: &P,
) -> Result<(PhaseState<T>, T)> {
    let half = T::lit(0.5) * step_size;
    let p_half = s.p - half * grad_x;
    let x_new = s.x + step_size * p_half * inv_mass;
    if !(x_new.is_finite() && potential.in_support(x_new)) {
        return Err(Error::LeftSupport(x_new.to_f64_lossy()));
    }
    let grad_new = potential.gradient(x_new)?;
    Ok((PhaseState::new(x_new, p_half - half * grad_new), grad_new))
}

/// One kick-drift-kick update of size `step_size`.
pub fn leapfrog_step<T: Real, P: Potential<T> + ?Sized>(
    s: PhaseState<T>,
    step_size: T,
    mass: &MassMatrix<T>,
    potential: &P,
) -> Result<PhaseState<T>> {
    if !potential.in_support(s.x) {
        return Err(Error::OutsideSupport(s.x.to_f64_lossy()));
    }
    let grad = potential.gradient(s.x)?;
    kick_drift_kick(s, grad, step_size, mass.inverse(), potential).map(|(next, _)| next)
}

/// `n_steps` leapfrog updates; bit-identical to calling [`leapfrog_step`]
/// repeatedly, with the shared gradient evaluated once per step.
pub fn flow<T: Real, P: Potential<T> + ?Sized>(
    s: PhaseState<T>,
    cfg: &FlowConfig<T>,
    potential: &P,
) -> Result<PhaseState<T>> {
    if !potential.in_support(s.x) {
        return Err(Error::OutsideSupport(s.x.to_f64_lossy()));
    }
    let inv_mass = cfg.mass.inverse();
    let mut grad = potential.gradient(s.x)?;
    let mut state = s;
    for _ in 0..cfg.n_steps {
        let (next, g) = kick_drift_kick(state, grad, cfg.step_size, inv_mass, potential)?;
        state = next;
        grad = g;
    }
    Ok(state)
}

/// `min(1, exp((H_old - H_new) * scale))`; zero for non-finite energies.
pub fn mh_accept_prob<T: Real>(h_old: T, h_new: T, cfg: &FlowConfig<T>) -> T {
    if !(h_old.is_finite() && h_new.is_finite()) {
        return T::zero();
    }
    let log_ratio = (h_old - h_new) * cfg.energy_scale();
    if log_ratio >= T::zero() {
        T::one()
    } else {
        log_ratio.exp()
    }
}

/// Fresh momentum, leapfrog proposal, Metropolis-Hastings test.
pub fn hmc_transition<T: Real, P: Potential<T> + ?Sized, R: Rng + ?Sized>(
    x: T,
    cfg: &FlowConfig<T>,
    potential: &P,
    rng: &mut R,
) -> Result<KernelOutcome<T>> {
    if !potential.in_support(x) {
        return Err(Error::OutsideSupport(x.to_f64_lossy()));
    }
    let z: f64 = rng.sample(StandardNormal);
    let p0 = cfg.mass.value().sqrt() * T::lit(z);
    let start = PhaseState::new(x, p0);
    let h_old = hamiltonian(x, p0, potential, &cfg.mass)?;
    let proposal = flow(start, cfg, potential);
    let u = T::lit(rng.random::<f64>());

    match proposal {
        Ok(end) => {
            let h_new = hamiltonian(end.x, end.p, potential, &cfg.mass)?;
            let alpha = mh_accept_prob(h_old, h_new, cfg);
            let accepted = u < alpha;
            Ok(KernelOutcome {
                state: if accepted { end } else { start },
                accepted,
                alpha,
                delta_h: h_new - h_old,
            })
        }
        Err(Error::LeftSupport(_)) => Ok(KernelOutcome {
            state: start,
            accepted: false,
            alpha: T::zero(),
            delta_h: T::infinity(),
        }),
        Err(e) => Err(e),
    }
}

/// HMC transition restricted to the survival set `x > b_adj`: an accepted
/// proposal at or below the barrier is replaced by the starting position.
pub fn rare_event_transition<T: Real, P: Potential<T> + ?Sized, R: Rng + ?Sized>(
    x: T,
    cfg: &FlowConfig<T>,
    potential: &P,
    b_adj: T,
    rng: &mut R,
) -> Result<KernelOutcome<T>> {
    if !(x > b_adj) {
        return Err(Error::DeadState {
            x: x.to_f64_lossy(),
            barrier: b_adj.to_f64_lossy(),
        });
    }
    let mut outcome = hmc_transition(x, cfg, potential, rng)?;
    if outcome.accepted && !(outcome.state.x > b_adj) {
        outcome.state.x = x;
        outcome.accepted = false;
    }
    Ok(outcome)
}
