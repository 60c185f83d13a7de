//! Potential energy `psi = -log p`, its gradient and the Hamiltonian.

use crate::error::{Error, Result};
use crate::model::GbmParams;
use crate::scalar::Real;

/// A potential energy on a one-dimensional position space.
///
/// `energy` and `gradient` are what the integrator sees; implementations may
/// scale them (inverse temperature) relative to the raw `-log p`.
pub trait Potential<T: Real> {
    fn energy(&self, x: T) -> Result<T>;
    fn gradient(&self, x: T) -> Result<T>;
    fn in_support(&self, _x: T) -> bool {
        true
    }
}

/// Negative log of the one-step lognormal transition density, conditioned on
/// the previous grid value `x_prev`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPotential<T> {
    x_prev: T,
    log_drift: T,
    log_var: T,
    beta: T,
    ln_x_prev: T,
    ln_norm: T,
}

impl<T: Real> TransitionPotential<T> {
    pub fn new(x_prev: T, params: &GbmParams<T>) -> Result<Self> {
        let log_var = params.log_vol() * params.log_vol();
        if !(log_var > T::zero()) {
            return Err(Error::DegeneratePotential);
        }
        Self::from_moments(x_prev, params.log_drift(), log_var)
    }

    /// Potential for log-increments with mean `log_drift` and variance `log_var`.
    pub fn from_moments(x_prev: T, log_drift: T, log_var: T) -> Result<Self> {
        if !(log_var > T::zero() && log_var.is_finite()) {
            return Err(Error::DegeneratePotential);
        }
        if !(x_prev > T::zero() && x_prev.is_finite()) {
            return Err(Error::OutsideSupport(x_prev.to_f64_lossy()));
        }
        Ok(Self {
            x_prev,
            log_drift,
            log_var,
            beta: T::one(),
            ln_x_prev: x_prev.ln(),
            ln_norm: T::lit(0.5) * (T::TAU() * log_var).ln(),
        })
    }

    /// Inverse temperature applied to `energy` and `gradient`.
    pub fn with_beta(mut self, beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive and finite"));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn x_prev(&self) -> T {
        self.x_prev
    }
    pub fn log_drift(&self) -> T {
        self.log_drift
    }
    pub fn log_var(&self) -> T {
        self.log_var
    }
    pub fn beta(&self) -> T {
        self.beta
    }

    /// Position of the log-mode `x_prev * exp(m)`.
    pub fn log_mode(&self) -> T {
        self.x_prev * self.log_drift.exp()
    }
}

/// `ln x + ln sqrt(2 pi s2) + (ln(x / x_prev) - m)^2 / (2 s2)`; ignores beta.
#[inline]
pub fn psi<T: Real>(x: T, tp: &TransitionPotential<T>) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::OutsideSupport(x.to_f64_lossy()));
    }
    let ln_x = x.ln();
    let z = ln_x - tp.ln_x_prev - tp.log_drift;
    Ok(ln_x + tp.ln_norm + z * z / (T::lit(2.0) * tp.log_var))
}

/// `1/x + (ln(x / x_prev) - m) / (s2 x)`; ignores beta.
#[inline]
pub fn grad_psi<T: Real>(x: T, tp: &TransitionPotential<T>) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::OutsideSupport(x.to_f64_lossy()));
    }
    let z = x.ln() - tp.ln_x_prev - tp.log_drift;
    Ok((T::one() + z / tp.log_var) / x)
}

impl<T: Real> Potential<T> for TransitionPotential<T> {
    #[inline]
    fn energy(&self, x: T) -> Result<T> {
        Ok(self.beta * psi(x, self)?)
    }
    #[inline]
    fn gradient(&self, x: T) -> Result<T> {
        Ok(self.beta * grad_psi(x, self)?)
    }
    #[inline]
    fn in_support(&self, x: T) -> bool {
        x > T::zero()
    }
}

/// `psi(x) = x^2 / 2` on the whole real line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StandardGaussianPotential;

impl<T: Real> Potential<T> for StandardGaussianPotential {
    fn energy(&self, x: T) -> Result<T> {
        Ok(T::lit(0.5) * x * x)
    }
    fn gradient(&self, x: T) -> Result<T> {
        Ok(x)
    }
}

/// Diagonal mass, the same value on every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassMatrix<T>(T);

impl<T: Real> MassMatrix<T> {
    pub fn new(mass: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::invalid("mass", "must be positive and finite"));
        }
        Ok(Self(mass))
    }
    pub fn value(&self) -> T {
        self.0
    }
    pub fn inverse(&self) -> T {
        self.0.recip()
    }
    pub fn kinetic(&self, p: T) -> T {
        T::lit(0.5) * p * p / self.0
    }
}

impl<T: Real> Default for MassMatrix<T> {
    fn default() -> Self {
        Self(T::one())
    }
}

/// `H(x, p) = p^2 / (2 m) + psi(x)`.
#[inline]
pub fn hamiltonian<T: Real, P: Potential<T> + ?Sized>(x: T, p: T, potential: &P, mass: &MassMatrix<T>) -> Result<T> {
    Ok(mass.kinetic(p) + potential.energy(x)?)
}
