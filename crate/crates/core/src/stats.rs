//! Replication statistics: st. dev., RMSE, RRMSE, bias, relative error, FOM.
//!
//! Conventions: the standard deviation uses the `M_s - 1` denominator, RMSE
//! uses `1 / M_s`, so `rmse^2 = bias^2 + (M_s - 1) / M_s * st_dev^2`.

use crate::engines::Method;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn len<T: Real>(xs: &[T]) -> T {
    T::from_usize(xs.len()).expect("length fits the scalar type")
}

pub fn mean<T: Real>(estimates: &[T]) -> Result<T> {
    if estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    Ok(estimates.iter().copied().sum::<T>() / len(estimates))
}

/// Sample standard deviation; needs at least two estimates.
pub fn std_dev<T: Real>(estimates: &[T]) -> Result<T> {
    if estimates.len() < 2 {
        return Err(Error::TooFewEstimates {
            needed: 2,
            got: estimates.len(),
        });
    }
    let m = mean(estimates)?;
    let ss: T = estimates.iter().map(|&x| (x - m) * (x - m)).sum();
    Ok((ss / (len(estimates) - T::one())).sqrt())
}

/// `sqrt(mean((C - C_l)^2))`.
pub fn rmse<T: Real>(estimates: &[T], reference: T) -> Result<T> {
    if estimates.is_empty() {
        return Err(Error::EmptyEstimates);
    }
    let ss: T = estimates.iter().map(|&x| (reference - x) * (reference - x)).sum();
    Ok((ss / len(estimates)).sqrt())
}

/// `rmse / mean_estimate`.
pub fn rrmse<T: Real>(rmse_value: T, mean_estimate: T) -> Result<T> {
    if mean_estimate == T::zero() {
        return Err(Error::ZeroMean);
    }
    Ok(rmse_value / mean_estimate)
}

/// Relative error `R = st_dev / mean`.
pub fn rel_error<T: Real>(st_dev: T, mean_estimate: T) -> Result<T> {
    if mean_estimate == T::zero() {
        return Err(Error::ZeroMean);
    }
    Ok(st_dev / mean_estimate)
}

/// Figure of merit `1 / (R^2 * cpu_seconds)`.
pub fn fom<T: Real>(rel_error: T, cpu_seconds: T) -> Result<T> {
    if !(rel_error > T::zero()) {
        return Err(Error::invalid("rel_error", "must be positive"));
    }
    if !(cpu_seconds > T::zero()) {
        return Err(Error::invalid("cpu_seconds", "must be positive"));
    }
    Ok((rel_error * rel_error * cpu_seconds).recip())
}

/// `mean - C`.
pub fn bias<T: Real>(estimates: &[T], reference: T) -> Result<T> {
    Ok(mean(estimates)? - reference)
}

/// Summary of `M_s` replications of one estimator against a reference price.
///
/// Quantities that are undefined for the given inputs (st. dev. with a single
/// replication, ratios over a zero mean, FOM without timing) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<T> {
    pub method: Method,
    pub estimates: Vec<T>,
    pub cpu_seconds: Vec<f64>,
    pub reference: T,
    pub mean: T,
    pub st_dev: Option<T>,
    pub rmse: T,
    pub rrmse: Option<T>,
    /// `rmse / C` against the reference instead of the replication mean.
    pub rrmse_true: Option<T>,
    pub bias: T,
    pub rel_error: Option<T>,
    pub cpu_total: f64,
    pub fom: Option<T>,
}

impl<T: Real> RunReport<T> {
    pub fn new(method: Method, estimates: Vec<T>, cpu_seconds: Vec<f64>, reference: T) -> Result<Self> {
        if estimates.len() != cpu_seconds.len() {
            return Err(Error::invalid("cpu_seconds", "one timing per estimate required"));
        }
        let mean_value = mean(&estimates)?;
        let st_dev = std_dev(&estimates).ok();
        let rmse_value = rmse(&estimates, reference)?;
        let rel = st_dev.and_then(|sd| rel_error(sd, mean_value).ok());
        let cpu_total: f64 = cpu_seconds.iter().sum();
        let fom_value = rel.and_then(|r| fom(r, T::lit(cpu_total)).ok());
        Ok(Self {
            method,
            reference,
            mean: mean_value,
            st_dev,
            rmse: rmse_value,
            rrmse: rrmse(rmse_value, mean_value).ok(),
            rrmse_true: rrmse(rmse_value, reference).ok(),
            bias: mean_value - reference,
            rel_error: rel,
            cpu_total,
            fom: fom_value,
            estimates,
            cpu_seconds,
        })
    }

    pub fn replications(&self) -> usize {
        self.estimates.len()
    }

    /// Standard error of the mean, `st_dev / sqrt(M_s)`.
    pub fn std_error(&self) -> Option<T> {
        self.st_dev.map(|sd| sd / len(&self.estimates).sqrt())
    }
}
