//! Geometric Brownian motion paths, the discretely monitored down-and-out
//! call payoff, and the closed-form prices used as reference values.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{norm_cdf, Real};

/// Broadie-Glasserman-Kou shift constant, `-zeta(1/2) / sqrt(2 pi)`.
pub const BARRIER_SHIFT: f64 = 0.5826;

/// Market and grid parameters of a GBM asset.
///
/// `dt` is derived from `maturity / n_steps` and cannot be set on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams<T> {
    x0: T,
    mu: T,
    r: T,
    q: T,
    sigma: T,
    maturity: T,
    n_steps: usize,
    dt: T,
    log_drift: T,
    log_vol: T,
}

impl<T: Real> GbmParams<T> {
    /// `sigma = 0` is accepted and yields deterministic paths.
    pub fn new(x0: T, mu: T, r: T, q: T, sigma: T, maturity: T, n_steps: usize) -> Result<Self> {
        if !(x0 > T::zero() && x0.is_finite()) {
            return Err(Error::invalid("x0", "must be positive and finite"));
        }
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be non-negative and finite"));
        }
        if !(maturity > T::zero() && maturity.is_finite()) {
            return Err(Error::invalid("maturity", "must be positive and finite"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be at least 1"));
        }
        for (name, v) in [("mu", mu), ("r", r), ("q", q)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        let n = T::from_usize(n_steps).ok_or_else(|| Error::invalid("n_steps", "too large"))?;
        let dt = maturity / n;
        let half = T::lit(0.5);
        Ok(Self {
            x0,
            mu,
            r,
            q,
            sigma,
            maturity,
            n_steps,
            dt,
            log_drift: (mu - half * sigma * sigma) * dt,
            log_vol: sigma * dt.sqrt(),
        })
    }

    /// Parameters with the pricing drift `mu = r - q`.
    pub fn risk_neutral(x0: T, r: T, q: T, sigma: T, maturity: T, n_steps: usize) -> Result<Self> {
        Self::new(x0, r - q, r, q, sigma, maturity, n_steps)
    }

    pub fn x0(&self) -> T {
        self.x0
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn r(&self) -> T {
        self.r
    }
    pub fn q(&self) -> T {
        self.q
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }
    pub fn maturity(&self) -> T {
        self.maturity
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    /// Mean of the one-step log increment, `(mu - sigma^2/2) dt`.
    pub fn log_drift(&self) -> T {
        self.log_drift
    }
    /// Standard deviation of the one-step log increment, `sigma sqrt(dt)`.
    pub fn log_vol(&self) -> T {
        self.log_vol
    }
    /// `exp(-r T)`.
    pub fn discount(&self) -> T {
        (-self.r * self.maturity).exp()
    }
}

/// Down-and-out call contract with its discretely-monitored barrier shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocOption<T> {
    strike: T,
    barrier: T,
    corrected_barrier: T,
}

impl<T: Real> DocOption<T> {
    /// A barrier at or above spot is allowed; such an option is knocked out
    /// at inception and every pricer returns zero for it.
    pub fn new(strike: T, barrier: T, params: &GbmParams<T>) -> Result<Self> {
        if !(strike > T::zero() && strike.is_finite()) {
            return Err(Error::invalid("strike", "must be positive and finite"));
        }
        if !(barrier >= T::zero() && barrier.is_finite()) {
            return Err(Error::invalid("barrier", "must be non-negative and finite"));
        }
        Ok(Self {
            strike,
            barrier,
            corrected_barrier: corrected_barrier(barrier, params.sigma(), params.dt()),
        })
    }

    pub fn strike(&self) -> T {
        self.strike
    }
    pub fn barrier(&self) -> T {
        self.barrier
    }
    pub fn corrected_barrier(&self) -> T {
        self.corrected_barrier
    }
}

/// Asset prices on the monitoring grid; `values[0]` is the spot.
#[derive(Debug, Clone, PartialEq)]
pub struct Path<T> {
    pub values: Vec<T>,
}

impl<T: Real> Path<T> {
    pub fn terminal(&self) -> T {
        *self.values.last().expect("path has at least the spot value")
    }
}

/// One exact GBM step: `x_prev * exp((mu - sigma^2/2) dt + sigma sqrt(dt) eps)`.
#[inline]
pub fn exact_step<T: Real>(x_prev: T, params: &GbmParams<T>, eps: T) -> Result<T> {
    if !eps.is_finite() {
        return Err(Error::InvalidNormalDraw(eps.to_f64_lossy()));
    }
    Ok(x_prev * (params.log_drift + params.log_vol * eps).exp())
}

/// Draws `n_steps` standard normals from `rng`, in grid order.
pub fn simulate_path<T: Real, R: Rng + ?Sized>(params: &GbmParams<T>, rng: &mut R) -> Result<Path<T>> {
    let mut values = Vec::with_capacity(params.n_steps + 1);
    let mut x = params.x0;
    values.push(x);
    for _ in 0..params.n_steps {
        let eps: f64 = rng.sample(StandardNormal);
        x = exact_step(x, params, T::lit(eps))?;
        values.push(x);
    }
    Ok(Path { values })
}

/// Log of the one-step lognormal transition density from `x_prev` to `x`.
pub fn lognormal_transition_logpdf<T: Real>(x: T, x_prev: T, params: &GbmParams<T>) -> Result<T> {
    if !(params.sigma > T::zero() && params.dt > T::zero()) {
        return Err(Error::DegenerateDensity {
            sigma: params.sigma.to_f64_lossy(),
            dt: params.dt.to_f64_lossy(),
        });
    }
    if !(x > T::zero()) {
        return Err(Error::OutsideSupport(x.to_f64_lossy()));
    }
    if !(x_prev > T::zero()) {
        return Err(Error::OutsideSupport(x_prev.to_f64_lossy()));
    }
    let s = params.log_vol;
    let z = (x / x_prev).ln() - params.log_drift;
    Ok(-(x * s * T::TAU().sqrt()).ln() - z * z / (T::lit(2.0) * s * s))
}

/// Continuity-corrected barrier `B exp(-0.5826 sigma sqrt(dt))`.
pub fn corrected_barrier<T: Real>(barrier: T, sigma: T, dt: T) -> T {
    barrier * (-T::lit(BARRIER_SHIFT) * sigma * dt.sqrt()).exp()
}

/// True iff every monitored value `values[1..]` stays strictly above `b_adj`.
pub fn survival_indicator<T: Real>(path: &Path<T>, b_adj: T) -> bool {
    path.values.iter().skip(1).all(|&x| x > b_adj)
}

#[inline]
pub fn payoff<T: Real>(x_t: T, strike: T) -> T {
    (x_t - strike).max(T::zero())
}

/// Black-Scholes European call with continuous dividend yield `q`.
pub fn vanilla_bs_price<T: Real>(params: &GbmParams<T>, strike: T) -> T {
    let (s, r, q, t, sigma) = (params.x0, params.r, params.q, params.maturity, params.sigma);
    let fwd_disc = (-q * t).exp();
    let disc = (-r * t).exp();
    if strike <= T::zero() {
        return s * fwd_disc;
    }
    let vol = sigma * t.sqrt();
    if vol <= T::zero() {
        return (s * fwd_disc - strike * disc).max(T::zero());
    }
    let d1 = ((s / strike).ln() + (r - q + T::lit(0.5) * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    s * fwd_disc * norm_cdf(d1) - strike * disc * norm_cdf(d2)
}

/// Continuous-barrier down-and-out call evaluated at the corrected barrier.
///
/// Only the `B_adj < K` branch of the closed form is provided.
pub fn analytic_doc_price<T: Real>(params: &GbmParams<T>, option: &DocOption<T>) -> Result<T> {
    let b = option.corrected_barrier;
    let k = option.strike;
    let s = params.x0;
    if b >= s {
        log::warn!("knocked out at inception: corrected barrier {b} >= spot {s}");
        return Ok(T::zero());
    }
    if b >= k {
        return Err(Error::BarrierAboveStrike {
            barrier: b.to_f64_lossy(),
            strike: k.to_f64_lossy(),
        });
    }
    let vanilla = vanilla_bs_price(params, k);
    if b <= T::zero() {
        return Ok(vanilla);
    }
    let (r, q, t, sigma) = (params.r, params.q, params.maturity, params.sigma);
    if sigma <= T::zero() {
        // Deterministic exponential path: its minimum is at one of the ends.
        let terminal = s * ((r - q) * t).exp();
        return Ok(if terminal.min(s) > b { vanilla } else { T::zero() });
    }
    let vol = sigma * t.sqrt();
    let lambda = (r - q + T::lit(0.5) * sigma * sigma) / (sigma * sigma);
    let two = T::lit(2.0);
    let y = (b * b / (s * k)).ln() / vol + lambda * vol;
    let ratio = b / s;
    let knock_in = s * (-q * t).exp() * ratio.powf(two * lambda) * norm_cdf(y)
        - k * (-r * t).exp() * ratio.powf(two * lambda - two) * norm_cdf(y - vol);
    Ok((vanilla - knock_in).max(T::zero()))
}
