//! Plain Monte Carlo, interacting particle system and Hamiltonian flow Monte
//! Carlo estimators of the discounted down-and-out call price.
//!
//! Every particle (or path) `m` draws from its own stream
//! `streams.particle(m)`; resampling at step `n` draws from
//! `streams.auxiliary(n)`. Parallel maps collect per-particle results in index
//! order and all sums run sequentially over that order, so estimates do not
//! depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{rare_event_transition, FlowConfig, Tempering};
use crate::model::{exact_step, payoff, simulate_path, survival_indicator, DocOption, GbmParams};
use crate::potential::{MassMatrix, TransitionPotential};
use crate::rng::StreamFactory;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mc,
    Ips,
    Hfmc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mc, Method::Ips, Method::Hfmc];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Mc => "MC",
            Method::Ips => "IPS",
            Method::Hfmc => "HFMC",
        }
    }

    pub(crate) fn stream_tag(&self) -> u64 {
        match self {
            Method::Mc => 0x4d43,
            Method::Ips => 0x495053,
            Method::Hfmc => 0x48464d43,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" => Ok(Method::Mc),
            "ips" | "pmc" => Ok(Method::Ips),
            "hfmc" => Ok(Method::Hfmc),
            other => Err(format!("unknown method `{other}` (expected mc, ips or hfmc)")),
        }
    }
}

/// How HFMC combines the per-step energy changes into the payoff weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Payoff times `prod_n exp((H_n - H_{n+1}) * scale)` over accepted moves.
    #[default]
    Weighted,
    /// Plain survival-indicator average.
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig<T> {
    pub params: GbmParams<T>,
    pub option: DocOption<T>,
    pub n_particles: usize,
    /// Exponential tilting parameter of the IPS potential.
    pub tilt: T,
    pub flow: FlowConfig<T>,
    /// Inverse temperature of the HFMC potential.
    pub beta: T,
    pub weighting: Weighting,
    pub resampling: Resampling,
    pub seed: u64,
}

impl<T: Real> EngineConfig<T> {
    /// Defaults: 10 000 particles, tilt 1e-4, 35 leapfrog steps of 1e-4,
    /// unit mass, dt-scaled tempering, weighted HFMC, multinomial resampling.
    pub fn new(params: GbmParams<T>, option: DocOption<T>) -> Result<Self> {
        let flow = FlowConfig::new(
            T::lit(1e-4),
            35,
            MassMatrix::default(),
            Tempering::DtScaled,
            params.dt(),
        )?;
        Ok(Self {
            params,
            option,
            n_particles: 10_000,
            tilt: T::lit(1e-4),
            flow,
            beta: T::one(),
            weighting: Weighting::Weighted,
            resampling: Resampling::Multinomial,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::invalid("n_s", "must be at least 1"));
        }
        if !self.tilt.is_finite() {
            return Err(Error::invalid("tilt", "must be finite"));
        }
        if !(self.beta > T::zero() && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be positive and finite"));
        }
        if self.flow.tempering() == Tempering::DtScaled {
            let dt = self.params.dt();
            if (self.flow.dt() - dt).abs() > T::lit(1e-9) * dt {
                return Err(Error::invalid(
                    "dt",
                    "flow tempering step differs from the SDE grid step",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub n_alive_terminal: usize,
    pub cpu_seconds: f64,
    /// Replication stream digest.
    pub seed: u64,
    /// Every particle was killed at some step; `value` is zero.
    pub extinct: bool,
    /// HFMC: mean Metropolis-Hastings acceptance probability.
    pub acceptance_rate: Option<T>,
    /// IPS: self-normalised (ratio) form of the estimate, as a diagnostic.
    pub ratio_form: Option<T>,
}

/// Particle positions, unnormalised weights and alive flags at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T> {
    pub positions: Vec<T>,
    pub weights: Vec<T>,
    pub alive: Vec<bool>,
}

impl<T: Real> ParticleEnsemble<T> {
    pub fn new(positions: Vec<T>) -> Self {
        let n = positions.len();
        Self {
            positions,
            weights: vec![T::one(); n],
            alive: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn kill(&mut self, i: usize) {
        self.alive[i] = false;
        self.weights[i] = T::zero();
    }
}

/// `exp(tilt * (x_n - x_prev))`.
#[inline]
pub fn tilted_weight<T: Real>(x_n: T, x_prev: T, tilt: T) -> Result<T> {
    let exponent = tilt * (x_n - x_prev);
    let w = exponent.exp();
    if !w.is_finite() {
        return Err(Error::TiltOverflow(exponent.to_f64_lossy()));
    }
    Ok(w)
}

/// `W_i = w_i / mean(w)`, so that the normalised weights sum to `n`.
pub fn normalize_weights<T: Real>(weights: &[T]) -> Result<Vec<T>> {
    let sum: T = weights.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(Error::Extinction);
    }
    let mean = sum / T::from_usize(weights.len()).expect("particle count fits the scalar type");
    Ok(weights.iter().map(|&w| w / mean).collect())
}

fn cumulative_probabilities<T: Real>(normalized: &[T]) -> Result<(Vec<f64>, usize)> {
    let n = normalized.len() as f64;
    let mut acc = 0.0;
    let mut last_positive = None;
    let cumulative = normalized
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let w = w.to_f64_lossy();
            if w > 0.0 {
                last_positive = Some(i);
            }
            acc += w / n;
            acc
        })
        .collect();
    last_positive.map(|last| (cumulative, last)).ok_or(Error::Extinction)
}

/// Walks sorted points in `(0, 1)` through the cumulative weights.
fn merge_sorted(points: impl Iterator<Item = f64>, cumulative: &[f64], last_positive: usize) -> Vec<usize> {
    let mut j = 0;
    points
        .map(|u| {
            while j < last_positive && u >= cumulative[j] {
                j += 1;
            }
            j
        })
        .collect()
}

/// Ancestor indices of `n` i.i.d. categorical draws with probabilities `W_i / n`.
///
/// Sorted uniforms come from normalised exponential spacings, which makes the
/// draw a single O(n) merge with the cumulative weights.
pub fn multinomial_indices<T: Real, R: Rng + ?Sized>(normalized: &[T], rng: &mut R) -> Result<Vec<usize>> {
    let (cumulative, last) = cumulative_probabilities(normalized)?;
    let n = normalized.len();
    let spacings: Vec<f64> = (0..=n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = spacings.iter().sum();
    let mut running = 0.0;
    let points = spacings[..n].iter().map(|e| {
        running += e;
        running / total
    });
    Ok(merge_sorted(points, &cumulative, last))
}

/// Ancestor indices from one uniform offset on the stratified grid `(k + u) / n`.
pub fn systematic_indices<T: Real, R: Rng + ?Sized>(normalized: &[T], rng: &mut R) -> Result<Vec<usize>> {
    let (cumulative, last) = cumulative_probabilities(normalized)?;
    let n = normalized.len();
    let u: f64 = rng.random();
    let points = (0..n).map(|k| (k as f64 + u) / n as f64);
    Ok(merge_sorted(points, &cumulative, last))
}

fn gather<T: Copy>(values: &[T], indices: &[usize]) -> Vec<T> {
    indices.iter().map(|&i| values[i]).collect()
}

fn resampled<T: Real>(ensemble: &ParticleEnsemble<T>, indices: &[usize]) -> ParticleEnsemble<T> {
    ParticleEnsemble::new(gather(&ensemble.positions, indices))
}

/// Draws `n` particles with replacement, particle `i` with probability
/// `W_i / n`; output weights are reset to one.
pub fn multinomial_resample<T: Real, R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble<T>,
    normalized: &[T],
    rng: &mut R,
) -> Result<ParticleEnsemble<T>> {
    Ok(resampled(ensemble, &multinomial_indices(normalized, rng)?))
}

pub fn systematic_resample<T: Real, R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble<T>,
    normalized: &[T],
    rng: &mut R,
) -> Result<ParticleEnsemble<T>> {
    Ok(resampled(ensemble, &systematic_indices(normalized, rng)?))
}

fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count fits the scalar type")
}

#[inline]
fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn mc_estimate<T: Real>(cfg: &EngineConfig<T>, streams: &StreamFactory) -> Result<Estimate<T>> {
    let start = Instant::now();
    cfg.validate()?;
    let b_adj = cfg.option.corrected_barrier();
    let strike = cfg.option.strike();

    let paths: Vec<Option<T>> = (0..cfg.n_particles)
        .into_par_iter()
        .map(|m| {
            let mut rng = streams.particle(m as u64);
            let path = simulate_path(&cfg.params, &mut rng)?;
            Ok(survival_indicator(&path, b_adj).then(|| payoff(path.terminal(), strike)))
        })
        .collect::<Result<_>>()?;

    let n_alive = paths.iter().flatten().count();
    let sum: T = paths.iter().flatten().copied().sum();
    let value = cfg.params.discount() * sum / count(cfg.n_particles);
    Ok(Estimate {
        value,
        n_alive_terminal: n_alive,
        cpu_seconds: start.elapsed().as_secs_f64(),
        seed: streams.replication_seed(),
        extinct: n_alive == 0,
        acceptance_rate: None,
        ratio_form: None,
    })
}

struct Mutated<T> {
    position: T,
    weight: T,
    log_tilt: T,
}

/// Interacting particle system with exponential tilting.
///
/// Per step: mutate every particle by one exact GBM step, kill those at or
/// below the corrected barrier, weight survivors by
/// `exp(tilt * (x_n - x_{n-1}))`, record `eta_n = mean(weight)` and, before
/// the last step, resample multinomially. The returned value is
///
/// `exp(-rT) * prod_{n < n_t} eta_n * mean_m(w_m * payoff_m * exp(-log_tilt_m))`
///
/// where `log_tilt_m` is the accumulated tilt exponent along the particle's
/// ancestral line, which undoes the tilting and keeps the estimator unbiased.
pub fn ips_estimate<T: Real>(cfg: &EngineConfig<T>, streams: &StreamFactory) -> Result<Estimate<T>> {
    let start = Instant::now();
    cfg.validate()?;
    let params = &cfg.params;
    let b_adj = cfg.option.corrected_barrier();
    let n = cfg.n_particles;
    let tilt = cfg.tilt;

    let mut positions = vec![params.x0(); n];
    let mut log_tilts = vec![T::zero(); n];
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|m| streams.particle(m as u64)).collect();
    let mut log_normalizer = T::zero();

    let extinct = |start: Instant| Estimate {
        value: T::zero(),
        n_alive_terminal: 0,
        cpu_seconds: start.elapsed().as_secs_f64(),
        seed: streams.replication_seed(),
        extinct: true,
        acceptance_rate: None,
        ratio_form: None,
    };

    for step in 1..=params.n_steps() {
        let mutated: Vec<Mutated<T>> = positions
            .par_iter()
            .zip(log_tilts.par_iter())
            .zip(rngs.par_iter_mut())
            .map(|((&x, &log_tilt), rng)| {
                let x_new = exact_step(x, params, normal(rng))?;
                if x_new > b_adj {
                    Ok(Mutated {
                        position: x_new,
                        weight: tilted_weight(x_new, x, tilt)?,
                        log_tilt: log_tilt + tilt * (x_new - x),
                    })
                } else {
                    Ok(Mutated {
                        position: x_new,
                        weight: T::zero(),
                        log_tilt,
                    })
                }
            })
            .collect::<Result<_>>()?;

        let weights: Vec<T> = mutated.iter().map(|p| p.weight).collect();
        let normalized = match normalize_weights(&weights) {
            Ok(w) => w,
            Err(Error::Extinction) => return Ok(extinct(start)),
            Err(e) => return Err(e),
        };

        if step < params.n_steps() {
            let eta = weights.iter().copied().sum::<T>() / count(n);
            log_normalizer = log_normalizer + eta.ln();
            let mut rng = streams.auxiliary(step as u64);
            let ancestors = match cfg.resampling {
                Resampling::Multinomial => multinomial_indices(&normalized, &mut rng)?,
                Resampling::Systematic => systematic_indices(&normalized, &mut rng)?,
            };
            positions = ancestors.iter().map(|&i| mutated[i].position).collect();
            log_tilts = ancestors.iter().map(|&i| mutated[i].log_tilt).collect();
        } else {
            let strike = cfg.option.strike();
            let disc = params.discount();
            let terms: Vec<T> = mutated
                .iter()
                .map(|p| p.weight * payoff(p.position, strike) * (-p.log_tilt).exp())
                .collect();
            let value = disc * log_normalizer.exp() * terms.iter().copied().sum::<T>() / count(n);
            let ratio = disc
                * mutated
                    .iter()
                    .zip(&normalized)
                    .map(|(p, &w)| w * payoff(p.position, strike))
                    .sum::<T>()
                / count(n);
            return Ok(Estimate {
                value,
                n_alive_terminal: weights.iter().filter(|&&w| w > T::zero()).count(),
                cpu_seconds: start.elapsed().as_secs_f64(),
                seed: streams.replication_seed(),
                extinct: false,
                acceptance_rate: None,
                ratio_form: Some(ratio),
            });
        }
    }
    unreachable!("n_steps >= 1 guarantees a terminal step")
}

struct HfmcParticle<T> {
    contribution: T,
    alive: bool,
    alpha_sum: T,
    transitions: usize,
}

/// Hamiltonian flow Monte Carlo restricted to the survival set.
///
/// Per particle and step: propose `x~` by an exact GBM step from the current
/// value `x_n`; kill the particle if `x~` is at or below the corrected barrier;
/// otherwise run the rare-event HMC kernel from `x~` under the potential of
/// the transition density conditioned on `x_n`, and take its output as
/// `x_{n+1}`.
pub fn hfmc_estimate<T: Real>(cfg: &EngineConfig<T>, streams: &StreamFactory) -> Result<Estimate<T>> {
    let start = Instant::now();
    cfg.validate()?;
    let params = &cfg.params;
    if !(params.sigma() > T::zero()) {
        return Err(Error::DegeneratePotential);
    }
    let b_adj = cfg.option.corrected_barrier();
    let strike = cfg.option.strike();
    let flow = &cfg.flow;
    let scale = flow.energy_scale();
    let weighted = cfg.weighting == Weighting::Weighted;

    let particles: Vec<HfmcParticle<T>> = (0..cfg.n_particles)
        .into_par_iter()
        .map(|m| {
            let mut rng = streams.particle(m as u64);
            let mut x = params.x0();
            let mut log_weight = T::zero();
            let mut alpha_sum = T::zero();
            let mut transitions = 0;
            for _ in 0..params.n_steps() {
                let prior = exact_step(x, params, normal(&mut rng))?;
                if !(prior > b_adj) {
                    return Ok(HfmcParticle {
                        contribution: T::zero(),
                        alive: false,
                        alpha_sum,
                        transitions,
                    });
                }
                let potential = TransitionPotential::new(x, params)?.with_beta(cfg.beta)?;
                let outcome = rare_event_transition(prior, flow, &potential, b_adj, &mut rng)?;
                alpha_sum = alpha_sum + outcome.alpha;
                transitions += 1;
                if weighted && outcome.accepted {
                    log_weight = log_weight - outcome.delta_h * scale;
                }
                x = outcome.state.x;
            }
            Ok(HfmcParticle {
                contribution: payoff(x, strike) * log_weight.exp(),
                alive: true,
                alpha_sum,
                transitions,
            })
        })
        .collect::<Result<_>>()?;

    let n_alive = particles.iter().filter(|p| p.alive).count();
    let sum: T = particles.iter().map(|p| p.contribution).sum();
    let transitions: usize = particles.iter().map(|p| p.transitions).sum();
    let alpha_sum: T = particles.iter().map(|p| p.alpha_sum).sum();
    Ok(Estimate {
        value: params.discount() * sum / count(cfg.n_particles),
        n_alive_terminal: n_alive,
        cpu_seconds: start.elapsed().as_secs_f64(),
        seed: streams.replication_seed(),
        extinct: n_alive == 0,
        acceptance_rate: (transitions > 0).then(|| alpha_sum / count(transitions)),
        ratio_form: None,
    })
}

pub fn run_estimator<T: Real>(method: Method, cfg: &EngineConfig<T>, streams: &StreamFactory) -> Result<Estimate<T>> {
    match method {
        Method::Mc => mc_estimate(cfg, streams),
        Method::Ips => ips_estimate(cfg, streams),
        Method::Hfmc => hfmc_estimate(cfg, streams),
    }
}
