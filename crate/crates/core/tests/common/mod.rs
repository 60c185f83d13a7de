#![allow(dead_code)]

use rareflow::{run_estimator, DocOption, EngineConfig, GbmParams, Method, Result, StreamFactory};

pub const X0: f64 = 100.0;
pub const STRIKE: f64 = 100.0;
pub const BARRIER: f64 = 65.0;
pub const RATE: f64 = 0.1;
pub const SIGMA: f64 = 0.3;
pub const MATURITY: f64 = 0.5;
pub const TRUE_PRICE: f64 = 10.9064;

pub fn benchmark_params(n_t: usize) -> GbmParams<f64> {
    GbmParams::risk_neutral(X0, RATE, 0.0, SIGMA, MATURITY, n_t).unwrap()
}

pub fn benchmark_engine(n_s: usize, n_t: usize, barrier: f64) -> EngineConfig<f64> {
    let params = benchmark_params(n_t);
    let option = DocOption::new(STRIKE, barrier, &params).unwrap();
    let mut cfg = EngineConfig::new(params, option).unwrap();
    cfg.n_particles = n_s;
    cfg
}

/// `replications` estimates drawn from the streams `(seed, stream_method, l)`.
pub fn replicate(
    method: Method,
    stream_method: Method,
    cfg: &EngineConfig<f64>,
    seed: u64,
    replications: usize,
) -> Result<Vec<f64>> {
    (0..replications)
        .map(|l| run_estimator(method, cfg, &StreamFactory::new(seed, stream_method, l as u64)).map(|e| e.value))
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// `sqrt(sd_a^2 / n_a + sd_b^2 / n_b)`.
pub fn pooled_se(a: &[f64], b: &[f64]) -> f64 {
    (sample_sd(a).powi(2) / a.len() as f64 + sample_sd(b).powi(2) / b.len() as f64).sqrt()
}
