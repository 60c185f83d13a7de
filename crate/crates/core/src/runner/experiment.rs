use thiserror::Error;

use super::config::ExperimentConfig;
use crate::engines::{run_estimator, Method};
use crate::error::Error as CoreError;
use crate::model::analytic_doc_price;
use crate::rng::StreamFactory;
use crate::stats::RunReport;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("reference price: {0}")]
    Reference(CoreError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub method: Method,
    pub index: usize,
    pub estimate: f64,
    pub cpu_seconds: f64,
    pub seed: u64,
    pub extinct: bool,
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: Method,
    pub replications: Vec<ReplicationRecord>,
    /// `Err` holds the first engine error; such a method is left out of the CSVs.
    pub outcome: Result<RunReport<f64>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub reference: f64,
    pub n_s: usize,
    pub n_t: usize,
    pub replications: usize,
    pub runs: Vec<MethodRun>,
}

impl ExperimentResult {
    pub fn successful(&self) -> impl Iterator<Item = &RunReport<f64>> {
        self.runs.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| r.outcome.is_err())
    }

    pub fn report(&self, method: Method) -> Option<&RunReport<f64>> {
        self.successful().find(|r| r.method == method)
    }
}

fn run_method(cfg: &ExperimentConfig, method: Method, reference: f64) -> MethodRun {
    let mut records = Vec::with_capacity(cfg.replications);
    for index in 0..cfg.replications {
        let streams = StreamFactory::new(cfg.master_seed, method, index as u64);
        match run_estimator(method, &cfg.engine, &streams) {
            Ok(est) => records.push(ReplicationRecord {
                method,
                index,
                estimate: est.value,
                cpu_seconds: if cfg.timing { est.cpu_seconds } else { 0.0 },
                seed: est.seed,
                extinct: est.extinct,
                acceptance_rate: est.acceptance_rate,
            }),
            Err(e) => {
                log::error!("{method} replication {index} failed: {e}");
                return MethodRun {
                    method,
                    replications: records,
                    outcome: Err(format!("replication {index}: {e}")),
                };
            }
        }
    }
    let estimates = records.iter().map(|r| r.estimate).collect();
    let cpu = records.iter().map(|r| r.cpu_seconds).collect();
    let outcome = RunReport::new(method, estimates, cpu, reference).map_err(|e| e.to_string());
    MethodRun {
        method,
        replications: records,
        outcome,
    }
}

/// Runs `replications` independent estimates per method.
///
/// Replication `l` of method `m` always draws from the streams keyed by
/// `(master_seed, m, l)`, so adding replications leaves earlier ones intact
/// and the worker count never changes a number.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, RunError> {
    let reference = analytic_doc_price(&cfg.engine.params, &cfg.engine.option).map_err(RunError::Reference)?;
    let body = || ExperimentResult {
        reference,
        n_s: cfg.engine.n_particles,
        n_t: cfg.engine.params.n_steps(),
        replications: cfg.replications,
        runs: cfg.methods.iter().map(|&m| run_method(cfg, m, reference)).collect(),
    };
    match cfg.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| RunError::Pool(e.to_string()))?;
            Ok(pool.install(body))
        }
        None => Ok(body()),
    }
}
