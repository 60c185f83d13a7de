//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! The desk-scale experiment table is archived under `CARGO_TARGET_TMPDIR`.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::*;
use rareflow::runner::{self, load_config, run_experiment, ExperimentResult, Overrides};
use rareflow::stats;
use rareflow::{
    analytic_doc_price, flow, grad_psi, hamiltonian, hmc_transition, psi, FlowConfig, GbmParams, MassMatrix, Method,
    PhaseState, Potential, StandardGaussianPotential, TransitionPotential, Weighting,
};

const ANALYTIC_TOL: f64 = 0.002;
const CONSISTENCY_SE: f64 = 3.0;
const SD_RATIO_MAX: f64 = 2.0;
const EQUIVALENCE_SE: f64 = 3.0;
const REVERSIBILITY_TOL: f64 = 1e-10;
const JACOBIAN_TOL: f64 = 1e-6;
const ENERGY_RATIO: (f64, f64) = (3.0, 5.0);
const STATIONARY_MEAN: f64 = 0.05;
const STATIONARY_VAR: (f64, f64) = (0.95, 1.05);
const GRADIENT_TOL: f64 = 1e-6;
const SCALING_TOL: f64 = 0.3;
const IDENTITY_TOL: f64 = 1e-12;
const FOM_TOL: f64 = 0.01;

const SEED: u64 = 20180601;
const TOY: StandardGaussianPotential = StandardGaussianPotential;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/benchmark.toml")
}

fn archive_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn analytic() -> Outcome {
    let cfg = benchmark_engine(1, 750, BARRIER);
    let c = analytic_doc_price(&cfg.params, &cfg.option).unwrap();
    outcome(
        (c - TRUE_PRICE).abs() <= ANALYTIC_TOL,
        format!("C = {c:.6}, target {TRUE_PRICE} +/- {ANALYTIC_TOL}"),
    )
}

fn desk_experiment() -> Result<ExperimentResult, String> {
    let mut o = Overrides::new();
    o.set("desk_scale", true).set("seed", SEED.to_string());
    let cfg = load_config(Some(&config_path()), &o).map_err(|e| e.to_string())?;
    run_experiment(&cfg).map_err(|e| e.to_string())
}

fn consistency(desk: &Result<ExperimentResult, String>) -> Outcome {
    let result = match desk {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for method in Method::ALL {
        match result.report(method) {
            Some(rep) => {
                let se = rep.std_error().unwrap_or(f64::NAN);
                let z = (rep.mean - rep.reference).abs() / se;
                pass &= z <= CONSISTENCY_SE;
                parts.push(format!("{method} {:.4} ({z:.2} se)", rep.mean));
            }
            None => {
                pass = false;
                parts.push(format!("{method} failed"));
            }
        }
    }
    outcome(pass, parts.join(", "))
}

fn variance_ordering(desk: &Result<ExperimentResult, String>) -> Outcome {
    let result = match desk {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let dir = archive_dir();
    let archived = fs::create_dir_all(&dir)
        .and_then(|_| fs::write(dir.join("comparison.txt"), runner::comparison_table(result)))
        .and_then(|_| runner::emit_csv(result, &dir));
    let sd = |m| result.report(m).and_then(|r| r.st_dev);
    match (sd(Method::Mc), sd(Method::Ips), sd(Method::Hfmc), archived) {
        (Some(mc), Some(ips), Some(hf), Ok(())) => outcome(
            hf <= SD_RATIO_MAX * mc,
            format!(
                "st_dev MC {mc:.4}, IPS {ips:.4}, HFMC {hf:.4}; archived in {}",
                dir.display()
            ),
        ),
        (.., Err(e)) => outcome(false, format!("archive failed: {e}")),
        _ => outcome(false, "missing st_dev".into()),
    }
}

fn equivalences() -> Outcome {
    let mut ips_cfg = benchmark_engine(5000, 100, BARRIER);
    ips_cfg.tilt = 0.0;
    let mut hf_cfg = benchmark_engine(5000, 100, 0.0);
    hf_cfg.flow = FlowConfig::unit(0.5, 10).unwrap();
    hf_cfg.weighting = Weighting::Unweighted;

    let pair = |cfg, method| -> Result<f64, String> {
        let mc = replicate(Method::Mc, Method::Mc, cfg, SEED, 20).map_err(|e| e.to_string())?;
        let other = replicate(method, method, cfg, SEED, 20).map_err(|e| e.to_string())?;
        Ok((mean(&mc) - mean(&other)).abs() / pooled_se(&mc, &other))
    };
    match (pair(&ips_cfg, Method::Ips), pair(&hf_cfg, Method::Hfmc)) {
        (Ok(a), Ok(b)) => outcome(
            a <= EQUIVALENCE_SE && b <= EQUIVALENCE_SE,
            format!("IPS(tilt 0) vs MC {a:.2} se, HFMC(B=0, unit, unweighted) vs MC {b:.2} se"),
        ),
        (a, b) => outcome(false, format!("{a:?} {b:?}")),
    }
}

fn fd_det<P: Potential<f64>>(s: PhaseState<f64>, cfg: &FlowConfig<f64>, pot: &P, h: f64) -> f64 {
    let at = |x, p| flow(PhaseState::new(x, p), cfg, pot).unwrap();
    let (a, b) = (at(s.x + h, s.p), at(s.x - h, s.p));
    let (c, d) = (at(s.x, s.p + h), at(s.x, s.p - h));
    ((a.x - b.x) * (c.p - d.p) - (c.x - d.x) * (a.p - b.p)) / (4.0 * h * h)
}

fn max_drift(s: PhaseState<f64>, step: f64, n: usize) -> f64 {
    let mass = MassMatrix::default();
    let h0 = hamiltonian(s.x, s.p, &TOY, &mass).unwrap();
    let cfg = FlowConfig::unit(step, 1).unwrap();
    let mut state = s;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        state = flow(state, &cfg, &TOY).unwrap();
        worst = worst.max((hamiltonian(state.x, state.p, &TOY, &mass).unwrap() - h0).abs());
    }
    worst
}

fn symplectic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let params = benchmark_params(750);
    let pot = TransitionPotential::new(X0, &params).unwrap();

    let mut rev: f64 = 0.0;
    for &(step, n) in &[(1e-4, 35), (0.05, 100), (0.2, 10)] {
        let cfg = FlowConfig::unit(step, n).unwrap();
        for _ in 0..20 {
            let s = PhaseState::new(rng.random_range(95.0..105.0), rng.random_range(-2.0..2.0));
            let f = flow(s, &cfg, &pot).unwrap().flip_momentum();
            let back = flow(f, &cfg, &pot).unwrap().flip_momentum();
            rev = rev
                .max((back.x - s.x).abs() / s.x)
                .max((back.p - s.p).abs() / s.p.abs().max(1.0));
        }
    }

    let cfg = FlowConfig::unit(0.1, 10).unwrap();
    let mut det: f64 = 0.0;
    for _ in 0..50 {
        let s = PhaseState::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        det = det.max((fd_det(s, &cfg, &TOY, 1e-5) - 1.0).abs());
    }

    let s = PhaseState::new(1.3, -0.4);
    let ratio = max_drift(s, 0.1, 1000) / max_drift(s, 0.05, 2000);

    outcome(
        rev <= REVERSIBILITY_TOL && det <= JACOBIAN_TOL && (ENERGY_RATIO.0..=ENERGY_RATIO.1).contains(&ratio),
        format!("round trip {rev:.1e}, max |det J - 1| {det:.1e}, energy ratio {ratio:.3}"),
    )
}

fn stationarity() -> Outcome {
    let cfg = FlowConfig::unit(0.2, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: f64 = rng.sample(StandardNormal);
    let n = 100_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        x = hmc_transition(x, &cfg, &TOY, &mut rng).unwrap().state.x;
        s1 += x;
        s2 += x * x;
    }
    let m = s1 / n as f64;
    let var = (s2 - n as f64 * m * m) / (n - 1) as f64;
    outcome(
        m.abs() < STATIONARY_MEAN && var > STATIONARY_VAR.0 && var < STATIONARY_VAR.1,
        format!("mean {m:.4}, variance {var:.4}"),
    )
}

fn gradient() -> Outcome {
    let params = GbmParams::risk_neutral(X0, RATE, 0.0, SIGMA, MATURITY, 750).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x_prev = rng.random_range(50.0..150.0);
        let tp = TransitionPotential::new(x_prev, &params).unwrap();
        let x = x_prev * rng.random_range(0.2..5.0);
        let h = 1e-5 * x;
        let fd = (psi(x + h, &tp).unwrap() - psi(x - h, &tp).unwrap()) / (2.0 * h);
        let g = grad_psi(x, &tp).unwrap();
        worst = worst.max((g - fd).abs() / g.abs().max(f64::MIN_POSITIVE));
    }
    outcome(worst <= GRADIENT_TOL, format!("max relative error {worst:.2e}"))
}

fn scaling() -> Outcome {
    const REPS: usize = 100;
    let sd = |n_s| {
        let cfg = benchmark_engine(n_s, 250, BARRIER);
        replicate(Method::Mc, Method::Mc, &cfg, SEED, REPS).map(|v| sample_sd(&v))
    };
    match (sd(10_000), sd(40_000)) {
        (Ok(small), Ok(large)) => {
            let ratio = large / small;
            outcome(
                (ratio / 0.5 - 1.0).abs() <= SCALING_TOL,
                format!("st_dev {small:.4} -> {large:.4}, ratio {ratio:.3} over {REPS} replications"),
            )
        }
        (a, b) => outcome(false, format!("{a:?} {b:?}")),
    }
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(2..60);
        let centre = rng.random_range(1.0..20.0);
        let spread = rng.random_range(1e-3..2.0);
        let v: Vec<f64> = (0..m)
            .map(|_| centre + spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let c = centre + rng.random_range(-1.0..1.0);
        let rmse = stats::rmse(&v, c).unwrap();
        let bias = stats::bias(&v, c).unwrap();
        let sd = stats::std_dev(&v).unwrap();
        let rhs = bias * bias + (m as f64 - 1.0) / m as f64 * sd * sd;
        worst = worst.max((rmse * rmse - rhs).abs() / rhs);
    }
    // Published MC row: st_dev, CPU seconds and FOM.
    let (sd, cpu, published) = (0.088518965, 3.7251, 4097.9);
    let r = stats::rel_error(sd, TRUE_PRICE).unwrap();
    let fom = stats::fom(r, cpu).unwrap();
    let gap = (fom - published).abs() / published;
    outcome(
        worst <= IDENTITY_TOL && gap <= FOM_TOL,
        format!(
            "identity residual {worst:.1e}, FOM {fom:.1} vs {published} ({:.2}%)",
            100.0 * gap
        ),
    )
}

fn determinism() -> Outcome {
    let base = archive_dir().join("determinism");
    let run = |tag: &str, jobs: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = base.join(tag);
        let o = Command::new(env!("CARGO_BIN_EXE_rareflow"))
            .args(["run", "--config", config_path().to_str().unwrap()])
            .args([
                "--ns",
                "2000",
                "--nt",
                "50",
                "--replications",
                "5",
                "--no-timing",
                "--jobs",
                jobs,
            ])
            .args(["--seed", &SEED.to_string(), "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        let read = |f| fs::read(out.join(f)).map_err(|e| e.to_string());
        Ok((read(runner::REPLICATIONS_FILE)?, read(runner::SUMMARY_FILE)?))
    };
    let runs: Result<Vec<_>, String> = [("a1", "1"), ("b1", "1"), ("a8", "8"), ("b8", "8")]
        .iter()
        .map(|(tag, jobs)| run(tag, jobs))
        .collect();
    match runs {
        Ok(r) => outcome(
            r.iter().all(|x| *x == r[0]),
            format!("4 runs (jobs 1, 1, 8, 8), {} + {} bytes", r[0].0.len(), r[0].1.len()),
        ),
        Err(e) => outcome(false, e),
    }
}

fn main() -> ExitCode {
    let desk_started = Instant::now();
    let desk = desk_experiment();
    let desk_seconds = desk_started.elapsed().as_secs_f64();

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("analytic reference price", Box::new(analytic)),
        ("desk-scale consistency", Box::new(|| consistency(&desk))),
        ("variance ordering report", Box::new(|| variance_ordering(&desk))),
        ("oracle equivalences", Box::new(equivalences)),
        ("symplectic integrator", Box::new(symplectic)),
        ("HMC stationarity", Box::new(stationarity)),
        ("potential gradient", Box::new(gradient)),
        ("1/sqrt(n_S) scaling", Box::new(scaling)),
        ("statistics identities", Box::new(identities)),
        ("determinism across jobs", Box::new(determinism)),
    ];

    println!("desk-scale experiment: {desk_seconds:.1}s");
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name:<26} {} [{:.1}s]",
            i + 1,
            o.detail,
            started.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
