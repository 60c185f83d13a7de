use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::Value;

use crate::engines::{EngineConfig, Method, Resampling, Weighting};
use crate::error::Error as CoreError;
use crate::flow::{FlowConfig, Tempering};
use crate::model::{DocOption, GbmParams};
use crate::potential::MassMatrix;

const REQUIRED: [&str; 6] = ["x0", "strike", "barrier", "r", "sigma", "maturity"];

const KNOWN: [&str; 25] = [
    "x0",
    "strike",
    "barrier",
    "r",
    "q",
    "mu",
    "sigma",
    "maturity",
    "n_t",
    "n_s",
    "replications",
    "seed",
    "tilt",
    "leapfrog_steps",
    "leapfrog_delta",
    "mass",
    "beta",
    "tempering",
    "hfmc_weighting",
    "resampling",
    "methods",
    "out_dir",
    "desk_scale",
    "jobs",
    "timing",
];

/// `(n_s, n_t, replications)` used by `--desk-scale`.
pub const DESK_SCALE: (usize, usize, usize) = (10_000, 250, 20);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl From<CoreError> for ConfigError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { name, reason } => invalid(name, format!("{name} {reason}")),
            other => ConfigError::Parse(other.to_string()),
        }
    }
}

/// Validated experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub engine: EngineConfig<f64>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub desk_scale: bool,
    pub jobs: Option<usize>,
    /// When false, CPU times are recorded as zero so outputs are byte-stable.
    pub timing: bool,
}

/// Values set on the command line; they win over the file and the preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    values: BTreeMap<String, Value>,
}

impl Overrides {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    pub fn set_opt<V: Into<Value>>(&mut self, key: &str, value: Option<V>) -> &mut Self {
        if let Some(v) = value {
            self.set(key, v);
        }
        self
    }
}

/// Parses the flat `key = value` format (a TOML subset without tables).
pub fn parse_config_str(text: &str) -> Result<BTreeMap<String, Value>, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    let mut out = BTreeMap::new();
    for (key, value) in table {
        if !KNOWN.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if value.is_table() {
            return Err(invalid(&key, "nested tables are not allowed"));
        }
        out.insert(key, value);
    }
    Ok(out)
}

struct Settings(BTreeMap<String, Value>);

impl Settings {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn require(&self, key: &str) -> Result<&Value, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn number(key: &str, v: &Value) -> Result<f64, ConfigError> {
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            Value::String(s) => s
                .trim()
                .parse()
                .map_err(|_| invalid(key, format!("`{s}` is not a number")))?,
            _ => return Err(invalid(key, "expected a number")),
        };
        if !x.is_finite() {
            return Err(invalid(key, "must be finite"));
        }
        Ok(x)
    }

    fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        Self::number(key, self.require(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key).map_or(Ok(default), |v| Self::number(key, v))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| invalid(key, format!("`{s}` is not a non-negative integer"))),
            Some(_) => Err(invalid(key, "expected a non-negative integer")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.u64_or(key, default as u64)?;
        usize::try_from(v).map_err(|_| invalid(key, "too large"))
    }

    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s.as_str()),
            Some(_) => Err(invalid(key, "expected a string")),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(Value::String(s)) => match s.trim() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(invalid(key, format!("`{other}` is not a boolean"))),
            },
            Some(_) => Err(invalid(key, "expected a boolean")),
        }
    }

    fn methods(&self) -> Result<Vec<Method>, ConfigError> {
        let names: Vec<String> = match self.get("methods") {
            None => vec!["all".to_string()],
            Some(Value::String(s)) => s
                .split(',')
                .map(str::to_string)
                .filter(|s| !s.trim().is_empty())
                .collect(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| invalid("methods", "expected strings"))
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(invalid("methods", "expected a string or an array of strings")),
        };
        let mut methods = Vec::new();
        for name in names {
            if name.trim().eq_ignore_ascii_case("all") {
                methods.extend(Method::ALL);
            } else {
                methods.push(name.parse().map_err(|e: String| invalid("methods", e))?);
            }
        }
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(invalid("methods", "methods must not be empty"));
        }
        Ok(methods)
    }
}

/// Builds the configuration from an optional file plus command-line overrides.
///
/// Precedence, lowest first: file, desk-scale preset, overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut values = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                path: p.to_path_buf(),
                reason: e.to_string(),
            })?;
            parse_config_str(&text)?
        }
        None => BTreeMap::new(),
    };
    for key in overrides.values.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
    }
    let desk = match overrides.values.get("desk_scale").or_else(|| values.get("desk_scale")) {
        Some(v) => Settings(BTreeMap::from([("desk_scale".to_string(), v.clone())])).bool_or("desk_scale", false)?,
        None => false,
    };
    if desk {
        let (n_s, n_t, reps) = DESK_SCALE;
        values.insert("n_s".into(), Value::Integer(n_s as i64));
        values.insert("n_t".into(), Value::Integer(n_t as i64));
        values.insert("replications".into(), Value::Integer(reps as i64));
    }
    values.extend(overrides.values.clone());
    build(&Settings(values), desk)
}

fn build(s: &Settings, desk_scale: bool) -> Result<ExperimentConfig, ConfigError> {
    for key in REQUIRED {
        s.require(key)?;
    }
    let x0 = s.f64_req("x0")?;
    let strike = s.f64_req("strike")?;
    let barrier = s.f64_req("barrier")?;
    let r = s.f64_req("r")?;
    let sigma = s.f64_req("sigma")?;
    let maturity = s.f64_req("maturity")?;
    let q = s.f64_or("q", 0.0)?;
    let mu = s.f64_or("mu", r - q)?;

    if x0 <= 0.0 {
        return Err(invalid("x0", "x0 must be positive"));
    }
    if sigma < 0.0 {
        return Err(invalid(
            "sigma",
            "sigma must be positive (zero allowed for deterministic paths)",
        ));
    }
    if maturity <= 0.0 {
        return Err(invalid("maturity", "maturity must be positive"));
    }
    if strike <= 0.0 {
        return Err(invalid("strike", "strike must be positive"));
    }
    if barrier < 0.0 {
        return Err(invalid("barrier", "barrier must be non-negative"));
    }

    let n_t = s.usize_or("n_t", 750)?;
    let n_s = s.usize_or("n_s", 50_000)?;
    let replications = s.usize_or("replications", 20)?;
    if n_t == 0 {
        return Err(invalid("n_t", "n_t must be at least 1"));
    }
    if n_s == 0 {
        return Err(invalid("n_s", "n_s must be at least 1"));
    }
    if replications == 0 {
        return Err(invalid("replications", "replications must be at least 1"));
    }

    let params = GbmParams::new(x0, mu, r, q, sigma, maturity, n_t)?;
    let option = DocOption::new(strike, barrier, &params)?;

    let tempering = match s.str_or("tempering", "dt_scaled")? {
        "dt_scaled" => Tempering::DtScaled,
        "unit" => Tempering::Unit,
        other => return Err(invalid("tempering", format!("`{other}` (expected dt_scaled or unit)"))),
    };
    let weighting = match s.str_or("hfmc_weighting", "weighted")? {
        "weighted" => Weighting::Weighted,
        "unweighted" => Weighting::Unweighted,
        other => {
            return Err(invalid(
                "hfmc_weighting",
                format!("`{other}` (expected weighted or unweighted)"),
            ))
        }
    };
    let resampling = match s.str_or("resampling", "multinomial")? {
        "multinomial" => Resampling::Multinomial,
        "systematic" => Resampling::Systematic,
        other => {
            return Err(invalid(
                "resampling",
                format!("`{other}` (expected multinomial or systematic)"),
            ))
        }
    };
    let mass = MassMatrix::new(s.f64_or("mass", 1.0)?).map_err(|_| invalid("mass", "mass must be positive"))?;
    let flow = FlowConfig::new(
        s.f64_or("leapfrog_delta", 1e-4)?,
        s.usize_or("leapfrog_steps", 35)?,
        mass,
        tempering,
        params.dt(),
    )?;

    let master_seed = s.u64_or("seed", 20_180_601)?;
    let mut engine = EngineConfig::new(params, option)?;
    engine.n_particles = n_s;
    engine.tilt = s.f64_or("tilt", 1e-4)?;
    engine.flow = flow;
    engine.beta = s.f64_or("beta", 1.0)?;
    engine.weighting = weighting;
    engine.resampling = resampling;
    engine.seed = master_seed;
    engine.validate()?;

    let jobs = match s.get("jobs") {
        None => None,
        Some(_) => match s.usize_or("jobs", 0)? {
            0 => return Err(invalid("jobs", "jobs must be at least 1")),
            j => Some(j),
        },
    };

    Ok(ExperimentConfig {
        engine,
        methods: s.methods()?,
        replications,
        master_seed,
        out_dir: PathBuf::from(s.str_or("out_dir", "rareflow-out")?),
        desk_scale,
        jobs,
        timing: s.bool_or("timing", true)?,
    })
}
