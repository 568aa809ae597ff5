//! Sweep specification files.
//!
//! ```json
//! {
//!   "num_eavesdroppers": 1,
//!   "eve_avg_snr": { "units": "db", "values": [3, 6, 9, 12] },
//!   "snr_fraction": [0.1, 0.2, 0.3, 0.4],
//!   "backhaul_reliability": 0.8,
//!   "inv_beta": { "units": "db", "values": [0, 10, 20, 30, 40] },
//!   "methods": ["exact", "highsnr", "mc-exact"],
//!   "mc": { "replications": 100000, "seed": 1 }
//! }
//! ```
//!
//! `eve_avg_snr` is `1/alpha_k` and `inv_beta` the common `1/beta`, with
//! `1/beta_k = rho_k / beta`. dB values are power ratios, `10 log10`.
//! `snr_fraction` and `backhaul_reliability` take a single number or one per
//! source; `snr_fraction` defaults to 1.

use std::fmt;
use std::path::Path;

use esr_core::{
    db_to_linear, linear_to_db, validate_config, validate_with_jitter, AsymptoticConfig, EsrError,
    McSettings, ValidatedConfig, DEFAULT_DISTINCTNESS_TOL,
};
use serde::Deserialize;
use thiserror::Error;

/// Columns a sweep can produce, in CSV order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Highsnr,
    Asymptote,
    Iid,
    McExact,
    McRatio,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Highsnr => "highsnr",
            Method::Asymptote => "asymptote",
            Method::Iid => "iid",
            Method::McExact => "mc-exact",
            Method::McRatio => "mc-ratio",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Method::McExact | Method::McRatio)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Db,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tagged {
    units: Units,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    replications: Option<u64>,
    seed: Option<u64>,
    batch_size: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    num_eavesdroppers: usize,
    eve_avg_snr: Tagged,
    snr_fraction: Option<OneOrMany>,
    backhaul_reliability: OneOrMany,
    inv_beta: Tagged,
    methods: Vec<Method>,
    mc: Option<RawMc>,
    #[serde(default)]
    jitter: bool,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Model(#[from] EsrError),
}

impl SpecError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SpecError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, SpecError::Model(e) if e.is_numerical_guard())
    }
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub jitter: bool,
}

/// A parsed and validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Channel parameters; `common_inv_beta_db` holds the first grid point.
    pub base: AsymptoticConfig<f64>,
    /// Grid of `1/beta` in dB, strictly increasing.
    pub inv_beta_db: Vec<f64>,
    /// Requested columns, sorted and deduplicated.
    pub methods: Vec<Method>,
    pub mc: Option<McSettings>,
    pub jitter: bool,
}

impl SweepSpec {
    pub fn num_sources(&self) -> usize {
        self.base.eve_rate.len()
    }

    pub fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    /// Seed written to the CSV and used for jitter.
    pub fn seed(&self) -> u64 {
        self.mc.map_or(0, |s| s.seed)
    }

    /// Equal eavesdropper rates, equal SNR fractions and one eavesdropper.
    pub fn is_iid(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|&x| (x - v[0]).abs() <= 1e-12 * v[0].abs());
        self.base.num_eavesdroppers == 1 && same(&self.base.eve_rate) && same(&self.base.snr_fraction)
    }

    pub fn has_uniform_reliability(&self) -> bool {
        let d = &self.base.backhaul_reliability;
        d.iter().all(|&x| x == d[0])
    }

    /// Whether the asymptote column comes from the IID closed form.
    pub fn iid_asymptote(&self) -> bool {
        self.is_iid() && self.has_uniform_reliability()
    }

    /// Whether any column needs the general (distinct-product) model.
    pub fn needs_general_model(&self) -> bool {
        self.methods.iter().any(|&m| match m {
            Method::Exact | Method::Highsnr | Method::McExact | Method::McRatio => true,
            Method::Asymptote => !self.iid_asymptote(),
            Method::Iid => false,
        })
    }

    /// The system at one grid point, jittered if requested.
    pub fn system_at(&self, inv_beta_db: f64) -> Result<ValidatedConfig<f64>, EsrError> {
        let sc = self.base.with_inv_beta_db(inv_beta_db).to_system_config()?;
        if self.jitter {
            validate_with_jitter(sc, DEFAULT_DISTINCTNESS_TOL, self.seed())
        } else {
            validate_config(sc, DEFAULT_DISTINCTNESS_TOL)
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        self.jitter |= o.jitter;
        if o.seed.is_some() || o.replications.is_some() {
            let mut mc = self.mc.unwrap_or_default();
            if let Some(seed) = o.seed {
                mc.seed = seed;
            }
            if let Some(reps) = o.replications {
                mc.replications = reps;
            }
            self.mc = Some(mc);
        }
    }

    /// Model-level checks on top of the structural ones done while parsing.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.methods.iter().any(|m| m.is_monte_carlo()) {
            self.mc.unwrap_or_default().validate()?;
        }
        if self.wants(Method::Iid) && !self.is_iid() {
            return Err(SpecError::invalid(
                "methods",
                "iid needs one eavesdropper and equal eve_avg_snr and snr_fraction across sources",
            ));
        }
        if self.needs_general_model() {
            // distinctness of the a_k does not depend on the common 1/beta
            self.system_at(self.inv_beta_db[0])?;
        }
        Ok(())
    }
}

fn broadcast(field: &str, v: Option<OneOrMany>, k: usize, default: f64) -> Result<Vec<f64>, SpecError> {
    match v {
        None => Ok(vec![default; k]),
        Some(OneOrMany::One(x)) => Ok(vec![x; k]),
        Some(OneOrMany::Many(xs)) if xs.len() == k => Ok(xs),
        Some(OneOrMany::Many(xs)) => Err(SpecError::invalid(
            field,
            format!("expected 1 or {k} values, got {}", xs.len()),
        )),
    }
}

fn to_linear(field: &str, t: &Tagged) -> Result<Vec<f64>, SpecError> {
    t.values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let lin = match t.units {
                Units::Db => db_to_linear(v),
                Units::Linear => v,
            };
            if lin > 0.0 && lin.is_finite() {
                Ok(lin)
            } else {
                Err(SpecError::invalid(
                    format!("{field}[{}]", i + 1),
                    format!("must be a positive finite SNR, got {v}"),
                ))
            }
        })
        .collect()
}

/// Parses spec text, applies `overrides` and validates.
pub fn parse_spec(text: &str, overrides: &Overrides) -> Result<SweepSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let k = raw.eve_avg_snr.values.len();
    if k == 0 {
        return Err(SpecError::invalid("eve_avg_snr", "at least one source required"));
    }
    let eve_rate = to_linear("eve_avg_snr", &raw.eve_avg_snr)?
        .into_iter()
        .map(|s| 1.0 / s)
        .collect();
    let snr_fraction = broadcast("snr_fraction", raw.snr_fraction, k, 1.0)?;
    let backhaul_reliability = broadcast("backhaul_reliability", Some(raw.backhaul_reliability), k, 1.0)?;

    let grid: Vec<f64> = to_linear("inv_beta", &raw.inv_beta)?
        .into_iter()
        .map(linear_to_db)
        .collect();
    if grid.is_empty() {
        return Err(SpecError::invalid("inv_beta", "grid is empty"));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SpecError::invalid(
            "inv_beta",
            format!("grid must be strictly increasing (entries {} and {})", i + 1, i + 2),
        ));
    }

    let mut methods = raw.methods;
    methods.sort();
    methods.dedup();
    if methods.is_empty() {
        return Err(SpecError::invalid("methods", "at least one method required"));
    }

    let mc = raw.mc.map(|m| {
        let d = McSettings::default();
        McSettings {
            replications: m.replications.unwrap_or(d.replications),
            seed: m.seed.unwrap_or(d.seed),
            batch_size: m.batch_size.unwrap_or(d.batch_size),
        }
    });

    let base = AsymptoticConfig {
        eve_rate,
        snr_fraction,
        common_inv_beta_db: grid[0],
        backhaul_reliability,
        num_eavesdroppers: raw.num_eavesdroppers,
    };
    // catches bad N, rho and delta before any method-specific check
    match validate_config(base.to_system_config()?, 0.0) {
        Ok(_) | Err(EsrError::DegenerateProducts(_)) => {}
        Err(e) => return Err(e.into()),
    }

    let mut spec = SweepSpec {
        base,
        inv_beta_db: grid,
        methods,
        mc,
        jitter: raw.jitter,
    };
    spec.apply(overrides);
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path, overrides: &Overrides) -> Result<SweepSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text, overrides)
}
