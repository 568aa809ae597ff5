//! Evaluating a sweep and writing it as CSV.

use std::fmt::Write as _;

use esr_core::{
    asymptote_validated, db_to_linear, esr_exact, esr_highsnr, esr_iid_highsnr, iid_asymptote,
    mc_esr, AsymptoteLine, EsrError, EsrEstimate, McMode,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::spec::{Method, SweepSpec};

/// One grid point. Columns that were not requested are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepRow {
    pub inv_beta_db: f64,
    pub exact: Option<f64>,
    pub highsnr: Option<f64>,
    pub asymptote: Option<f64>,
    pub iid: Option<f64>,
    pub mc_exact: Option<EsrEstimate<f64>>,
    pub mc_ratio: Option<EsrEstimate<f64>>,
}

#[derive(Debug, Error)]
#[error("{method} failed at 1/beta = {inv_beta_db} dB: {source}")]
pub struct SweepError {
    pub method: Method,
    pub inv_beta_db: f64,
    #[source]
    pub source: EsrError,
}

impl SweepError {
    pub fn is_numerical_guard(&self) -> bool {
        self.source.is_numerical_guard()
    }
}

fn asymptote_line(spec: &SweepSpec) -> Result<AsymptoteLine<f64>, SweepError> {
    let at = spec.inv_beta_db[0];
    let fail = |source| SweepError {
        method: Method::Asymptote,
        inv_beta_db: at,
        source,
    };
    if spec.iid_asymptote() {
        // the line is in ln(1/beta) with 1/beta_k = rho/beta, so alpha*rho plays alpha
        let b = &spec.base;
        iid_asymptote(
            spec.num_sources(),
            b.backhaul_reliability[0],
            b.eve_rate[0] * b.snr_fraction[0],
        )
        .map_err(fail)
    } else {
        let cfg = spec.system_at(at).map_err(fail)?;
        asymptote_validated(&cfg, &spec.base.snr_fraction).map_err(fail)
    }
}

fn evaluate(spec: &SweepSpec, line: Option<&AsymptoteLine<f64>>, db: f64) -> Result<SweepRow, SweepError> {
    let mut row = SweepRow {
        inv_beta_db: db,
        ..SweepRow::default()
    };
    let fail = |method| {
        move |source| SweepError {
            method,
            inv_beta_db: db,
            source,
        }
    };
    let cfg = if spec.needs_general_model() {
        let first = *spec.methods.first().expect("nonempty");
        Some(spec.system_at(db).map_err(fail(first))?)
    } else {
        None
    };
    let mc = spec.mc.unwrap_or_default();
    for &m in &spec.methods {
        let err = fail(m);
        match m {
            Method::Exact => {
                row.exact = Some(esr_exact(cfg.as_ref().expect("general")).map_err(err)?.value);
            }
            Method::Highsnr => {
                row.highsnr = Some(esr_highsnr(cfg.as_ref().expect("general")).map_err(err)?.value);
            }
            Method::Asymptote => {
                row.asymptote = line.map(|l| l.eval_db(db));
            }
            Method::Iid => {
                let b = &spec.base;
                let a = b.eve_rate[0] * b.snr_fraction[0] * db_to_linear(db);
                row.iid = Some(esr_iid_highsnr(spec.num_sources(), &b.backhaul_reliability, a).map_err(err)?);
            }
            Method::McExact => {
                let c = cfg.as_ref().expect("general");
                row.mc_exact = Some(mc_esr(c, &mc, McMode::Exact).map_err(err)?);
            }
            Method::McRatio => {
                let c = cfg.as_ref().expect("general");
                row.mc_ratio = Some(mc_esr(c, &mc, McMode::Ratio).map_err(err)?);
            }
        }
    }
    Ok(row)
}

/// Evaluates every grid point, concurrently, and returns rows in grid order.
/// On failure the error of the lowest failing grid point is returned.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let line = if spec.wants(Method::Asymptote) {
        Some(asymptote_line(spec)?)
    } else {
        None
    };
    let results: Vec<Result<SweepRow, SweepError>> = spec
        .inv_beta_db
        .par_iter()
        .map(|&db| evaluate(spec, line.as_ref(), db))
        .collect();
    results.into_iter().collect()
}

/// Column names for a set of methods, in CSV order.
pub fn csv_header(methods: &[Method]) -> Vec<&'static str> {
    let mut cols = vec!["inv_beta_db"];
    let mut sorted = methods.to_vec();
    sorted.sort();
    sorted.dedup();
    for m in sorted {
        match m {
            Method::Exact => cols.push("exact"),
            Method::Highsnr => cols.push("highsnr"),
            Method::Asymptote => cols.push("asymptote"),
            Method::Iid => cols.push("iid"),
            Method::McExact => cols.extend(["mc_exact", "mc_exact_se"]),
            Method::McRatio => cols.extend(["mc_ratio", "mc_ratio_se"]),
        }
    }
    cols
}

// Debug formatting of f64 is the shortest string that parses back to the
// same value, switching to exponent form for very small or large numbers.
fn push_num(line: &mut String, x: f64) {
    write!(line, ",{x:?}").expect("write to String");
}

/// CSV text: a version/seed comment, the header, then one line per row.
pub fn emit_csv(rows: &[SweepRow], methods: &[Method], seed: u64) -> String {
    let mut out = format!("# secrecy-esr v{} seed={seed}\n", env!("CARGO_PKG_VERSION"));
    out.push_str(&csv_header(methods).join(","));
    out.push('\n');
    for r in rows {
        let mut line = format!("{:?}", r.inv_beta_db);
        let scalars = [r.exact, r.highsnr, r.asymptote, r.iid];
        for v in scalars.into_iter().flatten() {
            push_num(&mut line, v);
        }
        for e in [r.mc_exact, r.mc_ratio].into_iter().flatten() {
            push_num(&mut line, e.value);
            push_num(&mut line, e.std_error.unwrap_or(0.0));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}
