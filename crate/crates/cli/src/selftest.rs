//! Quick invariant checks runnable from the binary.

use esr_core::{
    cdf_gamma_exact, cdf_gamma_exact_series, db_to_linear, esr_exact, esr_highsnr,
    esr_highsnr_mixture, exp_int_e1, mc_esr, validate_config, weight_w, AsymptoticConfig, EsrError,
    McMode, McSettings, Subset, SystemConfig, ValidatedConfig, WeightTable,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String), EsrError>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn single_link() -> Result<ValidatedConfig<f64>, EsrError> {
    validate_config(SystemConfig::new(vec![1.0], vec![1.0], vec![1.0], 1), 1e-9)
}

fn figure_one(delta: f64, n: usize, inv_beta_db: f64) -> Result<ValidatedConfig<f64>, EsrError> {
    AsymptoticConfig {
        eve_rate: [3.0, 6.0, 9.0, 12.0].iter().map(|&d| 1.0 / db_to_linear(d)).collect(),
        snr_fraction: vec![0.1, 0.2, 0.3, 0.4],
        common_inv_beta_db: inv_beta_db,
        backhaul_reliability: vec![delta; 4],
        num_eavesdroppers: n,
    }
    .validate(1e-9)
}

fn golden() -> Result<(bool, String), EsrError> {
    let c = single_link()?;
    let e = std::f64::consts::E;
    let closed = e * (exp_int_e1(1.0)?.value - e * exp_int_e1(2.0)?.value);
    let exact = esr_exact(&c)?.value;
    let high = esr_highsnr(&c)?.value;
    let ok = (exact - closed).abs() < 1e-12 && (high - 2f64.ln()).abs() < 1e-12;
    Ok((ok, format!("exact {exact:.12}, highsnr {high:.12}")))
}

// The figure parameters have a_1 and a_2 within 0.3% of each other, so the
// individual weights reach ~1e7 for N = 3 and the sum is only good to
// a few ulps of sum |w|.
fn weight_unity() -> Result<(bool, String), EsrError> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for n in [1, 3] {
        let c = figure_one(1.0, n, 20.0)?;
        for bits in 1..16 {
            let s = Subset::from_bits(bits);
            let (mut total, mut scale) = (0.0f64, 0.0f64);
            for k in s.iter() {
                for i in 1..=n {
                    let w = weight_w(k, i, s, &c)?;
                    total += w;
                    scale += w.abs();
                }
            }
            let err = (total - 1.0).abs();
            ok &= err <= 1e-9f64.max(16.0 * f64::EPSILON * scale);
            worst = worst.max(err);
        }
    }
    Ok((ok, format!("max |sum w - 1| = {worst:.2e}")))
}

fn slope_law() -> Result<(bool, String), EsrError> {
    let mut worst = 0.0f64;
    for delta in [1.0, 0.8, 0.2] {
        let table = WeightTable::build(&figure_one(delta, 1, 30.0)?)?;
        let want = 1.0 - (1.0 - delta).powi(4);
        worst = worst.max((table.mu_total() - want).abs());
    }
    Ok((worst < 1e-9, format!("max slope error {worst:.2e}")))
}

fn cdf_forms() -> Result<(bool, String), EsrError> {
    let c = figure_one(0.8, 3, 10.0)?;
    let mut worst = 0.0f64;
    for bits in 1..16 {
        for x in [1.01, 2.0, 30.0, 1e3] {
            let s = Subset::from_bits(bits);
            let d = cdf_gamma_exact(x, s, &c)? - cdf_gamma_exact_series(x, s, &c)?;
            worst = worst.max(d.abs());
        }
    }
    Ok((worst < 1e-10, format!("max |product - series| = {worst:.2e}")))
}

fn e1_sandwich() -> Result<(bool, String), EsrError> {
    let mut ok = true;
    for i in 0..=99 {
        let x = 1.0 + i as f64;
        let v = exp_int_e1(x)?.value;
        let lower = (-x).exp() / (x + 1.0);
        let upper = (-x).exp() / x;
        ok &= lower < v && v < upper;
    }
    Ok((ok, "e^-x/(x+1) < E1(x) < e^-x/x on [1, 100]".into()))
}

fn highsnr_paths() -> Result<(bool, String), EsrError> {
    // N = 1 keeps the weights small; see weight_unity
    let c = figure_one(0.8, 1, 25.0)?;
    let a = esr_highsnr(&c)?.value;
    let b = esr_highsnr_mixture(&c)?.value;
    Ok(((a - b).abs() < 1e-10, format!("{a:.12} vs {b:.12}")))
}

fn upper_bound() -> Result<(bool, String), EsrError> {
    let mut ok = true;
    for db in (0..=40).step_by(5) {
        let c = figure_one(0.8, 3, db as f64)?;
        ok &= esr_highsnr(&c)?.value >= esr_exact(&c)?.value;
    }
    Ok((ok, "highsnr >= exact on 0..40 dB".into()))
}

fn monte_carlo() -> Result<(bool, String), EsrError> {
    let c = single_link()?;
    let est = mc_esr(&c, &McSettings::new(200_000, 1), McMode::Exact)?;
    let se = est.std_error.unwrap_or(0.0);
    let exact = esr_exact(&c)?.value;
    let z = (est.value - exact) / se;
    Ok((z.abs() <= 3.0, format!("z = {z:.2}")))
}

pub fn selftest() -> Vec<Check> {
    vec![
        check("golden single link", golden()),
        check("weight sum unity", weight_unity()),
        check("slope law", slope_law()),
        check("cdf product = series", cdf_forms()),
        check("E1 sandwich bound", e1_sandwich()),
        check("high-SNR paths agree", highsnr_paths()),
        check("high-SNR upper bound", upper_bound()),
        check("Monte Carlo vs exact", monte_carlo()),
    ]
}
