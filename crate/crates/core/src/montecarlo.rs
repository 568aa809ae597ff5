//! Monte Carlo simulation of the physical system: Rayleigh-faded SNRs,
//! Bernoulli backhauls, the strongest of `N` non-colluding eavesdroppers,
//! and optimal selection among the sources with an active backhaul.
//!
//! Nothing here uses the analytical structure; it is the ground truth the
//! closed forms are checked against.

use rayon::prelude::*;

use crate::error::{EsrError, Result};
use crate::exact::EsrEstimate;
use crate::model::ValidatedConfig;
use crate::rng::CounterStream;
use crate::scalar::Real;

/// Minimum replications for a reported estimate.
pub const MIN_REPLICATIONS: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub replications: u64,
    pub seed: u64,
    pub batch_size: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            replications: 100_000,
            seed: 0,
            batch_size: 10_000,
        }
    }
}

impl McSettings {
    pub fn new(replications: u64, seed: u64) -> Self {
        Self {
            replications,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(EsrError::invalid(
                "replications",
                format!("at least {MIN_REPLICATIONS} required, got {}", self.replications),
            ));
        }
        if self.batch_size == 0 {
            return Err(EsrError::invalid("batch_size", "must be positive"));
        }
        Ok(())
    }
}

/// Which secrecy rate is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum McMode {
    /// `max(ln((1 + gamma_D) / (1 + gamma_E)), 0)` of the best active source.
    Exact,
    /// `max(ln(gamma_D / gamma_E), 0)` of the best active source.
    Ratio,
}

/// One draw of every random quantity in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization<T> {
    pub dest_snr: Vec<T>,
    pub eve_snr_max: Vec<T>,
    pub backhaul_active: Vec<bool>,
}

/// Exponential variate with the given rate by inversion; `u in (0, 1]`.
#[inline]
fn exponential<T: Real>(stream: &CounterStream, variable: u64, rate: T) -> T {
    -T::lit(stream.uniform(variable)).ln() / rate
}

/// Draws one realization. Variable indices are laid out per source as
/// `[destination, eavesdropper 1..=N, backhaul]`.
pub fn sample_realization<T: Real>(cfg: &ValidatedConfig<T>, stream: &CounterStream) -> Realization<T> {
    let k_total = cfg.num_sources();
    let n_eve = cfg.num_eavesdroppers();
    let stride = n_eve as u64 + 2;
    let mut r = Realization {
        dest_snr: Vec::with_capacity(k_total),
        eve_snr_max: Vec::with_capacity(k_total),
        backhaul_active: Vec::with_capacity(k_total),
    };
    for k in 0..k_total {
        let base = k as u64 * stride;
        r.dest_snr.push(exponential(stream, base, cfg.beta(k)));
        let eve = (1..=n_eve as u64)
            .map(|n| exponential(stream, base + n, cfg.alpha(k)))
            .fold(T::zero(), T::max);
        r.eve_snr_max.push(eve);
        let u = T::lit(stream.uniform(base + n_eve as u64 + 1));
        // u in (0, 1]: P[u <= delta] = delta
        r.backhaul_active.push(u <= cfg.delta(k));
    }
    r
}

fn best_log_ratio<T: Real>(r: &Realization<T>, offset: T) -> T {
    let best = r
        .dest_snr
        .iter()
        .zip(&r.eve_snr_max)
        .zip(&r.backhaul_active)
        .filter(|(_, &active)| active)
        .map(|((&d, &e), _)| (offset + d) / (offset + e))
        .fold(None, |acc: Option<T>, x| Some(acc.map_or(x, |a| a.max(x))));
    match best {
        Some(ratio) => ratio.ln().max(T::zero()),
        None => T::zero(),
    }
}

/// Instantaneous secrecy rate of optimal selection, in nats.
pub fn secrecy_rate_realization<T: Real>(r: &Realization<T>) -> T {
    best_log_ratio(r, T::one())
}

/// Rate under ratio-based selection, `max(ln(max gamma_D / gamma_E), 0)`.
pub fn ratio_rate_realization<T: Real>(r: &Realization<T>) -> T {
    best_log_ratio(r, T::zero())
}

/// Streaming mean/variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy)]
struct Moments<T> {
    count: u64,
    mean: T,
    m2: T,
}

impl<T: Real> Moments<T> {
    fn new() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }

    fn push(&mut self, x: T) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / T::lit(self.count as f64);
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let (na, nb, nn) = (
            T::lit(self.count as f64),
            T::lit(other.count as f64),
            T::lit(n as f64),
        );
        let delta = other.mean - self.mean;
        Self {
            count: n,
            mean: self.mean + delta * nb / nn,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nn,
        }
    }
}

/// Monte Carlo ESR with its standard error. Batches run in parallel and are
/// merged in batch order, so the result depends only on `(cfg, settings)`.
pub fn mc_esr<T: Real>(
    cfg: &ValidatedConfig<T>,
    settings: &McSettings,
    mode: McMode,
) -> Result<EsrEstimate<T>> {
    settings.validate()?;
    let total = settings.replications;
    let batch = settings.batch_size;
    let batches = total.div_ceil(batch);
    let rate: fn(&Realization<T>) -> T = match mode {
        McMode::Exact => secrecy_rate_realization,
        McMode::Ratio => ratio_rate_realization,
    };
    let parts: Vec<Moments<T>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * batch;
            let end = (start + batch).min(total);
            let mut m = Moments::new();
            for rep in start..end {
                let stream = CounterStream::new(settings.seed, rep);
                m.push(rate(&sample_realization(cfg, &stream)));
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::new(), Moments::merge);
    let n = T::lit(m.count as f64);
    let variance = m.m2 / (n - T::one());
    Ok(EsrEstimate {
        value: m.mean,
        std_error: Some((variance / n).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, SystemConfig};

    fn cfg(alpha: &[f64], beta: &[f64], delta: &[f64], n: usize) -> ValidatedConfig<f64> {
        validate_config(
            SystemConfig::new(alpha.to_vec(), beta.to_vec(), delta.to_vec(), n),
            1e-9,
        )
        .unwrap()
    }

    fn realization(d: &[f64], e: &[f64], active: &[bool]) -> Realization<f64> {
        Realization {
            dest_snr: d.to_vec(),
            eve_snr_max: e.to_vec(),
            backhaul_active: active.to_vec(),
        }
    }

    #[test]
    fn rate_examples() {
        let r = realization(&[3.0, 9.0], &[1.0, 0.0], &[false, false]);
        assert_eq!(secrecy_rate_realization(&r), 0.0);
        let r = realization(&[3.0], &[1.0], &[true]);
        assert!((secrecy_rate_realization(&r) - 2f64.ln()).abs() < 1e-15);
        let r = realization(&[0.0, 3.0], &[1.0, 1.0], &[true, true]);
        assert!((secrecy_rate_realization(&r) - 2f64.ln()).abs() < 1e-15);
        // inactive sources never win even with a huge ratio
        let r = realization(&[0.5, 1e9], &[2.0, 0.1], &[true, false]);
        assert_eq!(secrecy_rate_realization(&r), 0.0);
        let r = realization(&[4.0], &[1.0], &[true]);
        assert!((ratio_rate_realization(&r) - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn marginals() {
        let c = cfg(&[1.0, 0.7], &[0.25, 2.0], &[0.3, 0.9], 3);
        let n = 1_000_000u64;
        let (mut d_sum, mut e_le_1, mut active0) = (0.0, 0u64, 0u64);
        for rep in 0..n {
            let r = sample_realization(&c, &CounterStream::new(11, rep));
            d_sum += r.dest_snr[0];
            if r.eve_snr_max[0] <= 1.0 {
                e_le_1 += 1;
            }
            if r.backhaul_active[0] {
                active0 += 1;
            }
        }
        let mean = d_sum / n as f64;
        assert!((mean - 4.0).abs() < 0.005 * 4.0, "mean {mean}");
        let cdf = e_le_1 as f64 / n as f64;
        let expected = (1.0 - (-1.0f64).exp()).powi(3);
        assert!((cdf - expected).abs() < 0.005, "cdf {cdf}");
        let p = active0 as f64 / n as f64;
        assert!((p - 0.3).abs() < 0.003, "p {p}");
    }

    #[test]
    fn deterministic_and_batch_invariant() {
        let c = cfg(&[0.5, 0.2], &[0.1, 0.05], &[0.8, 0.6], 2);
        let s = McSettings {
            replications: 20_000,
            seed: 5,
            batch_size: 1_000,
        };
        let a = mc_esr(&c, &s, McMode::Exact).unwrap();
        let b = mc_esr(&c, &s, McMode::Exact).unwrap();
        assert_eq!(a, b);
        let other_batching = McSettings { batch_size: 7_000, ..s };
        let c2 = mc_esr(&c, &other_batching, McMode::Exact).unwrap();
        assert!((a.value - c2.value).abs() < 1e-12);
    }

    #[test]
    fn zero_reliability_is_exactly_zero() {
        let c = cfg(&[1.0, 0.3], &[0.01, 0.02], &[0.0, 0.0], 1);
        let e = mc_esr(&c, &McSettings::new(5_000, 1), McMode::Exact).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, Some(0.0));
    }

    #[test]
    fn settings_guard() {
        let c = cfg(&[1.0], &[1.0], &[1.0], 1);
        assert!(mc_esr(&c, &McSettings::new(999, 1), McMode::Exact).is_err());
        let s = McSettings {
            batch_size: 0,
            ..McSettings::default()
        };
        assert!(mc_esr(&c, &s, McMode::Exact).is_err());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::new();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::new();
        let mut b = Moments::new();
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }
}
