//! Exact ergodic secrecy rate.
//!
//! For an active set `S` the secrecy rate is `max(ln Gamma_S, 0)` with
//! `Gamma_S = max_{k in S} (1 + gamma_Dk) / (1 + gamma_Ek)`, so
//!
//! ```text
//! E[C_S] = int_1^inf (1 - F_S(x)) / x dx
//! ```
//!
//! Expanding `1 - F_S` over the nonempty `M ⊆ S` and splitting
//! `1 / (x prod_k (x + i_k a_k))` into partial fractions reduces every
//! term to exponential integrals. The constant `M = ∅` term of the CDF
//! cancels against `1` and never enters the sum.
//!
//! The factor `prod_k c_k = e^{beta_M}` is folded into the exponential
//! integrals, which are evaluated in the scaled form `e^z E1(z)`, so nothing
//! overflows for large `beta_k` or large `beta_M i_k a_k`.

use rayon::prelude::*;

use crate::error::{EsrError, Result};
use crate::model::{checked_pow, multi_indices, MultiIndex, Subset, TermBudget, ValidatedConfig};
use crate::scalar::Real;
use crate::special::exp_int_e1_scaled;
use crate::summation::{compensated_sum, CompensatedSum};

/// An ESR value in nats per channel use. `std_error` is set only by the
/// Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsrEstimate<T> {
    pub value: T,
    pub std_error: Option<T>,
}

impl<T: Real> EsrEstimate<T> {
    pub fn exact(value: T) -> Self {
        Self {
            value,
            std_error: None,
        }
    }
}

/// Partial fractions of `1 / (x prod_{k in M} (x + i_k a_k))`:
/// `a0 / x + sum_k ak[k] / (x + i_k a_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionCoeffs<T> {
    pub a0: T,
    /// `(source, coefficient)` in ascending source order.
    pub ak: Vec<(usize, T)>,
    /// `i_k a_k`, aligned with `ak`.
    pub poles: Vec<T>,
}

impl<T: Real> PartialFractionCoeffs<T> {
    /// Evaluates the decomposed form at `x`.
    pub fn reconstruct(&self, x: T) -> T {
        let tail = compensated_sum(
            self.ak
                .iter()
                .zip(&self.poles)
                .map(|(&(_, c), &b)| c / (x + b)),
        );
        self.a0 / x + tail
    }

    /// Evaluates `1 / (x prod (x + b_k))` directly.
    pub fn rational(&self, x: T) -> T {
        T::one() / self.poles.iter().fold(x, |p, &b| p * (x + b))
    }
}

fn sign<T: Real>(n: usize) -> T {
    if n % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

fn check_index<T: Real>(members: Subset, index: &MultiIndex, cfg: &ValidatedConfig<T>) -> Result<()> {
    if members.is_empty() {
        return Err(EsrError::invalid("M", "must be nonempty"));
    }
    let ok = index.len() == members.len()
        && index
            .iter()
            .zip(members.iter())
            .all(|((k, i), m)| k == m && (1..=cfg.num_eavesdroppers()).contains(&i));
    if !ok {
        return Err(EsrError::invalid("i", "multi-index does not match M and N"));
    }
    if members.iter().any(|k| k >= cfg.num_sources()) {
        return Err(EsrError::invalid("M", "source index out of range"));
    }
    Ok(())
}

/// `A0 = 1 / prod b_k`, `A_k = (-1)^{|M|} / (b_k prod_{j != k} (b_k - b_j))`
/// with `b_k = i_k a_k`.
pub fn partial_fraction_coeffs_exact<T: Real>(
    members: Subset,
    index: &MultiIndex,
    cfg: &ValidatedConfig<T>,
) -> Result<PartialFractionCoeffs<T>> {
    check_index(members, index, cfg)?;
    let poles: Vec<T> = index
        .iter()
        .map(|(k, i)| T::from_count(i) * cfg.a(k))
        .collect();
    let a0 = T::one() / poles.iter().fold(T::one(), |p, &b| p * b);
    let s = sign::<T>(poles.len());
    let ak = index
        .iter()
        .enumerate()
        .map(|(p, (k, _))| {
            let bp = poles[p];
            let denom = poles
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != p)
                .fold(bp, |acc, (_, &bq)| acc * (bp - bq));
            (k, s / denom)
        })
        .collect();
    Ok(PartialFractionCoeffs { a0, ak, poles })
}

/// `F_{Gamma_S}(x)` in product form, `x > 1`.
pub fn cdf_gamma_exact<T: Real>(x: T, subset: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    check_cdf_args(x, subset, cfg)?;
    let n_eve = cfg.num_eavesdroppers();
    let mut cdf = T::one();
    for k in subset.iter() {
        let a = cfg.a(k);
        // c_k e^{-beta_k x} = e^{-beta_k (x - 1)}
        let decay = (-cfg.beta(k) * (x - T::one())).exp();
        let tail = compensated_sum((1..=n_eve).map(|n| {
            let na = T::from_count(n) * a;
            cfg.psi(n) * na / (x + na)
        }));
        cdf *= T::one() - tail * decay;
    }
    Ok(cdf)
}

/// `F_{Gamma_S}(x)` through the inclusion-exclusion series over `M ⊆ S`
/// and multi-indices. Algebraically equal to [`cdf_gamma_exact`].
pub fn cdf_gamma_exact_series<T: Real>(
    x: T,
    subset: Subset,
    cfg: &ValidatedConfig<T>,
) -> Result<T> {
    check_cdf_args(x, subset, cfg)?;
    let mut budget = TermBudget::default();
    budget.charge("CDF series terms", series_term_count(subset, cfg.num_eavesdroppers(), 0))?;
    let mut acc = CompensatedSum::new();
    for m in subset.subsets() {
        if m.is_empty() {
            acc.add(T::one());
            continue;
        }
        let beta_m = compensated_sum(m.iter().map(|k| cfg.beta(k)));
        let decay = (-beta_m * (x - T::one())).exp();
        let s = sign::<T>(m.len());
        for idx in multi_indices(m, cfg.num_eavesdroppers())? {
            let prod = idx.iter().fold(T::one(), |p, (k, i)| {
                let b = T::from_count(i) * cfg.a(k);
                p * cfg.psi(i) * b / (x + b)
            });
            acc.add(s * decay * prod);
        }
    }
    Ok(acc.value())
}

fn check_cdf_args<T: Real>(x: T, subset: Subset, cfg: &ValidatedConfig<T>) -> Result<()> {
    if !(x > T::one()) {
        return Err(EsrError::Domain {
            function: "cdf_gamma_exact",
            x: x.as_f64(),
        });
    }
    if subset.is_empty() {
        return Err(EsrError::invalid("S", "must be nonempty"));
    }
    if subset.iter().any(|k| k >= cfg.num_sources()) {
        return Err(EsrError::invalid("S", "source index out of range"));
    }
    Ok(())
}

/// `sum_{∅ != M ⊆ S} N^{|M|} (|M| + extra)`.
fn series_term_count(subset: Subset, n_eve: usize, extra: usize) -> u128 {
    subset
        .subsets()
        .filter(|m| !m.is_empty())
        .map(|m| checked_pow(n_eve, m.len()).saturating_mul((m.len() + extra) as u128))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Contribution of one nonempty `M` to `E[C_S]` (independent of `S`),
/// together with the magnitude of its raw terms.
fn exact_term<T: Real>(members: Subset, cfg: &ValidatedConfig<T>) -> Result<(T, T)> {
    let n_eve = cfg.num_eavesdroppers();
    let srcs: Vec<usize> = members.iter().collect();
    let beta_m = compensated_sum(srcs.iter().map(|&k| cfg.beta(k)));
    let head = exp_int_e1_scaled(beta_m)?.value;

    // e^{z} E1(z) at z = beta_M (1 + n a_k), indexed [position][n - 1]
    let mut tails = Vec::with_capacity(srcs.len());
    for &k in &srcs {
        let row = (1..=n_eve)
            .map(|n| {
                let b = T::from_count(n) * cfg.a(k);
                exp_int_e1_scaled(beta_m * (T::one() + b)).map(|r| r.value)
            })
            .collect::<Result<Vec<T>>>()?;
        tails.push(row);
    }

    let s = sign::<T>(srcs.len());
    let mut acc = CompensatedSum::new();
    let mut poles = vec![T::zero(); srcs.len()];
    for idx in multi_indices(members, n_eve)? {
        let mut psi_prod = T::one();
        for (p, (k, i)) in idx.iter().enumerate() {
            poles[p] = T::from_count(i) * cfg.a(k);
            psi_prod *= cfg.psi(i);
        }
        // prod(psi b c) * A0 * E1(beta_M) = prod(psi) * e^{beta_M} E1(beta_M)
        acc.add(psi_prod * head);
        for (p, &i) in idx.entries().iter().enumerate() {
            // prod(psi b) * A_k = prod(psi) (-1)^{|M|} prod_{j != k} b_j / (b_k - b_j)
            let bp = poles[p];
            let mut coef = psi_prod * s;
            for (q, &bq) in poles.iter().enumerate() {
                if q != p {
                    coef *= bq / (bp - bq);
                }
            }
            acc.add(coef * tails[p][i - 1]);
        }
    }
    // E[C_S] = -sum_M (-1)^{|M|} sum_i (...) with E1 = -Ei(-.)
    Ok((-s * acc.value(), acc.magnitude()))
}

fn finish_nonnegative<T: Real>(what: &'static str, value: T, magnitude: T) -> Result<T> {
    if value >= T::zero() {
        return Ok(value);
    }
    if -value <= T::lit(256.0) * T::epsilon() * magnitude {
        Ok(T::zero())
    } else {
        Err(EsrError::Cancellation {
            what,
            value: value.as_f64(),
            scale: magnitude.as_f64(),
        })
    }
}

fn check_subset<T: Real>(subset: Subset, cfg: &ValidatedConfig<T>) -> Result<()> {
    if subset.is_empty() {
        return Err(EsrError::invalid("S", "must be nonempty"));
    }
    if !subset.is_subset_of(Subset::full(cfg.num_sources())) {
        return Err(EsrError::invalid("S", "source index out of range"));
    }
    Ok(())
}

/// `E[C_S]` for a nonempty active set `S`.
pub fn esr_exact_subset<T: Real>(subset: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    check_subset(subset, cfg)?;
    let mut budget = TermBudget::default();
    budget.charge("exact ESR terms", series_term_count(subset, cfg.num_eavesdroppers(), 1))?;
    let mut acc = CompensatedSum::new();
    let mut magnitude = T::zero();
    for m in subset.subsets().filter(|m| !m.is_empty()) {
        let (v, mag) = exact_term(m, cfg)?;
        acc.add(v);
        magnitude += mag;
    }
    finish_nonnegative("exact per-subset ESR", acc.value(), magnitude)
}

/// Backhaul-weighted exact ESR, `sum_S P[S] E[C_S]` with `E[C_∅] = 0`.
///
/// The per-`M` terms do not depend on `S`; each is computed once (in
/// parallel) and reused by every `S ⊇ M`.
pub fn esr_exact<T: Real>(cfg: &ValidatedConfig<T>) -> Result<EsrEstimate<T>> {
    let k = cfg.num_sources();
    let weights = crate::model::subset_weights(cfg.deltas())?;
    let support = Subset::from_indices((0..k).filter(|&j| cfg.delta(j) > T::zero()));
    if support.is_empty() {
        return Ok(EsrEstimate::exact(T::zero()));
    }

    let mut budget = TermBudget::default();
    budget.charge("exact ESR terms", series_term_count(support, cfg.num_eavesdroppers(), 1))?;

    let ms: Vec<Subset> = support.subsets().filter(|m| !m.is_empty()).collect();
    let terms: Vec<(T, T)> = ms
        .par_iter()
        .map(|&m| exact_term(m, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![(T::zero(), T::zero()); 1 << k];
    for (m, t) in ms.iter().zip(terms) {
        table[m.bits() as usize] = t;
    }

    let mut total = CompensatedSum::new();
    for w in weights.iter().filter(|w| !w.subset.is_empty() && w.probability > T::zero()) {
        let mut acc = CompensatedSum::new();
        let mut magnitude = T::zero();
        for m in w.subset.subsets().filter(|m| !m.is_empty()) {
            let (v, mag) = table[m.bits() as usize];
            acc.add(v);
            magnitude += mag;
        }
        let per_subset = finish_nonnegative("exact per-subset ESR", acc.value(), magnitude)?;
        total.add(w.probability * per_subset);
    }
    Ok(EsrEstimate::exact(total.value().max(T::zero())))
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

    fn single() -> ValidatedConfig<f64> {
        cfg(&[1.0], &[1.0], &[1.0], 1)
    }

    // e [E1(1) - e E1(2)], with E1 from 30-digit quadrature
    const GOLDEN: f64 = 0.235_018_745_434_971_5;

    #[test]
    fn cdf_examples() {
        let c = single();
        let s = Subset::from_indices([0]);
        let v = cdf_gamma_exact(2.0, s, &c).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp() / 3.0)).abs() < 1e-15);
        assert!((v - 0.877_374).abs() < 1e-6);
        assert!((cdf_gamma_exact(1e6, s, &c).unwrap() - 1.0).abs() < 1e-6);
        let series = cdf_gamma_exact_series(2.0, s, &c).unwrap();
        assert!((series - v).abs() <= 1e-10 * v);
        assert!(matches!(
            cdf_gamma_exact(1.0, s, &c),
            Err(EsrError::Domain { .. })
        ));
        assert!(cdf_gamma_exact(2.0, Subset::EMPTY, &c).is_err());
    }

    #[test]
    fn partial_fraction_examples() {
        let c = cfg(&[2.0], &[1.0], &[1.0], 1);
        let m = Subset::from_indices([0]);
        let idx = MultiIndex::new(m, vec![1]);
        let pf = partial_fraction_coeffs_exact(m, &idx, &c).unwrap();
        assert!((pf.a0 - 0.5).abs() < 1e-15);
        assert_eq!(pf.ak.len(), 1);
        assert!((pf.ak[0].1 + 0.5).abs() < 1e-15);
        assert!((pf.reconstruct(7.0) - pf.rational(7.0)).abs() < 1e-15);

        let c = cfg(&[1.0, 3.0], &[1.0, 1.0], &[1.0, 1.0], 1);
        let m = Subset::from_indices([0, 1]);
        let idx = MultiIndex::new(m, vec![1, 1]);
        let pf = partial_fraction_coeffs_exact(m, &idx, &c).unwrap();
        assert!((pf.a0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((pf.ak[0].1 + 0.5).abs() < 1e-15);
        assert!((pf.ak[1].1 - 1.0 / 6.0).abs() < 1e-15);
        let x = 7.0;
        assert!(((pf.reconstruct(x) - pf.rational(x)) / pf.rational(x)).abs() < 1e-14);
    }

    #[test]
    fn partial_fraction_rejects_mismatched_index() {
        let c = cfg(&[1.0, 3.0], &[1.0, 1.0], &[1.0, 1.0], 2);
        let m = Subset::from_indices([0, 1]);
        let bad = MultiIndex::new(m, vec![1, 3]);
        assert!(partial_fraction_coeffs_exact(m, &bad, &c).is_err());
        let other = MultiIndex::new(Subset::from_indices([0]), vec![1]);
        assert!(partial_fraction_coeffs_exact(m, &other, &c).is_err());
    }

    #[test]
    fn golden_single_source() {
        let v = esr_exact_subset(Subset::from_indices([0]), &single()).unwrap();
        assert!((v - GOLDEN).abs() < 1e-13, "{v}");
        let e = esr_exact(&single()).unwrap();
        assert!((e.value - GOLDEN).abs() < 1e-13);
        assert!(e.std_error.is_none());
    }

    #[test]
    fn high_snr_single_source() {
        // alpha = beta = 1e-3: 30 dB on both links; reference from quadrature
        let c = cfg(&[1e-3], &[1e-3], &[1.0], 1);
        let v = esr_exact(&c).unwrap().value;
        assert!((v - 0.687_192_567_186_803_8).abs() < 1e-10, "{v}");
        assert!(v < 2f64.ln() && v > 0.99 * 2f64.ln());
    }

    #[test]
    fn no_destination_snr_means_no_secrecy() {
        let c = cfg(&[0.5, 0.8, 0.2], &[100.0; 3], &[1.0; 3], 2);
        let v = esr_exact(&c).unwrap().value;
        assert!((0.0..1e-4).contains(&v), "{v}");
    }

    #[test]
    fn backhaul_weighting() {
        assert_eq!(esr_exact(&cfg(&[1.0, 2.0], &[1.0, 1.0], &[0.0, 0.0], 1)).unwrap().value, 0.0);
        let half = esr_exact(&cfg(&[1.0], &[1.0], &[0.5], 1)).unwrap().value;
        assert!((half - 0.5 * GOLDEN).abs() < 1e-13);
        assert!((half - 0.117_510).abs() < 1e-6);

        let full = cfg(&[0.5, 0.3, 0.9], &[0.2, 0.05, 0.4], &[1.0; 3], 2);
        let a = esr_exact(&full).unwrap().value;
        let b = esr_exact_subset(Subset::full(3), &full).unwrap();
        assert!((a - b).abs() <= 1e-14 * b);
    }

    #[test]
    fn guard_trips_on_large_expansions() {
        let k = 12;
        let alpha: Vec<f64> = (0..k).map(|j| 1.0 + 0.0137 * j as f64 + 0.001 * (j * j) as f64).collect();
        let c = cfg(&alpha, &vec![0.1; k], &vec![1.0; k], 3);
        assert!(matches!(esr_exact(&c), Err(EsrError::GuardExceeded { .. })));
    }

    #[test]
    fn single_precision_golden() {
        let c = validate_config(SystemConfig::new(vec![1.0f32], vec![1.0], vec![1.0], 1), 1e-6).unwrap();
        let v = esr_exact(&c).unwrap().value;
        assert!(((v as f64) - GOLDEN).abs() < 1e-5);
    }
}
