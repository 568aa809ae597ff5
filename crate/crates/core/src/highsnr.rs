//! High-SNR approximation, where selection maximizes `gamma_Dk / gamma_Ek`.
//!
//! The ESR becomes a weighted sum of `ln(1 + n a_k)` over all
//! source/eavesdropper pairs. The weights depend only on the ratios between
//! the `a_k`, which also yields the asymptote
//! `ESR ≈ S_inf (ln(1/beta) - L_inf)`.
//!
//! The IID single-eavesdropper case, where the general weights are undefined
//! (all `a_k` equal), has its own closed form.

use crate::error::{EsrError, Result};
use crate::exact::EsrEstimate;
use crate::model::{
    binomial, checked_pow, multi_indices, psi, subset_weights, AsymptoticConfig, Subset,
    TermBudget, ValidatedConfig, DEFAULT_DISTINCTNESS_TOL, K_MAX,
};
use crate::scalar::Real;
use crate::summation::{compensated_sum, CompensatedSum};

/// `F_{Gamma_S}(x) = prod_{k in S} (1 - sum_n psi_n n a_k / (x + n a_k))`.
pub fn cdf_gamma_highsnr<T: Real>(x: T, subset: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    if !(x > T::zero()) {
        return Err(EsrError::Domain {
            function: "cdf_gamma_highsnr",
            x: x.as_f64(),
        });
    }
    check_subset(subset, cfg)?;
    let n_eve = cfg.num_eavesdroppers();
    Ok(subset.iter().fold(T::one(), |cdf, k| {
        let tail = compensated_sum((1..=n_eve).map(|n| {
            let na = T::from_count(n) * cfg.a(k);
            cfg.psi(n) * na / (x + na)
        }));
        cdf * (T::one() - tail)
    }))
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

/// `sum_{i in [N]^{|Q|}} prod_{j in Q} psi_{i_j} i_j a_j / (n a_k - i_j a_j)`;
/// one for `Q = ∅`.
fn expanded_products<T: Real>(k: usize, n: usize, q: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    if q.is_empty() {
        return Ok(T::one());
    }
    let nak = T::from_count(n) * cfg.a(k);
    let mut acc = CompensatedSum::new();
    for idx in multi_indices(q, cfg.num_eavesdroppers())? {
        acc.add(idx.iter().fold(T::one(), |p, (j, i)| {
            let b = T::from_count(i) * cfg.a(j);
            p * cfg.psi(i) * b / (nak - b)
        }));
    }
    Ok(acc.value())
}

fn weight_term_count(rest: Subset, n_eve: usize) -> u128 {
    rest.subsets()
        .map(|q| checked_pow(n_eve, q.len()).saturating_mul(q.len().max(1) as u128))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// `w_kn(S) = psi_n sum_{Q ⊆ S\{k}} sum_i prod_{j in Q} psi_{i_j} i_j a_j / (n a_k - i_j a_j)`.
///
/// `k` is a 0-based source index, `n` runs over `1..=N`.
pub fn weight_w<T: Real>(k: usize, n: usize, subset: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    check_subset(subset, cfg)?;
    if !subset.contains(k) {
        return Err(EsrError::invalid("k", format!("source {} not in {subset}", k + 1)));
    }
    let psi_n = T::from_int(psi(n, cfg.num_eavesdroppers())?);
    let rest = subset.without(k);
    let mut budget = TermBudget::default();
    budget.charge("weight terms", weight_term_count(rest, cfg.num_eavesdroppers()))?;
    let mut acc = CompensatedSum::new();
    for q in rest.subsets() {
        acc.add(expanded_products(k, n, q, cfg)?);
    }
    Ok(psi_n * acc.value())
}

/// Weights `w_kn(S)` for every nonempty `S` and their backhaul-weighted
/// totals `mu_kn = sum_{S ∋ k} P[S] w_kn(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable<T> {
    num_sources: usize,
    num_eavesdroppers: usize,
    mu: Vec<T>,
    per_subset: Vec<T>,
}

impl<T: Real> WeightTable<T> {
    pub fn build(cfg: &ValidatedConfig<T>) -> Result<Self> {
        let k_total = cfg.num_sources();
        let n_eve = cfg.num_eavesdroppers();
        let full = Subset::full(k_total);
        let weights = subset_weights(cfg.deltas())?;

        let mut budget = TermBudget::default();
        for k in 0..k_total {
            let terms = weight_term_count(full.without(k), n_eve).saturating_mul(n_eve as u128);
            budget.charge("weight table terms", terms)?;
        }

        let stride = k_total * n_eve;
        let mut per_subset = vec![T::zero(); (1usize << k_total) * stride];
        let mut mu = vec![T::zero(); stride];
        for k in 0..k_total {
            let others = full.without(k);
            for n in 1..=n_eve {
                // expanded products for every Q ⊆ [K] \ {k}, indexed by mask
                let mut g = vec![T::zero(); 1 << k_total];
                for q in others.subsets() {
                    g[q.bits() as usize] = expanded_products(k, n, q, cfg)?;
                }
                let psi_n = cfg.psi(n);
                let mut mu_acc = CompensatedSum::new();
                for w in weights.iter().filter(|w| w.subset.contains(k)) {
                    let sum = compensated_sum(
                        w.subset.without(k).subsets().map(|q| g[q.bits() as usize]),
                    );
                    let value = psi_n * sum;
                    per_subset[w.subset.bits() as usize * stride + k * n_eve + (n - 1)] = value;
                    mu_acc.add(w.probability * value);
                }
                mu[k * n_eve + (n - 1)] = mu_acc.value();
            }
        }
        Ok(Self {
            num_sources: k_total,
            num_eavesdroppers: n_eve,
            mu,
            per_subset,
        })
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn num_eavesdroppers(&self) -> usize {
        self.num_eavesdroppers
    }

    /// `mu_kn` (0-based `k`, `n in 1..=N`).
    pub fn mu(&self, k: usize, n: usize) -> T {
        self.mu[k * self.num_eavesdroppers + (n - 1)]
    }

    /// `w_kn(S)`; zero when `k ∉ S`.
    pub fn weight(&self, subset: Subset, k: usize, n: usize) -> T {
        let stride = self.num_sources * self.num_eavesdroppers;
        self.per_subset[subset.bits() as usize * stride + k * self.num_eavesdroppers + (n - 1)]
    }

    pub fn mu_total(&self) -> T {
        compensated_sum(self.mu.iter().copied())
    }

    /// `sum_k sum_n mu_kn ln(1 + n a_k)` for the ratios of `cfg`.
    pub fn esr(&self, cfg: &ValidatedConfig<T>) -> Result<T> {
        if cfg.num_sources() != self.num_sources || cfg.num_eavesdroppers() != self.num_eavesdroppers {
            return Err(EsrError::invalid("cfg", "shape differs from the weight table"));
        }
        let mut acc = CompensatedSum::new();
        for k in 0..self.num_sources {
            for n in 1..=self.num_eavesdroppers {
                acc.add(self.mu(k, n) * (T::from_count(n) * cfg.a(k)).ln_1p());
            }
        }
        finish_nonnegative(acc)
    }
}

fn finish_nonnegative<T: Real>(acc: CompensatedSum<T>) -> Result<T> {
    let value = acc.value();
    if value >= T::zero() {
        Ok(value)
    } else if -value <= T::lit(256.0) * T::epsilon() * acc.magnitude() {
        Ok(T::zero())
    } else {
        Err(EsrError::Cancellation {
            what: "high-SNR ESR",
            value: value.as_f64(),
            scale: acc.magnitude().as_f64(),
        })
    }
}

/// `E[C_S] = sum_{k in S} sum_n ln(1 + n a_k) w_kn(S)`.
pub fn esr_highsnr_subset<T: Real>(subset: Subset, cfg: &ValidatedConfig<T>) -> Result<T> {
    check_subset(subset, cfg)?;
    let mut acc = CompensatedSum::new();
    for k in subset.iter() {
        for n in 1..=cfg.num_eavesdroppers() {
            let w = weight_w(k, n, subset, cfg)?;
            acc.add(w * (T::from_count(n) * cfg.a(k)).ln_1p());
        }
    }
    finish_nonnegative(acc)
}

/// High-SNR ESR through the `mu_kn` weights.
pub fn esr_highsnr<T: Real>(cfg: &ValidatedConfig<T>) -> Result<EsrEstimate<T>> {
    if cfg.deltas().iter().all(|&d| d == T::zero()) {
        return Ok(EsrEstimate::exact(T::zero()));
    }
    let table = WeightTable::build(cfg)?;
    Ok(EsrEstimate::exact(table.esr(cfg)?))
}

/// High-SNR ESR as the backhaul mixture `sum_S P[S] E[C_S]`; same value as
/// [`esr_highsnr`] by a different grouping of the sums.
pub fn esr_highsnr_mixture<T: Real>(cfg: &ValidatedConfig<T>) -> Result<EsrEstimate<T>> {
    let mut acc = CompensatedSum::new();
    for w in subset_weights(cfg.deltas())? {
        if w.subset.is_empty() || w.probability == T::zero() {
            continue;
        }
        acc.add(w.probability * esr_highsnr_subset(w.subset, cfg)?);
    }
    Ok(EsrEstimate::exact(acc.value()))
}

/// `ESR ≈ slope * (ln(1/beta) - offset)`, with the offset in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteLine<T> {
    pub slope: T,
    pub offset: T,
}

impl<T: Real> AsymptoteLine<T> {
    /// Value of the line at a linear `1/beta`.
    pub fn eval(&self, inv_beta: T) -> T {
        self.slope * (inv_beta.ln() - self.offset)
    }

    pub fn eval_db(&self, inv_beta_db: T) -> T {
        self.eval(crate::scalar::db_to_linear(inv_beta_db))
    }
}

/// Asymptote of the high-SNR ESR in the `(alpha_k, rho_k, 1/beta)`
/// parameterization. The common `1/beta` of `cfg` only fixes the scale used
/// while computing the (scale-free) weights.
pub fn asymptote<T: Real>(cfg: &AsymptoticConfig<T>) -> Result<AsymptoteLine<T>> {
    let validated = cfg.validate(T::lit(DEFAULT_DISTINCTNESS_TOL))?;
    asymptote_validated(&validated, &cfg.snr_fraction)
}

/// Like [`asymptote`] for an already validated (possibly jittered) system.
pub fn asymptote_validated<T: Real>(
    cfg: &ValidatedConfig<T>,
    snr_fraction: &[T],
) -> Result<AsymptoteLine<T>> {
    if snr_fraction.len() != cfg.num_sources() {
        return Err(EsrError::invalid("snr_fraction", "one entry per source required"));
    }
    let none_active = cfg.deltas().iter().fold(T::one(), |p, &d| p * (T::one() - d));
    if none_active == T::one() {
        return Err(EsrError::DegenerateAsymptote);
    }
    let table = WeightTable::build(cfg)?;
    let slope = table.mu_total();
    let mut acc = CompensatedSum::new();
    for k in 0..cfg.num_sources() {
        for n in 1..=cfg.num_eavesdroppers() {
            let log_term = -(T::from_count(n) * cfg.alpha(k)).ln() - snr_fraction[k].ln();
            acc.add(table.mu(k, n) * log_term);
        }
    }
    Ok(AsymptoteLine {
        slope,
        offset: acc.value() / slope,
    })
}

/// `H_n = sum_{j=1}^n 1/j`, `H_0 = 0`.
pub fn harmonic<T: Real>(n: usize) -> T {
    compensated_sum((1..=n).map(|j| T::one() / T::from_count(j)))
}

/// Distribution of the number of active backhauls (Poisson binomial).
fn active_count_pmf<T: Real>(deltas: &[T]) -> Vec<T> {
    let mut pmf = vec![T::zero(); deltas.len() + 1];
    pmf[0] = T::one();
    for (i, &d) in deltas.iter().enumerate() {
        for m in (0..=i + 1).rev() {
            let stay = pmf[m] * (T::one() - d);
            let grow = if m > 0 { pmf[m - 1] * d } else { T::zero() };
            pmf[m] = stay + grow;
        }
    }
    pmf
}

fn check_reliabilities<T: Real>(deltas: &[T]) -> Result<()> {
    for (k, &d) in deltas.iter().enumerate() {
        if !(d >= T::zero() && d <= T::one()) {
            return Err(EsrError::invalid(
                format!("backhaul_reliability[{}]", k + 1),
                format!("must lie in [0, 1], got {d}"),
            ));
        }
    }
    Ok(())
}

/// High-SNR ESR for `K` IID sources, one eavesdropper, common `a = alpha/beta`.
///
/// `E[C_S]` depends on `S` only through `m = |S|`:
/// `ln(1+a) + sum_{k=1}^m (-1)^k C(m,k) sum_{j=1}^{k-1} 1/(j (1+1/a)^j)`.
pub fn esr_iid_highsnr<T: Real>(num_sources: usize, deltas: &[T], a: T) -> Result<T> {
    if num_sources == 0 || deltas.len() != num_sources {
        return Err(EsrError::invalid(
            "backhaul_reliability",
            format!("expected {num_sources} entries, got {}", deltas.len()),
        ));
    }
    if num_sources > K_MAX {
        return Err(EsrError::GuardExceeded {
            what: "number of sources",
            requested: num_sources as u128,
            limit: K_MAX as u128,
        });
    }
    if !(a > T::zero()) || !a.is_finite() {
        return Err(EsrError::invalid("a", format!("must be positive, got {a}")));
    }
    check_reliabilities(deltas)?;

    let pmf = active_count_pmf(deltas);
    // 1 / (1 + 1/a) = a / (1 + a)
    let r = a / (T::one() + a);
    let log_term = a.ln_1p();
    let mut total = CompensatedSum::new();
    for (m, &p) in pmf.iter().enumerate().skip(1) {
        if p == T::zero() {
            continue;
        }
        let mut inner = CompensatedSum::new();
        // partial[k] = sum_{j=1}^{k-1} r^j / j
        let mut partial = T::zero();
        let mut r_pow = T::one();
        for k in 1..=m {
            if k >= 2 {
                let j = k - 1;
                r_pow *= r;
                partial += r_pow / T::from_count(j);
            }
            let c = T::lit(binomial(m as u64, k as u64) as f64);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            inner.add(sign * c * partial);
        }
        total.add(p * (log_term + inner.value()));
    }
    Ok(total.value())
}

/// Asymptote of the IID single-eavesdropper ESR with uniform reliability
/// and `rho = 1`: slope `1 - (1-delta)^K`,
/// offset `ln(1/alpha) - (1/slope) sum_k C(K,k) delta^k (1-delta)^{K-k} H_{k-1}`.
pub fn iid_asymptote<T: Real>(num_sources: usize, delta: T, alpha: T) -> Result<AsymptoteLine<T>> {
    if num_sources == 0 {
        return Err(EsrError::invalid("num_sources", "must be positive"));
    }
    if !(alpha > T::zero()) {
        return Err(EsrError::invalid("alpha", format!("must be positive, got {alpha}")));
    }
    check_reliabilities(&[delta])?;
    if delta == T::zero() {
        return Err(EsrError::DegenerateAsymptote);
    }
    let k_total = num_sources;
    let miss = T::one() - delta;
    let slope = T::one() - miss.powi(k_total as i32);
    let mut acc = CompensatedSum::new();
    for k in 1..=k_total {
        let c = T::lit(binomial(k_total as u64, k as u64) as f64);
        let p = c * delta.powi(k as i32) * miss.powi((k_total - k) as i32);
        acc.add(p * harmonic::<T>(k - 1));
    }
    Ok(AsymptoteLine {
        slope,
        offset: -alpha.ln() - acc.value() / slope,
    })
}
