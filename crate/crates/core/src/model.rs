//! System model: per-source channel parameters, validation, and the
//! combinatorial primitives (subsets, multi-indices, signed binomials)
//! shared by the analytical evaluators.

use std::fmt;

use crate::error::{Collision, EsrError, ProductTerm, Result};
use crate::rng::CounterStream;
use crate::scalar::{db_to_linear, Real};

/// Largest supported number of sources.
pub const K_MAX: usize = 12;

/// Maximum number of expanded terms in a single evaluation.
pub const TERM_GUARD: u128 = 10_000_000;

/// Default relative tolerance for the distinctness of `p * a_k`.
pub const DEFAULT_DISTINCTNESS_TOL: f64 = 1e-9;

/// Relative size of the optional jitter applied to degenerate ratios.
pub const JITTER_SCALE: f64 = 1e-7;

/// Set of source indices, stored as a bitmask. Index `k` is 0-based
/// internally; `Display` prints the 1-based labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_bits(bits: u32) -> Self {
        Subset(bits)
    }

    /// Full set `{0, .., k-1}`.
    pub fn full(k: usize) -> Self {
        assert!(k <= 31);
        Subset(((1u64 << k) - 1) as u32)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Subset(indices.into_iter().fold(0, |m, k| m | (1 << k)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, k: usize) -> bool {
        k < 32 && self.0 & (1 << k) != 0
    }

    pub fn without(self, k: usize) -> Self {
        Subset(self.0 & !(1 << k))
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(k)
            }
        })
    }

    /// All subsets of `self`, ascending by bitmask, starting with the empty set.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur | !full).wrapping_add(1) & full)
            };
            Some(Subset(cur))
        })
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        f.write_str("}")
    }
}

/// All `2^K` subsets of `K` sources, ascending by bitmask.
pub fn enumerate_subsets(num_sources: usize) -> Result<impl Iterator<Item = Subset>> {
    if num_sources > K_MAX {
        return Err(EsrError::GuardExceeded {
            what: "number of sources",
            requested: num_sources as u128,
            limit: K_MAX as u128,
        });
    }
    Ok((0..(1u32 << num_sources)).map(Subset))
}

/// Signed binomial `psi_n = (-1)^(n+1) C(N, n)`.
pub fn psi(n: usize, num_eavesdroppers: usize) -> Result<i64> {
    if n == 0 || n > num_eavesdroppers {
        return Err(EsrError::invalid(
            "n",
            format!("{n} outside 1..={num_eavesdroppers}"),
        ));
    }
    let c = binomial(num_eavesdroppers as u64, n as u64);
    let c = i64::try_from(c).map_err(|_| EsrError::GuardExceeded {
        what: "binomial coefficient",
        requested: c,
        limit: i64::MAX as u128,
    })?;
    Ok(if n % 2 == 1 { c } else { -c })
}

/// Exact binomial coefficient (saturating at `u128::MAX`).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `P[S] = prod_{k in S} delta_k * prod_{j not in S} (1 - delta_j)`.
pub fn subset_probability<T: Real>(subset: Subset, deltas: &[T]) -> T {
    deltas
        .iter()
        .enumerate()
        .fold(T::one(), |p, (k, &d)| {
            if subset.contains(k) {
                p * d
            } else {
                p * (T::one() - d)
            }
        })
}

/// A backhaul activity pattern together with its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetWeight<T> {
    pub subset: Subset,
    pub probability: T,
}

pub fn subset_weights<T: Real>(deltas: &[T]) -> Result<Vec<SubsetWeight<T>>> {
    Ok(enumerate_subsets(deltas.len())?
        .map(|subset| SubsetWeight {
            subset,
            probability: subset_probability(subset, deltas),
        })
        .collect())
}

/// One tuple `(i_k)_{k in M}` with `i_k in 1..=N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    members: Vec<usize>,
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(members: Subset, entries: Vec<usize>) -> Self {
        let members: Vec<usize> = members.iter().collect();
        assert_eq!(members.len(), entries.len(), "one entry per member");
        Self { members, entries }
    }

    /// `i_k` for source `k`, if `k` belongs to the index set.
    pub fn get(&self, k: usize) -> Option<usize> {
        self.members
            .iter()
            .position(|&m| m == k)
            .map(|pos| self.entries[pos])
    }

    /// `(k, i_k)` pairs in ascending source order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().copied().zip(self.entries.iter().copied())
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Odometer over `[N]^{|M|}`; the last member varies fastest.
#[derive(Debug, Clone)]
pub struct MultiIndices {
    members: Subset,
    num_eavesdroppers: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for MultiIndices {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.current.as_mut()?;
        let out = MultiIndex::new(self.members, cur.clone());
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if cur[pos] < self.num_eavesdroppers {
                cur[pos] += 1;
                break;
            }
            cur[pos] = 1;
        }
        Some(out)
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// All `N^{|M|}` multi-indices over the members of `M`.
pub fn multi_indices(members: Subset, num_eavesdroppers: usize) -> Result<MultiIndices> {
    if members.is_empty() {
        return Err(EsrError::invalid("M", "multi-index set must be nonempty"));
    }
    if num_eavesdroppers == 0 {
        return Err(EsrError::invalid("N", "must be positive"));
    }
    let count = checked_pow(num_eavesdroppers, members.len());
    if count > TERM_GUARD {
        return Err(EsrError::GuardExceeded {
            what: "multi-index count",
            requested: count,
            limit: TERM_GUARD,
        });
    }
    Ok(MultiIndices {
        members,
        num_eavesdroppers,
        current: Some(vec![1; members.len()]),
    })
}

/// Running total of expanded terms checked against [`TERM_GUARD`].
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct TermBudget {
    used: u128,
}

impl TermBudget {
    pub fn charge(&mut self, what: &'static str, terms: u128) -> Result<()> {
        self.used = self.used.saturating_add(terms);
        if self.used > TERM_GUARD {
            return Err(EsrError::GuardExceeded {
                what,
                requested: self.used,
                limit: TERM_GUARD,
            });
        }
        Ok(())
    }
}

/// Raw per-source parameters.
///
/// `eve_rate[k]` is `alpha_k` and `dest_rate[k]` is `beta_k`: the exponential
/// parameters of the source-eavesdropper and source-destination SNRs, so the
/// average linear SNRs are `1/alpha_k` and `1/beta_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    pub num_eavesdroppers: usize,
    pub eve_rate: Vec<T>,
    pub dest_rate: Vec<T>,
    pub backhaul_reliability: Vec<T>,
}

impl<T: Real> SystemConfig<T> {
    pub fn new(
        eve_rate: Vec<T>,
        dest_rate: Vec<T>,
        backhaul_reliability: Vec<T>,
        num_eavesdroppers: usize,
    ) -> Self {
        Self {
            num_eavesdroppers,
            eve_rate,
            dest_rate,
            backhaul_reliability,
        }
    }

    pub fn num_sources(&self) -> usize {
        self.eve_rate.len()
    }
}

/// A configuration that passed [`validate_config`]: positive rates,
/// reliabilities in `[0, 1]`, and pairwise-distinct products `p * a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig<T> {
    config: SystemConfig<T>,
    ratio: Vec<T>,
    scale: Vec<T>,
    tolerance: T,
}

impl<T: Real> ValidatedConfig<T> {
    pub fn config(&self) -> &SystemConfig<T> {
        &self.config
    }

    pub fn into_config(self) -> SystemConfig<T> {
        self.config
    }

    pub fn num_sources(&self) -> usize {
        self.config.eve_rate.len()
    }

    pub fn num_eavesdroppers(&self) -> usize {
        self.config.num_eavesdroppers
    }

    /// `a_k = alpha_k / beta_k`.
    pub fn a(&self, k: usize) -> T {
        self.ratio[k]
    }

    pub fn ratios(&self) -> &[T] {
        &self.ratio
    }

    /// `c_k = exp(beta_k)`; may be `+inf` for huge `beta_k`. The evaluators
    /// never multiply by it directly.
    pub fn c(&self, k: usize) -> T {
        self.scale[k]
    }

    pub fn alpha(&self, k: usize) -> T {
        self.config.eve_rate[k]
    }

    pub fn beta(&self, k: usize) -> T {
        self.config.dest_rate[k]
    }

    pub fn delta(&self, k: usize) -> T {
        self.config.backhaul_reliability[k]
    }

    pub fn deltas(&self) -> &[T] {
        &self.config.backhaul_reliability
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    /// Signed binomial as a scalar. `n` must be in `1..=N`.
    pub(crate) fn psi(&self, n: usize) -> T {
        T::from_int(psi(n, self.config.num_eavesdroppers).expect("n in 1..=N"))
    }
}

fn check_positive<T: Real>(name: &str, values: &[T]) -> Result<()> {
    for (k, &v) in values.iter().enumerate() {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(EsrError::invalid(
                format!("{name}[{}]", k + 1),
                format!("must be positive and finite, got {v}"),
            ));
        }
    }
    Ok(())
}

fn check_reliability<T: Real>(values: &[T]) -> Result<()> {
    for (k, &d) in values.iter().enumerate() {
        if !(d >= T::zero() && d <= T::one()) {
            return Err(EsrError::invalid(
                format!("backhaul_reliability[{}]", k + 1),
                format!("must lie in [0, 1], got {d}"),
            ));
        }
    }
    Ok(())
}

/// Checks the configuration and precomputes `a_k` and `c_k`.
///
/// Fails with [`EsrError::DegenerateProducts`] if any `p a_k` and `q a_j`
/// (`j != k`, `p, q in 1..=N`) are within `tol` relative of each other.
pub fn validate_config<T: Real>(config: SystemConfig<T>, tol: T) -> Result<ValidatedConfig<T>> {
    let k = config.num_sources();
    if k == 0 {
        return Err(EsrError::invalid("num_sources", "must be positive"));
    }
    if config.num_eavesdroppers == 0 {
        return Err(EsrError::invalid("num_eavesdroppers", "must be positive"));
    }
    if config.dest_rate.len() != k || config.backhaul_reliability.len() != k {
        return Err(EsrError::invalid(
            "num_sources",
            format!(
                "length mismatch: {} eve rates, {} destination rates, {} reliabilities",
                k,
                config.dest_rate.len(),
                config.backhaul_reliability.len()
            ),
        ));
    }
    if !(tol >= T::zero()) {
        return Err(EsrError::invalid("tolerance", "must be nonnegative"));
    }
    check_positive("eve_rate", &config.eve_rate)?;
    check_positive("dest_rate", &config.dest_rate)?;
    check_reliability(&config.backhaul_reliability)?;

    let ratio: Vec<T> = config
        .eve_rate
        .iter()
        .zip(&config.dest_rate)
        .map(|(&alpha, &beta)| alpha / beta)
        .collect();
    check_positive("a", &ratio)?;

    let collisions = find_collisions(&ratio, config.num_eavesdroppers, tol);
    if !collisions.is_empty() {
        return Err(EsrError::DegenerateProducts(collisions));
    }

    let scale = config.dest_rate.iter().map(|b| b.exp()).collect();
    Ok(ValidatedConfig {
        config,
        ratio,
        scale,
        tolerance: tol,
    })
}

fn find_collisions<T: Real>(ratio: &[T], n_eve: usize, tol: T) -> Vec<Collision> {
    let mut out = Vec::new();
    for k in 0..ratio.len() {
        for j in (k + 1)..ratio.len() {
            for p in 1..=n_eve {
                for q in 1..=n_eve {
                    let x = T::from_count(p) * ratio[k];
                    let y = T::from_count(q) * ratio[j];
                    let gap = (x - y).abs();
                    let scale = x.max(y);
                    if gap <= tol * scale {
                        out.push(Collision {
                            first: ProductTerm {
                                source: k + 1,
                                multiplicity: p,
                            },
                            second: ProductTerm {
                                source: j + 1,
                                multiplicity: q,
                            },
                            relative_gap: (gap / scale).as_f64(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Multiplies each `alpha_k` (hence `a_k`) by `1 + u_k * 1e-7` with
/// `u_k in (-1, 1)` drawn from `seed`, then validates.
pub fn validate_with_jitter<T: Real>(
    mut config: SystemConfig<T>,
    tol: T,
    seed: u64,
) -> Result<ValidatedConfig<T>> {
    let stream = CounterStream::new(seed, u64::MAX);
    for (k, alpha) in config.eve_rate.iter_mut().enumerate() {
        let u = stream.signed_unit(k as u64);
        *alpha *= T::one() + T::lit(u * JITTER_SCALE);
    }
    validate_config(config, tol)
}

/// Parameterization used for asymptotic sweeps: `1/beta_k = rho_k / beta`
/// with the common `1/beta` given in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticConfig<T> {
    pub eve_rate: Vec<T>,
    pub snr_fraction: Vec<T>,
    pub common_inv_beta_db: T,
    pub backhaul_reliability: Vec<T>,
    pub num_eavesdroppers: usize,
}

impl<T: Real> AsymptoticConfig<T> {
    /// Common `beta` in linear scale.
    pub fn beta(&self) -> T {
        T::one() / db_to_linear(self.common_inv_beta_db)
    }

    pub fn with_inv_beta_db(&self, inv_beta_db: T) -> Self {
        Self {
            common_inv_beta_db: inv_beta_db,
            ..self.clone()
        }
    }

    /// `beta_k = beta / rho_k`.
    pub fn to_system_config(&self) -> Result<SystemConfig<T>> {
        if self.snr_fraction.len() != self.eve_rate.len() {
            return Err(EsrError::invalid(
                "snr_fraction",
                format!(
                    "expected {} entries, got {}",
                    self.eve_rate.len(),
                    self.snr_fraction.len()
                ),
            ));
        }
        check_positive("snr_fraction", &self.snr_fraction)?;
        if !self.common_inv_beta_db.is_finite() {
            return Err(EsrError::invalid("common_inv_beta_db", "must be finite"));
        }
        let beta = self.beta();
        Ok(SystemConfig {
            num_eavesdroppers: self.num_eavesdroppers,
            eve_rate: self.eve_rate.clone(),
            dest_rate: self.snr_fraction.iter().map(|&rho| beta / rho).collect(),
            backhaul_reliability: self.backhaul_reliability.clone(),
        })
    }

    pub fn validate(&self, tol: T) -> Result<ValidatedConfig<T>> {
        validate_config(self.to_system_config()?, tol)
    }
}
