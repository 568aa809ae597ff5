//! Ergodic secrecy rate (ESR) of optimal source selection over Rayleigh
//! fading with unreliable wireless backhaul and `N` non-colluding
//! eavesdroppers.
//!
//! Three analytical routes are provided, plus a simulator to check them:
//!
//! * [`exact`]: closed form built from exponential integrals;
//! * [`highsnr`]: the ratio-selection approximation as a weighted sum of
//!   `ln(1 + n a_k)`, its asymptote (slope and power offset), and the IID
//!   single-eavesdropper special case;
//! * [`montecarlo`]: direct simulation of fading, backhaul and selection.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.
//!
//! ```
//! use esr_core::{esr_exact, esr_highsnr, validate_config, SystemConfig};
//!
//! // one source, one eavesdropper, both links at 0 dB, perfect backhaul
//! let cfg = validate_config(SystemConfig::<f64>::new(vec![1.0], vec![1.0], vec![1.0], 1), 1e-9)?;
//! let exact = esr_exact(&cfg)?.value;
//! let high = esr_highsnr(&cfg)?.value;
//! assert!((exact - 0.235_018_745).abs() < 1e-8);
//! assert!((high - 2f64.ln()).abs() < 1e-12);
//! # Ok::<(), esr_core::EsrError>(())
//! ```

pub mod error;
pub mod exact;
pub mod highsnr;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod summation;

pub use error::{Collision, EsrError, ProductTerm, Result};
pub use exact::{
    cdf_gamma_exact, cdf_gamma_exact_series, esr_exact, esr_exact_subset,
    partial_fraction_coeffs_exact, EsrEstimate, PartialFractionCoeffs,
};
pub use highsnr::{
    asymptote, asymptote_validated, cdf_gamma_highsnr, esr_highsnr, esr_highsnr_mixture,
    esr_highsnr_subset, esr_iid_highsnr, harmonic, iid_asymptote, weight_w, AsymptoteLine,
    WeightTable,
};
pub use model::{
    enumerate_subsets, multi_indices, psi, subset_probability, subset_weights, validate_config,
    validate_with_jitter, AsymptoticConfig, MultiIndex, Subset, SubsetWeight, SystemConfig,
    ValidatedConfig, DEFAULT_DISTINCTNESS_TOL, K_MAX, TERM_GUARD,
};
pub use montecarlo::{
    mc_esr, ratio_rate_realization, sample_realization, secrecy_rate_realization, McMode,
    McSettings, Realization,
};
pub use rng::CounterStream;
pub use scalar::{db_to_linear, linear_to_db, Real};
pub use special::{exp_int_e1, exp_int_e1_scaled, exp_int_ei_neg, ExpIntResult};

pub type Config = SystemConfig<f64>;
pub type Validated = ValidatedConfig<f64>;
pub type Asymptotic = AsymptoticConfig<f64>;
pub type Estimate = EsrEstimate<f64>;
pub type Line = AsymptoteLine<f64>;
pub type Weights = WeightTable<f64>;
pub type Coeffs = PartialFractionCoeffs<f64>;
pub type ExpInt = ExpIntResult<f64>;

pub type Config32 = SystemConfig<f32>;
pub type Validated32 = ValidatedConfig<f32>;
pub type Estimate32 = EsrEstimate<f32>;
