//! Sweep driver for `esr-core`: JSON specs in, CSV out.

pub mod selftest;
pub mod spec;
pub mod sweep;

pub use selftest::{selftest, Check};
pub use spec::{load_spec, parse_spec, Method, Overrides, SpecError, SweepSpec, Units};
pub use sweep::{csv_header, emit_csv, run_sweep, SweepError, SweepRow};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const VALIDATION: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}
