//! Process-wide size guardrails.
//!
//! The dimension cap bounds every dense matrix side (Kronecker products,
//! isometries, density operators, reduced states). Pure states are stored
//! sparsely and may hold up to `cap²` nonzero amplitudes, so that any
//! bipartition side handed to the eigensolver stays within the cap.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

pub const DEFAULT_DIM_CAP: usize = 4096;
pub const DEFAULT_ATOM_CAP: usize = 1_000_000;
pub const DIM_CAP_ENV: &str = "QICOST_DIM_CAP";

static OVERRIDE: AtomicUsize = AtomicUsize::new(0);
static FROM_ENV: OnceLock<usize> = OnceLock::new();

/// Current dense-dimension cap: an explicit override, else `QICOST_DIM_CAP`, else 4096.
pub fn dim_cap() -> usize {
    let o = OVERRIDE.load(Ordering::Relaxed);
    if o != 0 {
        return o;
    }
    *FROM_ENV.get_or_init(|| {
        std::env::var(DIM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_DIM_CAP)
    })
}

/// Overrides the cap for the rest of the process (used by the CLI `--dim-cap` flag).
pub fn set_dim_cap(cap: usize) {
    OVERRIDE.store(cap.max(1), Ordering::Relaxed);
}

/// Maximum number of nonzero amplitudes in a pure state.
pub fn support_cap() -> u128 {
    let c = dim_cap() as u128;
    c * c
}
