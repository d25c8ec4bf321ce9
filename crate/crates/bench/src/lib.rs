//! Shared helpers for the criterion benches.

use spreadopt_core::{CodeFamily, CorrelationTable};

/// A seeded random family plus its correlation table, the common bench setup.
pub fn family_with_table(n: usize, m: usize, seed: u64) -> (CodeFamily, CorrelationTable) {
    let family = spreadopt_core::random_family(n, m, seed).expect("valid dimensions");
    let table = spreadopt_core::build_table(&family);
    (family, table)
}
