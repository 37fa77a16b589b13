//! Thread-local instrumentation counters.
//!
//! The sensitivity sweep has an efficiency contract (one LP solve, one basis
//! factorization for a whole sweep) that is asserted through these counters.
//! They are thread-local so concurrent runs do not interfere.

use std::cell::Cell;

thread_local! {
    static LP_SOLVES: Cell<u64> = const { Cell::new(0) };
    static BASIS_FACTORIZATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Snapshot of the counters for the current thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counters {
    /// Number of full LP solves (simplex runs).
    pub lp_solves: u64,
    /// Number of basis factorizations built for sensitivity solves.
    pub basis_factorizations: u64,
}

/// Read the current counters.
pub fn counters() -> Counters {
    Counters {
        lp_solves: LP_SOLVES.with(Cell::get),
        basis_factorizations: BASIS_FACTORIZATIONS.with(Cell::get),
    }
}

/// Reset both counters to zero.
pub fn reset() {
    LP_SOLVES.with(|c| c.set(0));
    BASIS_FACTORIZATIONS.with(|c| c.set(0));
}

pub(crate) fn record_lp_solve() {
    LP_SOLVES.with(|c| c.set(c.get() + 1));
}

pub(crate) fn record_basis_factorization() {
    BASIS_FACTORIZATIONS.with(|c| c.set(c.get() + 1));
}
