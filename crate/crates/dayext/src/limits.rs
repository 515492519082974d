//! Size guards for enumerating operations.

/// Configured ceilings for the operations that enumerate or materialize sets.
///
/// These are configuration values, not constants: the CLI exposes them as
/// `--guard-carrier` and `--guard-enum`, and tests tighten them to probe
/// guard behavior. `carrier` bounds any single materialized carrier (coend
/// raw carriers, product categories, comma objects); `enumeration` bounds
/// combinatorial searches (function sets, natural-transformation and
/// isomorphism enumeration, end computations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub carrier: usize,
    pub enumeration: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            carrier: 100_000,
            enumeration: 1_000_000,
        }
    }
}

impl Limits {
    /// Check a carrier size against the guard.
    pub fn check_carrier(&self, what: &str, needed: u128) -> crate::Result<()> {
        if needed > self.carrier as u128 {
            Err(crate::Error::guard(what, needed, self.carrier))
        } else {
            Ok(())
        }
    }

    /// Check an enumeration count against the guard.
    pub fn check_enumeration(&self, what: &str, needed: u128) -> crate::Result<()> {
        if needed > self.enumeration as u128 {
            Err(crate::Error::guard(what, needed, self.enumeration))
        } else {
            Ok(())
        }
    }
}
