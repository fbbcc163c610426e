use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resource limits for the exhaustive searches.
///
/// Exceeding a cap is always an error ([`Error::CapExceeded`]); nothing is
/// silently truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest universe accepted by the enumerations.
    pub max_size: usize,
    /// Largest number of relations an enumeration may produce.
    pub max_set: usize,
    /// Largest number of binding tuples an inclusion check may evaluate.
    pub max_evals: u128,
    /// Largest clone (and value-table length) the term search may build.
    pub max_clone: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_size: 6,
            max_set: 20_000,
            max_evals: 1_000_000,
            max_clone: 1 << 16,
        }
    }
}

impl Caps {
    pub(crate) fn check(what: &'static str, count: u128, cap: u128) -> Result<()> {
        if count > cap {
            return Err(Error::CapExceeded { what, count, cap });
        }
        Ok(())
    }
}
