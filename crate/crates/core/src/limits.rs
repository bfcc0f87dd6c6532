//! Size guards for exhaustive enumeration.
//!
//! `EPSFC_MAX_N` overrides the defaults: `EPSFC_MAX_N=28` raises the
//! coalition-enumeration limit, `EPSFC_MAX_N=28,14` also raises the
//! set-partition limit.

use crate::error::{Error, Result};

pub const ENV_VAR: &str = "EPSFC_MAX_N";
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;
pub const DEFAULT_PARTITION_LIMIT: usize = 12;
/// Coalitions are enumerated as `u64` masks.
pub const HARD_ENUMERATION_LIMIT: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest `n` for which all `2^n − 1` coalitions are enumerated.
    pub enumeration: usize,
    /// Largest `n` for which all set partitions are enumerated.
    pub partitions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { enumeration: DEFAULT_ENUMERATION_LIMIT, partitions: DEFAULT_PARTITION_LIMIT }
    }
}

impl Limits {
    /// Defaults overridden by `EPSFC_MAX_N` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Ok(raw) => Self::parse(&raw),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("{ENV_VAR} must look like `24` or `24,12`, got `{raw}`"));
        let mut parts = raw.split(',').map(str::trim);
        let enumeration = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let mut limits = Self { enumeration, ..Self::default() };
        if let Some(p) = parts.next() {
            limits.partitions = p.parse().map_err(|_| bad())?;
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        limits.enumeration = limits.enumeration.min(HARD_ENUMERATION_LIMIT);
        Ok(limits)
    }

    pub fn check_enumeration(&self, n: usize) -> Result<()> {
        if n > self.enumeration {
            return Err(Error::GuardExceeded { n, limit: self.enumeration });
        }
        Ok(())
    }

    pub fn check_partitions(&self, n: usize) -> Result<()> {
        if n > self.partitions {
            return Err(Error::GuardExceeded { n, limit: self.partitions });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Limits::parse("30").unwrap(), Limits { enumeration: 30, partitions: 12 });
        assert_eq!(Limits::parse("20, 9").unwrap(), Limits { enumeration: 20, partitions: 9 });
        assert_eq!(Limits::parse("100").unwrap().enumeration, HARD_ENUMERATION_LIMIT);
        assert!(Limits::parse("").is_err());
        assert!(Limits::parse("a").is_err());
        assert!(Limits::parse("1,2,3").is_err());
    }

    #[test]
    fn guards() {
        let l = Limits::default();
        assert!(l.check_enumeration(24).is_ok());
        assert!(matches!(l.check_enumeration(25), Err(Error::GuardExceeded { n: 25, limit: 24 })));
        assert!(l.check_partitions(13).is_err());
    }
}
