//! Constructive algorithms producing partitions with few blocking coalitions.

mod anonymous;
mod fhg;

pub use anonymous::{stabilize_anonymous, stabilize_single_peaked, AnonStabilizerTrace, SinglePeakedTrace};
pub use fhg::{stabilize_fhg, stabilize_fhg_with, FhgBranch, FhgStabilizerTrace, FhgStep, FhgThresholds};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Game class a guarantee refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpsClass {
    #[serde(rename = "fhg")]
    Fhg,
    #[serde(rename = "anon")]
    Anon,
    #[serde(rename = "anon-sp")]
    AnonSp,
}

impl EpsClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EpsClass::Fhg => "fhg",
            EpsClass::Anon => "anon",
            EpsClass::AnonSp => "anon-sp",
        }
    }
}

impl fmt::Display for EpsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EpsClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fhg" => Ok(EpsClass::Fhg),
            "anon" => Ok(EpsClass::Anon),
            "anon-sp" => Ok(EpsClass::AnonSp),
            other => Err(format!("unknown class `{other}` (expected fhg, anon or anon-sp)")),
        }
    }
}

/// Smallest `ε` for which the class guarantee applies at this `n`:
///
/// * `fhg`: `2^{−(n^{1/3}/124 − 1)}`
/// * `anon`: `4λ / 2^{n^{1/3}/√(13(λ+1))}`
/// * `anon-sp`: `4λ / 2^{n/4}`
pub fn choose_epsilon_floor(n: usize, lambda: f64, class: EpsClass) -> f64 {
    let nf = n as f64;
    match class {
        EpsClass::Fhg => (-(nf.cbrt() / 124.0 - 1.0)).exp2(),
        EpsClass::Anon => {
            let c = 1.0 / (13.0 * (lambda + 1.0)).sqrt();
            4.0 * lambda / (c * nf.cbrt()).exp2()
        }
        EpsClass::AnonSp => 4.0 * lambda / (nf / 4.0).exp2(),
    }
}
