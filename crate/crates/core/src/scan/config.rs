//! TOML run configuration.
//!
//! ```toml
//! [device]
//! length = 2.0
//! k_f = "0.05"
//! k_b = "0.05"
//! k_p = "1.4"
//!
//! [boundary]
//! a_pf0 = "10"
//!
//! [input_state.s_f]
//! xi = "-10"
//!
//! [input_state.i_f]
//! xi = "10"
//!
//! [solver]
//! grid_points = 1001
//!
//! [scan]
//! observables = ["fano:s_f+i_f"]
//!
//! [[scan.axis]]
//! targets = ["device.k_p"]
//! start = 0.0
//! stop = 3.0
//! count = 101
//!
//! [output]
//! dir = "out"
//! stem = "fig7"
//! ```

use serde::{Deserialize, Deserializer};

use super::{Observable, ScanError, ScanSpec};

pub fn from_toml(text: &str) -> Result<ScanSpec, ScanError> {
    toml::from_str(text).map_err(|e| ScanError::Parse(e.to_string()))
}

pub fn to_toml(spec: &ScanSpec) -> String {
    toml::to_string(spec).expect("scan spec always serializes")
}

pub(super) fn observable_list<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Observable>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    Observable::parse_list(&names).map_err(serde::de::Error::custom)
}
