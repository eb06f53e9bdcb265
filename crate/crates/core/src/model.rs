//! Device and input-state parametrization shared by every solver stage.
//!
//! Units follow the scaled convention used throughout the crate: couplings and
//! detunings in mm⁻¹ (nonlinear couplings in 10⁻⁶ mm⁻¹·m·V⁻¹), lengths in mm,
//! mean-field amplitudes in 10⁶ V·m⁻¹, and fluctuation amplitudes `xi` scaled
//! so that `|xi|²` is a photon number. No conversion happens internally.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex_str;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// The six interacting modes, in the global index order used by every
/// vector and matrix in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    SignalForward,
    IdlerForward,
    PumpForward,
    SignalBackward,
    IdlerBackward,
    PumpBackward,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::SignalForward,
        Mode::IdlerForward,
        Mode::PumpForward,
        Mode::SignalBackward,
        Mode::IdlerBackward,
        Mode::PumpBackward,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    pub fn is_forward(self) -> bool {
        self.index() < 3
    }

    /// Short label used in config keys and CSV headers (`s_f`, `i_b`, ...).
    pub fn label(self) -> &'static str {
        match self {
            Mode::SignalForward => "s_f",
            Mode::IdlerForward => "i_f",
            Mode::PumpForward => "p_f",
            Mode::SignalBackward => "s_b",
            Mode::IdlerBackward => "i_b",
            Mode::PumpBackward => "p_b",
        }
    }

    pub fn from_label(s: &str) -> Option<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("length must be positive (got {0})")]
    NonPositiveLength(f64),
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: String },
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: String, value: f64 },
    #[error(
        "mode {mode} has a nonzero incident mean field and a nonzero fluctuation amplitude xi; \
         only one description may be used per mode"
    )]
    MixedDescription { mode: Mode },
}

/// Coupling constants, detunings and length of one waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideParams {
    #[serde(with = "complex_str", default)]
    pub k_s: C64,
    #[serde(with = "complex_str", default)]
    pub k_i: C64,
    #[serde(with = "complex_str", default)]
    pub k_p: C64,
    #[serde(with = "complex_str", default)]
    pub k_f: C64,
    #[serde(with = "complex_str", default)]
    pub k_b: C64,
    #[serde(default)]
    pub delta_s: f64,
    #[serde(default)]
    pub delta_i: f64,
    #[serde(default)]
    pub delta_p: f64,
    #[serde(default)]
    pub delta_f: f64,
    #[serde(default)]
    pub delta_b: f64,
    pub length: f64,
}

impl WaveguideParams {
    /// A waveguide of the given length with every coupling and detuning zero.
    pub fn uncoupled(length: f64) -> Self {
        WaveguideParams {
            k_s: ZERO,
            k_i: ZERO,
            k_p: ZERO,
            k_f: ZERO,
            k_b: ZERO,
            delta_s: 0.0,
            delta_i: 0.0,
            delta_p: 0.0,
            delta_f: 0.0,
            delta_b: 0.0,
            length,
        }
    }

    /// Same device with the nonlinear couplings scaled by `s`.
    pub fn with_nonlinear_scale(&self, s: f64) -> Self {
        WaveguideParams {
            k_f: self.k_f * s,
            k_b: self.k_b * s,
            ..*self
        }
    }

    /// Gauge-invariant phase `-arg K_p + arg K_s + arg K_i`.
    pub fn overall_phase(&self) -> f64 {
        -self.k_p.arg() + self.k_s.arg() + self.k_i.arg()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let complexes = [
            ("k_s", self.k_s),
            ("k_i", self.k_i),
            ("k_p", self.k_p),
            ("k_f", self.k_f),
            ("k_b", self.k_b),
        ];
        for (field, v) in complexes {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(ModelError::NonFinite {
                    field,
                    value: v.to_string(),
                });
            }
        }
        let reals = [
            ("delta_s", self.delta_s),
            ("delta_i", self.delta_i),
            ("delta_p", self.delta_p),
            ("delta_f", self.delta_f),
            ("delta_b", self.delta_b),
            ("length", self.length),
        ];
        for (field, v) in reals {
            if !v.is_finite() {
                return Err(ModelError::NonFinite {
                    field,
                    value: v.to_string(),
                });
            }
        }
        if self.length <= 0.0 {
            return Err(ModelError::NonPositiveLength(self.length));
        }
        Ok(())
    }
}

/// Classical amplitudes fixed at the facets: forward modes at `z = 0`,
/// backward modes at `z = L`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConditions {
    #[serde(with = "complex_str", default)]
    pub a_sf0: C64,
    #[serde(with = "complex_str", default)]
    pub a_if0: C64,
    #[serde(with = "complex_str", default)]
    pub a_pf0: C64,
    #[serde(with = "complex_str", default)]
    pub a_sbl: C64,
    #[serde(with = "complex_str", default)]
    pub a_ibl: C64,
    #[serde(with = "complex_str", default)]
    pub a_pbl: C64,
}

impl BoundaryConditions {
    /// Incident amplitude of `mode` at its entrance facet.
    pub fn incident(&self, mode: Mode) -> C64 {
        self.as_array()[mode.index()]
    }

    pub fn as_array(&self) -> [C64; 6] {
        [
            self.a_sf0, self.a_if0, self.a_pf0, self.a_sbl, self.a_ibl, self.a_pbl,
        ]
    }

    pub fn from_array(a: [C64; 6]) -> Self {
        BoundaryConditions {
            a_sf0: a[0],
            a_if0: a[1],
            a_pf0: a[2],
            a_sbl: a[3],
            a_ibl: a[4],
            a_pbl: a[5],
        }
    }

    pub fn forward(&self) -> [C64; 3] {
        [self.a_sf0, self.a_if0, self.a_pf0]
    }

    pub fn backward(&self) -> [C64; 3] {
        [self.a_sbl, self.a_ibl, self.a_pbl]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        const NAMES: [&str; 6] = ["a_sf0", "a_if0", "a_pf0", "a_sbl", "a_ibl", "a_pbl"];
        for (field, v) in NAMES.into_iter().zip(self.as_array()) {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(ModelError::NonFinite {
                    field,
                    value: v.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Incident state of one mode: squeezed, chaotic noise and a coherent
/// fluctuation amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeInput {
    /// Squeeze parameter.
    #[serde(default)]
    pub r: f64,
    /// Squeeze phase in radians.
    #[serde(default)]
    pub theta: f64,
    /// Mean number of chaotic photons.
    #[serde(default)]
    pub n_ch: f64,
    #[serde(with = "complex_str", default)]
    pub xi: C64,
}

impl ModeInput {
    pub fn coherent(xi: C64) -> Self {
        ModeInput {
            xi,
            ..Default::default()
        }
    }
}

/// Statistically independent incident states of the six modes, in [`Mode`] order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InputState {
    pub modes: [ModeInput; 6],
}

impl InputState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn mode(&self, m: Mode) -> &ModeInput {
        &self.modes[m.index()]
    }

    pub fn mode_mut(&mut self, m: Mode) -> &mut ModeInput {
        &mut self.modes[m.index()]
    }

    pub fn xi(&self) -> [C64; 6] {
        self.modes.map(|m| m.xi)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (mode, input) in Mode::ALL.into_iter().zip(self.modes.iter()) {
            let scalars = [("r", input.r), ("theta", input.theta), ("n_ch", input.n_ch)];
            for (name, v) in scalars {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite {
                        field: name,
                        value: format!("{v} (mode {mode})"),
                    });
                }
            }
            if !(input.xi.re.is_finite() && input.xi.im.is_finite()) {
                return Err(ModelError::NonFinite {
                    field: "xi",
                    value: format!("{} (mode {mode})", input.xi),
                });
            }
            if input.r < 0.0 {
                return Err(ModelError::Negative {
                    field: format!("input_state.{mode}.r"),
                    value: input.r,
                });
            }
            if input.n_ch < 0.0 {
                return Err(ModelError::Negative {
                    field: format!("input_state.{mode}.n_ch"),
                    value: input.n_ch,
                });
            }
        }
        Ok(())
    }
}

// The table layout of the config file keys each mode by its label.
impl Serialize for InputState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for m in Mode::ALL {
            map.serialize_entry(m.label(), self.mode(m))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for InputState {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use std::collections::BTreeMap;
        let raw: BTreeMap<String, ModeInput> = BTreeMap::deserialize(deserializer)?;
        let mut state = InputState::default();
        for (key, value) in raw {
            let mode = Mode::from_label(&key).ok_or_else(|| {
                serde::de::Error::custom(format!("unknown mode `{key}` in input_state"))
            })?;
            *state.mode_mut(mode) = value;
        }
        Ok(state)
    }
}

/// Anti-normally ordered moments `B = <a a†>` and `C = <a²>` of one incident mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiNormal {
    pub b: f64,
    pub c: C64,
}

/// Anti-normal coefficients of every incident mode. Cross-mode moments vanish
/// because incident fields are independent.
pub fn input_anti_normal_coefficients(state: &InputState) -> [AntiNormal; 6] {
    state.modes.map(|m| {
        let ch = m.r.cosh();
        AntiNormal {
            b: ch * ch + m.n_ch,
            c: C64::from_polar(0.5 * (2.0 * m.r).sinh(), m.theta),
        }
    })
}

/// A device/boundary pair that passed [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedConfig {
    pub params: WaveguideParams,
    pub bc: BoundaryConditions,
}

pub fn validate(
    params: &WaveguideParams,
    bc: &BoundaryConditions,
) -> Result<CheckedConfig, ModelError> {
    params.validate()?;
    bc.validate()?;
    Ok(CheckedConfig {
        params: *params,
        bc: *bc,
    })
}

/// Rejects modes described both by a classical incident amplitude and by a
/// coherent fluctuation amplitude.
pub fn check_single_description(
    bc: &BoundaryConditions,
    state: &InputState,
) -> Result<(), ModelError> {
    for mode in Mode::ALL {
        if bc.incident(mode) != ZERO && state.mode(mode).xi != ZERO {
            return Err(ModelError::MixedDescription { mode });
        }
    }
    Ok(())
}
