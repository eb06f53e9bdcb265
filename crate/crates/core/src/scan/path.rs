//! Dotted parameter paths used as scan axis targets.
//!
//! `device.k_p`, `device.k_p.phase`, `device.delta_p`, `device.length`,
//! `boundary.a_pf0`, `input.s_f.xi`, `input.s_f.n_ch`, ... with an optional
//! `*factor` suffix that scales the axis value before it is applied.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{BoundaryConditions, InputState, Mode, WaveguideParams, C64};

use super::ScanError;

/// Everything one scan point needs besides solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub params: WaveguideParams,
    pub bc: BoundaryConditions,
    pub state: InputState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Coupling(usize),
    Detuning(usize),
    Length,
    Boundary(Mode),
    Squeeze(Mode),
    SqueezePhase(Mode),
    Chaotic(Mode),
    Xi(Mode),
}

const COUPLINGS: [&str; 5] = ["k_s", "k_i", "k_p", "k_f", "k_b"];
const DETUNINGS: [&str; 5] = ["delta_s", "delta_i", "delta_p", "delta_f", "delta_b"];
const BOUNDARY: [&str; 6] = ["a_sf0", "a_if0", "a_pf0", "a_sbl", "a_ibl", "a_pbl"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    /// Real fields: the value. Complex fields: the value times the phase of
    /// the base value.
    Value,
    /// Complex fields only: the phase, keeping the base magnitude.
    Phase,
}

/// A resolved parameter path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParamPath {
    field: Field,
    part: Part,
    factor: f64,
}

impl ParamPath {
    /// Path without the factor suffix.
    pub fn name(&self) -> String {
        let base = match self.field {
            Field::Coupling(i) => format!("device.{}", COUPLINGS[i]),
            Field::Detuning(i) => format!("device.{}", DETUNINGS[i]),
            Field::Length => "device.length".to_string(),
            Field::Boundary(m) => format!("boundary.{}", BOUNDARY[m.index()]),
            Field::Squeeze(m) => format!("input.{m}.r"),
            Field::SqueezePhase(m) => format!("input.{m}.theta"),
            Field::Chaotic(m) => format!("input.{m}.n_ch"),
            Field::Xi(m) => format!("input.{m}.xi"),
        };
        match self.part {
            Part::Value => base,
            Part::Phase => format!("{base}.phase"),
        }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    fn is_complex(field: Field) -> bool {
        matches!(field, Field::Coupling(_) | Field::Boundary(_) | Field::Xi(_))
    }

    /// Writes `factor * value` into `setup`.
    pub fn apply(&self, setup: &mut Setup, value: f64) {
        let v = self.factor * value;
        let set_complex = |z: &mut C64| {
            *z = match self.part {
                Part::Value => {
                    let phase = if z.norm() == 0.0 { 0.0 } else { z.arg() };
                    C64::from_polar(v, phase)
                }
                Part::Phase => C64::from_polar(z.norm(), v),
            }
        };
        let p = &mut setup.params;
        match self.field {
            Field::Coupling(i) => set_complex([&mut p.k_s, &mut p.k_i, &mut p.k_p, &mut p.k_f, &mut p.k_b][i]),
            Field::Detuning(i) => {
                *[
                    &mut p.delta_s,
                    &mut p.delta_i,
                    &mut p.delta_p,
                    &mut p.delta_f,
                    &mut p.delta_b,
                ][i] = v
            }
            Field::Length => p.length = v,
            Field::Boundary(m) => {
                let mut a = setup.bc.as_array();
                set_complex(&mut a[m.index()]);
                setup.bc = BoundaryConditions::from_array(a);
            }
            Field::Squeeze(m) => setup.state.mode_mut(m).r = v,
            Field::SqueezePhase(m) => setup.state.mode_mut(m).theta = v,
            Field::Chaotic(m) => setup.state.mode_mut(m).n_ch = v,
            Field::Xi(m) => set_complex(&mut setup.state.mode_mut(m).xi),
        }
    }
}

impl FromStr for ParamPath {
    type Err = ScanError;

    fn from_str(text: &str) -> Result<Self, ScanError> {
        let bad = || ScanError::UnknownPath(text.to_string());
        let (path, factor) = match text.split_once('*') {
            Some((p, f)) => (p.trim(), f.trim().parse::<f64>().map_err(|_| bad())?),
            None => (text.trim(), 1.0),
        };
        if !factor.is_finite() {
            return Err(bad());
        }
        let parts: Vec<&str> = path.split('.').collect();
        let (field, rest) = match parts.as_slice() {
            ["device", name, rest @ ..] => {
                let field = if let Some(i) = COUPLINGS.iter().position(|c| c == name) {
                    Field::Coupling(i)
                } else if let Some(i) = DETUNINGS.iter().position(|c| c == name) {
                    Field::Detuning(i)
                } else if *name == "length" {
                    Field::Length
                } else {
                    return Err(bad());
                };
                (field, rest)
            }
            ["boundary", name, rest @ ..] => {
                let i = BOUNDARY.iter().position(|c| c == name).ok_or_else(bad)?;
                (Field::Boundary(Mode::ALL[i]), rest)
            }
            ["input", mode, name, rest @ ..] => {
                let m = Mode::from_label(mode).ok_or_else(bad)?;
                let field = match *name {
                    "r" => Field::Squeeze(m),
                    "theta" => Field::SqueezePhase(m),
                    "n_ch" => Field::Chaotic(m),
                    "xi" => Field::Xi(m),
                    _ => return Err(bad()),
                };
                (field, rest)
            }
            _ => return Err(bad()),
        };
        let part = match rest {
            [] => Part::Value,
            ["phase"] if Self::is_complex(field) => Part::Phase,
            _ => return Err(bad()),
        };
        Ok(ParamPath { field, part, factor })
    }
}

impl TryFrom<String> for ParamPath {
    type Error = ScanError;

    fn try_from(s: String) -> Result<Self, ScanError> {
        s.parse()
    }
}

impl From<ParamPath> for String {
    fn from(p: ParamPath) -> String {
        p.to_string()
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factor == 1.0 {
            write!(f, "{}", self.name())
        } else {
            write!(f, "{}*{}", self.name(), self.factor)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> Setup {
        Setup {
            params: WaveguideParams::uncoupled(2.0),
            bc: BoundaryConditions::default(),
            state: InputState::vacuum(),
        }
    }

    #[test]
    fn parses_and_prints() {
        for text in [
            "device.k_p",
            "device.k_s.phase",
            "device.delta_f",
            "device.length",
            "boundary.a_pf0",
            "boundary.a_sbl.phase",
            "input.s_f.xi",
            "input.i_b.n_ch",
            "input.p_f.r",
            "input.p_f.theta",
            "device.delta_b*-1",
            "input.s_f.xi*0.5",
        ] {
            let p: ParamPath = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        for text in [
            "device.k_q",
            "device",
            "device.delta_p.phase",
            "input.x_f.xi",
            "input.s_f.n_ch.phase",
            "boundary.a_pf1",
            "device.k_p*x",
            "solver.grid_points",
        ] {
            assert!(matches!(text.parse::<ParamPath>(), Err(ScanError::UnknownPath(_))), "{text}");
        }
    }

    #[test]
    fn complex_value_keeps_base_phase() {
        let mut s = setup();
        s.state.mode_mut(Mode::SignalForward).xi = C64::new(-10.0, 0.0);
        let p: ParamPath = "input.s_f.xi".parse().unwrap();
        p.apply(&mut s, 3.0);
        assert!((s.state.mode(Mode::SignalForward).xi - C64::new(-3.0, 0.0)).norm() < 1e-15);

        let k: ParamPath = "device.k_p".parse().unwrap();
        k.apply(&mut s, 1.5);
        assert_eq!(s.params.k_p, C64::new(1.5, 0.0));
        let ph: ParamPath = "device.k_p.phase".parse().unwrap();
        ph.apply(&mut s, std::f64::consts::FRAC_PI_2);
        assert!((s.params.k_p - C64::new(0.0, 1.5)).norm() < 1e-15);
        k.apply(&mut s, 2.0);
        assert!((s.params.k_p - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn factor_scales_value() {
        let mut s = setup();
        let p: ParamPath = "device.delta_b*-2".parse().unwrap();
        p.apply(&mut s, 1.5);
        assert_eq!(s.params.delta_b, -3.0);
        let b: ParamPath = "boundary.a_pf0".parse().unwrap();
        b.apply(&mut s, 10.0);
        assert_eq!(s.bc.a_pf0, C64::new(10.0, 0.0));
        let n: ParamPath = "input.s_f.n_ch".parse().unwrap();
        n.apply(&mut s, 100.0);
        assert_eq!(s.state.mode(Mode::SignalForward).n_ch, 100.0);
    }
}
