//! Named scan outputs: `lambda:s_f`, `lambda:s_f+i_f`, `fano:s_f+i_b`,
//! `rw:s_f`, `tw:s_f`, `mean_w:s_f`, `flux_drift`, `signature_dev`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::Mode;
use crate::quantum_stats::{
    combined_moments, fano_factor, principal_squeeze_compound, principal_squeeze_single, reduced_moment,
    Modes, OutputStatistics,
};

use super::ScanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Observable {
    /// Principal squeeze variance of one mode or a compound mode.
    Lambda(Modes),
    Fano(Modes),
    /// Second reduced moment of the outgoing field.
    Rw(Mode),
    /// Output over input second reduced moment.
    Tw(Mode),
    MeanW(Modes),
    FluxDrift,
    SignatureDev,
}

/// Compound modes reported by `all`.
pub const STANDARD_PAIRS: [(Mode, Mode); 4] = [
    (Mode::SignalForward, Mode::IdlerForward),
    (Mode::SignalBackward, Mode::IdlerBackward),
    (Mode::SignalForward, Mode::IdlerBackward),
    (Mode::IdlerForward, Mode::SignalBackward),
];

/// Inputs an observable may need at one scan point.
pub struct PointValues<'a> {
    pub output: &'a OutputStatistics,
    pub input: &'a OutputStatistics,
    pub flux_drift: f64,
    pub signature_deviation: f64,
}

impl Observable {
    /// The flat record: λ of every mode and standard pair, Fano factors of the
    /// same, then R_W and T_W of every mode.
    pub fn all() -> Vec<Observable> {
        let singles = Mode::ALL.map(Modes::Single);
        let pairs = STANDARD_PAIRS.map(|(a, b)| Modes::Pair(a, b));
        let mut out: Vec<Observable> = singles.iter().chain(&pairs).map(|m| Observable::Lambda(*m)).collect();
        out.extend(pairs.iter().chain(&singles).map(|m| Observable::Fano(*m)));
        out.extend(Mode::ALL.map(Observable::Rw));
        out.extend(Mode::ALL.map(Observable::Tw));
        out
    }

    /// Parses a comma-free list entry; `all` expands to [`Observable::all`].
    pub fn parse_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Observable>, ScanError> {
        let mut out = Vec::new();
        for n in names {
            if n.as_ref().trim() == "all" {
                out.extend(Observable::all());
            } else {
                out.push(n.as_ref().parse()?);
            }
        }
        Ok(out)
    }

    /// `None` when the quantity is undefined at this point (zero intensity).
    pub fn evaluate(&self, v: &PointValues<'_>) -> Option<f64> {
        match *self {
            Observable::Lambda(Modes::Single(m)) => Some(principal_squeeze_single(v.output, m)),
            Observable::Lambda(Modes::Pair(a, b)) => Some(principal_squeeze_compound(v.output, a, b)),
            Observable::Fano(m) => fano_factor(v.output, m).ok(),
            Observable::Rw(m) => reduced_moment(v.output, Modes::Single(m)).ok(),
            Observable::Tw(m) => {
                let out = reduced_moment(v.output, Modes::Single(m)).ok()?;
                let inp = reduced_moment(v.input, Modes::Single(m)).ok()?;
                Some(out / inp)
            }
            Observable::MeanW(m) => Some(combined_moments(v.output, m).mean),
            Observable::FluxDrift => Some(v.flux_drift),
            Observable::SignatureDev => Some(v.signature_deviation),
        }
    }

    /// Axis label used in plot scripts.
    pub fn describe(&self) -> String {
        match self {
            Observable::Lambda(m) => format!("principal squeeze variance {m}"),
            Observable::Fano(m) => format!("Fano factor {m}"),
            Observable::Rw(m) => format!("R_W {m}"),
            Observable::Tw(m) => format!("T_W {m}"),
            Observable::MeanW(m) => format!("<W> {m}"),
            Observable::FluxDrift => "relative flux drift".to_string(),
            Observable::SignatureDev => "signature deviation".to_string(),
        }
    }
}

fn parse_modes(s: &str) -> Option<Modes> {
    match s.split_once('+') {
        Some((a, b)) => {
            let (a, b) = (Mode::from_label(a.trim())?, Mode::from_label(b.trim())?);
            (a != b).then_some(Modes::Pair(a, b))
        }
        None => Mode::from_label(s.trim()).map(Modes::Single),
    }
}

impl FromStr for Observable {
    type Err = ScanError;

    fn from_str(text: &str) -> Result<Self, ScanError> {
        let bad = || ScanError::UnknownObservable(text.to_string());
        let t = text.trim();
        match t {
            "flux_drift" => return Ok(Observable::FluxDrift),
            "signature_dev" => return Ok(Observable::SignatureDev),
            _ => {}
        }
        let (kind, modes) = t.split_once(':').ok_or_else(bad)?;
        let modes = parse_modes(modes).ok_or_else(bad)?;
        let single = match modes {
            Modes::Single(m) => Some(m),
            Modes::Pair(..) => None,
        };
        match kind {
            "lambda" => Ok(Observable::Lambda(modes)),
            "fano" => Ok(Observable::Fano(modes)),
            "mean_w" => Ok(Observable::MeanW(modes)),
            "rw" => single.map(Observable::Rw).ok_or_else(bad),
            "tw" => single.map(Observable::Tw).ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Observable {
    type Error = ScanError;

    fn try_from(s: String) -> Result<Self, ScanError> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Lambda(m) => write!(f, "lambda:{m}"),
            Observable::Fano(m) => write!(f, "fano:{m}"),
            Observable::Rw(m) => write!(f, "rw:{m}"),
            Observable::Tw(m) => write!(f, "tw:{m}"),
            Observable::MeanW(m) => write!(f, "mean_w:{m}"),
            Observable::FluxDrift => write!(f, "flux_drift"),
            Observable::SignatureDev => write!(f, "signature_dev"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputState;
    use crate::quantum_stats::input_statistics;

    #[test]
    fn names_round_trip() {
        for o in Observable::all()
            .into_iter()
            .chain([Observable::FluxDrift, Observable::SignatureDev])
            .chain([Observable::MeanW(Modes::Pair(Mode::SignalForward, Mode::IdlerForward))])
        {
            assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
        assert_eq!(Observable::all().len(), 10 + 10 + 12);
    }

    #[test]
    fn rejects_bad_names() {
        for t in ["lambda", "lambda:x_f", "rw:s_f+i_f", "fano:s_f+s_f", "foo:s_f", "tw:"] {
            assert!(t.parse::<Observable>().is_err(), "{t}");
        }
        let l = Observable::parse_list(&["all", "flux_drift"]).unwrap();
        assert_eq!(l.len(), 33);
    }

    #[test]
    fn zero_intensity_is_undefined() {
        let s = input_statistics(&InputState::vacuum());
        let v = PointValues {
            output: &s,
            input: &s,
            flux_drift: 0.0,
            signature_deviation: 0.0,
        };
        assert_eq!("fano:s_f".parse::<Observable>().unwrap().evaluate(&v), None);
        assert_eq!("tw:s_f".parse::<Observable>().unwrap().evaluate(&v), None);
        assert_eq!("lambda:s_f".parse::<Observable>().unwrap().evaluate(&v), Some(1.0));
        assert_eq!("mean_w:s_f".parse::<Observable>().unwrap().evaluate(&v), Some(0.0));
    }
}
