//! Prebuilt scans for figures 2 to 12.
//!
//! Axis ranges not fixed by the figure parameters are chosen to bracket the
//! features of interest:
//!
//! | id | axes | observables |
//! |----|------|-------------|
//! | 2  | A_pF ∈ [0,10] × K_p ∈ [0,5] | λ (s_b,i_b) |
//! | 3  | δ_p ∈ [0,20] | λ (s_f,i_f), λ (s_b,i_b) |
//! | 4  | K_p ∈ [0,10] × δ_p ∈ [0,20] | λ (s_f,i_f) |
//! | 5  | δ_s × δ_i ∈ [0,20]² | λ (s_f,i_f), λ (s_f,i_b) |
//! | 6  | A_pF ∈ [0,10] | F_n (s_f,i_f) |
//! | 7  | K_p ∈ [0,3] | F_n (s_f,i_f) |
//! | 8  | ξ ∈ [0,20], ξ_sF = −ξ, ξ_iF = ξ | F_n (s_f,i_f) |
//! | 9  | K_p ∈ [0,10] × δ_p ∈ [0,20] | F_n (s_f,i_f) |
//! | 10 | K_s × K_i ∈ [0,5]² | F_n (s_f,i_f), (s_b,i_b), (s_f,i_b) |
//! | 11 | K_p ∈ [0,10] × δ_p ∈ [0,20] | R_W s_f |
//! | 12 | A_pF ∈ [0,10] × n_ch,sF ∈ [0,400] | T_W s_f |

use std::path::PathBuf;

use crate::model::{BoundaryConditions, InputState, Mode, WaveguideParams, C64};

use super::{Axis, Observable, OutputSettings, ScanError, ScanSettings, ScanSpec, SolverSettings};

pub const FIGURE_IDS: std::ops::RangeInclusive<u32> = 2..=12;

/// Points per axis of a one-dimensional scan.
const LINE: usize = 101;
/// Points per axis of a two-dimensional scan.
const MAP: usize = 61;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Phase-matched guide with weak signal and idler seeds.
fn seeded() -> (WaveguideParams, BoundaryConditions, InputState) {
    let params = WaveguideParams {
        k_f: c(0.05),
        k_b: c(0.05),
        ..WaveguideParams::uncoupled(2.0)
    };
    let bc = BoundaryConditions {
        a_sf0: c(0.1),
        a_if0: c(0.1),
        a_pf0: c(10.0),
        ..Default::default()
    };
    (params, bc, InputState::vacuum())
}

/// Phase-matched guide, pump only, coherent signal and idler fluctuations.
fn stimulated() -> (WaveguideParams, BoundaryConditions, InputState) {
    let params = WaveguideParams {
        k_f: c(0.05),
        k_b: c(0.05),
        ..WaveguideParams::uncoupled(2.0)
    };
    let bc = BoundaryConditions {
        a_pf0: c(10.0),
        ..Default::default()
    };
    let mut state = InputState::vacuum();
    state.mode_mut(Mode::SignalForward).xi = c(-10.0);
    state.mode_mut(Mode::IdlerForward).xi = c(10.0);
    (params, bc, state)
}

fn obs(names: &[&str]) -> Vec<Observable> {
    names.iter().map(|n| n.parse().expect("recipe observable")).collect()
}

fn axis(target: &str, start: f64, stop: f64, count: usize, label: &str) -> Axis {
    Axis::new(target, start, stop, count)
        .expect("recipe path")
        .labelled(label)
}

fn spec(
    id: u32,
    (device, boundary, input_state): (WaveguideParams, BoundaryConditions, InputState),
    axes: Vec<Axis>,
    observables: &[&str],
    title: &str,
) -> ScanSpec {
    ScanSpec {
        device,
        boundary,
        input_state,
        solver: SolverSettings::default(),
        scan: ScanSettings {
            observables: obs(observables),
            axis: axes,
        },
        output: OutputSettings {
            dir: PathBuf::from("out"),
            stem: format!("fig{id}"),
            title: title.to_string(),
        },
    }
}

/// The scan behind figure `id`.
pub fn emit_figure_recipe(id: u32) -> Result<ScanSpec, ScanError> {
    let k_p = |count| axis("device.k_p", 0.0, 10.0, count, "K_p");
    let delta_p = |count| axis("device.delta_p", 0.0, 20.0, count, "delta_p");
    let a_pf = |stop, count| axis("boundary.a_pf0", 0.0, stop, count, "A_pF");
    let spec = match id {
        2 => spec(
            id,
            seeded(),
            vec![a_pf(10.0, MAP), axis("device.k_p", 0.0, 5.0, MAP, "K_p")],
            &["lambda:s_b+i_b"],
            "principal squeeze variance (s_B,i_B)",
        ),
        3 => {
            let mut base = seeded();
            base.0.k_p = c(5.0);
            spec(
                id,
                base,
                vec![delta_p(LINE)],
                &["lambda:s_f+i_f", "lambda:s_b+i_b"],
                "principal squeeze variance vs delta_p",
            )
        }
        4 => {
            let mut base = seeded();
            base.0.delta_f = 5.0;
            base.0.delta_b = 5.0;
            spec(
                id,
                base,
                vec![k_p(MAP), delta_p(MAP)],
                &["lambda:s_f+i_f"],
                "principal squeeze variance (s_F,i_F), delta_F = delta_B = 5",
            )
        }
        5 => {
            let mut base = seeded();
            base.0.k_p = c(5.0);
            base.0.k_s = c(5.0);
            base.0.k_i = c(5.0);
            spec(
                id,
                base,
                vec![
                    axis("device.delta_s", 0.0, 20.0, MAP, "delta_s"),
                    axis("device.delta_i", 0.0, 20.0, MAP, "delta_i"),
                ],
                &["lambda:s_f+i_f", "lambda:s_f+i_b"],
                "principal squeeze variance vs signal and idler mismatch",
            )
        }
        6 => spec(
            id,
            stimulated(),
            vec![a_pf(10.0, LINE)],
            &["fano:s_f+i_f"],
            "Fano factor (s_F,i_F) vs pump amplitude",
        ),
        7 => spec(
            id,
            stimulated(),
            vec![axis("device.k_p", 0.0, 3.0, LINE, "K_p")],
            &["fano:s_f+i_f"],
            "Fano factor (s_F,i_F) vs K_p",
        ),
        8 => {
            let mut base = stimulated();
            base.0.k_p = c(1.4);
            let mut xi = axis("input.s_f.xi", 0.0, 20.0, LINE, "xi");
            xi.targets.push("input.i_f.xi".parse().expect("recipe path"));
            spec(
                id,
                base,
                vec![xi],
                &["fano:s_f+i_f"],
                "Fano factor (s_F,i_F) vs incident amplitude",
            )
        }
        9 => {
            let mut base = stimulated();
            base.0.length = 1.0;
            base.0.delta_f = 5.0;
            base.0.delta_b = 5.0;
            spec(
                id,
                base,
                vec![k_p(MAP), delta_p(MAP)],
                &["fano:s_f+i_f"],
                "Fano factor (s_F,i_F), L = 1, delta_F = delta_B = 5",
            )
        }
        10 => {
            let mut base = stimulated();
            base.0.k_p = c(1.4);
            spec(
                id,
                base,
                vec![
                    axis("device.k_s", 0.0, 5.0, MAP, "K_s"),
                    axis("device.k_i", 0.0, 5.0, MAP, "K_i"),
                ],
                &["fano:s_f+i_f", "fano:s_b+i_b", "fano:s_f+i_b"],
                "Fano factor vs K_s and K_i",
            )
        }
        11 | 12 => {
            let mut base = stimulated();
            base.0.delta_f = 5.0;
            base.0.delta_b = 5.0;
            base.2.mode_mut(Mode::SignalForward).xi = c(10.0);
            base.2.mode_mut(Mode::SignalForward).n_ch = 100.0;
            if id == 11 {
                spec(
                    id,
                    base,
                    vec![k_p(MAP), delta_p(MAP)],
                    &["rw:s_f"],
                    "second reduced moment R_W of s_F",
                )
            } else {
                base.0.k_p = c(8.0);
                base.0.delta_p = 20.0;
                base.2.mode_mut(Mode::SignalForward).n_ch = 0.0;
                spec(
                    id,
                    base,
                    vec![
                        a_pf(10.0, MAP),
                        axis("input.s_f.n_ch", 0.0, 400.0, MAP, "n_ch,sF"),
                    ],
                    &["tw:s_f"],
                    "relative second reduced moment T_W of s_F",
                )
            }
        }
        _ => return Err(ScanError::UnknownFigure(id)),
    };
    Ok(spec)
}
