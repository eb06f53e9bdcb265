//! Gaussian-state coefficients of the outgoing fields and the observables
//! derived from them.
//!
//! Every outgoing mode `j` is described by
//! `B_j = <ΔA_j† ΔA_j>`, `C_j = <ΔA_j²>`, `D_jk = <ΔA_j ΔA_k>`,
//! `D̄_jk = -<ΔA_j† ΔA_k>` and a coherent amplitude `ξ_j`.

use thiserror::Error;

use crate::fluctuation::InputOutputMatrix;
use crate::model::{input_anti_normal_coefficients, InputState, Mode, C64, ZERO};

/// Intensities below this are treated as zero.
pub const ZERO_INTENSITY: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StatsError {
    #[error("mean intensity of {0} is zero; the ratio is undefined")]
    ZeroIntensity(Modes),
}

/// One mode or a compound pair of modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modes {
    Single(Mode),
    Pair(Mode, Mode),
}

impl std::fmt::Display for Modes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modes::Single(m) => write!(f, "{m}"),
            Modes::Pair(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputStatistics {
    pub b: [f64; 6],
    pub c: [C64; 6],
    /// Diagonal entries are unused and kept at zero.
    pub d: [[C64; 6]; 6],
    pub dbar: [[C64; 6]; 6],
    pub xi_out: [C64; 6],
}

/// Applies the input–output matrix to independent incident modes.
pub fn output_coefficients(u: &InputOutputMatrix, state: &InputState) -> OutputStatistics {
    let inc = input_anti_normal_coefficients(state);
    let u = &u.u;
    // Row 2j of U (0-based) is the operator row of mode j; columns 2k / 2k+1
    // hold the coefficients of a_k / a_k†.
    let op = |j: usize, k: usize| u[(2 * j, 2 * k)];
    let ad = |j: usize, k: usize| u[(2 * j, 2 * k + 1)];

    let mut b = [0.0; 6];
    let mut c = [ZERO; 6];
    for j in 0..6 {
        let mut bj = ZERO;
        let mut cj = ZERO;
        for (k, n) in inc.iter().enumerate() {
            let (x, y) = (op(j, k), ad(j, k));
            let cross = x.conj() * y * n.c.conj();
            bj += cross + cross.conj() + x.norm_sqr() * (n.b - 1.0) + y.norm_sqr() * n.b;
            cj += x * x * n.c + y * y * n.c.conj() + x * y * (2.0 * n.b - 1.0);
        }
        b[j] = bj.re;
        c[j] = cj;
    }

    let mut d = [[ZERO; 6]; 6];
    let mut dbar = [[ZERO; 6]; 6];
    for j in 0..6 {
        for k in 0..6 {
            if j == k {
                continue;
            }
            let mut djk = ZERO;
            let mut dbjk = ZERO;
            for (l, n) in inc.iter().enumerate() {
                djk += op(j, l) * op(k, l) * n.c
                    + ad(j, l) * ad(k, l) * n.c.conj()
                    + op(j, l) * ad(k, l) * n.b
                    + ad(j, l) * op(k, l) * (n.b - 1.0);
                dbjk -= ad(j, l).conj() * op(k, l) * n.c
                    + op(j, l).conj() * ad(k, l) * n.c.conj()
                    + op(j, l).conj() * op(k, l) * (n.b - 1.0)
                    + ad(j, l).conj() * ad(k, l) * n.b;
            }
            d[j][k] = djk;
            dbar[j][k] = dbjk;
        }
    }

    let xi = state.xi();
    let xi_out = std::array::from_fn(|j| (0..6).map(|k| op(j, k) * xi[k] + ad(j, k) * xi[k].conj()).sum());

    OutputStatistics {
        b,
        c,
        d,
        dbar,
        xi_out,
    }
}

/// Statistics of the incident state itself (identity channel).
pub fn input_statistics(state: &InputState) -> OutputStatistics {
    output_coefficients(&InputOutputMatrix::identity(), state)
}

/// Single-mode principal squeeze variance `1 + 2(B - |C|)`; below 1 means squeezing.
pub fn principal_squeeze_single(stats: &OutputStatistics, j: Mode) -> f64 {
    let j = j.index();
    1.0 + 2.0 * (stats.b[j] - stats.c[j].norm())
}

/// Compound-mode principal squeeze variance; below 2 means squeezing.
pub fn principal_squeeze_compound(stats: &OutputStatistics, j: Mode, k: Mode) -> f64 {
    assert_ne!(j, k, "compound mode needs two distinct modes");
    let (j, k) = (j.index(), k.index());
    2.0 * (1.0 + stats.b[j] + stats.b[k]
        - 2.0 * stats.dbar[j][k].re
        - (stats.c[j] + stats.c[k] + 2.0 * stats.d[j][k]).norm())
}

/// Normally ordered intensity moments of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMoments {
    /// `<W>_N`
    pub mean: f64,
    /// `<(ΔW)²>_N`
    pub variance: f64,
}

pub fn intensity_moments(stats: &OutputStatistics, j: Mode) -> IntensityMoments {
    let j = j.index();
    let (b, c, xi) = (stats.b[j], stats.c[j], stats.xi_out[j]);
    let x2 = xi.norm_sqr();
    let cx = c * xi.conj() * xi.conj();
    IntensityMoments {
        mean: b + x2,
        variance: b * b + c.norm_sqr() + 2.0 * b * x2 + 2.0 * cx.re,
    }
}

/// `<ΔW_j ΔW_k>_N`.
pub fn intensity_covariance(stats: &OutputStatistics, j: Mode, k: Mode) -> f64 {
    let (j, k) = (j.index(), k.index());
    let d = stats.d[j][k];
    let db = stats.dbar[j][k];
    let (xj, xk) = (stats.xi_out[j], stats.xi_out[k]);
    let t = d * xj.conj() * xk.conj() - db * xj * xk.conj();
    d.norm_sqr() + db.norm_sqr() + 2.0 * t.re
}

/// Mean and variance of `W` for one mode or of `W_j + W_k` for a pair.
pub fn combined_moments(stats: &OutputStatistics, modes: Modes) -> IntensityMoments {
    match modes {
        Modes::Single(j) => intensity_moments(stats, j),
        Modes::Pair(j, k) => {
            let a = intensity_moments(stats, j);
            let b = intensity_moments(stats, k);
            IntensityMoments {
                mean: a.mean + b.mean,
                variance: a.variance + b.variance + 2.0 * intensity_covariance(stats, j, k),
            }
        }
    }
}

/// Fano factor `1 + <(ΔW)²>_N / <W>_N`; below 1 means sub-Poissonian light.
pub fn fano_factor(stats: &OutputStatistics, modes: Modes) -> Result<f64, StatsError> {
    let m = combined_moments(stats, modes);
    if m.mean.abs() < ZERO_INTENSITY {
        return Err(StatsError::ZeroIntensity(modes));
    }
    Ok(1.0 + m.variance / m.mean)
}

/// Second reduced moment `<W²>_N / <W>²_N = 1 + <(ΔW)²>_N / <W>²_N`.
pub fn reduced_moment(stats: &OutputStatistics, modes: Modes) -> Result<f64, StatsError> {
    let m = combined_moments(stats, modes);
    if m.mean.abs() < ZERO_INTENSITY {
        return Err(StatsError::ZeroIntensity(modes));
    }
    Ok(1.0 + m.variance / (m.mean * m.mean))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedMoments {
    pub output: f64,
    pub input: f64,
}

impl ReducedMoments {
    /// `T_W = R_W(out) / R_W(in)`.
    pub fn relative(&self) -> f64 {
        self.output / self.input
    }
}

/// Output and input second reduced moments of mode `j`.
pub fn second_reduced_moment(
    stats: &OutputStatistics,
    input: &OutputStatistics,
    j: Mode,
) -> Result<ReducedMoments, StatsError> {
    Ok(ReducedMoments {
        output: reduced_moment(stats, Modes::Single(j))?,
        input: reduced_moment(input, Modes::Single(j))?,
    })
}
