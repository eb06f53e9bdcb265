//! Linear operator corrections around a frozen mean field.
//!
//! The stacked vector is `(δA_j, δA_j†)` for the six modes in
//! [`Mode`](crate::model::Mode) order, so index `2j` holds the operator and
//! `2j + 1` its adjoint. Indices 0..6 are the forward modes, 6..12 the backward
//! ones.

use std::io::Write;

use nalgebra::SMatrix;
use thiserror::Error;

use crate::equations::{linearization, rhs};
use crate::mean_field::MeanFieldSolution;
use crate::model::{WaveguideParams, C64, ZERO};

pub type CMat12 = SMatrix<C64, 12, 12>;
pub type CMat6 = SMatrix<C64, 6, 6>;

type Raw = [[C64; 12]; 12];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluctuationError {
    #[error(
        "mean-field grid too coarse: step-halving changed the propagation matrix by {difference:.3e} \
         (tolerance {tolerance:.1e})"
    )]
    GridTooCoarse { difference: f64, tolerance: f64 },
    #[error("backward block of the propagation matrix is singular (condition number {condition:.3e})")]
    SingularBackwardBlock { condition: f64 },
}

/// Condition number above which the backward block counts as singular.
const MAX_BACKWARD_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationOptions {
    /// RK4 steps per mean-field grid interval.
    pub substeps: usize,
    /// When set, the basis is also integrated with twice as many steps and the
    /// two results must agree to this relative max-norm tolerance. The finer
    /// result is returned.
    pub halving_tolerance: Option<f64>,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        FluctuationOptions {
            substeps: 1,
            halving_tolerance: Some(1e-6),
        }
    }
}

/// Signature of the stacked vector along `z`: `+1/-1` for operator/adjoint of
/// forward modes and the opposite pattern for backward modes.
pub const PROPAGATION_SIGNATURE: [f64; 12] = [
    1.0, -1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0,
];

/// Boson signature of physical inputs and outputs: `+1/-1` for
/// operator/adjoint of every mode.
pub const IO_SIGNATURE: [f64; 12] = [
    1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0,
];

/// `max |(M Σ M†) - Σ|` for diagonal `Σ`.
pub fn signature_deviation(m: &CMat12, sigma: &[f64; 12]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..12 {
        for b in 0..12 {
            let mut s = ZERO;
            for c in 0..12 {
                s += m[(a, c)] * sigma[c] * m[(b, c)].conj();
            }
            if a == b {
                s -= sigma[a];
            }
            worst = worst.max(s.norm());
        }
    }
    worst
}

/// Largest violation of `M[2j+1][2k+1] = conj M[2j][2k]` and
/// `M[2j+1][2k] = conj M[2j][2k+1]`.
pub fn conjugation_asymmetry(m: &CMat12) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..6 {
        for k in 0..6 {
            worst = worst.max((m[(2 * j + 1, 2 * k + 1)] - m[(2 * j, 2 * k)].conj()).norm());
            worst = worst.max((m[(2 * j + 1, 2 * k)] - m[(2 * j, 2 * k + 1)].conj()).norm());
        }
    }
    worst
}

/// Maps the stacked corrections at `z = 0` to the same stacking at `z = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    pub m: CMat12,
}

impl PropagationMatrix {
    pub fn identity() -> Self {
        PropagationMatrix {
            m: CMat12::identity(),
        }
    }

    pub fn ff(&self) -> CMat6 {
        self.m.fixed_view::<6, 6>(0, 0).into_owned()
    }
    pub fn fb(&self) -> CMat6 {
        self.m.fixed_view::<6, 6>(0, 6).into_owned()
    }
    pub fn bf(&self) -> CMat6 {
        self.m.fixed_view::<6, 6>(6, 0).into_owned()
    }
    pub fn bb(&self) -> CMat6 {
        self.m.fixed_view::<6, 6>(6, 6).into_owned()
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &PropagationMatrix) -> PropagationMatrix {
        PropagationMatrix {
            m: next.m * self.m,
        }
    }

    pub fn signature_deviation(&self) -> f64 {
        signature_deviation(&self.m, &PROPAGATION_SIGNATURE)
    }
}

/// Maps physical inputs (forward at `z = 0`, backward at `z = L`) to physical
/// outputs (forward at `z = L`, backward at `z = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct InputOutputMatrix {
    pub u: CMat12,
}

impl InputOutputMatrix {
    pub fn identity() -> Self {
        InputOutputMatrix {
            u: CMat12::identity(),
        }
    }

    /// 24×24 real form: each complex entry becomes the block `[[re, -im], [im, re]]`.
    /// Output blocks in `[[T_f, R_b], [R_f, T_b]]` order.
    fn blocks(&self) -> [CMat6; 4] {
        let b = |r, c| self.u.fixed_view::<6, 6>(r, c).into_owned();
        [b(0, 0), b(0, 6), b(6, 0), b(6, 6)]
    }

    /// Redheffer star product: `self` covers `[a, b]`, `next` covers `[b, c]`,
    /// the result covers `[a, c]`.
    pub fn star(&self, next: &InputOutputMatrix) -> Result<InputOutputMatrix, FluctuationError> {
        let [t1, rr1, rl1, tb1] = self.blocks();
        let [t2, rr2, rl2, tb2] = next.blocks();
        let id = CMat6::identity();
        let singular = |m: &CMat6| {
            let sv = m.singular_values();
            FluctuationError::SingularBackwardBlock {
                condition: sv.max() / sv.min(),
            }
        };
        let a = id - rr1 * rl2;
        let a_inv = a.try_inverse().ok_or_else(|| singular(&a))?;
        let b = id - rl2 * rr1;
        let b_inv = b.try_inverse().ok_or_else(|| singular(&b))?;
        let mut u = CMat12::zeros();
        u.fixed_view_mut::<6, 6>(0, 0).copy_from(&(t2 * a_inv * t1));
        u.fixed_view_mut::<6, 6>(0, 6).copy_from(&(rr2 + t2 * a_inv * rr1 * tb2));
        u.fixed_view_mut::<6, 6>(6, 0).copy_from(&(rl1 + tb1 * b_inv * rl2 * t1));
        u.fixed_view_mut::<6, 6>(6, 6).copy_from(&(tb1 * b_inv * tb2));
        Ok(InputOutputMatrix { u })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for a in 0..24 {
            let row: Vec<String> = (0..24)
                .map(|b| {
                    let z = self.u[(a / 2, b / 2)];
                    let v = match (a % 2, b % 2) {
                        (0, 0) | (1, 1) => z.re,
                        (0, 1) => -z.im,
                        _ => z.im,
                    };
                    v.to_string()
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Max-norm deviation of `U Σ U†` from `Σ` with the boson signature.
pub fn verify_signature(u: &InputOutputMatrix) -> f64 {
    signature_deviation(&u.u, &IO_SIGNATURE)
}

/// Sparse generator `M(z)` of `d/dz v = M v` as `(row, col, value)` triples.
fn generator(params: &WaveguideParams, z: f64, a: &[C64; 6], out: &mut Vec<(usize, usize, C64)>) {
    out.clear();
    let lin = linearization(params, z, a);
    for j in 0..6 {
        for k in 0..6 {
            let p = lin.p[j][k];
            let q = lin.q[j][k];
            if p != ZERO {
                out.push((2 * j, 2 * k, p));
                out.push((2 * j + 1, 2 * k + 1, p.conj()));
            }
            if q != ZERO {
                out.push((2 * j, 2 * k + 1, q));
                out.push((2 * j + 1, 2 * k, q.conj()));
            }
        }
    }
}

fn apply(gen: &[(usize, usize, C64)], phi: &Raw, out: &mut Raw) {
    *out = [[ZERO; 12]; 12];
    for &(r, c, v) in gen {
        let src = &phi[c];
        let dst = &mut out[r];
        for i in 0..12 {
            dst[i] += v * src[i];
        }
    }
}

fn axpy(phi: &Raw, k: &Raw, h: f64) -> Raw {
    let mut out = *phi;
    for r in 0..12 {
        for c in 0..12 {
            out[r][c] += k[r][c] * h;
        }
    }
    out
}

/// Cubic Hermite interpolant of the mean field inside one interval.
struct Segment {
    z0: f64,
    h: f64,
    a0: [C64; 6],
    a1: [C64; 6],
    d0: [C64; 6],
    d1: [C64; 6],
}

impl Segment {
    fn at(&self, t: f64) -> [C64; 6] {
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * self.h;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * self.h;
        std::array::from_fn(|j| {
            self.a0[j] * h00 + self.d0[j] * h10 + self.a1[j] * h01 + self.d1[j] * h11
        })
    }
}

/// RK4 integration of the basis over grid intervals `from..to`.
fn integrate(
    params: &WaveguideParams,
    mf: &MeanFieldSolution,
    from: usize,
    to: usize,
    substeps: usize,
) -> CMat12 {
    let z = mf.grid.points();
    let mut phi: Raw = [[ZERO; 12]; 12];
    for (i, row) in phi.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let mut gen = Vec::with_capacity(64);
    let (mut k1, mut k2, mut k3, mut k4) = ([[ZERO; 12]; 12], [[ZERO; 12]; 12], [[ZERO; 12]; 12], [[ZERO; 12]; 12]);
    let mut d_prev = rhs(params, z[from], &mf.amplitudes[from]);
    for k in from..to {
        let d_next = rhs(params, z[k + 1], &mf.amplitudes[k + 1]);
        let seg = Segment {
            z0: z[k],
            h: z[k + 1] - z[k],
            a0: mf.amplitudes[k],
            a1: mf.amplitudes[k + 1],
            d0: d_prev,
            d1: d_next,
        };
        let h = seg.h / substeps as f64;
        let frac = 1.0 / substeps as f64;
        for s in 0..substeps {
            let t0 = s as f64 * frac;
            let zs = seg.z0 + t0 * seg.h;
            let a_start = if s == 0 { seg.a0 } else { seg.at(t0) };
            let a_mid = seg.at(t0 + 0.5 * frac);
            let a_end = if s + 1 == substeps { seg.a1 } else { seg.at(t0 + frac) };

            generator(params, zs, &a_start, &mut gen);
            apply(&gen, &phi, &mut k1);
            generator(params, zs + 0.5 * h, &a_mid, &mut gen);
            apply(&gen, &axpy(&phi, &k1, 0.5 * h), &mut k2);
            apply(&gen, &axpy(&phi, &k2, 0.5 * h), &mut k3);
            generator(params, zs + h, &a_end, &mut gen);
            apply(&gen, &axpy(&phi, &k3, h), &mut k4);
            for r in 0..12 {
                for c in 0..12 {
                    phi[r][c] += (k1[r][c] + 2.0 * k2[r][c] + 2.0 * k3[r][c] + k4[r][c]) * (h / 6.0);
                }
            }
        }
        d_prev = d_next;
    }
    CMat12::from_fn(|r, c| phi[r][c])
}

fn max_abs(m: &CMat12) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Propagates the 12 canonical initial vectors from `z = 0` to `z = L` along
/// the mean field.
pub fn propagate_basis(
    params: &WaveguideParams,
    mean_field: &MeanFieldSolution,
    options: &FluctuationOptions,
) -> Result<PropagationMatrix, FluctuationError> {
    let last = mean_field.grid.len() - 1;
    propagate_between(params, mean_field, 0, last, options)
}

/// Propagation matrix between grid indices `from` and `to` (`from <= to`).
pub fn propagate_between(
    params: &WaveguideParams,
    mean_field: &MeanFieldSolution,
    from: usize,
    to: usize,
    options: &FluctuationOptions,
) -> Result<PropagationMatrix, FluctuationError> {
    assert!(from <= to && to < mean_field.grid.len());
    let substeps = options.substeps.max(1);
    let coarse = integrate(params, mean_field, from, to, substeps);
    let Some(tolerance) = options.halving_tolerance else {
        return Ok(PropagationMatrix { m: coarse });
    };
    let fine = integrate(params, mean_field, from, to, 2 * substeps);
    let difference = max_abs(&(fine - coarse)) / max_abs(&fine).max(1.0);
    if difference > tolerance {
        return Err(FluctuationError::GridTooCoarse {
            difference,
            tolerance,
        });
    }
    Ok(PropagationMatrix { m: fine })
}

/// Rearranges the propagation matrix into input–output form:
///
/// ```text
/// U = [ FF - FB BB⁻¹ BF   FB BB⁻¹ ]
///     [     -BB⁻¹ BF        BB⁻¹  ]
/// ```
pub fn to_input_output(p: &PropagationMatrix) -> Result<InputOutputMatrix, FluctuationError> {
    let bb = p.bb();
    let sv = bb.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition >= MAX_BACKWARD_CONDITION {
        return Err(FluctuationError::SingularBackwardBlock { condition });
    }
    let inv = bb
        .try_inverse()
        .ok_or(FluctuationError::SingularBackwardBlock { condition })?;
    let fb_inv = p.fb() * inv;
    let mut u = CMat12::zeros();
    u.fixed_view_mut::<6, 6>(0, 0).copy_from(&(p.ff() - fb_inv * p.bf()));
    u.fixed_view_mut::<6, 6>(0, 6).copy_from(&fb_inv);
    u.fixed_view_mut::<6, 6>(6, 0).copy_from(&(-(inv * p.bf())));
    u.fixed_view_mut::<6, 6>(6, 6).copy_from(&inv);
    Ok(InputOutputMatrix { u })
}

/// Estimated log-growth allowed inside one segment of [`input_output`].
const SEGMENT_GROWTH: f64 = 2.0;

/// Max row sum of the sparse generator.
fn generator_norm(gen: &[(usize, usize, C64)]) -> f64 {
    let mut rows = [0.0f64; 12];
    for &(r, _, v) in gen {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

/// Grid indices where [`input_output`] cuts the guide so that the estimated
/// growth `∫ |M(z)| dz` of each piece stays below [`SEGMENT_GROWTH`].
pub fn segment_breaks(params: &WaveguideParams, mean_field: &MeanFieldSolution) -> Vec<usize> {
    let z = mean_field.grid.points();
    let mut gen = Vec::with_capacity(64);
    let mut breaks = vec![0];
    let mut acc = 0.0;
    for k in 0..z.len() - 1 {
        generator(params, z[k], &mean_field.amplitudes[k], &mut gen);
        let a = generator_norm(&gen);
        generator(params, z[k + 1], &mean_field.amplitudes[k + 1], &mut gen);
        let step = 0.5 * (a + generator_norm(&gen)) * (z[k + 1] - z[k]);
        if acc + step > SEGMENT_GROWTH && k > breaks[breaks.len() - 1] {
            breaks.push(k);
            acc = 0.0;
        }
        acc += step;
    }
    breaks.push(z.len() - 1);
    breaks
}

/// Input–output matrix of the whole guide.
///
/// The guide is split into pieces of bounded growth, each piece is rearranged
/// on its own and the pieces are chained with [`InputOutputMatrix::star`].
/// Inverting the backward block of the full propagation matrix instead loses
/// precision when evanescent fields grow by many orders of magnitude.
pub fn input_output(
    params: &WaveguideParams,
    mean_field: &MeanFieldSolution,
    options: &FluctuationOptions,
) -> Result<InputOutputMatrix, FluctuationError> {
    let breaks = segment_breaks(params, mean_field);
    let mut total: Option<InputOutputMatrix> = None;
    for w in breaks.windows(2) {
        let p = propagate_between(params, mean_field, w[0], w[1], options)?;
        let piece = to_input_output(&p)?;
        total = Some(match total {
            None => piece,
            Some(t) => t.star(&piece)?,
        });
    }
    Ok(total.unwrap_or_else(InputOutputMatrix::identity))
}
