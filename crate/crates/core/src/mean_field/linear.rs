use crate::model::{BoundaryConditions, WaveguideParams, C64, ZERO};

use super::{Grid, MeanFieldError, MeanFieldSolution};

const I: C64 = C64::new(0.0, 1.0);

/// Closed-form solution of one forward/backward pair with the nonlinear
/// terms dropped:
///
/// `A_F = e^{-iδz/2} u(z)`, `A_B = e^{iδz/2} (u' - iδ/2 u) / (iK)`,
/// `u = B cos(Δz) + B̃ sin(Δz)/Δ`, `Δ = sqrt(δ²/4 - |K|²)`.
///
/// Writing the second basis function as `sin(Δz)/Δ` keeps the formula
/// regular through the band edge `δ² = 4|K|²`, where it tends to `{1, z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearPair {
    Decoupled {
        forward: C64,
        backward: C64,
    },
    Coupled {
        k: C64,
        delta: f64,
        big_delta: C64,
        b: C64,
        b_tilde: C64,
    },
}

/// `(cos(Δz), sin(Δz)/Δ, -Δ sin(Δz))`.
fn basis(big_delta: C64, z: f64) -> (C64, C64, C64) {
    let x = big_delta * z;
    let c = x.cos();
    let s = if x.norm() < 1e-4 {
        let x2 = x * x;
        z * (1.0 - x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        x.sin() / big_delta
    };
    (c, s, -big_delta * big_delta * s)
}

impl LinearPair {
    /// Matches `A_F(0) = forward0` and `A_B(L) = backward_l`.
    pub fn solve(
        k: C64,
        delta: f64,
        length: f64,
        forward0: C64,
        backward_l: C64,
        name: &'static str,
    ) -> Result<Self, MeanFieldError> {
        if k == ZERO {
            return Ok(LinearPair::Decoupled {
                forward: forward0,
                backward: backward_l,
            });
        }
        let big_delta = C64::new(0.25 * delta * delta - k.norm_sqr(), 0.0).sqrt();
        let (c, s, dc) = basis(big_delta, length);
        let half = I * (0.5 * delta);
        // u'(L) - iδ/2 u(L) = i K e^{-iδL/2} A_B(L)
        let coef_b = dc - half * c;
        let coef_bt = c - half * s;
        if coef_bt.norm() <= 1e-13 * (coef_b.norm() + 1.0) {
            return Err(MeanFieldError::SingularBoundaryMatching { pair: name });
        }
        let target = I * k * C64::cis(-0.5 * delta * length) * backward_l;
        let b = forward0;
        let b_tilde = (target - coef_b * b) / coef_bt;
        Ok(LinearPair::Coupled {
            k,
            delta,
            big_delta,
            b,
            b_tilde,
        })
    }

    /// `(A_F(z), A_B(z))`.
    pub fn eval(&self, z: f64) -> (C64, C64) {
        match *self {
            LinearPair::Decoupled { forward, backward } => (forward, backward),
            LinearPair::Coupled {
                k,
                delta,
                big_delta,
                b,
                b_tilde,
            } => {
                let (c, s, dc) = basis(big_delta, z);
                let u = b * c + b_tilde * s;
                let du = b * dc + b_tilde * c;
                let af = C64::cis(-0.5 * delta * z) * u;
                let ab = C64::cis(0.5 * delta * z) * (du - I * (0.5 * delta) * u) / (I * k);
                (af, ab)
            }
        }
    }
}

/// Solution of the mean-field equations with `K_F = K_B = 0`, each
/// forward/backward pair matched independently to its facet data.
pub fn linear_solution(
    params: &WaveguideParams,
    bc: &BoundaryConditions,
    grid: &Grid,
) -> Result<MeanFieldSolution, MeanFieldError> {
    let l = grid.length();
    let pairs = [
        LinearPair::solve(params.k_s, params.delta_s, l, bc.a_sf0, bc.a_sbl, "signal")?,
        LinearPair::solve(params.k_i, params.delta_i, l, bc.a_if0, bc.a_ibl, "idler")?,
        LinearPair::solve(params.k_p, params.delta_p, l, bc.a_pf0, bc.a_pbl, "pump")?,
    ];
    let amplitudes = grid
        .points()
        .iter()
        .map(|&z| {
            let mut a = [ZERO; 6];
            for (j, pair) in pairs.iter().enumerate() {
                let (f, b) = pair.eval(z);
                a[j] = f;
                a[j + 3] = b;
            }
            a
        })
        .collect();
    Ok(MeanFieldSolution::new(grid.clone(), amplitudes))
}
