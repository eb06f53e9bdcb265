//! Coupled-mode equations for the six amplitudes and their linearization.
//!
//! Amplitude order is [`Mode`](crate::model::Mode) order:
//! `(s_F, i_F, p_F, s_B, i_B, p_B)`.

use crate::model::{WaveguideParams, C64, ZERO};

const I: C64 = C64::new(0.0, 1.0);

/// Position-dependent coupling coefficients at `z`.
#[derive(Debug, Clone, Copy)]
pub struct Couplings {
    /// `i K_a exp(-i delta_a z)` for a = s, i, p.
    pub s: C64,
    pub i: C64,
    pub p: C64,
    /// `2 K_F exp(i delta_F z)`.
    pub f: C64,
    /// `2 K_B exp(-i delta_B z)`.
    pub b: C64,
}

impl Couplings {
    pub fn at(params: &WaveguideParams, z: f64) -> Self {
        Couplings {
            s: I * params.k_s * C64::cis(-params.delta_s * z),
            i: I * params.k_i * C64::cis(-params.delta_i * z),
            p: I * params.k_p * C64::cis(-params.delta_p * z),
            f: 2.0 * params.k_f * C64::cis(params.delta_f * z),
            b: 2.0 * params.k_b * C64::cis(-params.delta_b * z),
        }
    }
}

/// Right-hand side `dA/dz` of the nonlinear mean-field equations.
pub fn rhs(params: &WaveguideParams, z: f64, a: &[C64; 6]) -> [C64; 6] {
    let k = Couplings::at(params, z);
    let [sf, i_f, pf, sb, ib, pb] = *a;
    [
        k.s * sb + k.f * pf * i_f.conj(),
        k.i * ib + k.f * pf * sf.conj(),
        k.p * pb - k.f.conj() * sf * i_f,
        k.s.conj() * sf - k.b * pb * ib.conj(),
        k.i.conj() * i_f - k.b * pb * sb.conj(),
        k.p.conj() * pf + k.b.conj() * sb * ib,
    ]
}

/// Linearization of [`rhs`] about `a`: `d(δA)/dz = P δA + Q δA*`.
///
/// The same coefficients drive the operator corrections (with `δA*` read as
/// `δA†`) and the Newton Jacobian of the relaxation solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub p: [[C64; 6]; 6],
    pub q: [[C64; 6]; 6],
}

pub fn linearization(params: &WaveguideParams, z: f64, a: &[C64; 6]) -> Linearization {
    let k = Couplings::at(params, z);
    let [sf, i_f, pf, sb, ib, pb] = *a;
    let mut p = [[ZERO; 6]; 6];
    let mut q = [[ZERO; 6]; 6];

    p[0][3] = k.s;
    p[0][2] = k.f * i_f.conj();
    q[0][1] = k.f * pf;

    p[1][4] = k.i;
    p[1][2] = k.f * sf.conj();
    q[1][0] = k.f * pf;

    p[2][5] = k.p;
    p[2][0] = -k.f.conj() * i_f;
    p[2][1] = -k.f.conj() * sf;

    p[3][0] = k.s.conj();
    p[3][5] = -k.b * ib.conj();
    q[3][4] = -k.b * pb;

    p[4][1] = k.i.conj();
    p[4][5] = -k.b * sb.conj();
    q[4][3] = -k.b * pb;

    p[5][2] = k.p.conj();
    p[5][3] = k.b.conj() * ib;
    p[5][4] = k.b.conj() * sb;

    Linearization { p, q }
}

/// Conserved combination `|A_sF|²+|A_iF|²+2|A_pF|² − |A_sB|²−|A_iB|²−2|A_pB|²`.
pub fn flux(a: &[C64; 6]) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr() + 2.0 * a[2].norm_sqr()
        - a[3].norm_sqr()
        - a[4].norm_sqr()
        - 2.0 * a[5].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_c64(scale: f64) -> impl Strategy<Value = C64> {
        (-scale..scale, -scale..scale).prop_map(|(re, im)| C64::new(re, im))
    }

    fn arb_params() -> impl Strategy<Value = WaveguideParams> {
        (
            proptest::array::uniform5(arb_c64(3.0)),
            proptest::array::uniform5(-10.0f64..10.0),
        )
            .prop_map(|(k, d)| WaveguideParams {
                k_s: k[0],
                k_i: k[1],
                k_p: k[2],
                k_f: k[3],
                k_b: k[4],
                delta_s: d[0],
                delta_i: d[1],
                delta_p: d[2],
                delta_f: d[3],
                delta_b: d[4],
                length: 1.0,
            })
    }

    proptest! {
        // d(flux)/dz = 2 Re sum w_j conj(A_j) f_j must vanish identically.
        #[test]
        fn flux_is_conserved_pointwise(
            params in arb_params(),
            a in proptest::array::uniform6(arb_c64(5.0)),
            z in 0.0f64..3.0,
        ) {
            let f = rhs(&params, z, &a);
            let w = [1.0, 1.0, 2.0, -1.0, -1.0, -2.0];
            let d: f64 = (0..6).map(|j| 2.0 * w[j] * (a[j].conj() * f[j]).re).sum();
            let scale: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().max(1.0) * 100.0;
            prop_assert!(d.abs() <= 1e-12 * scale, "d flux = {}", d);
        }

        // The linearization must match a central finite difference of rhs.
        #[test]
        fn linearization_matches_finite_difference(
            params in arb_params(),
            a in proptest::array::uniform6(arb_c64(2.0)),
            da in proptest::array::uniform6(arb_c64(1.0)),
            z in 0.0f64..3.0,
        ) {
            let eps = 1e-6;
            let plus: [C64; 6] = std::array::from_fn(|j| a[j] + da[j] * eps);
            let minus: [C64; 6] = std::array::from_fn(|j| a[j] - da[j] * eps);
            let fp = rhs(&params, z, &plus);
            let fm = rhs(&params, z, &minus);
            let lin = linearization(&params, z, &a);
            for j in 0..6 {
                let fd = (fp[j] - fm[j]) / (2.0 * eps);
                let mut an = ZERO;
                for k in 0..6 {
                    an += lin.p[j][k] * da[k] + lin.q[j][k] * da[k].conj();
                }
                prop_assert!((fd - an).norm() < 1e-6, "row {}: {} vs {}", j, fd, an);
            }
        }
    }
}
