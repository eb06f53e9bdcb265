//! Relaxation solver for the split two-point boundary-value problem.
//!
//! Each grid interval contributes the Hermite–Simpson (Lobatto IIIA) collocation
//! condition
//!
//! ```text
//! y_{k+1} - y_k - h/6 (f_k + 4 f_m + f_{k+1}) = 0,
//! y_m = (y_k + y_{k+1})/2 + h/8 (f_k - f_{k+1}),
//! ```
//!
//! which couples only neighbouring nodes, so the Newton Jacobian is banded.
//! Forward amplitudes are pinned at `z = 0` and backward amplitudes at `z = L`.

use nalgebra::{SMatrix, SVector};

use crate::equations::{linearization, rhs};
use crate::model::{validate, BoundaryConditions, WaveguideParams, C64, ZERO};

use super::banded::{BandMatrix, SingularAt};
use super::{linear_solution, Grid, MeanFieldError, MeanFieldSolution};

type Vec12 = SVector<f64, 12>;
type Mat12 = SMatrix<f64, 12, 12>;

/// Unknowns per grid node: real and imaginary part of six amplitudes.
const NODE: usize = 12;
const BAND: usize = 17;

/// Initial guess for the Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seed {
    /// Closed-form solution without the nonlinear terms, falling back to
    /// [`Seed::BoundaryHeld`] when that matching problem is singular.
    #[default]
    Linear,
    /// Every amplitude held at its facet value along the whole guide.
    BoundaryHeld,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Convergence threshold on the scaled max-norm residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of geometric continuation steps in `K_F, K_B` tried when Newton
    /// fails at full nonlinearity. Zero disables continuation.
    pub homotopy_steps: usize,
    pub seed: Seed,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            tolerance: 1e-10,
            max_iterations: 50,
            homotopy_steps: 16,
            seed: Seed::Linear,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BvpReport {
    pub solution: MeanFieldSolution,
    /// Newton iterations summed over all continuation stages.
    pub iterations: usize,
    pub residual: f64,
    /// Continuation stages used (0 when the direct solve converged).
    pub homotopy_stages: usize,
}

/// Solves the nonlinear mean-field problem on `grid`, seeded by the linear
/// solution.
pub fn solve_bvp(
    params: &WaveguideParams,
    bc: &BoundaryConditions,
    grid: &Grid,
    options: &BvpOptions,
) -> Result<MeanFieldSolution, MeanFieldError> {
    solve_bvp_detailed(params, bc, grid, options).map(|r| r.solution)
}

pub fn solve_bvp_detailed(
    params: &WaveguideParams,
    bc: &BoundaryConditions,
    grid: &Grid,
    options: &BvpOptions,
) -> Result<BvpReport, MeanFieldError> {
    validate(params, bc)?;
    if (grid.length() - params.length).abs() > 1e-12 * params.length.max(1.0) {
        return Err(MeanFieldError::BadGrid {
            length: params.length,
        });
    }
    let seed = match options.seed {
        Seed::Linear => match linear_solution(params, bc, grid) {
            Ok(s) => pack(&s.amplitudes),
            Err(_) => boundary_held_seed(bc, grid.len()),
        },
        Seed::BoundaryHeld => boundary_held_seed(bc, grid.len()),
    };

    let direct = Relaxation::new(params, bc, grid).newton(seed.clone(), options);
    let first_err = match direct {
        Ok((x, iterations, residual)) => {
            return Ok(BvpReport {
                solution: MeanFieldSolution::new(grid.clone(), unpack(&x)),
                iterations,
                residual,
                homotopy_stages: 0,
            })
        }
        Err(e) => e,
    };
    if options.homotopy_steps == 0 || (params.k_f == ZERO && params.k_b == ZERO) {
        return Err(first_err);
    }

    let steps = options.homotopy_steps;
    let mut x = seed;
    let mut total = 0;
    let mut residual = f64::NAN;
    for stage in 1..=steps {
        let scale = 0.5f64.powi((steps - stage) as i32);
        let scaled = params.with_nonlinear_scale(scale);
        let (next, its, res) = Relaxation::new(&scaled, bc, grid).newton(x, options)?;
        x = next;
        total += its;
        residual = res;
    }
    Ok(BvpReport {
        solution: MeanFieldSolution::new(grid.clone(), unpack(&x)),
        iterations: total,
        residual,
        homotopy_stages: steps,
    })
}

fn pack(a: &[[C64; 6]]) -> Vec<f64> {
    let mut x = Vec::with_capacity(a.len() * NODE);
    for node in a {
        for v in node {
            x.push(v.re);
            x.push(v.im);
        }
    }
    x
}

fn unpack(x: &[f64]) -> Vec<[C64; 6]> {
    x.chunks_exact(NODE)
        .map(|c| std::array::from_fn(|j| C64::new(c[2 * j], c[2 * j + 1])))
        .collect()
}

/// Forward amplitudes held at their `z = 0` values and backward amplitudes at
/// their `z = L` values along the whole guide.
fn boundary_held_seed(bc: &BoundaryConditions, n: usize) -> Vec<f64> {
    pack(&vec![bc.as_array(); n])
}

fn node_vec(x: &[f64], k: usize) -> Vec12 {
    Vec12::from_column_slice(&x[k * NODE..(k + 1) * NODE])
}

fn to_complex(y: &Vec12) -> [C64; 6] {
    std::array::from_fn(|j| C64::new(y[2 * j], y[2 * j + 1]))
}

fn from_complex(a: &[C64; 6]) -> Vec12 {
    Vec12::from_fn(|r, _| if r % 2 == 0 { a[r / 2].re } else { a[r / 2].im })
}

struct Relaxation<'a> {
    params: &'a WaveguideParams,
    bc: &'a BoundaryConditions,
    z: &'a [f64],
}

struct Evaluated {
    residual: Vec<f64>,
    /// Scaled max-norm used for convergence and damping decisions.
    merit: f64,
}

impl<'a> Relaxation<'a> {
    fn new(params: &'a WaveguideParams, bc: &'a BoundaryConditions, grid: &'a Grid) -> Self {
        Relaxation {
            params,
            bc,
            z: grid.points(),
        }
    }

    fn n(&self) -> usize {
        self.z.len()
    }

    fn f(&self, z: f64, y: &Vec12) -> Vec12 {
        from_complex(&rhs(self.params, z, &to_complex(y)))
    }

    /// Real 12×12 Jacobian of `f` with respect to `(Re A, Im A)`.
    fn jac(&self, z: f64, y: &Vec12) -> Mat12 {
        let lin = linearization(self.params, z, &to_complex(y));
        let mut m = Mat12::zeros();
        for r in 0..6 {
            for c in 0..6 {
                let p = lin.p[r][c];
                let q = lin.q[r][c];
                if p == ZERO && q == ZERO {
                    continue;
                }
                m[(2 * r, 2 * c)] = p.re + q.re;
                m[(2 * r, 2 * c + 1)] = -p.im + q.im;
                m[(2 * r + 1, 2 * c)] = p.im + q.im;
                m[(2 * r + 1, 2 * c + 1)] = p.re - q.re;
            }
        }
        m
    }

    fn evaluate(&self, x: &[f64]) -> Evaluated {
        let n = self.n();
        let mut residual = vec![0.0; n * NODE];
        let fwd = self.bc.forward();
        let bwd = self.bc.backward();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut merit = 0.0f64;
        for j in 0..3 {
            let r0 = x[2 * j] - fwd[j].re;
            let i0 = x[2 * j + 1] - fwd[j].im;
            residual[2 * j] = r0;
            residual[2 * j + 1] = i0;
            let base = (n - 1) * NODE + 6;
            let rl = x[base + 2 * j] - bwd[j].re;
            let il = x[base + 2 * j + 1] - bwd[j].im;
            residual[n * NODE - 6 + 2 * j] = rl;
            residual[n * NODE - 6 + 2 * j + 1] = il;
            merit = merit.max(r0.abs()).max(i0.abs()).max(rl.abs()).max(il.abs());
        }
        let mut y0 = node_vec(x, 0);
        let mut f0 = self.f(self.z[0], &y0);
        for k in 0..n - 1 {
            let h = self.z[k + 1] - self.z[k];
            let y1 = node_vec(x, k + 1);
            let f1 = self.f(self.z[k + 1], &y1);
            let ym = (y0 + y1) * 0.5 + (f0 - f1) * (h / 8.0);
            let fm = self.f(self.z[k] + 0.5 * h, &ym);
            let r = y1 - y0 - (f0 + fm * 4.0 + f1) * (h / 6.0);
            let row = 6 + k * NODE;
            residual[row..row + NODE].copy_from_slice(r.as_slice());
            merit = merit.max(r.amax() / h);
            y0 = y1;
            f0 = f1;
        }
        Evaluated {
            residual,
            merit: merit / scale,
        }
    }

    fn assemble(&self, x: &[f64]) -> BandMatrix {
        let n = self.n();
        let mut m = BandMatrix::zeros(n * NODE, BAND, BAND);
        for j in 0..6 {
            m.set(j, j, 1.0);
            let idx = n * NODE - 6 + j;
            m.set(idx, idx, 1.0);
        }
        let eye = Mat12::identity();
        let mut y0 = node_vec(x, 0);
        let mut f0 = self.f(self.z[0], &y0);
        let mut j0 = self.jac(self.z[0], &y0);
        for k in 0..n - 1 {
            let h = self.z[k + 1] - self.z[k];
            let y1 = node_vec(x, k + 1);
            let f1 = self.f(self.z[k + 1], &y1);
            let j1 = self.jac(self.z[k + 1], &y1);
            let ym = (y0 + y1) * 0.5 + (f0 - f1) * (h / 8.0);
            let jm = self.jac(self.z[k] + 0.5 * h, &ym);
            let left = -eye - j0 * (h / 6.0) - jm * (h / 3.0) - (jm * j0) * (h * h / 12.0);
            let right = eye - j1 * (h / 6.0) - jm * (h / 3.0) + (jm * j1) * (h * h / 12.0);
            let row = 6 + k * NODE;
            let col = k * NODE;
            for r in 0..NODE {
                for c in 0..NODE {
                    let l = left[(r, c)];
                    if l != 0.0 {
                        m.set(row + r, col + c, l);
                    }
                    let rr = right[(r, c)];
                    if rr != 0.0 {
                        m.set(row + r, col + NODE + c, rr);
                    }
                }
            }
            y0 = y1;
            f0 = f1;
            j0 = j1;
        }
        m
    }

    /// Damped Newton iteration. Returns the solution, iteration count and
    /// final scaled residual.
    fn newton(
        &self,
        mut x: Vec<f64>,
        options: &BvpOptions,
    ) -> Result<(Vec<f64>, usize, f64), MeanFieldError> {
        let mut eval = self.evaluate(&x);
        for it in 0..options.max_iterations {
            if eval.merit <= options.tolerance {
                return Ok((x, it, eval.merit));
            }
            let lu = self.assemble(&x).factor().map_err(|SingularAt(col)| {
                MeanFieldError::SingularJacobian {
                    z: self.z[(col / NODE).min(self.n() - 1)],
                }
            })?;
            let mut dx: Vec<f64> = eval.residual.iter().map(|r| -r).collect();
            lu.solve(&mut dx);

            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
                let next = self.evaluate(&trial);
                if next.merit.is_finite() && (next.merit < eval.merit || next.merit <= options.tolerance)
                {
                    x = trial;
                    eval = next;
                    break;
                }
                t *= 0.5;
                if t < 1.0 / 1024.0 {
                    return Err(MeanFieldError::NotConverged {
                        iterations: it + 1,
                        residual: eval.merit,
                    });
                }
            }
        }
        if eval.merit <= options.tolerance {
            return Ok((x, options.max_iterations, eval.merit));
        }
        Err(MeanFieldError::NotConverged {
            iterations: options.max_iterations,
            residual: eval.merit,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_like(apf: f64) -> (WaveguideParams, BoundaryConditions) {
        let params = WaveguideParams {
            k_f: C64::new(0.05, 0.0),
            k_b: C64::new(0.05, 0.0),
            ..WaveguideParams::uncoupled(2.0)
        };
        let bc = BoundaryConditions {
            a_sf0: C64::new(0.1, 0.0),
            a_if0: C64::new(0.1, 0.0),
            a_pf0: C64::new(apf, 0.0),
            ..Default::default()
        };
        (params, bc)
    }

    #[test]
    fn backward_modes_stay_empty_without_scattering() {
        let (params, bc) = fig2_like(10.0);
        let grid = Grid::uniform(2.0, 401).unwrap();
        let sol = solve_bvp(&params, &bc, &grid, &BvpOptions::default()).unwrap();
        for a in &sol.amplitudes {
            assert_eq!(a[3], ZERO);
            assert_eq!(a[4], ZERO);
            assert_eq!(a[5], ZERO);
        }
        assert!(sol.flux_drift() < 1e-10, "{}", sol.flux_drift());
        // Signal is amplified and the pump depleted.
        assert!(sol.at_exit()[0].norm() > 0.3);
        assert!(sol.at_exit()[2].norm() < 10.0);
    }

    #[test]
    fn short_distance_growth_matches_taylor() {
        let (params, bc) = fig2_like(10.0);
        let grid = Grid::uniform(2.0, 2001).unwrap();
        let sol = solve_bvp(&params, &bc, &grid, &BvpOptions::default()).unwrap();
        // z = 1e-3 L is grid point 2.
        let z = sol.grid.points()[2];
        let slope = 2.0 * params.k_f * bc.a_pf0 * bc.a_if0.conj();
        let predicted = bc.a_sf0 + slope * z;
        let got = sol.amplitudes[2][0];
        // Second-order Taylor term bounds the mismatch.
        assert!((got - predicted).norm() < 0.5 * z * z * 2.0, "{got} vs {predicted}");
        let fd = (got - bc.a_sf0) / z;
        assert!((fd - slope).norm() / slope.norm() < 2e-3);
    }

    #[test]
    fn homotopy_reaches_same_solution() {
        let (params, bc) = fig2_like(6.0);
        let grid = Grid::uniform(2.0, 201).unwrap();
        let direct = solve_bvp_detailed(&params, &bc, &grid, &BvpOptions::default()).unwrap();
        assert_eq!(direct.homotopy_stages, 0);
        // Force the fallback by allowing a single Newton step at full strength.
        let opts = BvpOptions {
            max_iterations: 1,
            ..Default::default()
        };
        match solve_bvp_detailed(&params, &bc, &grid, &opts) {
            Ok(r) => assert!(r.solution.max_difference(&direct.solution) < 1e-8),
            Err(MeanFieldError::NotConverged { .. }) => {}
            Err(e) => panic!("unexpected {e}"),
        }
        let opts = BvpOptions {
            max_iterations: 8,
            homotopy_steps: 4,
            ..Default::default()
        };
        let via = solve_bvp_detailed(&params, &bc, &grid, &opts).unwrap();
        assert!(via.solution.max_difference(&direct.solution) < 1e-9);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let (params, bc) = fig2_like(10.0);
        let grid = Grid::uniform(2.0, 101).unwrap();
        let opts = BvpOptions {
            max_iterations: 1,
            homotopy_steps: 0,
            tolerance: 1e-14,
            ..Default::default()
        };
        match solve_bvp(&params, &bc, &grid, &opts) {
            Err(MeanFieldError::NotConverged { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mismatched_grid() {
        let (params, bc) = fig2_like(1.0);
        let grid = Grid::uniform(1.0, 11).unwrap();
        assert!(matches!(
            solve_bvp(&params, &bc, &grid, &BvpOptions::default()),
            Err(MeanFieldError::BadGrid { .. })
        ));
    }

    fn random_linear_case(rng: &mut rand_chacha::ChaCha8Rng, band_gap: bool) -> (WaveguideParams, BoundaryConditions) {
        use rand::RngExt;
        let mut c = |r: f64| C64::from_polar(rng.random_range(0.0..r), rng.random_range(0.0..std::f64::consts::TAU));
        let mut params = WaveguideParams::uncoupled(0.0);
        params.k_s = c(3.0);
        params.k_i = c(3.0);
        params.k_p = c(3.0);
        let bc = BoundaryConditions::from_array(std::array::from_fn(|_| c(1.0)));
        params.length = rng.random_range(0.5..2.0);
        let mut detune = |k: C64| {
            let edge = 2.0 * k.norm();
            let sign = if rng.random_range(0.0..1.0) < 0.5 { 1.0 } else { -1.0 };
            sign * if band_gap {
                rng.random_range(0.0..edge)
            } else {
                rng.random_range(edge..edge + 8.0)
            }
        };
        params.delta_s = detune(params.k_s);
        params.delta_i = detune(params.k_i);
        params.delta_p = detune(params.k_p);
        (params, bc)
    }

    #[test]
    fn linear_limit_matches_closed_form() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for case in 0..20 {
            let (params, bc) = random_linear_case(&mut rng, case % 2 == 0);
            let grid = Grid::uniform(params.length, 1001).unwrap();
            let exact = linear_solution(&params, &bc, &grid).unwrap();
            let options = BvpOptions {
                seed: Seed::BoundaryHeld,
                ..Default::default()
            };
            let report = solve_bvp_detailed(&params, &bc, &grid, &options).unwrap();
            assert!(report.iterations >= 1);
            worst = worst.max(exact.max_difference(&report.solution));
        }
        assert!(worst > 0.0 && worst <= 1e-8, "max deviation {worst:e}");
    }
}
