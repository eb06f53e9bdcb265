//! Banded LU factorization with partial pivoting for the relaxation Jacobian.

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row-wise with
/// room for the `kl` extra super-diagonals that pivoting can fill in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

/// Pivot smaller than this (relative to the largest entry) counts as singular.
const SINGULAR_PIVOT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularAt(pub usize);

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.width + (c + self.kl - r)
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    /// Sets an entry inside the declared band.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r},{c}) outside band"
        );
        let i = self.idx(r, c);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r},{c}) outside band"
        );
        let i = self.idx(r, c);
        self.data[i] += v;
    }

    /// Factors in place. On a zero pivot returns the offending column.
    pub fn factor(mut self) -> Result<BandLu, SingularAt> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let mut pivots = vec![0usize; n];
        let mut multipliers = vec![0.0; n * kl.max(1)];
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for r in j + 1..=last_row {
                let v = self.data[self.idx(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= SINGULAR_PIVOT * scale {
                return Err(SingularAt(j));
            }
            pivots[j] = p;
            if p != j {
                for c in j..=last_col {
                    let a = self.idx(j, c);
                    let b = self.idx(p, c);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.idx(j, j)];
            for r in j + 1..=last_row {
                let ir = self.idx(r, j);
                let l = self.data[ir] / diag;
                self.data[ir] = 0.0;
                multipliers[j * kl + (r - j - 1)] = l;
                if l == 0.0 {
                    continue;
                }
                let row_j = j * self.width + kl - j;
                let row_r = r * self.width + kl - r;
                for c in j + 1..=last_col {
                    self.data[row_r + c] -= l * self.data[row_j + c];
                }
            }
        }
        Ok(BandLu {
            m: self,
            pivots,
            multipliers,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
}

impl BandLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for r in j + 1..=(j + kl).min(n - 1) {
                    b[r] -= self.multipliers[j * kl + (r - j - 1)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let row = j * self.m.width + kl - j;
            let mut s = b[j];
            for c in j + 1..=(j + kl + ku).min(n - 1) {
                s -= self.m.data[row + c] * b[c];
            }
            b[j] = s / self.m.data[row + j];
        }
    }
}
