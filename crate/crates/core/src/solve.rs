//! Banded LU factorisation with partial pivoting.
//!
//! Row `i` of the working matrix stores columns `i - kl ..= i + kl + ku`;
//! the extra `kl` columns on the right hold fill-in produced by pivoting.
//! Multipliers are kept per elimination step and replayed, together with
//! the row interchanges, during the forward solve.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let lo = i as isize - self.kl as isize;
        let hi = (i + self.kl + self.ku) as isize;
        let j = j as isize;
        (j >= lo && j <= hi && (j as usize) < self.n).then(|| i * self.width + (j - lo) as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`. Panics when `(i, j)` lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("inside band");
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * scale * n as f64;
        let mut perm = vec![0; n];
        let mut mult = vec![0.0; n * kl.max(1)];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best.is_nan() || best <= tiny {
                return Err(Error::SingularStepMatrix { row: k });
            }
            perm[k] = p;
            if p != k {
                for c in k..=last_col {
                    let a = self.slot(k, c).expect("band");
                    let b = self.slot(p, c).expect("band");
                    self.data.swap(a, b);
                }
            }

            let pivot = self.get(k, k);
            for r in k + 1..=last_row {
                let l = self.get(r, k) / pivot;
                mult[k * kl + (r - k - 1)] = l;
                let s = self.slot(r, k).expect("band");
                self.data[s] = 0.0;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let u = self.get(k, c);
                    if u != 0.0 {
                        let s = self.slot(r, c).expect("band");
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandedLu {
            upper: self,
            mult,
            perm,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    upper: BandedMatrix,
    mult: Vec<f64>,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn len(&self) -> usize {
        self.upper.n
    }

    pub fn is_empty(&self) -> bool {
        self.upper.n == 0
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.upper.n, self.upper.kl, self.upper.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.perm[k]);
            let bk = b[k];
            if bk == 0.0 {
                continue;
            }
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.mult[k * kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= self.upper.get(k, c) * b[c];
            }
            b[k] = acc / self.upper.get(k, k);
        }
    }
}
