//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: element `(i, j)` lives in row `kl + ku + i - j`
//! of column `j`, with `kl` extra rows on top for pivoting fill-in.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + self.ldab * j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn clear(&mut self) {
        self.ab.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.get(i, j) * x[j];
            }
        }
        y
    }

    /// Factorizes in place.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ld = self.ldab;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut max_piv: f64 = 0.0;
        let mut min_piv = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for i in 0..=km {
                let v = self.ab[kv + i + ld * j].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            let piv = self.ab[kv + jp + ld * j];
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::SingularJacobian { condition: f64::INFINITY });
            }
            max_piv = max_piv.max(piv.abs());
            min_piv = min_piv.min(piv.abs());
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = kv + j - c + ld * c;
                    let b = kv + j + jp - c + ld * c;
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let p = self.ab[kv + ld * j];
                for i in 1..=km {
                    self.ab[kv + i + ld * j] /= p;
                }
                for c in (j + 1)..=ju {
                    let f = self.ab[kv + j - c + ld * c];
                    if f != 0.0 {
                        for i in 1..=km {
                            let l = self.ab[kv + i + ld * j];
                            self.ab[kv + j + i - c + ld * c] -= l * f;
                        }
                    }
                }
            }
        }
        let condition = max_piv / min_piv;
        if condition > 1e16 {
            return Err(Error::SingularJacobian { condition });
        }
        Ok(BandLu { m: self, ipiv, condition })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
    /// Ratio of largest to smallest pivot, a cheap conditioning indicator.
    pub condition: f64,
}

impl BandLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let kv = self.m.kl + self.m.ku;
        let ld = self.m.ldab;
        let ab = &self.m.ab;
        for j in 0..n.saturating_sub(1) {
            let km = kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            for i in 1..=km {
                b[j + i] -= ab[kv + i + ld * j] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= ab[kv + ld * j];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= ab[kv + i - j + ld * j] * bj;
            }
        }
    }
}
