//! Banded LU factorization with partial pivoting.
//!
//! Column-major band storage in the LAPACK `gbtrf` layout: entry `(r, c)`
//! lives at `data[c * ldab + kl + ku + r - c]`, with `kl` extra rows on top to
//! absorb the fill produced by row interchanges.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("band matrix is singular at column {column}")]
pub struct SingularBand {
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(r + self.ku >= c && r <= c + self.kl, "({r}, {c}) outside band");
        c * self.ldab + self.kl + self.ku + r - c
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let k = self.slot(r, c);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if r + self.ku < c || r > c + self.kl {
            return 0.0;
        }
        self.data[self.slot(r, c)]
    }

    /// `y = A x`, for residual checks.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for c in 0..self.n {
            let lo = c.saturating_sub(self.ku);
            let hi = (c + self.kl).min(self.n - 1);
            for r in lo..=hi {
                y[r] += self.data[self.slot(r, c)] * x[c];
            }
        }
        y
    }

    /// Factor in place (unblocked `gbtf2`).
    pub fn factor(mut self) -> Result<BandLu, SingularBand> {
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = self.kl + self.ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let a = &mut self.data;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = a[col].abs();
            for i in 1..=km {
                let v = a[col + i].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if a[col + jp] == 0.0 {
                return Err(SingularBand { column: j });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                // Row j and row j+jp across columns j..=ju.
                for c in j..=ju {
                    let base = c * ldab + kv;
                    a.swap(base + j - c + jp, base + j - c);
                }
            }
            let pivot = a[col];
            for i in 1..=km {
                a[col + i] /= pivot;
            }
            if km == 0 {
                continue;
            }
            for c in j + 1..=ju {
                let base = c * ldab + kv;
                let t = a[base + j - c];
                if t == 0.0 {
                    continue;
                }
                let (left, right) = a.split_at_mut(base + j + 1 - c);
                let lcol = &left[col + 1..col + 1 + km];
                let target = &mut right[..km];
                for (dst, l) in target.iter_mut().zip(lcol) {
                    *dst -= l * t;
                }
            }
        }
        Ok(BandLu { band: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let BandMatrix {
            n,
            kl,
            ku,
            ldab,
            ref data,
        } = self.band;
        let kv = kl + ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * ldab + kv;
                for i in 1..=km {
                    b[j + i] -= data[col + i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= data[col];
            let bj = b[j];
            let reach = kv.min(j);
            for i in 1..=reach {
                b[j - i] -= data[col - i] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_from(band: &BandMatrix) -> Vec<f64> {
        let n = band.dim();
        let mut d = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                d[r * n + c] = band.get(r, c);
            }
        }
        d
    }

    #[test]
    fn matches_dense_solve_with_pivoting() {
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut m = BandMatrix::zeros(n, kl, ku);
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for c in 0..n {
            for r in c.saturating_sub(ku)..=(c + kl).min(n - 1) {
                // Small diagonal forces row interchanges.
                let v = if r == c { 0.01 * next() } else { next() };
                m.add(r, c, v);
            }
        }
        let dense = dense_from(&m);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let expect = crate::linalg::solve(&dense, &b, n).unwrap();
        let lu = m.clone().factor().unwrap();
        let mut x = b.clone();
        lu.solve(&mut x);
        for i in 0..n {
            assert!((x[i] - expect[i]).abs() < 1e-9 * (1.0 + expect[i].abs()), "{i}");
        }
        let back = m.mul_vec(&x);
        for i in 0..n {
            assert!((back[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        assert_eq!(m.factor().unwrap_err().column, 2);
    }
}
