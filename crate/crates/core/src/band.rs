//! Complex banded LU with partial pivoting (LAPACK `gbtf2`/`gbtrs` layout).
//!
//! Entry `A[i, j]` lives in band row `kl + ku + i - j` of column `j`; the
//! top `kl` band rows hold fill-in produced by row interchanges.

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::liouville::SuperOperator;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    piv: Vec<usize>,
    /// Pivots that were exactly zero and replaced by a tiny value.
    pub perturbed_pivots: usize,
}

impl BandLu {
    /// Factorizes `L - shift * I`. Exactly zero pivots are replaced by
    /// `tiny` (inverse iteration tolerates this); `tiny = 0` makes them an error.
    pub fn factor(op: &SuperOperator, shift: C64, tiny: f64) -> Result<Self> {
        let n = op.dim();
        let (kl, ku) = op.bandwidths();
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![ZERO; ldab * n];
        for (r, c, v) in op.entries() {
            ab[kv + r - c + ldab * c] += v;
        }
        for j in 0..n {
            ab[kv + ldab * j] -= shift;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            ldab,
            ab,
            piv: vec![0; n],
            perturbed_pivots: 0,
        };
        lu.factorize(tiny)?;
        Ok(lu)
    }

    fn factorize(&mut self, tiny: f64) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let ab = &mut self.ab;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = ldab * j;
            let mut jp = 0;
            let mut best = -1.0;
            for t in 0..=km {
                let v = ab[col + kv + t].norm();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            self.piv[j] = j + jp;
            if ab[col + kv + jp] == ZERO {
                if tiny > 0.0 {
                    ab[col + kv + jp] = C64::new(tiny, 0.0);
                    self.perturbed_pivots += 1;
                } else {
                    return Err(Error::Singular(format!("zero pivot in column {j}")));
                }
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = ldab * c;
                    ab.swap(base + kv + j + jp - c, base + kv + j - c);
                }
            }
            let pivot = ab[col + kv];
            let inv = 1.0 / pivot;
            for t in 1..=km {
                ab[col + kv + t] *= inv;
            }
            if km == 0 {
                continue;
            }
            for c in j + 1..=ju {
                let base = ldab * c;
                let u = ab[base + kv + j - c];
                if u == ZERO {
                    continue;
                }
                let (head, tail) = ab.split_at_mut(base);
                let lcol = &head[col + kv + 1..col + kv + 1 + km];
                let target = &mut tail[kv + j + 1 - c..kv + j + 1 - c + km];
                for (x, l) in target.iter_mut().zip(lcol) {
                    *x -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(L - shift) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let kv = kl + ku;
        if kl > 0 {
            for j in 0..n.saturating_sub(1) {
                let km = kl.min(n - 1 - j);
                let l = self.piv[j];
                if l != j {
                    b.swap(l, j);
                }
                let bj = b[j];
                if bj != ZERO {
                    let col = ldab * j;
                    for t in 1..=km {
                        b[j + t] -= self.ab[col + kv + t] * bj;
                    }
                }
            }
        }
        for j in (0..n).rev() {
            let col = ldab * j;
            b[j] /= self.ab[col + kv];
            let bj = b[j];
            if bj != ZERO {
                let start = j.saturating_sub(kv);
                for i in start..j {
                    b[i] -= self.ab[col + kv + i - j] * bj;
                }
            }
        }
        Ok(())
    }

    /// Smallest pivot magnitude of `U`, a cheap singularity indicator.
    pub fn min_pivot(&self) -> f64 {
        let kv = self.kl + self.ku;
        (0..self.n)
            .map(|j| self.ab[self.ldab * j + kv].norm())
            .fold(f64::INFINITY, f64::min)
    }
}
