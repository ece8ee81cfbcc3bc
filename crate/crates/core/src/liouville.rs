//! Superoperators on column-stacked density matrices (`vec(rho)[i + M j] = rho[i, j]`).
//!
//! The counting field enters symmetrically: operators acting from the left are
//! deformed with shift `q/2`, operators acting from the right with `-q/2`.
//! In that form the map `rho -> rho†` carries `L(q)` into `L(-q)`, which keeps
//! `lambda0(-q) = conj(lambda0(q))` exact in a truncated basis.

use std::ops::Range;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fock::{self, FockSpace, Operator, C64};
use crate::params::ModelParams;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Sparse (CSR) superoperator.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    op_dim: usize,
    q: f64,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SuperOperator {
    /// Operator-space dimension `M`; the superoperator is `M^2 x M^2`.
    pub fn op_dim(&self) -> usize {
        self.op_dim
    }

    pub fn dim(&self) -> usize {
        self.op_dim * self.op_dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let Range { start, end } = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[start..end]
            .iter()
            .copied()
            .zip(self.vals[start..end].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(j, _)| j == c).map_or(ZERO, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `unvec(L vec(rho))`.
    pub fn apply(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if rho.nrows() != self.op_dim || rho.ncols() != self.op_dim {
            return Err(Error::DimensionMismatch {
                expected: self.op_dim,
                found: rho.nrows(),
            });
        }
        let y = self.matvec(rho.as_slice());
        Ok(DMatrix::from_vec(self.op_dim, self.op_dim, y))
    }

    /// Row vector `w^T L`.
    pub fn left_apply(&self, w: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim()];
        for (r, &wr) in w.iter().enumerate().take(self.dim()) {
            if wr != ZERO {
                for (c, v) in self.row(r) {
                    out[c] += wr * v;
                }
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut cols = vec![0.0; self.dim()];
        for (c, v) in self.col_idx.iter().zip(&self.vals) {
            cols[*c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// Lower and upper bandwidth of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.dim() {
            for (c, _) in self.row(r) {
                if r > c {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v = v.conj();
        }
        out
    }

    /// Iterate all stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn add(&self, other: &SuperOperator) -> Result<Self> {
        if self.op_dim != other.op_dim {
            return Err(Error::DimensionMismatch {
                expected: self.op_dim,
                found: other.op_dim,
            });
        }
        let mut b = SuperBuilder::new(self.op_dim, self.q);
        b.triplets.extend(self.entries());
        b.triplets.extend(other.entries());
        Ok(b.finish())
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out
    }
}

/// Column-stacked vectorization.
pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &[C64], m: usize) -> Result<DMatrix<C64>> {
    if v.len() != m * m {
        return Err(Error::DimensionMismatch {
            expected: m * m,
            found: v.len(),
        });
    }
    Ok(DMatrix::from_column_slice(m, m, v))
}

/// Triplet accumulator for superoperators.
#[derive(Debug, Clone)]
pub struct SuperBuilder {
    op_dim: usize,
    q: f64,
    triplets: Vec<(usize, usize, C64)>,
}

impl SuperBuilder {
    pub fn new(op_dim: usize, q: f64) -> Self {
        Self {
            op_dim,
            q,
            triplets: Vec::new(),
        }
    }

    /// Adds `coef * A rho B`.
    pub fn sandwich(&mut self, a: &DMatrix<C64>, b: &DMatrix<C64>, coef: C64) -> Result<&mut Self> {
        let m = self.op_dim;
        for mat in [a, b] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: mat.nrows(),
                });
            }
        }
        let nz = |mat: &DMatrix<C64>| {
            let mut v = Vec::new();
            for c in 0..m {
                for r in 0..m {
                    let x = mat[(r, c)];
                    if x != ZERO {
                        v.push((r, c, x));
                    }
                }
            }
            v
        };
        let a_nz = nz(a);
        let b_nz = nz(b);
        for &(i, k, av) in &a_nz {
            for &(l, j, bv) in &b_nz {
                self.triplets.push((i + m * j, k + m * l, coef * av * bv));
            }
        }
        Ok(self)
    }

    pub fn left(&mut self, a: &DMatrix<C64>, coef: C64) -> Result<&mut Self> {
        let id = DMatrix::identity(self.op_dim, self.op_dim);
        self.sandwich(a, &id, coef)
    }

    pub fn right(&mut self, b: &DMatrix<C64>, coef: C64) -> Result<&mut Self> {
        let id = DMatrix::identity(self.op_dim, self.op_dim);
        self.sandwich(&id, b, coef)
    }

    pub fn finish(mut self) -> SuperOperator {
        let n = self.op_dim * self.op_dim;
        self.triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(self.triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(self.triplets.len());
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("merged entry exists") += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SuperOperator {
            op_dim: self.op_dim,
            q: self.q,
            row_ptr,
            col_idx: keep_cols,
            vals: keep_vals,
        }
    }
}

/// `rho -> A rho`.
pub fn left_mul(op: &Operator) -> SuperOperator {
    let mut b = SuperBuilder::new(op.dim(), 0.0);
    b.left(op.matrix(), ONE).expect("square operator");
    b.finish()
}

/// `rho -> rho A`.
pub fn right_mul(op: &Operator) -> SuperOperator {
    let mut b = SuperBuilder::new(op.dim(), 0.0);
    b.right(op.matrix(), ONE).expect("square operator");
    b.finish()
}

fn add_dissipator<F>(b: &mut SuperBuilder, jump: &F, q: f64, rate: f64) -> Result<()>
where
    F: Fn(f64) -> Result<Operator>,
{
    let jl = jump(0.5 * q)?.into_matrix();
    let jr = jump(-0.5 * q)?.into_matrix();
    let r = C64::new(rate, 0.0);
    let jr_dag = jr.adjoint();
    b.sandwich(&jl, &jr_dag, r)?;
    b.left(&(jl.adjoint() * &jl), -0.5 * r)?;
    b.right(&(&jr_dag * &jr), -0.5 * r)?;
    Ok(())
}

fn add_hamiltonian<F>(b: &mut SuperBuilder, ham: &F, q: f64) -> Result<()>
where
    F: Fn(f64) -> Result<Operator>,
{
    let hl = ham(0.5 * q)?.into_matrix();
    let hr = ham(-0.5 * q)?.into_matrix();
    b.left(&hl, C64::new(0.0, -1.0))?;
    b.right(&hr, C64::new(0.0, 1.0))?;
    Ok(())
}

/// Counting-field deformed dissipator `D_q[L]`. `jump(s)` must return the
/// jump operator deformed by shift `s`; at `q = 0` this is the usual GKSL form.
pub fn dissipator<F>(jump: F, q: f64) -> Result<SuperOperator>
where
    F: Fn(f64) -> Result<Operator>,
{
    let m = jump(0.0)?.dim();
    let mut b = SuperBuilder::new(m, q);
    add_dissipator(&mut b, &jump, q, 1.0)?;
    Ok(b.finish())
}

/// Deformed commutator part `-i (H(q/2) rho - rho H(-q/2))`.
pub fn hamiltonian<F>(ham: F, q: f64) -> Result<SuperOperator>
where
    F: Fn(f64) -> Result<Operator>,
{
    let m = ham(0.0)?.dim();
    let mut b = SuperBuilder::new(m, q);
    add_hamiltonian(&mut b, &ham, q)?;
    Ok(b.finish())
}

/// Drive Hamiltonian `Delta (n - s) + i f (a†(s) e^{-i theta} - a(s) e^{i theta})`.
pub fn drive_hamiltonian(params: &ModelParams, space: FockSpace, s: f64) -> Result<Operator> {
    let a = fock::destroy(space, s)?;
    let ad = a.transpose();
    let n = fock::number(space, s)?;
    let e = C64::from_polar(1.0, params.theta);
    let i_f = C64::new(0.0, params.f);
    let drive = ad.scale(i_f * e.conj()).add(&a.scale(-i_f * e))?;
    n.scale(C64::new(params.delta, 0.0)).add(&drive)
}

/// `M = n0 + max(12, ceil(6 sqrt(n0)))`.
pub fn recommended_truncation(n0: usize) -> usize {
    let extra = (6.0 * (n0 as f64).sqrt()).ceil() as usize;
    n0 + extra.max(12)
}

/// Effective single-mode generator with gain, loss, detuning and drive.
pub fn liouvillian_single(params: &ModelParams, q: f64, space: FockSpace) -> Result<SuperOperator> {
    params.validate()?;
    if !(q.abs() <= 0.5) {
        return Err(Error::Domain(format!("counting field |q| must be <= 0.5, got {q}")));
    }
    if let Some(n0) = params.n0 {
        if params.epsilon > 0.0 && recommended_truncation(n0) > space.dim() {
            warn!(
                "truncation M = {} is below the recommended {} for n0 = {}",
                space.dim(),
                recommended_truncation(n0),
                n0
            );
        }
    }
    let mut b = SuperBuilder::new(space.dim(), q);
    add_dissipator(&mut b, &|s| fock::destroy(space, s), q, params.gamma_a)?;
    if params.epsilon > 0.0 {
        add_dissipator(
            &mut b,
            &|s| fock::gain_jump(space, params.alpha_a, s),
            q,
            params.epsilon,
        )?;
    }
    if params.f != 0.0 || params.delta != 0.0 {
        add_hamiltonian(&mut b, &|s| drive_hamiltonian(params, space, s), q)?;
    }
    Ok(b.finish())
}

/// Default cap on `M_a * M_b` for the two-mode model.
pub const TWO_MODE_CAP: usize = 400;

/// Two-mode generator with the Josephson-type exchange Hamiltonian
/// `E (a† F_a b† F_b + h.c.)` and losses on both modes. Composite index is
/// `i_a * M_b + i_b`.
pub fn liouvillian_two_mode(
    params: &ModelParams,
    spaces: (FockSpace, FockSpace),
    cap: usize,
) -> Result<SuperOperator> {
    params.validate()?;
    let (sa, sb) = spaces;
    let dim = sa.dim() * sb.dim();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let id_a: DMatrix<C64> = DMatrix::identity(sa.dim(), sa.dim());
    let id_b: DMatrix<C64> = DMatrix::identity(sb.dim(), sb.dim());
    let a = fock::destroy(sa, 0.0)?.into_matrix();
    let bm = fock::destroy(sb, 0.0)?.into_matrix();
    let ga = fock::gain_jump(sa, params.alpha_a, 0.0)?.into_matrix();
    let gb = fock::gain_jump(sb, params.alpha_b, 0.0)?.into_matrix();
    let g = ga.kronecker(&gb) * C64::new(params.e_tilde, 0.0);
    let h = &g + g.adjoint();
    let comp = FockSpace::new(dim)?;
    let ham = Operator::new(comp, h)?;
    let la = Operator::new(comp, a.kronecker(&id_b))?;
    let lb = Operator::new(comp, id_a.kronecker(&bm))?;
    let mut b = SuperBuilder::new(dim, 0.0);
    add_hamiltonian(&mut b, &|_| Ok(ham.clone()), 0.0)?;
    add_dissipator(&mut b, &|_| Ok(la.clone()), 0.0, params.gamma_a)?;
    add_dissipator(&mut b, &|_| Ok(lb.clone()), 0.0, params.gamma_b)?;
    Ok(b.finish())
}

/// Vectorized identity, the trace functional `Tr rho = w^T vec(rho)`.
pub fn trace_functional(m: usize) -> Vec<C64> {
    let mut w = vec![ZERO; m * m];
    for i in 0..m {
        w[i + m * i] = ONE;
    }
    w
}
