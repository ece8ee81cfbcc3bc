//! Stationary states and the eigenvalue `lambda0(q)` connected to them.
//!
//! Both come from shift-invert inverse iteration on a banded LU of
//! `L - sigma`, seeded with the trace functional (or the previous eigenvector
//! when following `lambda0` along `q`).

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::band::BandLu;
use crate::error::{Error, Result};
use crate::fock::{FockSpace, C64};
use crate::liouville::{self, liouvillian_single, recommended_truncation, trace_functional, SuperOperator};
use crate::params::ModelParams;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

/// Eigenvalues of `rho` down to this are treated as roundoff and clipped.
pub const POSITIVITY_SLACK: f64 = 1e-9;

impl DensityMatrix {
    /// Hermitizes, normalizes and repairs roundoff-level negative eigenvalues.
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let mut h = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        if !(tr.abs() > 0.0) || !tr.is_finite() {
            return Err(Error::Unphysical(format!("trace {tr} cannot be normalized")));
        }
        h /= C64::new(tr, 0.0);
        let eig = SymmetricEigen::new(h.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_SLACK {
            return Err(Error::Unphysical(format!("eigenvalue {min:e} below -{POSITIVITY_SLACK:e}")));
        }
        if min < 0.0 {
            let clipped = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
            let v = &eig.eigenvectors;
            let mut r = v * DMatrix::from_diagonal(&clipped) * v.adjoint();
            r = (&r + r.adjoint()) * C64::new(0.5, 0.0);
            let tr = r.trace().re;
            r /= C64::new(tr, 0.0);
            h = r;
        }
        Ok(Self { mat: h })
    }

    pub fn fock(space: FockSpace, n: usize) -> Result<Self> {
        let v = crate::fock::basis(space, n)?;
        Self::from_matrix(&v * v.adjoint())
    }

    /// Truncated coherent state `|alpha>`, renormalized inside the space.
    pub fn coherent(space: FockSpace, alpha: C64) -> Result<Self> {
        let m = space.dim();
        let mut v = nalgebra::DVector::zeros(m);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..m {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            v[n] = c;
        }
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.mat.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest modulus among entries with `i != j`.
    pub fn max_offdiagonal(&self) -> f64 {
        let m = self.dim();
        let mut best: f64 = 0.0;
        for j in 0..m {
            for i in 0..m {
                if i != j {
                    best = best.max(self.mat[(i, j)].norm());
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub max_iter: usize,
    /// Shift offset relative to `1 + ||L||`.
    pub shift_offset: f64,
    /// Stop once successive estimates differ by less than `tol * ||L||`.
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            max_iter: 60,
            shift_offset: 1e-9,
            tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: C64,
    /// Unit-norm right eigenvector, phased so its trace is real and positive.
    pub vector: Vec<C64>,
    pub residual: f64,
    pub iterations: usize,
    /// Contraction of the first two iteration steps; near 1 means a nearby eigenvalue.
    pub convergence_ratio: f64,
    pub norm: f64,
}

fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn phase_normalize(x: &mut [C64], w: &[C64]) {
    let n = vnorm(x);
    let t: C64 = w.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let phase = if t.norm() > 1e-8 * n {
        t / t.norm()
    } else {
        let big = x
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        big / big.norm()
    };
    let s = phase.conj() / n;
    for v in x.iter_mut() {
        *v *= s;
    }
}

/// Eigenpair of `l` nearest `guess` by shift-invert inverse iteration.
pub fn leading_eigenpair(
    l: &SuperOperator,
    guess: C64,
    start: Option<&[C64]>,
    opts: &EigenOptions,
) -> Result<Eigenpair> {
    let n = l.dim();
    let norm = l.norm1();
    let w = trace_functional(l.op_dim());
    let sigma = guess + C64::new(opts.shift_offset * (1.0 + norm), 0.0);
    let lu = BandLu::factor(l, sigma, f64::EPSILON * (1.0 + norm))?;
    let mut x: Vec<C64> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.len(),
            })
        }
        None => w.clone(),
    };
    phase_normalize(&mut x, &w);
    let mut lambda = guess;
    let mut steps = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for k in 0..opts.max_iter {
        iterations = k + 1;
        let mut y = x.clone();
        lu.solve_in_place(&mut y)?;
        let yy = dot(&y, &y).re;
        if !(yy > 0.0) || !yy.is_finite() {
            return Err(Error::Singular("inverse iteration produced a degenerate vector".into()));
        }
        let est = sigma + dot(&y, &x) / yy;
        phase_normalize(&mut y, &w);
        let step: f64 = vnorm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        steps.push(step);
        x = y;
        let change = (est - lambda).norm();
        lambda = est;
        if k >= 2 && change <= opts.tol * (1.0 + norm) {
            converged = true;
            break;
        }
    }
    let lx = l.matvec(&x);
    let rq = dot(&x, &lx);
    let res_rq = vnorm(&lx.iter().zip(&x).map(|(a, b)| a - rq * b).collect::<Vec<_>>());
    let res_si = vnorm(&lx.iter().zip(&x).map(|(a, b)| a - lambda * b).collect::<Vec<_>>());
    let (value, residual) = if res_rq <= res_si { (rq, res_rq) } else { (lambda, res_si) };
    let convergence_ratio = if steps.len() >= 2 && steps[0] > 1e-10 {
        steps[1] / steps[0]
    } else {
        0.0
    };
    if !converged && residual > 1e-8 * (1.0 + norm) {
        return Err(Error::EigenNonConvergence {
            iterations,
            residual,
        });
    }
    debug!("eigenpair {value:e} residual {residual:e} after {iterations} iterations");
    Ok(Eigenpair {
        value,
        vector: x,
        residual,
        iterations,
        convergence_ratio,
        norm,
    })
}

const TRACK_BLOCK: usize = 4;

fn orthonormalize(block: &mut Vec<Vec<C64>>) {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(block.len());
    for mut v in block.drain(..) {
        // two passes of Gram-Schmidt keep the basis orthogonal to roundoff
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= c * b;
                }
            }
        }
        let n = vnorm(&v);
        if n > 1e-13 {
            v.iter_mut().for_each(|a| *a /= n);
            out.push(v);
        }
    }
    *block = out;
}

/// Ritz pairs of `l` on the orthonormal `basis`, vectors in full coordinates.
fn ritz_pairs(l: &SuperOperator, basis: &[Vec<C64>]) -> Vec<(C64, Vec<C64>)> {
    let k = basis.len();
    let images: Vec<Vec<C64>> = basis.iter().map(|q| l.matvec(q)).collect();
    let h = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &images[j]));
    let (z, t) = nalgebra::Schur::new(h).unpack();
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (0..k)
        .map(|i| {
            let mu = t[(i, i)];
            let mut y = vec![ZERO; k];
            y[i] = C64::new(1.0, 0.0);
            for j in (0..i).rev() {
                let s: C64 = (j + 1..=i).map(|c| t[(j, c)] * y[c]).sum();
                let mut d = t[(j, j)] - mu;
                if d.norm() < f64::EPSILON * scale {
                    d = C64::new(f64::EPSILON * scale, 0.0);
                }
                y[j] = -s / d;
            }
            let zy: Vec<C64> = (0..k).map(|r| (0..k).map(|c| z[(r, c)] * y[c]).sum()).collect();
            let mut v = vec![ZERO; l.dim()];
            for (q, c) in basis.iter().zip(&zy) {
                for (a, b) in v.iter_mut().zip(q) {
                    *a += c * b;
                }
            }
            let n = vnorm(&v);
            v.iter_mut().for_each(|a| *a /= n);
            (mu, v)
        })
        .collect()
}

/// Eigenpair of `l` continuing `reference`: among the few eigenvalues nearest
/// `guess`, the one whose eigenvector overlaps `reference` most.
///
/// Plain inverse iteration locks onto whichever eigenvalue is nearest the
/// shift, which need not be the branch being followed when a slow mode of
/// another sector sits close by. Subspace iteration on a small block picks the
/// branch by overlap, and a final shift-invert pass at the selected Ritz value
/// polishes it.
pub fn tracked_eigenpair(l: &SuperOperator, guess: C64, reference: &[C64], opts: &EigenOptions) -> Result<Eigenpair> {
    let n = l.dim();
    if reference.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: reference.len(),
        });
    }
    let norm = l.norm1();
    let sigma = guess + C64::new(opts.shift_offset * (1.0 + norm), 0.0);
    let lu = BandLu::factor(l, sigma, f64::EPSILON * (1.0 + norm))?;
    let mut block = vec![reference.to_vec()];
    let mut v = reference.to_vec();
    for _ in 1..TRACK_BLOCK {
        v = l.matvec(&v);
        block.push(v.clone());
    }
    orthonormalize(&mut block);
    let select = |basis: &[Vec<C64>]| -> Option<(C64, Vec<C64>)> {
        ritz_pairs(l, basis)
            .into_iter()
            .max_by(|a, b| dot(reference, &a.1).norm().total_cmp(&dot(reference, &b.1).norm()))
    };
    let mut best = select(&block);
    for _ in 0..opts.max_iter {
        for col in block.iter_mut() {
            lu.solve_in_place(col)?;
        }
        orthonormalize(&mut block);
        if block.is_empty() {
            return Err(Error::Singular("subspace iteration collapsed".into()));
        }
        let next = select(&block);
        let done = match (&best, &next) {
            (Some(a), Some(b)) => (a.0 - b.0).norm() <= 1e-12 * (1.0 + norm),
            _ => false,
        };
        best = next;
        if done {
            break;
        }
    }
    let (value, vector) = best.ok_or_else(|| Error::Singular("no Ritz pair".into()))?;
    let polish = EigenOptions {
        shift_offset: 0.0,
        ..*opts
    };
    // the Ritz value itself is the shift, nudged off the exact eigenvalue
    let nudge = C64::new(opts.shift_offset * (1.0 + norm) * 1e-3, 0.0);
    leading_eigenpair(l, value + nudge, Some(&vector), &polish)
}

/// Eigenvalue nearest `guess` with its right-eigenvector residual.
pub fn leading_eigenvalue(l: &SuperOperator, guess: C64) -> Result<(C64, f64)> {
    let p = leading_eigenpair(l, guess, None, &EigenOptions::default())?;
    Ok((p.value, p.residual))
}

fn density_from_vector(x: &[C64], m: usize) -> Result<DensityMatrix> {
    DensityMatrix::from_matrix(liouville::unvectorize(x, m)?)
}

/// Steady state of a `q = 0` generator.
pub fn steady_state(l: &SuperOperator) -> Result<DensityMatrix> {
    let p = leading_eigenpair(l, ZERO, None, &EigenOptions::default())?;
    check_stationary(l, &p)?;
    let rho = density_from_vector(&p.vector, l.op_dim())?;
    let res = residual_of(l, &rho);
    if res > 1e-10 * (1.0 + p.norm) {
        return Err(Error::EigenNonConvergence {
            iterations: p.iterations,
            residual: res,
        });
    }
    Ok(rho)
}

fn check_stationary(l: &SuperOperator, p: &Eigenpair) -> Result<()> {
    if l.q() != 0.0 {
        return Err(Error::Domain("steady state requires a q = 0 generator".into()));
    }
    if p.convergence_ratio > 0.5 {
        return Err(Error::Singular(format!(
            "stationary eigenvalue is nearly degenerate (contraction {:.3}); \
             break the symmetry or use a different solver",
            p.convergence_ratio
        )));
    }
    Ok(())
}

/// `||L vec(rho)||_2`.
pub fn residual_of(l: &SuperOperator, rho: &DensityMatrix) -> f64 {
    vnorm(&l.matvec(rho.matrix().as_slice()))
}

/// Adaptive Fock-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Starting dimension; derived from the parameters when absent.
    pub initial: Option<usize>,
    /// Largest admissible population of the top level.
    pub tol: f64,
    pub max_dim: usize,
    pub auto_grow: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            initial: None,
            tol: 1e-8,
            max_dim: 200,
            auto_grow: true,
        }
    }
}

impl TruncationPolicy {
    pub fn fixed(dim: usize) -> Self {
        Self {
            initial: Some(dim),
            auto_grow: false,
            ..Self::default()
        }
    }
}

/// Starting truncation for a parameter set.
pub fn initial_dimension(params: &ModelParams) -> usize {
    let nf = params.drive_photons();
    let mut m = if params.epsilon > 0.0 {
        let n0 = params.target_level();
        let mut m = recommended_truncation(n0);
        if params.f > 0.0 {
            let total = n0 as f64 + nf;
            m = m.max((total + 6.0 * total.sqrt()).ceil() as usize + 12);
        }
        m
    } else {
        (nf + 8.0 * nf.sqrt()).ceil() as usize + 12
    };
    m = m.max(4);
    m
}

#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub space: FockSpace,
    pub rho: DensityMatrix,
    pub top_population: f64,
    pub residual: f64,
    pub norm: f64,
    /// Raw eigenvector used for continuation in `q`.
    pub vector: Vec<C64>,
}

/// Steady state of the single-mode model, growing `M` until the top level is empty enough.
pub fn steady_model(params: &ModelParams, policy: &TruncationPolicy) -> Result<SteadySolution> {
    let mut m = policy.initial.unwrap_or_else(|| initial_dimension(params)).max(2);
    loop {
        let space = FockSpace::new(m)?;
        let l = liouvillian_single(params, 0.0, space)?;
        let p = leading_eigenpair(&l, ZERO, None, &EigenOptions::default())?;
        check_stationary(&l, &p)?;
        let rho = density_from_vector(&p.vector, m)?;
        let residual = residual_of(&l, &rho);
        let top = rho.get(m - 1, m - 1).re;
        if residual > 1e-10 * (1.0 + p.norm) {
            return Err(Error::EigenNonConvergence {
                iterations: p.iterations,
                residual,
            });
        }
        if top <= policy.tol {
            return Ok(SteadySolution {
                space,
                rho,
                top_population: top,
                residual,
                norm: p.norm,
                vector: p.vector,
            });
        }
        if !policy.auto_grow || m >= policy.max_dim {
            return Err(Error::Truncation { dim: m, population: top });
        }
        let next = ((1.3 * m as f64).ceil() as usize + 4).min(policy.max_dim);
        debug!("growing truncation {m} -> {next} (top population {top:e})");
        m = next;
    }
}

/// Reliability marks attached to an eigenvalue or a cumulant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Quality {
    /// Magnitude below `1e-12 ||L||`.
    pub below_trust_floor: bool,
    /// Magnitude below `1e3 * eps * ||L||`.
    pub near_roundoff: bool,
    pub branch_crossing: bool,
    pub slow_convergence: bool,
    pub truncation: bool,
}

pub const TRUST_FLOOR: f64 = 1e-12;

impl Quality {
    pub fn is_ok(&self) -> bool {
        *self == Self::default()
    }

    pub fn merge(self, other: Quality) -> Quality {
        Quality {
            below_trust_floor: self.below_trust_floor || other.below_trust_floor,
            near_roundoff: self.near_roundoff || other.near_roundoff,
            branch_crossing: self.branch_crossing || other.branch_crossing,
            slow_convergence: self.slow_convergence || other.slow_convergence,
            truncation: self.truncation || other.truncation,
        }
    }

    /// Classifies a magnitude against the precision floors of `||L||`.
    pub fn of_magnitude(value: f64, norm: f64) -> Quality {
        Quality {
            below_trust_floor: value.abs() < TRUST_FLOOR * norm,
            near_roundoff: value.abs() < 1e3 * f64::EPSILON * norm,
            ..Quality::default()
        }
    }

    /// `ok`, or the raised marks joined by `|`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.below_trust_floor {
            parts.push("below_floor");
        }
        if self.near_roundoff {
            parts.push("roundoff");
        }
        if self.branch_crossing {
            parts.push("branch_crossing");
        }
        if self.slow_convergence {
            parts.push("slow_convergence");
        }
        if self.truncation {
            parts.push("truncation");
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("|")
        }
    }
}

/// `lambda0` along a list of counting fields.
#[derive(Debug, Clone, Serialize)]
pub struct EigenTrack {
    pub q_values: Vec<f64>,
    pub lambda0: Vec<C64>,
    pub residuals: Vec<f64>,
    pub quality: Vec<Quality>,
    /// `||L(0)||`, the scale of the precision floors.
    pub norm: f64,
    pub dim: usize,
    /// A side of the curve was cut short after a continuity failure.
    pub aborted: bool,
}

impl EigenTrack {
    pub fn value_at(&self, q: f64) -> Option<C64> {
        self.q_values
            .iter()
            .position(|&v| v == q)
            .map(|i| self.lambda0[i])
    }

    pub fn quality(&self) -> Quality {
        self.quality.iter().fold(Quality::default(), |a, b| a.merge(*b))
    }
}

/// Minimum overlap between consecutive eigenvectors along a branch.
pub const CONTINUITY_OVERLAP: f64 = 0.9;

/// Follows `lambda0(q)` from `q = 0` outward on both sides, seeding each solve
/// with the previous eigenpair. A side stops at the first continuity failure.
pub fn lambda0_curve(params: &ModelParams, q_list: &[f64], policy: &TruncationPolicy) -> Result<EigenTrack> {
    if !q_list.iter().any(|&q| q == 0.0) {
        return Err(Error::Domain("q list must contain 0".into()));
    }
    if q_list.iter().any(|q| !(q.abs() <= 0.5)) {
        return Err(Error::Domain("counting fields must satisfy |q| <= 0.5".into()));
    }
    let base = steady_model(params, policy)?;
    let space = base.space;
    let norm = base.norm;
    let l0 = liouvillian_single(params, 0.0, space)?;
    let lambda_zero = l0.matvec(&base.vector);
    let l0_value = dot(&base.vector, &lambda_zero);

    let mut pos: Vec<f64> = q_list.iter().copied().filter(|&q| q > 0.0).collect();
    let mut neg: Vec<f64> = q_list.iter().copied().filter(|&q| q < 0.0).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    neg.sort_by(|a, b| b.total_cmp(a));
    neg.dedup();

    let mut entries: Vec<(f64, C64, f64, Quality)> = vec![(
        0.0,
        l0_value,
        base.residual,
        Quality::default(),
    )];
    let mut aborted = false;
    for side in [pos, neg] {
        let mut prev_vec = base.vector.clone();
        let mut prev_val = l0_value;
        for q in side {
            let l = liouvillian_single(params, q, space)?;
            let p = tracked_eigenpair(&l, prev_val, &prev_vec, &EigenOptions::default())?;
            let overlap = dot(&prev_vec, &p.vector).norm();
            let mut quality = Quality::of_magnitude(p.value.norm(), norm);
            quality.slow_convergence = p.convergence_ratio > 0.5;
            if overlap < CONTINUITY_OVERLAP {
                quality.branch_crossing = true;
                entries.push((q, p.value, p.residual, quality));
                aborted = true;
                break;
            }
            entries.push((q, p.value, p.residual, quality));
            prev_vec = p.vector;
            prev_val = p.value;
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(EigenTrack {
        q_values: entries.iter().map(|e| e.0).collect(),
        lambda0: entries.iter().map(|e| e.1).collect(),
        residuals: entries.iter().map(|e| e.2).collect(),
        quality: entries.iter().map(|e| e.3).collect(),
        norm,
        dim: space.dim(),
        aborted,
    })
}
