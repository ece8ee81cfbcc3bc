//! Number statistics, phase distribution and Wigner function of a density matrix.
//!
//! The phase `phi` is the variable conjugate to the counting field, so that
//! `<a> ~ sqrt(n) e^{-i phi}`; the phase density is
//! `P(phi) = sum_l P_l e^{i l phi}` with `P_l = sum_n rho_{n+l,n}`.

use std::f64::consts::{FRAC_2_PI, PI, TAU};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::steady::DensityMatrix;

/// `(P_n, nbar, variance)`.
pub fn fock_stats(rho: &DensityMatrix) -> (Vec<f64>, f64, f64) {
    let p = rho.populations();
    let mut n1 = 0.0;
    let mut n2 = 0.0;
    for (n, &pn) in p.iter().enumerate() {
        let n = n as f64;
        n1 += n * pn;
        n2 += n * n * pn;
    }
    (p, n1, n2 - n1 * n1)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDistribution {
    /// `P_l` for `l = 0..=L`; negative orders are the conjugates.
    pub coefficients: Vec<C64>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    /// `P_l` for any integer `l`.
    pub fn coefficient(&self, l: i64) -> C64 {
        let k = l.unsigned_abs() as usize;
        let c = self.coefficients.get(k).copied().unwrap_or(C64::new(0.0, 0.0));
        if l < 0 {
            c.conj()
        } else {
            c
        }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        eval_phase(&self.coefficients, phi)
    }
}

fn eval_phase(coeffs: &[C64], phi: f64) -> f64 {
    let mut s = coeffs[0].re;
    for (l, c) in coeffs.iter().enumerate().skip(1) {
        s += 2.0 * (c * C64::from_polar(1.0, l as f64 * phi)).re;
    }
    s
}

/// `P_l = sum_n rho_{n+l,n}` for `l = 0..M-1`.
pub fn phase_coefficients(rho: &DensityMatrix) -> Vec<C64> {
    let m = rho.dim();
    (0..m)
        .map(|l| (0..m - l).map(|n| rho.get(n + l, n)).sum())
        .collect()
}

/// Phase density on `K` uniform points of `[-pi, pi)`.
pub fn phase_distribution(rho: &DensityMatrix, k: usize) -> Result<PhaseDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("phase grid must be non-empty".into()));
    }
    let coefficients = phase_coefficients(rho);
    let grid: Vec<f64> = (0..k).map(|i| -PI + TAU * i as f64 / k as f64).collect();
    let values = grid.iter().map(|&p| eval_phase(&coefficients, p)).collect();
    Ok(PhaseDistribution {
        coefficients,
        grid,
        values,
    })
}

/// Location and value of the maximum of `P(phi)`.
pub fn phase_maximum(rho: &DensityMatrix) -> (f64, f64) {
    let coeffs = phase_coefficients(rho);
    let k = (8 * rho.dim()).max(256);
    let h = TAU / k as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..k {
        let phi = -PI + h * i as f64;
        let v = eval_phase(&coeffs, phi);
        if v > best.1 {
            best = (phi, v);
        }
    }
    // golden-section refinement inside the neighbouring cells
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval_phase(&coeffs, c);
    let mut fd = eval_phase(&coeffs, d);
    while (b - a).abs() > 1e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval_phase(&coeffs, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval_phase(&coeffs, d);
        }
    }
    let phi = 0.5 * (a + b);
    let v = eval_phase(&coeffs, phi);
    let (phi, v) = if v >= best.1 { (phi, v) } else { best };
    (phi.rem_euclid(TAU) - if phi.rem_euclid(TAU) >= PI { TAU } else { 0.0 }, v)
}

/// `max_phi P(phi)`, refined to well below `1e-4`.
pub fn max_phase_density(rho: &DensityMatrix) -> f64 {
    phase_maximum(rho).1
}

/// Axes of a phase-space grid in the complex `alpha` plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl WignerGrid {
    /// `n x n` square grid on `[-r, r]^2`.
    pub fn square(radius: f64, n: usize) -> Result<Self> {
        if n < 2 || !(radius > 0.0) {
            return Err(Error::InvalidParameter("Wigner grid needs n >= 2 and radius > 0".into()));
        }
        let axis: Vec<f64> = (0..n)
            .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            re: axis.clone(),
            im: axis,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerField {
    pub grid: WignerGrid,
    /// `values[i][j] = W(re[i] + i im[j])`.
    pub values: Vec<Vec<f64>>,
}

impl WignerField {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann sum of `W` over the grid (uniform spacing assumed).
    pub fn integral(&self) -> f64 {
        let dx = spacing(&self.grid.re);
        let dy = spacing(&self.grid.im);
        self.values.iter().flatten().sum::<f64>() * dx * dy
    }
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        0.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Wigner function at one point, `W_vacuum(0) = 2/pi`.
pub fn wigner_point(rho: &DensityMatrix, alpha: C64) -> f64 {
    let m = rho.dim();
    let x = 4.0 * alpha.norm_sqr();
    let rot = if alpha.norm() > 0.0 {
        alpha / alpha.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut ell = vec![0.0; m];
    let mut total = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for d in 0..m {
        if d > 0 {
            phase *= rot;
        }
        let len = m - d;
        let df = d as f64;
        // normalized Laguerre functions sqrt(n!/(n+d)!) x^{d/2} e^{-x/2} L_n^{(d)}(x)
        ell[0] = if d == 0 {
            (-0.5 * x).exp()
        } else if x == 0.0 {
            0.0
        } else {
            (0.5 * df * x.ln() - 0.5 * x - 0.5 * ln_factorial(d)).exp()
        };
        if len > 1 {
            ell[1] = (1.0 + df - x) * ell[0] / (1.0 + df).sqrt();
        }
        for n in 1..len.saturating_sub(1) {
            let nf = n as f64;
            let a = (2.0 * nf + df + 1.0 - x) * ((nf + 1.0) / (nf + df + 1.0)).sqrt();
            let b = (nf + df) * ((nf + 1.0) * nf / ((nf + df + 1.0) * (nf + df))).sqrt();
            ell[n + 1] = (a * ell[n] - b * ell[n - 1]) / (nf + 1.0);
        }
        let mut s = C64::new(0.0, 0.0);
        for n in 0..len {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            s += rho.get(n + d, n) * (sign * ell[n]);
        }
        if d == 0 {
            total += s.re;
        } else {
            total += 2.0 * (s * phase.conj()).re;
        }
    }
    FRAC_2_PI * total
}

/// Wigner function on a grid (rows in parallel).
pub fn wigner(rho: &DensityMatrix, grid: &WignerGrid) -> WignerField {
    let values = grid
        .re
        .par_iter()
        .map(|&x| {
            grid.im
                .iter()
                .map(|&p| wigner_point(rho, C64::new(x, p)))
                .collect()
        })
        .collect();
    WignerField {
        grid: grid.clone(),
        values,
    }
}

/// `<x|rho|x>` for the quadrature `X = (a + a†)/2`.
pub fn quadrature_density(rho: &DensityMatrix, x: f64) -> f64 {
    let m = rho.dim();
    let y = 2f64.sqrt() * x;
    let mut psi = vec![0.0; m];
    psi[0] = 2f64.powf(0.25) * PI.powf(-0.25) * (-0.5 * y * y).exp();
    if m > 1 {
        psi[1] = 2f64.sqrt() * y * psi[0];
    }
    for n in 1..m.saturating_sub(1) {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    let mut s = C64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            s += rho.get(i, j) * (psi[i] * psi[j]);
        }
    }
    s.re
}

/// Reduced state of the first factor of a composite `M_a x M_b` space.
pub fn partial_trace_b(rho: &DensityMatrix, ma: usize, mb: usize) -> Result<DensityMatrix> {
    if ma * mb != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: ma * mb,
            found: rho.dim(),
        });
    }
    let mut out = DMatrix::zeros(ma, ma);
    for i in 0..ma {
        for j in 0..ma {
            out[(i, j)] = (0..mb).map(|k| rho.get(i * mb + k, j * mb + k)).sum();
        }
    }
    DensityMatrix::from_matrix(out)
}

/// `1/2 sum |p - q|`, padding the shorter distribution with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
